from pathlib import Path
from typing import Optional

from app.cli import EXIT_OK
from app.config.logging import setup_logger
from app.models.experiment import SynthAugmentSpec, SynthSpec
from app.repository.dataset_repository import save_augmentations, save_dataset
from app.services.data_service import synth_augmentations, synth_blobs

logger = setup_logger(__name__)


class GenSynthSpec(SynthSpec):
    augment: Optional[SynthAugmentSpec] = None


def gen_synth_command(args) -> int:
    """Gauss kümelerinden JSONL veri kümesi (isteğe bağlı parafraz dosyasıyla) üretir."""
    spec = GenSynthSpec.parse_file(args.spec)
    ds = synth_blobs(
        spec.num_classes, spec.dim, spec.n_per_class, spec.center_scale,
        spec.noise_std, spec.label_flip_prob, spec.seed,
    )
    out = Path(args.output)
    save_dataset(ds, out)
    if spec.augment is not None:
        aug = synth_augmentations(ds, spec.augment.n, spec.augment.jitter_std, spec.seed)
        save_augmentations(aug, out.with_name(out.stem + ".aug.jsonl"))
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen-synth", help="Sentetik veri kümesi üretir")
    parser.add_argument("spec")
    parser.add_argument("-o", "--output", required=True)
    parser.set_defaults(handler=gen_synth_command)
