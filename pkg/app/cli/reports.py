from app.cli import EXIT_OK
from app.config.logging import setup_logger
from app.services import report_service

logger = setup_logger(__name__)


def report_command(args) -> int:
    """Koşu dizinindeki sonuçlardan CSV, Markdown ve kutu grafiği dosyalarını üretir."""
    paths = report_service.report(args.run_dir, args.baseline)
    for kind, path in sorted(paths.items()):
        logger.info(f"{kind}: {path}")
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("report", help="Koşu dizininden raporlar")
    parser.add_argument("run_dir")
    parser.add_argument("--baseline", help="Karşılaştırma için temel strateji kimliği")
    parser.set_defaults(handler=report_command)
