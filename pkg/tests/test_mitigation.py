import logging

import numpy as np
import pytest

from app.exceptions import ConfigurationError, PlanError
from app.models.classifier import ModelSpec, TuningMode
from app.models.plan import (
    Aggregate, FinalEnsemble, LambdaKind, PerturbSpawn, PhasePlan, PlanVariant, TrainParallel,
    TrainSingle,
)
from app.models.predictor import SingleModel, VotingEnsemble
from app.models.strategy import (
    AugmentNStrategy, BestPracticesStrategy, DEStrategy, DefaultStrategy, DeniConfig,
    DENIALSStrategy, DENIStrategy, EnsembleStrategy, MixoutStrategy, NIStrategy,
    NoiseInputStrategy, NoiseWeightsStrategy, SWAStrategy, parse_strategy,
)
from app.services import cost_service
from app.services.data_service import synth_augmentations
from app.services.mitigation_service import build_phase_plan, denials_params, run_strategy

DEFAULTS = DeniConfig()
SMALL = dict(steps_noisy=2, steps_regular=2, ensemble_size=3)


def test_deni_plan_at_default_budget():
    plan = build_phase_plan(DEFAULTS, 1250, PlanVariant.DENI)
    assert plan.event_steps() == (375, 500, 625, 750, 1125)
    assert plan.member_steps == 4625
    assert plan.cycles == 2
    assert plan.events[0] == TrainSingle(0, 375)
    assert plan.events[1] == PerturbSpawn(375, LambdaKind.STEPS)
    assert plan.events[2] == TrainParallel(375, 500, 10)
    assert plan.events[3] == Aggregate(500)
    assert TrainSingle(750, 1125) in plan.events
    assert plan.events[-3:] == (
        PerturbSpawn(1125, LambdaKind.ENSEMBLE), TrainParallel(1125, 1250, 10), FinalEnsemble(1250),
    )


def test_ni_plan_has_no_final_ensemble():
    plan = build_phase_plan(DEFAULTS, 1250, PlanVariant.NI)
    assert plan.member_steps == 3500
    # son döngünün düzenli evresi kuyruk evresiyle birleşir
    assert plan.events[-1] == TrainSingle(750, 1250)
    assert not any(isinstance(e, FinalEnsemble) for e in plan.events)


def test_de_plan():
    plan = build_phase_plan(DEFAULTS, 1250, PlanVariant.DE)
    assert plan.events == (
        TrainSingle(0, 1125),
        PerturbSpawn(1125, LambdaKind.ENSEMBLE),
        TrainParallel(1125, 1250, 10),
        FinalEnsemble(1250),
    )


def test_long_run_has_fifteen_cycles():
    plan = build_phase_plan(DEFAULTS, 12500, PlanVariant.DENI)
    assert plan.cycles == 15
    phases = [e for e in plan.events if isinstance(e, (TrainParallel, TrainSingle))]
    # 15 paralel + 15 tekli döngü evresi, baştaki ve sondaki evreler hariç
    assert len(phases) - 2 == 30


def test_window_too_small_without_rescaling():
    with pytest.raises(PlanError):
        build_phase_plan(DeniConfig(reference_steps=None), 100, PlanVariant.DENI)


def test_short_run_rescales_cycle_steps():
    # 5 örnek/sınıf, 4 sınıf: 3 adım/epok x 10 epok
    plan = build_phase_plan(DEFAULTS, 30, PlanVariant.DENI)
    assert plan.event_steps() == (9, 12, 15, 18, 27)
    assert plan.cycles == 2
    assert plan.events[2] == TrainParallel(9, 12, 10)
    assert plan.events[-2] == TrainParallel(27, 30, 10)


def test_rescaling_keeps_long_runs_absolute():
    assert DEFAULTS.rescaled_steps(1250) == (125, 125)
    assert DEFAULTS.rescaled_steps(30) == (3, 3)
    assert DEFAULTS.rescaled_steps(2) == (1, 1)
    # pencereye sığan eğitimde mutlak adımlar kullanılır
    assert build_phase_plan(DEFAULTS, 12500, PlanVariant.NI).cycles == 15


def test_rescaled_denials_doubles_deni_cycle():
    deni = build_phase_plan(DEFAULTS, 30, PlanVariant.DENI)
    denials = build_phase_plan(denials_params(DENIALSStrategy(n=1)), 60, PlanVariant.DENI)
    deni_parallel = [e for e in deni.events if isinstance(e, TrainParallel)][0]
    denials_parallel = [e for e in denials.events if isinstance(e, TrainParallel)][0]
    assert (denials_parallel.end - denials_parallel.start) == 2 * (deni_parallel.end - deni_parallel.start)


def test_plan_must_be_contiguous():
    with pytest.raises(PlanError):
        PhasePlan((TrainSingle(0, 5), TrainSingle(6, 10)), 10)
    with pytest.raises(PlanError):
        PhasePlan((TrainSingle(0, 5),), 10)


def test_fraction_order_is_validated():
    with pytest.raises(ValueError):
        DeniConfig(noise_start_frac=0.7, noise_end_frac=0.6)


def test_strategy_dict_shorthand():
    strategy = parse_strategy({"denials": {"n": 2}})
    assert isinstance(strategy, DENIALSStrategy)
    assert strategy.strategy_id == "denials"
    assert parse_strategy({"ensemble": {"size": 3}}).strategy_id == "ensemble-3"
    assert parse_strategy({"kind": "deni", "name": "deni-fast"}).strategy_id == "deni-fast"


@pytest.mark.parametrize("strategy", [
    DefaultStrategy(),
    BestPracticesStrategy(),
    EnsembleStrategy(size=2),
    NoiseInputStrategy(every=3),
    NoiseWeightsStrategy(every=3),
    SWAStrategy(),
    MixoutStrategy(),
    DEStrategy(**SMALL),
    NIStrategy(**SMALL),
    DENIStrategy(**SMALL),
])
def test_engine_steps_match_cost_model(strategy, spec, backbone, blobs, train_cfg):
    outcome = run_strategy(strategy, spec, backbone, blobs, train_cfg, seed=0)
    assert outcome.member_steps == cost_service.member_steps(strategy, train_cfg, len(blobs))


@pytest.mark.parametrize("strategy", [AugmentNStrategy(n=1), DENIALSStrategy(n=1, **SMALL)])
def test_augmented_steps_match_cost_model(strategy, spec, backbone, blobs, train_cfg):
    aug = synth_augmentations(blobs, 2, 0.05, seed=0)
    outcome = run_strategy(strategy, spec, backbone, blobs, train_cfg, seed=0, augmentations=aug)
    assert outcome.member_steps == cost_service.member_steps(strategy, train_cfg, len(blobs))


def test_small_deni_run(spec, backbone, blobs, train_cfg):
    outcome = run_strategy(DENIStrategy(**SMALL), spec, backbone, blobs, train_cfg, seed=0)
    assert outcome.total_steps == 16
    assert outcome.member_steps == 28
    assert isinstance(outcome.predictor, VotingEnsemble)
    assert len(outcome.predictor.members) == 3


def test_ni_returns_single_model(spec, backbone, blobs, train_cfg):
    outcome = run_strategy(NIStrategy(**SMALL), spec, backbone, blobs, train_cfg, seed=0)
    assert isinstance(outcome.predictor, SingleModel)
    assert outcome.member_steps == 24


def test_single_member_ensemble_equals_default(spec, backbone, blobs, train_cfg):
    default = run_strategy(DefaultStrategy(), spec, backbone, blobs, train_cfg, seed=4)
    ensemble = run_strategy(EnsembleStrategy(size=1), spec, backbone, blobs, train_cfg, seed=4)
    assert isinstance(ensemble.predictor, SingleModel)
    assert ensemble.predictor.params.bitwise_equal(default.predictor.params)


def test_zero_noise_keeps_members_identical(spec, backbone, blobs, train_cfg):
    # dropout yokken gürültüsüz kopyalar aynı yığınlarla aynı yolu izler
    strategy = DENIStrategy(var_noise=0.0, **SMALL)
    outcome = run_strategy(strategy, spec, backbone, blobs, train_cfg, seed=0)
    first, *rest = outcome.predictor.members
    assert all(first.bitwise_equal(other) for other in rest)


def test_noise_makes_members_differ(spec, backbone, blobs, train_cfg):
    outcome = run_strategy(DENIStrategy(**SMALL), spec, backbone, blobs, train_cfg, seed=0)
    first, second, _ = outcome.predictor.members
    assert not first.bitwise_equal(second)


def test_runs_are_deterministic(backbone, blobs, train_cfg):
    spec = ModelSpec(input_dim=6, hidden_dims=[8], num_classes=3, dropout_rate=0.3)
    a = run_strategy(DENIStrategy(**SMALL), spec, backbone, blobs, train_cfg, seed=7)
    b = run_strategy(DENIStrategy(**SMALL), spec, backbone, blobs, train_cfg, seed=7)
    c = run_strategy(DENIStrategy(**SMALL), spec, backbone, blobs, train_cfg, seed=8)
    assert all(x.bitwise_equal(y) for x, y in zip(a.predictor.members, b.predictor.members))
    assert not a.predictor.members[0].bitwise_equal(c.predictor.members[0])


def test_plan_error_for_short_training(spec, backbone, blobs, train_cfg):
    with pytest.raises(PlanError):
        run_strategy(DENIStrategy(reference_steps=None), spec, backbone, blobs, train_cfg, seed=0)


def test_default_deni_fits_short_training(spec, backbone, blobs, train_cfg):
    outcome = run_strategy(DENIStrategy(ensemble_size=3), spec, backbone, blobs, train_cfg, seed=0)
    assert outcome.total_steps == 16
    assert outcome.member_steps == cost_service.member_steps(DENIStrategy(ensemble_size=3), train_cfg, len(blobs))


def test_noise_free_interpolation_tracks_default(spec, backbone, blobs, train_cfg):
    # kopyalar optimizer momentlerini devraldığından gürültüsüz NI Default yolunu izler
    default = run_strategy(DefaultStrategy(), spec, backbone, blobs, train_cfg, seed=3)
    ni = run_strategy(NIStrategy(var_noise=0.0, **SMALL), spec, backbone, blobs, train_cfg, seed=3)
    for expected, got in zip(default.predictor.params, ni.predictor.params):
        np.testing.assert_allclose(got.tensor, expected.tensor, rtol=0, atol=1e-10)


def test_augmentation_strategies_need_augmentations(spec, backbone, blobs, train_cfg):
    with pytest.raises(ConfigurationError):
        run_strategy(AugmentNStrategy(n=1), spec, backbone, blobs, train_cfg, seed=0)


def test_model_spec_must_match_data(backbone, blobs, train_cfg):
    spec = ModelSpec(input_dim=6, hidden_dims=[8], num_classes=4)
    with pytest.raises(ConfigurationError):
        run_strategy(DefaultStrategy(), spec, backbone, blobs, train_cfg, seed=0)


def test_training_improves_on_separable_data(spec, backbone, blobs):
    from app.models.training import TrainConfig
    from app.services.ensemble_service import predict
    from app.services.metrics_service import f1_macro

    outcome = run_strategy(
        DefaultStrategy(), spec, backbone, blobs, TrainConfig(epochs=20, batch_size=8, learning_rate=0.01), seed=0
    )
    preds = predict(outcome.predictor, spec, blobs.features)
    assert f1_macro(preds, blobs.labels, 3) > 0.8


def test_swa_window_of_one_step_equals_default(spec, backbone, blobs, train_cfg):
    default = run_strategy(DefaultStrategy(), spec, backbone, blobs, train_cfg, seed=2)
    # floor(0.9375 * 16) = 15: ortalamaya yalnızca son adım girer
    swa = run_strategy(SWAStrategy(start_frac=0.9375), spec, backbone, blobs, train_cfg, seed=2)
    assert swa.predictor.params.bitwise_equal(default.predictor.params)
    assert swa.member_steps == 17


def test_mixout_without_mixing_equals_default(spec, backbone, blobs, train_cfg):
    default = run_strategy(DefaultStrategy(), spec, backbone, blobs, train_cfg, seed=5)
    mixout = run_strategy(MixoutStrategy(p=0.0), spec, backbone, blobs, train_cfg, seed=5)
    for expected, got in zip(default.predictor.params, mixout.predictor.params):
        np.testing.assert_allclose(got.tensor, expected.tensor, rtol=0, atol=1e-12)


def test_mixout_on_frozen_backbone_warns(backbone, blobs, train_cfg, caplog):
    spec = ModelSpec(input_dim=6, hidden_dims=[8], num_classes=3, dropout_rate=0.0,
                     tuning_mode=TuningMode.HEAD_ONLY)
    default = run_strategy(DefaultStrategy(), spec, backbone, blobs, train_cfg, seed=1)
    with caplog.at_level(logging.WARNING, logger="app.services.mitigation_service"):
        mixout = run_strategy(MixoutStrategy(), spec, backbone, blobs, train_cfg, seed=1)
    assert any("Mixout yalnızca Full modda" in r.getMessage() for r in caplog.records)
    assert mixout.predictor.params.bitwise_equal(default.predictor.params)
