"""Azaltma stratejileri motoru: Default tabanlı tarifler ve DE / NI / DENI / DENIALS planları.

Tüm üyeler aynı yığın akışını tüketir; her üyenin dropout/Mixout akışı ayrıdır.
Bozma (PerturbSpawn) ile oluşan kopyalar bozulmamış üyenin optimizer durumunun
bir kopyasıyla devam eder; birleştirme (Aggregate) sonrası ortalama model
bozulmamış üyenin durumunu devralır.
"""
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from app.config.logging import setup_logger
from app.exceptions import ConfigurationError, PlanError, RunFailedError
from app.models.classifier import Model, ModelSpec, TuningMode
from app.models.dataset import AugmentationMap, Batch, Dataset
from app.models.params import ParamSet
from app.models.plan import (
    Aggregate, FinalEnsemble, LambdaKind, PerturbSpawn, PhasePlan, PlanVariant,
    TrainParallel, TrainSingle,
)
from app.models.predictor import Predictor, SingleModel, VotingEnsemble
from app.models.strategy import (
    AllDataStrategy, AugmentNStrategy, BestPracticesStrategy, DEStrategy, DefaultStrategy,
    DeniConfig, DENIALSStrategy, DENIStrategy, EnsembleStrategy, MixoutStrategy,
    NIStrategy, NoiseInputStrategy, NoiseWeightsStrategy, StrategyConfig, SWAStrategy,
)
from app.models.training import TrainConfig
from app.services.data_service import epoch_batches, expand_with_augmentations, steps_per_epoch
from app.services.ensemble_service import interpolate
from app.services.model_service import (
    Regularizer, TrainMode, backward, forward, init_model, trainable_fraction,
)
from app.services.noise_service import NoiseScaling, NoiseSpec, perturb, perturb_input
from app.services.optim_service import OptimizerState, lr_at, new_optimizer_state, optimizer_step
from app.services.rng_service import (
    DATA_ORDER, INIT, MITIGATION_NOISE, MODEL_NOISE, RngStream, derive_stream, member_label,
)

logger = setup_logger(__name__)

StepHook = Callable[[int, "Member"], None]
BatchHook = Callable[[int, Batch], Batch]


@dataclass
class Member:
    model: Model
    state: OptimizerState
    rng_model_noise: RngStream


@dataclass(frozen=True)
class StrategyOutcome:
    predictor: Predictor
    member_steps: int
    total_steps: int


def build_phase_plan(cfg: DeniConfig, total_steps: int, variant: PlanVariant) -> PhasePlan:
    """Tek model / paralel üye eğitim olaylarının sıralı listesi."""
    variant = PlanVariant(variant)
    if total_steps < 1:
        raise PlanError(f"Toplam adım pozitif olmalı: {total_steps}")
    ns = math.floor(cfg.noise_start_frac * total_steps)
    ne = math.floor(cfg.noise_end_frac * total_steps)
    es = math.floor(cfg.ensemble_start_frac * total_steps)
    events = []

    def single(start: int, end: int) -> None:
        if end <= start:
            return
        if events and isinstance(events[-1], TrainSingle) and events[-1].end == start:
            events[-1] = TrainSingle(events[-1].start, end)
        else:
            events.append(TrainSingle(start, end))

    if variant == PlanVariant.DE:
        if es < 1:
            raise PlanError(f"{total_steps} adım, topluluk başlangıcı için çok kısa")
        single(0, es)
    else:
        boundary = total_steps if variant == PlanVariant.NI else es
        noisy, regular = cfg.steps_noisy, cfg.steps_regular
        if ns + noisy + regular > boundary and cfg.reference_steps is not None:
            noisy, regular = cfg.rescaled_steps(total_steps)
            logger.debug(
                f"{total_steps} adımlık eğitim için döngü {cfg.steps_noisy}+{cfg.steps_regular} "
                f"yerine {noisy}+{regular} adım"
            )
        if ns < 1 or ns >= ne or ns + noisy + regular > boundary:
            raise PlanError(
                f"Gürültü penceresi [{ns}, {ne}) bir döngü ({noisy}+{regular} adım) için çok küçük "
                f"(toplam {total_steps})"
            )
        single(0, ns)
        s = ns
        while s < ne and s + noisy <= boundary:
            events.append(PerturbSpawn(s, LambdaKind.STEPS))
            events.append(TrainParallel(s, s + noisy, cfg.ensemble_size))
            events.append(Aggregate(s + noisy))
            single(s + noisy, min(s + noisy + regular, boundary))
            s += noisy + regular
        single(min(s, boundary), boundary)
        if variant == PlanVariant.NI:
            return PhasePlan(tuple(events), total_steps)

    events.append(PerturbSpawn(es, LambdaKind.ENSEMBLE))
    events.append(TrainParallel(es, total_steps, cfg.ensemble_size))
    events.append(FinalEnsemble(total_steps))
    return PhasePlan(tuple(events), total_steps)


class _BatchFeed:
    """Global adım -> yığın; epoklar ihtiyaç oldukça aynı akıştan üretilir."""

    def __init__(self, train: Dataset, batch_size: int, rng: RngStream):
        self._train = train
        self._batch_size = batch_size
        self._rng = rng
        self._per_epoch = steps_per_epoch(len(train), batch_size)
        self._epochs: List[List[Batch]] = []

    def batch_at(self, step: int) -> Batch:
        epoch, offset = divmod(step, self._per_epoch)
        while len(self._epochs) <= epoch:
            self._epochs.append(epoch_batches(self._train, self._batch_size, self._rng))
        if epoch > 0:
            # eski epoklar bir daha okunmaz
            self._epochs[epoch - 1] = None
        return self._epochs[epoch][offset]


class _Session:
    """Bir koşunun eğitim bağlamı: plan, yığın akışı ve üye-adım sayacı."""

    def __init__(
        self,
        train: Dataset,
        train_cfg: TrainConfig,
        seed: int,
        member: int = 0,
        regularizer: Regularizer = Regularizer.DROPOUT,
        mixout_p: float = 0.0,
    ):
        self.train_cfg = train_cfg
        self.seed = seed
        self.total_steps = train_cfg.epochs * steps_per_epoch(len(train), train_cfg.batch_size)
        self.schedule = train_cfg.schedule_for(self.total_steps)
        self.feed = _BatchFeed(train, train_cfg.batch_size, derive_stream(seed, member_label(DATA_ORDER, member)))
        self.regularizer = regularizer
        self.mixout_p = mixout_p
        self.member_steps = 0

    def new_member(self, model_spec: ModelSpec, backbone: ParamSet, member: int = 0) -> Member:
        model = init_model(model_spec, backbone, derive_stream(self.seed, member_label(INIT, member)))
        if member == 0:
            logger.debug(f"{model_spec.tuning_mode.value}: eğitilen pay {trainable_fraction(model):.4f}")
        return Member(
            model=model,
            state=new_optimizer_state(self.train_cfg),
            rng_model_noise=derive_stream(self.seed, member_label(MODEL_NOISE, member)),
        )

    def train_step(self, member: Member, step: int, batch: Batch) -> None:
        mode = TrainMode(member.rng_model_noise, self.regularizer, self.mixout_p)
        _, cache = forward(member.model, batch, mode)
        grads, loss = backward(member.model, cache, batch.labels)
        if not np.isfinite(loss):
            raise RunFailedError(f"Sonlu olmayan kayıp: adım {step}")
        params, member.state = optimizer_step(
            member.state, member.model.params, grads, lr_at(self.schedule, step)
        )
        member.model = member.model.with_params(params)
        self.member_steps += 1

    def train_range(
        self,
        members: List[Member],
        start: int,
        end: int,
        before_step: Optional[BatchHook] = None,
        after_step: Optional[StepHook] = None,
    ) -> None:
        for step in range(start, end):
            batch = self.feed.batch_at(step)
            if before_step is not None:
                batch = before_step(step, batch)
            for member in members:
                self.train_step(member, step, batch)
                if after_step is not None:
                    after_step(step, member)


def _check_train_data(train: Dataset) -> None:
    if len(train) == 0:
        raise ConfigurationError("Eğitim verisi boş")
    missing = [c for c, n in enumerate(train.class_counts()) if n == 0]
    if missing:
        raise ConfigurationError(f"Eğitim verisinde örneği olmayan sınıflar: {missing}")


def _run_default(
    model_spec: ModelSpec,
    backbone: ParamSet,
    train: Dataset,
    train_cfg: TrainConfig,
    seed: int,
    member: int = 0,
    regularizer: Regularizer = Regularizer.DROPOUT,
    mixout_p: float = 0.0,
    before_step: Optional[BatchHook] = None,
    after_step: Optional[StepHook] = None,
) -> tuple:
    session = _Session(train, train_cfg, seed, member, regularizer, mixout_p)
    m = session.new_member(model_spec, backbone, member)
    session.train_range([m], 0, session.total_steps, before_step, after_step)
    return m, session


def _noise_spec(cfg: DeniConfig, kind: LambdaKind) -> NoiseSpec:
    if not cfg.scaled:
        scaling = NoiseScaling.NO_SCALING
    elif kind == LambdaKind.STEPS:
        scaling = NoiseScaling.STD_OVER_STEPS
    else:
        scaling = NoiseScaling.STD_ONLY
    return NoiseSpec(cfg.var_noise, scaling, cfg.noise_target)


def run_plan(
    plan: PhasePlan,
    cfg: DeniConfig,
    model_spec: ModelSpec,
    backbone: ParamSet,
    train: Dataset,
    train_cfg: TrainConfig,
    seed: int,
) -> StrategyOutcome:
    """PhasePlan olaylarını sırayla yürütür."""
    session = _Session(train, train_cfg, seed)
    if session.total_steps != plan.total_steps:
        raise PlanError(f"Plan {plan.total_steps} adımlık, eğitim {session.total_steps} adım")
    rng_mitigation = derive_stream(seed, MITIGATION_NOISE)
    member_streams: Dict[int, RngStream] = {}
    members = [session.new_member(model_spec, backbone)]
    predictor: Optional[Predictor] = None

    for event in plan.events:
        if isinstance(event, TrainSingle):
            session.train_range(members[:1], event.start, event.end)
        elif isinstance(event, PerturbSpawn):
            base = members[0]
            spawned = [base]
            spec = _noise_spec(cfg, event.lambda_kind) if cfg.var_noise > 0 else None
            for k in range(1, cfg.ensemble_size):
                params = base.model.params
                if spec is not None:
                    params = perturb(params, spec, event.step, rng_mitigation)
                if k not in member_streams:
                    member_streams[k] = derive_stream(seed, member_label(MODEL_NOISE, k))
                spawned.append(Member(base.model.with_params(params), base.state.copy(), member_streams[k]))
            members = spawned
            logger.debug(f"{event.step}. adımda {len(members)} üye oluşturuldu ({event.lambda_kind.value})")
        elif isinstance(event, TrainParallel):
            session.train_range(members, event.start, event.end)
        elif isinstance(event, Aggregate):
            base = members[0]
            averaged = interpolate([m.model.params for m in members])
            members = [Member(base.model.with_params(averaged), base.state, base.rng_model_noise)]
        elif isinstance(event, FinalEnsemble):
            predictor = VotingEnsemble(tuple(m.model.params for m in members))

    if predictor is None:
        predictor = SingleModel(members[0].model.params)
    return StrategyOutcome(predictor, session.member_steps, plan.total_steps)


def denials_params(strategy: DENIALSStrategy) -> DeniConfig:
    """Veri (n+1) katına çıktığı için gürültülü ve düzenli evreler de aynı oranda uzar."""
    cfg = strategy.deni_params()
    factor = strategy.n + 1
    update = {
        "steps_noisy": cfg.steps_noisy * factor,
        "steps_regular": cfg.steps_regular * factor,
    }
    if cfg.reference_steps is not None:
        update["reference_steps"] = cfg.reference_steps * factor
    return cfg.copy(update=update)


def _plan_for(cfg: DeniConfig, train: Dataset, train_cfg: TrainConfig, variant: PlanVariant) -> PhasePlan:
    total = train_cfg.epochs * steps_per_epoch(len(train), train_cfg.batch_size)
    return build_phase_plan(cfg, total, variant)


def _require_augmentations(augmentations: Optional[AugmentationMap], kind: str) -> AugmentationMap:
    if augmentations is None:
        raise ConfigurationError(f"'{kind}' stratejisi için artırma verisi gerekli")
    return augmentations


def run_strategy(
    strategy: StrategyConfig,
    model_spec: ModelSpec,
    backbone: ParamSet,
    train_data: Dataset,
    train_cfg: TrainConfig,
    seed: int,
    augmentations: Optional[AugmentationMap] = None,
) -> StrategyOutcome:
    """Stratejiyi eğitir; tahminci ve sayılan üye-adımlarını döndürür.

    AllData için train_data zaten tüm eğitim bölümüdür; seçim çağıranın işidir.
    """
    _check_train_data(train_data)
    if model_spec.input_dim != train_data.feature_dim or model_spec.num_classes != train_data.num_classes:
        raise ConfigurationError(
            f"Model tanımı ({model_spec.input_dim}, {model_spec.num_classes}) veri kümesiyle "
            f"({train_data.feature_dim}, {train_data.num_classes}) uyuşmuyor"
        )

    if isinstance(strategy, (DefaultStrategy, AllDataStrategy, BestPracticesStrategy)):
        cfg = train_cfg.best_practices() if isinstance(strategy, BestPracticesStrategy) else train_cfg
        m, session = _run_default(model_spec, backbone, train_data, cfg, seed)
        return StrategyOutcome(SingleModel(m.model.params), session.member_steps, session.total_steps)

    if isinstance(strategy, EnsembleStrategy):
        params, steps, total = [], 0, 0
        for k in range(strategy.size):
            m, session = _run_default(model_spec, backbone, train_data, train_cfg, seed, member=k)
            params.append(m.model.params)
            steps += session.member_steps
            total = session.total_steps
        predictor = SingleModel(params[0]) if len(params) == 1 else VotingEnsemble(tuple(params))
        return StrategyOutcome(predictor, steps, total)

    if isinstance(strategy, NoiseInputStrategy):
        rng = derive_stream(seed, MITIGATION_NOISE)

        def noisy_input(step: int, batch: Batch) -> Batch:
            if (step + 1) % strategy.every == 0:
                return perturb_input(batch, strategy.var, rng)
            return batch

        m, session = _run_default(model_spec, backbone, train_data, train_cfg, seed, before_step=noisy_input)
        return StrategyOutcome(SingleModel(m.model.params), session.member_steps, session.total_steps)

    if isinstance(strategy, NoiseWeightsStrategy):
        rng = derive_stream(seed, MITIGATION_NOISE)
        spec = NoiseSpec(strategy.var, NoiseScaling.STD_OVER_STEPS, strategy.target)

        def noisy_weights(step: int, member: Member) -> None:
            completed = step + 1
            if completed % strategy.every == 0:
                member.model = member.model.with_params(perturb(member.model.params, spec, completed, rng))

        m, session = _run_default(model_spec, backbone, train_data, train_cfg, seed, after_step=noisy_weights)
        return StrategyOutcome(SingleModel(m.model.params), session.member_steps, session.total_steps)

    if isinstance(strategy, SWAStrategy):
        return _run_swa(strategy, model_spec, backbone, train_data, train_cfg, seed)

    if isinstance(strategy, MixoutStrategy):
        if model_spec.tuning_mode != TuningMode.FULL:
            logger.warning(
                f"Mixout yalnızca Full modda omurgaya uygulanır; {model_spec.tuning_mode.value} modunda "
                f"{strategy.strategy_id} düzenlileştirmesiz eğitilir"
            )
        m, session = _run_default(
            model_spec, backbone, train_data, train_cfg, seed,
            regularizer=Regularizer.MIXOUT, mixout_p=strategy.p,
        )
        return StrategyOutcome(SingleModel(m.model.params), session.member_steps, session.total_steps)

    if isinstance(strategy, AugmentNStrategy):
        expanded = expand_with_augmentations(
            train_data, _require_augmentations(augmentations, strategy.kind), strategy.n
        )
        epochs = max(1, int(round(train_cfg.epochs * strategy.epochs_multiplier)))
        m, session = _run_default(model_spec, backbone, expanded, train_cfg.copy(update={"epochs": epochs}), seed)
        return StrategyOutcome(SingleModel(m.model.params), session.member_steps, session.total_steps)

    if isinstance(strategy, (DEStrategy, NIStrategy, DENIStrategy, DENIALSStrategy)):
        train = train_data
        variant = PlanVariant.DENI
        if isinstance(strategy, DEStrategy):
            variant = PlanVariant.DE
        elif isinstance(strategy, NIStrategy):
            variant = PlanVariant.NI
        elif isinstance(strategy, DENIALSStrategy):
            train = expand_with_augmentations(
                train_data, _require_augmentations(augmentations, strategy.kind), strategy.n
            )
        cfg = denials_params(strategy) if isinstance(strategy, DENIALSStrategy) else strategy.deni_params()
        plan = _plan_for(cfg, train, train_cfg, variant)
        logger.debug(f"{strategy.strategy_id}: {plan.total_steps} adım, {plan.cycles} döngü")
        return run_plan(plan, cfg, model_spec, backbone, train, train_cfg, seed)

    raise ConfigurationError(f"Bilinmeyen strateji: {type(strategy).__name__}")


def _run_swa(
    strategy: SWAStrategy,
    model_spec: ModelSpec,
    backbone: ParamSet,
    train: Dataset,
    train_cfg: TrainConfig,
    seed: int,
) -> StrategyOutcome:
    """Default eğitimi; floor(start_frac * T) adımından sonra ağırlıkların eşit ortalaması."""
    total = train_cfg.epochs * steps_per_epoch(len(train), train_cfg.batch_size)
    start = math.floor(strategy.start_frac * total)
    average: Optional[ParamSet] = None
    updates = 0

    def accumulate(step: int, member: Member) -> None:
        nonlocal average, updates
        if step + 1 <= start:
            return
        current = member.model.params
        if average is None:
            average = current
        else:
            average = average.replace({
                g.name: g.tensor + (c.tensor - g.tensor) / (updates + 1)
                for g, c in zip(average.groups, current.groups)
            })
        updates += 1

    m, session = _run_default(model_spec, backbone, train, train_cfg, seed, after_step=accumulate)
    params = average if average is not None else m.model.params
    # ortalama modelin güncellenmesi ikinci bir model üzerinde optimizasyon sayılır
    return StrategyOutcome(SingleModel(params), session.member_steps + updates, session.total_steps)
