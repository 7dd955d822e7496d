"""Search procedures (ADF, ADC, random search, M-DF) and the brute-force oracle."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .objectives import ContractError, ObjectiveSpec, ParetoArchive, extract_pareto_front, non_dominated_mask
from .policy import DEFAULT_LEARNING_RATE, PolicyParams, reinforce_batch_update, sample
from .rewards import AdcSpec, DesirabilitySpec, adc_reward, adf_reward
from .schedule import ADC_SCHEDULE, ADF_SCHEDULE, TargetGrid, TemperatureSchedule, target_at
from .search_space import Evaluator, SequenceSpace, all_encodings, ordered_sum, table_sums

DEFAULT_STEPS = {2: 6000, 3: 12000}
DEFAULT_GRID = (110, 109)


@dataclass(frozen=True)
class PolicyConfig:
    learning_rate: float = DEFAULT_LEARNING_RATE
    optimizer: str = "sgd"
    baseline_decay: float = 0.95
    tanh_constant: float = 1.5
    batch_size: int = 1

    def make(self, space: SequenceSpace) -> PolicyParams:
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        return PolicyParams.uniform(
            space.arities,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            baseline_decay=self.baseline_decay,
            tanh_constant=self.tanh_constant,
        )


@dataclass(frozen=True)
class AdfConfig:
    """Annealing-desirability settings; ``None`` fields resolve from the space ranges.

    For three objectives the annealing length is the size of ``grid_shape``.
    """

    m: int = 2
    n_warm: int = 1500
    n_anneal: int | None = None
    tau_min: tuple[float, ...] | None = None
    tau_max: tuple[float, ...] | None = None
    delta_warm: tuple[float, ...] | None = None
    delta_anneal: tuple[float, ...] | None = None
    schedule: TemperatureSchedule = ADF_SCHEDULE
    grid_shape: tuple[int, ...] = DEFAULT_GRID
    include_warmup: bool = False
    policy: PolicyConfig = PolicyConfig()


@dataclass(frozen=True)
class AdcConfig:
    m: int = 2
    n_steps: int | None = None
    epsilon: tuple[float, ...] | None = None
    c: float = 10.0
    schedule: TemperatureSchedule = ADC_SCHEDULE
    policy: PolicyConfig = PolicyConfig()


@dataclass(frozen=True)
class RsConfig:
    m: int = 2
    n_steps: int | None = None


@dataclass(frozen=True)
class MdfConfig:
    """Independent fixed-target desirability runs.

    ``n_targets`` is the number of split points per constrained axis; three
    objectives therefore use an ``n_targets x n_targets`` grid.
    """

    m: int = 2
    n_targets: int = 10
    steps_per_target: int | None = None
    fixed_temperature: float = 5.0
    delta: tuple[float, ...] | None = None
    policy: PolicyConfig = PolicyConfig()


@dataclass
class Sample:
    step: int
    encoding: tuple[int, ...]
    objectives: tuple[float, ...]
    reward: float | None = None
    temperature: float | None = None
    target: tuple[float, ...] | None = None
    phase: str = "search"


@dataclass
class RunRecord:
    algorithm: str
    seed: int | None
    spec: ObjectiveSpec
    samples: list[Sample]
    final_front: ParetoArchive
    fingerprint: str = ""
    space_fingerprint: str = ""
    warmup: list[Sample] = field(default_factory=list)
    policy: PolicyParams | None = None

    def points(self) -> list[tuple[tuple[int, ...], tuple[float, ...]]]:
        return [(s.encoding, s.objectives) for s in self.samples]

    def samples_csv(self) -> str:
        """Full-precision CSV of recorded samples."""
        n_target = max((len(s.target) for s in self.samples if s.target is not None), default=0)
        constrained = list(self.spec.names[1:])
        target_cols = [f"target_{constrained[i] if i < len(constrained) else i}" for i in range(n_target)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "encoding", *self.spec.names, "reward", "temperature", *target_cols, "phase"])
        for s in self.samples:
            targets = list(s.target) if s.target is not None else []
            targets += [None] * (n_target - len(targets))
            w.writerow(
                [
                    s.step,
                    "-".join(str(d) for d in s.encoding),
                    *(_fmt(v) for v in s.objectives),
                    _fmt(s.reward),
                    _fmt(s.temperature),
                    *(_fmt(v) for v in targets),
                    s.phase,
                ]
            )
        return buf.getvalue()

    def front_json(self) -> str:
        return json.dumps(self.final_front.to_dict(), sort_keys=True, indent=1)


def _fmt(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def fingerprint(obj) -> str:
    """Stable short hash of a JSON-able description."""
    text = json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


class _Objectives:
    """Vectorized objective evaluation for one (space, evaluator, m)."""

    def __init__(self, space: SequenceSpace, evaluator: Evaluator, m: int):
        self.spec = space.objective_spec(m)
        self.space = space
        self.evaluator = evaluator
        names = ["merit_table", "cost_table"] + (["flop_table"] if m == 3 else [])
        self._tables = np.stack([space.padded(n) for n in names])
        self._rows = np.arange(space.L)

    def __call__(self, enc: Sequence[int], rng: np.random.Generator) -> tuple[float, ...]:
        sums = ordered_sum(self._tables[:, self._rows, np.asarray(enc)])
        q = self.evaluator.squash(float(sums[0]))
        if self.evaluator.sigma > 0:
            q = min(1.0, max(0.0, q + float(rng.normal(0.0, self.evaluator.sigma))))
        return (q, *(float(x) for x in sums[1:]))


def _check_m(space: SequenceSpace, m: int) -> None:
    if m not in (2, 3):
        raise ContractError(f"supported objective counts are 2 and 3, got {m}")
    if m == 3 and space.flop_table is None:
        raise ContractError("three objectives need a space with a flop table")


def _constrained_ranges(space: SequenceSpace, m: int) -> list[tuple[float, float]]:
    keys = ["params", "flops"][: m - 1]
    return [tuple(space.ranges[k]) for k in keys]


def _resolve(values, default: list[float], name: str, m: int) -> tuple[float, ...]:
    if values is None:
        return tuple(float(v) for v in default)
    if isinstance(values, (int, float)):
        values = [values]
    values = tuple(float(v) for v in values)
    if len(values) != m - 1:
        raise ContractError(f"{name} needs {m - 1} entries, got {len(values)}")
    return values


def _policy_for(space: SequenceSpace, policy_init: PolicyParams | None, pcfg: PolicyConfig) -> PolicyParams:
    if policy_init is None:
        return pcfg.make(space)
    if policy_init.arities != space.arities:
        raise ContractError("initial policy does not match the space's arities")
    return policy_init.copy()


def _run_policy_phase(
    policy: PolicyParams,
    batch_size: int,
    steps: Sequence[int],
    temperature: Callable[[int], float],
    reward_of: Callable[[int, tuple[float, ...]], tuple[float, tuple[float, ...] | None]],
    objectives: _Objectives,
    rng: np.random.Generator,
    phase: str,
    on_sample: Callable[[Sample], None],
) -> PolicyParams:
    """Sample/evaluate/reward/update loop shared by the policy-gradient methods.

    ``reward_of(step, objs)`` returns (reward, target); with ``batch_size > 1``
    the temperature is held at the value of the first step of each batch.
    """
    for start in range(0, len(steps), batch_size):
        batch = steps[start : start + batch_size]
        T = temperature(batch[0])
        encs, rewards = [], []
        for step in batch:
            enc, _ = sample(policy, T, rng)
            objs = objectives(enc, rng)
            r, target = reward_of(step, objs)
            on_sample(Sample(step, enc, objs, r, T, target, phase))
            encs.append(enc)
            rewards.append(r)
        policy = reinforce_batch_update(policy, encs, rewards, T)
    return policy


def run_adf(
    space: SequenceSpace,
    evaluator: Evaluator,
    policy_init: PolicyParams | None,
    cfg: AdfConfig,
    rng: np.random.Generator,
) -> RunRecord:
    """Warm up at the lowest target with a wide band, then anneal the target across its range."""
    _check_m(space, cfg.m)
    m = cfg.m
    ranges = _constrained_ranges(space, m)
    tau_min = _resolve(cfg.tau_min, [lo for lo, _ in ranges], "tau_min", m)
    tau_max = _resolve(cfg.tau_max, [hi for _, hi in ranges], "tau_max", m)
    for lo, hi, (rlo, rhi) in zip(tau_min, tau_max, ranges):
        if not lo < hi:
            raise ContractError(f"need tau_min < tau_max, got ({lo}, {hi})")
        if lo < rlo or hi > rhi:
            raise ContractError(f"target range ({lo}, {hi}) lies outside the space's range ({rlo}, {rhi})")
    spans = [hi - lo for lo, hi in zip(tau_min, tau_max)]
    delta_warm = _resolve(cfg.delta_warm, [s / 2 for s in spans], "delta_warm", m)
    delta_anneal = _resolve(cfg.delta_anneal, [s / 10 for s in spans], "delta_anneal", m)
    if any(d <= 0 for d in delta_warm + delta_anneal):
        raise ContractError("desirability widths must be positive")
    if cfg.n_warm < 0:
        raise ContractError("n_warm must be >= 0")

    if m == 2:
        n_anneal = DEFAULT_STEPS[2] if cfg.n_anneal is None else int(cfg.n_anneal)
        if n_anneal < 1:
            raise ContractError("n_anneal must be >= 1")

        def target(step: int) -> tuple[float, ...]:
            return (target_at(tau_min[0], tau_max[0], n_anneal, step),)

    else:
        grid = TargetGrid.regular(list(zip(tau_min, tau_max)), cfg.grid_shape)
        n_anneal = len(grid)
        if cfg.n_anneal is not None and cfg.n_anneal != n_anneal:
            raise ContractError(f"n_anneal={cfg.n_anneal} disagrees with the {n_anneal}-point target grid")
        grid_targets = grid.targets()

        def target(step: int) -> tuple[float, ...]:
            return grid_targets[step - 1]

    objectives = _Objectives(space, evaluator, m)
    policy = _policy_for(space, policy_init, cfg.policy)
    warmup: list[Sample] = []
    samples: list[Sample] = []

    warm_specs = [DesirabilitySpec(t, d) for t, d in zip(tau_min, delta_warm)]

    def warm_reward(step, objs):
        return adf_reward(objs[0], objs[1:], warm_specs), tau_min

    policy = _run_policy_phase(
        policy, cfg.policy.batch_size, range(cfg.n_warm), cfg.schedule, warm_reward,
        objectives, rng, "warmup", warmup.append,
    )

    def anneal_reward(step, objs):
        tau = target(step - cfg.n_warm + 1)
        specs = [DesirabilitySpec(t, d) for t, d in zip(tau, delta_anneal)]
        return adf_reward(objs[0], objs[1:], specs), tau

    policy = _run_policy_phase(
        policy, cfg.policy.batch_size, range(cfg.n_warm, cfg.n_warm + n_anneal),
        cfg.schedule, anneal_reward, objectives, rng, "anneal", samples.append,
    )
    recorded = warmup + samples if cfg.include_warmup else samples
    front = extract_pareto_front([(s.encoding, s.objectives) for s in recorded], objectives.spec)
    return RunRecord("adf", None, objectives.spec, recorded, front, warmup=warmup, policy=policy)


def run_adc(
    space: SequenceSpace,
    evaluator: Evaluator,
    policy_init: PolicyParams | None,
    cfg: AdcConfig,
    rng: np.random.Generator,
    on_step: Callable[[int, ParetoArchive, list[Sample]], None] | None = None,
) -> RunRecord:
    """Dominance-credit search; the reward of each sample is scored before it enters the archive.

    ``on_step(step, archive, samples)`` is called after every archive update.
    """
    _check_m(space, cfg.m)
    n_steps = DEFAULT_STEPS[cfg.m] if cfg.n_steps is None else int(cfg.n_steps)
    if n_steps < 1:
        raise ContractError("n_steps must be >= 1")
    eps = cfg.epsilon if cfg.epsilon is not None else default_epsilon(cfg.m)
    adc_spec = AdcSpec(tuple(eps), cfg.c)
    if len(adc_spec.epsilon) != cfg.m:
        raise ContractError(f"epsilon needs {cfg.m} entries, got {len(adc_spec.epsilon)}")
    objectives = _Objectives(space, evaluator, cfg.m)
    policy = _policy_for(space, policy_init, cfg.policy)
    archive = ParetoArchive(objectives.spec)
    samples: list[Sample] = []

    def reward(step, objs):
        return adc_reward(objs, archive, adc_spec), None

    def record(s: Sample) -> None:
        samples.append(s)
        archive.insert(s.encoding, s.objectives)
        if on_step is not None:
            on_step(s.step, archive, samples)

    policy = _run_policy_phase(
        policy, cfg.policy.batch_size, range(n_steps), cfg.schedule, reward, objectives, rng, "search", record
    )
    return RunRecord("adc", None, objectives.spec, samples, archive, policy=policy)


def default_epsilon(m: int) -> tuple[float, ...]:
    """Density radii: unbounded on quality, 0.1 M params, 0.02 B FLOPs."""
    return (math.inf, 0.1, 0.02)[:m]


def run_random(
    space: SequenceSpace, evaluator: Evaluator, n_steps: int, rng: np.random.Generator, m: int = 2
) -> RunRecord:
    _check_m(space, m)
    if n_steps < 1:
        raise ContractError("n_steps must be >= 1")
    objectives = _Objectives(space, evaluator, m)
    samples = []
    for step in range(n_steps):
        enc = tuple(int(rng.integers(0, k)) for k in space.arities)
        samples.append(Sample(step, enc, objectives(enc, rng)))
    front = extract_pareto_front([(s.encoding, s.objectives) for s in samples], objectives.spec)
    return RunRecord("rs", None, objectives.spec, samples, front)


def mdf_targets(space: SequenceSpace, m: int, n_targets: int) -> list[tuple[float, ...]]:
    """Evenly spaced split points, endpoints included; a square grid for three objectives."""
    ranges = _constrained_ranges(space, m)
    grid = TargetGrid.regular(ranges, [n_targets] * (m - 1))
    return grid.targets()


def run_mdf(
    space: SequenceSpace,
    evaluator: Evaluator,
    n_targets: int,
    steps_per_target: int,
    fixed_temperature: float,
    rng: np.random.Generator,
    m: int = 2,
    delta: Sequence[float] | None = None,
    policy_config: PolicyConfig = PolicyConfig(),
) -> RunRecord:
    """One fresh policy per fixed target; the front is taken over the union of all samples."""
    _check_m(space, m)
    if n_targets < 1 or steps_per_target < 1:
        raise ContractError("n_targets and steps_per_target must be >= 1")
    ranges = _constrained_ranges(space, m)
    widths = _resolve(delta, [(hi - lo) / 10 for lo, hi in ranges], "delta", m)
    objectives = _Objectives(space, evaluator, m)
    schedule = TemperatureSchedule.fixed(fixed_temperature)
    samples: list[Sample] = []
    targets = mdf_targets(space, m, n_targets)
    streams = rng.spawn(len(targets))
    for i, (tau, stream) in enumerate(zip(targets, streams)):
        specs = [DesirabilitySpec(t, d) for t, d in zip(tau, widths)]
        offset = i * steps_per_target

        def reward(step, objs, specs=specs, tau=tau):
            return adf_reward(objs[0], objs[1:], specs), tau

        _run_policy_phase(
            policy_config.make(space), policy_config.batch_size, range(offset, offset + steps_per_target),
            schedule, reward, objectives, stream, f"target{i}", samples.append,
        )
    front = extract_pareto_front([(s.encoding, s.objectives) for s in samples], objectives.spec)
    return RunRecord("mdf", None, objectives.spec, samples, front)


def brute_force_front(space: SequenceSpace, evaluator: Evaluator, m: int = 2) -> ParetoArchive:
    """Exact Pareto front of the whole space under a deterministic evaluator."""
    if not evaluator.deterministic:
        raise ContractError("the oracle needs a deterministic (sigma = 0) evaluator")
    _check_m(space, m)
    encodings = all_encodings(space)
    spec = space.objective_spec(m)
    cols = [evaluator.squash(table_sums(space, "merit_table", encodings)), table_sums(space, "cost_table", encodings)]
    if m == 3:
        cols.append(table_sums(space, "flop_table", encodings))
    values = np.stack(cols, axis=1)
    mask = non_dominated_mask(values, spec)
    return ParetoArchive.from_arrays(spec, encodings[mask], values[mask])
