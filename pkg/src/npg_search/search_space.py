"""Synthetic enumerable search spaces, cost models and quality evaluators.

A :class:`SequenceSpace` is a fixed-length sequence of categorical decisions.
Parameter and FLOP costs are additive per-position tables; quality is a
logistic squash of an additive merit table, optionally perturbed by
per-evaluation Gaussian noise to mimic a fine-tuned shared-weight evaluator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .objectives import ContractError, ObjectiveSpec, Orientation

DEFAULT_CAP = 2**20
PARAMS_RANGE = (0.1, 2.0)  # millions of parameters
FLOPS_RANGE = (0.02, 0.31)  # billions of FLOPs
QUALITY_RANGE = (0.0, 1.0)
DEFAULT_SPREAD = 2.0
DEFAULT_CORRELATION_STRENGTH = 0.05


class EnumerationRefused(ContractError):
    """The space is too large to enumerate under the configured cap."""


@dataclass(frozen=True, eq=False)
class SequenceSpace:
    arities: tuple[int, ...]
    cost_table: tuple[np.ndarray, ...]
    merit_table: tuple[np.ndarray, ...]
    flop_table: tuple[np.ndarray, ...] | None = None
    seed: int | None = None
    correlation_strength: float | None = None
    ranges: dict = field(default_factory=lambda: {"params": PARAMS_RANGE, "flops": FLOPS_RANGE})

    def __post_init__(self) -> None:
        arities = tuple(int(k) for k in self.arities)
        object.__setattr__(self, "arities", arities)
        if not arities or any(k < 1 for k in arities):
            raise ContractError(f"arities must be a non-empty list of positive ints, got {arities}")
        for name in ("cost_table", "merit_table", "flop_table"):
            table = getattr(self, name)
            if table is None:
                continue
            table = tuple(np.asarray(row, dtype=float) for row in table)
            if tuple(len(row) for row in table) != arities:
                raise ContractError(f"{name} shape does not match arities {arities}")
            if name != "merit_table" and any(np.any(row < 0) for row in table):
                raise ContractError(f"{name} entries must be non-negative")
            for row in table:
                row.setflags(write=False)
            object.__setattr__(self, name, table)

    @property
    def L(self) -> int:
        return len(self.arities)

    @property
    def cardinality(self) -> int:
        return math.prod(self.arities)

    def validate(self, e: Sequence[int]) -> tuple[int, ...]:
        enc = tuple(int(d) for d in e)
        if len(enc) != self.L:
            raise ContractError(f"encoding has length {len(enc)}, space has {self.L} positions")
        for t, (d, k) in enumerate(zip(enc, self.arities)):
            if not 0 <= d < k:
                raise ContractError(f"decision {d} at position {t} outside [0, {k})")
        return enc

    def padded(self, name: str) -> np.ndarray:
        """Table as an (L, max arity) array, zero-padded."""
        table = getattr(self, name)
        out = np.zeros((self.L, max(self.arities)))
        for t, row in enumerate(table):
            out[t, : len(row)] = row
        return out

    def objective_spec(self, m: int = 2) -> ObjectiveSpec:
        """Objective layout: (quality max, params min[, flops min])."""
        if m == 2:
            return ObjectiveSpec(
                (Orientation.MAXIMIZE, Orientation.MINIMIZE),
                ("quality", "params"),
                (QUALITY_RANGE, tuple(self.ranges["params"])),
            )
        if m == 3:
            if self.flop_table is None:
                raise ContractError("three objectives need a flop table")
            return ObjectiveSpec(
                (Orientation.MAXIMIZE, Orientation.MINIMIZE, Orientation.MINIMIZE),
                ("quality", "params", "flops"),
                (QUALITY_RANGE, tuple(self.ranges["params"]), tuple(self.ranges["flops"])),
            )
        raise ContractError(f"supported objective counts are 2 and 3, got {m}")


def cost(space: SequenceSpace, e: Sequence[int]) -> float:
    """Parameter count of ``e`` in millions."""
    return float(table_sums(space, "cost_table", np.array([space.validate(e)]))[0])


def flops(space: SequenceSpace, e: Sequence[int]) -> float:
    """FLOP count of ``e`` in billions."""
    if space.flop_table is None:
        raise ContractError("space has no flop table")
    return float(table_sums(space, "flop_table", np.array([space.validate(e)]))[0])


def merit(space: SequenceSpace, e: Sequence[int]) -> float:
    return float(table_sums(space, "merit_table", np.array([space.validate(e)]))[0])


def enumerate_space(space: SequenceSpace, cap: int = DEFAULT_CAP) -> Iterator[tuple[int, ...]]:
    """Yield every encoding once, in lexicographic order."""
    if space.cardinality > cap:
        raise EnumerationRefused(
            f"space has {space.cardinality} encodings, which exceeds the enumeration cap of {cap}"
        )
    return itertools.product(*(range(k) for k in space.arities))


def all_encodings(space: SequenceSpace, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Every encoding as an (N, L) int array, lexicographic."""
    if space.cardinality > cap:
        raise EnumerationRefused(
            f"space has {space.cardinality} encodings, which exceeds the enumeration cap of {cap}"
        )
    grids = np.indices(space.arities).reshape(space.L, -1).T
    return np.ascontiguousarray(grids)


def table_sums(space: SequenceSpace, name: str, encodings: np.ndarray) -> np.ndarray:
    """Vectorized table lookup-and-sum over rows of ``encodings``."""
    table = space.padded(name)
    return ordered_sum(table[np.arange(space.L), np.asarray(encodings)])


def ordered_sum(terms: np.ndarray) -> np.ndarray:
    """Left-to-right sum over the last axis.

    numpy's reductions pick a summation order by memory layout, so scalar and
    batched lookups could disagree in the last bit; a fixed order keeps every
    code path bit-identical.
    """
    acc = terms[..., 0].copy()
    for t in range(1, terms.shape[-1]):
        acc = acc + terms[..., t]
    return acc


def _scaled_cost_table(raw: np.ndarray, lo: float, hi: float) -> np.ndarray:
    # Shift each row to start at 0, then scale so the cheapest encoding costs lo
    # and the most expensive one hi.
    shifted = [row - row.min() for row in raw]
    span = sum(row.max() for row in shifted)
    L = len(raw)
    scale = (hi - lo) / span if span > 0 else 0.0
    return [row * scale + lo / L for row in shifted]


def make_benchmark(
    seed: int,
    L: int = 8,
    arities: int | Sequence[int] = 4,
    correlation_strength: float = DEFAULT_CORRELATION_STRENGTH,
    ranges: dict | None = None,
) -> SequenceSpace:
    """Seeded synthetic space whose costs span the configured objective ranges.

    Merit is ``cost + noise`` with noise std ``correlation_strength`` (in the
    same per-position units as the cost table), so expensive choices are
    usually, but not always, better.
    """
    if isinstance(arities, int):
        arities = [arities] * L
    arities = [int(k) for k in arities]
    if len(arities) != L:
        raise ContractError(f"got {len(arities)} arities for L={L}")
    ranges = dict(ranges or {"params": PARAMS_RANGE, "flops": FLOPS_RANGE})
    ranges = {k: tuple(float(x) for x in v) for k, v in ranges.items()}
    rng = np.random.default_rng(seed)
    raw_cost = [rng.uniform(0.0, 1.0, size=k) for k in arities]
    cost_table = _scaled_cost_table(raw_cost, *ranges["params"])
    noise = [rng.normal(0.0, 1.0, size=k) * correlation_strength for k in arities]
    merit_table = [w + eta for w, eta in zip(cost_table, noise)]
    raw_flops = [rng.uniform(0.0, 1.0, size=k) for k in arities]
    flop_table = _scaled_cost_table(raw_flops, *ranges["flops"])
    return SequenceSpace(
        arities=tuple(arities),
        cost_table=tuple(cost_table),
        merit_table=tuple(merit_table),
        flop_table=tuple(flop_table),
        seed=seed,
        correlation_strength=correlation_strength,
        ranges=ranges,
    )


@dataclass(frozen=True)
class Evaluator:
    """Quality model: logistic(sum of merits; mu, s), optionally noisy.

    ``sigma == 0`` is the deterministic ground truth. With ``sigma > 0`` every
    call draws fresh noise from the caller's RNG.
    """

    mu: float
    s: float
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.s <= 0:
            raise ContractError(f"logistic scale must be positive, got {self.s}")
        if self.sigma < 0:
            raise ContractError(f"sigma must be non-negative, got {self.sigma}")

    @property
    def deterministic(self) -> bool:
        return self.sigma == 0.0

    @classmethod
    def calibrated(
        cls,
        space: SequenceSpace,
        sigma: float = 0.0,
        spread: float = DEFAULT_SPREAD,
        n_samples: int = 10_000,
        seed: int | None = None,
    ) -> "Evaluator":
        """Set mu to the mean total merit over seeded random encodings and s to ``spread`` SDs.

        With ``spread=1`` the cheapest encodings score close to 0, which zeroes
        the multiplicative desirability reward at the low-cost end.
        """
        if spread <= 0:
            raise ContractError(f"spread must be positive, got {spread}")
        rng = np.random.default_rng((space.seed or 0) if seed is None else seed)
        enc = random_encodings(space, n_samples, rng)
        totals = table_sums(space, "merit_table", enc)
        return cls(mu=float(totals.mean()), s=float(spread * totals.std()), sigma=float(sigma))

    def with_sigma(self, sigma: float) -> "Evaluator":
        return Evaluator(self.mu, self.s, float(sigma))

    def squash(self, total_merit: float | np.ndarray):
        z = (np.asarray(total_merit, dtype=float) - self.mu) / self.s
        out = 0.5 * (1.0 + np.tanh(0.5 * z))  # overflow-free logistic
        return float(out) if out.ndim == 0 else out


def logistic(x: float, mu: float, s: float) -> float:
    return 1.0 / (1.0 + math.exp(-(x - mu) / s))


def quality(evaluator: Evaluator, space: SequenceSpace, e: Sequence[int], rng: np.random.Generator | None = None) -> float:
    q = evaluator.squash(merit(space, e))
    if evaluator.sigma > 0:
        if rng is None:
            raise ContractError("noisy evaluator needs an explicit RNG stream")
        q = min(1.0, max(0.0, q + float(rng.normal(0.0, evaluator.sigma))))
    return q


def evaluate(
    space: SequenceSpace,
    evaluator: Evaluator,
    e: Sequence[int],
    rng: np.random.Generator | None,
    m: int = 2,
) -> tuple[float, ...]:
    """Objective vector in ``space.objective_spec(m)`` layout."""
    q = quality(evaluator, space, e, rng)
    if m == 2:
        return (q, cost(space, e))
    return (q, cost(space, e), flops(space, e))


def random_encodings(space: SequenceSpace, n: int, rng: np.random.Generator) -> np.ndarray:
    cols = [rng.integers(0, k, size=n) for k in space.arities]
    return np.stack(cols, axis=1) if cols else np.zeros((n, 0), dtype=int)


def noisy_correlation(space: SequenceSpace, evaluator: Evaluator, n: int, rng: np.random.Generator) -> float:
    """Pearson correlation between noisy and deterministic quality on ``n`` random encodings."""
    enc = random_encodings(space, n, rng)
    clean = evaluator.squash(table_sums(space, "merit_table", enc))
    noisy = np.clip(clean + rng.normal(0.0, evaluator.sigma, size=n), 0.0, 1.0)
    return float(np.corrcoef(clean, noisy)[0, 1])


def calibrate_sigma(
    space: SequenceSpace,
    evaluator: Evaluator,
    target_correlation: float = 0.84,
    n: int = 500,
    seed: int = 0,
) -> float:
    """Noise level whose noisy/clean quality correlation hits ``target_correlation``.

    Starts from the unclipped closed form sd * sqrt(1/r^2 - 1) and refines by
    bisection on a fixed sample, since clipping to [0, 1] shrinks the noise.
    """
    if not 0 < target_correlation < 1:
        raise ContractError("target correlation must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    enc = random_encodings(space, n, rng)
    clean = evaluator.squash(table_sums(space, "merit_table", enc))
    z = rng.normal(0.0, 1.0, size=n)

    def corr(sigma: float) -> float:
        return float(np.corrcoef(clean, np.clip(clean + sigma * z, 0.0, 1.0))[0, 1])

    lo, hi = 0.0, 4.0 * clean.std() * math.sqrt(1.0 / target_correlation**2 - 1.0)
    while corr(hi) > target_correlation:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if corr(mid) > target_correlation:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def space_to_dict(space: SequenceSpace, sigma: float = 0.0) -> dict:
    """Regeneration recipe for a benchmark space."""
    if space.seed is None or space.correlation_strength is None:
        raise ContractError("only seeded benchmark spaces serialize to a recipe")
    return {
        "seed": space.seed,
        "L": space.L,
        "arities": list(space.arities),
        "ranges": {k: list(v) for k, v in space.ranges.items()},
        "correlation_strength": space.correlation_strength,
        "sigma": sigma,
    }


def space_from_dict(d: dict) -> tuple[SequenceSpace, float]:
    space = make_benchmark(
        seed=int(d["seed"]),
        L=int(d["L"]),
        arities=d["arities"],
        correlation_strength=float(d["correlation_strength"]),
        ranges=d.get("ranges"),
    )
    return space, float(d.get("sigma", 0.0))
