"""Non-stationary rewards: annealed desirability and dominance-based credit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .objectives import ContractError, ParetoArchive


@dataclass(frozen=True)
class DesirabilitySpec:
    tau: float
    delta: float

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ContractError(f"desirability width must be positive, got {self.delta}")


@dataclass(frozen=True)
class AdcSpec:
    epsilon: tuple[float, ...]
    c: float = 10.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", tuple(float(x) for x in self.epsilon))
        if not self.c > 0:
            raise ContractError(f"scaling constant must be positive, got {self.c}")
        if any(x < 0 for x in self.epsilon):
            raise ContractError("density radii must be non-negative")


def desirability(f2: float, d: DesirabilitySpec) -> float:
    """Triangular "target is best" desirability: 1 at tau, 0 beyond tau +/- delta."""
    gap = abs(d.tau - f2)
    if gap > d.delta:
        return 0.0
    return 1.0 - gap / d.delta


def adf_reward(quality: float, constrained_objs: Sequence[float], specs: Sequence[DesirabilitySpec]) -> float:
    if len(constrained_objs) != len(specs):
        raise ContractError(f"{len(constrained_objs)} constrained objectives but {len(specs)} desirability specs")
    r = quality
    for f, d in zip(constrained_objs, specs):
        r *= desirability(f, d)
    return r


def adc_reward(candidate: Sequence[float], archive: ParetoArchive, spec: AdcSpec) -> float:
    """Dominance credit of ``candidate`` against the archive as it stands (pre-insert)."""
    n_dominators, n_dominated, density = archive.stats(candidate, spec.epsilon)
    if n_dominators > 0:
        return -math.tanh((n_dominators + density) / spec.c)
    return math.tanh((len(archive) + n_dominated) / spec.c)
