"""Temperature and target schedules, plus locality-preserving grid traversals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .objectives import ContractError


@dataclass(frozen=True)
class TemperatureSchedule:
    """Cosine decay from ``t_max`` to ``t_min`` over ``nu + 1`` steps, then restart."""

    t_min: float
    t_max: float
    nu: int

    def __post_init__(self) -> None:
        if not 0 < self.t_min <= self.t_max:
            raise ContractError(f"need 0 < t_min <= t_max, got ({self.t_min}, {self.t_max})")
        if int(self.nu) != self.nu or self.nu < 1:
            raise ContractError(f"period nu must be an integer >= 1, got {self.nu}")

    @classmethod
    def fixed(cls, T: float) -> "TemperatureSchedule":
        return cls(T, T, 1)

    def __call__(self, step: int) -> float:
        return temperature_at(self, step)


ADF_SCHEDULE = TemperatureSchedule(5.0, 10.0, 50)
ADC_SCHEDULE = TemperatureSchedule(1.0, 25.0, 1200)


def temperature_at(s: TemperatureSchedule, step: int) -> float:
    if step < 0:
        raise ContractError(f"step must be >= 0, got {step}")
    phase = step % (s.nu + 1)
    return s.t_min + (s.t_max - s.t_min) / 2 * (1 + math.cos(math.pi * phase / s.nu))


def target_at(tau_min: float, tau_max: float, n_anneal: int, step: int) -> float:
    """Linear target for annealing step ``step`` in 1..n_anneal."""
    if not tau_min < tau_max:
        raise ContractError(f"need tau_min < tau_max, got ({tau_min}, {tau_max})")
    if not 1 <= step <= n_anneal:
        raise ContractError(f"step {step} outside 1..{n_anneal}")
    if step == n_anneal:
        return float(tau_max)
    return tau_min + (tau_max - tau_min) / n_anneal * step


def zigzag_traversal(rows: int, cols: int) -> list[tuple[int, int]]:
    """Visit a rows x cols grid by anti-diagonal strips of alternating direction."""
    if rows < 1 or cols < 1:
        raise ContractError(f"grid dimensions must be >= 1, got {rows}x{cols}")
    order = []
    for d in range(rows + cols - 1):
        lo, hi = max(0, d - cols + 1), min(d, rows - 1)
        rng = range(hi, lo - 1, -1) if d % 2 else range(lo, hi + 1)
        order.extend((i, d - i) for i in rng)
    return order


def _snake(shape: Sequence[int]) -> list[tuple[int, ...]]:
    """Boustrophedon order over ``shape``: each step changes one index by 1."""
    if not shape:
        return [()]
    inner = _snake(shape[1:])
    out = []
    for i in range(shape[0]):
        seq = inner if i % 2 == 0 else inner[::-1]
        out.extend((i,) + rest for rest in seq)
    return out


def grid_traversal(shape: Sequence[int]) -> list[tuple[int, ...]]:
    """Locality-preserving order for a grid of any dimension.

    1-D grids are walked in order, 2-D grids by :func:`zigzag_traversal`;
    higher dimensions snake over the leading axes and zig-zag the last two,
    reversing the zig-zag on alternate outer cells.
    """
    shape = tuple(int(n) for n in shape)
    if not shape or any(n < 1 for n in shape):
        raise ContractError(f"invalid grid shape {shape}")
    if len(shape) == 1:
        return [(i,) for i in range(shape[0])]
    zz = zigzag_traversal(shape[-2], shape[-1])
    if len(shape) == 2:
        return zz
    out = []
    for k, outer in enumerate(_snake(shape[:-2])):
        seq = zz if k % 2 == 0 else zz[::-1]
        out.extend(outer + cell for cell in seq)
    return out


@dataclass(frozen=True)
class TargetGrid:
    """Per-dimension target lists and the order in which grid points are visited."""

    axes: tuple[tuple[float, ...], ...]
    order: tuple[tuple[int, ...], ...]

    @classmethod
    def regular(cls, ranges: Sequence[tuple[float, float]], counts: Sequence[int]) -> "TargetGrid":
        """Evenly spaced targets per axis, endpoints included, in zig-zag order."""
        if len(ranges) != len(counts):
            raise ContractError("ranges and counts differ in length")
        axes = tuple(tuple(linspace(lo, hi, n)) for (lo, hi), n in zip(ranges, counts))
        return cls(axes, tuple(grid_traversal([len(a) for a in axes])))

    def __len__(self) -> int:
        return len(self.order)

    def targets(self) -> list[tuple[float, ...]]:
        return [tuple(self.axes[d][i] for d, i in enumerate(idx)) for idx in self.order]


def linspace(lo: float, hi: float, n: int) -> list[float]:
    if n < 1:
        raise ContractError("need at least one point")
    if n == 1:
        return [float(lo)]
    return [lo + (hi - lo) * i / (n - 1) if i < n - 1 else float(hi) for i in range(n)]
