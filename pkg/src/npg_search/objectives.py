"""Objective vectors, Pareto dominance and the live Pareto archive."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class ContractError(ValueError):
    """Raised when an input violates an operation's preconditions."""


class Orientation(str, enum.Enum):
    MAXIMIZE = "max"
    MINIMIZE = "min"


Encoding = tuple[int, ...]
ObjectiveVector = tuple[float, ...]


@dataclass(frozen=True)
class ObjectiveSpec:
    """Orientation, labels and native-unit ranges of ``m`` objectives."""

    orientations: tuple[Orientation, ...]
    names: tuple[str, ...]
    ranges: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "orientations", tuple(Orientation(o) for o in self.orientations))
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "ranges", tuple((float(lo), float(hi)) for lo, hi in self.ranges))
        m = len(self.orientations)
        if m < 2:
            raise ContractError(f"need at least 2 objectives, got {m}")
        if len(self.names) != m or len(self.ranges) != m:
            raise ContractError("orientations, names and ranges must have equal length")
        for name, (lo, hi) in zip(self.names, self.ranges):
            if not lo < hi:
                raise ContractError(f"range of {name!r} must satisfy lo < hi, got ({lo}, {hi})")

    @property
    def m(self) -> int:
        return len(self.orientations)

    @property
    def signs(self) -> np.ndarray:
        """+1 for maximized axes, -1 for minimized ones."""
        return np.array([1.0 if o is Orientation.MAXIMIZE else -1.0 for o in self.orientations])

    def check(self, values: Sequence[float]) -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.m,):
            raise ContractError(f"objective vector has shape {arr.shape}, expected ({self.m},)")
        if not np.all(np.isfinite(arr)):
            raise ContractError(f"objective vector has non-finite entries: {values!r}")
        return arr

    def check_rows(self, rows: Sequence[Sequence[float]]) -> np.ndarray:
        """Validate many objective vectors at once; returns an (n, m) array."""
        try:
            arr = np.array(rows, dtype=float)
        except ValueError as exc:
            raise ContractError(f"objective vectors are ragged or non-numeric: {exc}") from exc
        if arr.ndim != 2 or arr.shape[1] != self.m:
            raise ContractError(f"objective vectors have shape {arr.shape}, expected (n, {self.m})")
        if not np.all(np.isfinite(arr)):
            raise ContractError("objective vectors have non-finite entries")
        return arr

    def to_dict(self) -> dict:
        return {
            "orientations": [o.value for o in self.orientations],
            "names": list(self.names),
            "ranges": [list(r) for r in self.ranges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectiveSpec":
        return cls(
            orientations=tuple(d["orientations"]),
            names=tuple(d["names"]),
            ranges=tuple(tuple(r) for r in d["ranges"]),
        )


def dominates(a: Sequence[float], b: Sequence[float], spec: ObjectiveSpec) -> bool:
    """True iff ``a`` is no worse than ``b`` on every axis and strictly better on one."""
    sa = spec.check(a) * spec.signs
    sb = spec.check(b) * spec.signs
    return bool(np.all(sa >= sb) and np.any(sa > sb))


def _dominance_masks(signed: np.ndarray, point: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Masks over rows of ``signed``: (row dominates point, point dominates row)."""
    ge = signed >= point
    le = signed <= point
    gt = signed > point
    lt = signed < point
    dominators = ge.all(axis=1) & gt.any(axis=1)
    dominated = le.all(axis=1) & lt.any(axis=1)
    return dominators, dominated


@dataclass
class Inserted:
    removed: list[tuple[Encoding, ObjectiveVector]] = field(default_factory=list)


@dataclass
class Dominated:
    pass


InsertOutcome = Inserted | Dominated


class ParetoArchive:
    """Mutually non-dominated set of evaluated encodings.

    Storage is a flat table with linear scans. Entries are unique by encoding;
    a re-offered encoding replaces its stored vector only when the new vector
    is not dominated by the archive.
    """

    def __init__(self, spec: ObjectiveSpec, entries: Iterable[tuple[Encoding, Sequence[float]]] = ()):
        self.spec = spec
        self._signs = spec.signs
        self._encodings: list[Encoding] = []
        self._values = np.empty((0, spec.m))
        for enc, vec in entries:
            self.insert(enc, vec)

    def __len__(self) -> int:
        return len(self._encodings)

    def __iter__(self):
        return iter(self.entries())

    def __contains__(self, encoding: object) -> bool:
        return encoding in self._encodings

    def entries(self) -> list[tuple[Encoding, ObjectiveVector]]:
        return [(enc, tuple(float(v) for v in row)) for enc, row in zip(self._encodings, self._values)]

    @property
    def values(self) -> np.ndarray:
        """Objective table in native units, one row per entry (read-only copy)."""
        return self._values.copy()

    def as_set(self) -> set[tuple[Encoding, ObjectiveVector]]:
        return set(self.entries())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParetoArchive):
            return NotImplemented
        return self.spec == other.spec and self.as_set() == other.as_set()

    @classmethod
    def from_arrays(cls, spec: ObjectiveSpec, encodings, values: np.ndarray) -> "ParetoArchive":
        """Wrap rows already known to be mutually non-dominated and unique by encoding."""
        out = cls(spec)
        out._encodings = [tuple(int(d) for d in row) for row in encodings]
        out._values = np.asarray(values, dtype=float).reshape(len(out._encodings), spec.m).copy()
        return out

    def copy(self) -> "ParetoArchive":
        out = ParetoArchive(self.spec)
        out._encodings = list(self._encodings)
        out._values = self._values.copy()
        return out

    def insert(self, encoding: Sequence[int], values: Sequence[float]) -> InsertOutcome:
        enc = tuple(int(d) for d in encoding)
        vec = self.spec.check(values)
        if not self._encodings:
            self._encodings.append(enc)
            self._values = vec[None, :].copy()
            return Inserted([])
        dominators, dominated = _dominance_masks(self._values * self._signs, vec * self._signs)
        if dominators.any():
            return Dominated()
        drop = dominated.copy()
        if enc in self._encodings:
            drop[self._encodings.index(enc)] = True
        removed = [self._entry(i) for i in np.flatnonzero(drop)]
        keep = ~drop
        self._encodings = [e for e, k in zip(self._encodings, keep) if k] + [enc]
        self._values = np.vstack([self._values[keep], vec[None, :]])
        return Inserted(removed)

    def stats(self, candidate: Sequence[float], epsilon: Sequence[float]) -> tuple[int, int, int]:
        """Return (n_dominators, n_dominated, density) of ``candidate`` w.r.t. the archive.

        Density counts entries inside the closed per-axis box |diff_i| <= epsilon_i,
        coincident entries included.
        """
        vec = self.spec.check(candidate)
        eps = np.asarray(epsilon, dtype=float)
        if eps.shape != (self.spec.m,) or np.any(eps < 0):
            raise ContractError(f"epsilon must hold {self.spec.m} non-negative radii, got {epsilon!r}")
        if not self._encodings:
            return 0, 0, 0
        dominators, dominated = _dominance_masks(self._values * self._signs, vec * self._signs)
        density = np.all(np.abs(self._values - vec) <= eps, axis=1)
        return int(dominators.sum()), int(dominated.sum()), int(density.sum())

    def _entry(self, i: int) -> tuple[Encoding, ObjectiveVector]:
        return self._encodings[i], tuple(float(v) for v in self._values[i])

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "entries": [
                {"encoding": list(enc), "objectives": list(vec)} for enc, vec in sorted(self.entries())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParetoArchive":
        spec = ObjectiveSpec.from_dict(d["spec"])
        return cls(spec, [(tuple(e["encoding"]), e["objectives"]) for e in d["entries"]])


def archive_insert(archive: ParetoArchive, candidate: tuple[Sequence[int], Sequence[float]]) -> InsertOutcome:
    return archive.insert(*candidate)


def archive_stats(
    archive: ParetoArchive, candidate: Sequence[float], epsilon: Sequence[float]
) -> tuple[int, int, int]:
    return archive.stats(candidate, epsilon)


def non_dominated_mask(values: np.ndarray, spec: ObjectiveSpec) -> np.ndarray:
    """Boolean mask of rows not dominated by any other row (ties survive)."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        return np.zeros(0, dtype=bool)
    signed = values * spec.signs
    if spec.m == 2:
        return _non_dominated_mask_2d(signed)
    # Lexicographic best-first order: a row can only be dominated by rows before it.
    order = np.lexsort(tuple(-signed[:, k] for k in reversed(range(spec.m))))
    mask = np.zeros(n, dtype=bool)
    front = np.empty((0, spec.m))
    for idx in order:
        p = signed[idx]
        if len(front) and np.any(np.all(front >= p, axis=1) & np.any(front > p, axis=1)):
            continue
        mask[idx] = True
        front = np.vstack([front, p])
    return mask


def _non_dominated_mask_2d(signed: np.ndarray) -> np.ndarray:
    # Sort by first coordinate, then second, both descending. Within a run of
    # equal first coordinates only the top second coordinate can survive, and
    # only if it beats every run with a strictly larger first coordinate.
    order = np.lexsort((-signed[:, 1], -signed[:, 0]))
    xs, ys = signed[order, 0], signed[order, 1]
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    group = np.cumsum(np.r_[True, xs[1:] != xs[:-1]]) - 1
    tops = ys[starts]
    prev_best = np.r_[-np.inf, np.maximum.accumulate(tops)[:-1]]
    keep_sorted = (ys == tops[group]) & (tops[group] > prev_best[group])
    mask = np.zeros(len(signed), dtype=bool)
    mask[order[keep_sorted]] = True
    return mask


def extract_pareto_front(
    points: Sequence[tuple[Sequence[int], Sequence[float]]], spec: ObjectiveSpec
) -> ParetoArchive:
    """Keep exactly the points not dominated by any other point.

    When the same encoding survives more than once (noisy re-evaluations), the
    last occurrence wins, which mirrors sequential archive insertion.
    """
    archive = ParetoArchive(spec)
    if len(points) == 0:
        return archive
    values = spec.check_rows([v for _, v in points])
    mask = non_dominated_mask(values, spec)
    chosen: dict[Encoding, int] = {}
    for i in np.flatnonzero(mask):
        chosen[tuple(int(d) for d in points[i][0])] = int(i)
    keep = sorted(chosen.values())
    return ParetoArchive.from_arrays(spec, [points[i][0] for i in keep], values[keep])
