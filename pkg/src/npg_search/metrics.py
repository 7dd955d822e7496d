"""Front-quality metrics and sample histograms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .objectives import ContractError, ObjectiveSpec, Orientation, ParetoArchive


@dataclass(frozen=True)
class NormalizationSpec:
    """Affine map of native objective values onto maximize-in-[0, 1] axes."""

    ranges: tuple[tuple[float, float], ...]
    orientations: tuple[Orientation, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranges", tuple((float(lo), float(hi)) for lo, hi in self.ranges))
        object.__setattr__(self, "orientations", tuple(Orientation(o) for o in self.orientations))
        if len(self.ranges) != len(self.orientations):
            raise ContractError("ranges and orientations differ in length")
        for lo, hi in self.ranges:
            if not lo < hi:
                raise ContractError(f"normalization range needs lo < hi, got ({lo}, {hi})")

    @classmethod
    def from_spec(cls, spec: ObjectiveSpec) -> "NormalizationSpec":
        return cls(spec.ranges, spec.orientations)

    @property
    def m(self) -> int:
        return len(self.ranges)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Normalize and clip rows of native values into the unit cube."""
        values = np.atleast_2d(np.asarray(values, dtype=float))
        lo = np.array([r[0] for r in self.ranges])
        hi = np.array([r[1] for r in self.ranges])
        scaled = (values - lo) / (hi - lo)
        flip = np.array([o is Orientation.MINIMIZE for o in self.orientations])
        scaled[:, flip] = 1.0 - scaled[:, flip]
        return np.clip(scaled, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"ranges": [list(r) for r in self.ranges], "orientations": [o.value for o in self.orientations]}


def _front_values(front: ParetoArchive | np.ndarray) -> np.ndarray:
    if isinstance(front, ParetoArchive):
        return front.values
    return np.asarray(front, dtype=float)


def _area_2d(points: np.ndarray, ref: Sequence[float] = (0.0, 0.0)) -> float:
    """Area dominated by maximize-oriented ``points`` above ``ref``, by rectangle sweep."""
    if len(points) == 0:
        return 0.0
    pts = points[np.argsort(-points[:, 0], kind="stable")]
    area = 0.0
    best_y = ref[1]
    for i, (x, y) in enumerate(pts):
        best_y = max(best_y, y)
        next_x = pts[i + 1, 0] if i + 1 < len(pts) else ref[0]
        area += (x - next_x) * (best_y - ref[1])
    return float(area)


def dominated_area_2d(front: ParetoArchive | np.ndarray, norm: NormalizationSpec) -> float:
    """Area of the unit square dominated-or-equalled by the normalized front."""
    if norm.m != 2:
        raise ContractError(f"dominated area needs 2 objectives, got {norm.m}")
    values = _front_values(front)
    if len(values) == 0:
        return 0.0
    return _area_2d(norm.apply(values))


def hypervolume(
    front: ParetoArchive | np.ndarray,
    norm: NormalizationSpec,
    reference_point: Sequence[float] | None = None,
) -> float:
    """Dominated volume above ``reference_point`` in normalized space (m = 2 or 3).

    The 3-D case sweeps slices along the last axis, from its largest value
    down to the reference, summing 2-D areas.
    """
    if norm.m not in (2, 3):
        raise ContractError(f"hypervolume supports 2 or 3 objectives, got {norm.m}")
    ref = np.zeros(norm.m) if reference_point is None else np.asarray(reference_point, dtype=float)
    values = _front_values(front)
    if len(values) == 0:
        return 0.0
    pts = norm.apply(values)
    if np.any(pts < ref):
        raise ContractError("reference point must be dominated by every normalized front point")
    if norm.m == 2:
        return _area_2d(pts, ref)
    order = np.argsort(-pts[:, 2], kind="stable")
    pts = pts[order]
    volume = 0.0
    for i in range(len(pts)):
        z_hi = pts[i, 2]
        z_lo = pts[i + 1, 2] if i + 1 < len(pts) else ref[2]
        if z_hi > z_lo:
            volume += _area_2d(pts[: i + 1, :2], ref[:2]) * (z_hi - z_lo)
    return float(volume)


def histogram(values: Sequence[float], lo: float, hi: float, bins: int) -> list[int]:
    """Equal-width bin counts over [lo, hi]; out-of-range values land in the edge bins."""
    if bins < 1:
        raise ContractError(f"bins must be >= 1, got {bins}")
    v = np.asarray(values, dtype=float)
    idx = np.floor((v - lo) / (hi - lo) * bins).astype(int)
    idx = np.clip(idx, 0, bins - 1)
    return np.bincount(idx, minlength=bins).tolist()


def sample_histogram(record, axis: int, bins: int, norm: NormalizationSpec | None = None) -> list[int]:
    """Histogram of one objective over a run's recorded samples."""
    norm = norm or NormalizationSpec.from_spec(record.spec)
    lo, hi = norm.ranges[axis]
    return histogram([s.objectives[axis] for s in record.samples], lo, hi, bins)


def run_metrics(record, bins: int = 10) -> dict:
    """Contents of a run's metrics.json."""
    norm = NormalizationSpec.from_spec(record.spec)
    front = record.final_front
    out = {
        "algorithm": record.algorithm,
        "seed": record.seed,
        "config_fingerprint": record.fingerprint,
        "space_fingerprint": record.space_fingerprint,
        "n_samples": len(record.samples),
        "front_size": len(front),
        "dominated_area": dominated_area_2d(front, norm) if norm.m == 2 else None,
        "hypervolume": hypervolume(front, norm),
        "reference_point": [0.0] * norm.m,
        "normalization": norm.to_dict(),
        "histograms": {
            name: sample_histogram(record, k, bins, norm) for k, name in enumerate(record.spec.names)
        },
    }
    return out
