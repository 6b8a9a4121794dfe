"""The n-dimensional axisymmetric cross: a center plus n cohorts of K
equally spaced collinear points along each coordinate axis."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .lp import _readonly


@dataclass(frozen=True)
class Cross:
    center: np.ndarray
    spacing: float
    points_per_cohort: int

    def __post_init__(self):
        center = _readonly(self.center)
        if center.ndim != 1 or center.shape[0] < 2:
            raise ValueError("cross dimension must be >= 2")
        if self.spacing <= 0.0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        k = self.points_per_cohort
        if int(k) != k or k < 2 or k % 2 != 0:
            raise ValueError(f"points per cohort must be an even integer >= 2, got {k!r}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "points_per_cohort", int(k))

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    @property
    def total_points(self) -> int:
        # center plus n*K cohort members
        return self.dimension * self.points_per_cohort + 1


@dataclass(frozen=True, order=True)
class Marker:
    """Identifies a cohort point: cohort index and signed step count from
    the center. Offset zero is reserved for the center, which belongs to
    no cohort and therefore has no marker."""

    cohort: int
    offset: int


def _offsets(k: int) -> list[int]:
    half = k // 2
    return [e for e in range(-half, half + 1) if e != 0]


def _check_marker(cross: Cross, m: Marker) -> None:
    if not 0 <= m.cohort < cross.dimension:
        raise ValueError(f"cohort {m.cohort} out of range for dimension {cross.dimension}")
    if m.offset == 0 or abs(m.offset) > cross.points_per_cohort // 2:
        raise ValueError(f"offset {m.offset} out of range for K={cross.points_per_cohort}")


def point_of(cross: Cross, m: Marker) -> np.ndarray:
    """Coordinates of the marked point: center + offset * spacing * e_cohort."""
    _check_marker(cross, m)
    p = cross.center.copy()
    p[m.cohort] += m.offset * cross.spacing
    return p


def marker_of(cross: Cross, point: np.ndarray) -> Marker:
    """Inverse of ``point_of`` for points that lie exactly on the cross."""
    point = np.asarray(point, dtype=np.float64)
    if point.shape != cross.center.shape:
        raise ValueError("point has wrong dimension")
    diff = point != cross.center
    where = np.nonzero(diff)[0]
    if len(where) != 1:
        raise ValueError("point is the center or not a cross point")
    chi = int(where[0])
    eta = int(round((point[chi] - cross.center[chi]) / cross.spacing))
    m = Marker(chi, eta)
    _check_marker(cross, m)
    if not np.array_equal(point_of(cross, m), point):
        raise ValueError("point does not lie exactly on the cross")
    return m


def markers(cross: Cross) -> list[Marker]:
    """All n*K markers, cohort-major, offsets ascending (zero skipped)."""
    offs = _offsets(cross.points_per_cohort)
    return [Marker(chi, eta) for chi in range(cross.dimension) for eta in offs]


def cohort_markers(cross: Cross, chi: int) -> list[Marker]:
    """The K markers of one cohort, offsets ascending."""
    if not 0 <= chi < cross.dimension:
        raise ValueError(f"cohort {chi} out of range for dimension {cross.dimension}")
    return [Marker(chi, eta) for eta in _offsets(cross.points_per_cohort)]


def recenter(cross: Cross, new_center: np.ndarray) -> Cross:
    new_center = np.asarray(new_center, dtype=np.float64)
    if new_center.shape != cross.center.shape:
        raise ValueError("new center has wrong dimension")
    return replace(cross, center=new_center)
