"""Quantizer geometry: Voronoi assignment, the linearised loss and distortions.

Points are stored as float arrays of shape ``(n, d)``. One-dimensional input
of shape ``(n,)`` is read as ``n`` scalar points.

Cell indices are 0-based. A point on the boundary of several cells belongs to
the one with the smallest index, so every point has exactly one cell even when
centers are duplicated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from momquant.errors import DimensionMismatchError, MomQuantError

_POWER_ITER_CAP = 10_000
_POWER_ITER_RTOL = 1e-9
_POWER_ITER_SEED = 0x5EED


def as_points(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite float array of shape ``(n, d)``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise MomQuantError(f"expected points of shape (n, d), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MomQuantError("points must have finite coordinates")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {arr.shape[1]}")
    return arr


@dataclass(frozen=True, eq=False)
class Quantizer:
    """An ordered tuple of centers. Order matters for tie-breaking."""

    centers: np.ndarray

    def __post_init__(self):
        c = as_points(self.centers)
        if len(c) == 0:
            raise MomQuantError("a quantizer needs at least one center")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @classmethod
    def of(cls, *centers) -> "Quantizer":
        """``Quantizer.of(-1, 1)`` or ``Quantizer.of((0, 1), (1, 0))``."""
        return cls(np.array(centers, dtype=float))

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return len(self.centers)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Quantizer):
            return NotImplemented
        return self.centers.shape == other.centers.shape and bool(
            np.array_equal(self.centers, other.centers)
        )

    def __hash__(self) -> int:
        return hash((self.centers.shape, self.centers.tobytes()))

    def __repr__(self) -> str:
        if self.dim == 1:
            body = ", ".join(repr(float(v)) for v in self.centers[:, 0])
        else:
            body = ", ".join(repr(tuple(float(v) for v in c)) for c in self.centers)
        return f"Quantizer({body})"

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.centers**2, axis=1))

    def shifted(self, t) -> "Quantizer":
        return Quantizer(self.centers + np.asarray(t, dtype=float))

    def padded(self, k: int) -> "Quantizer":
        """Append copies of the last center until there are ``k`` centers."""
        if len(self) >= k:
            return self
        extra = np.repeat(self.centers[-1:], k - len(self), axis=0)
        return Quantizer(np.vstack([self.centers, extra]))


@dataclass(frozen=True, eq=False)
class Dataset:
    points: np.ndarray
    seed: int | None = None
    generator_tag: str = "user"

    def __post_init__(self):
        pts = as_points(self.points)
        if len(pts) == 0:
            raise MomQuantError("a dataset needs at least one point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class MomentSummary:
    mean: np.ndarray
    second_moment: float
    trace_cov: float
    lambda_max: float
    extra: dict = field(default_factory=dict, compare=False)


def _points_of(data) -> np.ndarray:
    return data.points if isinstance(data, Dataset) else as_points(data)


def _check_dims(x: np.ndarray, A: Quantizer) -> None:
    if x.shape[1] != A.dim:
        raise DimensionMismatchError(
            f"points have dimension {x.shape[1]} but quantizer has dimension {A.dim}"
        )


def squared_distances(x, A: Quantizer) -> np.ndarray:
    """Matrix of ``||x_i - a_j||^2`` with shape ``(n, len(A))``.

    Coordinates are accumulated in index order, so equal centers give bitwise
    equal columns.
    """
    pts = as_points(x, dim=A.dim if np.ndim(x) == 1 else None)
    _check_dims(pts, A)
    diff = pts[:, None, :] - A.centers[None, :, :]
    return np.sum(diff * diff, axis=2)


def assign(x, A: Quantizer) -> np.ndarray:
    """Voronoi cell index of every point, ties to the smallest index."""
    # argmin returns the first minimiser, which is exactly the tie rule.
    return np.argmin(squared_distances(x, A), axis=1)


def voronoi_index(x, A: Quantizer) -> int:
    """Cell index of a single point."""
    pts = as_points(x, dim=A.dim)
    if len(pts) != 1:
        raise MomQuantError("voronoi_index takes a single point")
    return int(assign(pts, A)[0])


def losses(x, A: Quantizer) -> np.ndarray:
    """Per-point ``l_A(x) = min_a (-2<x, a> + ||a||^2)``."""
    pts = as_points(x, dim=A.dim if np.ndim(x) == 1 else None)
    _check_dims(pts, A)
    sq = np.sum(A.centers * A.centers, axis=1)
    return np.min(sq[None, :] - 2.0 * (pts @ A.centers.T), axis=1)


def loss_l(x, A: Quantizer) -> float:
    pts = as_points(x, dim=A.dim)
    if len(pts) != 1:
        raise MomQuantError("loss_l takes a single point; use losses() for arrays")
    return float(losses(pts, A)[0])


def empirical_distortion(data, A: Quantizer) -> float:
    """Average squared distance from each point to its nearest center."""
    pts = _points_of(data)
    return float(np.mean(np.min(squared_distances(pts, A), axis=1)))


def empirical_cell_masses(data, A: Quantizer) -> np.ndarray:
    pts = _points_of(data)
    counts = np.bincount(assign(pts, A), minlength=len(A))
    return counts / len(pts)


def moment_summary(data) -> MomentSummary:
    pts = _points_of(data)
    mean = pts.mean(axis=0)
    second = float(np.mean(np.sum(pts * pts, axis=1)))
    centered = pts - mean
    cov = centered.T @ centered / len(pts)
    trace = float(np.trace(cov))
    return MomentSummary(
        mean=mean, second_moment=second, trace_cov=trace, lambda_max=_top_eigenvalue(cov)
    )


def _top_eigenvalue(cov: np.ndarray) -> float:
    d = cov.shape[0]
    if d == 1:
        return float(cov[0, 0])
    if not np.any(cov):
        return 0.0
    v = np.random.default_rng(_POWER_ITER_SEED).random(d) + 0.5
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(_POWER_ITER_CAP):
        w = cov @ v
        new_lam = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(new_lam - lam) <= _POWER_ITER_RTOL * abs(new_lam):
            return new_lam
        lam = new_lam
    return lam
