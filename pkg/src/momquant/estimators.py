"""Empirical and median-of-means k-means estimators.

Each estimator is an argmin of a non-convex criterion over quantizers with at
most ``k`` centers. :func:`fit` searches it by generating candidates (multi-
restart Lloyd runs, a MOM-monotone refinement of each start, a one-center
robust mean and any caller-supplied quantizers) and selecting the best
candidate that satisfies the estimator's constraint. For ``erm`` on the line
``exact_1d`` replaces the search with the exact dynamic program on the
empirical measure.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from momquant.distributions import (
    DiscreteDistribution,
    exact_distortion,
    optimal_distortion_1d,
    optimal_quantizer_centers_1d,
)
from momquant.errors import MomQuantError
from momquant.momcore import (
    BlockPartition,
    BlockPolicy,
    PolicyKind,
    make_partition,
    median_odd,
    mom_criterion,
)
from momquant.quantcore import (
    Dataset,
    Quantizer,
    assign,
    empirical_cell_masses,
    empirical_distortion,
    squared_distances,
)
from momquant.rng import derive_seed, generator, uniforms

log = logging.getLogger(__name__)

NEGATIVE_EXCESS_TOL = 1e-10


class EstimatorKind(str, Enum):
    ERM = "erm"
    MOM_MAGNITUDE = "mom_magnitude"
    MOM_PMIN = "mom_pmin"
    MOM_FREE = "mom_free"


_POLICY = {
    EstimatorKind.MOM_MAGNITUDE: PolicyKind.MAGNITUDE_M,
    EstimatorKind.MOM_PMIN: PolicyKind.PMIN_CONSTRAINED,
    EstimatorKind.MOM_FREE: PolicyKind.PARAMETER_FREE,
}

SEEDINGS = ("kpp", "random_points", "grid_1d")


@dataclass(frozen=True)
class SearchStrategy:
    restarts: int = 8
    max_iters: int = 100
    seeding: str = "kpp"
    include_mom_mean_singleton: bool = True
    exact_1d: bool = False

    def __post_init__(self):
        if self.restarts < 1:
            raise MomQuantError("restarts must be at least 1")
        if self.max_iters < 0:
            raise MomQuantError("max_iters must be nonnegative")
        if self.seeding not in SEEDINGS:
            raise MomQuantError(f"unknown seeding {self.seeding!r}; expected one of {SEEDINGS}")


@dataclass(frozen=True)
class EstimatorConfig:
    kind: EstimatorKind
    k: int
    delta: float = 0.05
    magnitude: float | None = None
    pmin: float | None = None
    search: SearchStrategy = field(default_factory=SearchStrategy)

    def __post_init__(self):
        object.__setattr__(self, "kind", EstimatorKind(self.kind))
        if self.k < 1:
            raise MomQuantError("k must be at least 1")
        if not 0.0 < self.delta < 1.0:
            raise MomQuantError(f"delta must lie in (0, 1), got {self.delta}")
        if self.kind is EstimatorKind.MOM_MAGNITUDE and not (self.magnitude and self.magnitude > 0):
            raise MomQuantError("mom_magnitude needs a magnitude bound M > 0")
        if self.kind is EstimatorKind.MOM_PMIN and not (self.pmin and 0.0 < self.pmin < 1.0):
            raise MomQuantError("mom_pmin needs p_min in (0, 1)")
        if self.search.exact_1d and self.kind is not EstimatorKind.ERM:
            raise MomQuantError("exact_1d is only available for erm")

    def policy(self) -> BlockPolicy | None:
        if self.kind is EstimatorKind.ERM:
            return None
        return BlockPolicy(_POLICY[self.kind], self.delta)


@dataclass(frozen=True)
class Candidate:
    quantizer: Quantizer
    criterion: float
    admissible: bool
    origin: str


@dataclass(frozen=True)
class FitResult:
    quantizer: Quantizer
    criterion_value: float
    candidates_evaluated: int
    feasible: bool
    diagnostics: dict
    ell: int | None = None
    candidates: tuple[Candidate, ...] = ()


def localization_radii(second_moment: float, pmin: float | None = None) -> dict[str, float]:
    """Radii that contain the smallest (``m``) and, given ``pmin``, every (``M``)
    center of a MOM solution with high probability."""
    out = {"m": 4.0 * math.sqrt(2.0 * second_moment)}
    if pmin is not None:
        out["M"] = 10.0 * math.sqrt(second_moment / pmin)
    return out


# -- seeding -----------------------------------------------------------------


def _kpp(points: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    n = len(points)
    first = min(int(uniforms(gen, 1)[0] * n), n - 1)
    centers = [points[first]]
    d2 = np.sum((points - points[first]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        u = uniforms(gen, 1)[0]
        if total > 0.0:
            idx = int(np.searchsorted(np.cumsum(d2), u * total, side="right"))
        else:
            idx = int(u * n)
        idx = min(idx, n - 1)
        centers.append(points[idx])
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return np.array(centers)


def _random_points(points: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    idx = np.argsort(uniforms(gen, len(points)), kind="stable")[:k]
    return points[idx]


def _grid_1d(points: np.ndarray, k: int, gen: np.random.Generator, restart: int) -> np.ndarray:
    if points.shape[1] != 1:
        raise MomQuantError("grid_1d seeding needs one-dimensional data")
    offsets = np.full(k, 0.5) if restart == 0 else uniforms(gen, k)
    q = np.clip((np.arange(k) + offsets) / k, 0.0, 1.0)
    return np.quantile(points[:, 0], q, method="inverted_cdf").reshape(k, 1)


def initial_centers(points: np.ndarray, k: int, seeding: str, seed: int, restart: int = 0) -> np.ndarray:
    gen = generator(seed)
    if seeding == "kpp":
        return _kpp(points, k, gen)
    if seeding == "random_points":
        return _random_points(points, k, gen)
    return _grid_1d(points, k, gen, restart)


# -- Lloyd-type updates ----------------------------------------------------------


def _cell_means(points: np.ndarray, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(labels, minlength=k)
    sums = np.column_stack(
        [np.bincount(labels, weights=points[:, c], minlength=k) for c in range(points.shape[1])]
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        means = sums / counts[:, None]
    return means, counts


def _project_to_ball(centers: np.ndarray, radius: float) -> np.ndarray:
    norms = np.sqrt(np.sum(centers**2, axis=1))
    scale = np.where(norms > radius, radius / np.where(norms > 0, norms, 1.0), 1.0)
    return centers * scale[:, None]


def _reseed_empty(points: np.ndarray, centers: np.ndarray, empty: np.ndarray) -> np.ndarray:
    """Move each empty-cell center onto the point currently worst served."""
    centers = centers.copy()
    live = ~empty
    if not live.any():
        live = np.zeros(len(centers), dtype=bool)
        live[0] = True
    d2 = np.min(squared_distances(points, Quantizer(centers[live])), axis=1)
    for j in np.flatnonzero(empty):
        idx = int(np.argmax(d2))
        centers[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return centers


def _drop_empty(points: np.ndarray, centers: np.ndarray) -> Quantizer:
    labels = assign(points, Quantizer(centers))
    keep = np.bincount(labels, minlength=len(centers)) > 0
    return Quantizer(centers[keep])


def lloyd(
    points: np.ndarray,
    init: np.ndarray,
    max_iters: int,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Quantizer:
    """Classical Lloyd iterations; centers whose cells end empty are dropped."""
    centers = np.array(init, dtype=float)
    if project is not None:
        centers = project(centers)
    k = len(centers)
    for _ in range(max_iters):
        labels = assign(points, Quantizer(centers))
        means, counts = _cell_means(points, labels, k)
        new = np.where(counts[:, None] > 0, means, centers)
        empty = counts == 0
        if empty.any():
            new = _reseed_empty(points, new, empty)
        if project is not None:
            new = project(new)
        if np.array_equal(new, centers):
            break
        centers = new
    return _drop_empty(points, centers)


def lloyd_mom_refine(
    data,
    A: Quantizer,
    part: BlockPartition,
    iters: int,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Quantizer:
    """Lloyd steps kept only while the MOM criterion does not increase.

    Stops after ``iters`` steps, at a fixed point, or at the first step that
    would raise the criterion. Empty cells keep their centers.
    """
    points = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    centers = np.array(A.centers)
    crit = mom_criterion(points, A, part)
    k = len(centers)
    for _ in range(iters):
        labels = assign(points, Quantizer(centers))
        means, counts = _cell_means(points, labels, k)
        new = np.where(counts[:, None] > 0, means, centers)
        if project is not None:
            new = project(new)
        if np.array_equal(new, centers):
            break
        new_crit = mom_criterion(points, Quantizer(new), part)
        if new_crit > crit:
            break
        centers, crit = new, new_crit
    return Quantizer(centers)


def coordinatewise_mom(points: np.ndarray, part: BlockPartition) -> np.ndarray:
    means = part.arrange(points).mean(axis=1)
    return np.array([median_odd(means[:, c]) for c in range(points.shape[1])])


# -- fitting -----------------------------------------------------------------------


def _erm_exact_1d(data: Dataset, k: int) -> Quantizer:
    if data.dim != 1:
        raise MomQuantError("exact_1d needs one-dimensional data")
    emp = DiscreteDistribution.empirical(data)
    return optimal_quantizer_centers_1d(emp, k).padded(k)


def fit(data: Dataset, config: EstimatorConfig, seed: int = 0, extra_candidates: Sequence[Quantizer] = ()) -> FitResult:
    """Fit one estimator. The result is a deterministic function of the arguments.

    ``extra_candidates`` (for instance a known optimal quantizer) are scored
    alongside the generated ones under the same criterion and constraint.
    """
    if not isinstance(data, Dataset):
        data = Dataset(data)
    points = data.points
    k = config.k
    if data.n < k:
        raise MomQuantError(f"need at least k={k} points, got {data.n}")
    policy = config.policy()
    part = make_partition(data.n, policy) if policy is not None else None
    search = config.search

    project = None
    if config.kind is EstimatorKind.MOM_MAGNITUDE:
        radius = float(config.magnitude)
        project = lambda c: _project_to_ball(c, radius)  # noqa: E731

    if part is None:
        criterion = lambda A: empirical_distortion(points, A)  # noqa: E731
    else:
        criterion = lambda A: mom_criterion(points, A, part)  # noqa: E731

    def admissible(A: Quantizer) -> bool:
        if config.kind is EstimatorKind.MOM_PMIN:
            return bool(empirical_cell_masses(points, A).min() >= config.pmin / 2.0)
        if config.kind is EstimatorKind.MOM_MAGNITUDE:
            return bool(np.all(A.norms() <= config.magnitude + 1e-12))
        return True

    proposals: list[tuple[str, Quantizer]] = []
    if search.exact_1d:
        proposals.append(("exact_1d", _erm_exact_1d(data, k)))
    else:
        if search.include_mom_mean_singleton:
            center = points.mean(axis=0) if part is None else coordinatewise_mom(points, part)
            single = center[None, :] if project is None else project(center[None, :])
            proposals.append(("singleton", Quantizer(single)))
        for r in range(search.restarts):
            init = initial_centers(points, k, search.seeding, derive_seed(seed, r), r)
            proposals.append((f"lloyd[{r}]", lloyd(points, init, search.max_iters, project)))
            if part is not None:
                start = Quantizer(init if project is None else project(init))
                refined = lloyd_mom_refine(points, start, part, search.max_iters, project)
                proposals.append((f"mom_refine[{r}]", refined))
    for j, A in enumerate(extra_candidates):
        if len(A) > k:
            raise MomQuantError(f"extra candidate {j} has {len(A)} > k centers")
        proposals.append((f"extra[{j}]", A))

    candidates = tuple(Candidate(A, criterion(A), admissible(A), origin) for origin, A in proposals)
    pool = [c for c in candidates if c.admissible]
    feasible = bool(pool)
    if not feasible:
        log.warning("%s: no candidate satisfies the constraint; returning the best unconstrained one", config.kind.value)
        pool = list(candidates)
    # min() keeps the first of equal values, so ties go to the earliest candidate
    best = min(pool, key=lambda c: c.criterion)

    A = best.quantizer
    masses = empirical_cell_masses(points, A)
    norms = A.norms()
    diagnostics = {
        "min_cell_mass": float(masses.min()),
        "max_center_norm": float(norms.max()),
        "min_center_norm": float(norms.min()),
    }
    if not feasible:
        diagnostics["infeasible_warning"] = 1.0
    return FitResult(
        quantizer=A,
        criterion_value=best.criterion,
        candidates_evaluated=len(candidates),
        feasible=feasible,
        diagnostics=diagnostics,
        ell=None if part is None else part.ell,
        candidates=candidates,
    )


def excess_distortion(
    fit_or_quantizer: FitResult | Quantizer,
    truth: DiscreteDistribution,
    k: int | None = None,
    oracle_distortion: float | None = None,
) -> float:
    """``D(A) - D(A*)`` under ``truth``, clamped at zero.

    ``D(A*)`` comes from ``oracle_distortion`` when given, otherwise from the
    exact 1-D dynamic program with ``k`` centers.
    """
    A = fit_or_quantizer.quantizer if isinstance(fit_or_quantizer, FitResult) else fit_or_quantizer
    if oracle_distortion is None:
        if k is None:
            raise MomQuantError("excess_distortion needs k or an oracle distortion")
        if truth.dim != 1:
            raise MomQuantError("no exact oracle for d > 1; pass oracle_distortion")
        oracle_distortion = optimal_distortion_1d(truth, k)
    raw = exact_distortion(truth, A) - oracle_distortion
    if raw < 0.0:
        level = logging.WARNING if raw < -NEGATIVE_EXCESS_TOL else logging.DEBUG
        log.log(level, "negative raw excess distortion %r clamped to 0", raw)
        return 0.0
    return raw
