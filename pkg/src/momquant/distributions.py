"""Finite-support measures with exact oracles, and seeded samplers.

The exact optimal quantizer is computed only on the real line, where the cells
of an optimal squared-loss quantizer are runs of consecutive atoms. A dynamic
program over sorted atoms then finds a global optimum in ``O(k s^2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from momquant.errors import DimensionMismatchError, MomQuantError, SpecError
from momquant.quantcore import Dataset, Quantizer, as_points, assign, squared_distances
from momquant.rng import generator, uniforms

_WEIGHT_SUM_TOL = 1e-12
_DP_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A probability measure on finitely many distinct atoms."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = as_points(self.atoms)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(w) != len(atoms):
            raise SpecError(f"{len(atoms)} atoms but {len(w)} weights")
        if len(w) == 0:
            raise SpecError("a distribution needs at least one atom")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise SpecError("weights must be positive and finite")
        if abs(float(np.sum(w)) - 1.0) > _WEIGHT_SUM_TOL:
            raise SpecError(f"weights sum to {float(np.sum(w))!r}, not 1")
        if len(np.unique(atoms, axis=0)) != len(atoms):
            raise SpecError("atoms must be distinct")
        atoms.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    @classmethod
    def empirical(cls, data) -> "DiscreteDistribution":
        """The empirical measure of a sample, duplicates merged."""
        pts = data.points if isinstance(data, Dataset) else as_points(data)
        uniq, counts = np.unique(pts, axis=0, return_counts=True)
        return cls(uniq, counts / len(pts))

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def support_size(self) -> int:
        return len(self.atoms)

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def second_moment(self) -> float:
        return float(self.weights @ np.sum(self.atoms**2, axis=1))

    def variance(self) -> float:
        """``E||X - mu||^2``."""
        c = self.atoms - self.mean()
        return float(self.weights @ np.sum(c * c, axis=1))


@dataclass(frozen=True)
class OracleReport:
    optimal: Quantizer
    distortion: float
    pmin: float
    delta_gap: float
    radius_R: float
    magnitude_M: float
    k: int
    approximate: bool = False

    def as_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "centers": self.optimal.centers.tolist(),
            "distortion": self.distortion,
            "pmin": self.pmin,
            "magnitude_M": self.magnitude_M,
            "delta_gap": self.delta_gap,
            "radius_R": self.radius_R,
            "approximate": self.approximate,
        }


# -- named constructions -----------------------------------------------------


def example_1_1(n: int) -> DiscreteDistribution:
    """Two atoms ``{0, sqrt(n)}`` with masses ``1 - 1/n`` and ``1/n``."""
    if n < 2:
        raise SpecError(f"example_1_1 needs n >= 2, got {n}")
    return DiscreteDistribution([0.0, math.sqrt(n)], [1.0 - 1.0 / n, 1.0 / n])


def lower_bound_family(p: float, delta: float) -> DiscreteDistribution:
    """Five atoms at ``0, +-p^{-1/2}/2, +-p^{-1/2}``; the positive side is heavier
    by a factor ``(1 + delta) / (1 - delta)``."""
    if not 0.0 < p < 0.5:
        raise SpecError(f"p must lie in (0, 1/2), got {p}")
    if not -0.5 < delta < 0.5:
        raise SpecError(f"delta must lie in (-1/2, 1/2), got {delta}")
    s = p**-0.5
    lo = p * (1.0 - delta) / 4.0
    hi = p * (1.0 + delta) / 4.0
    return DiscreteDistribution([-s, -s / 2, 0.0, s / 2, s], [lo, lo, 1.0 - p, hi, hi])


def lower_bound_quantizers(p: float) -> tuple[Quantizer, Quantizer]:
    """The two competing 4-point quantizers: the optimum for ``delta > 0`` and
    its mirror image, which is optimal for ``-delta``."""
    s = p**-0.5
    a1 = Quantizer.of(-0.75 * s, 0.0, 0.5 * s, s)
    a2 = Quantizer.of(-s, -0.5 * s, 0.0, 0.75 * s)
    return a1, a2


# -- exact functionals ---------------------------------------------------------


def _check(dist: DiscreteDistribution, A: Quantizer) -> None:
    if dist.dim != A.dim:
        raise DimensionMismatchError(
            f"distribution has dimension {dist.dim} but quantizer has {A.dim}"
        )


def exact_distortion(dist: DiscreteDistribution, A: Quantizer) -> float:
    _check(dist, A)
    return float(dist.weights @ np.min(squared_distances(dist.atoms, A), axis=1))


def exact_cell_masses(dist: DiscreteDistribution, A: Quantizer) -> np.ndarray:
    _check(dist, A)
    return np.bincount(assign(dist.atoms, A), weights=dist.weights, minlength=len(A))


def exact_mean_loss(dist: DiscreteDistribution, A: Quantizer) -> float:
    """``E l_A(X) = D(A) - E||X||^2``."""
    return exact_distortion(dist, A) - dist.second_moment()


def centroid_check(dist: DiscreteDistribution, A: Quantizer) -> float:
    """Largest distance between a center and the conditional mean of its cell."""
    _check(dist, A)
    labels = assign(dist.atoms, A)
    worst = 0.0
    for j in range(len(A)):
        mask = labels == j
        mass = dist.weights[mask].sum()
        if mass <= 0.0:
            continue
        centroid = dist.weights[mask] @ dist.atoms[mask] / mass
        worst = max(worst, float(np.linalg.norm(A.centers[j] - centroid)))
    return worst


def center_energy(dist: DiscreteDistribution, A: Quantizer) -> float:
    """``sum_a ||a||^2 P(V_a)``."""
    return float(exact_cell_masses(dist, A) @ np.sum(A.centers**2, axis=1))


def magnitude_bound_check(report: OracleReport, dist: DiscreteDistribution) -> bool:
    """Every optimal center lies within ``sqrt(E||X||^2 / p_min)`` of the origin."""
    bound = math.sqrt(dist.second_moment() / report.pmin)
    return bool(np.all(report.optimal.norms() <= bound + 1e-9))


# -- 1-D dynamic program -------------------------------------------------------


class _IntervalCosts:
    """Within-cell squared error of runs of sorted weighted atoms, O(1) per query.

    Atoms are centered at the weighted mean first to limit cancellation in the
    ``sum w x^2 - (sum w x)^2 / sum w`` formula.
    """

    def __init__(self, x: np.ndarray, w: np.ndarray):
        xc = x - (w @ x) / w.sum()
        self.W = np.concatenate([[0.0], np.cumsum(w)])
        self.S1 = np.concatenate([[0.0], np.cumsum(w * xc)])
        self.S2 = np.concatenate([[0.0], np.cumsum(w * xc * xc)])

    def row(self, i: int, ends: np.ndarray) -> np.ndarray:
        """Costs of the runs ``i..e`` for every ``e`` in ``ends`` (inclusive)."""
        w = self.W[ends + 1] - self.W[i]
        s1 = self.S1[ends + 1] - self.S1[i]
        s2 = self.S2[ends + 1] - self.S2[i]
        return np.maximum(s2 - s1 * s1 / w, 0.0)


def optimal_partition_1d(x: np.ndarray, w: np.ndarray, k: int) -> tuple[list[tuple[int, int]], float]:
    """Split sorted atoms into ``min(k, s)`` runs with least total within-run error.

    Returns inclusive ``(start, end)`` index pairs and the optimal cost. Among
    equal-cost partitions the one whose boundaries are lexicographically
    smallest is returned.
    """
    s = len(x)
    r_max = min(k, s)
    cost = _IntervalCosts(x, w)
    # suffix[r][i]: best cost of splitting atoms i..s-1 into r runs
    suffix = np.full((r_max + 1, s + 1), np.inf)
    last = np.array([s - 1])
    suffix[1, :s] = [cost.row(i, last)[0] for i in range(s)]
    for r in range(2, r_max + 1):
        for i in range(s - r + 1):
            ends = np.arange(i, s - r + 1)
            suffix[r, i] = np.min(cost.row(i, ends) + suffix[r - 1, ends + 1])

    runs = []
    i = 0
    for r in range(r_max, 1, -1):
        ends = np.arange(i, s - r + 1)
        vals = cost.row(i, ends) + suffix[r - 1, ends + 1]
        best = vals.min()
        e = int(ends[np.flatnonzero(vals <= best + _DP_TIE_RTOL * max(1.0, abs(best)))[0]])
        runs.append((i, e))
        i = e + 1
    runs.append((i, s - 1))
    return runs, float(suffix[r_max, 0])


def _require_1d(dist: DiscreteDistribution) -> None:
    if dist.dim != 1:
        raise DimensionMismatchError("exact oracle is 1-D only")


def optimal_quantizer_centers_1d(dist: DiscreteDistribution, k: int) -> Quantizer:
    _require_1d(dist)
    if k < 1:
        raise MomQuantError(f"k must be at least 1, got {k}")
    order = np.argsort(dist.atoms[:, 0], kind="stable")
    x = dist.atoms[order, 0]
    w = dist.weights[order]
    runs, _ = optimal_partition_1d(x, w, k)
    # offsetting by the run's first atom keeps one-atom runs exact
    centers = [float(x[a] + w[a : b + 1] @ (x[a : b + 1] - x[a]) / w[a : b + 1].sum()) for a, b in runs]
    return Quantizer(np.array(centers))


def optimal_distortion_1d(dist: DiscreteDistribution, k: int) -> float:
    return exact_distortion(dist, optimal_quantizer_centers_1d(dist, k))


def tail_radius(dist: DiscreteDistribution, delta_gap: float) -> float:
    """Smallest centered atom norm ``R`` with ``E||X-mu||^2 1[||X-mu|| > R] <= delta_gap / 64``."""
    r = np.linalg.norm(dist.atoms - dist.mean(), axis=1)
    order = np.argsort(r, kind="stable")
    rs = r[order]
    energy = dist.weights[order] * rs**2
    beyond = np.concatenate([np.cumsum(energy[::-1])[::-1], [0.0]])
    candidates = np.unique(rs)
    tail = beyond[np.searchsorted(rs, candidates, side="right")]
    return float(candidates[np.flatnonzero(tail <= delta_gap / 64.0)[0]])


def optimal_quantizer_1d(dist: DiscreteDistribution, k: int, *, approximate: bool = False) -> OracleReport:
    """Globally optimal ``k``-point quantizer of a discrete measure on the line,
    with its distortion, lightest cell mass, largest center norm, the gap to the
    best ``(k-1)``-point quantizer and the matching tail radius."""
    A = optimal_quantizer_centers_1d(dist, k)
    dk = exact_distortion(dist, A)
    if k == 1:
        gap = math.inf
    else:
        gap = max(0.0, optimal_distortion_1d(dist, k - 1) - dk)
    return OracleReport(
        optimal=A,
        distortion=dk,
        pmin=float(exact_cell_masses(dist, A).min()),
        delta_gap=gap,
        radius_R=tail_radius(dist, gap),
        magnitude_M=float(A.norms().max()),
        k=k,
        approximate=approximate,
    )


# -- samplers ------------------------------------------------------------------

FAMILIES = ("discrete", "gaussian", "pareto", "mixture")


@dataclass(frozen=True, eq=False)
class SamplerSpec:
    """A sampling recipe.

    ``pareto`` draws every coordinate independently as
    ``shift + scale * U ** (-1 / tail_index)``; ``gaussian`` has a diagonal
    covariance given by ``var``.
    """

    family: str
    dim: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.dim < 1:
            raise SpecError("dim must be at least 1")
        p = self.params
        if self.family == "discrete":
            if p["dist"].dim != self.dim:
                raise SpecError("discrete atoms do not match dim")
        elif self.family == "gaussian":
            if len(p["mean"]) != self.dim or len(p["var"]) != self.dim:
                raise SpecError("gaussian mean/var length must equal dim")
            if any(v < 0 for v in p["var"]):
                raise SpecError("gaussian variances must be nonnegative")
        elif self.family == "pareto":
            if not p["tail_index"] > 2.0:
                raise SpecError("pareto tail_index must exceed 2 for a finite second moment")
            if not p["scale"] > 0.0:
                raise SpecError("pareto scale must be positive")
        else:
            comps = p["components"]
            if not comps:
                raise SpecError("mixture needs at least one component")
            ws = [w for w, _ in comps]
            if any(w <= 0 for w in ws) or abs(sum(ws) - 1.0) > _WEIGHT_SUM_TOL:
                raise SpecError("mixture weights must be positive and sum to 1")
            if any(c.dim != self.dim for _, c in comps):
                raise SpecError("mixture components must share dim")

    @classmethod
    def discrete(cls, dist: DiscreteDistribution) -> "SamplerSpec":
        return cls("discrete", dist.dim, {"dist": dist})

    @classmethod
    def gaussian(cls, mean, var) -> "SamplerSpec":
        mean = [float(v) for v in np.atleast_1d(mean)]
        var = [float(v) for v in np.atleast_1d(var)]
        return cls("gaussian", len(mean), {"mean": mean, "var": var})

    @classmethod
    def pareto(cls, tail_index: float, shift: float = 0.0, scale: float = 1.0, dim: int = 1) -> "SamplerSpec":
        return cls(
            "pareto", dim, {"tail_index": float(tail_index), "shift": float(shift), "scale": float(scale)}
        )

    @classmethod
    def centered_pareto(cls, tail_index: float, scale: float = 1.0, dim: int = 1) -> "SamplerSpec":
        return cls.pareto(tail_index, -scale * tail_index / (tail_index - 1.0), scale, dim)

    @classmethod
    def mixture(cls, components) -> "SamplerSpec":
        comps = [(float(w), c) for w, c in components]
        return cls("mixture", comps[0][1].dim, {"components": comps})

    def mean(self) -> np.ndarray:
        p = self.params
        if self.family == "discrete":
            return p["dist"].mean()
        if self.family == "gaussian":
            return np.array(p["mean"])
        if self.family == "pareto":
            a = p["tail_index"]
            return np.full(self.dim, p["shift"] + p["scale"] * a / (a - 1.0))
        return sum(w * c.mean() for w, c in p["components"])

    def coordinate_variances(self) -> np.ndarray:
        p = self.params
        if self.family == "discrete":
            d = p["dist"]
            return d.weights @ (d.atoms - d.mean()) ** 2
        if self.family == "gaussian":
            return np.array(p["var"])
        if self.family == "pareto":
            a = p["tail_index"]
            return np.full(self.dim, p["scale"] ** 2 * a / ((a - 1.0) ** 2 * (a - 2.0)))
        mu = self.mean()
        second = sum(w * (c.coordinate_variances() + c.mean() ** 2) for w, c in p["components"])
        return second - mu**2

    def trace_cov(self) -> float:
        return float(np.sum(self.coordinate_variances()))

    def tag(self) -> str:
        p = self.params
        if self.family == "pareto":
            return f"pareto({p['tail_index']:g})"
        if self.family == "discrete":
            return f"discrete({p['dist'].support_size})"
        if self.family == "mixture":
            return "mixture(" + ",".join(c.tag() for _, c in p["components"]) + ")"
        return "gaussian"


def _draw(spec: SamplerSpec, n: int, gen: np.random.Generator) -> np.ndarray:
    p = spec.params
    d = spec.dim
    if spec.family == "discrete":
        dist = p["dist"]
        cum = np.cumsum(dist.weights)
        idx = np.searchsorted(cum, uniforms(gen, n) * cum[-1], side="right")
        return dist.atoms[np.minimum(idx, dist.support_size - 1)]
    if spec.family == "gaussian":
        # Box-Muller; 1 - u lies in (0, 1] so the log is finite
        u1 = 1.0 - uniforms(gen, (n, d))
        u2 = uniforms(gen, (n, d))
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return np.asarray(p["mean"]) + np.sqrt(np.asarray(p["var"])) * z
    if spec.family == "pareto":
        u = 1.0 - uniforms(gen, (n, d))
        return p["shift"] + p["scale"] * u ** (-1.0 / p["tail_index"])
    comps = p["components"]
    cum = np.cumsum([w for w, _ in comps])
    labels = np.minimum(np.searchsorted(cum, uniforms(gen, n) * cum[-1], side="right"), len(comps) - 1)
    out = np.empty((n, d))
    for j, (_, c) in enumerate(comps):
        mask = labels == j
        out[mask] = _draw(c, int(mask.sum()), gen)
    return out


def sample(spec: SamplerSpec, n: int, seed: int) -> Dataset:
    """``n`` i.i.d. draws; a fixed function of ``(spec, n, seed)``."""
    if n < 1:
        raise MomQuantError(f"n must be at least 1, got {n}")
    pts = _draw(spec, n, generator(seed))
    return Dataset(pts.reshape(n, spec.dim), seed=seed, generator_tag=f"philox:{spec.tag()}")


def approximate_oracle(spec: SamplerSpec, k: int, *, n_proxy: int = 200_000, bins: int = 2_000, seed: int = 0) -> OracleReport:
    """Oracle quantities for a 1-D sampler family from a discretised proxy.

    ``n_proxy`` draws are sorted and pooled into ``bins`` equal-count groups,
    each replaced by its mean; the exact DP then runs on that measure. The
    report is flagged ``approximate``.
    """
    if spec.dim != 1:
        raise DimensionMismatchError("exact oracle is 1-D only")
    x = np.sort(sample(spec, n_proxy, seed).points[:, 0])
    groups = np.array_split(x, min(bins, n_proxy))
    atoms = np.array([g.mean() for g in groups])
    weights = np.array([len(g) for g in groups], dtype=float) / n_proxy
    uniq, inv = np.unique(atoms, return_inverse=True)
    merged = np.bincount(inv, weights=weights)
    return optimal_quantizer_1d(DiscreteDistribution(uniq, merged), k, approximate=True)


# -- JSON spec files -------------------------------------------------------------

_PARAM_KEYS = {
    "discrete": {"atoms", "weights"},
    "gaussian": {"mean", "var"},
    "pareto": {"tail_index", "shift", "scale"},
    "mixture": {"components"},
    "example-1-1": {"n"},
    "lower-bound": {"p", "delta"},
    "pareto-mixture": {"tail_indices", "weights", "scale"},
}
_REQUIRED = {
    "discrete": {"atoms", "weights"},
    "gaussian": {"mean", "var"},
    "pareto": {"tail_index"},
    "mixture": {"components"},
    "example-1-1": {"n"},
    "lower-bound": {"p", "delta"},
    "pareto-mixture": {"tail_indices", "weights"},
}
BUILTINS = ("example-1-1", "lower-bound", "pareto-mixture")


def spec_from_dict(obj: dict) -> SamplerSpec:
    """Parse ``{"family": ..., "params": {...}, "dim": d}``; unknown keys are errors."""
    if not isinstance(obj, dict):
        raise SpecError("a distribution spec must be a JSON object")
    extra = set(obj) - {"family", "params", "dim"}
    if extra:
        raise SpecError(f"unknown fields in spec: {sorted(extra)}")
    family = obj.get("family")
    if family not in _PARAM_KEYS:
        raise SpecError(f"unknown family {family!r}; expected one of {sorted(_PARAM_KEYS)}")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("params must be an object")
    unknown = set(params) - _PARAM_KEYS[family]
    if unknown:
        raise SpecError(f"unknown params for {family}: {sorted(unknown)}")
    missing = _REQUIRED[family] - set(params)
    if missing:
        raise SpecError(f"missing params for {family}: {sorted(missing)}")
    dim = obj.get("dim", 1)
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise SpecError("dim must be an integer")
    try:
        if family == "example-1-1":
            spec = SamplerSpec.discrete(example_1_1(int(params["n"])))
        elif family == "lower-bound":
            spec = SamplerSpec.discrete(lower_bound_family(float(params["p"]), float(params["delta"])))
        elif family == "pareto-mixture":
            tails, ws = list(params["tail_indices"]), list(params["weights"])
            if len(tails) != len(ws):
                raise SpecError("pareto-mixture needs one weight per tail index")
            scale = params.get("scale", 1.0)
            spec = SamplerSpec.mixture([(w, SamplerSpec.pareto(a, 0.0, scale, dim)) for a, w in zip(tails, ws)])
        elif family == "discrete":
            atoms = np.asarray(params["atoms"], dtype=float).reshape(len(params["atoms"]), -1)
            spec = SamplerSpec.discrete(DiscreteDistribution(atoms, params["weights"]))
        elif family == "gaussian":
            spec = SamplerSpec.gaussian(params["mean"], params["var"])
        elif family == "pareto":
            spec = SamplerSpec.pareto(
                params["tail_index"], params.get("shift", 0.0), params.get("scale", 1.0), dim
            )
        else:
            comps = []
            for c in params["components"]:
                if set(c) != {"weight", "spec"}:
                    raise SpecError("mixture components are {\"weight\": w, \"spec\": {...}}")
                comps.append((c["weight"], spec_from_dict(c["spec"])))
            spec = SamplerSpec.mixture(comps)
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"invalid {family} params: {exc}") from exc
    if spec.dim != dim:
        raise SpecError(f"spec declares dim={dim} but its parameters have dim={spec.dim}")
    return spec


def load_spec(path: str | Path) -> SamplerSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))
