"""Seeded Monte-Carlo experiments and their on-disk reports.

Every trial draws its own seed from ``(base_seed, experiment, cell, trial)``,
so statistics do not depend on the order in which trials run or on the number
of worker processes.

Report directory layout::

    <outdir>/<experiment>/<label>/trials.csv    one row per trial
                                  summary.csv   one row per grid cell
                                  checks.json   measured statistics
                                  plot.svg      line chart of the summary
                                  config.json   the resolved configuration

With ``fmt="json"`` the two tables are written as ``trials.json`` and
``summary.json`` (lists of objects with the same keys as the CSV columns).
"""

from __future__ import annotations

import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from momquant.distributions import (
    DiscreteDistribution,
    SamplerSpec,
    example_1_1,
    exact_distortion,
    exact_mean_loss,
    lower_bound_family,
    lower_bound_quantizers,
    optimal_quantizer_1d,
    sample,
)
from momquant.errors import InfeasibleConfidenceError, MomQuantError
from momquant.estimators import EstimatorConfig, EstimatorKind, SearchStrategy, excess_distortion, fit
from momquant.momcore import BlockPartition, log1, mom_mean_estimate
from momquant.reporting import csv_text, dumps, json_records, svg_lines, write_text
from momquant.rng import derive_seed

EXPERIMENTS = ("example11", "lowerbound", "scaling", "momscalar", "uniformqom")
_EXPERIMENT_ID = {name: i + 1 for i, name in enumerate(EXPERIMENTS)}

EXCESS_ONE_TOL = 1e-12
THRESHOLD_TOL = 1e-12

TRIAL_COLUMNS = ("experiment", "seed", "n", "pmin", "kind", "excess", "criterion", "feasible")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    trials: int
    n_grid: tuple[int, ...]
    pmin_grid: tuple[float, ...] | None = None
    delta: float = 0.05
    kinds: tuple[str, ...] = ()
    base_seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise MomQuantError(f"unknown experiment {self.name!r}; valid names: {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise MomQuantError("trials must be at least 1")
        if not self.n_grid:
            raise MomQuantError("n_grid must be nonempty")
        if self.pmin_grid is not None and not self.pmin_grid:
            raise MomQuantError("pmin_grid must be nonempty when given")
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.pmin_grid is not None:
            object.__setattr__(self, "pmin_grid", tuple(float(p) for p in self.pmin_grid))
        object.__setattr__(self, "kinds", tuple(self.kinds))

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        d["pmin_grid"] = None if self.pmin_grid is None else list(self.pmin_grid)
        d["kinds"] = list(self.kinds)
        return d


_DEFAULTS: dict[str, dict[str, Any]] = {
    "example11": dict(trials=10000, n_grid=(50, 1000)),
    "lowerbound": dict(trials=5000, n_grid=(1000,), pmin_grid=(0.05,)),
    "scaling": dict(
        trials=400,
        n_grid=(500, 1000, 2000, 4000, 8000),
        pmin_grid=(0.025, 0.05, 0.1),
        delta=0.05,
        kinds=("mom_pmin",),
        params={"family_delta": 0.25, "inject_oracle": True, "restarts": 8},
    ),
    "momscalar": dict(
        trials=2000,
        n_grid=(8000,),
        delta=0.01,
        params={"dists": ["gaussian", "pareto(2.2)", "pareto(3.0)"]},
    ),
    "uniformqom": dict(
        trials=500,
        n_grid=(100, 400, 1600),
        params={"alpha": 0.5, "ell": 15, "k": 2, "grid_points": 15, "p": 0.2, "family_delta": 0.25},
    ),
}


def default_config(name: str, **overrides) -> ExperimentConfig:
    if name not in _DEFAULTS:
        raise MomQuantError(f"unknown experiment {name!r}; valid names: {', '.join(EXPERIMENTS)}")
    base = dict(_DEFAULTS[name])
    params = dict(base.pop("params", {}))
    params.update(overrides.pop("params", None) or {})
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(name=name, params=params, **base)


@dataclass(frozen=True)
class TrialReport:
    experiment: str
    seed: int
    n: int
    kind: str
    excess: float
    criterion: float
    feasible: bool
    pmin: float | None = None
    wall_time: float = 0.0
    extras: dict = field(default_factory=dict)

    def row(self) -> dict[str, Any]:
        r = {
            "experiment": self.experiment,
            "seed": self.seed,
            "n": self.n,
            "pmin": self.pmin,
            "kind": self.kind,
            "excess": self.excess,
            "criterion": self.criterion,
            "feasible": self.feasible,
        }
        r.update(self.extras)
        return r


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    trials: list[TrialReport]
    trial_columns: tuple[str, ...]
    summary: list[dict[str, Any]]
    summary_columns: tuple[str, ...]
    checks: dict[str, Any]
    plot: dict[str, Any] | None = None


# -- shared helpers ------------------------------------------------------------


def _trial_seed(cfg: ExperimentConfig, *cell: int) -> int:
    return derive_seed(cfg.base_seed, _EXPERIMENT_ID[cfg.name], *cell)


def _pmin_key(pmin: float | None) -> int:
    return 0 if pmin is None else int(round(pmin * 1e9))


def _map(fn: Callable, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def mc_se_frequency(freq: float, trials: int) -> float:
    return math.sqrt(freq * (1.0 - freq) / trials)


def mc_se_mean(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def quantile_with_se(values: np.ndarray, level: float) -> tuple[float, float]:
    """Empirical quantile and a distribution-free standard error from the
    order statistics one binomial standard deviation either side of it."""
    x = np.sort(np.asarray(values, dtype=float))
    t = len(x)
    q = float(np.quantile(x, level, method="inverted_cdf"))
    s = math.sqrt(level * (1.0 - level) / t)
    lo = x[max(0, math.ceil(t * (level - s)) - 1)]
    hi = x[min(t - 1, math.ceil(t * (level + s)) - 1)]
    return q, float(hi - lo) / 2.0


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept of ``log y`` on ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


# -- two atoms {0, sqrt N}: a rare atom that ERM cannot see ---------------------


def _example11_trial(task) -> TrialReport:
    name, n, seed = task
    t0 = time.perf_counter()
    truth = example_1_1(n)
    data = sample(SamplerSpec.discrete(truth), n, seed)
    heavy = int(np.count_nonzero(data.points[:, 0] > 0.0))
    res = fit(data, EstimatorConfig("erm", 2, search=SearchStrategy(exact_1d=True)), seed)
    excess = excess_distortion(res, truth, oracle_distortion=0.0)
    return TrialReport(
        name, seed, n, "erm", excess, res.criterion_value, res.feasible,
        wall_time=time.perf_counter() - t0, extras={"heavy_count": heavy},
    )


def run_example_1_1(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """ERM with ``k = 2`` on samples of the two-atom example: how often does the
    sample miss the rare atom, leaving excess distortion exactly one?"""
    tasks = [(cfg.name, n, _trial_seed(cfg, n, t)) for n in cfg.n_grid for t in range(cfg.trials)]
    trials = _map(_example11_trial, tasks, workers)
    summary, checks = [], {}
    for n in cfg.n_grid:
        rows = [r for r in trials if r.n == n]
        ex = np.array([r.excess for r in rows])
        heavy = np.array([r.extras["heavy_count"] for r in rows])
        dstar = optimal_quantizer_1d(example_1_1(n), 2).distortion
        one = np.abs(ex - 1.0) <= EXCESS_ONE_TOL
        freq = float(one.mean())
        closed = (1.0 - 1.0 / n) ** n
        ge2 = heavy >= 2
        row = {
            "n": n,
            "trials": len(rows),
            "oracle_distortion": dstar,
            "freq_excess_one": freq,
            "closed_form": closed,
            "abs_diff": abs(freq - closed),
            "mc_se": mc_se_frequency(freq, len(rows)),
            "freq_heavy_absent": float(np.mean(heavy == 0)),
            "trials_heavy_ge2": int(ge2.sum()),
            "max_excess_heavy_ge2": float(ex[ge2].max()) if ge2.any() else 0.0,
        }
        summary.append(row)
        checks[str(n)] = row
    plot = {
        "series": {
            "empirical P(excess = 1)": [(r["n"], r["freq_excess_one"]) for r in summary],
            "(1 - 1/N)^N": [(r["n"], r["closed_form"]) for r in summary],
        },
        "title": "Two-atom example: ERM misses the rare atom",
        "xlabel": "N",
        "ylabel": "frequency",
        "logx": True,
        "logy": False,
    }
    return ExperimentReport(cfg, trials, TRIAL_COLUMNS + ("heavy_count",), summary, tuple(summary[0]), checks, plot)


# -- the five-point lower-bound family -------------------------------------------


def lower_bound_parameters(n: int, pmin: float) -> tuple[float, float]:
    """``(p, delta)`` of the hard instance for sample size ``n`` and cell mass ``pmin``."""
    if not n * pmin > 0.125:
        raise MomQuantError(f"need N * p_min > 1/8, got {n * pmin}")
    p = 4.0 * pmin
    if not p < 0.5:
        raise MomQuantError(f"need p = 4 p_min < 1/2, got p = {p}")
    return p, 1.0 / math.sqrt(8.0 * n * p)


def _lowerbound_trial(task) -> TrialReport:
    name, n, pmin, seed = task
    t0 = time.perf_counter()
    p, delta = lower_bound_parameters(n, pmin)
    truth = lower_bound_family(p, delta)
    dstar = optimal_quantizer_1d(truth, 4).distortion
    data = sample(SamplerSpec.discrete(truth), n, seed)
    res = fit(data, EstimatorConfig("erm", 4, search=SearchStrategy(exact_1d=True)), seed)
    excess = excess_distortion(res, truth, oracle_distortion=dstar)
    x = data.points[:, 0]
    return TrialReport(
        name, seed, n, "erm", excess, res.criterion_value, res.feasible, pmin=pmin,
        wall_time=time.perf_counter() - t0,
        extras={
            "neg_count": int(np.count_nonzero(x < 0)),
            "pos_count": int(np.count_nonzero(x > 0)),
            "crossed": bool(excess >= delta / 16.0 - THRESHOLD_TOL),
        },
    )


def run_lower_bound(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """ERM on the hard instance with ``p = 4 p_min`` and ``delta = 1/sqrt(8 N p)``;
    counts how often its excess reaches ``delta / 16``."""
    pmins = cfg.pmin_grid or (0.05,)
    for n in cfg.n_grid:
        for pm in pmins:
            lower_bound_parameters(n, pm)
    tasks = [
        (cfg.name, n, pm, _trial_seed(cfg, n, _pmin_key(pm), t))
        for n in cfg.n_grid
        for pm in pmins
        for t in range(cfg.trials)
    ]
    trials = _map(_lowerbound_trial, tasks, workers)
    summary, checks = [], {}
    for n in cfg.n_grid:
        for pm in pmins:
            rows = [r for r in trials if r.n == n and r.pmin == pm]
            p, delta = lower_bound_parameters(n, pm)
            truth = lower_bound_family(p, delta)
            oracle = optimal_quantizer_1d(truth, 4)
            _, mirrored = lower_bound_quantizers(p)
            crossed = np.array([r.extras["crossed"] for r in rows])
            freq = float(crossed.mean())
            row = {
                "n": n,
                "pmin": pm,
                "p": p,
                "delta": delta,
                "oracle_distortion": oracle.distortion,
                "closed_form_distortion": (1.0 - delta) / 32.0,
                "mirrored_excess": exact_distortion(truth, mirrored) - oracle.distortion,
                "threshold": delta / 16.0,
                "trials": len(rows),
                "freq_cross": freq,
                "mc_se": mc_se_frequency(freq, len(rows)),
                "mean_excess": float(np.mean([r.excess for r in rows])),
            }
            summary.append(row)
            checks[f"n={n},pmin={pm!r}"] = row
    plot = {
        "series": {
            f"pmin={pm!r}": [(r["n"], r["freq_cross"]) for r in summary if r["pmin"] == pm] for pm in pmins
        },
        "title": "ERM on the hard instance: P(excess >= delta/16)",
        "xlabel": "N",
        "ylabel": "frequency",
        "logx": True,
        "logy": False,
    }
    return ExperimentReport(
        cfg, trials, TRIAL_COLUMNS + ("neg_count", "pos_count", "crossed"), summary, tuple(summary[0]), checks, plot
    )


# -- excess-distortion scaling ------------------------------------------------------

SCALING_COLUMNS = (
    "experiment", "n", "pmin", "kind", "trials", "mean_excess", "median_excess", "q10", "q90", "mc_se",
)


def _scaling_family_delta(cfg: ExperimentConfig, n: int, p: float) -> float:
    fd = cfg.params.get("family_delta", 0.25)
    if fd == "worst_case":
        return 1.0 / math.sqrt(8.0 * n * p)
    return float(fd)


def _estimator_for(kind: str, k: int, cfg: ExperimentConfig, pmin: float, oracle) -> EstimatorConfig:
    search = SearchStrategy(restarts=int(cfg.params.get("restarts", 8)))
    kind = EstimatorKind(kind)
    if kind is EstimatorKind.ERM:
        return EstimatorConfig(kind, k, cfg.delta, search=SearchStrategy(exact_1d=True))
    if kind is EstimatorKind.MOM_MAGNITUDE:
        return EstimatorConfig(kind, k, cfg.delta, magnitude=oracle.magnitude_M, search=search)
    if kind is EstimatorKind.MOM_PMIN:
        return EstimatorConfig(kind, k, cfg.delta, pmin=pmin, search=search)
    return EstimatorConfig(kind, k, cfg.delta, search=search)


def _scaling_trial(task) -> TrialReport:
    cfg, n, pmin, kind, seed = task
    t0 = time.perf_counter()
    p = 4.0 * pmin
    truth = lower_bound_family(p, _scaling_family_delta(cfg, n, p))
    oracle = optimal_quantizer_1d(truth, 4)
    data = sample(SamplerSpec.discrete(truth), n, seed)
    est = _estimator_for(kind, 4, cfg, pmin, oracle)
    extra = [oracle.optimal] if cfg.params.get("inject_oracle", True) else []
    res = fit(data, est, derive_seed(seed, 1), extra_candidates=extra)
    excess = excess_distortion(res, truth, oracle_distortion=oracle.distortion)
    return TrialReport(
        cfg.name, seed, n, kind, excess, res.criterion_value, res.feasible, pmin=pmin,
        wall_time=time.perf_counter() - t0, extras={"ell": res.ell},
    )


def run_scaling(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Mean excess distortion of the MOM estimators over an ``(N, p_min)`` grid on
    the five-point family with ``p = 4 p_min``, and the log-log slope of mean
    excess against ``N p_min``."""
    pmins = cfg.pmin_grid or (0.05,)
    kinds = cfg.kinds or ("mom_pmin",)
    for kind in kinds:
        if kind == "erm":
            continue
        for n in cfg.n_grid:
            ell = _estimator_for(kind, 4, cfg, pmins[0], optimal_quantizer_1d(lower_bound_family(0.2, 0.25), 4)).policy().ell()
            if ell > n:
                raise InfeasibleConfidenceError(ell, n)
    tasks = [
        (cfg, n, pm, kind, _trial_seed(cfg, n, _pmin_key(pm), ki, t))
        for ki, kind in enumerate(kinds)
        for pm in pmins
        for n in cfg.n_grid
        for t in range(cfg.trials)
    ]
    trials = _map(_scaling_trial, tasks, workers)
    summary = []
    for kind in kinds:
        for pm in pmins:
            for n in cfg.n_grid:
                ex = np.sort([r.excess for r in trials if r.n == n and r.pmin == pm and r.kind == kind])
                summary.append({
                    "experiment": cfg.name,
                    "n": n,
                    "pmin": pm,
                    "kind": kind,
                    "trials": len(ex),
                    "mean_excess": float(ex.mean()),
                    "median_excess": float(np.median(ex)),
                    "q10": float(np.quantile(ex, 0.1)),
                    "q90": float(np.quantile(ex, 0.9)),
                    "mc_se": mc_se_mean(ex),
                })
    regression = {}
    for kind in kinds:
        cells = [r for r in summary if r["kind"] == kind and r["mean_excess"] > 0.0]
        entry: dict[str, Any] = {"cells_used": len(cells), "cells_total": sum(r["kind"] == kind for r in summary)}
        if len(cells) >= 2 and len({r["n"] * r["pmin"] for r in cells}) >= 2:
            slope, intercept = loglog_fit([r["n"] * r["pmin"] for r in cells], [r["mean_excess"] for r in cells])
            entry.update(slope=slope, intercept=intercept)
        else:
            entry.update(slope=None, intercept=None)
        regression[kind] = entry
    series = {}
    for kind in kinds:
        for pm in pmins:
            label = f"pmin={pm!r}" if len(kinds) == 1 else f"{kind} pmin={pm!r}"
            series[label] = [
                (r["n"] * pm, r["mean_excess"]) for r in summary if r["kind"] == kind and r["pmin"] == pm
            ]
    plot = {
        "series": series,
        "title": "Mean excess distortion vs N p_min",
        "xlabel": "N p_min",
        "ylabel": "mean excess distortion",
        "logx": True,
        "logy": True,
    }
    checks = {"regression": regression, "family_delta": cfg.params.get("family_delta", 0.25)}
    return ExperimentReport(cfg, trials, TRIAL_COLUMNS + ("ell",), summary, SCALING_COLUMNS, checks, plot)


# -- scalar median of means ----------------------------------------------------------

_PARETO = re.compile(r"^pareto\(([0-9.]+)\)$")


def scalar_family(name: str) -> SamplerSpec:
    """``gaussian`` is N(0, 1); ``pareto(a)`` is the classical Pareto law with
    tail index ``a`` and minimum 1."""
    if name == "gaussian":
        return SamplerSpec.gaussian([0.0], [1.0])
    m = _PARETO.match(name)
    if m:
        return SamplerSpec.pareto(float(m.group(1)))
    raise MomQuantError(f"unknown scalar family {name!r}")


def mom_scalar_bound(sigma: float, n: int, delta: float) -> float:
    return sigma * math.sqrt(32.0 * log1(1.0 / delta) / n)


def _momscalar_trial(task) -> list[TrialReport]:
    name, n, dist, delta, seed = task
    t0 = time.perf_counter()
    spec = scalar_family(dist)
    mu = float(spec.mean()[0])
    sigma = math.sqrt(float(spec.coordinate_variances()[0]))
    bound = mom_scalar_bound(sigma, n, delta)
    x = sample(spec, n, seed).points[:, 0]
    out = []
    for kind, est in (("mom", mom_mean_estimate(x, delta)), ("sample_mean", float(x.mean()))):
        err = abs(est - mu)
        out.append(TrialReport(
            name, seed, n, kind, err, bound, True,
            wall_time=time.perf_counter() - t0,
            extras={"dist": dist, "estimate": est, "fail": bool(err > bound)},
        ))
    return out


def run_mom_scalar(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """How often the scalar median of means, and the sample mean, miss the mean by
    more than ``sigma sqrt(32 log(1/delta) / N)``. ``excess`` holds the absolute
    error and ``criterion`` the bound."""
    dists = list(cfg.params.get("dists", _DEFAULTS["momscalar"]["params"]["dists"]))
    tasks = [
        (cfg.name, n, dist, cfg.delta, _trial_seed(cfg, n, di, t))
        for n in cfg.n_grid
        for di, dist in enumerate(dists)
        for t in range(cfg.trials)
    ]
    trials = [r for group in _map(_momscalar_trial, tasks, workers) for r in group]
    summary, checks = [], {}
    for n in cfg.n_grid:
        for dist in dists:
            for kind in ("mom", "sample_mean"):
                rows = [r for r in trials if r.n == n and r.extras["dist"] == dist and r.kind == kind]
                fails = int(sum(r.extras["fail"] for r in rows))
                freq = fails / len(rows)
                row = {
                    "n": n,
                    "dist": dist,
                    "kind": kind,
                    "trials": len(rows),
                    "delta": cfg.delta,
                    "bound": rows[0].criterion,
                    "failures": fails,
                    "fail_freq": freq,
                    "mc_se": mc_se_frequency(freq, len(rows)),
                }
                summary.append(row)
                checks[f"n={n},{dist},{kind}"] = row
    plot = {
        "series": {
            f"{dist} {kind}": [
                (r["n"], r["fail_freq"]) for r in summary if r["dist"] == dist and r["kind"] == kind
            ]
            for dist in dists
            for kind in ("mom", "sample_mean")
        },
        "title": "Failure frequency of the sub-Gaussian bound",
        "xlabel": "N",
        "ylabel": "failure frequency",
        "logx": True,
        "logy": False,
    }
    return ExperimentReport(
        cfg, trials, TRIAL_COLUMNS + ("dist", "estimate", "fail"), summary, tuple(summary[0]), checks, plot
    )


# -- uniform deviation of quantiles of means over a quantizer grid --------------------


def quantizer_grid(truth: DiscreteDistribution, k: int, points: int, min_norm_cap: float) -> np.ndarray:
    """Sorted ``k``-tuples (repeats allowed) from an even grid over the atoms'
    range, keeping those whose smallest center norm is at most ``min_norm_cap``.
    Returned as an array of shape ``(G, k)``; 1-D only."""
    from itertools import combinations_with_replacement

    lo, hi = float(truth.atoms.min()), float(truth.atoms.max())
    grid = np.linspace(lo, hi, points)
    combos = np.array(list(combinations_with_replacement(grid, k)))
    keep = np.min(np.abs(combos), axis=1) <= min_norm_cap
    return combos[keep]


def grid_losses(x: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """``l_A(x_i)`` for every point and every quantizer row of ``grid``: shape ``(n, G)``."""
    out = grid[None, :, 0] ** 2 - 2.0 * x[:, None] * grid[None, :, 0]
    for j in range(1, grid.shape[1]):
        out = np.minimum(out, grid[None, :, j] ** 2 - 2.0 * x[:, None] * grid[None, :, j])
    return out


def _uniformqom_setup(cfg: ExperimentConfig):
    prm = cfg.params
    alpha, ell, k = float(prm.get("alpha", 0.5)), int(prm.get("ell", 15)), int(prm.get("k", 2))
    truth = lower_bound_family(float(prm.get("p", 0.2)), float(prm.get("family_delta", 0.25)))
    m_cap = 4.0 * math.sqrt(2.0 * truth.second_moment())
    grid = quantizer_grid(truth, k, int(prm.get("grid_points", 15)), m_cap)
    if len(grid) > 200:
        raise MomQuantError(f"quantizer grid has {len(grid)} > 200 members")
    exact = np.array([exact_mean_loss(truth, _grid_quantizer(row)) for row in grid])
    return alpha, ell, truth, grid, exact


def _grid_quantizer(row):
    from momquant.quantcore import Quantizer

    return Quantizer(np.asarray(row, dtype=float))


def _uniformqom_trial(task) -> TrialReport:
    cfg, n, seed = task
    t0 = time.perf_counter()
    alpha, ell, truth, grid, exact = _uniformqom_setup(cfg)
    x = sample(SamplerSpec.discrete(truth), n, seed).points[:, 0]
    part = BlockPartition(n, ell)
    means = part.arrange(grid_losses(x, grid)).mean(axis=1)
    r = math.ceil(alpha * ell)
    qom = np.partition(means, r - 1, axis=0)[r - 1]
    dev = exact - qom
    j = int(np.argmax(dev))
    return TrialReport(
        cfg.name, seed, n, f"qom({alpha!r})", float(dev[j]), float(qom[j]), True,
        wall_time=time.perf_counter() - t0, extras={"argmax": j},
    )


def run_uniform_qom(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """``sup_A (E l_A - QOM_alpha(l_A))`` over a finite quantizer grid with the
    exact expectation from a discrete truth; reports its
    ``(1 - exp(-alpha^2 ell / 2))``-quantile across trials for each ``N``."""
    alpha, ell, _, grid, _ = _uniformqom_setup(cfg)
    if abs(alpha * ell - round(alpha * ell)) < 1e-9:
        raise MomQuantError("alpha * ell must not be an integer")
    for n in cfg.n_grid:
        if ell > n:
            raise InfeasibleConfidenceError(ell, n)
    level = 1.0 - math.exp(-(alpha**2) * ell / 2.0)
    tasks = [(cfg, n, _trial_seed(cfg, n, t)) for n in cfg.n_grid for t in range(cfg.trials)]
    trials = _map(_uniformqom_trial, tasks, workers)
    summary = []
    for n in cfg.n_grid:
        dev = np.array([r.excess for r in trials if r.n == n])
        q, se = quantile_with_se(dev, level)
        summary.append({
            "n": n,
            "ell": ell,
            "alpha": alpha,
            "grid_size": len(grid),
            "level": level,
            "trials": len(dev),
            "quantile_sup_dev": q,
            "mc_se": se,
            "mean_sup_dev": float(dev.mean()),
        })
    monotone = all(
        b["quantile_sup_dev"] <= a["quantile_sup_dev"] + 2.0 * math.hypot(a["mc_se"], b["mc_se"])
        for a, b in zip(summary, summary[1:])
    )
    checks = {"level": level, "grid_size": len(grid), "non_increasing_within_2se": monotone, "cells": summary}
    plot = {
        "series": {"quantile of sup deviation": [(r["n"], r["quantile_sup_dev"]) for r in summary]},
        "title": "Uniform QOM deviation over a quantizer grid",
        "xlabel": "N",
        "ylabel": "sup deviation quantile",
        "logx": True,
        "logy": True,
    }
    return ExperimentReport(cfg, trials, TRIAL_COLUMNS + ("argmax",), summary, tuple(summary[0]), checks, plot)


RUNNERS: dict[str, Callable[..., ExperimentReport]] = {
    "example11": run_example_1_1,
    "lowerbound": run_lower_bound,
    "scaling": run_scaling,
    "momscalar": run_mom_scalar,
    "uniformqom": run_uniform_qom,
}


def run(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    return RUNNERS[cfg.name](cfg, workers=workers)


def emit(report: ExperimentReport, outdir: str | Path, label: str = "run", fmt: str = "csv") -> Path:
    """Write a report directory and return its path. Output bytes depend only on
    the report contents (wall times are not written)."""
    if fmt not in ("csv", "json"):
        raise MomQuantError(f"unknown format {fmt!r}")
    target = Path(outdir) / report.config.name / label
    try:
        target.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise MomQuantError(f"cannot create report directory {target}: {exc}") from exc
    trial_rows = [t.row() for t in report.trials]
    if fmt == "csv":
        write_text(target / "trials.csv", csv_text(report.trial_columns, trial_rows))
        write_text(target / "summary.csv", csv_text(report.summary_columns, report.summary))
    else:
        write_text(target / "trials.json", json_records(report.trial_columns, trial_rows))
        write_text(target / "summary.json", json_records(report.summary_columns, report.summary))
    write_text(target / "checks.json", dumps(report.checks))
    write_text(target / "config.json", dumps(report.config.as_dict()))
    if report.plot is not None:
        plot = dict(report.plot)
        write_text(target / "plot.svg", svg_lines(plot.pop("series"), **plot))
    return target
