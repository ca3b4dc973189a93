"""Independent reference computations used to check the library.

These are deliberately naive: plain loops, no shared code with the package.
"""

from __future__ import annotations

import itertools
import math


def weighted_sse(xs, ws):
    """Weighted squared error of a group around its own weighted mean."""
    total = sum(ws)
    mu = sum(x * w for x, w in zip(xs, ws)) / total
    return sum(w * (x - mu) ** 2 for x, w in zip(xs, ws))


def brute_contiguous(atoms, weights, k):
    """Minimum weighted SSE over every split of the sorted atoms into at most
    ``k`` contiguous runs. Returns (cost, list of runs as index lists)."""
    order = sorted(range(len(atoms)), key=lambda i: atoms[i])
    xs = [atoms[i] for i in order]
    ws = [weights[i] for i in order]
    s = len(xs)
    best = (math.inf, None)
    for j in range(1, min(k, s) + 1):
        for cuts in itertools.combinations(range(1, s), j - 1):
            bounds = (0,) + cuts + (s,)
            runs = [list(range(bounds[t], bounds[t + 1])) for t in range(j)]
            cost = sum(weighted_sse([xs[i] for i in r], [ws[i] for i in r]) for r in runs)
            if cost < best[0]:
                best = (cost, runs)
    return best


def brute_labelings(atoms, weights, k):
    """Minimum weighted SSE over every assignment of atoms to ``k`` labels
    (no contiguity assumed). Exponential; keep supports tiny."""
    s = len(atoms)
    best = math.inf
    for labels in itertools.product(range(k), repeat=s):
        cost = 0.0
        for lab in set(labels):
            idx = [i for i in range(s) if labels[i] == lab]
            cost += weighted_sse([atoms[i] for i in idx], [weights[i] for i in idx])
        best = min(best, cost)
    return best


def nearest_index(x, centers):
    """First index attaining the minimum squared distance (1-D or tuples)."""
    def d2(a):
        if isinstance(a, (int, float)):
            return (x - a) ** 2
        return sum((xi - ai) ** 2 for xi, ai in zip(x, a))

    best_j, best_d = 0, d2(centers[0])
    for j, a in enumerate(centers[1:], start=1):
        d = d2(a)
        if d < best_d:
            best_j, best_d = j, d
    return best_j


def clipped_log(x):
    return max(math.log(x), 1.0)


def ell_magnitude(delta):
    return 8 * math.ceil(clipped_log(2 / delta)) + 1


def ell_pmin(delta):
    return 12 * math.ceil(clipped_log(6 / delta)) + 1


def ell_free(delta):
    return 32 * math.ceil(clipped_log(4 / delta)) + 1


def ell_scalar(delta):
    ell = math.ceil(8 * clipped_log(1 / delta))
    return ell + 1 if ell % 2 == 0 else ell


def sorted_quantile(values, alpha):
    """``ceil(alpha * len)``-th smallest value, 1-based."""
    xs = sorted(values)
    return xs[math.ceil(alpha * len(xs)) - 1]
