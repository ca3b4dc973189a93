"""Block partitions, median-of-means and quantile-of-means.

Every block-count formula uses the natural logarithm clipped from below at 1,
``log x := max(log x, 1)``, before the ceiling is taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from momquant.errors import ContractViolation, InfeasibleConfidenceError, MomQuantError
from momquant.quantcore import Dataset, Quantizer, losses


class PolicyKind(str, Enum):
    SCALAR_MOM = "scalar_mom"
    MAGNITUDE_M = "magnitude_M"
    PMIN_CONSTRAINED = "pmin_constrained"
    PARAMETER_FREE = "parameter_free"
    EXPLICIT = "explicit"


def log1(x: float) -> float:
    return max(math.log(x), 1.0)


@dataclass(frozen=True)
class BlockPolicy:
    kind: PolicyKind
    delta: float | None = None
    explicit_ell: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.kind is PolicyKind.EXPLICIT:
            if self.explicit_ell is None or self.explicit_ell < 1:
                raise MomQuantError("explicit policy needs explicit_ell >= 1")
        elif self.delta is None or not 0.0 < self.delta < 1.0:
            raise MomQuantError(f"delta must lie in (0, 1), got {self.delta}")

    def ell(self) -> int:
        d = self.delta
        if self.kind is PolicyKind.EXPLICIT:
            return int(self.explicit_ell)
        if self.kind is PolicyKind.MAGNITUDE_M:
            return 8 * math.ceil(log1(2.0 / d)) + 1
        if self.kind is PolicyKind.PMIN_CONSTRAINED:
            return 12 * math.ceil(log1(6.0 / d)) + 1
        if self.kind is PolicyKind.PARAMETER_FREE:
            return 32 * math.ceil(log1(4.0 / d)) + 1
        ell = math.ceil(8.0 * log1(1.0 / d))
        # one extra block makes the median unique
        return ell + 1 if ell % 2 == 0 else ell


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """``ell`` contiguous blocks of ``m = n // ell`` indices each.

    The trailing ``n - ell * m`` indices are not used. ``order`` is an
    optional permutation applied before blocking.
    """

    n: int
    ell: int
    order: np.ndarray | None = None

    def __post_init__(self):
        if self.ell < 1:
            raise MomQuantError("ell must be at least 1")
        if self.ell > self.n:
            raise InfeasibleConfidenceError(self.ell, self.n)

    @property
    def m(self) -> int:
        return self.n // self.ell

    @property
    def used(self) -> int:
        return self.ell * self.m

    def blocks(self) -> list[np.ndarray]:
        idx = np.arange(self.n) if self.order is None else self.order
        return [idx[j * self.m : (j + 1) * self.m] for j in range(self.ell)]

    def arrange(self, values: np.ndarray) -> np.ndarray:
        """Reshape the first ``ell * m`` (ordered) values to ``(ell, m, ...)``."""
        if len(values) < self.n:
            raise MomQuantError(
                f"partition built for n={self.n} but got {len(values)} values"
            )
        v = values if self.order is None else values[self.order]
        return v[: self.used].reshape((self.ell, self.m) + v.shape[1:])


def make_partition(
    n: int, policy: BlockPolicy, *, shuffle: bool = False, seed: int | None = None
) -> BlockPartition:
    ell = policy.ell()
    if ell > n:
        raise InfeasibleConfidenceError(ell, n)
    order = None
    if shuffle:
        order = np.random.Generator(np.random.Philox(seed or 0)).permutation(n)
    return BlockPartition(n=n, ell=ell, order=order)


def block_means(values, part: BlockPartition) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return part.arrange(v).mean(axis=1)


def quant(x, alpha: float) -> float:
    """The ``ceil(alpha * len(x))``-th smallest entry of ``x``."""
    x = np.asarray(x, dtype=float)
    ell = len(x)
    if not 0.0 < alpha < 1.0:
        raise MomQuantError(f"alpha must lie in (0, 1), got {alpha}")
    if abs(alpha * ell - round(alpha * ell)) < 1e-9:
        raise ContractViolation(f"ell * alpha = {alpha * ell:g} must not be an integer")
    r = math.ceil(alpha * ell)
    return float(np.partition(x, r - 1)[r - 1])


def median_odd(x) -> float:
    x = np.asarray(x, dtype=float)
    if len(x) % 2 == 0:
        raise ContractViolation(f"median of means needs an odd number of blocks, got {len(x)}")
    mid = len(x) // 2
    return float(np.partition(x, mid)[mid])


def mom(values, part: BlockPartition) -> float:
    return median_odd(block_means(values, part))


def qom(values, part: BlockPartition, alpha: float) -> float:
    return quant(block_means(values, part), alpha)


def scalar_partition(n: int, delta: float) -> BlockPartition:
    return make_partition(n, BlockPolicy(PolicyKind.SCALAR_MOM, delta))


def mom_mean_estimate(values, delta: float) -> float:
    """Median-of-means estimate of the mean with ``ceil(8 log(1/delta))`` blocks."""
    v = np.asarray(values, dtype=float)
    return mom(v, scalar_partition(len(v), delta))


def mom_criterion(data, A: Quantizer, part: BlockPartition) -> float:
    """``MOM(l_A)`` over the blocks of ``part``."""
    pts = data.points if isinstance(data, Dataset) else data
    return mom(losses(pts, A), part)
