"""Robust k-point quantization with median-of-means criteria.

Submodules
----------
quantcore      quantizers, Voronoi assignment, empirical distortion
momcore        block partitions, medians and quantiles of block means
distributions  discrete truths, exact 1-D oracle, seeded samplers
estimators     ERM and median-of-means quantizer estimators
experiments    seeded Monte-Carlo experiments and reports
cli            the ``momquant`` command
"""

from momquant.distributions import (
    DiscreteDistribution,
    OracleReport,
    SamplerSpec,
    example_1_1,
    exact_distortion,
    lower_bound_family,
    optimal_quantizer_1d,
    sample,
)
from momquant.errors import ContractViolation, InfeasibleConfidenceError, MomQuantError, SpecError
from momquant.estimators import EstimatorConfig, EstimatorKind, FitResult, SearchStrategy, excess_distortion, fit
from momquant.momcore import BlockPartition, BlockPolicy, PolicyKind, mom, mom_mean_estimate, qom, quant
from momquant.quantcore import Dataset, Quantizer, empirical_distortion, loss_l, voronoi_index

__all__ = [
    "BlockPartition", "BlockPolicy", "ContractViolation", "Dataset", "DiscreteDistribution",
    "EstimatorConfig", "EstimatorKind", "FitResult", "InfeasibleConfidenceError", "MomQuantError",
    "OracleReport", "PolicyKind", "Quantizer", "SamplerSpec", "SearchStrategy", "SpecError",
    "empirical_distortion", "example_1_1", "exact_distortion", "excess_distortion", "fit",
    "loss_l", "lower_bound_family", "mom", "mom_mean_estimate", "optimal_quantizer_1d", "qom",
    "quant", "sample", "voronoi_index",
]
