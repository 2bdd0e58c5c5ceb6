"""Exact finite-sample analysis of restricted and unrestricted likelihood ratio tests."""

from __future__ import annotations

from .analysis import (
    CorollarySummary,
    CounterexampleReport,
    PowerCurvePoint,
    bias_check,
    bias_dip,
    corollary_scan,
    find_reversal,
    lemma_thresholds,
    ordering_differs,
    power_curve,
    size_tests,
)
from .asymptotics import (
    ChiSqParams,
    LocalAltSpec,
    asymptotic_powers,
    chisq_quantile,
    fisher_info_multinomial,
    fisher_info_submodel,
    ncx2_sf,
    noncentrality,
    tail_power,
)
from .construction import (
    Kind,
    LevelSet,
    OrderedPartition,
    RandomizedTest,
    attainable_sizes,
    build_partition,
    build_partitions,
    exact_power,
    hw_power,
    make_test,
    mc_power,
)
from .lrt import NullSpec, StatRecord, statistics_table, table_csv
from .scalars import Mode, parse_scalar
from .simplex import (
    HARDY_WEINBERG,
    OutcomeCounts,
    ProbVector,
    SubmodelSpec,
    enumerate_outcomes,
    hardy_weinberg,
    hw_map,
    multinomial_pmf,
    outcome,
)

__version__ = "0.1.0"

__all__ = [
    "HARDY_WEINBERG",
    "ChiSqParams",
    "CorollarySummary",
    "CounterexampleReport",
    "Kind",
    "LevelSet",
    "LocalAltSpec",
    "Mode",
    "NullSpec",
    "OrderedPartition",
    "OutcomeCounts",
    "PowerCurvePoint",
    "ProbVector",
    "RandomizedTest",
    "StatRecord",
    "SubmodelSpec",
    "asymptotic_powers",
    "attainable_sizes",
    "bias_check",
    "bias_dip",
    "build_partition",
    "build_partitions",
    "chisq_quantile",
    "corollary_scan",
    "enumerate_outcomes",
    "exact_power",
    "find_reversal",
    "fisher_info_multinomial",
    "fisher_info_submodel",
    "hardy_weinberg",
    "hw_map",
    "hw_power",
    "lemma_thresholds",
    "make_test",
    "mc_power",
    "multinomial_pmf",
    "ncx2_sf",
    "noncentrality",
    "ordering_differs",
    "outcome",
    "parse_scalar",
    "power_curve",
    "size_tests",
    "statistics_table",
    "table_csv",
    "tail_power",
]
