"""Maximum likelihood estimation and the likelihood ratio statistics.

Both tests share the simple null ``theta = map(tau_bar)``. For an outcome
``x`` the unrestricted test compares the null likelihood with the maximum
over the whole simplex, the restricted test with the maximum over the
submodel curve. Ordering decisions use the inverse likelihood ratios
``r2 = L(theta_hat) / L(theta_bar)`` and ``r1 = L(map(tau_hat)) / L(theta_bar)``,
which are exact in rational mode.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import mpmath

from .scalars import Mode, Scalar, coerce, decimal_str, mode_of, scalar_log, to_mpf
from .simplex import (
    HARDY_WEINBERG,
    MLEStrategy,
    OutcomeCounts,
    ProbVector,
    SubmodelSpec,
    enumerate_outcomes,
    multinomial_log_pmf,
    multinomial_pmf,
)

GRID_POINTS = 1024
N_STARTS = 3
GOLDEN_TOL = 1e-12


class NoMLEError(ValueError):
    """The likelihood is identically zero on the parameter domain."""


@dataclass(frozen=True)
class NullSpec:
    """Simple null hypothesis ``theta = submodel.map(tau_bar)``."""

    tau_bar: Scalar
    submodel: SubmodelSpec = HARDY_WEINBERG

    def __post_init__(self):
        tau_bar = coerce(self.tau_bar)
        object.__setattr__(self, "tau_bar", tau_bar)
        lo, hi = self.submodel.param_domain
        if not lo < tau_bar < hi:
            raise ValueError(f"null parameter {tau_bar} must be interior to {self.submodel.param_domain}")
        theta_bar = self.submodel.map(tau_bar)
        if not theta_bar.is_interior():
            raise ValueError("null distribution puts zero mass on some category")
        object.__setattr__(self, "_theta_bar", theta_bar)

    @property
    def theta_bar(self) -> ProbVector:
        return self._theta_bar

    @property
    def mode(self) -> Mode:
        return mode_of(self.tau_bar)

    @property
    def K(self) -> int:
        return self.submodel.K


@dataclass(frozen=True)
class StatRecord:
    x: OutcomeCounts
    p_null: Scalar
    p_unres: Scalar
    p_res: Scalar
    r2: Scalar
    r1: Scalar
    lambda2: float
    lambda1: float
    tau_hat: Scalar

    @property
    def m(self) -> Optional[int]:
        return self.x.m if self.x.K == 3 else None


def unrestricted_mle(x: OutcomeCounts) -> ProbVector:
    if x.n == 0:
        raise ValueError("the MLE is undefined for an empty sample")
    return ProbVector(tuple(Fraction(c, x.n) for c in x))


def hw_restricted_mle(x: OutcomeCounts) -> Fraction:
    """Closed-form Hardy-Weinberg allele frequency estimate ``m / 2n``."""
    if x.K != 3:
        raise ValueError("the Hardy-Weinberg MLE needs a trinomial outcome")
    if x.n == 0:
        raise ValueError("the MLE is undefined for an empty sample")
    return Fraction(x.m, 2 * x.n)


def numeric_restricted_mle(
    x: OutcomeCounts,
    submodel: SubmodelSpec,
    grid_points: int = GRID_POINTS,
    n_starts: int = N_STARTS,
    tol: float = GOLDEN_TOL,
) -> mpmath.mpf:
    """Maximise the submodel log-likelihood by grid scan plus golden section.

    The best ``n_starts`` grid points each seed a golden-section search over
    their neighbouring grid cells; the best refined point wins. The objective
    is evaluated in extended precision because the log-likelihood is flat to
    second order near its maximum.
    """
    if x.K != submodel.K:
        raise ValueError(f"outcome has {x.K} categories, submodel {submodel.K}")
    lo, hi = (mpmath.mpf(v) for v in submodel.param_domain)

    def loglik(tau):
        return multinomial_log_pmf(x, submodel.map(tau))

    step = (hi - lo) / (grid_points - 1)
    grid = [lo + i * step for i in range(grid_points)]
    values = [loglik(t) for t in grid]
    if all(v == mpmath.ninf for v in values):
        raise NoMLEError(f"likelihood of {x} vanishes on the whole domain")
    starts = sorted(range(grid_points), key=lambda i: values[i], reverse=True)[:n_starts]

    best_tau, best_val = None, mpmath.ninf
    for i in starts:
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, grid_points - 1)]
        tau = _golden_max(loglik, a, b, tol)
        # the bracket end itself is a candidate when the maximum is on the boundary
        for cand in (tau, grid[i]):
            val = loglik(cand)
            if val > best_val:
                best_tau, best_val = cand, val
    return best_tau


def _golden_max(f, a, b, tol):
    invphi = (mpmath.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    mid = (a + b) / 2
    # pin a boundary maximum exactly
    for end in (a, b):
        if f(end) > f(mid):
            mid = end
    return mid


def restricted_mle(x: OutcomeCounts, submodel: SubmodelSpec) -> Scalar:
    if submodel.mle_strategy is MLEStrategy.CLOSED_FORM_HW:
        return hw_restricted_mle(x)
    return numeric_restricted_mle(x, submodel)


def stat_record(null: NullSpec, x: OutcomeCounts) -> StatRecord:
    p_null = multinomial_pmf(x, null.theta_bar)
    p_unres = multinomial_pmf(x, unrestricted_mle(x))
    tau_hat = restricted_mle(x, null.submodel)
    p_res = multinomial_pmf(x, null.submodel.map(tau_hat))
    # interior null: p_null > 0 for every outcome
    assert p_null > 0
    if null.mode is Mode.EXTENDED:
        p_unres = to_mpf(p_unres)
        p_res = to_mpf(p_res)
    r2 = p_unres / p_null
    r1 = p_res / p_null
    return StatRecord(
        x=x,
        p_null=p_null,
        p_unres=p_unres,
        p_res=p_res,
        r2=r2,
        r1=r1,
        lambda2=float(2 * scalar_log(r2)),
        lambda1=float(2 * scalar_log(r1)),
        tau_hat=tau_hat,
    )


def statistics_table(null: NullSpec, n: int) -> list[StatRecord]:
    """One :class:`StatRecord` per outcome, in enumeration order."""
    return [stat_record(null, x) for x in enumerate_outcomes(null.K, n)]


def table_csv(records: list[StatRecord], places: int = 6) -> str:
    """Render a statistics table with the column layout of the HW report."""
    if not records:
        return ""
    K = records[0].x.K
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = [f"x{i + 1}" for i in range(K)] + ["p_null", "p_unres", "p_res", "lambda2", "lambda1"]
    if K == 3:
        header.append("m")
    writer.writerow(header)
    for rec in records:
        row = list(rec.x.counts) + [
            decimal_str(rec.p_null, places),
            decimal_str(rec.p_unres, places),
            decimal_str(rec.p_res, places),
            _lambda_str(rec.r2, places),
            _lambda_str(rec.r1, places),
        ]
        if K == 3:
            row.append(rec.x.m)
        writer.writerow(row)
    return buf.getvalue()


def _lambda_str(r: Scalar, places: int) -> str:
    # 2 log r in extended precision so the last printed digit is correctly rounded
    value = 2 * scalar_log(r)
    if abs(value) < mpmath.mpf(10) ** -(mpmath.mp.dps - 10):
        value = mpmath.mpf(0)
    return decimal_str(value, places)
