"""Local asymptotic power of restricted and unrestricted LRTs.

Under local alternatives both statistics are asymptotically noncentral
chi-squared with a common noncentrality; they differ only in degrees of
freedom, so the comparison reduces to ``tail_power(m, lam, alpha)`` as a
function of ``m``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .simplex import ProbVector, SubmodelSpec

POISSON_TAIL = 1e-14
QUANTILE_TOL = 1e-12


@dataclass(frozen=True)
class ChiSqParams:
    df: int
    noncentrality: float = 0.0

    def __post_init__(self):
        if int(self.df) != self.df or self.df < 1:
            raise ValueError(f"degrees of freedom must be a positive integer, got {self.df}")
        if self.noncentrality < 0:
            raise ValueError(f"noncentrality must be non-negative, got {self.noncentrality}")


def chisq_sf(df: int, c: float) -> float:
    """Central chi-squared survival function ``Q(df/2, c/2)``."""
    if c <= 0:
        return 1.0
    return float(special.gammaincc(df / 2, c / 2))


def ncx2_sf(params: ChiSqParams, c: float) -> float:
    """``P(chi2_df(lam) > c)`` as a Poisson mixture of central tails.

    Terms are accumulated until the unvisited Poisson mass falls below
    ``POISSON_TAIL``. Since each central tail is at most one, that mass
    bounds the truncation error.
    """
    if c < 0:
        warnings.warn(f"negative critical value {c} clamped; survival probability is 1", RuntimeWarning)
        return 1.0
    half = params.noncentrality / 2
    if half == 0:
        return chisq_sf(params.df, c)
    # start at the Poisson mode and walk both ways so large noncentralities do not underflow
    mode = int(half)
    log_w0 = -half + mode * math.log(half) - math.lgamma(mode + 1)
    total = 0.0
    visited = 0.0
    w = math.exp(log_w0)
    j = mode
    while True:
        total += w * chisq_sf(params.df + 2 * j, c)
        visited += w
        j += 1
        w *= half / j
        if 1.0 - visited < POISSON_TAIL or w == 0.0:
            break
        if w < POISSON_TAIL * 1e-3 and j > half + 10:
            break
    w = math.exp(log_w0)
    j = mode
    while j > 0:
        w *= j / half
        j -= 1
        total += w * chisq_sf(params.df + 2 * j, c)
        visited += w
        if w < POISSON_TAIL * 1e-3:
            break
    return min(total, 1.0)


def chisq_pdf(df: int, c: float) -> float:
    if c <= 0:
        return 0.0 if df > 2 else (0.5 if df == 2 else math.inf)
    k = df / 2
    return math.exp((k - 1) * math.log(c) - c / 2 - k * math.log(2) - math.lgamma(k))


def chisq_quantile(df: int, alpha: float) -> float:
    """Critical value ``c`` with ``P(chi2_df > c) = alpha``.

    Brackets the root by doubling, then runs safeguarded Newton steps that
    fall back to bisection whenever Newton would leave the bracket.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    ChiSqParams(df)
    lo, hi = 0.0, max(1.0, float(df))
    while chisq_sf(df, hi) > alpha:
        lo, hi = hi, hi * 2
    c = (lo + hi) / 2
    for _ in range(200):
        gap = chisq_sf(df, c) - alpha
        if abs(gap) < QUANTILE_TOL:
            break
        if gap > 0:
            lo = c
        else:
            hi = c
        slope = chisq_pdf(df, c)
        step = c + gap / slope if slope > 0 else None
        c = step if step is not None and lo < step < hi else (lo + hi) / 2
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    return c


def tail_power(m: int, lam: float, alpha: float) -> float:
    """Power of a size-``alpha`` chi-squared test with ``m`` df at noncentrality ``lam``."""
    if lam < 0:
        raise ValueError(f"noncentrality must be non-negative, got {lam}")
    return ncx2_sf(ChiSqParams(m, lam), chisq_quantile(m, alpha))


def fisher_info_multinomial(theta: ProbVector | Sequence[float]) -> np.ndarray:
    """Per-observation information in the first ``K - 1`` coordinates.

    ``I = diag(1/theta_i) + (1/theta_K) * ones`` for ``i < K``.
    """
    p = np.array([float(t) for t in theta], dtype=float)
    if np.any(p <= 0):
        raise ValueError("Fisher information needs an interior probability vector")
    head, last = p[:-1], p[-1]
    return np.diag(1.0 / head) + 1.0 / last


def _reduced_jacobian(submodel: SubmodelSpec, tau: float) -> np.ndarray:
    if submodel.jacobian is None:
        raise ValueError(f"submodel {submodel.name!r} has no jacobian")
    return np.array(submodel.jacobian(tau), dtype=float)[:-1]


def fisher_info_submodel(submodel: SubmodelSpec, tau: float) -> float:
    """Information for the curve parameter, ``J' I J`` with ``J`` the reduced jacobian."""
    tau = float(tau)
    lo, hi = submodel.param_domain
    if not lo < tau < hi:
        raise ValueError(f"tau {tau} must be interior to {submodel.param_domain}")
    theta = submodel.map(tau)
    J = _reduced_jacobian(submodel, tau)
    return float(J @ fisher_info_multinomial(theta) @ J)


class NullKind(str, enum.Enum):
    SIMPLE = "simple"


@dataclass(frozen=True)
class LocalAltSpec:
    """Local alternative ``vartheta + h / sqrt(n)`` for the asymptotic comparison.

    ``tangent`` (k x d) spans the submodel directions at ``vartheta``; it is
    needed to express ``h`` in submodel coordinates.
    """

    k: int
    d: int
    ell: int
    info_model: np.ndarray
    info_sub: np.ndarray
    h: np.ndarray
    tangent: Optional[np.ndarray] = None
    null_kind: NullKind = NullKind.SIMPLE

    def __post_init__(self):
        if not 0 <= self.ell <= self.d < self.k:
            raise ValueError(f"need 0 <= ell <= d < k, got ell={self.ell}, d={self.d}, k={self.k}")
        if self.null_kind is not NullKind.SIMPLE or self.ell != 0:
            raise ValueError("only simple null hypotheses (ell = 0) are supported")
        for name, mat, size in (("info_model", self.info_model, self.k), ("info_sub", self.info_sub, self.d)):
            mat = np.atleast_2d(np.asarray(mat, dtype=float))
            if mat.shape != (size, size):
                raise ValueError(f"{name} must be {size}x{size}, got {mat.shape}")
            if not np.allclose(mat, mat.T):
                raise ValueError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(mat).min() < -1e-12 * max(1.0, np.abs(mat).max()):
                raise ValueError(f"{name} must be positive semidefinite")
            object.__setattr__(self, name, mat)
        h = np.asarray(self.h, dtype=float).reshape(-1)
        if h.shape != (self.k,):
            raise ValueError(f"h must have length {self.k}")
        object.__setattr__(self, "h", h)
        if self.tangent is not None:
            T = np.asarray(self.tangent, dtype=float).reshape(self.k, self.d)
            object.__setattr__(self, "tangent", T)


def noncentrality(spec: LocalAltSpec, tol: float = 1e-9) -> tuple[float, Optional[float]]:
    """``(lambda_k, lambda_d)`` for a simple null, where the infimum sits at ``h' = 0``.

    ``lambda_d`` is ``None`` when no tangent basis is given. A direction
    ``h`` that does not lie in the tangent space is rejected.
    """
    lam_k = float(spec.h @ spec.info_model @ spec.h)
    if spec.tangent is None:
        return lam_k, None
    s, *_ = np.linalg.lstsq(spec.tangent, spec.h, rcond=None)
    residual = np.linalg.norm(spec.tangent @ s - spec.h)
    if residual > tol * max(1.0, np.linalg.norm(spec.h)):
        raise ValueError(f"h is not tangent to the submodel (residual {residual:.3g})")
    lam_d = float(s @ spec.info_sub @ s)
    return lam_k, lam_d


def hw_local_alternative(tau_bar: float, s: float, submodel: Optional[SubmodelSpec] = None) -> LocalAltSpec:
    """Local alternative along the Hardy-Weinberg curve in trinomial coordinates."""
    from .simplex import HARDY_WEINBERG

    sub = submodel or HARDY_WEINBERG
    tau_bar = float(tau_bar)
    J = _reduced_jacobian(sub, tau_bar)
    return LocalAltSpec(
        k=sub.K - 1,
        d=1,
        ell=0,
        info_model=fisher_info_multinomial(sub.map(tau_bar)),
        info_sub=np.array([[fisher_info_submodel(sub, tau_bar)]]),
        h=J * s,
        tangent=J.reshape(-1, 1),
    )


def asymptotic_powers(k: int, d: int, ell: int, lam: float, alpha: float) -> tuple[float, float]:
    """``(restricted, unrestricted)`` limiting powers at common noncentrality ``lam``."""
    if not 0 <= ell <= d < k:
        raise ValueError(f"need 0 <= ell <= d < k, got ell={ell}, d={d}, k={k}")
    if lam < 0:
        raise ValueError(f"noncentrality must be non-negative, got {lam}")
    return tail_power(d - ell, lam, alpha), tail_power(k - ell, lam, alpha)
