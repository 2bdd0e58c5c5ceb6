"""Power curves, ordering comparisons and power-reversal search.

A power reversal is a size ``alpha`` and an alternative ``tau`` at which the
restricted (submodel) LRT of size ``alpha`` rejects less often than the
unrestricted LRT of the same size.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import mpmath
import numpy as np

from .construction import (
    OrderedPartition,
    RandomizedTest,
    _threads,
    build_partitions,
    exact_power,
    hw_power,
    make_test,
)
from .lrt import NullSpec, statistics_table
from .scalars import (
    Mode,
    Scalar,
    coerce,
    decimal_str,
    scalar_str,
    scalars_equal,
    to_mpf,
)
from .simplex import OutcomeCounts, SubmodelSpec

SCAN_STEP = Fraction(1, 1000)
ROOT_TOL = 1e-9
VERIFY_OFFSET = 1e-6
# float values of the power difference below this are re-checked exactly
FLOAT_TRUST = 1e-10


def _sign(value: Scalar) -> int:
    """Sign of a probability difference; extended values within
    rounding noise of zero count as zero."""
    if isinstance(value, mpmath.mpf):
        if abs(value) <= mpmath.mpf(10) ** (15 - mpmath.mp.dps):
            return 0
    return (value > 0) - (value < 0)


@dataclass(frozen=True)
class PowerCurvePoint:
    tau: Scalar
    beta_restricted: Scalar
    beta_unrestricted: Scalar

    @property
    def diff(self) -> Scalar:
        return self.beta_unrestricted - self.beta_restricted


def submodel_power(test: RandomizedTest, submodel: SubmodelSpec, tau) -> Scalar:
    if submodel.is_hardy_weinberg:
        return hw_power(test, tau)
    return exact_power(test, submodel.map(tau))


def _grid_value(tau, mode: Mode) -> Scalar:
    if mode is Mode.RATIONAL:
        return coerce(tau, Mode.RATIONAL)
    return coerce(tau, Mode.EXTENDED)


def size_tests(null: NullSpec, n: int, alpha) -> tuple[RandomizedTest, RandomizedTest]:
    """``(restricted, unrestricted)`` randomized LRTs of size ``alpha``."""
    restricted, unrestricted = build_partitions(null, n)
    alpha = _alpha_in_mode(alpha, null.mode)
    return make_test(restricted, alpha), make_test(unrestricted, alpha)


def _alpha_in_mode(alpha, mode: Mode) -> Scalar:
    if isinstance(alpha, str):
        return coerce(alpha, mode)
    return coerce(alpha)


def power_curve(null: NullSpec, n: int, alpha, tau_grid: Iterable) -> list[PowerCurvePoint]:
    """Exact power of both size-``alpha`` tests along the submodel curve."""
    tests = size_tests(null, n, alpha)
    points = []
    for tau in tau_grid:
        tau = _grid_value(tau, null.mode)
        if not 0 < tau < 1:
            raise ValueError(f"alternative {tau} outside (0, 1)")
        beta1 = submodel_power(tests[0], null.submodel, tau)
        beta2 = submodel_power(tests[1], null.submodel, tau)
        points.append(PowerCurvePoint(tau, beta1, beta2))
    return points


def power_curve_csv(points: Sequence[PowerCurvePoint], places: int = 9) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tau", "beta_restricted", "beta_unrestricted", "diff"])
    for p in points:
        writer.writerow(
            [
                decimal_str(p.tau, places),
                decimal_str(p.beta_restricted, places),
                decimal_str(p.beta_unrestricted, places),
                decimal_str(p.diff, places),
            ]
        )
    return buf.getvalue()


# -- ordering comparison -----------------------------------------------------


def lemma_thresholds(n: int) -> tuple[Fraction, Fraction]:
    """Exact thresholds ``(b(n), c(n))`` used by the ordering conditions.

    ``b(n)`` is where the restricted test stops preferring ``(n-1,1,0)`` to
    ``(n-1,0,1)``; ``c(n)`` is the restricted ratio of ``(1,0,n-1)`` to
    ``(0,1,n-1)`` at ``tau_bar = 1/3``.
    """
    if n < 2:
        raise ValueError(f"thresholds need n >= 2, got {n}")
    a = (2 * n - 1) ** (2 * n - 1)
    b = (2 * n - 2) ** (2 * n - 2)
    return Fraction(a, a + 4 * b), Fraction(8 * b, a)


def lemma_condition(tau_bar, n: int) -> Optional[int]:
    """Which sufficient condition for differing orders holds, if any."""
    t = coerce(tau_bar)
    fifth, third = Fraction(1, 5), Fraction(1, 3)
    if fifth < t < third or 2 * third < t < 1 - fifth:
        return 1
    if third < t < 2 * third and n >= 2:
        return 2
    if (t == third or t == 2 * third) and n >= 3:
        return 3
    return None


@dataclass(frozen=True)
class OrderingEvidence:
    differs: bool
    witness: Optional[tuple[OutcomeCounts, OutcomeCounts]]
    lemma_condition: Optional[int]
    b_n: Optional[Fraction]
    c_n: Optional[Fraction]


def _strictly_greater(a: Scalar, b: Scalar) -> bool:
    return a > b and not scalars_equal(a, b)


def is_witness(records, x: OutcomeCounts, y: OutcomeCounts) -> bool:
    """True when ``r2(x) > r2(y)`` but ``r1(x) < r1(y)``, both strictly."""
    by_x = {r.x: r for r in records}
    rx, ry = by_x[x], by_x[y]
    return _strictly_greater(rx.r2, ry.r2) and _strictly_greater(ry.r1, rx.r1)


def ordering_differs(null: NullSpec, n: int, records=None) -> OrderingEvidence:
    """Exhaustive search for a pair the two statistics order oppositely."""
    if records is None:
        records = statistics_table(null, n)
    witness = None
    for rx in records:
        for ry in records:
            if _strictly_greater(rx.r2, ry.r2) and _strictly_greater(ry.r1, rx.r1):
                witness = (rx.x, ry.x)
                break
        if witness:
            break
    b_n = c_n = None
    if n >= 2:
        b_n, c_n = lemma_thresholds(n)
    return OrderingEvidence(
        differs=witness is not None,
        witness=witness,
        lemma_condition=lemma_condition(null.tau_bar, n),
        b_n=b_n,
        c_n=c_n,
    )


# -- reversal search ----------------------------------------------------------


@dataclass(frozen=True)
class ConstructiveStep:
    """Closed-form reversal region when two allele-count classes are swapped."""

    alpha: Scalar
    m_restricted: int
    m_unrestricted: int
    threshold_tau: float
    region: tuple[float, float]


@dataclass(frozen=True)
class CounterexampleReport:
    tau_bar: Scalar
    n: int
    alpha: Optional[Scalar] = None
    restricted: Optional[RandomizedTest] = None
    unrestricted: Optional[RandomizedTest] = None
    reversal_taus: tuple[tuple[float, float], ...] = ()
    max_diff: float = 0.0
    argmax_tau: Optional[float] = None
    witness_swap: tuple[tuple[OutcomeCounts, ...], tuple[OutcomeCounts, ...]] = ((), ())
    constructive: Optional[ConstructiveStep] = None
    reversal_sizes: tuple[Scalar, ...] = field(default=())

    @property
    def found(self) -> bool:
        return bool(self.reversal_taus)

    def to_json(self) -> dict:
        out = {
            "tau_bar": scalar_str(self.tau_bar),
            "n": self.n,
            "found": self.found,
        }
        if not self.found:
            out["reversal_taus"] = []
            return out
        out.update(
            {
                "alpha": decimal_str(self.alpha, 6),
                "alpha_exact": scalar_str(self.alpha),
                "gamma_restricted": gamma_ratio_str(self.restricted),
                "gamma_unrestricted": gamma_ratio_str(self.unrestricted),
                "restricted_test": self.restricted.to_json(),
                "unrestricted_test": self.unrestricted.to_json(),
                "reversal_taus": [[f"{a:.9f}", f"{b:.9f}"] for a, b in self.reversal_taus],
                "max_diff": f"{self.max_diff:.9f}",
                "argmax_tau": f"{self.argmax_tau:.9f}",
                "witness_swap": {
                    "unrestricted_only": [x.to_json() for x in self.witness_swap[0]],
                    "restricted_only": [x.to_json() for x in self.witness_swap[1]],
                },
                "reversal_sizes": [scalar_str(a) for a in self.reversal_sizes],
            }
        )
        if self.constructive is not None:
            c = self.constructive
            out["constructive"] = {
                "alpha": scalar_str(c.alpha),
                "m_restricted": c.m_restricted,
                "m_unrestricted": c.m_unrestricted,
                "threshold_tau": f"{c.threshold_tau:.9f}",
                "region": [f"{c.region[0]:.9f}", f"{c.region[1]:.9f}"],
            }
        return out


def gamma_ratio_str(test: RandomizedTest) -> str:
    """Randomization probability as ``excess size / boundary mass``.

    For rational nulls both terms are scaled to a common denominator and the
    ratio is left unreduced, e.g. ``11907/117649`` rather than ``243/2401``.
    """
    if test.boundary is None:
        return "0"
    excess = test.gamma * test.boundary.null_mass
    mass = test.boundary.null_mass
    if isinstance(excess, Fraction) and isinstance(mass, Fraction):
        scale = math.lcm(excess.denominator, mass.denominator)
        return f"{excess.numerator * (scale // excess.denominator)}/{mass.numerator * (scale // mass.denominator)}"
    return scalar_str(test.gamma)


def _diff_weights(restricted: RandomizedTest, unrestricted: RandomizedTest) -> dict[int, Scalar]:
    w2 = unrestricted.hw_weights()
    w1 = restricted.hw_weights()
    out = {}
    for m in set(w1) | set(w2):
        w = w2.get(m, 0) - w1.get(m, 0)
        if w != 0 and not scalars_equal(w2.get(m, 0), w1.get(m, 0)):
            out[m] = w
    return out


class _DiffEvaluator:
    """Power difference ``beta2 - beta1`` along the submodel, float and exact."""

    def __init__(self, null: NullSpec, restricted: RandomizedTest, unrestricted: RandomizedTest):
        self.null = null
        self.restricted = restricted
        self.unrestricted = unrestricted
        self.hw = null.submodel.is_hardy_weinberg
        if self.hw:
            self.weights = _diff_weights(restricted, unrestricted)
            self.ms = np.array(sorted(self.weights), dtype=float)
            self.ws = np.array([float(self.weights[m]) for m in sorted(self.weights)])
            self.two_n = 2 * restricted.n

    def floats(self, taus: np.ndarray) -> np.ndarray:
        if self.hw:
            if not len(self.ms):
                return np.zeros_like(taus)
            t = taus[:, None]
            return (self.ws * t**self.ms * (1 - t) ** (self.two_n - self.ms)).sum(axis=1)
        return np.array([float(self.exact(t)) for t in taus])

    def exact(self, tau) -> Scalar:
        tau = _grid_value(tau, self.null.mode) if not isinstance(tau, (Fraction, mpmath.mpf)) else tau
        sub = self.null.submodel
        return submodel_power(self.unrestricted, sub, tau) - submodel_power(self.restricted, sub, tau)

    def positive(self, tau) -> bool:
        return _sign(self.exact(tau)) > 0


def _scan_nodes(mode: Mode) -> list[Scalar]:
    steps = int(1 / SCAN_STEP)
    if mode is Mode.RATIONAL:
        return [i * SCAN_STEP for i in range(steps + 1)]
    return [to_mpf(i * SCAN_STEP) for i in range(steps + 1)]


def _positive_mask(ev: _DiffEvaluator, nodes: list[Scalar], node_floats: np.ndarray) -> np.ndarray:
    values = ev.floats(node_floats)
    mask = values > 0
    for i in np.nonzero(np.abs(values) <= FLOAT_TRUST)[0]:
        mask[i] = ev.positive(nodes[i])
    return mask


def _bisect_edge(ev: _DiffEvaluator, outside, inside, mode: Mode) -> float:
    """Boundary between a non-positive node and a positive node, to ROOT_TOL."""
    a, b = float(outside), float(inside)
    while abs(b - a) > ROOT_TOL:
        mid = (a + b) / 2
        if ev.positive(_grid_value(mid, mode)):
            b = mid
        else:
            a = mid
    # a root that sits exactly on the node is reported exactly
    if _sign(ev.exact(outside)) == 0:
        return float(outside)
    return (a + b) / 2


def _verified(ev: _DiffEvaluator, lo: float, hi: float, mode: Mode) -> bool:
    probes = [(lo + hi) / 2]
    if hi - lo > 2 * VERIFY_OFFSET:
        probes += [lo + VERIFY_OFFSET, hi - VERIFY_OFFSET]
    return all(ev.positive(_grid_value(p, mode)) for p in probes)


def _reversal_intervals(ev: _DiffEvaluator, nodes, node_floats, mode: Mode):
    """Verified maximal intervals of ``tau`` in (0, 1) where the difference is positive."""
    mask = _positive_mask(ev, nodes, node_floats)
    intervals = []
    i, last = 0, len(nodes) - 1
    while i <= last:
        if not mask[i]:
            i += 1
            continue
        start = i
        while i + 1 <= last and mask[i + 1]:
            i += 1
        end = i
        lo = 0.0 if start == 0 else _bisect_edge(ev, nodes[start - 1], nodes[start], mode)
        hi = 1.0 if end == last else _bisect_edge(ev, nodes[end + 1], nodes[end], mode)
        if hi > lo and _verified(ev, lo, hi, mode):
            intervals.append((lo, hi))
        i = end + 1
    return intervals


def _argmax(ev: _DiffEvaluator, node_floats: np.ndarray, intervals) -> tuple[float, float]:
    values = ev.floats(node_floats)
    inside = np.zeros(len(node_floats), dtype=bool)
    for lo, hi in intervals:
        inside |= (node_floats >= lo) & (node_floats <= hi)
    if not inside.any():
        mids = np.array([(lo + hi) / 2 for lo, hi in intervals])
        vals = ev.floats(mids)
        k = int(np.argmax(vals))
        return float(vals[k]), float(mids[k])
    k = int(np.argmax(np.where(inside, values, -np.inf)))
    a = max(0.0, node_floats[k] - float(SCAN_STEP))
    b = min(1.0, node_floats[k] + float(SCAN_STEP))
    tau = golden_section(lambda t: -float(ev.floats(np.array([t]))[0]), a, b, 1e-9)
    best = float(ev.floats(np.array([tau]))[0])
    if best < values[k]:
        return float(values[k]), float(node_floats[k])
    return best, tau


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    """Minimiser of a unimodal ``f`` on ``[a, b]``."""
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def _candidate_sizes(restricted: OrderedPartition, unrestricted: OrderedPartition) -> list[Scalar]:
    raw = sorted(set(restricted.cum_sizes[:-1]) | set(unrestricted.cum_sizes[:-1]))
    sizes: list[Scalar] = []
    for s in raw:
        if 0 < s < 1 and not (sizes and scalars_equal(sizes[-1], s)):
            sizes.append(s)
    return sizes


def _constructive(null, restricted, unrestricted, sizes) -> Optional[ConstructiveStep]:
    """Walk attainable sizes upward to the first two-class disagreement.

    At such a size the two critical regions differ by exchanging outcomes of
    one allele count for outcomes of another, and the power difference has
    the form ``(1-tau)^(2n) * (w_p t^p + w_q t^q)`` with ``t = tau/(1-tau)``,
    whose sign change is solved in closed form.
    """
    if not null.submodel.is_hardy_weinberg:
        return None
    for alpha in sizes:
        tr, tu = make_test(restricted, alpha), make_test(unrestricted, alpha)
        weights = _diff_weights(tr, tu)
        if not weights:
            continue
        if len(weights) != 2:
            continue
        (p, wp), (q, wq) = sorted(weights.items())
        if (wp > 0) == (wq > 0):
            continue
        t_star = (to_mpf(-wp) / to_mpf(wq)) ** (mpmath.mpf(1) / (q - p))
        tau_star = float(t_star / (1 + t_star))
        region = (tau_star, 1.0) if wq > 0 else (0.0, tau_star)
        m_res, m_unres = (p, q) if wq > 0 else (q, p)
        return ConstructiveStep(alpha, m_res, m_unres, tau_star, region)
    return None


def find_reversal(null: NullSpec, n: int) -> CounterexampleReport:
    """Search every attainable size (and midpoints) for a power reversal.

    The brute-force scan is authoritative: every reported interval has been
    confirmed with exact arithmetic. The size reported is the one picked by
    the constructive walk when the scan confirms it, otherwise the smallest
    size with a confirmed reversal.
    """
    restricted, unrestricted = build_partitions(null, n)
    attainable = _candidate_sizes(restricted, unrestricted)
    candidates: list[Scalar] = []
    previous = 0 * attainable[0] if attainable else None
    for s in attainable:
        candidates.append((previous + s) / 2)
        candidates.append(s)
        previous = s
    if attainable:
        candidates.append((previous + 1) / 2)

    nodes = _scan_nodes(null.mode)
    node_floats = np.array([float(t) for t in nodes])
    found = []
    for alpha in candidates:
        tr, tu = make_test(restricted, alpha), make_test(unrestricted, alpha)
        ev = _DiffEvaluator(null, tr, tu)
        if ev.hw and not ev.weights:
            continue
        intervals = _reversal_intervals(ev, nodes, node_floats, null.mode)
        if intervals:
            found.append((alpha, tr, tu, ev, intervals))

    construct = _constructive(null, restricted, unrestricted, attainable)
    if not found:
        return CounterexampleReport(tau_bar=null.tau_bar, n=n, constructive=construct)

    chosen = found[0]
    if construct is not None:
        for entry in found:
            if scalars_equal(entry[0], construct.alpha):
                chosen = entry
                break
    alpha, tr, tu, ev, intervals = chosen
    max_diff, argmax_tau = _argmax(ev, node_floats, intervals)
    res_support, unres_support = set(tr.support()), set(tu.support())
    order = {x: k for k, x in enumerate(tr.outcomes)}
    swap = (
        tuple(sorted(unres_support - res_support, key=order.get)),
        tuple(sorted(res_support - unres_support, key=order.get)),
    )
    return CounterexampleReport(
        tau_bar=null.tau_bar,
        n=n,
        alpha=alpha,
        restricted=tr,
        unrestricted=tu,
        reversal_taus=tuple(intervals),
        max_diff=max_diff,
        argmax_tau=argmax_tau,
        witness_swap=swap,
        constructive=construct,
        reversal_sizes=tuple(entry[0] for entry in found),
    )


# -- bias ----------------------------------------------------------------------


def bias_check(test: RandomizedTest, submodel: SubmodelSpec, tau_grid: Iterable) -> list[tuple[Scalar, Scalar]]:
    """``(tau, power - size)`` along the grid; negative entries mean bias."""
    mode = Mode.RATIONAL if isinstance(test.size, Fraction) else Mode.EXTENDED
    out = []
    for tau in tau_grid:
        tau = _grid_value(tau, mode)
        out.append((tau, submodel_power(test, submodel, tau) - test.size))
    return out


@dataclass(frozen=True)
class BiasDip:
    intervals: tuple[tuple[float, float], ...]
    argmin_tau: Optional[float]
    min_excess: float

    @property
    def biased(self) -> bool:
        return bool(self.intervals)


def bias_dip(test: RandomizedTest, submodel: SubmodelSpec, tol: float = 1e-9) -> BiasDip:
    """Intervals where power falls below size, and the deepest point.

    Interval ends are located by exact-sign bisection; the minimum by golden
    section on each interval.
    """
    mode = Mode.RATIONAL if isinstance(test.size, Fraction) else Mode.EXTENDED

    def excess(tau):
        return submodel_power(test, submodel, _grid_value(tau, mode)) - test.size

    def below(tau) -> bool:
        return _sign(excess(tau)) < 0

    nodes = [i * SCAN_STEP for i in range(1, int(1 / SCAN_STEP))]
    flags = [below(t) for t in nodes]
    intervals = []
    i = 0
    while i < len(nodes):
        if not flags[i]:
            i += 1
            continue
        start = i
        while i + 1 < len(nodes) and flags[i + 1]:
            i += 1
        lo = _bisect_predicate(below, float(nodes[start - 1]) if start else 0.0, float(nodes[start]), tol)
        hi = _bisect_predicate(below, float(nodes[i + 1]) if i + 1 < len(nodes) else 1.0, float(nodes[i]), tol)
        intervals.append((lo, hi))
        i += 1
    if not intervals:
        return BiasDip((), None, 0.0)
    best_tau, best_val = None, math.inf
    for lo, hi in intervals:
        tau = golden_section(lambda t: float(excess(t)), lo, hi, tol)
        val = float(excess(tau))
        if val < best_val:
            best_tau, best_val = tau, val
    return BiasDip(tuple(intervals), best_tau, best_val)


def _bisect_predicate(pred, outside: float, inside: float, tol: float) -> float:
    a, b = outside, inside
    while abs(b - a) > tol:
        mid = (a + b) / 2
        if pred(mid):
            b = mid
        else:
            a = mid
    return (a + b) / 2


# -- null-value scan -----------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    tau_bar: Scalar
    differs: bool
    lemma_condition: Optional[int]
    cross_m_tie: bool
    reversal: bool
    alpha: Optional[Scalar]

    @property
    def confirmed(self) -> bool:
        """A reversal counts only when no level set mixes allele counts."""
        return self.reversal and not self.cross_m_tie


@dataclass(frozen=True)
class CorollarySummary:
    n: int
    rows: tuple[ScanRow, ...]

    @property
    def confirmed(self) -> int:
        return sum(r.confirmed for r in self.rows)

    @property
    def excluded(self) -> int:
        return sum(r.cross_m_tie for r in self.rows)

    @property
    def fraction(self) -> Optional[float]:
        if not self.rows:
            return None
        return self.confirmed / len(self.rows)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "points": len(self.rows),
            "confirmed": self.confirmed,
            "excluded_cross_m_ties": self.excluded,
            "fraction_confirmed": None if self.fraction is None else round(self.fraction, 6),
            "rows": [
                {
                    "tau_bar": scalar_str(r.tau_bar),
                    "differs": r.differs,
                    "lemma_condition": r.lemma_condition,
                    "cross_m_tie": r.cross_m_tie,
                    "reversal": r.reversal,
                    "confirmed": r.confirmed,
                    "alpha": None if r.alpha is None else scalar_str(r.alpha),
                }
                for r in self.rows
            ],
        }


def has_cross_m_tie(null: NullSpec, n: int) -> bool:
    return any(len(s.m_values) > 1 for p in build_partitions(null, n) for s in p.sets)


def _scan_point(n: int, tau_bar) -> ScanRow:
    null = NullSpec(tau_bar)
    evidence = ordering_differs(null, n)
    report = find_reversal(null, n)
    return ScanRow(
        tau_bar=null.tau_bar,
        differs=evidence.differs,
        lemma_condition=evidence.lemma_condition,
        cross_m_tie=has_cross_m_tie(null, n),
        reversal=report.found,
        alpha=report.alpha,
    )


def corollary_scan(n: int, tau_bar_grid: Iterable) -> CorollarySummary:
    """Ordering and reversal checks across a grid of null parameters."""
    if n < 2:
        raise ValueError(f"the scan needs n >= 2, got {n}")
    grid = list(tau_bar_grid)
    workers = min(_threads(), max(len(grid), 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda t: _scan_point(n, t), grid))
    return CorollarySummary(n=n, rows=tuple(rows))
