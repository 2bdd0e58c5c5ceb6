"""Level sets, randomized critical regions and power evaluation."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .lrt import NullSpec, StatRecord, statistics_table
from .scalars import (
    TIE_EPS,
    Mode,
    Scalar,
    coerce,
    combined_mode,
    scalar_log,
    scalar_str,
    scalars_equal,
    to_mpf,
)
from .simplex import (
    OutcomeCounts,
    ProbVector,
    multinomial_coefficient,
    multinomial_pmf,
)

MC_BLOCK = 1 << 18


class Kind(str, enum.Enum):
    RESTRICTED = "restricted"
    UNRESTRICTED = "unrestricted"


@dataclass(frozen=True)
class LevelSet:
    stat_value: Scalar
    members: tuple[OutcomeCounts, ...]
    null_mass: Scalar

    @property
    def m_values(self) -> frozenset[int]:
        return frozenset(x.m for x in self.members)

    def __contains__(self, x: OutcomeCounts) -> bool:
        return x in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class OrderedPartition:
    """Level sets of one statistic, most adverse to the null first."""

    kind: Kind
    sets: tuple[LevelSet, ...]
    cum_sizes: tuple[Scalar, ...]
    outcomes: tuple[OutcomeCounts, ...]
    null: NullSpec

    @property
    def n(self) -> int:
        return self.outcomes[0].n

    @property
    def K(self) -> int:
        return self.outcomes[0].K

    @property
    def mode(self) -> Mode:
        return combined_mode(*(s.stat_value for s in self.sets))

    def index_of(self, x: OutcomeCounts) -> int:
        for j, s in enumerate(self.sets):
            if x in s:
                return j
        raise KeyError(x)


def _stat(record: StatRecord, kind: Kind) -> Scalar:
    return record.r1 if kind is Kind.RESTRICTED else record.r2


def build_partition(
    null: NullSpec,
    n: int,
    kind: Kind,
    records: Optional[Sequence[StatRecord]] = None,
    tie_eps=TIE_EPS,
) -> OrderedPartition:
    """Group outcomes into level sets of ``r1`` (restricted) or ``r2``.

    Rational statistics are grouped by exact equality; extended ones when
    their logs differ by at most ``tie_eps``. Members keep enumeration order.
    """
    kind = Kind(kind)
    if records is None:
        records = statistics_table(null, n)
    values = [_stat(r, kind) for r in records]
    groups: list[list[StatRecord]] = []
    if combined_mode(*values) is Mode.RATIONAL:
        by_value: dict[Fraction, list[StatRecord]] = {}
        for rec, v in zip(records, values):
            by_value.setdefault(v, []).append(rec)
        groups = [by_value[v] for v in sorted(by_value, reverse=True)]
    else:
        logs = [scalar_log(v) for v in values]
        order = sorted(range(len(records)), key=lambda i: logs[i], reverse=True)
        anchor = None
        for i in order:
            if anchor is None or logs[anchor] - logs[i] > tie_eps:
                groups.append([])
                anchor = i
            groups[-1].append(records[i])
        position = {rec.x: k for k, rec in enumerate(records)}
        groups = [sorted(g, key=lambda r: position[r.x]) for g in groups]

    sets = []
    cum = []
    running = 0
    for g in groups:
        mass = sum((r.p_null for r in g), start=0 * g[0].p_null)
        running = running + mass
        sets.append(LevelSet(stat_value=_stat(g[0], kind), members=tuple(r.x for r in g), null_mass=mass))
        cum.append(running)
    return OrderedPartition(
        kind=kind,
        sets=tuple(sets),
        cum_sizes=tuple(cum),
        outcomes=tuple(r.x for r in records),
        null=null,
    )


def build_partitions(null: NullSpec, n: int) -> tuple[OrderedPartition, OrderedPartition]:
    """``(restricted, unrestricted)`` from a single statistics table."""
    records = statistics_table(null, n)
    return (
        build_partition(null, n, Kind.RESTRICTED, records),
        build_partition(null, n, Kind.UNRESTRICTED, records),
    )


def attainable_sizes(p: OrderedPartition) -> list[Scalar]:
    return list(p.cum_sizes)


@dataclass(frozen=True)
class RandomizedTest:
    """Reject on ``certain``; on ``boundary`` reject with probability ``gamma``."""

    kind: Kind
    certain: tuple[OutcomeCounts, ...]
    boundary: Optional[LevelSet]
    gamma: Scalar
    size: Scalar
    outcomes: tuple[OutcomeCounts, ...] = field(repr=False)
    _certain_set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_certain_set", frozenset(self.certain))

    @property
    def n(self) -> int:
        return self.outcomes[0].n

    @property
    def K(self) -> int:
        return self.outcomes[0].K

    @property
    def randomized(self) -> bool:
        return self.boundary is not None

    def rejection_probability(self, x: OutcomeCounts) -> Scalar:
        if x in self._certain_set:
            return 1
        if self.boundary is not None and x in self.boundary:
            return self.gamma
        return 0

    def support(self) -> tuple[OutcomeCounts, ...]:
        """Outcomes with positive rejection probability."""
        extra = self.boundary.members if self.boundary is not None else ()
        return self.certain + tuple(extra)

    def hw_weights(self) -> dict[int, Scalar]:
        """Rejection mass per allele count for Hardy-Weinberg alternatives.

        Power at ``hw_map(tau)`` is the sum over ``m`` of
        ``w[m] * tau**m * (1 - tau)**(2n - m)``.
        """
        weights: dict[int, Scalar] = {}
        for x in self.support():
            coef = multinomial_coefficient(x) * 2 ** x[1]
            weights[x.m] = weights.get(x.m, 0) + self.rejection_probability(x) * coef
        return weights

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "certain": [x.to_json() for x in self.certain],
            "boundary": [x.to_json() for x in self.boundary.members] if self.boundary else [],
            "gamma": scalar_str(self.gamma),
            "size": scalar_str(self.size),
        }


def make_test(p: OrderedPartition, alpha) -> RandomizedTest:
    """The conventional randomized LRT of exact size ``alpha``."""
    alpha = coerce(alpha)
    if p.mode is not Mode.RATIONAL or not isinstance(alpha, Fraction):
        alpha = to_mpf(alpha)
    if not 0 < alpha < 1:
        raise ValueError(f"size must lie strictly between 0 and 1, got {alpha}")
    cum = p.cum_sizes
    j = 0
    while j < len(cum) and (cum[j] < alpha or scalars_equal(cum[j], alpha)):
        j += 1
    certain = tuple(x for s in p.sets[:j] for x in s.members)
    prev = cum[j - 1] if j else 0 * alpha
    if j and scalars_equal(prev, alpha):
        return RandomizedTest(p.kind, certain, None, 0 * alpha, prev, p.outcomes)
    boundary = p.sets[j]
    gamma = (alpha - prev) / boundary.null_mass
    size = prev + gamma * boundary.null_mass
    return RandomizedTest(p.kind, certain, boundary, gamma, size, p.outcomes)


def exact_power(test: RandomizedTest, theta_alt: ProbVector) -> Scalar:
    """Rejection probability of ``test`` when data follow ``theta_alt``."""
    if theta_alt.K != test.K:
        raise ValueError(f"alternative has {theta_alt.K} categories, test {test.K}")
    total = sum((multinomial_pmf(x, theta_alt) for x in test.certain), start=Fraction(0))
    if test.boundary is not None:
        edge = sum((multinomial_pmf(x, theta_alt) for x in test.boundary.members), start=Fraction(0))
        total = total + test.gamma * edge
    return total


def hw_power(test: RandomizedTest, tau) -> Scalar:
    """``exact_power(test, hw_map(tau))`` via the allele-count weights."""
    tau = coerce(tau)
    two_n = 2 * test.n
    total = 0 * tau
    for m, w in test.hw_weights().items():
        total = total + w * tau**m * (1 - tau) ** (two_n - m)
    return total


def _threads() -> int:
    raw = os.environ.get("LRT_EXACT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def mc_power(
    test: RandomizedTest,
    theta_alt: ProbVector,
    reps: int,
    seed: int,
) -> tuple[float, float]:
    """Monte Carlo rejection rate and its binomial standard error.

    Samples are drawn in blocks of ``MC_BLOCK`` from generators seeded by
    ``(seed, block_index)``, so results depend only on ``(seed, reps)`` and
    not on how many threads run the blocks. Randomization uniforms are drawn
    only for samples that land on the boundary level set, in sample order.
    """
    if reps < 1:
        raise ValueError("need at least one replicate")
    probs = np.array(theta_alt.as_floats(), dtype=float)
    probs = probs / probs.sum()
    n, K = test.n, test.K
    base = n + 1
    codes = np.array([sum(c * base**i for i, c in enumerate(x)) for x in test.outcomes])
    lookup_size = base**K if base**K <= 10**7 else None
    reject = np.zeros(len(test.outcomes))
    on_boundary = np.zeros(len(test.outcomes), dtype=bool)
    for k, x in enumerate(test.outcomes):
        r = test.rejection_probability(x)
        if r == 1:
            reject[k] = 1.0
        elif r != 0:
            on_boundary[k] = True
    gamma = float(test.gamma)

    if lookup_size is not None:
        table = np.full(lookup_size, -1, dtype=np.int64)
        table[codes] = np.arange(len(codes))
    else:
        order = np.argsort(codes)
        sorted_codes = codes[order]
    weights = base ** np.arange(K, dtype=np.int64)

    def run_block(block: int) -> int:
        size = min(MC_BLOCK, reps - block * MC_BLOCK)
        rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
        counts = rng.multinomial(n, probs, size=size)
        sample_codes = counts @ weights
        if lookup_size is not None:
            idx = table[sample_codes]
        else:
            idx = order[np.searchsorted(sorted_codes, sample_codes)]
        hits = int(reject[idx].sum())
        edge = on_boundary[idx]
        n_edge = int(edge.sum())
        if n_edge:
            u = rng.random(n_edge)
            hits += int((u < gamma).sum())
        return hits

    n_blocks = math.ceil(reps / MC_BLOCK)
    workers = min(_threads(), n_blocks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(run_block, range(n_blocks)))
    else:
        hits = sum(run_block(b) for b in range(n_blocks))
    estimate = hits / reps
    stderr = math.sqrt(estimate * (1 - estimate) / reps)
    return estimate, stderr
