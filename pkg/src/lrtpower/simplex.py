"""Multinomial outcomes, probability vectors and one-parameter submodels."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

import mpmath

from .scalars import Mode, Scalar, coerce, combined_mode, scalar_log, to_json, to_mpf

MAX_OUTCOMES = 10**7


@dataclass(frozen=True)
class OutcomeCounts:
    """A multinomial outcome: ``counts[i]`` observations in category ``i``."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 2:
            raise ValueError("an outcome needs at least two categories")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def K(self) -> int:
        return len(self.counts)

    @property
    def m(self) -> int:
        """Allele count ``2*x1 + x2`` of a trinomial genotype outcome."""
        if self.K != 3:
            raise ValueError("m is defined for trinomial outcomes only")
        return 2 * self.counts[0] + self.counts[1]

    def __iter__(self) -> Iterator[int]:
        return iter(self.counts)

    def __len__(self) -> int:
        return len(self.counts)

    def __getitem__(self, i: int) -> int:
        return self.counts[i]

    def __str__(self) -> str:
        return ",".join(map(str, self.counts))

    def to_json(self) -> list[int]:
        return list(self.counts)


def outcome(*counts: int) -> OutcomeCounts:
    if len(counts) == 1 and not isinstance(counts[0], int):
        counts = tuple(counts[0])
    return OutcomeCounts(tuple(counts))


@dataclass(frozen=True)
class ProbVector:
    """Category probabilities; entries share one arithmetic mode."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(coerce(p) for p in self.probs)
        if len(probs) < 2:
            raise ValueError("a probability vector needs at least two entries")
        mode = combined_mode(*probs)
        if mode is Mode.EXTENDED:
            probs = tuple(to_mpf(p) for p in probs)
        if any(p < 0 or p > 1 for p in probs):
            raise ValueError(f"probabilities must lie in [0, 1]: {probs}")
        total = sum(probs)
        if mode is Mode.RATIONAL:
            if total != 1:
                raise ValueError(f"probabilities sum to {total}, not 1")
        elif abs(total - 1) > 1e-12 * len(probs):
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "probs", probs)

    @property
    def K(self) -> int:
        return len(self.probs)

    @property
    def mode(self) -> Mode:
        return combined_mode(*self.probs)

    def __iter__(self):
        return iter(self.probs)

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, i: int):
        return self.probs[i]

    def is_interior(self) -> bool:
        return all(p > 0 for p in self.probs)

    def as_floats(self) -> list[float]:
        return [float(p) for p in self.probs]

    def to_json(self) -> list[dict]:
        return [to_json(p) for p in self.probs]


class MLEStrategy(str, enum.Enum):
    CLOSED_FORM_HW = "closed-form-hw"
    NUMERIC_SEARCH = "numeric-search"


@dataclass(frozen=True)
class SubmodelSpec:
    """A one-parameter curve ``tau -> map(tau)`` inside the K-simplex.

    ``jacobian`` returns the derivative of every coordinate of ``map`` with
    respect to ``tau``; it is only needed for Fisher information.
    """

    K: int
    param_domain: tuple[float, float]
    map: Callable[[Scalar], ProbVector]
    jacobian: Optional[Callable[[float], Sequence[float]]] = None
    mle_strategy: MLEStrategy = MLEStrategy.NUMERIC_SEARCH
    name: str = "custom"
    is_hardy_weinberg: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.mle_strategy is MLEStrategy.CLOSED_FORM_HW and not (
            self.is_hardy_weinberg and self.K == 3
        ):
            raise ValueError("closed-form MLE requires the Hardy-Weinberg map on K = 3")
        lo, hi = self.param_domain
        if not lo < hi:
            raise ValueError(f"empty parameter domain {self.param_domain}")

    def contains(self, tau) -> bool:
        lo, hi = self.param_domain
        return lo <= tau <= hi


def enumerate_outcomes(K: int, n: int) -> list[OutcomeCounts]:
    """All compositions of ``n`` into ``K`` parts, reverse-lexicographic.

    >>> [str(x) for x in enumerate_outcomes(2, 2)]
    ['2,0', '1,1', '0,2']
    """
    if K < 2:
        raise ValueError(f"need K >= 2 categories, got {K}")
    if n < 0:
        raise ValueError(f"sample size must be non-negative, got {n}")
    total = math.comb(n + K - 1, K - 1)
    if total > MAX_OUTCOMES:
        raise ValueError(f"{total} outcomes exceeds the enumeration limit {MAX_OUTCOMES}")

    def compositions(remaining: int, parts: int):
        if parts == 1:
            yield (remaining,)
            return
        for first in range(remaining, -1, -1):
            for rest in compositions(remaining - first, parts - 1):
                yield (first,) + rest

    return [OutcomeCounts(c) for c in compositions(n, K)]


def multinomial_coefficient(x: OutcomeCounts) -> int:
    coef = math.factorial(x.n)
    for c in x:
        coef //= math.factorial(c)
    return coef


def multinomial_pmf(x: OutcomeCounts, theta: ProbVector) -> Scalar:
    """``n!/prod(x_i!) * prod(theta_i**x_i)`` with ``0**0 == 1``."""
    if len(x) != len(theta):
        raise ValueError(f"outcome has {len(x)} categories, probability vector {len(theta)}")
    value = Fraction(multinomial_coefficient(x))
    if theta.mode is Mode.EXTENDED:
        value = mpmath.mpf(value.numerator)
    for c, p in zip(x, theta):
        if c:
            value *= p**c
    return value


def multinomial_log_pmf(x: OutcomeCounts, theta: ProbVector) -> mpmath.mpf:
    """Log of :func:`multinomial_pmf`; ``-inf`` when it is zero."""
    if len(x) != len(theta):
        raise ValueError(f"outcome has {len(x)} categories, probability vector {len(theta)}")
    total = mpmath.log(multinomial_coefficient(x))
    for c, p in zip(x, theta):
        if c:
            if p == 0:
                return mpmath.ninf
            total += c * scalar_log(p)
    return total


def hw_map(tau) -> ProbVector:
    """Hardy-Weinberg genotype frequencies ``(tau^2, 2 tau (1-tau), (1-tau)^2)``."""
    tau = coerce(tau)
    if not 0 <= tau <= 1:
        raise ValueError(f"allele frequency must lie in [0, 1], got {tau}")
    return ProbVector((tau * tau, 2 * tau * (1 - tau), (1 - tau) * (1 - tau)))


def hw_jacobian(tau: float) -> list[float]:
    tau = float(tau)
    return [2 * tau, 2 - 4 * tau, -2 * (1 - tau)]


def hardy_weinberg(numeric: bool = False) -> SubmodelSpec:
    """The Hardy-Weinberg submodel of the trinomial.

    ``numeric=True`` swaps the closed-form MLE for the generic search, which
    is useful for cross-checking the search.
    """
    return SubmodelSpec(
        K=3,
        param_domain=(0.0, 1.0),
        map=hw_map,
        jacobian=hw_jacobian,
        mle_strategy=MLEStrategy.NUMERIC_SEARCH if numeric else MLEStrategy.CLOSED_FORM_HW,
        name="hardy-weinberg",
        is_hardy_weinberg=True,
    )


HARDY_WEINBERG = hardy_weinberg()
