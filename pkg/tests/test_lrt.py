from __future__ import annotations

import csv
import io
import math
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrtpower.lrt import (
    NoMLEError,
    NullSpec,
    hw_restricted_mle,
    numeric_restricted_mle,
    restricted_mle,
    statistics_table,
    table_csv,
    unrestricted_mle,
)
from lrtpower.scalars import decimal_str
from lrtpower.simplex import ProbVector, SubmodelSpec, enumerate_outcomes, hardy_weinberg, outcome

from .reference import REFERENCE_TABLE

F = Fraction


def lambda_oracle(p_hat: Fraction, p_null: Fraction) -> str:
    """2 log(p_hat / p_null) at 80 digits, rounded half-up to 6 decimals."""
    with mpmath.workdps(80):
        value = 2 * (mpmath.log(p_hat.numerator) - mpmath.log(p_hat.denominator))
        value -= 2 * (mpmath.log(p_null.numerator) - mpmath.log(p_null.denominator))
        text = mpmath.nstr(value, 40, min_fixed=-100, max_fixed=100)
    quantized = Decimal(text).quantize(Decimal("0.000001"), rounding=ROUND_HALF_UP)
    return "0.000000" if quantized.is_zero() else str(quantized)


@pytest.fixture(scope="module")
def table1():
    return statistics_table(NullSpec(F(3, 10)), 3)


class TestNullSpec:
    @pytest.mark.parametrize("tau", [0, 1, F(3, 2)])
    def test_rejects_boundary(self, tau):
        with pytest.raises(ValueError):
            NullSpec(tau)

    def test_caches_theta(self):
        null = NullSpec(F(3, 10))
        assert tuple(null.theta_bar) == (F(9, 100), F(42, 100), F(49, 100))


class TestMLE:
    def test_unrestricted(self):
        assert tuple(unrestricted_mle(outcome(2, 1, 0))) == (F(2, 3), F(1, 3), 0)
        assert tuple(unrestricted_mle(outcome(1, 1, 1))) == (F(1, 3),) * 3
        assert tuple(unrestricted_mle(outcome(0, 5, 0))) == (0, 1, 0)

    def test_unrestricted_needs_data(self):
        with pytest.raises(ValueError):
            unrestricted_mle(outcome(0, 0, 0))

    def test_hw_closed_form(self):
        assert hw_restricted_mle(outcome(2, 0, 1)) == F(2, 3)
        assert hw_restricted_mle(outcome(0, 0, 4)) == 0
        assert hw_restricted_mle(outcome(1, 1, 1)) == F(1, 2)

    def test_hw_closed_form_needs_trinomial(self):
        with pytest.raises(ValueError):
            hw_restricted_mle(outcome(1, 1))

    def test_numeric_search_matches_closed_form(self):
        tau = numeric_restricted_mle(outcome(2, 0, 1), hardy_weinberg(numeric=True))
        assert abs(tau - F(2, 3)) < 1e-10

    def test_numeric_search_boundary_maximum(self):
        tau = numeric_restricted_mle(outcome(3, 0, 0), hardy_weinberg(numeric=True))
        assert abs(tau - 1) < 1e-10

    def test_numeric_search_linear_curve(self):
        # d/dt log(t (1 - t)) = 0 at t = 1/2
        line = SubmodelSpec(K=3, param_domain=(0.0, 1.0), map=lambda t: ProbVector((t, 1 - t, 0 * t)))
        assert abs(numeric_restricted_mle(outcome(1, 1, 0), line) - F(1, 2)) < 1e-10

    def test_numeric_search_no_mle(self):
        line = SubmodelSpec(K=3, param_domain=(0.0, 1.0), map=lambda t: ProbVector((t, 1 - t, 0 * t)))
        with pytest.raises(NoMLEError):
            numeric_restricted_mle(outcome(0, 0, 2), line)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_numeric_agrees_on_all_outcomes(self, n):
        numeric = hardy_weinberg(numeric=True)
        for x in enumerate_outcomes(3, n):
            assert abs(restricted_mle(x, numeric) - hw_restricted_mle(x)) < 1e-10


class TestStatisticsTable:
    def test_ten_rows_in_order(self, table1):
        assert [r.x.counts for r in table1] == list(REFERENCE_TABLE)

    def test_exact_likelihood_columns(self, table1):
        for rec in table1:
            p_null, p_unres, p_res, _, _ = REFERENCE_TABLE[rec.x.counts]
            assert decimal_str(rec.p_null, 6) == p_null
            assert rec.p_unres == p_unres
            assert rec.p_res == p_res

    def test_exact_null_column(self, table1):
        assert table1[0].p_null == F(729, 10**6)
        assert table1[2].p_null == F(11907, 10**6)

    def test_statistics_against_log_oracle(self, table1):
        for rec in table1:
            assert _row(table1, rec.x.counts)["lambda2"] == lambda_oracle(rec.p_unres, rec.p_null)
            assert _row(table1, rec.x.counts)["lambda1"] == lambda_oracle(rec.p_res, rec.p_null)

    def test_reference_statistics(self, table1):
        for counts, (_, _, _, lam2, lam1) in REFERENCE_TABLE.items():
            row = _row(table1, counts)
            assert row["lambda2"] == lam2
            if counts != (0, 1, 2):
                assert row["lambda1"] == lam1

    def test_misprinted_cell_is_correctly_rounded(self, table1):
        # exact value 0.56796054...; the reference 0.567960 is a rounding slip
        row = _row(table1, (0, 1, 2))
        assert row["lambda1"] == "0.567961"
        rec = next(r for r in table1 if r.x.counts == (0, 1, 2))
        assert 0.5679605 < rec.lambda1 < 0.5679606

    def test_headline_statistics(self, table1):
        assert _row(table1, (3, 0, 0))["lambda2"] == _row(table1, (3, 0, 0))["lambda1"] == "14.447674"
        assert _row(table1, (2, 0, 1))["lambda2"] == "7.239397"
        assert _row(table1, (2, 0, 1))["lambda1"] == "3.420312"

    def test_null_equal_to_estimate_gives_zero(self):
        records = statistics_table(NullSpec(F(1, 2)), 3)
        center = next(r for r in records if r.x.counts == (1, 1, 1))
        assert center.r1 == 1
        assert _row(records, (1, 1, 1))["lambda1"] == "0.000000"

    def test_single_observation(self):
        assert len(statistics_table(NullSpec(F(1, 2)), 1)) == 3

    def test_extended_mode_matches_rational_csv(self, table1):
        extended = statistics_table(NullSpec("0.3"), 3)
        assert table_csv(extended) == table_csv(table1)

    def test_csv_header(self, table1):
        header = table_csv(table1).splitlines()[0]
        assert header == "x1,x2,x3,p_null,p_unres,p_res,lambda2,lambda1,m"


def _row(records, counts):
    for row in csv.DictReader(io.StringIO(table_csv(records))):
        if (int(row["x1"]), int(row["x2"]), int(row["x3"])) == counts:
            return row
    raise KeyError(counts)


tau_bars = st.fractions(min_value=F(1, 100), max_value=F(99, 100), max_denominator=200)


class TestProperties:
    @settings(max_examples=30, deadline=None)
    @given(tau_bar=tau_bars, n=st.integers(1, 6))
    def test_ratio_ordering(self, tau_bar, n):
        for rec in statistics_table(NullSpec(tau_bar), n):
            assert rec.r2 >= rec.r1 >= 1
            assert rec.lambda2 >= rec.lambda1 - 1e-12
            assert rec.lambda2 >= -1e-12
            assert abs(rec.lambda2 - 2 * math.log(rec.r2)) < 1e-10
            assert abs(rec.lambda1 - 2 * math.log(rec.r1)) < 1e-10

    @settings(max_examples=30, deadline=None)
    @given(tau_bar=tau_bars, n=st.integers(1, 6))
    def test_restricted_ratio_depends_only_on_allele_count(self, tau_bar, n):
        by_m = {}
        for rec in statistics_table(NullSpec(tau_bar), n):
            assert by_m.setdefault(rec.m, rec.r1) == rec.r1

    @settings(max_examples=30, deadline=None)
    @given(tau_bar=tau_bars, n=st.integers(1, 6))
    def test_unrestricted_statistic_zero_only_at_null(self, tau_bar, n):
        null = NullSpec(tau_bar)
        for rec in statistics_table(null, n):
            at_null = tuple(unrestricted_mle(rec.x)) == tuple(null.theta_bar)
            assert (rec.r2 == 1) == at_null
