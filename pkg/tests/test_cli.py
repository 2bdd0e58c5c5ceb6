from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

import pytest

from lrtpower import cli
from lrtpower.cli import Command, RunConfig, UsageError, grid_points, main, parse_grid

from .reference import REFERENCE_TABLE


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestGrid:
    def test_decimal_grid_is_exact(self):
        points = grid_points(parse_grid("0.21:0.79:0.01"))
        assert len(points) == 59
        assert points[0] == Fraction(21, 100) and points[-1] == Fraction(79, 100)

    @pytest.mark.parametrize("text", ["0:1", "0:1:0", "0:1:-0.1", "1:0:0.1", "a:b:c"])
    def test_invalid(self, text):
        with pytest.raises(UsageError):
            parse_grid(text)

    def test_config_rejects_bad_alpha(self):
        with pytest.raises(UsageError):
            RunConfig(Command.POWER, alpha="1.5")

    def test_rational_mode_from_syntax(self):
        assert RunConfig(Command.TABLE, tau_bar="3/10").rational_mode
        assert not RunConfig(Command.TABLE, tau_bar="0.3").rational_mode


class TestTable:
    def test_preset(self, capsys):
        code, out, _ = run(capsys, "table", "--preset", "table1")
        assert code == 0
        table = rows(out)
        assert len(table) == 10
        by_x = {(int(r["x1"]), int(r["x2"]), int(r["x3"])): r for r in table}
        for counts, (p_null, _, _, lam2, lam1) in REFERENCE_TABLE.items():
            assert by_x[counts]["p_null"] == p_null
            assert by_x[counts]["lambda2"] == lam2
        assert by_x[(2, 0, 1)]["lambda1"] == "3.420312"

    def test_single_observation(self, capsys):
        code, out, _ = run(capsys, "table", "--n", "1", "--tau-bar", "1/2")
        assert code == 0 and len(rows(out)) == 3

    def test_null_equal_to_estimate(self, capsys):
        _, out, _ = run(capsys, "table", "--n", "3", "--tau-bar", "1/2")
        center = next(r for r in rows(out) if (r["x1"], r["x2"], r["x3"]) == ("1", "1", "1"))
        assert center["lambda1"] == "0.000000"

    def test_json(self, capsys):
        _, out, _ = run(capsys, "table", "--preset", "table1", "--format", "json")
        obj = json.loads(out)
        assert obj["n"] == 3 and len(obj["rows"]) == 10

    def test_writes_file(self, capsys, tmp_path):
        target = tmp_path / "table.csv"
        code, out, _ = run(capsys, "table", "--preset", "table1", "--out", str(target))
        assert code == 0 and out == ""
        assert len(rows(target.read_text())) == 10

    def test_flag_overrides_preset(self, capsys):
        _, out, _ = run(capsys, "table", "--preset", "table1", "--n", "2")
        assert len(rows(out)) == 6


class TestPower:
    def test_figure_preset_has_both_signs(self, capsys, tmp_path):
        plot = tmp_path / "diff.png"
        code, out, _ = run(capsys, "power", "--preset", "figure1", "--plot", str(plot))
        assert code == 0
        diffs = [float(r["diff"]) for r in rows(out)]
        assert len(diffs) == 999
        assert min(diffs) < 0 < max(diffs)
        assert plot.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_grid_through_null(self, capsys):
        _, out, _ = run(capsys, "power", "--n", "3", "--tau-bar", "3/10", "--alpha", "0.022842", "--grid", "0.2:0.4:0.1")
        table = rows(out)
        assert table[1]["tau"] == "0.300000000"
        assert table[1]["diff"] == "0.000000000"

    def test_grid_must_be_interior(self, capsys):
        code, _, err = run(capsys, "power", "--n", "3", "--tau-bar", "3/10", "--alpha", "1/20", "--grid", "0:1:0.5")
        assert code == 2 and "inside" in err


class TestCounterexample:
    def test_preset(self, capsys):
        code, out, _ = run(capsys, "counterexample", "--preset", "cex")
        assert code == 0
        report = json.loads(out)
        assert report["alpha"] == "0.022842"
        assert report["gamma_restricted"] == "11907/117649"
        assert report["found"] is True

    def test_no_ordering_difference(self, capsys):
        code, out, _ = run(capsys, "counterexample", "--n", "1", "--tau-bar", "1/2")
        assert code == 0
        assert json.loads(out)["found"] is False

    def test_scan(self, capsys):
        code, out, _ = run(capsys, "counterexample", "--n", "3", "--scan", "0.29:0.31:0.01")
        assert code == 0
        summary = json.loads(out)
        assert summary["points"] == 3
        assert summary["confirmed"] == 3

    def test_scan_csv(self, capsys):
        _, out, _ = run(capsys, "counterexample", "--n", "3", "--scan", "0.3:0.3:0.01", "--format", "csv")
        (row,) = rows(out)
        assert row["tau_bar"] == "3/10" and row["confirmed"] == "1"


class TestAsym:
    def test_dominance(self, capsys):
        code, out, _ = run(capsys, "asym", "--k", "2", "--d", "1", "--ell", "0", "--lam", "1", "--alpha", "0.05")
        assert code == 0
        (row,) = rows(out)
        assert float(row["restricted"]) > float(row["unrestricted"])
        assert float(row["margin"]) > 0

    def test_null(self, capsys):
        _, out, _ = run(capsys, "asym", "--k", "2", "--d", "1", "--lam", "0")
        (row,) = rows(out)
        assert float(row["restricted"]) == pytest.approx(0.05, abs=1e-10)
        assert float(row["unrestricted"]) == pytest.approx(0.05, abs=1e-10)

    def test_sweep(self, capsys):
        _, out, _ = run(capsys, "asym", "--k", "3", "--d", "1", "--grid", "0.5:8:0.5", "--format", "json")
        margins = [r["margin"] for r in json.loads(out)["rows"]]
        assert len(margins) == 16 and all(m > 0 for m in margins)

    def test_bad_dimensions(self, capsys):
        code, _, err = run(capsys, "asym", "--k", "1", "--d", "1", "--lam", "1")
        assert code == 2 and err


class TestMcCheck:
    def test_preset(self, capsys):
        code, out, _ = run(capsys, "mc-check", "--preset", "cex", "--seed", "42")
        assert code == 0
        (row,) = rows(out)
        assert row["exact"].startswith("0.110956")
        assert abs(float(row["z"])) <= 4

    def test_single_replicate(self, capsys):
        code, _, _ = run(capsys, "mc-check", "--preset", "cex", "--reps", "1")
        assert code == 0

    def test_deterministic(self, capsys):
        argv = ("mc-check", "--preset", "cex", "--seed", "9", "--reps", "50000")
        first = run(capsys, *argv)
        second = run(capsys, *argv)
        assert first == second

    def test_off_submodel_alternative(self, capsys):
        code, out, _ = run(
            capsys, "mc-check", "--preset", "cex", "--theta", "1/2,1/4,1/4", "--which", "unrestricted", "--reps", "200000"
        )
        assert code == 0 and rows(out)[0]["test"] == "unrestricted"

    def test_verification_failure_exit_code(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "mc_power", lambda *args, **kwargs: (0.5, 0.0005))
        code, out, _ = run(capsys, "mc-check", "--preset", "cex")
        assert code == 1
        assert rows(out)[0]["pass"] == "0"


class TestUsageErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ("table",),
            ("table", "--n", "3"),
            ("table", "--n", "3", "--tau-bar", "0"),
            ("power", "--n", "3", "--tau-bar", "3/10"),
            ("power", "--preset", "figure1", "--alpha", "2"),
            ("power", "--preset", "figure1", "--grid", "0.1:0.2:0"),
            ("counterexample", "--tau-bar", "3/10"),
            ("mc-check", "--preset", "cex", "--reps", "0"),
            ("table", "--preset", "table1", "--precision", "10"),
            ("bogus",),
            ("table", "--preset", "nope"),
        ],
    )
    def test_exit_two(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 2
        assert err.strip()
