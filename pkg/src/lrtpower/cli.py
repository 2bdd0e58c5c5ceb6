"""Command-line front end: ``lrtpower <command> [flags]``.

Exit codes are 0 on success, 1 when ``mc-check`` finds ``|z| > 5`` and 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import math
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

from . import asymptotics
from .analysis import corollary_scan, find_reversal, power_curve, power_curve_csv, size_tests, submodel_power
from .construction import exact_power, mc_power
from .lrt import NullSpec, statistics_table, table_csv
from .scalars import Mode, Scalar, coerce, decimal_str, parse_scalar, scalar_str
from .simplex import ProbVector

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
MC_Z_LIMIT = 5.0


class UsageError(Exception):
    pass


class Command(str, enum.Enum):
    TABLE = "table"
    POWER = "power"
    COUNTEREXAMPLE = "counterexample"
    ASYM = "asym"
    MC_CHECK = "mc-check"


PRESETS: dict[str, dict] = {
    "table1": {"n": 3, "tau_bar": "3/10"},
    "figure1": {"n": 10, "tau_bar": "3/10", "alpha": "1/20", "grid": "0.001:0.999:0.001"},
    "cex": {"n": 3, "tau_bar": "3/10", "alpha": "0.022842", "tau": "0.5"},
}


def parse_grid(text: str) -> tuple[Fraction, Fraction, Fraction]:
    """``"a:b:s"`` as exact rationals; decimals are read exactly."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must look like start:stop:step, got {text!r}")
    try:
        start, stop, step = (parse_scalar(p, Mode.RATIONAL) for p in parts)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if step <= 0:
        raise UsageError(f"grid step must be positive, got {parts[2]}")
    if stop < start:
        raise UsageError(f"grid stop {parts[1]} is below start {parts[0]}")
    return start, stop, step


def grid_points(grid: tuple[Fraction, Fraction, Fraction]) -> list[Fraction]:
    start, stop, step = grid
    count = int((stop - start) / step) + 1
    return [start + i * step for i in range(count)]


@dataclass(frozen=True)
class RunConfig:
    command: Command
    n: Optional[int] = None
    tau_bar: Optional[str] = None
    alpha: Optional[str] = None
    grid: Optional[tuple[Fraction, Fraction, Fraction]] = None
    seed: int = 0
    reps: int = 1_000_000
    output_format: Optional[str] = None
    precision_digits: int = 60
    places: Optional[int] = None
    out: Optional[str] = None
    plot: Optional[str] = None
    scan: Optional[tuple[Fraction, Fraction, Fraction]] = None
    tau: Optional[str] = None
    theta: Optional[str] = None
    which: str = "restricted"
    k: Optional[int] = None
    d: Optional[int] = None
    ell: int = 0
    lam: Optional[float] = None

    def __post_init__(self):
        if self.n is not None and self.n < 0:
            raise UsageError(f"--n must be non-negative, got {self.n}")
        if self.reps < 1:
            raise UsageError(f"--reps must be positive, got {self.reps}")
        if self.precision_digits < 40:
            raise UsageError(f"--precision must be at least 40 digits, got {self.precision_digits}")
        if self.places is not None and self.places < 0:
            raise UsageError(f"--places must be non-negative, got {self.places}")
        if self.alpha is not None:
            a = _parse(self.alpha, "--alpha", Mode.RATIONAL)
            if not 0 < a < 1:
                raise UsageError(f"--alpha must lie strictly between 0 and 1, got {self.alpha}")

    @property
    def rational_mode(self) -> bool:
        return self.tau_bar is not None and "/" in self.tau_bar

    @property
    def mode(self) -> Mode:
        return Mode.RATIONAL if self.rational_mode else Mode.EXTENDED

    def fmt(self, default: str = "csv") -> str:
        return self.output_format or default

    def digits(self, default: int = 6) -> int:
        """Displayed decimal places: ``--places`` if given, else the command default."""
        return default if self.places is None else self.places

    def require(self, *names: str) -> None:
        missing = [f"--{name.replace('_', '-')}" for name in names if getattr(self, name) is None]
        if missing:
            raise UsageError(f"{self.command.value} needs {', '.join(missing)}")

    def null(self) -> NullSpec:
        self.require("tau_bar")
        try:
            return NullSpec(_parse(self.tau_bar, "--tau-bar"))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def alpha_scalar(self) -> Scalar:
        self.require("alpha")
        return _parse(self.alpha, "--alpha", self.mode)


def _parse(text: str, flag: str, mode: Optional[Mode] = None) -> Scalar:
    try:
        return parse_scalar(text, mode)
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from exc


def _common_flags() -> argparse.ArgumentParser:
    # absent flags stay out of the namespace so presets can fill them
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--n", type=int, help="sample size")
    common.add_argument("--tau-bar", dest="tau_bar", help="null allele frequency; p/q selects rational mode")
    common.add_argument("--alpha", help="test size")
    common.add_argument("--grid", help="start:stop:step grid of alternatives (or noncentralities for asym)")
    common.add_argument("--seed", type=int, help="Monte Carlo seed (default 0)")
    common.add_argument("--reps", type=int, help="Monte Carlo replicates (default 1000000)")
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--format", dest="output_format", choices=("csv", "json"), help="output format (default csv; json for counterexample)")
    common.add_argument("--precision", dest="precision_digits", type=int, help="working digits for extended mode (default 60)")
    common.add_argument("--places", type=int, help="displayed decimal places (default 6; 9 for power, 10 for asym)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="fix the parameters of a reference run")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrtpower",
        description="Exact finite-sample comparison of restricted and unrestricted likelihood ratio tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()
    sub.add_parser("table", parents=[common], help="likelihood ratio statistics for every outcome")
    power = sub.add_parser("power", parents=[common], argument_default=argparse.SUPPRESS, help="exact power curves of both tests")
    power.add_argument("--plot", help="also render the power difference to this image file")
    cex = sub.add_parser(
        "counterexample", parents=[common], argument_default=argparse.SUPPRESS, help="search for a power reversal"
    )
    cex.add_argument("--scan", help="start:stop:step grid of null values; runs the reversal scan")
    asym = sub.add_parser(
        "asym", parents=[common], argument_default=argparse.SUPPRESS, help="limiting powers under local alternatives"
    )
    asym.add_argument("--k", type=int, help="model dimension")
    asym.add_argument("--d", type=int, help="submodel dimension")
    asym.add_argument("--ell", type=int, help="null dimension (default 0)")
    asym.add_argument("--lam", type=float, help="noncentrality")
    mc = sub.add_parser(
        "mc-check",
        parents=[common],
        argument_default=argparse.SUPPRESS,
        help="exact power against a seeded Monte Carlo estimate",
    )
    mc.add_argument("--tau", help="alternative on the submodel curve")
    mc.add_argument("--theta", help="comma-separated alternative probability vector")
    mc.add_argument("--which", choices=("restricted", "unrestricted"), help="which test to simulate (default restricted)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Preset values first, overridden by any flag given explicitly."""
    given = vars(args).copy()
    command = Command(given.pop("command"))
    preset = given.pop("preset", None)
    merged = dict(PRESETS[preset]) if preset else {}
    merged.update(given)
    merged = {k: v for k, v in merged.items() if k in RunConfig.__dataclass_fields__}
    for key in ("grid", "scan"):
        if key in merged:
            merged[key] = parse_grid(merged[key])
    return RunConfig(command=command, **merged)


_INT_LIST = re.compile(r"\[\s*(-?\d+(?:,\s*-?\d+)*)\s*\]")


def render_json(obj) -> str:
    """Indented JSON with integer lists (outcomes) kept on one line."""
    text = json.dumps(obj, indent=2)
    return _INT_LIST.sub(lambda m: "[" + ", ".join(v.strip() for v in m.group(1).split(",")) + "]", text) + "\n"


def _rows_to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_table(cfg: RunConfig) -> str:
    cfg.require("n")
    records = statistics_table(cfg.null(), cfg.n)
    if cfg.fmt() == "csv":
        return table_csv(records, cfg.digits())
    rows = []
    for line in list(csv.DictReader(io.StringIO(table_csv(records, cfg.digits())))):
        rows.append(dict(line))
    return render_json({"tau_bar": cfg.tau_bar, "n": cfg.n, "rows": rows})


def cmd_power(cfg: RunConfig) -> str:
    cfg.require("n", "alpha", "grid")
    null = cfg.null()
    taus = grid_points(cfg.grid)
    if any(not 0 < t < 1 for t in taus):
        raise UsageError("power grid must lie strictly inside (0, 1)")
    points = power_curve(null, cfg.n, cfg.alpha_scalar(), taus)
    if cfg.plot:
        from .plotting import plot_power_difference

        plot_power_difference(
            points,
            cfg.plot,
            title=f"n = {cfg.n}, null {cfg.tau_bar}, size {cfg.alpha}",
            null_tau=float(null.tau_bar),
        )
    places = cfg.digits(9)
    if cfg.fmt() == "csv":
        return power_curve_csv(points, cfg.digits(9))
    return render_json(
        {
            "tau_bar": cfg.tau_bar,
            "n": cfg.n,
            "alpha": cfg.alpha,
            "points": [
                {
                    "tau": decimal_str(p.tau, places),
                    "beta_restricted": decimal_str(p.beta_restricted, places),
                    "beta_unrestricted": decimal_str(p.beta_unrestricted, places),
                    "diff": decimal_str(p.diff, places),
                }
                for p in points
            ],
        }
    )


def cmd_counterexample(cfg: RunConfig) -> str:
    cfg.require("n")
    if cfg.scan is not None:
        if cfg.n < 2:
            raise UsageError(f"the scan needs --n >= 2, got {cfg.n}")
        grid = grid_points(cfg.scan)
        if any(not 0 < t < 1 for t in grid):
            raise UsageError("scan grid must lie strictly inside (0, 1)")
        summary = corollary_scan(cfg.n, grid)
        if cfg.fmt("json") == "csv":
            header = ["tau_bar", "differs", "lemma_condition", "cross_m_tie", "reversal", "confirmed", "alpha"]
            rows = [
                [
                    scalar_str(r.tau_bar),
                    int(r.differs),
                    r.lemma_condition or "",
                    int(r.cross_m_tie),
                    int(r.reversal),
                    int(r.confirmed),
                    "" if r.alpha is None else scalar_str(r.alpha),
                ]
                for r in summary.rows
            ]
            return _rows_to_csv(header, rows)
        return render_json(summary.to_json())
    report = find_reversal(cfg.null(), cfg.n)
    return render_json(report.to_json())


def cmd_asym(cfg: RunConfig) -> str:
    cfg.require("k", "d")
    alpha = float(_parse(cfg.alpha, "--alpha")) if cfg.alpha is not None else 0.05
    if cfg.lam is None and cfg.grid is None:
        raise UsageError("asym needs --lam or a --grid of noncentralities")
    lams = [cfg.lam] if cfg.lam is not None else [float(v) for v in grid_points(cfg.grid)]
    rows = []
    for lam in lams:
        try:
            restricted, unrestricted = asymptotics.asymptotic_powers(cfg.k, cfg.d, cfg.ell, lam, alpha)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        rows.append((lam, restricted, unrestricted, restricted - unrestricted))
    if cfg.fmt() == "csv":
        return _rows_to_csv(
            ["lambda", "restricted", "unrestricted", "margin"],
            [[f"{lam:g}"] + [f"{v:.{cfg.digits(10)}f}" for v in rest] for lam, *rest in rows],
        )
    return render_json(
        {
            "k": cfg.k,
            "d": cfg.d,
            "ell": cfg.ell,
            "alpha": alpha,
            "rows": [
                {"lambda": lam, "restricted": r, "unrestricted": u, "margin": m} for lam, r, u, m in rows
            ],
        }
    )


def cmd_mc_check(cfg: RunConfig) -> tuple[str, int]:
    cfg.require("n", "alpha")
    null = cfg.null()
    restricted, unrestricted = size_tests(null, cfg.n, cfg.alpha_scalar())
    test = restricted if cfg.which == "restricted" else unrestricted
    if cfg.theta is not None:
        try:
            theta = ProbVector(tuple(coerce(p.strip(), cfg.mode) for p in cfg.theta.split(",")))
        except ValueError as exc:
            raise UsageError(f"--theta: {exc}") from exc
        exact = exact_power(test, theta)
        alt_label = cfg.theta
    else:
        cfg.require("tau")
        tau = _parse(cfg.tau, "--tau", cfg.mode)
        if not 0 <= tau <= 1:
            raise UsageError(f"--tau must lie in [0, 1], got {cfg.tau}")
        theta = null.submodel.map(tau)
        exact = submodel_power(test, null.submodel, tau)
        alt_label = cfg.tau
    if theta.K != test.K:
        raise UsageError(f"alternative has {theta.K} categories, test has {test.K}")
    estimate, stderr = mc_power(test, theta, cfg.reps, cfg.seed)
    p = float(exact)
    exact_se = math.sqrt(p * (1 - p) / cfg.reps)
    if exact_se > 0:
        z = (estimate - p) / exact_se
    else:
        z = 0.0 if estimate == p else math.inf
    status = EXIT_OK if abs(z) <= MC_Z_LIMIT else EXIT_VERIFY
    fields = {
        "test": cfg.which,
        "alternative": alt_label,
        "reps": cfg.reps,
        "seed": cfg.seed,
        "exact": decimal_str(exact, 9),
        "estimate": f"{estimate:.9f}",
        "stderr": f"{stderr:.9f}",
        "z": f"{z:.4f}",
        "pass": status == EXIT_OK,
    }
    if cfg.fmt() == "json":
        return render_json(fields), status
    return _rows_to_csv(list(fields), [[int(v) if isinstance(v, bool) else v for v in fields.values()]]), status


def run(cfg: RunConfig) -> tuple[str, int]:
    """Execute a configuration, returning rendered output and exit status."""
    mpmath.mp.dps = cfg.precision_digits
    if cfg.command is Command.TABLE:
        return cmd_table(cfg), EXIT_OK
    if cfg.command is Command.POWER:
        return cmd_power(cfg), EXIT_OK
    if cfg.command is Command.COUNTEREXAMPLE:
        return cmd_counterexample(cfg), EXIT_OK
    if cfg.command is Command.ASYM:
        return cmd_asym(cfg), EXIT_OK
    return cmd_mc_check(cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    saved_dps = mpmath.mp.dps
    try:
        cfg = config_from_args(args)
        text, status = run(cfg)
    except (UsageError, ValueError) as exc:
        print(f"lrtpower: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        mpmath.mp.dps = saved_dps
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
