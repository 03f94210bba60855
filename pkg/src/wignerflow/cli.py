"""Command-line front end.

Examples::

    wignerflow grid --n 1 --alpha 2.5 --field W --out w.csv
    wignerflow sweep --n 0 --alpha 1.5 --eps 0.25:6:47 --out sweep.csv
    wignerflow validate --quick
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import io as wio
from ._parallel import ENV_THREADS, resolve_threads
from .classical import DEFAULT_SAMPLES, trajectory
from .errors import BracketError, EvaluationError, QuadratureError, UnsupportedParameterError
from .flow import current_k_classical, delta_current_k, find_stagnation_points, current
from .quantifiers import flux_report, flux_sweep
from .quantum import FieldLabel, PhaseGrid, SystemConfig, evaluate_field

COMMANDS = ("grid", "currents", "stagnation", "trajectory", "flux", "sweep", "validate")
DEFAULT_GRID = "0:6:201,-6:6:201"


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    n: int = 0
    alpha: float = 1.5
    mode: str = "half_line"
    grid: str = DEFAULT_GRID
    field: str = "W"
    eps: str | None = None
    theta: float = 0.0
    samples: int = DEFAULT_SAMPLES
    out: str = "-"
    format: str | None = None  # json for stagnation, csv otherwise
    threads: int | None = None
    quick: bool = False

    def system(self) -> SystemConfig:
        return SystemConfig(self.n, self.alpha, self.mode)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def parse_grid(text: str) -> PhaseGrid:
    """``xmin:xmax:nx,kmin:kmax:nk``."""
    try:
        xs, ks = text.split(",")
        x0, x1, nx = xs.split(":")
        k0, k1, nk = ks.split(":")
        return PhaseGrid(float(x0), float(x1), float(k0), float(k1), int(nx), int(nk))
    except ValueError as exc:
        raise UsageError(f"bad --grid {text!r} (expected xmin:xmax:nx,kmin:kmax:nk): {exc}") from None


def parse_eps_range(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, steps = text.split(":")
        return float(lo), float(hi), int(steps)
    except ValueError:
        raise UsageError(f"bad --eps {text!r} (expected min:max:steps)") from None


def parse_eps(text: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise UsageError(f"bad --eps {text!r} (expected a single energy)") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wignerflow", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration; explicit flags override it")
    p.add_argument("--dump-config", action="store_true",
                   help="print the resolved configuration as JSON and exit")
    p.add_argument("--n", type=int, help="quantum number (default 0)")
    p.add_argument("--alpha", type=float, help="semi-integer anharmonicity, e.g. 1.5 (default 1.5)")
    p.add_argument("--mode", choices=("half_line", "bounce"))
    p.add_argument("--grid", help=f"xmin:xmax:nx,kmin:kmax:nk (default {DEFAULT_GRID})")
    p.add_argument("--field", help="W|Y|Jx|Jk|JkCl|DeltaJk|Div (default W)")
    p.add_argument("--eps", help="energy, or min:max:steps for sweep")
    p.add_argument("--theta", type=float, help="orbit phase (default 0)")
    p.add_argument("--samples", type=int, help=f"orbit samples (default {DEFAULT_SAMPLES})")
    p.add_argument("--out", help="output path, '-' for stdout (default)")
    p.add_argument("--format", choices=wio.FORMATS, help="csv (default; json for stagnation) or dat")
    p.add_argument("--threads", type=int, help="worker threads (falls back to WIGNERFLOW_THREADS)")
    p.add_argument("--quick", action="store_true", default=None, help="faster validation settings")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
    base["command"] = args.command
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if f.name != "command" and v is not None:
            base[f.name] = v
    cfg = RunConfig.from_dict(base)
    if cfg.format is None:
        cfg.format = "json" if cfg.command == "stagnation" else "csv"
    _validate(cfg)
    return cfg


def _validate(rc: RunConfig):
    try:
        system = rc.system()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not system.is_semi_integer:
        raise UsageError(f"--alpha must be a semi-integer (0.5, 1.5, 2.5, ...), got {rc.alpha}")
    if rc.format not in wio.FORMATS:
        raise UsageError(f"--format must be one of {wio.FORMATS}")
    try:
        resolve_threads(rc.threads)
    except ValueError as exc:
        raise UsageError(f"bad thread count (--threads or {ENV_THREADS}): {exc}") from None
    parse_grid(rc.grid)
    try:
        FieldLabel.parse(rc.field)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if rc.command in ("trajectory", "flux"):
        if rc.eps is None:
            raise UsageError(f"{rc.command} needs --eps")
        parse_eps(rc.eps)
    if rc.command == "sweep":
        if rc.eps is None:
            raise UsageError("sweep needs --eps min:max:steps")
        lo, hi, steps = parse_eps_range(rc.eps)
        if not 0 < lo < hi or steps < 2:
            raise UsageError("sweep needs 0 < min < max and steps >= 2")
    if rc.command in ("trajectory", "flux", "sweep"):
        if rc.samples < 64:
            raise UsageError("--samples must be >= 64")
        if rc.mode == "bounce":
            raise UsageError(f"{rc.command} needs the half_line mode (no classical orbit for bounce)")
        if rc.alpha < 0.5:
            raise UsageError("--alpha must be >= 0.5")


def run(rc: RunConfig) -> int:
    system = rc.system()
    threads = resolve_threads(rc.threads)
    fmt = rc.format
    if rc.command == "grid":
        field = evaluate_field(system, parse_grid(rc.grid), rc.field, threads=threads)
        wio.write_field(rc.out, field, system, fmt)
    elif rc.command == "currents":
        grid = parse_grid(rc.grid)
        X, K = grid.mesh()
        jx, jk = current(system, X, K)
        jc = current_k_classical(system, X, K)
        dj = delta_current_k(system, X, K)
        header = ["x", "k", "jx", "jk", "jk_classical", "delta_jk"]
        if fmt == "json":
            doc = {"system": system.to_dict(), "grid": grid.to_dict(),
                   **dict(zip(header[2:], (jx, jk, jc, dj)))}
            with wio.open_sink(rc.out) as fh:
                fh.write(wio.dumps(doc))
        else:
            cols = [a.ravel() for a in (X, K, jx, jk, jc, dj)]
            wio.write_table(rc.out, header, zip(*cols), fmt, block_col=0 if fmt == "dat" else None)
    elif rc.command == "stagnation":
        pts = find_stagnation_points(system, parse_grid(rc.grid), threads=threads)
        wio.write_stagnation(rc.out, pts, fmt)
    elif rc.command == "trajectory":
        traj = trajectory(rc.alpha, parse_eps(rc.eps), rc.theta, rc.samples)
        wio.write_trajectory(rc.out, traj, fmt)
    elif rc.command == "flux":
        rep = flux_report(system, parse_eps(rc.eps), rc.theta, rc.samples, spot_check=True)
        wio.write_sweep(rc.out, [rep], fmt)
    elif rc.command == "sweep":
        lo, hi, steps = parse_eps_range(rc.eps)
        reps = flux_sweep(system, lo, hi, steps, rc.theta, rc.samples, threads=threads)
        wio.write_sweep(rc.out, reps, fmt)
        failed = [r for r in reps if r.failed]
        if failed:
            for r in failed:
                print(f"error: epsilon={r.epsilon:.17g}: {r.error}", file=sys.stderr)
            return 1
    elif rc.command == "validate":
        from .validation import format_table, run_checks

        echo = (lambda line: print(line, flush=True)) if rc.out == "-" else None
        results = run_checks(quick=rc.quick, echo=echo)
        table = format_table(results)
        if rc.out == "-":
            print(table.splitlines()[-1])
        else:
            with open(rc.out, "w") as fh:
                fh.write(table + "\n")
        return 0 if all(r.passed for r in results) else 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = resolve_config(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"wignerflow: error: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        sys.stdout.write(json.dumps(rc.to_dict(), indent=2) + "\n")
        return 0
    try:
        return run(rc)
    except (UnsupportedParameterError, OSError) as exc:
        print(f"wignerflow: error: {exc}", file=sys.stderr)
        return 2
    except (EvaluationError, QuadratureError, BracketError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"wignerflow: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
