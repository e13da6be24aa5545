"""Command-line entry point: parse a RunConfig, run experiments, write reports.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import experiments as ex
from .errors import InvalidValue, NumericsError, UsageError
from .transforms import BumpFunction

COMMANDS = (
    "verify-arith",
    "verify-special",
    "verify-convolution",
    "run-limit",
    "run-a0",
    "sears",
    "pv",
    "watson",
    "all",
)
THREADS_ENV = "KUZNETSOV_THREADS"
DEFAULT_LADDERS = {"run-limit": (500, 1000, 2000, 4000, 8000), "run-a0": (100, 1000, 10000)}
NEEDS_L = ("run-limit", "run-a0")


@dataclass
class RunConfig:
    command: str
    l: int | None = None
    lp: int | None = None
    v_support: tuple = (1.0, 6.0)
    w_support: tuple = (2.0, 8.0)
    g_support: tuple = (1.0, 2.0)
    ladder: tuple | None = None
    t_max: float = 30.0
    k_max: int = 60
    threads: int = 1
    output: str | None = None
    format: str = "csv"
    record_timings: bool = False
    settings: dict = field(default_factory=dict)

    def bumps(self):
        return tuple(BumpFunction(*sup) for sup in (self.v_support, self.w_support, self.g_support))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kuznetsov-numerics", description="Numerical checks of Kloosterman-sum and Bessel-transform identities.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--l", type=str, help="first index l (positive integer)")
    p.add_argument("--lp", type=str, help="second index l' (positive integer)")
    p.add_argument("--x", type=str, help="comma-separated X ladder, e.g. 500,1000,2000")
    p.add_argument("--v-support", type=str, help="support a,b of V")
    p.add_argument("--w-support", type=str, help="support a,b of W")
    p.add_argument("--g-support", type=str, help="support a,b of the averaging weight g")
    p.add_argument("--t-max", type=str, help="Maass truncation T for the Sears round trip")
    p.add_argument("--k-max", type=str, help="weight truncation K for the Sears round trip")
    p.add_argument("--threads", type=str, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--config", type=str, help="key=value file; flags override it")
    p.add_argument("--format", type=str, choices=("csv", "json"))
    p.add_argument("--output", type=str, help="output file, or directory for 'all'")
    p.add_argument("--record-timings", action="store_true", default=None, help="fill the seconds column")
    return p


def read_config(path: str) -> dict:
    """Flat key=value pairs, one per line; '#' starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    out = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config {path}:{number}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _positive_int(name: str, raw) -> int:
    try:
        value = int(str(raw))
    except ValueError:
        raise InvalidValue(f"--{name}: expected a positive integer, got {raw!r}") from None
    if value < 1:
        raise InvalidValue(f"--{name}: must be at least 1, got {value}")
    return value


def _positive_float(name: str, raw) -> float:
    try:
        value = float(str(raw))
    except ValueError:
        raise InvalidValue(f"--{name}: expected a number, got {raw!r}") from None
    if not value > 0 or math.isinf(value):
        raise InvalidValue(f"--{name}: must be positive and finite")
    return value


def _support(name: str, raw) -> tuple:
    parts = str(raw).split(",")
    if len(parts) != 2:
        raise InvalidValue(f"--{name}: expected a,b")
    a, b = (_positive_float(name, p) for p in parts)
    if not a < b:
        raise InvalidValue(f"--{name}: need a < b")
    return a, b


def _ladder(raw) -> tuple:
    text = str(raw).strip()
    if not text:
        return ()
    values = tuple(_positive_float("x", p) for p in text.split(","))
    ex.XLadder(values)  # raises InvalidValue on bad ordering or small X
    return values


def parse_args(argv, env=None) -> RunConfig:
    """Validated RunConfig; flag > config file > environment (threads only) > default."""
    env = os.environ if env is None else env
    ns = _build_parser().parse_args(list(argv))
    merged = read_config(ns.config) if ns.config else {}
    unknown = set(merged) - {f.name for f in fields(RunConfig)} - {"x"}
    if unknown:
        raise UsageError(f"--config: unknown keys {sorted(unknown)}")
    for key in ("l", "lp", "x", "v_support", "w_support", "g_support", "t_max", "k_max", "threads", "format", "output"):
        flag = getattr(ns, key)
        if flag is not None:
            merged[key] = flag
    if ns.record_timings:
        merged["record_timings"] = "true"
    if "threads" not in merged and env.get(THREADS_ENV):
        merged["threads"] = env[THREADS_ENV]

    cfg = RunConfig(ns.command, settings=dict(sorted(merged.items())))
    if "l" in merged:
        cfg.l = _positive_int("l", merged["l"])
    if "lp" in merged:
        cfg.lp = _positive_int("lp", merged["lp"])
    for key in ("v_support", "w_support", "g_support"):
        if key in merged:
            setattr(cfg, key, _support(key.replace("_", "-"), merged[key]))
    if "x" in merged:
        cfg.ladder = _ladder(merged["x"])
    if "t_max" in merged:
        cfg.t_max = _positive_float("t-max", merged["t_max"])
    if "k_max" in merged:
        cfg.k_max = _positive_int("k-max", merged["k_max"])
        if cfg.k_max % 2:
            raise InvalidValue("--k-max: must be even")
    if "threads" in merged:
        cfg.threads = _positive_int("threads", merged["threads"])
    if "format" in merged:
        if merged["format"] not in ("csv", "json"):
            raise InvalidValue(f"--format: expected csv or json, got {merged['format']!r}")
        cfg.format = merged["format"]
    cfg.output = merged.get("output")
    cfg.record_timings = str(merged.get("record_timings", "false")).lower() in ("1", "true", "yes")

    if cfg.command in NEEDS_L:
        for name in ("l", "lp"):
            if getattr(cfg, name) is None:
                raise UsageError(f"{cfg.command} needs --{name}")
    if cfg.ladder is None and cfg.command in DEFAULT_LADDERS:
        cfg.ladder = DEFAULT_LADDERS[cfg.command]
    return cfg


# ---------------------------------------------------------------- running

def run(cfg: RunConfig) -> list:
    """Reports for the configured command, in a fixed order."""
    V, W, g = cfg.bumps()
    c = cfg.command
    if c == "verify-arith":
        return [ex.arithmetic_suite()]
    if c == "verify-special":
        return [ex.special_suite()]
    if c == "verify-convolution":
        return [ex.convolution_theorem_check(V, W), ex.route_consistency(V, W)]
    if c == "run-limit":
        return [_limit(cfg, cfg.l, cfg.lp)]
    if c == "run-a0":
        return [ex.run_a0(cfg.l, cfg.lp, V, W, g, cfg.ladder, cfg.record_timings)]
    if c == "sears":
        return [ex.run_sears(V, cfg.t_max, cfg.k_max, W=W)]
    if c == "pv":
        return [ex.verify_pv(ex.recentred_bump(V), 0.5 * (V.b - V.a))]
    if c == "watson":
        return [ex.run_watson()]
    return _run_all(cfg)


def _limit(cfg: RunConfig, l: int, lp: int, ladder=None):
    V, W, g = cfg.bumps()
    if ladder is None:
        ladder = cfg.ladder if cfg.ladder is not None else DEFAULT_LADDERS["run-limit"]
    return ex.run_limit(l, lp, V, W, g, ladder, cfg.threads, cfg.record_timings)


def _run_all(cfg: RunConfig) -> list:
    V, W, g = cfg.bumps()
    a0_ladder = DEFAULT_LADDERS["run-a0"]
    reports = [
        ex.arithmetic_suite(),
        ex.special_suite(),
        ex.convolution_theorem_check(V, W),
        ex.route_consistency(V, W),
        ex.run_sears(V, cfg.t_max, cfg.k_max, W=W),
        _limit(cfg, 1, 1),
        _limit(cfg, 1, 2),
        ex.run_a0(1, 1, V, W, g, a0_ladder, cfg.record_timings),
        ex.run_a0(1, 2, V, W, g, a0_ladder, cfg.record_timings),
        ex.verify_pv(ex.recentred_bump(V), 0.5 * (V.b - V.a)),
        ex.run_watson(),
        ex.verify_identities_suite(),
    ]
    return reports


# ---------------------------------------------------------------- serialization

def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def to_csv(report: ex.ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_cell(row[c]) for c in report.columns])
    return buf.getvalue()


def to_json(report: ex.ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, default=float) + "\n"


def _stem(report: ex.ExperimentReport) -> str:
    meta = report.metadata
    if "l" in meta and "lp" in meta:
        return f"{report.kind}_l{meta['l']}_lp{meta['lp']}"
    return report.kind


def emit_report(reports: list, cfg: RunConfig, stdout=None) -> list:
    """Write reports and return the paths written (empty when printing to stdout)."""
    stdout = stdout or sys.stdout
    render = to_json if cfg.format == "json" else to_csv
    ext = cfg.format
    if cfg.command == "all":
        out_dir = Path(cfg.output or "kuznetsov_results")
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for rep in reports:
            path = out_dir / f"{_stem(rep)}.{ext}"
            path.write_text(render(rep), newline="\n")
            written.append(path)
        summary = out_dir / "checks.txt"
        summary.write_text(_check_lines(reports), newline="\n")
        written.append(summary)
        return written
    if len(reports) == 1:
        text = render(reports[0])
    elif ext == "csv":
        text = "\n".join(to_csv(rep) for rep in reports)
    else:
        text = json.dumps([rep.to_dict() for rep in reports], indent=2, sort_keys=True, default=float) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text, newline="\n")
        return [Path(cfg.output)]
    stdout.write(text)
    return []


def _check_lines(reports) -> str:
    lines = []
    for rep in reports:
        for chk in rep.checks:
            status = "PASS" if chk.passed else ("INFO" if chk.informational else "FAIL")
            lines.append(f"{status} {_stem(rep)}: {chk.name} measured={chk.measured:.6g} tolerance={chk.tolerance:.6g}")
    return "\n".join(lines) + "\n"


def exit_code(reports) -> int:
    if any(not rep.converged for rep in reports):
        return 3
    return 0 if all(rep.passed for rep in reports) else 1


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    print(f"threads: {cfg.threads}", file=sys.stderr)
    try:
        reports = run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    try:
        emit_report(reports, cfg)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return 1
    sys.stderr.write(_check_lines(reports))
    return exit_code(reports)


if __name__ == "__main__":
    sys.exit(main())
