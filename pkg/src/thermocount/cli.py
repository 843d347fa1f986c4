"""Command-line front end: ``thermocount run CONFIG`` or ``thermocount COMMAND CONFIG``."""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import platform
import sys
from fractions import Fraction
from importlib import metadata
from typing import Any

import numpy as np
import scipy
import yaml

from . import counting, manhattan, thermo
from .config import COMMANDS, RunConfig, build_potential, build_shift, group_objects, load_config, parse_grid
from .errors import BudgetExceeded, ConfigError, InvalidInput, NoSignChange, NumericalFailure, ThermoError
from .shift_core import TruncatedShift

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_BUDGET = 0, 2, 3, 4
THREADS_ENV = "THERMOCOUNT_THREADS"


def _plain(x: Any) -> Any:
    """Convert numpy scalars, fractions and tuples into YAML-safe values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.floating, Fraction)):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _threads() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(THREADS_ENV, f"expected an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(THREADS_ENV, "must be >= 1")
    return n


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def provenance(cfg: RunConfig, shift: TruncatedShift | None, extra: dict | None = None) -> dict:
    block = {
        "command": cfg.command,
        "config_sha256": cfg.sha256,
        "seed": cfg.seed,
        "depth": cfg.depth,
        "tolerances": dict(cfg.tolerances),
        "versions": {
            "artifact": _version(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "threads": _threads() or 1,
    }
    if shift is not None:
        note = dict(shift.cutoff_note)
        dropped = note.pop("dropped", [])
        note["dropped_count"] = len(dropped)
        block["truncation"] = {"letters": shift.size, **note}
    if extra:
        block.update(extra)
    return _plain(block)


# commands


def _shift_and_f(cfg: RunConfig):
    shift = build_shift(cfg.section("shift"))
    f = build_potential(cfg.section("potential"), shift)
    return shift, f


def _delta(cfg: RunConfig, shift, f) -> tuple[float, dict]:
    if "delta" in cfg.raw:
        return cfg.number("delta"), {"delta_source": "config"}
    if shift.countable:
        rep = thermo.entropy_gap_report(f, shift, cfg.depth, cfg.tolerances["scalar"], cfg.raw.get("tail_model"))
        if rep.delta is None:
            raise NoSignChange("no Bowen root above the critical exponent")
        return rep.delta, {"delta_source": "solve_delta with tail model", "tail_model": rep.tail_model}
    return thermo.solve_delta(f, shift, depth=cfg.depth, tol=cfg.tolerances["scalar"]), {"delta_source": "solve_delta"}


def cmd_pressure(cfg: RunConfig):
    shift, g = _shift_and_f(cfg)
    op = thermo.build_transfer(shift, g, cfg.depth)
    eq = thermo.spectral_pressure(op, tol=cfg.tolerances["spectral"])
    result = {"spectral_pressure": eq.pressure, "equilibrium": eq.to_dict()}
    if not shift.countable:
        letter = cfg.raw.get("periodic_letter", shift.letters[0])
        pp = thermo.pressure_periodic(shift, g, letter, int(cfg.raw.get("n_max", 20)))
        result["periodic_pressure"] = pp.summary
        result["periodic_estimates"] = list(pp.estimates)
    return result, None, shift


def cmd_delta(cfg: RunConfig):
    shift, f = _shift_and_f(cfg)
    delta, info = _delta(cfg, shift, f)
    return {"delta": delta, **info}, None, shift


def cmd_gap(cfg: RunConfig):
    shift, f = _shift_and_f(cfg)
    rep = thermo.entropy_gap_report(f, shift, cfg.depth, cfg.tolerances["scalar"], cfg.raw.get("tail_model"))
    return rep.to_dict(), None, shift


def cmd_count(cfg: RunConfig):
    shift, f = _shift_and_f(cfg)
    delta, info = _delta(cfg, shift, f)
    grid = parse_grid(cfg.raw.get("t_grid"), "t_grid")
    recs = counting.count_orbits(f, shift, grid, delta, node_limit=int(cfg.raw.get("node_limit", counting.DEFAULT_NODE_LIMIT)))
    rows = [r.row() for r in recs]
    sandwich = counting.sandwich_holds(recs, f, shift, delta)
    return {"delta": delta, **info, "rows": rows, "sandwich": sandwich}, (counting.CSV_COLUMNS, rows), shift


def cmd_equidist(cfg: RunConfig):
    shift, f = _shift_and_f(cfg)
    g = build_potential(cfg.section("second_potential"), shift, "second_potential")
    delta, info = _delta(cfg, shift, f)
    t = cfg.number("t")
    lhs, pred = counting.equidistribution_ratio(f, g, shift, t, delta, cfg.depth)
    row = {"t": t, "lhs": lhs, "predicted": pred, "ratio": lhs / pred}
    return {"delta": delta, **info, **row}, (("t", "lhs", "predicted", "ratio"), [row]), shift


def cmd_manhattan(cfg: RunConfig):
    shift, f = _shift_and_f(cfg)
    g = build_potential(cfg.section("second_potential"), shift, "second_potential")
    pts = manhattan.trace_curve(f, g, shift, int(cfg.raw.get("rays", 17)), cfg.tolerances["scalar"], cfg.depth,
                                bool(cfg.raw.get("enlarged", False)))
    rows = [p.row() for p in pts]
    margins = manhattan.chord_margins(pts)
    result = {"points": rows, "min_chord_margin": min(margins) if margins else None,
              "uncrossed_rays": [p.theta for p in pts if not p.crossed]}
    return result, (manhattan.CSV_COLUMNS, rows), shift


def cmd_intersect(cfg: RunConfig):
    shift, f = _shift_and_f(cfg)
    g = build_potential(cfg.section("second_potential"), shift, "second_potential")
    rep = manhattan.intersection(f, g, shift, cfg.tolerances["rigidity"], cfg.depth)
    result = rep.to_dict()
    if "t" in cfg.raw:
        emp, _ = manhattan.geometric_intersection_check(f, g, shift, cfg.number("t"), rep.delta_f, cfg.depth)
        result["geometric_average"] = emp
    cols = ("I", "J", "delta_f", "delta_g", "rigidity", "margin")
    return result, (cols, [{k: result[k] for k in cols}]), shift


def cmd_roof_table(cfg: RunConfig):
    from .fuchsian import roof

    pres, coding, rho, phi = group_objects(cfg.section("group"))
    max_power = int(cfg.section("group").get("max_power", 20))
    rows = []
    for i in coding.letters_up_to(max_power):
        a = coding.letter(i)
        v, e = roof(rho, coding, phi, (i,))
        rows.append({"letter": str(a), "r": a.r, "value": v, "error": e})
    result = {"rows": rows, "dim": rho.dim, "functional": {"basis": phi.basis, "coeffs": list(phi.coeffs)}}
    extra = {"multiplicity_bound_Q": coding.multiplicity_bound(max_power + 1)}
    if cfg.raw.get("critical_exponent", False):
        from .fuchsian import roof_potential

        shift = coding.truncation(max_power)
        rep = thermo.critical_exponent(roof_potential(rho, coding, phi), shift, tail_model=cfg.raw.get("tail_model", "zeta"))
        extra["critical_exponent"] = rep.d_f
        extra["tail_model"] = rep.tail_model
    result.update(extra)
    return result, (("letter", "r", "value", "error"), rows), None


HANDLERS = {
    "pressure": cmd_pressure,
    "delta": cmd_delta,
    "gap": cmd_gap,
    "count": cmd_count,
    "equidist": cmd_equidist,
    "manhattan": cmd_manhattan,
    "intersect": cmd_intersect,
    "roof-table": cmd_roof_table,
}


def render(cfg: RunConfig, result: dict, table, shift) -> str:
    prov = provenance(cfg, shift)
    if cfg.output_format == "csv":
        if table is None:
            raise ConfigError("output.format", f"command {cfg.command!r} has no tabular output; use text")
        cols, rows = table
        buf = io.StringIO()
        for line in yaml.safe_dump({"provenance": prov}, sort_keys=True).splitlines():
            buf.write(f"# {line}\n")
        writer = csv.DictWriter(buf, fieldnames=list(cols), extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
        return buf.getvalue()
    return yaml.safe_dump({"command": cfg.command, "result": _plain(result), "provenance": prov}, sort_keys=True)


def run(cfg: RunConfig) -> str:
    """Execute a configuration and return the rendered report."""
    result, table, shift = HANDLERS[cfg.command](cfg)
    return render(cfg, result, table, shift)


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, InvalidInput)):
        return EXIT_CONFIG
    if isinstance(exc, BudgetExceeded):
        return EXIT_BUDGET
    if isinstance(exc, NumericalFailure):
        return EXIT_NUMERICAL
    return EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermocount", description="Pressure, Bowen roots and orbit counts on Markov shifts.")
    p.add_argument("command", choices=("run",) + COMMANDS, help="'run' uses the command named in the config")
    p.add_argument("config", help="YAML configuration file ('-' for stdin)")
    p.add_argument("-o", "--output", help="report path (default: config output.path, else stdout)")
    p.add_argument("--format", choices=("csv", "text"), help="override output.format")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.config == "-" else open(args.config, encoding="utf-8").read()
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        raw_cfg = load_config(text, args.config)
        if args.command != "run" and args.command != raw_cfg.command:
            raw_cfg.raw["command"] = args.command
            raw_cfg.command = args.command
        if args.format:
            raw_cfg.output_format = args.format
        report = run(raw_cfg)
    except ThermoError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exit_code(exc)
    path = args.output or raw_cfg.output_path
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
