"""YAML run configurations: parsing, validation and object construction.

Errors are reported as :class:`ConfigError` with a dotted key path, e.g.
``shift.matrix``.
"""
from __future__ import annotations

import ast
import hashlib
import math
import operator
from dataclasses import dataclass, field
from typing import Any, Mapping

import yaml

from .errors import ConfigError, ThermoError
from .potential import (
    Potential,
    constant,
    geometric_indicator,
    letter_potential,
    log_letter,
    pair_potential,
    regularize,
)
from .shift_core import (
    FirstK,
    ShiftSpec,
    TruncatedShift,
    WeightBelow,
    build_truncation,
    forbidden_pairs_shift,
    full_shift,
    matrix_shift,
    no_aa_shift,
    truncate_finite,
)

COMMANDS = ("pressure", "delta", "gap", "count", "equidist", "manhattan", "intersect", "roof-table")

DEFAULT_TOLERANCES = {
    "scalar": 1e-10,
    "spectral": 1e-8,
    "livsic": 1e-9,
    "rigidity": 1e-6,
}


# numbers


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sqrt": math.sqrt, "log": math.log, "exp": math.exp, "cos": math.cos, "sin": math.sin}
_CONSTS = {"pi": math.pi, "e": math.e, "inf": math.inf}


def parse_number(value: Any, key: str = "value") -> float:
    """Number or arithmetic string such as ``"sqrt(2)"`` or ``"log(2)/3"``."""
    if isinstance(value, bool):
        raise ConfigError(key, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(key, f"expected a number, got {type(value).__name__}")
    try:
        tree = ast.parse(value.strip(), mode="eval")
        return float(_eval(tree.body))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError, KeyError) as exc:
        raise ConfigError(key, f"cannot read {value!r} as a number ({exc})") from None


def _eval(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Name) and node.id in _CONSTS:
        return _CONSTS[node.id]
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1:
        return _FUNCS[node.func.id](_eval(node.args[0]))
    raise ValueError("unsupported expression")


def parse_grid(value: Any, key: str = "t_grid") -> list[float]:
    """``"start:step:end"`` (inclusive) or an explicit list."""
    if isinstance(value, (list, tuple)):
        return [parse_number(v, f"{key}[{i}]") for i, v in enumerate(value)]
    if isinstance(value, str) and value.count(":") == 2:
        start, step, end = (parse_number(p, key) for p in value.split(":"))
        if step <= 0 or end < start:
            raise ConfigError(key, "grid needs step > 0 and end >= start")
        n = int(math.floor((end - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    raise ConfigError(key, "expected start:step:end or a list of numbers")


# configuration object


@dataclass
class RunConfig:
    command: str
    raw: dict
    seed: int = 0
    depth: int = 1
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_path: str | None = None
    output_format: str = "text"

    @property
    def sha256(self) -> str:
        text = yaml.safe_dump(self.raw, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()

    def section(self, name: str, required: bool = True) -> dict:
        sec = self.raw.get(name)
        if sec is None:
            if required:
                raise ConfigError(name, "missing section")
            return {}
        if not isinstance(sec, Mapping):
            raise ConfigError(name, "expected a mapping")
        return dict(sec)

    def number(self, name: str, default: float | None = None) -> float:
        if name not in self.raw:
            if default is None:
                raise ConfigError(name, "missing value")
            return default
        return parse_number(self.raw[name], name)


def load_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else source
        raise ConfigError(where, f"invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    command = raw.get("command")
    if command not in COMMANDS:
        raise ConfigError("command", f"expected one of {', '.join(COMMANDS)}, got {command!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed", "expected an integer")
    depth = raw.get("depth", 1)
    if not isinstance(depth, int) or depth < 1:
        raise ConfigError("depth", "expected a positive integer")
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in (raw.get("tolerances") or {}).items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerances.{k}", f"unknown tolerance; known: {', '.join(DEFAULT_TOLERANCES)}")
        tol[k] = parse_number(v, f"tolerances.{k}")
    out = raw.get("output") or {}
    fmt = out.get("format", "text")
    if fmt not in ("csv", "text"):
        raise ConfigError("output.format", "expected csv or text")
    return RunConfig(command, raw, seed, depth, tol, out.get("path"), fmt)


# builders


def _letter(v):
    return v if not isinstance(v, float) or not v.is_integer() else int(v)


def build_shift(cfg: Mapping, key: str = "shift") -> TruncatedShift:
    kind = cfg.get("kind", "full")
    letters = cfg.get("letters")
    try:
        if kind == "no_aa":
            spec: ShiftSpec = no_aa_shift()
        elif kind == "full":
            spec = full_shift(None if letters is None else [_letter(a) for a in letters])
        elif kind == "matrix":
            if letters is None or "matrix" not in cfg:
                raise ConfigError(f"{key}.matrix", "matrix shifts need 'letters' and 'matrix'")
            mat = cfg["matrix"]
            if not isinstance(mat, list) or not all(isinstance(r, list) for r in mat):
                raise ConfigError(f"{key}.matrix", "expected a list of rows")
            if any(len(r) != len(letters) for r in mat) or len(mat) != len(letters):
                raise ConfigError(f"{key}.matrix", f"expected a {len(letters)}x{len(letters)} matrix")
            if any(x not in (0, 1) for r in mat for x in r):
                raise ConfigError(f"{key}.matrix", "entries must be 0 or 1")
            spec = matrix_shift([_letter(a) for a in letters], mat)
        elif kind == "forbidden_pairs":
            spec = forbidden_pairs_shift([_letter(a) for a in letters], [tuple(p) for p in cfg.get("forbidden", [])])
        else:
            raise ConfigError(f"{key}.kind", f"unknown shift kind {kind!r}")
    except ConfigError:
        raise
    except ThermoError as exc:
        raise ConfigError(key, str(exc)) from None
    trunc = cfg.get("truncation")
    if spec.countable:
        if not trunc:
            raise ConfigError(f"{key}.truncation", "countable shifts need a truncation rule")
        return build_truncation(spec, _rule(trunc, f"{key}.truncation"))
    return truncate_finite(spec) if not trunc else build_truncation(spec, _rule(trunc, f"{key}.truncation"))


def _rule(trunc: Mapping, key: str):
    if "first_k" in trunc:
        return FirstK(int(trunc["first_k"]))
    if "weight_below" in trunc:
        return WeightBelow(parse_number(trunc["weight_below"], f"{key}.weight_below"))
    raise ConfigError(key, "expected first_k or weight_below")


def build_potential(cfg: Mapping, shift: TruncatedShift, key: str = "potential") -> Potential:
    kind = cfg.get("kind", "letter")
    if kind == "constant":
        pot = constant(parse_number(cfg.get("value", 1.0), f"{key}.value"))
    elif kind == "letter":
        vals = cfg.get("values")
        if not isinstance(vals, Mapping):
            raise ConfigError(f"{key}.values", "expected a mapping letter -> value")
        table = {_letter(a): parse_number(v, f"{key}.values.{a}") for a, v in vals.items()}
        missing = [a for a in shift.letters if a not in table]
        if missing:
            raise ConfigError(f"{key}.values", f"no value for letters {missing[:5]}")
        pot = letter_potential(table)
    elif kind == "pair":
        vals = cfg.get("values")
        if not isinstance(vals, Mapping):
            raise ConfigError(f"{key}.values", "expected a mapping 'ab' -> value")
        table = {}
        for k, v in vals.items():
            pair = tuple(k) if isinstance(k, str) and len(k) == 2 else tuple(str(k).split(","))
            table[tuple(_letter(a) for a in pair)] = parse_number(v, f"{key}.values.{k}")
        pot = pair_potential(table)
    elif kind == "log_letter":
        pot = log_letter(parse_number(cfg.get("coeff", 2.0), f"{key}.coeff"),
                         parse_number(cfg.get("offset", 1.0), f"{key}.offset"))
    elif kind == "geometric_indicator":
        pot = geometric_indicator(_letter(cfg.get("letter")), parse_number(cfg.get("ratio", 0.5), f"{key}.ratio"))
        if "plus" in cfg:
            pot = pot + parse_number(cfg["plus"], f"{key}.plus")
    else:
        raise ConfigError(f"{key}.kind", f"unknown potential kind {kind!r}")
    reg = cfg.get("regularize")
    if reg:
        pot = regularize(pot, int(reg.get("N", 1)), parse_number(reg.get("B", 1.0), f"{key}.regularize.B"), shift)
    return pot


def group_objects(cfg: Mapping, key: str = "group"):
    """Presentation, coding, representation and functional from a ``group`` section."""
    from .fuchsian import (
        Functional,
        build_coding,
        default_presentation,
        fuchsian_representation,
        presentation_from_config,
        second_presentation,
    )

    preset = cfg.get("preset")
    if preset == "default":
        pres = default_presentation()
    elif preset == "second":
        pres = second_presentation()
    elif preset is None:
        pres = presentation_from_config(cfg)
    else:
        raise ConfigError(f"{key}.preset", f"unknown preset {preset!r}")
    coding = build_coding(pres)
    dim = int(cfg.get("dim", 2))
    rho = fuchsian_representation(pres, dim)
    fsec = cfg.get("functional") or {}
    coeffs = fsec.get("coeffs", [1.0] * (dim - 1))
    if len(coeffs) != dim - 1:
        raise ConfigError(f"{key}.functional.coeffs", f"expected {dim - 1} coefficients")
    phi = Functional(tuple(parse_number(c, f"{key}.functional.coeffs") for c in coeffs), fsec.get("basis", "alpha"))
    return pres, coding, rho, phi
