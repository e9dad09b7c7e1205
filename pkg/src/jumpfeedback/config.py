"""Flat ``key = value`` experiment documents.

Values may be quoted or bare strings, integers, reals, arithmetic on ``pi``
(``pi/2``, ``3*pi/4``), comma-separated lists and ranges
``start:step:stop`` (stop inclusive).  Lines starting with ``#`` are
comments.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field, fields
from typing import Any

import numpy as np

COMMANDS = (
    "dark-basis", "validate", "evolve", "trajectory", "ensemble",
    "scan-A", "scan-A-eps", "concurrence-range",
)
FEEDBACKS = ("identity", "local_drive", "epsilon_pair", "schematic_one_way", "schematic_two_way")
INITIAL_STATES = ("ground", "excited", "target", "bell_bell", "mixed")
MAX_QUBITS = 8


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class Range:
    start: float
    step: float
    stop: float
    text: str = ""

    def values(self) -> np.ndarray:
        if self.step <= 0:
            raise ValueError("range step must be positive")
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        if count < 1:
            raise ValueError("empty range")
        return self.start + self.step * np.arange(count)

    def __str__(self) -> str:
        return self.text or f"{self.start!r}:{self.step!r}:{self.stop!r}"


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NUMBER = re.compile(r"^[\s0-9.eE+\-*/()pi]+$")


def _arith(text: str) -> float:
    """Evaluate a real arithmetic expression over numbers and ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    return ev(ast.parse(text.strip(), mode="eval"))


def parse_value(text: str) -> Any:
    s = text.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    parts = s.split(":")
    if len(parts) == 3 and all(_NUMBER.match(p) for p in parts):
        return Range(*(_arith(p) for p in parts), text=s)
    if "," in s:
        return [parse_value(p) for p in s.split(",") if p.strip()]
    if re.fullmatch(r"[+-]?\d+", s):
        return int(s)
    if _NUMBER.match(s):
        return _arith(s)
    return s


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved experiment description (all defaults applied)."""

    command: str
    N: int = 4
    Omega: float = 1.0
    Gamma: float = 1.0
    gamma: tuple[float, ...] = ()
    feedback: str = "identity"
    A: float = math.pi / 2
    eps: float = 0.0
    a: tuple[float, ...] = ()
    drive_operator: str = "spin"
    T: float = 100.0
    dt: float = 0.05
    n_samples: int = 201
    tolerance: float = 1e-8
    seed: int = 42
    n_traj: int = 100
    initial: str = "ground"
    A_grid: Range = Range(0.0, 0.1, 2 * math.pi, "0:0.1:2*pi")
    eps_grid: Range = Range(0.0, 0.05, 0.5, "0:0.05:0.5")
    restarts: int = 100
    t_max: float = 1e6
    amplitudes: bool = False
    threads: int = 1
    out: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    def to_document(self) -> str:
        """Canonical config text that parses back to this spec."""
        lines = []
        for f in fields(self):
            if f.name in ("extra", "out"):
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                if not v:
                    continue
                v = ",".join(repr(float(x)) for x in v) + ("," if len(v) == 1 else "")
            elif isinstance(v, float):
                v = repr(v)
            elif isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, str):
                v = f'"{v}"'
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "extra":
                continue
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, Range) else (list(v) if isinstance(v, tuple) else v)
        return out

    def grid(self, name: str) -> np.ndarray:
        return getattr(self, name).values()


_INT_KEYS = {"N", "seed", "n_traj", "n_samples", "restarts", "threads"}
_FLOAT_KEYS = {"Omega", "Gamma", "A", "eps", "T", "dt", "tolerance", "t_max"}
_STR_KEYS = {"command", "feedback", "drive_operator", "initial", "out"}
_LIST_KEYS = {"gamma", "a"}
_RANGE_KEYS = {"A_grid", "eps_grid"}
_BOOL_KEYS = {"amplitudes"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _LIST_KEYS | _RANGE_KEYS | _BOOL_KEYS


def _coerce(key: str, value: Any) -> Any:
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key)
        return value
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a real number, got {value!r}", key)
        return float(value)
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key)
        return value
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"expected true or false, got {value!r}", key)
        return value
    if key in _LIST_KEYS:
        items = value if isinstance(value, list) else [value]
        if not items or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in items):
            raise ConfigError(f"expected a number or comma-separated numbers, got {value!r}", key)
        return tuple(float(x) for x in items)
    if key in _RANGE_KEYS:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return Range(float(value), 1.0, float(value), str(value))
        if not isinstance(value, Range):
            raise ConfigError(f"expected a range start:step:stop, got {value!r}", key)
        try:
            value.values()
        except ValueError as exc:
            raise ConfigError(str(exc), key) from None
        return value
    raise ConfigError("unknown key", key)


def parse_document(text: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = (s.strip() for s in line.partition("="))
        if not key or not val:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", key)
        if key in values:
            raise ConfigError("duplicate key", key)
        try:
            values[key] = _coerce(key, parse_value(val))
        except (ValueError, SyntaxError, ZeroDivisionError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid value {val!r}", key) from None
    return values


def parse_config(text: str) -> ExperimentSpec:
    """Parse and validate an experiment document, applying defaults."""
    values = parse_document(text)
    if "command" not in values:
        raise ConfigError("missing required key", "command")
    cmd = values["command"]
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}", "command")
    n = values.get("N", 4)
    if not 1 <= n <= MAX_QUBITS:
        raise ConfigError(f"N must be in 1..{MAX_QUBITS}", "N")
    gamma = values.get("gamma", (1e-3,))
    if len(gamma) == 1:
        gamma = gamma * n
    elif len(gamma) != n:
        raise ConfigError(f"expected 1 or {n} rates, got {len(gamma)}", "gamma")
    if min(gamma) < 0:
        raise ConfigError("rates must be non-negative", "gamma")
    values["gamma"] = gamma
    for key in ("Omega", "Gamma"):
        if values.get(key, 1.0) < 0:
            raise ConfigError("rate must be non-negative", key)
    for key in ("T", "dt", "tolerance", "t_max"):
        if key in values and values[key] <= 0:
            raise ConfigError("must be positive", key)
    for key in ("n_traj", "n_samples", "restarts", "threads"):
        if key in values and values[key] < 1:
            raise ConfigError("must be at least 1", key)
    if values.get("n_samples", 2) < 2:
        raise ConfigError("need at least two samples", "n_samples")

    fb = values.get("feedback", "identity")
    if fb not in FEEDBACKS:
        raise ConfigError(f"unknown feedback {fb!r}; expected one of {', '.join(FEEDBACKS)}", "feedback")
    if fb == "epsilon_pair" and n != 4:
        raise ConfigError("epsilon_pair feedback requires N=4", "feedback")
    if fb.startswith("schematic") and n % 2:
        raise ConfigError("schematic feedback needs an even number of qubits", "feedback")
    if fb == "local_drive":
        a = values.get("a")
        if a is None:
            raise ConfigError("local_drive feedback needs the per-atom pulse areas", "a")
        if len(a) != n:
            raise ConfigError(f"expected {n} pulse areas, got {len(a)}", "a")
    if values.get("drive_operator", "spin") not in ("spin", "pauli"):
        raise ConfigError("expected 'spin' or 'pauli'", "drive_operator")
    init = values.get("initial", "ground")
    if init not in INITIAL_STATES:
        raise ConfigError(f"unknown initial state {init!r}", "initial")
    if init in ("target", "bell_bell") and n != 4:
        raise ConfigError(f"initial state {init!r} is defined for N=4", "initial")
    if init == "mixed" and cmd in ("trajectory", "ensemble"):
        raise ConfigError("trajectories need a pure initial state", "initial")

    if cmd in ("scan-A", "scan-A-eps") and n != 4:
        raise ConfigError(f"{cmd} is defined for N=4", "N")
    if cmd == "dark-basis" and n % 2:
        raise ConfigError("no singlet sector for odd N", "N")
    if cmd == "concurrence-range" and n not in (2, 4, 6, 8):
        raise ConfigError("concurrence-range supports N in {2, 4, 6, 8}", "N")
    if cmd == "validate" and n % 2:
        raise ConfigError("strategy validation needs a dark target (even N)", "N")
    return ExperimentSpec(**values)
