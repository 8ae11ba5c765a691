"""Experiment configuration: parsing, validation and resolved echo.

Configs are YAML (JSON is accepted as a subset).  Complex numbers are written
as ``[re, im]`` pairs.  Example::

    seed: 7
    operators:
      pair_a:
        kernels: [{lambda: 1}, {lambda: 2}]
        superdiag: [{roots: [0.5]}]
        N: 16
    tasks:
      - kind: curvature
        kernel: {lambda: 2}
        grid: {radius: 0.8, points: 21}
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import InvalidParameter
from .kernels import DiagonalKernel, kernel_from_coeffs, lambda_kernel
from .symbols import AnalyticSymbol

__all__ = [
    "TASK_KINDS",
    "DEFAULT_TOLERANCES",
    "ConfigError",
    "ExperimentConfig",
    "parse_complex",
    "parse_kernel",
    "parse_symbol",
    "load_config",
    "validate_config",
]

TASK_KINDS = ("curvature", "sff", "property-h", "similar", "j21", "homogeneous", "oracle-crosscheck")
DEFAULT_TOLERANCES = {
    "curvature": 1e-6,
    "sff": 1e-6,
    "property-h": 0.0,
    "similar": 1e-8,
    "j21": 1e-8,
    "homogeneous": 1e-6,
    "oracle-crosscheck": 1e-7,
}
MAX_GRID_RADIUS = 0.95


class ConfigError(InvalidParameter):
    """Parse or validation failure; ``location`` points into the document."""

    def __init__(self, location: str, msg: str):
        super().__init__(f"{location}: {msg}")
        self.location = location


def parse_complex(x, where: str = "value") -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ConfigError(where, "complex numbers are [re, im] pairs")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(float(x))
    raise ConfigError(where, f"cannot read {x!r} as a number")


def parse_kernel(spec, where: str = "kernel") -> DiagonalKernel:
    if not isinstance(spec, dict):
        raise ConfigError(where, "kernel must be {lambda: x} or {coeffs: [...]}")
    try:
        if "lambda" in spec:
            return lambda_kernel(float(spec["lambda"]), int(spec.get("M", 64)))
        if "coeffs" in spec:
            return kernel_from_coeffs([float(c) for c in spec["coeffs"]])
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None
    raise ConfigError(where, "kernel must define 'lambda' or 'coeffs'")


def parse_symbol(spec, where: str = "symbol") -> AnalyticSymbol:
    """Coefficient list (ascending), ``{coeffs: [...]}`` or ``{roots: [...], scale: c}``."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return AnalyticSymbol.constant(float(spec))
    if isinstance(spec, list):
        return AnalyticSymbol(np.array([parse_complex(c, f"{where}[{i}]") for i, c in enumerate(spec)]))
    if isinstance(spec, dict):
        if "coeffs" in spec:
            return parse_symbol(list(spec["coeffs"]), f"{where}.coeffs")
        if "roots" in spec:
            roots = [parse_complex(r, f"{where}.roots[{i}]") for i, r in enumerate(spec["roots"])]
            scale = parse_complex(spec.get("scale", 1.0), f"{where}.scale")
            return AnalyticSymbol.from_roots(roots, scale)
    raise ConfigError(where, "symbol must be a coefficient list, {coeffs: ...} or {roots: ...}")


@dataclass
class ExperimentConfig:
    operators: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)
    output: dict = field(default_factory=dict)
    seed: int = 0
    truncation: int = 16

    def resolved(self) -> dict:
        """Plain-data echo with defaults filled in; parses back to the same experiment."""
        return {
            "seed": self.seed,
            "truncation": self.truncation,
            "operators": self.operators,
            "tasks": self.tasks,
            "output": self.output,
        }


def _check_grid(grid, where: str) -> dict:
    g = {"radius": 0.8, "points": 21}
    if grid is not None:
        if not isinstance(grid, dict):
            raise ConfigError(where, "grid must be a mapping with radius and points")
        g.update(grid)
    try:
        r, p = float(g["radius"]), int(g["points"])
    except (TypeError, ValueError):
        raise ConfigError(where, "grid radius and points must be numeric") from None
    if not 0 < r <= MAX_GRID_RADIUS:
        raise ConfigError(f"{where}.radius", f"grid must stay inside |w| <= {MAX_GRID_RADIUS}")
    if p < 2:
        raise ConfigError(f"{where}.points", "need at least two points per axis")
    return {"radius": r, "points": p}


def validate_config(doc: Any, seed=None, truncation=None, tolerance_scale: float = 1.0) -> ExperimentConfig:
    """Check a parsed document and fill defaults; CLI flags override file values."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "top level must be a mapping")
    unknown = set(doc) - {"operators", "tasks", "output", "seed", "truncation"}
    if unknown:
        raise ConfigError("<root>", f"unknown keys {sorted(unknown)}")
    if tolerance_scale <= 0:
        raise ConfigError("--tolerance-scale", "must be positive")
    cfg = ExperimentConfig()
    cfg.seed = int(seed if seed is not None else doc.get("seed", 0))
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    cfg.truncation = int(truncation if truncation is not None else doc.get("truncation", 16))
    if cfg.truncation < 2:
        raise ConfigError("truncation", "must be at least 2")
    ops = doc.get("operators") or {}
    if not isinstance(ops, dict):
        raise ConfigError("operators", "must be a mapping of names to operator specs")
    for name, spec in ops.items():
        where = f"operators.{name}"
        if not isinstance(spec, dict) or "kernels" not in spec:
            raise ConfigError(where, "operator needs a 'kernels' list")
        ks = spec["kernels"]
        if not isinstance(ks, list) or not ks:
            raise ConfigError(f"{where}.kernels", "must be a non-empty list")
        for i, k in enumerate(ks):
            parse_kernel(k, f"{where}.kernels[{i}]")
        sd = spec.get("superdiag", [])
        if len(sd) != len(ks) - 1:
            raise ConfigError(f"{where}.superdiag", f"expected {len(ks) - 1} symbols")
        for i, s in enumerate(sd):
            parse_symbol(s, f"{where}.superdiag[{i}]")
        for key, s in (spec.get("cofactors") or {}).items():
            parts = str(key).split(",")
            if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
                raise ConfigError(f"{where}.cofactors", f"key {key!r} must look like 'i,j'")
            parse_symbol(s, f"{where}.cofactors[{key}]")
        resolved = dict(spec)
        resolved.setdefault("superdiag", [])
        resolved.setdefault("cofactors", {})
        resolved["N"] = int(truncation if truncation is not None else spec.get("N", cfg.truncation))
        cfg.operators[str(name)] = resolved
    tasks = doc.get("tasks") or []
    if not isinstance(tasks, list):
        raise ConfigError("tasks", "must be a list")
    for t_i, task in enumerate(tasks):
        where = f"tasks[{t_i}]"
        if not isinstance(task, dict) or task.get("kind") not in TASK_KINDS:
            raise ConfigError(f"{where}.kind", f"must be one of {', '.join(TASK_KINDS)}")
        t = dict(task)
        t.setdefault("id", f"{t_i:03d}-{t['kind']}")
        t["grid"] = _check_grid(t.get("grid"), f"{where}.grid")
        tol = t.get("tolerance", DEFAULT_TOLERANCES[t["kind"]])
        try:
            tol = float(tol)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}.tolerance", "must be a number") from None
        if tol < 0 or (tol == 0 and t["kind"] != "property-h"):
            raise ConfigError(f"{where}.tolerance", "must be positive")
        t["tolerance"] = tol * tolerance_scale
        for ref in _operator_refs(t):
            if ref not in cfg.operators:
                raise ConfigError(where, f"operator {ref!r} is not defined")
        cfg.tasks.append(t)
    out = doc.get("output") or {}
    if not isinstance(out, dict):
        raise ConfigError("output", "must be a mapping")
    cfg.output = {"report": out.get("report", "report.jsonl"), "csv": bool(out.get("csv", True)), "matrices": bool(out.get("matrices", False))}
    return cfg


def _operator_refs(task: dict) -> list:
    refs = []
    if "operator" in task:
        refs.append(task["operator"])
    if "operators" in task:
        if not isinstance(task["operators"], list) or len(task["operators"]) != 2:
            raise ConfigError(task.get("id", "task"), "'operators' must name exactly two operators")
        refs += task["operators"]
    return [str(r) for r in refs]


def load_config(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(loc, "could not parse config") from None
    except OSError as exc:
        raise ConfigError(str(path), str(exc)) from None
    return validate_config(doc, **overrides)
