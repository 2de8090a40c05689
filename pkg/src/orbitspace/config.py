"""JSON analysis configuration: group, basic invariants, tolerances, potential."""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .group import GroupElement, GroupPresentation, RotationFamily
from .pmatrix import MIBSpec
from .poly import Polynomial, WeightSystem, parse_polynomial

__all__ = ["AnalysisConfig", "ConfigError", "evaluate_token", "DEFAULT_TOLERANCES", "DEFAULT_SAMPLING"]

DEFAULT_TOLERANCES = {
    "invariance": 1e-9,
    "rank_rtol": 1e-7,
    "kernel_rtol": 1e-8,
    "vanish": 1e-7,
    "relation": 1e-9,
    "membership": 1e-9,
    "degeneracy": 1e-8,
    "stationarity": 1e-10,
}

DEFAULT_SAMPLING = {
    "invariance_samples": 50,
    "invariance_angles": 36,
    "angle_grid": 720,
    "per_subspace": 40,
    "principal_samples": 200,
    "bordering_samples": 50,
    "max_denominator": 10**6,
    "multistarts": 64,
    "start_radius": 2.0,
    "escape_radius": 10.0,
    "max_closure": 1000,
}


class ConfigError(ValueError):
    """Invalid analysis configuration."""


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sqrt": math.sqrt, "cos": math.cos, "sin": math.sin}
_CONSTS = {"pi": math.pi}


def evaluate_token(token) -> float:
    """Evaluate a matrix entry such as ``"-sqrt(3)/2"`` or ``0.5`` to a float."""
    if isinstance(token, (int, float)):
        return float(token)
    if not isinstance(token, str):
        raise ConfigError(f"bad matrix entry {token!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if len(node.args) != 1:
                raise ConfigError(f"{node.func.id} takes one argument")
            return _FUNCS[node.func.id](ev(node.args[0]))
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ConfigError(f"unsupported expression in matrix entry {token!r}")

    try:
        return float(ev(ast.parse(token.replace("^", "**"), mode="eval")))
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse matrix entry {token!r}") from exc


@dataclass
class AnalysisConfig:
    name: str
    variables: tuple[str, ...]
    group: GroupPresentation
    mib: MIBSpec
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    sampling: dict[str, Any] = field(default_factory=lambda: dict(DEFAULT_SAMPLING))
    potential: dict | None = None
    sweep: dict | None = None
    section: dict = field(default_factory=lambda: {"r2": 1.0, "grid": 400})
    stratum_labels: dict[str, str] = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisConfig":
        try:
            n = int(data["dimension"])
            variables = tuple(data.get("variables") or [f"x{i + 1}" for i in range(n)])
            if len(variables) != n:
                raise ConfigError("number of variables does not match dimension")
            gens = []
            for gname, rows in data.get("generators", {}).items():
                m = np.array([[evaluate_token(t) for t in row] for row in rows], dtype=float)
                if m.shape != (n, n):
                    raise ConfigError(f"generator {gname} is not {n}x{n}")
                gens.append(GroupElement(m, gname))
            fam = data.get("continuous_family")
            family = None
            if fam:
                family = RotationFamily(n, tuple(tuple(b) for b in fam["blocks"]), fam.get("name", "U1"))
            group = GroupPresentation(n, tuple(gens), family)
            mib_data = data["mib"]
            polys = tuple(parse_polynomial(s, variables) for s in mib_data["polynomials"])
            degrees = tuple(mib_data.get("degrees") or (p.degree for p in polys))
            mib = MIBSpec(polys, WeightSystem(degrees))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(data.get("tolerances", {}))
        sampling = dict(DEFAULT_SAMPLING)
        sampling.update(data.get("sampling", {}))
        section = {"r2": 1.0, "grid": 400}
        section.update(data.get("section", {}))
        return cls(
            name=data.get("name", "analysis"),
            variables=variables,
            group=group,
            mib=mib,
            seed=int(data.get("seed", 0)),
            tolerances=tol,
            sampling=sampling,
            potential=data.get("potential"),
            sweep=data.get("sweep"),
            section=section,
            stratum_labels=dict(data.get("stratum_labels", {})),
            raw=data,
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "AnalysisConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def parse_p(self, text: str) -> Polynomial:
        return parse_polynomial(text, self.mib.p_vars)
