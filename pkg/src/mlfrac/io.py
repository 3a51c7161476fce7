"""Problem files and reproducible CSV/JSON output.

Problem schema (JSON)::

    {
      "nu": 0.5,
      "lambda": [0.25, 2, 1],              # lambda_0 .. lambda_N
      "init_conds": [1, 0],
      "roots": [[-1.5, 0], ...],           # optional, with "mults"
      "mults": [1, ...],
      "forcing": {"kind": "constant", "value": 1}
                 | {"kind": "table", "times": [...], "values": [...]},
      "allow_zero_root": false,             # optional
      "cluster_radius": 1e-7                # optional
    }

Complex entries are either a number or a pair ``[re, im]``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import shlex
from pathlib import Path
from typing import Sequence

import numpy as np

from mlfrac.charpoly import ZeroRootError
from mlfrac.motion import MotionSpec
from mlfrac.solver import CauchyProblem, Forcing

__all__ = [
    "ProblemSchemaError",
    "parse_complex",
    "problem_from_dict",
    "problem_to_dict",
    "load_problem",
    "motion_from_dict",
    "load_motion",
    "Table",
]

_PROBLEM_KEYS = {"nu", "lambda", "init_conds", "roots", "mults", "forcing", "allow_zero_root", "cluster_radius"}


class ProblemSchemaError(ValueError):
    """Malformed problem or motion file."""


def parse_complex(v, where: str = "value") -> complex:
    if isinstance(v, bool):
        raise ProblemSchemaError(f"{where}: expected a number or [re, im], got {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        return complex(v[0], v[1])
    raise ProblemSchemaError(f"{where}: expected a number or [re, im], got {v!r}")


def _complex_list(v, where: str) -> list:
    if not isinstance(v, list):
        raise ProblemSchemaError(f"{where}: expected a list")
    return [parse_complex(x, f"{where}[{i}]") for i, x in enumerate(v)]


def _real(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ProblemSchemaError(f"{where}: expected a finite real number, got {v!r}")
    return float(v)


def _forcing(d) -> Forcing:
    if not isinstance(d, dict) or "kind" not in d:
        raise ProblemSchemaError("forcing: expected an object with a 'kind'")
    kind = d["kind"]
    try:
        if kind == "constant":
            return Forcing.constant(parse_complex(d.get("value"), "forcing.value"))
        if kind == "table":
            times = [_real(t, "forcing.times") for t in d.get("times", [])]
            return Forcing.table(times, _complex_list(d.get("values"), "forcing.values"))
    except ProblemSchemaError:
        raise
    except ValueError as exc:
        raise ProblemSchemaError(f"forcing: {exc}") from exc
    raise ProblemSchemaError(f"forcing.kind must be 'constant' or 'table', got {kind!r}")


def problem_from_dict(d: dict) -> CauchyProblem:
    """Build a :class:`CauchyProblem` from the JSON schema.

    Root-finder and zero-root errors propagate unchanged; everything else
    wrong with the document raises :class:`ProblemSchemaError`.
    """
    if not isinstance(d, dict):
        raise ProblemSchemaError("problem: expected a JSON object")
    unknown = set(d) - _PROBLEM_KEYS
    if unknown:
        raise ProblemSchemaError(f"problem: unknown keys {sorted(unknown)}")
    for key in ("nu", "lambda", "init_conds"):
        if key not in d:
            raise ProblemSchemaError(f"problem: missing '{key}'")
    nu = _real(d["nu"], "nu")
    lam = _complex_list(d["lambda"], "lambda")
    conds = _complex_list(d["init_conds"], "init_conds")
    roots = mults = None
    if "roots" in d:
        roots = _complex_list(d["roots"], "roots")
        mults = d.get("mults", [1] * len(roots))
        if not isinstance(mults, list) or any(isinstance(m, bool) or not isinstance(m, int) for m in mults):
            raise ProblemSchemaError("mults: expected a list of integers")
    elif "mults" in d:
        raise ProblemSchemaError("mults given without roots")
    forcing = _forcing(d["forcing"]) if d.get("forcing") is not None else None
    allow_zero = d.get("allow_zero_root", False)
    if not isinstance(allow_zero, bool):
        raise ProblemSchemaError("allow_zero_root: expected a boolean")
    radius = _real(d.get("cluster_radius", 1e-7), "cluster_radius")
    if len(lam) < 2 or lam[-1] == 0:
        raise ProblemSchemaError("lambda: need at least two coefficients with lambda_N != 0")
    if not nu > 0:
        raise ProblemSchemaError("nu must be positive")
    try:
        return CauchyProblem.build(nu, lam, conds, roots=roots, mults=mults, forcing=forcing,
                                   cluster_radius=radius, allow_zero_root=allow_zero)
    except ProblemSchemaError:
        raise
    except ValueError as exc:
        if isinstance(exc, ZeroRootError):
            raise
        raise ProblemSchemaError(str(exc)) from exc


def _cjson(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def problem_to_dict(p: CauchyProblem) -> dict:
    d = {
        "nu": p.nu,
        "lambda": [_cjson(v) for v in p.lam],
        "init_conds": [_cjson(v) for v in p.init_conds],
        "roots": [[complex(r).real, complex(r).imag] for r in p.spectrum.roots],
        "mults": list(p.spectrum.mults),
    }
    if p.forcing is not None:
        f = p.forcing
        if f.kind == "constant":
            d["forcing"] = {"kind": "constant", "value": _cjson(f.value)}
        elif f.kind == "table":
            d["forcing"] = {"kind": "table", "times": list(f.times), "values": [_cjson(v) for v in f.values]}
        else:
            raise ValueError("callable forcing cannot be serialized")
    if p.allow_zero_root:
        d["allow_zero_root"] = True
    return d


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemSchemaError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemSchemaError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def load_problem(path) -> CauchyProblem:
    return problem_from_dict(_read_json(path))


def motion_from_dict(d: dict) -> MotionSpec:
    """MotionSpec from {"velocities", "rate", "initial_dist", "switch_matrix"}."""
    if not isinstance(d, dict):
        raise ProblemSchemaError("motion: expected a JSON object")
    missing = {"velocities", "rate", "initial_dist", "switch_matrix"} - set(d)
    if missing:
        raise ProblemSchemaError(f"motion: missing {sorted(missing)}")
    try:
        return MotionSpec(np.array(d["velocities"], dtype=float), _real(d["rate"], "rate"),
                          np.array(d["initial_dist"], dtype=float), np.array(d["switch_matrix"], dtype=float))
    except ProblemSchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise ProblemSchemaError(f"motion: {exc}") from exc


def load_motion(path) -> MotionSpec:
    return motion_from_dict(_read_json(path))


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Table:
    """Columns plus rows, rendered with a provenance header.

    The header carries the tool version, the command line and the seed and
    nothing run-dependent (no timestamps or host names), so identical
    commands give identical bytes.
    """

    def __init__(self, columns: Sequence[str], version: str, command: Sequence[str], seed=None):
        self.columns = list(columns)
        self.rows: list = []
        self.meta = {"version": version, "command": shlex.join(["mlfrac", *command]), "seed": seed}

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} cells, got {len(row)}")
        self.rows.append(row)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# mlfrac {self.meta['version']}\n")
        buf.write(f"# command: {self.meta['command']}\n")
        buf.write(f"# seed: {'none' if self.meta['seed'] is None else self.meta['seed']}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [[float(v) if isinstance(v, (float, np.floating)) else v for v in r] for r in self.rows]
        doc = {"tool": "mlfrac", **self.meta, "columns": self.columns, "rows": rows}
        return json.dumps(doc, indent=1) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")
