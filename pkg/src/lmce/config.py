"""Run configuration: JSON schema, validation with machine-readable error
codes, boundary/phase presets, and safe expression evaluation.

Config shape (all angles radians, lengths dimensionless):

    {
      "domain":   {"kind": "disk"|"ellipse", "center": [cx, cy],
                   "semiAxes": [a, b]},
      "grid":     {"h": 0.03125},
      "phase":    {"kind": "constant"|"expression", "value"|"expr": ...,
                   "mode": "supercritical"|"general"},
      "boundary": {"kind": "expression"|"preset", "expr"|"name": ...,
                   "smoothness": "C0"|"C2"|"C4", "mollifyRadii": [..]?},
      "solver":   {"method": "continuity"|"perron", "tolRes"?, "maxIter"?,
                   "tolGap"?, "directions"?, "maxSweeps"?},
      "outputs":  {"fieldPath": ..., "reportPath": ...}
    }

Expressions are evaluated over x, y with the usual numpy functions in scope.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import BoundaryData, DomainSpec

__all__ = ["RunConfig", "load_config", "parse_config", "PRESETS", "make_boundary"]

_EXPR_NAMES = {
    "pi": math.pi,
    "e": math.e,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "arctan": np.arctan,
    "arcsin": np.arcsin,
    "arccos": np.arccos,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "abs": np.abs,
    "hypot": np.hypot,
    "minimum": np.minimum,
    "maximum": np.maximum,
}


def eval_expression(expr, x, y):
    try:
        return np.broadcast_to(
            np.asarray(
                eval(expr, {"__builtins__": {}}, dict(_EXPR_NAMES, x=x, y=y)), dtype=float
            ),
            np.shape(x),
        ).copy()
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError("config/bad-expression", f"cannot evaluate {expr!r}: {exc}") from exc


# named presets: boundary data, its smoothness, the natural phase, and the
# exact solution when one exists (used as the study oracle)
def _preset(fn, smoothness, phase, exact=None):
    return {"fn": fn, "smoothness": smoothness, "phase": phase, "exact": exact}


def _rel(domain, x, y):
    cx, cy = domain.center
    return np.asarray(x) - cx, np.asarray(y) - cy


PRESETS = {
    "ma_quadratic": _preset(
        lambda d, x, y: 0.5 * (_rel(d, x, y)[0] ** 2 + _rel(d, x, y)[1] ** 2),
        "C4",
        math.pi / 2,
        exact=lambda d, x, y: 0.5 * (_rel(d, x, y)[0] ** 2 + _rel(d, x, y)[1] ** 2),
    ),
    "ma_zero": _preset(lambda d, x, y: np.zeros_like(np.asarray(x, dtype=float)), "C4", math.pi / 2),
    "saddle": _preset(
        lambda d, x, y: _rel(d, x, y)[0] ** 2 - _rel(d, x, y)[1] ** 2,
        "C4",
        0.0,
        exact=lambda d, x, y: _rel(d, x, y)[0] ** 2 - _rel(d, x, y)[1] ** 2,
    ),
    "harmonic_cubic": _preset(
        lambda d, x, y: _rel(d, x, y)[0] ** 3 - 3 * _rel(d, x, y)[0] * _rel(d, x, y)[1] ** 2,
        "C4",
        0.0,
        exact=lambda d, x, y: _rel(d, x, y)[0] ** 3
        - 3 * _rel(d, x, y)[0] * _rel(d, x, y)[1] ** 2,
    ),
    "abs_cos": _preset(
        lambda d, x, y: np.abs(np.cos(d.parameter_of(np.stack(
            np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), axis=-1)))),
        "C0",
        math.pi / 2,
    ),
}


@dataclass
class RunConfig:
    domain: DomainSpec
    h: float
    phase_kind: str            # "constant" | "expression"
    phase_value: float | None
    phase_expr: str | None
    phase_mode: str            # "supercritical" | "general"
    boundary_kind: str         # "expression" | "preset"
    boundary_expr: str | None
    boundary_preset: str | None
    smoothness: str
    mollify_radii: tuple | None
    method: str                # "continuity" | "perron"
    tol_res: float
    max_iter: int
    tol_gap: float
    directions: int
    max_sweeps: int
    field_path: str
    report_path: str

    def phase_values(self, grid):
        if self.phase_kind == "constant":
            return np.array([self.phase_value])
        return eval_expression(self.phase_expr, grid.xy[:, 0], grid.xy[:, 1])

    def boundary_data(self):
        if self.boundary_kind == "preset":
            p = PRESETS[self.boundary_preset]
            d = self.domain
            return BoundaryData(
                d, lambda x, y: p["fn"](d, x, y), smoothness=p["smoothness"],
                mollify_radii=self.mollify_radii,
            )
        expr = self.boundary_expr
        return BoundaryData(
            self.domain,
            lambda x, y: eval_expression(expr, x, y),
            smoothness=self.smoothness,
            mollify_radii=self.mollify_radii,
        )

    def exact_solution(self):
        """Oracle for studies: exact-solution evaluator or None."""
        if self.boundary_kind == "preset":
            p = PRESETS[self.boundary_preset]
            if p["exact"] is not None:
                d = self.domain
                return lambda x, y: p["exact"](d, x, y)
        return None


def _need(d, key, code, kind=None):
    if key not in d:
        raise ConfigError(code, f"missing field {key!r}")
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(code, f"field {key!r} has the wrong type")
    return v


def _positive(value, code, what):
    if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ConfigError(code, f"{what} must be a positive number")
    return float(value)


def parse_config(doc):
    """Validate a config dict; every violation raises ConfigError with a
    machine-readable code."""
    if not isinstance(doc, dict):
        raise ConfigError("config/not-object", "configuration must be a JSON object")
    dom = _need(doc, "domain", "config/missing-domain", dict)
    try:
        domain = DomainSpec.from_json(
            {
                "kind": _need(dom, "kind", "config/bad-domain"),
                "center": _need(dom, "center", "config/bad-domain"),
                "semiAxes": _need(dom, "semiAxes", "config/bad-domain"),
            }
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError("config/bad-domain", str(exc)) from exc

    grid = _need(doc, "grid", "config/missing-grid", dict)
    h = _positive(_need(grid, "h", "config/bad-grid"), "config/bad-grid", "grid.h")

    ph = _need(doc, "phase", "config/missing-phase", dict)
    phase_kind = _need(ph, "kind", "config/bad-phase")
    if phase_kind not in ("constant", "expression"):
        raise ConfigError("config/bad-phase", f"unknown phase kind {phase_kind!r}")
    phase_value = phase_expr = None
    if phase_kind == "constant":
        v = _need(ph, "value", "config/bad-phase")
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError("config/bad-phase", "phase.value must be a finite number")
        phase_value = float(v)
    else:
        phase_expr = _need(ph, "expr", "config/bad-phase", str)
    phase_mode = ph.get("mode", "supercritical")
    if phase_mode not in ("supercritical", "general"):
        raise ConfigError("config/bad-phase", f"unknown phase mode {phase_mode!r}")

    bd = _need(doc, "boundary", "config/missing-boundary", dict)
    boundary_kind = _need(bd, "kind", "config/bad-boundary")
    boundary_expr = boundary_preset = None
    if boundary_kind == "expression":
        boundary_expr = _need(bd, "expr", "config/bad-boundary", str)
        smoothness = bd.get("smoothness", "C2")
    elif boundary_kind == "preset":
        boundary_preset = _need(bd, "name", "config/bad-boundary", str)
        if boundary_preset not in PRESETS:
            raise ConfigError(
                "config/unknown-preset",
                f"unknown preset {boundary_preset!r}; have {sorted(PRESETS)}",
            )
        smoothness = PRESETS[boundary_preset]["smoothness"]
    else:
        raise ConfigError("config/bad-boundary", f"unknown boundary kind {boundary_kind!r}")
    if smoothness not in ("C0", "C2", "C4"):
        raise ConfigError("config/bad-boundary", f"unknown smoothness {smoothness!r}")
    radii = bd.get("mollifyRadii")
    if radii is not None:
        if not isinstance(radii, list) or not radii or any(
            not isinstance(r, (int, float)) or r <= 0 for r in radii
        ):
            raise ConfigError("config/bad-boundary", "mollifyRadii must be positive numbers")
        if any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
            raise ConfigError("config/bad-boundary", "mollifyRadii must be strictly decreasing")
        radii = tuple(float(r) for r in radii)

    sv = _need(doc, "solver", "config/missing-solver", dict)
    method = _need(sv, "method", "config/bad-solver")
    if method not in ("continuity", "perron"):
        raise ConfigError("config/bad-solver", f"unknown solver {method!r}")
    if method == "perron" and phase_kind != "constant":
        raise ConfigError(
            "config/perron-nonconstant-phase",
            "the two-sided constant-phase solver requires phase.kind == 'constant' "
            "(the comparison principle behind it only covers constants)",
        )
    tol_res = _positive(sv.get("tolRes", 1e-11), "config/bad-solver", "solver.tolRes")
    tol_gap = _positive(sv.get("tolGap", 1e-8), "config/bad-solver", "solver.tolGap")
    max_iter = int(sv.get("maxIter", 30))
    if max_iter <= 0:
        raise ConfigError("config/bad-solver", "solver.maxIter must be positive")
    directions = int(sv.get("directions", 16))
    if directions < 4:
        raise ConfigError("config/bad-solver", "solver.directions must be at least 4")
    max_sweeps = int(sv.get("maxSweeps", 400_000))
    if max_sweeps <= 0:
        raise ConfigError("config/bad-solver", "solver.maxSweeps must be positive")

    out = _need(doc, "outputs", "config/missing-outputs", dict)
    field_path = _need(out, "fieldPath", "config/bad-outputs", str)
    report_path = _need(out, "reportPath", "config/bad-outputs", str)

    return RunConfig(
        domain=domain,
        h=h,
        phase_kind=phase_kind,
        phase_value=phase_value,
        phase_expr=phase_expr,
        phase_mode=phase_mode,
        boundary_kind=boundary_kind,
        boundary_expr=boundary_expr,
        boundary_preset=boundary_preset,
        smoothness=smoothness,
        mollify_radii=radii,
        method=method,
        tol_res=tol_res,
        max_iter=max_iter,
        tol_gap=tol_gap,
        directions=directions,
        max_sweeps=max_sweeps,
        field_path=field_path,
        report_path=report_path,
    )


def load_config(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError("config/not-found", f"no such config file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config/bad-json", f"{path}: {exc}") from exc
    return parse_config(doc)


def make_boundary(config):
    return config.boundary_data()
