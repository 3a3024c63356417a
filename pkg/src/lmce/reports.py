"""Solve reports: convergence flags, residuals, margins, histories, timings,
and their JSON form."""

import json
from dataclasses import dataclass, field

import numpy as np


def jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


@dataclass
class SolveReport:
    """Outcome of one solve.

    final_residual is the sup-norm phase residual for the Newton/continuity
    path and the final two-sided gap for the constant-phase path; converged
    implies final_residual <= tolerance.  spectrum_margins aggregates the
    minima over nodes of the four supercritical eigenvalue inequalities;
    sandwich_margin is the worst two-sided barrier bracketing margin.
    """

    solver: str
    converged: bool
    final_residual: float
    tolerance: float
    step_history: list = field(default_factory=list)
    spectrum_margins: dict | None = None
    sandwich_margin: float | None = None
    gap: float | None = None
    sweeps: int | None = None
    tau: dict | None = None
    gap_history: list | None = None
    monotonicity: dict | None = None
    cauchy: dict | None = None
    timings: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    state: object = None  # in-process handle (homotopy / two-sided state); not serialized

    def to_json_dict(self):
        return jsonable(
            {
                "solver": self.solver,
                "converged": bool(self.converged),
                "finalResidual": self.final_residual,
                "tolerance": self.tolerance,
                "stepHistory": self.step_history,
                "spectrumMargins": self.spectrum_margins,
                "sandwichMargin": self.sandwich_margin,
                "gap": self.gap,
                "sweeps": self.sweeps,
                "tau": self.tau,
                "gapHistory": self.gap_history,
                "monotonicity": self.monotonicity,
                "cauchyGaps": self.cauchy,
                "timings": self.timings,
                "extras": self.extras,
            }
        )

    def write(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=2)
            f.write("\n")
