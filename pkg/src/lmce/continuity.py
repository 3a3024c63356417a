"""Homotopy-in-phase solver with damped Newton corrections.

Solves phase(D^2 u) = psi with Dirichlet data by continuation along the family
    phase(D^2 u_t) = t * psi + (1 - t) * c0,   c0 = (n-2)pi/2 + delta,
starting from the exact-phase quadratic plus a metric-weighted linear lift.
Each step is solved by Newton with a residual-norm backtracking line search;
the step size adapts (halve on failure, double after two straight successes)
down to a hard floor.  Merely continuous boundary data is handled by solving a
sequence of mollified problems and checking the discrete maximum-principle
contract between consecutive stages.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ContinuationFailure,
    NewtonFailure,
    PhaseOutOfRange,
    StagnationFailure,
)
from .geometry import mollify_boundary, sandwich_margin, truncated_phase_bounds
from .phase import PhaseSpec, supercritical_spectrum_check
from .reports import SolveReport
from .schemes import (
    ScalarField,
    assemble_linearization,
    field_from_function,
    hessian_components,
    phase_residual,
    solve_linear,
)

__all__ = [
    "ContinuityOptions",
    "HomotopyState",
    "initial_guess",
    "newton_solve",
    "continuity_run",
    "c0_boundary_run",
    "spectrum_margins_of",
]


@dataclass(frozen=True)
class ContinuityOptions:
    tol_res: float = 1e-11        # final polished residual
    step_tol_res: float = 1e-9    # per-homotopy-step residual
    max_newton: int = 30
    dt_init: float = 0.25
    dt_floor: float = 2.0**-12
    line_search_floor: float = 2.0**-20
    armijo: float = 1e-4
    anchor_count: int = 64
    compute_margins: bool = True


@dataclass
class HomotopyState:
    """Continuation trace: current parameter, iterate, and per-step records
    (t, dt, newton iterations, residual)."""

    t: float
    u: ScalarField
    residual_norm: float
    newton_iters: int
    step_history: list = field(default_factory=list)


def initial_guess(grid, phi, c0):
    """Exact-phase quadratic q = 0.5 |x - xc|^2 tan(c0/n) plus the correction
    solving the metric(D^2 q)-weighted system with boundary data phi - q;
    the guess has phase exactly c0 up to the correction's Hessian and matches
    the boundary data."""
    n = 2
    if not (-n * math.pi / 2 < c0 < n * math.pi / 2):
        raise PhaseOutOfRange(f"base phase c0={c0} outside (-{n}*pi/2, {n}*pi/2)")
    cx, cy = grid.spec.center
    coef = math.tan(c0 / n)
    qf = field_from_function(grid, lambda x, y: 0.5 * coef * ((x - cx) ** 2 + (y - cy) ** 2))
    phi_b = phi(grid.hits_xy) if grid.n_hits else np.zeros(0)
    system = assemble_linearization(qf, boundary_values=phi_b - qf.boundary_values)
    lift = solve_linear(system)
    return ScalarField(grid, qf.values + lift, phi_b)


def newton_solve(u0, target, tol_res, max_iter=30, armijo=1e-4, step_floor=2.0**-20):
    """Damped Newton on the phase residual.

    Solves the linearized system for the update and backtracks (factor 1/2,
    Armijo fraction `armijo`) on the sup-norm residual.  Returns the iterate
    and the iteration count; raises NewtonFailure / StagnationFailure carrying
    the best iterate.
    """
    target = np.atleast_1d(np.asarray(target, dtype=float))
    n = 2
    if np.any(np.abs(target) >= n * math.pi / 2):
        raise PhaseOutOfRange("target phase outside the admissible open range")
    u = u0.copy()
    r = phase_residual(u, target)
    rn = float(np.abs(r).max())
    if rn <= tol_res:
        return u, 0
    for it in range(1, max_iter + 1):
        system = assemble_linearization(u)
        step = solve_linear(system, rhs=-r)
        alpha = 1.0
        while True:
            trial = ScalarField(u.grid, u.values + alpha * step, u.boundary_values)
            r_try = phase_residual(trial, target)
            rn_try = float(np.abs(r_try).max())
            if rn_try <= (1.0 - armijo * alpha) * rn:
                break
            alpha *= 0.5
            if alpha < step_floor:
                raise StagnationFailure(
                    f"line search floor reached at residual {rn:.3e}",
                    best=u,
                    residual=rn,
                    iterations=it,
                )
        u, r, rn = trial, r_try, rn_try
        if rn <= tol_res:
            return u, it
    raise NewtonFailure(
        f"no convergence in {max_iter} iterations (residual {rn:.3e})",
        best=u,
        residual=rn,
        iterations=max_iter,
    )


def spectrum_margins_of(u, psi_spec):
    """Minimum margins of the four supercritical eigenvalue inequalities over
    all nodal Hessians (mirrored phase ranges check the negated spectrum)."""
    uxx, uyy, uxy = hessian_components(u)
    mean = 0.5 * (uxx + uyy)
    d = np.hypot(0.5 * (uxx - uyy), uxy)
    lam1, lam2 = mean + d, mean - d
    if psi_spec.mirrored:
        lam1, lam2 = -lam2, -lam1
        psi_min = -psi_spec.hi
    else:
        psi_min = psi_spec.lo
    worst = None
    for a, b in zip(lam1, lam2):
        checks = supercritical_spectrum_check([a, b], psi_min=psi_min, delta=psi_spec.delta)
        worst = checks if worst is None else worst.min_margins(checks)
    return worst


def _margins_and_sandwich(u, phi, psi_spec, opts):
    margins = sandwich = None
    if opts.compute_margins and u.grid.hole is None:
        margins = spectrum_margins_of(u, psi_spec).margins
        bounds = truncated_phase_bounds(psi_spec)
        sandwich = sandwich_margin(u.grid, u.values, phi, bounds,
                                   anchors=np.linspace(0, 2 * math.pi, opts.anchor_count,
                                                       endpoint=False))
    return margins, sandwich


def continuity_run(grid, phi, psi_spec: PhaseSpec, opts: ContinuityOptions | None = None):
    """Continuation from the constant base phase c0 to the target phase.

    Requires a supercritical phase (min >= (n-2)pi/2 + delta with delta > 0).
    Returns the solved field and a report with the step history, the worst
    spectral margins, and the barrier bracketing margin.
    """
    opts = opts or ContinuityOptions()
    if psi_spec.classification != "supercritical":
        raise PhaseOutOfRange(
            f"continuity requires a supercritical phase, got {psi_spec.classification}"
        )
    t_start = time.perf_counter()
    n = 2
    psi_vec = psi_spec.at_nodes(grid.n_nodes)
    c0 = (n - 2) * math.pi / 2 + psi_spec.delta
    if psi_spec.mirrored:
        c0 = -c0

    u = initial_guess(grid, phi, c0)
    u, iters = newton_solve(u, np.full(grid.n_nodes, c0), opts.step_tol_res,
                            opts.max_newton, opts.armijo, opts.line_search_floor)
    rn = float(np.abs(phase_residual(u, c0)).max())
    state = HomotopyState(t=0.0, u=u, residual_norm=rn, newton_iters=iters)
    state.step_history.append({"t": 0.0, "dt": 0.0, "newtonIters": iters, "residual": rn})

    dt = opts.dt_init
    streak = 0
    while state.t < 1.0:
        t_try = min(1.0, state.t + dt)
        target = t_try * psi_vec + (1.0 - t_try) * c0
        try:
            u_new, iters = newton_solve(state.u, target, opts.step_tol_res,
                                        opts.max_newton, opts.armijo, opts.line_search_floor)
        except NewtonFailure:
            dt *= 0.5
            streak = 0
            if dt < opts.dt_floor:
                raise ContinuationFailure(
                    f"step size under its floor at t={state.t:.6f}; the phase may "
                    "leave the supercritical regime or the grid is too coarse",
                    last_good_t=state.t,
                    best=state.u,
                ) from None
            continue
        rn = float(np.abs(phase_residual(u_new, target)).max())
        state.u, state.t, state.newton_iters, state.residual_norm = u_new, t_try, iters, rn
        state.step_history.append({"t": t_try, "dt": dt, "newtonIters": iters, "residual": rn})
        streak += 1
        if streak >= 2:
            dt *= 2.0
            streak = 0

    u_fin, iters = newton_solve(state.u, psi_vec, opts.tol_res,
                                opts.max_newton, opts.armijo, opts.line_search_floor)
    rn = float(np.abs(phase_residual(u_fin, psi_vec)).max())
    state.u, state.residual_norm, state.newton_iters = u_fin, rn, iters
    state.step_history.append({"t": 1.0, "dt": 0.0, "newtonIters": iters, "residual": rn})

    margins, sandwich = _margins_and_sandwich(u_fin, phi, psi_spec, opts)
    report = SolveReport(
        solver="continuity",
        converged=rn <= opts.tol_res,
        final_residual=rn,
        tolerance=opts.tol_res,
        step_history=state.step_history,
        spectrum_margins=margins,
        sandwich_margin=sandwich,
        timings={"totalSeconds": time.perf_counter() - t_start},
        state=state,
    )
    return u_fin, report


def c0_boundary_run(grid, phi, psi_spec, radii, opts: ContinuityOptions | None = None):
    """Solve a decreasing sequence of mollified boundary problems and check
    the discrete maximum-principle contract between consecutive stages:
    max |u_k - u_l| <= sup_boundary |phi_k - phi_l| + 5 h^2.

    Returns the last iterate; the report carries per-stage boundary and
    interior gaps."""
    opts = opts or ContinuityOptions()
    radii = list(radii)
    if not radii or any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise PhaseOutOfRange("radii must be a nonempty strictly decreasing sequence")
    stages = []
    fields = []
    for r in radii:
        phi_r = mollify_boundary(phi, r)
        u_r, rep_r = continuity_run(grid, phi_r, psi_spec, opts)
        stages.append((r, phi_r, rep_r))
        fields.append(u_r)
    tol_gap = 5.0 * grid.h**2
    gaps = []
    for (r1, p1, _), (r2, p2, _), u1, u2 in zip(stages, stages[1:], fields, fields[1:]):
        boundary_gap = p1.uniform_distance_to(p2)
        interior_gap = u1.sup_diff(u2)
        gaps.append(
            {
                "radii": [r1, r2],
                "boundaryGap": boundary_gap,
                "interiorGap": interior_gap,
                "withinContract": bool(interior_gap <= boundary_gap + tol_gap),
            }
        )
    last_report = stages[-1][2]
    report = replace(
        last_report,
        cauchy={"pairs": gaps, "tolerance": tol_gap},
        extras=dict(last_report.extras, mollifyRadii=list(radii)),
    )
    return fields[-1], report
