"""Two-sided monotone solver for the constant-phase equation, plus the
comparison-principle harness and quadratic sup/inf envelopes.

The constructive surrogate for the supremum-of-subsolutions construction:
start the lower branch from the pointwise maximum of anchored subsolution
quadratics (a discrete subsolution; boundary hits carry the exact data) and
the upper branch from the minimum of supersolution quadratics, then iterate

    u <- u + tau_i * (S(u)_i - c)

with the monotone wide-stencil operator S and per-node steps tau_i small
enough that the update map is nondecreasing in every value.  The lower branch
then increases pointwise, the upper decreases, ordering is preserved, and the
two-sided gap certifies the solve.  Negative constant phases are solved
through the mirror symmetry u -> -u (so subsolution starts stay convex).
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    EnvelopeWindowTooSmall,
    NonConstantPhase,
    NotASubsolution,
    NotASupersolution,
    PerronFailure,
    PreconditionViolated,
)
from . import kernels
from .geometry import BoundaryData, barrier_envelopes, truncated_phase_bounds
from .phase import classify_phase
from .reports import SolveReport
from .schemes import ScalarField
from .stencils import StencilSet, wide_phase_values

__all__ = [
    "PerronOptions",
    "PerronState",
    "EnvelopeParams",
    "perron_run",
    "sup_convolution",
    "inf_convolution",
    "comparison_check",
    "ComparisonReport",
    "two_sided_certificate",
]


@dataclass(frozen=True)
class PerronOptions:
    max_sweeps: int = 400_000
    sweep_block: int = 250
    directions: int = 16
    anchor_count: int = 64
    c0_mollify_radius: float | None = None  # barrier smoothing for C0 data


@dataclass
class PerronState:
    """Two-sided iteration state: monotone lower/upper branches, per-node
    pseudo-time steps, sweep count, and the current gap.

    A mirrored state solved phase = -c for -u (negative constants); its
    branches and stencils live in the mirrored problem.
    """

    lower: ScalarField
    upper: ScalarField
    tau: np.ndarray
    sweeps: int
    gap: float
    lower_history: np.ndarray  # per sweep: (max |update|, min update, max update)
    upper_history: np.ndarray
    stencils: object
    phase: float
    tol_gap: float
    mirrored: bool = False


def _mirror_boundary(phi):
    fn = phi.fn
    return BoundaryData(phi.domain, lambda x, y: -np.asarray(fn(x, y)),
                        smoothness=phi.smoothness, mollify_radii=phi.mollify_radii)


def perron_run(grid, phi, c, stencils=None, tol_gap=1e-8, opts: PerronOptions | None = None):
    """Two-sided monotone solve of phase(D^2 u) = c (constant) with Dirichlet
    data phi; returns the lower-branch field (the supremum envelope) and a
    report carrying the gap, pseudo-time-step rule, and monotonicity trace.

    Stops when the branch gap is at most tol_gap and both per-sweep updates
    fall below tol_gap / 10; raises PerronFailure when the sweep budget runs
    out first.
    """
    opts = opts or PerronOptions()
    if not np.isscalar(c) or isinstance(c, (bool, np.bool_)):
        raise NonConstantPhase("the two-sided solver accepts a single constant phase")
    c = float(c)
    spec = classify_phase(c, dim=2)  # range check: |c| < pi for n = 2
    if c < 0.0:
        # mirror symmetry: solve phase = -c for -u, so the lower branch always
        # starts from convex subsolution quadratics
        _, mreport = perron_run(grid, _mirror_boundary(phi), -c, stencils=None,
                                tol_gap=tol_gap, opts=opts)
        st = mreport.state
        st.mirrored = True
        solution = ScalarField(grid, -st.lower.values, -st.lower.boundary_values)
        mreport.extras["mirrored"] = True
        return solution, mreport

    t_start = time.perf_counter()
    if stencils is None:
        stencils = StencilSet.build(grid, phi, m=opts.directions)
    bounds = truncated_phase_bounds(spec, mode="general")
    _, lower0, upper0 = barrier_envelopes(
        grid, phi, bounds,
        anchors=np.linspace(0, 2 * math.pi, opts.anchor_count, endpoint=False),
        c0_radius=opts.c0_mollify_radius,
    )
    if np.any(lower0 > upper0 + 1e-9):
        raise PreconditionViolated("barrier envelopes are not ordered")
    bvals = phi(grid.hits_xy) if grid.n_hits else np.zeros(0)

    tau = stencils.tau
    args = (stencils.idx, stencils.w, stencils.const, stencils.centerw)
    lo = np.ascontiguousarray(lower0)
    hi = np.ascontiguousarray(upper0)
    lo_hist, hi_hist = [], []
    gap_history = []
    sweeps = 0
    tol_update = tol_gap / 10.0
    converged = False
    while sweeps < opts.max_sweeps:
        block = min(opts.sweep_block, opts.max_sweeps - sweeps)
        lo, done_lo, h_lo = kernels.sweep_block(lo, tau, c, *args, block, tol_update)
        hi, done_hi, h_hi = kernels.sweep_block(hi, tau, c, *args, block, tol_update)
        lo_hist.append(h_lo)
        hi_hist.append(h_hi)
        sweeps += max(done_lo, done_hi)
        gap = float(np.max(hi - lo))
        gap_history.append({"sweeps": sweeps, "gap": gap})
        if gap <= tol_gap and h_lo[-1, 0] <= tol_update and h_hi[-1, 0] <= tol_update:
            converged = True
            break
    lo_hist = np.concatenate(lo_hist) if lo_hist else np.zeros((0, 3))
    hi_hist = np.concatenate(hi_hist) if hi_hist else np.zeros((0, 3))
    gap = float(np.max(hi - lo))
    if not converged:
        raise PerronFailure(
            f"gap {gap:.3e} above tolerance {tol_gap:.1e} after {sweeps} sweeps; "
            "reduce the step restriction or increase the direction count",
            gap=gap,
            sweeps=sweeps,
        )

    lower = ScalarField(grid, lo, bvals.copy())
    upper = ScalarField(grid, hi, bvals.copy())
    state = PerronState(
        lower=lower,
        upper=upper,
        tau=tau,
        sweeps=sweeps,
        gap=gap,
        lower_history=lo_hist,
        upper_history=hi_hist,
        stencils=stencils,
        phase=c,
        tol_gap=tol_gap,
    )
    op_residual = max(
        float(np.abs(wide_phase_values(lower, stencils) - c).max()),
        float(np.abs(wide_phase_values(upper, stencils) - c).max()),
    )
    report = SolveReport(
        solver="perron",
        converged=converged,
        final_residual=gap,
        tolerance=tol_gap,
        gap=gap,
        sweeps=sweeps,
        tau={"rule": stencils.tau_rule, "min": float(tau.min()), "max": float(tau.max())},
        gap_history=gap_history,
        monotonicity={
            "lowerMinIncrement": float(lo_hist[:, 1].min(initial=0.0)),
            "upperMaxIncrement": float(hi_hist[:, 2].max(initial=0.0)),
        },
        timings={"totalSeconds": time.perf_counter() - t_start},
        extras={"operatorResidual": op_residual, "directions": stencils.m,
                "reachSteps": stencils.reach_steps},
        state=state,
    )
    return lower, report


@dataclass(frozen=True)
class EnvelopeParams:
    """Quadratic-envelope parameters: eps > 0 and the search window, which
    must cover sqrt(eps * oscillation(u)) so the true maximizer is inside."""

    eps: float
    search_radius: float


def _envelope(u, params, sign):
    if params.eps <= 0.0:
        raise PreconditionViolated("envelope eps must be positive")
    g = u.grid
    pts = np.concatenate([g.xy, g.hits_xy]) if g.n_hits else g.xy
    vals = np.concatenate([u.values, u.boundary_values]) if g.n_hits else u.values
    osc = float(vals.max() - vals.min())
    needed = math.sqrt(params.eps * osc)
    if params.search_radius < needed:
        raise EnvelopeWindowTooSmall(
            f"search radius {params.search_radius:.4f} below sqrt(eps*osc) = {needed:.4f}"
        )
    out = np.empty(pts.shape[0])
    block = 512
    for lo in range(0, pts.shape[0], block):
        d2 = ((pts[lo : lo + block, None, :] - pts[None, :, :]) ** 2).sum(-1)
        cand = vals[None, :] + sign * (params.eps - d2 / params.eps)
        cand = np.where(d2 <= params.search_radius**2, cand, sign * (-np.inf))
        out[lo : lo + block] = sign * np.max(sign * cand, axis=1)
    return ScalarField(u.grid, out[: g.n_nodes], out[g.n_nodes :])


def sup_convolution(u, params):
    """Discrete upper quadratic envelope
    u^eps(x) = max_y { u(y) + eps - |y - x|^2 / eps } over the window;
    u^eps >= u (self term), and u^eps + |x|^2/eps is discretely convex."""
    return _envelope(u, params, +1.0)


def inf_convolution(u, params):
    """Lower envelope, the mirror of sup_convolution."""
    return _envelope(u, params, -1.0)


@dataclass(frozen=True)
class ComparisonReport:
    passed: bool
    max_difference: float
    worst_node: int
    tol: float


def comparison_check(u, v, c, stencils, tol=1e-10, boundary_u=None, boundary_v=None):
    """Ordered-pair check: with S(u) >= c - tol (discrete subsolution),
    S(v) <= c + tol (supersolution) and u <= v at all boundary hits, the
    interior must satisfy u <= v up to tol.

    boundary_u / boundary_v re-bind the wide-stencil cut arms to each field's
    own Dirichlet data (defaulting to the data the stencils were built with).
    """
    s_u = wide_phase_values(u, stencils, boundary=boundary_u)
    s_v = wide_phase_values(v, stencils, boundary=boundary_v)
    if np.any(s_u < c - tol):
        node = int(np.argmin(s_u))
        raise NotASubsolution(
            f"operator value {s_u[node]:.6f} below {c} - tol at node {node}",
            node=node,
            value=float(s_u[node]),
        )
    if np.any(s_v > c + tol):
        node = int(np.argmax(s_v))
        raise NotASupersolution(
            f"operator value {s_v[node]:.6f} above {c} + tol at node {node}",
            node=node,
            value=float(s_v[node]),
        )
    if np.any(u.boundary_values > v.boundary_values + tol):
        raise PreconditionViolated("boundary ordering u <= v fails at a hit")
    diff = u.values - v.values
    worst = int(np.argmax(diff))
    return ComparisonReport(
        passed=bool(diff[worst] <= tol),
        max_difference=float(diff[worst]),
        worst_node=worst,
        tol=tol,
    )


def two_sided_certificate(state, tol_gap=None, tol=1e-7):
    """Discrete counterpart of "lower envelope = upper envelope": the lower
    branch is a subsolution within tol, the upper a supersolution, both carry
    the boundary data exactly, and the branch gap is at most tol_gap
    (defaulting to the gap tolerance the state was solved with).

    A mirrored state is certified in its own (mirrored) problem, which is
    equivalent to the original by the symmetry u -> -u.
    """
    if tol_gap is None:
        tol_gap = state.tol_gap
    s_lo = wide_phase_values(state.lower, state.stencils)
    s_hi = wide_phase_values(state.upper, state.stencils)
    if float(s_lo.min()) < state.phase - tol:
        return False
    if float(s_hi.max()) > state.phase + tol:
        return False
    if np.any(np.abs(state.lower.boundary_values - state.upper.boundary_values) > tol):
        return False
    return bool(np.max(state.upper.values - state.lower.values) <= tol_gap)
