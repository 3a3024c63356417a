"""Numerical solvers and checks for the Dirichlet problem of the arctangent
(Lagrangian phase) Hessian equation sum_i arctan(lambda_i(D^2 u)) = psi(x)
on uniformly convex planar domains.

Layers:
    phase      exact small-matrix operator algebra (eigenvalues, symmetric
               polynomials, derivative, range classification)
    geometry   disk/ellipse domains, lattices with exact boundary intercepts,
               boundary data, mollification, quadratic barriers
    schemes    nine-point discrete Hessians, residuals, sparse linearization
    stencils   monotone wide-stencil operator (compiled sweep kernel with a
               pure-NumPy twin, selected at import; LMCE_PURE_PY=1 forces the
               fallback)
    continuity homotopy-in-phase Newton solver, mollified boundary sequences
    perron     two-sided monotone constant-phase solver, comparison harness,
               quadratic sup/inf envelopes
    cli        solve / study / verify / stress-radial commands
"""

from . import errors
from .continuity import (
    ContinuityOptions,
    HomotopyState,
    c0_boundary_run,
    continuity_run,
    initial_guess,
    newton_solve,
    spectrum_margins_of,
)
from .geometry import (
    BarrierPair,
    BoundaryData,
    DomainGrid,
    DomainSpec,
    anchor_parameters,
    barrier_at,
    barrier_envelopes,
    build_grid,
    mollify_boundary,
    sandwich_margin,
    truncated_phase_bounds,
)
from .perron import (
    ComparisonReport,
    EnvelopeParams,
    PerronOptions,
    PerronState,
    comparison_check,
    inf_convolution,
    perron_run,
    sup_convolution,
    two_sided_certificate,
)
from .phase import (
    BorderedMatrix,
    PhaseSpec,
    SpectrumChecks,
    bordered_eig_drift,
    classify_phase,
    eig_sym,
    metric_inverse,
    phase,
    polynomial_residual,
    sigma_all,
    sigma_k,
    supercritical_spectrum_check,
)
from .reports import SolveReport
from .schemes import (
    LinearSystem,
    ScalarField,
    assemble_linearization,
    field_from_function,
    hessian_at,
    hessian_components,
    phase_residual,
    phase_values,
    solve_linear,
    trace_extremes,
)
from .stencils import StencilSet, wide_phase_values, wide_stencil_phase

__version__ = "0.1.0"
