"""Discrete Hessians, phase residuals, and the linearized operator on a grid.

The nine-point path used by the Newton/continuity solver: centered second
differences for pure derivatives with Shortley-Weller unequal arms at cut
stencils, a centered cross difference for the mixed derivative (one-sided
quadrant fallback where the diagonal box does not fit), and the sparse
linearization row v -> sum_ab g^ab(D^2u) D_ab v with boundary unknowns
eliminated into the right-hand side.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import LinearSolveFailure
from .phase import PhaseSpec

__all__ = [
    "ScalarField",
    "field_from_function",
    "hessian_components",
    "hessian_at",
    "phase_values",
    "phase_residual",
    "LinearSystem",
    "assemble_linearization",
    "solve_linear",
    "trace_extremes",
]


@dataclass
class ScalarField:
    """Grid samples of a scalar function: one value per active node plus the
    Dirichlet value at every axis boundary hit."""

    grid: object
    values: np.ndarray
    boundary_values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.boundary_values = np.asarray(self.boundary_values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError("values must have one entry per active node")
        if self.boundary_values.shape != (self.grid.n_hits,):
            raise ValueError("boundary_values must have one entry per boundary hit")

    def copy(self):
        return ScalarField(self.grid, self.values.copy(), self.boundary_values.copy())

    def sup_diff(self, other):
        return float(np.abs(self.values - other.values).max())


def field_from_function(grid, fn):
    """Sample fn(x, y) at the nodes and boundary hits."""
    vals = np.asarray(fn(grid.xy[:, 0], grid.xy[:, 1]), dtype=float)
    if grid.n_hits:
        bvals = np.asarray(fn(grid.hits_xy[:, 0], grid.hits_xy[:, 1]), dtype=float)
    else:
        bvals = np.zeros(0)
    return ScalarField(grid, np.broadcast_to(vals, (grid.n_nodes,)).copy(),
                       np.broadcast_to(bvals, (grid.n_hits,)).copy())


def _arm_values(u):
    """Per-node arm values in E, W, N, S order (neighbor value or boundary
    value at the exact hit)."""
    g = u.grid
    vals = np.where(g.nb_idx >= 0, u.values[np.maximum(g.nb_idx, 0)], 0.0)
    cut = g.nb_idx < 0
    if np.any(cut):
        vals = vals.copy()
        vals[cut] = u.boundary_values[g.nb_hit[cut]]
    return vals


def _sw_weights(grid):
    """Shortley-Weller second-difference weights (w_plus, w_minus, w_center)
    per node for the x and y axes, in units of 1/h^2."""
    th = grid.nb_theta
    h2 = grid.h**2
    out = []
    for p, m in ((0, 1), (2, 3)):  # (E, W), (N, S)
        tp, tm = th[:, p], th[:, m]
        wp = 2.0 / (tp * (tp + tm)) / h2
        wm = 2.0 / (tm * (tp + tm)) / h2
        wc = 2.0 / (tp * tm) / h2
        out.append((wp, wm, wc))
    return out


def hessian_components(u):
    """Vectorized (u_xx, u_yy, u_xy) at every active node."""
    g = u.grid
    arm = _arm_values(u)
    (wxp, wxm, wxc), (wyp, wym, wyc) = _sw_weights(g)
    uxx = wxp * arm[:, 0] + wxm * arm[:, 1] - wxc * u.values
    uyy = wyp * arm[:, 2] + wym * arm[:, 3] - wyc * u.values
    uxy = np.zeros(g.n_nodes)
    h2 = g.h**2
    cen = g.mixed_mode == 1
    if np.any(cen):
        idx = g.mixed_idx[cen]
        uxy[cen] = (u.values[idx[:, 0]] - u.values[idx[:, 1]]
                    - u.values[idx[:, 2]] + u.values[idx[:, 3]]) / (4.0 * h2)
    quad = (g.mixed_mode == 0) & (g.mixed_idx[:, 0] >= 0)
    if np.any(quad):
        idx = g.mixed_idx[quad]
        uxy[quad] = g.mixed_sign[quad] * (
            u.values[idx[:, 0]] - u.values[idx[:, 1]]
            - u.values[idx[:, 2]] + u.values[idx[:, 3]]
        ) / h2
    return uxx, uyy, uxy


def hessian_at(u, node):
    """Discrete Hessian at one node as a symmetric 2x2 matrix."""
    uxx, uyy, uxy = hessian_components(u)
    return np.array([[uxx[node], uxy[node]], [uxy[node], uyy[node]]])


def _eig2(uxx, uyy, uxy):
    mean = 0.5 * (uxx + uyy)
    d = np.hypot(0.5 * (uxx - uyy), uxy)
    return mean + d, mean - d


def phase_values(u):
    """arctan lambda_1 + arctan lambda_2 of the discrete Hessian, per node."""
    lam1, lam2 = _eig2(*hessian_components(u))
    return np.arctan(lam1) + np.arctan(lam2)


def _target_values(psi, n_nodes):
    if isinstance(psi, PhaseSpec):
        return psi.at_nodes(n_nodes)
    arr = np.atleast_1d(np.asarray(psi, dtype=float))
    if arr.size == 1:
        return np.full(n_nodes, float(arr[0]))
    return arr


def phase_residual(u, psi):
    """phase(D^2_h u) - psi at every node; psi may be a PhaseSpec, a constant,
    or a per-node vector."""
    return phase_values(u) - _target_values(psi, u.grid.n_nodes)


def _metric_entries(u):
    """Entries (g11, g22, g12) of (I + H^2)^{-1} for every nodal Hessian."""
    uxx, uyy, uxy = hessian_components(u)
    m11 = 1.0 + uxx**2 + uxy**2
    m22 = 1.0 + uyy**2 + uxy**2
    m12 = uxy * (uxx + uyy)
    det = m11 * m22 - m12**2
    return m22 / det, m11 / det, -m12 / det


@dataclass
class LinearSystem:
    """Sparse operator over the active nodes plus a right-hand side carrying
    the eliminated boundary contributions."""

    matrix: sp.csr_matrix
    rhs: np.ndarray


def assemble_linearization(u, boundary_values=None):
    """Linearized operator v -> sum_ab g^ab(D^2_h u) D_ab v as a sparse matrix
    over the active nodes.

    The metric weights always come from u's discrete Hessians.  Boundary
    unknowns are eliminated into rhs = -(boundary-coupled weights applied to
    boundary_values), defaulting to u.boundary_values: solving
    matrix @ v = rhs then reproduces the g-weighted extension of that data.
    Pass zeros to linearize around homogeneous boundary updates.
    """
    g = u.grid
    n = g.n_nodes
    bvals = u.boundary_values if boundary_values is None else np.asarray(boundary_values, float)
    g11, g22, g12 = _metric_entries(u)
    (wxp, wxm, wxc), (wyp, wym, wyc) = _sw_weights(g)

    rows, cols, data = [], [], []
    rhs = np.zeros(n)
    all_nodes = np.arange(n)

    def _axis(coeff, side_p, side_m, wp, wm, wc):
        for side, w in ((side_p, wp), (side_m, wm)):
            nbr = g.nb_idx[:, side]
            reg = nbr >= 0
            rows.append(all_nodes[reg])
            cols.append(nbr[reg])
            data.append((coeff * w)[reg])
            cutw = (coeff * w)[~reg]
            np.add.at(rhs, all_nodes[~reg], -cutw * bvals[g.nb_hit[~reg, side]])
        rows.append(all_nodes)
        cols.append(all_nodes)
        data.append(-coeff * wc)

    _axis(g11, 0, 1, wxp, wxm, wxc)
    _axis(g22, 2, 3, wyp, wym, wyc)

    h2 = g.h**2
    cen = np.nonzero(g.mixed_mode == 1)[0]
    if cen.size:
        c = 2.0 * g12[cen] / (4.0 * h2)
        for k, sgn in ((0, 1.0), (1, -1.0), (2, -1.0), (3, 1.0)):  # NE, NW, SE, SW
            rows.append(cen)
            cols.append(g.mixed_idx[cen, k])
            data.append(sgn * c)
    quad = np.nonzero((g.mixed_mode == 0) & (g.mixed_idx[:, 0] >= 0))[0]
    if quad.size:
        c = 2.0 * g12[quad] * g.mixed_sign[quad] / h2
        for k, sgn in ((0, 1.0), (1, -1.0), (2, -1.0), (3, 1.0)):  # diag, x, y, self
            rows.append(quad)
            cols.append(g.mixed_idx[quad, k])
            data.append(sgn * c)

    mat = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    mat.sum_duplicates()
    return LinearSystem(matrix=mat, rhs=rhs)


def solve_linear(system, rhs=None, tol=1e-10):
    """Solve the sparse system by direct factorization; the residual contract
    ||Ax - b||_inf <= tol * (1 + ||b||_inf) is checked, with one step of
    iterative refinement before giving up."""
    a = system.matrix.tocsc()
    b = system.rhs if rhs is None else np.asarray(rhs, dtype=float)
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:  # singular factorization
        raise LinearSolveFailure(f"sparse factorization failed: {exc}") from exc
    x = lu.solve(b)
    bound = tol * (1.0 + float(np.abs(b).max(initial=0.0)))
    res = float(np.abs(a @ x - b).max(initial=0.0))
    if res > bound:
        x = x + lu.solve(b - a @ x)
        res = float(np.abs(a @ x - b).max(initial=0.0))
        if res > bound:
            raise LinearSolveFailure(
                f"direct solve residual {res:.3e} above contract {bound:.3e}", residual=res
            )
    return x


def trace_extremes(u):
    """(max over interior nodes, max over near-boundary nodes) of the discrete
    Laplacian trace(D^2_h u) — the boundary-maximum diagnostic for converged
    supercritical solves."""
    uxx, uyy, _ = hessian_components(u)
    tr = uxx + uyy
    interior = u.grid.is_interior
    if not np.any(~interior) or not np.any(interior):
        return float(tr.max()), float(tr.max())
    return float(tr[interior].max()), float(tr[~interior].max())
