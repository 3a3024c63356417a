"""Monotone wide-stencil discretization of the phase operator.

The degenerate-elliptic surrogate used by the two-sided constant-phase solver:

    S(u)_i = arctan(min_d Delta_d u_i) + arctan(max_d Delta_d u_i)

over m directions at angles k*pi/m (axes included).  Each directional second
difference Delta_d uses two arms of reach ~ sqrt(h) (an integer number of
lattice steps, at least 2): axis arms hit lattice nodes exactly; oblique arms
are evaluated by bilinear interpolation (nonnegative weights, so monotonicity
is preserved); arms crossing the boundary are truncated at the exact
intersection and use the boundary value there, with the unequal-arm
second-difference weights.  Off-center weights are nonnegative and every
second difference annihilates constants, which makes the operator
nondecreasing in each neighbor value.

With reach rho ~ sqrt(h) the interpolation error O(h^2 / rho^2) and the
truncation error O(rho^2) are both O(h); the direction-resolution error is
O(1/m^2).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = ["StencilSet", "wide_stencil_phase", "wide_phase_values"]


def default_reach(h):
    """Arm reach in lattice steps: ~ sqrt(h) in physical length, >= 2."""
    return max(2, int(round(1.0 / math.sqrt(h))))


@dataclass
class StencilSet:
    """Precomputed directional second differences for one (grid, phi, m).

    Layout per node i and direction d:
        Delta_d(u)_i = sum_k w[i,d,k] * u[idx[i,d,k]] + const[i,d]
                       - centerw[i,d] * u_i
    with idx = -1 on unused slots and const carrying boundary-arm phi values.
    tau is the per-node monotone pseudo-time step 1/(2 max_d centerw).

    The boundary-arm geometry (exact hit points and their folded weights) is
    kept alongside const, so the same stencil geometry can be re-bound to
    different boundary data via bind() — comparison checks pit fields with
    distinct Dirichlet data against each other.
    """

    grid: object
    m: int
    reach_steps: int
    directions: np.ndarray
    idx: np.ndarray        # (N, m, 8) int32
    w: np.ndarray          # (N, m, 8)
    const: np.ndarray      # (N, m)
    centerw: np.ndarray    # (N, m)
    tau: np.ndarray        # (N,)
    barm_pts: np.ndarray   # (K, 2) boundary-arm hit coordinates
    barm_index: np.ndarray # (N, m, 2) index into barm_pts or -1
    barm_w: np.ndarray     # (N, m, 2) folded arm weight for boundary arms

    def bind(self, phi):
        """const matrix for different boundary data on the same geometry."""
        if self.barm_pts.shape[0] == 0:
            return np.zeros_like(self.const)
        vals = np.append(np.asarray(phi(self.barm_pts), dtype=float), 0.0)
        return (self.barm_w * vals[self.barm_index]).sum(-1)

    @classmethod
    def build(cls, grid, phi, m=16, reach_steps=None):
        if m < 4:
            raise ValueError("at least 4 stencil directions required")
        if reach_steps is None:
            reach_steps = default_reach(grid.h)
        n = grid.n_nodes
        h = grid.h
        rho = reach_steps * h
        dirs = np.empty((m, 2))
        for k in range(m):
            if k == 0:
                dirs[k] = (1.0, 0.0)
            elif 2 * k == m:
                dirs[k] = (0.0, 1.0)
            else:
                t = math.pi * k / m
                dirs[k] = (math.cos(t), math.sin(t))

        idx = np.full((n, m, 8), -1, dtype=np.int32)
        w = np.zeros((n, m, 8))
        centerw = np.zeros((n, m))
        barm_index = np.full((n, m, 2), -1, dtype=np.int64)
        barm_w = np.zeros((n, m, 2))
        barm_pts_chunks = []
        barm_count = 0

        px, py = grid.xy[:, 0], grid.xy[:, 1]
        cx, cy = grid.spec.center
        map_h, map_w = grid.lattice_map.shape

        for d in range(m):
            ex, ey = dirs[d]
            arm_len = np.empty((n, 2))
            arm_idx = np.full((n, 2, 4), -1, dtype=np.int64)
            arm_w = np.zeros((n, 2, 4))
            for side, sgn in enumerate((1.0, -1.0)):
                dxe, dye = sgn * ex, sgn * ey
                dist = grid.ray_exit(px, py, dxe, dye)
                use_boundary = dist <= rho
                qx = px + rho * dxe
                qy = py + rho * dye
                if d == 0 or 2 * d == m:
                    # lattice-exact axis arm
                    step = np.round([reach_steps * dxe, reach_steps * dye]).astype(int)
                    iy = grid.ij[:, 1] + step[1] - grid.j0
                    ix = grid.ij[:, 0] + step[0] - grid.i0
                    ok = (iy >= 0) & (iy < map_h) & (ix >= 0) & (ix < map_w)
                    tgt = np.full(n, -1, dtype=np.int64)
                    tgt[ok] = grid.lattice_map[iy[ok], ix[ok]]
                    good = ~use_boundary & (tgt >= 0)
                    arm_idx[good, side, 0] = tgt[good]
                    arm_w[good, side, 0] = 1.0
                    arm_len[good, side] = rho
                    use_boundary = use_boundary | (tgt < 0)
                else:
                    fx = (qx - cx) / h - grid.i0
                    fy = (qy - cy) / h - grid.j0
                    ix0 = np.floor(fx).astype(int)
                    iy0 = np.floor(fy).astype(int)
                    tx = fx - ix0
                    ty = fy - iy0
                    okbox = (ix0 >= 0) & (ix0 + 1 < map_w) & (iy0 >= 0) & (iy0 + 1 < map_h)
                    ix0c = np.clip(ix0, 0, map_w - 2)
                    iy0c = np.clip(iy0, 0, map_h - 2)
                    corners = np.stack(
                        [
                            grid.lattice_map[iy0c, ix0c],
                            grid.lattice_map[iy0c, ix0c + 1],
                            grid.lattice_map[iy0c + 1, ix0c],
                            grid.lattice_map[iy0c + 1, ix0c + 1],
                        ],
                        axis=1,
                    )
                    weights = np.stack(
                        [(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty], axis=1
                    )
                    interp_ok = ~use_boundary & okbox & np.all(corners >= 0, axis=1)
                    arm_idx[interp_ok, side, :] = corners[interp_ok]
                    arm_w[interp_ok, side, :] = weights[interp_ok]
                    arm_len[interp_ok, side] = rho
                    use_boundary = ~interp_ok
                if np.any(use_boundary):
                    hx = px[use_boundary] + dist[use_boundary] * dxe
                    hy = py[use_boundary] + dist[use_boundary] * dye
                    barm_pts_chunks.append(np.stack([hx, hy], axis=1))
                    k = int(use_boundary.sum())
                    barm_index[use_boundary, d, side] = barm_count + np.arange(k)
                    barm_count += k
                    arm_len[use_boundary, side] = dist[use_boundary]

            sp, sm = arm_len[:, 0], arm_len[:, 1]
            ap = 2.0 / (sp * (sp + sm))
            am = 2.0 / (sm * (sp + sm))
            idx[:, d, 0:4] = arm_idx[:, 0, :]
            idx[:, d, 4:8] = arm_idx[:, 1, :]
            w[:, d, 0:4] = ap[:, None] * arm_w[:, 0, :]
            w[:, d, 4:8] = am[:, None] * arm_w[:, 1, :]
            barm_w[:, d, 0] = np.where(barm_index[:, d, 0] >= 0, ap, 0.0)
            barm_w[:, d, 1] = np.where(barm_index[:, d, 1] >= 0, am, 0.0)
            centerw[:, d] = ap + am

        tau = 1.0 / (2.0 * centerw.max(axis=1))
        barm_pts = np.concatenate(barm_pts_chunks) if barm_pts_chunks else np.zeros((0, 2))
        self = cls(
            grid=grid,
            m=m,
            reach_steps=reach_steps,
            directions=dirs,
            idx=idx,
            w=w,
            const=np.zeros((n, m)),
            centerw=centerw,
            tau=tau,
            barm_pts=barm_pts,
            barm_index=barm_index,
            barm_w=barm_w,
        )
        self.const = self.bind(phi)
        return self

    @property
    def tau_rule(self):
        return "tau_i = 1 / (2 * max_d centerweight(i, d)) (max arctan slope 1)"

    def delta_minmax(self, values, const=None):
        """(min_d Delta_d, max_d Delta_d) at every node."""
        return kernels.delta_minmax(
            np.ascontiguousarray(values, dtype=float),
            self.idx,
            self.w,
            self.const if const is None else const,
            self.centerw,
        )

    def delta_all(self, values, node, const=None):
        """All directional second differences at one node (diagnostics)."""
        c = self.const if const is None else const
        up = np.append(values, 0.0)
        return (
            (self.w[node] * up[self.idx[node]]).sum(-1)
            + c[node]
            - self.centerw[node] * values[node]
        )


def wide_phase_values(u, stencils, boundary=None):
    """arctan(min_d Delta_d u) + arctan(max_d Delta_d u) at every node.

    boundary optionally re-binds the cut arms to different Dirichlet data
    (a BoundaryData or any callable on point arrays)."""
    const = None if boundary is None else stencils.bind(boundary)
    dmin, dmax = stencils.delta_minmax(u.values, const=const)
    return np.arctan(dmin) + np.arctan(dmax)


def wide_stencil_phase(u, stencils, node, boundary=None):
    """Wide-stencil phase at a single node."""
    const = None if boundary is None else stencils.bind(boundary)
    deltas = stencils.delta_all(u.values, node, const=const)
    return float(np.arctan(deltas.min()) + np.arctan(deltas.max()))
