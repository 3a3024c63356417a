"""Uniformly convex domains, Cartesian grids with exact boundary intercepts,
boundary data, arc-length mollification, and quadratic barrier construction.

Domains are disks and ellipses given implicitly by
    q(x) = ((x - cx)/a)^2 + ((y - cy)/b)^2 - 1,
negative inside, zero on the boundary.  Grids are uniform lattices anchored at
the domain center; nodes strictly inside are unknowns, and every lattice arm
leaving the domain stores the exact fractional intercept with the boundary
(Shortley-Weller data).  Barriers are the quadratics with constant Hessian
tan(psi_bound / n) * I, tilted by a linear term so they touch the boundary data
at an anchor point and bracket it everywhere else.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BarrierFailure, GridTooCoarse, PreconditionViolated
from .phase import PhaseSpec

__all__ = [
    "DomainSpec",
    "DomainGrid",
    "build_grid",
    "BoundaryData",
    "mollify_boundary",
    "truncated_phase_bounds",
    "BarrierPair",
    "barrier_at",
    "anchor_parameters",
    "barrier_envelopes",
    "sandwich_margin",
]

# lattice directions in E, W, N, S order
_DIRS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=int)


@dataclass(frozen=True)
class DomainSpec:
    """Disk or axis-aligned ellipse; semi_axes = (a, b) with a >= b > 0."""

    kind: str
    center: tuple
    semi_axes: tuple

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        a, b = self.semi_axes
        if not (b > 0.0 and a >= b):
            raise ValueError("semi-axes must satisfy a >= b > 0")
        if self.kind == "disk" and a != b:
            raise ValueError("a disk needs equal semi-axes")
        if len(self.center) != 2:
            raise ValueError("center must have two coordinates")

    # -- implicit description ------------------------------------------------

    def implicit(self, x, y):
        """q(x): negative inside, zero on the boundary."""
        cx, cy = self.center
        a, b = self.semi_axes
        return ((np.asarray(x) - cx) / a) ** 2 + ((np.asarray(y) - cy) / b) ** 2 - 1.0

    def ray_exit(self, px, py, dx, dy):
        """Smallest s > 0 with q(p + s d) = 0 for unit direction d.

        Callers pass points strictly inside, so the quadratic has one positive
        root; returned per point (vectorized)."""
        cx, cy = self.center
        a, b = self.semi_axes
        xa = (np.asarray(px) - cx) / a
        yb = (np.asarray(py) - cy) / b
        qa = (dx / a) ** 2 + (dy / b) ** 2
        qb = 2.0 * (xa * dx / a + yb * dy / b)
        qc = xa**2 + yb**2 - 1.0
        disc = np.sqrt(qb**2 - 4.0 * qa * qc)
        return (-qb + disc) / (2.0 * qa)

    # -- boundary parametrization -------------------------------------------

    def boundary_point(self, t):
        cx, cy = self.center
        a, b = self.semi_axes
        t = np.asarray(t, dtype=float)
        return np.stack([cx + a * np.cos(t), cy + b * np.sin(t)], axis=-1)

    def parameter_of(self, pts):
        """Boundary parameter t of points on (or near) the boundary."""
        cx, cy = self.center
        a, b = self.semi_axes
        pts = np.asarray(pts, dtype=float)
        return np.arctan2((pts[..., 1] - cy) / b, (pts[..., 0] - cx) / a)

    def outward_normal(self, t):
        a, b = self.semi_axes
        t = np.asarray(t, dtype=float)
        n = np.stack([b * np.cos(t), a * np.sin(t)], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def tangent(self, t):
        """Unit tangent in the direction of increasing t."""
        a, b = self.semi_axes
        t = np.asarray(t, dtype=float)
        v = np.stack([-a * np.sin(t), b * np.cos(t)], axis=-1)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def speed(self, t):
        """|d(boundary_point)/dt|, the arc-length rate."""
        a, b = self.semi_axes
        t = np.asarray(t, dtype=float)
        return np.hypot(a * np.sin(t), b * np.cos(t))

    def curvature(self, t):
        a, b = self.semi_axes
        return a * b / self.speed(t) ** 3

    @property
    def min_curvature(self):
        a, b = self.semi_axes
        return b / a**2

    # -- serialization --------------------------------------------------------

    def to_json(self):
        return {"kind": self.kind, "center": list(self.center), "semiAxes": list(self.semi_axes)}

    @classmethod
    def from_json(cls, d):
        return cls(kind=d["kind"], center=tuple(d["center"]), semi_axes=tuple(d["semiAxes"]))


@dataclass
class DomainGrid:
    """Uniform lattice over a domain, with node classification and exact
    boundary intercepts.

    Active nodes (strictly inside) are ordered row-major by lattice index
    (y rows ascending, x within a row ascending), interior and near-boundary
    interleaved.  For every active node, nb_idx/nb_theta/nb_hit describe its
    four axis arms in E, W, N, S order: a regular arm stores the neighbor's
    active index with theta = 1; a cut arm stores -1, the fractional distance
    theta in (0, 1], and the index of its boundary hit.  An optional interior
    exclusion disk ("hole") supports annulus-masked diagnostics.
    """

    spec: DomainSpec
    h: float
    xy: np.ndarray            # (N, 2) node coordinates
    ij: np.ndarray            # (N, 2) lattice indices (ix, iy)
    is_interior: np.ndarray   # (N,) all four axis neighbors strictly inside
    nb_idx: np.ndarray        # (N, 4) active index of neighbor or -1
    nb_theta: np.ndarray      # (N, 4) fractional arm length in (0, 1]
    nb_hit: np.ndarray        # (N, 4) hit index or -1
    hits_xy: np.ndarray       # (H, 2) boundary intercepts
    hit_node: np.ndarray      # (H,) owning active node
    hit_dir: np.ndarray       # (H,) arm direction 0..3
    lattice_map: np.ndarray   # map[iy - j0, ix - i0] -> active index or -1
    i0: int
    j0: int
    mixed_mode: np.ndarray    # (N,) 1 = centered cross stencil, 0 = one-sided quadrant
    mixed_idx: np.ndarray     # (N, 4) centered: NE, NW, SE, SW; quadrant: diag, x, y, self
    mixed_sign: np.ndarray    # (N,) quadrant orientation sx*sy (1.0 for centered)
    hole: tuple | None = None
    _bdist: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_nodes(self):
        return self.xy.shape[0]

    @property
    def n_hits(self):
        return self.hits_xy.shape[0]

    def active_index(self, ix, iy):
        return int(self.lattice_map[iy - self.j0, ix - self.i0])

    def ray_exit(self, px, py, dx, dy):
        """Distance along a unit ray to the first domain boundary (outer
        boundary or the exclusion circle, when present)."""
        s = self.spec.ray_exit(px, py, dx, dy)
        if self.hole is not None:
            s = np.minimum(s, _hole_entry(px, py, dx, dy, self.hole))
        return s

    def boundary_distances(self, samples=2048):
        """Distance of each node to the outer boundary (dense sampling;
        resolution error is O((perimeter/samples)^2))."""
        if self._bdist is None or self._bdist.shape[0] != self.n_nodes:
            t = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
            bpts = self.spec.boundary_point(t)
            d = np.empty(self.n_nodes)
            block = 512
            for s in range(0, self.n_nodes, block):
                diff = self.xy[s : s + block, None, :] - bpts[None, :, :]
                d[s : s + block] = np.sqrt((diff**2).sum(-1)).min(1)
            self._bdist = d
        return self._bdist


def _hole_entry(px, py, dx, dy, hole):
    """Smallest positive ray parameter hitting the exclusion circle, or inf."""
    hx, hy, r = hole
    rx, ry = px - hx, py - hy
    qb = 2.0 * (rx * dx + ry * dy)
    qc = rx**2 + ry**2 - r**2
    disc = qb**2 - 4.0 * qc
    s = np.full_like(np.asarray(px, dtype=float), np.inf)
    ok = disc >= 0.0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    s1 = (-qb - sq) / 2.0
    s2 = (-qb + sq) / 2.0
    cand = np.where(s1 > 1e-14, s1, np.where(s2 > 1e-14, s2, np.inf))
    s[ok] = cand[ok]
    return s


def build_grid(spec, h, hole=None):
    """Classify the lattice of spacing h over the domain and compute all
    boundary intercepts.

    hole: optional (cx, cy, r) interior exclusion disk (annulus-masked grids
    for diagnostics); nodes inside it are exterior and arms crossing it stop
    at the circle.
    """
    a, b = spec.semi_axes
    if h > b / 2.0:
        raise GridTooCoarse(f"h={h} too coarse for semi-minor axis {b} (need h <= b/2)")
    cx, cy = spec.center
    ni = int(math.floor(a / h)) + 2
    nj = int(math.floor(b / h)) + 2
    ii = np.arange(-ni, ni + 1)
    jj = np.arange(-nj, nj + 1)
    X = cx + h * ii[None, :]
    Y = cy + h * jj[:, None]
    q = spec.implicit(X, Y)
    inside = q < 0.0
    if hole is not None:
        hx, hy, r = hole
        inside &= ((X - hx) ** 2 + (Y - hy) ** 2) > r**2

    jj_all, ii_all = np.nonzero(inside)  # row-major: y rows outer
    n = jj_all.size
    lattice_map = np.full(inside.shape, -1, dtype=np.int64)
    lattice_map[jj_all, ii_all] = np.arange(n)

    xy = np.stack([cx + h * ii[ii_all], cy + h * jj[jj_all]], axis=1)
    ij = np.stack([ii[ii_all], jj[jj_all]], axis=1)

    nb_idx = np.full((n, 4), -1, dtype=np.int64)
    nb_theta = np.ones((n, 4))
    nb_hit = np.full((n, 4), -1, dtype=np.int64)
    nb_inside = np.empty((n, 4), dtype=bool)
    hit_chunks, hit_nodes, hit_dirs, hit_thetas = [], [], [], []
    for d, (di, dj) in enumerate(_DIRS):
        jn, in_ = jj_all + dj, ii_all + di
        ok = (jn >= 0) & (jn < inside.shape[0]) & (in_ >= 0) & (in_ < inside.shape[1])
        nbr_inside = np.zeros(n, dtype=bool)
        nbr_inside[ok] = inside[jn[ok], in_[ok]]
        nb_inside[:, d] = nbr_inside
        nb_idx[nbr_inside, d] = lattice_map[jn[nbr_inside], in_[nbr_inside]]
        cut = ~nbr_inside
        if np.any(cut):
            px, py = xy[cut, 0], xy[cut, 1]
            s = spec.ray_exit(px, py, float(di), float(dj))
            if hole is not None:
                s = np.minimum(s, _hole_entry(px, py, float(di), float(dj), hole))
            theta = s / h
            nb_theta[cut, d] = theta
            hit_chunks.append(np.stack([px + s * di, py + s * dj], axis=1))
            hit_nodes.append(np.nonzero(cut)[0])
            hit_dirs.append(np.full(int(cut.sum()), d, dtype=np.int64))
            hit_thetas.append(theta)

    if hit_chunks:
        hits_xy = np.concatenate(hit_chunks)
        hit_node = np.concatenate(hit_nodes)
        hit_dir = np.concatenate(hit_dirs)
        order = np.lexsort((hit_dir, hit_node))  # canonical: node-major, then E,W,N,S
        hits_xy, hit_node, hit_dir = hits_xy[order], hit_node[order], hit_dir[order]
    else:
        hits_xy = np.zeros((0, 2))
        hit_node = np.zeros(0, dtype=np.int64)
        hit_dir = np.zeros(0, dtype=np.int64)
    nb_hit[hit_node, hit_dir] = np.arange(hit_node.size)

    is_interior = nb_inside.all(axis=1)

    # mixed-derivative pattern: centered 4-diagonal cross where it fits,
    # otherwise the one-sided quadrant opening toward the domain center
    mixed_mode = np.zeros(n, dtype=np.int8)
    mixed_idx = np.full((n, 4), -1, dtype=np.int64)
    mixed_sign = np.ones(n)

    def _at(di, dj):
        jn, in_ = jj_all + dj, ii_all + di
        out = np.full(n, -1, dtype=np.int64)
        ok = (jn >= 0) & (jn < inside.shape[0]) & (in_ >= 0) & (in_ < inside.shape[1])
        out[ok] = lattice_map[jn[ok], in_[ok]]
        return out

    ne, nw, se, sw = _at(1, 1), _at(-1, 1), _at(1, -1), _at(-1, -1)
    centered = (ne >= 0) & (nw >= 0) & (se >= 0) & (sw >= 0)
    mixed_mode[centered] = 1
    mixed_idx[centered] = np.stack([ne, nw, se, sw], axis=1)[centered]

    rest = np.nonzero(~centered)[0]
    if rest.size:
        sx0 = np.where(xy[rest, 0] <= cx, 1, -1)
        sy0 = np.where(xy[rest, 1] <= cy, 1, -1)
        resolved = np.zeros(rest.size, dtype=bool)
        for flipx, flipy in ((1, 1), (-1, 1), (1, -1), (-1, -1)):
            if resolved.all():
                break
            sx, sy = sx0 * flipx, sy0 * flipy
            for k, node in enumerate(rest):
                if resolved[k]:
                    continue
                i, j = ij[node]
                d_idx = lattice_map[j - jj[0] + sy[k], i - ii[0] + sx[k]]
                x_idx = lattice_map[j - jj[0], i - ii[0] + sx[k]]
                y_idx = lattice_map[j - jj[0] + sy[k], i - ii[0]]
                if d_idx >= 0 and x_idx >= 0 and y_idx >= 0:
                    mixed_idx[node] = (d_idx, x_idx, y_idx, node)
                    mixed_sign[node] = float(sx[k] * sy[k])
                    resolved[k] = True
        # unresolved nodes keep mode 0 with idx -1 (mixed term dropped); does
        # not occur for h <= b/2 on these domains

    return DomainGrid(
        spec=spec,
        h=h,
        xy=xy,
        ij=ij,
        is_interior=is_interior,
        nb_idx=nb_idx,
        nb_theta=nb_theta,
        nb_hit=nb_hit,
        hits_xy=hits_xy,
        hit_node=hit_node,
        hit_dir=hit_dir,
        lattice_map=lattice_map,
        i0=int(ii[0]),
        j0=int(jj[0]),
        mixed_mode=mixed_mode,
        mixed_idx=mixed_idx,
        mixed_sign=mixed_sign,
        hole=hole,
    )


class BoundaryData:
    """Boundary values phi as an evaluator on boundary points, tagged with the
    smoothness class the caller vouches for ({C0, C2, C4})."""

    def __init__(self, domain, fn, smoothness="C2", mollify_radii=None):
        if smoothness not in ("C0", "C2", "C4"):
            raise ValueError(f"unknown smoothness tag {smoothness!r}")
        self.domain = domain
        self.fn = fn
        self.smoothness = smoothness
        self.mollify_radii = tuple(mollify_radii) if mollify_radii else None

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        vals = np.asarray(self.fn(pts[..., 0], pts[..., 1]), dtype=float)
        return np.broadcast_to(vals, pts.shape[:-1]).astype(float)

    def at_parameters(self, t):
        return self(self.domain.boundary_point(t))

    def uniform_distance_to(self, other, samples=4096):
        """sup |phi - other| over a dense boundary sampling."""
        t = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
        return float(np.abs(self.at_parameters(t) - other.at_parameters(t)).max())


def _arclength_table(domain, size):
    t = np.linspace(0.0, 2 * math.pi, size, endpoint=False)
    speed = domain.speed(t)
    dt = 2 * math.pi / size
    # midpoint cumulative arc length: s[k] = integral of speed over [0, t_k]
    s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[:-1] + speed[1:]) * dt)])
    total = s[-1] + 0.5 * (speed[-1] + speed[0]) * dt
    return t, s, total


def mollify_boundary(phi, radius, table_size=4096):
    """Arc-length convolution of boundary data against the C^2 bump
    (1 - (s/r)^2)^3, normalized on the boundary curve.

    The convolution is evaluated once on a dense parameter table (quadrature
    error O((L/table_size)^2)) and queried by periodic interpolation, so the
    returned evaluator is cheap; constants are reproduced exactly by the
    discrete normalization.
    """
    if radius <= 0.0:
        raise PreconditionViolated("mollification radius must be positive")
    domain = phi.domain
    t_tab, s_tab, total = _arclength_table(domain, table_size)
    f_tab = phi.at_parameters(t_tab)
    w_ds = domain.speed(t_tab) * (2 * math.pi / table_size)

    smoothed = np.empty(table_size)
    for lo in range(0, table_size, 256):
        ds = np.abs(s_tab[lo : lo + 256, None] - s_tab[None, :])
        ds = np.minimum(ds, total - ds)
        u = ds / radius
        ker = np.where(u < 1.0, (1.0 - u**2) ** 3, 0.0) * w_ds[None, :]
        smoothed[lo : lo + 256] = (ker * f_tab[None, :]).sum(-1) / ker.sum(-1)
    t_closed = np.concatenate([t_tab, [2 * math.pi]])
    f_closed = np.concatenate([smoothed, smoothed[:1]])

    def smooth(x, y):
        pts = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), axis=-1)
        t_q = np.mod(domain.parameter_of(pts), 2 * math.pi)
        return np.interp(t_q, t_closed, f_closed)

    return BoundaryData(domain, smooth, smoothness="C2", mollify_radii=phi.mollify_radii)


def truncated_phase_bounds(spec: PhaseSpec, mode="supercritical"):
    """Constant phase bounds (psi_lower, psi_upper) bracketing the samples.

    supercritical mode: ((n-2)pi/2 + delta, n*pi/2 - eps') — requires a
    supercritical classification (mirrored ranges are reflected).
    general mode: (-n*pi/2 + eps', n*pi/2 - eps').
    """
    n = spec.dim
    top = n * math.pi / 2.0
    if mode == "general":
        return (-top + spec.eps_prime, top - spec.eps_prime)
    if mode != "supercritical":
        raise ValueError(f"unknown mode {mode!r}")
    if spec.classification != "supercritical":
        raise PreconditionViolated("supercritical bounds need a supercritical phase")
    lo = (n - 2) * math.pi / 2.0 + spec.delta
    hi = top - spec.eps_prime
    if spec.mirrored:
        return (-hi, -lo)
    return (lo, hi)


@dataclass(frozen=True)
class BarrierPair:
    """Lower/upper quadratic barriers anchored at a boundary point.

    lower has Hessian tan(psi_upper/n) I (a subsolution), upper has Hessian
    tan(psi_lower/n) I (a supersolution); both equal phi at the anchor and
    bracket it on the boundary:  lower <= phi <= upper.
    """

    anchor: np.ndarray
    inner_normal: np.ndarray
    tangent: np.ndarray
    phi0: float
    slope: float          # tangential derivative of phi at the anchor
    constant: float       # inflated barrier constant C
    constant_raw: float   # max boundary quotient before inflation
    quad_lower: float     # tan(psi_upper / n)
    quad_upper: float     # tan(psi_lower / n)
    dim: int = 2

    def _parts(self, pts):
        pts = np.asarray(pts, dtype=float)
        rel = pts - self.anchor
        xn = rel @ self.inner_normal
        xt = rel @ self.tangent
        r2 = (rel**2).sum(-1)
        return xn, xt, r2

    def lower(self, pts):
        xn, xt, r2 = self._parts(pts)
        return self.phi0 + self.slope * xt - self.constant * xn + 0.5 * r2 * self.quad_lower

    def upper(self, pts):
        xn, xt, r2 = self._parts(pts)
        return self.phi0 + self.slope * xt + self.constant * xn + 0.5 * r2 * self.quad_upper

    def hessian_lower(self):
        return self.quad_lower * np.eye(self.dim)

    def hessian_upper(self):
        return self.quad_upper * np.eye(self.dim)


def anchor_parameters(count=64):
    return np.linspace(0.0, 2 * math.pi, count, endpoint=False)


def barrier_at(anchor_t, grid, phi, bounds, samples=512, inflate=1.1):
    """Build the barrier pair anchored at boundary parameter anchor_t.

    bounds = (psi_lower, psi_upper) from truncated_phase_bounds.  The constant
    C is the smallest value making both one-sided bounds hold on a dense
    boundary sampling (quotient maxima over samples with normal component
    >= h^2), inflated by 10%.
    """
    spec = grid.spec
    psi_lo, psi_hi = bounds
    n = 2
    anchor = spec.boundary_point(float(anchor_t))
    nu = -spec.outward_normal(float(anchor_t))
    tau = spec.tangent(float(anchor_t))
    phi0 = float(phi(anchor[None, :])[0])

    # tangential slope d(phi)/ds at the anchor (central difference in s)
    dt = 1e-5
    f_p = float(phi.at_parameters(anchor_t + dt))
    f_m = float(phi.at_parameters(anchor_t - dt))
    slope = (f_p - f_m) / (2 * dt * float(spec.speed(float(anchor_t))))

    t_s = np.linspace(0.0, 2 * math.pi, max(samples, 512), endpoint=False)
    pts = spec.boundary_point(t_s)
    rel = pts - anchor
    xn = rel @ nu
    xt = rel @ tau
    r2 = (rel**2).sum(-1)
    keep = xn >= grid.h**2
    if not np.any(keep):
        raise BarrierFailure("no boundary samples outside the anchor exclusion zone")
    centered = phi(pts) - phi0 - slope * xt
    t_lo, t_hi = math.tan(psi_lo / n), math.tan(psi_hi / n)
    q_upper = (centered[keep] - 0.5 * r2[keep] * t_lo) / xn[keep]
    q_lower = (0.5 * r2[keep] * t_hi - centered[keep]) / xn[keep]
    c_raw = max(0.0, float(q_upper.max()), float(q_lower.max()))
    if not math.isfinite(c_raw) or c_raw > 1e12:
        raise BarrierFailure(f"barrier constant search diverged (C ~ {c_raw:.3e})")
    return BarrierPair(
        anchor=anchor,
        inner_normal=nu,
        tangent=tau,
        phi0=phi0,
        slope=slope,
        constant=inflate * c_raw,
        constant_raw=c_raw,
        quad_lower=t_hi,
        quad_upper=t_lo,
    )


def barrier_envelopes(grid, phi, bounds, anchors=None, c0_radius=None):
    """Barrier pairs over an anchor set plus their pointwise envelopes at the
    grid nodes: (pairs, lower_envelope, upper_envelope).

    Merely continuous data (smoothness C0) is mollified first and the
    envelopes are shifted by the uniform mollification distance, which keeps
    the lower envelope below phi and a subsolution (constant shifts preserve
    Hessians), and symmetrically for the upper.
    """
    shift = 0.0
    phi_b = phi
    if phi.smoothness == "C0":
        radius = c0_radius if c0_radius is not None else max(4.0 * grid.h, 0.05)
        phi_b = mollify_boundary(phi, radius)
        shift = phi_b.uniform_distance_to(phi)
    if anchors is None:
        anchors = anchor_parameters()
    pairs = [barrier_at(t, grid, phi_b, bounds) for t in np.atleast_1d(anchors)]
    lower = np.max([p.lower(grid.xy) for p in pairs], axis=0) - shift
    upper = np.min([p.upper(grid.xy) for p in pairs], axis=0) + shift
    return pairs, lower, upper


def sandwich_margin(grid, values, phi, bounds, anchors=None):
    """min over nodes and anchors of min(upper - u, u - lower): the two-sided
    barrier bracketing margin of a solved field (negative = violation)."""
    _, lower, upper = barrier_envelopes(grid, phi, bounds, anchors)
    return float(np.minimum(upper - values, values - lower).min())
