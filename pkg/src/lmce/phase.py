"""Spectral and polynomial forms of the arctangent Hessian operator.

The operator of interest maps a symmetric matrix m to sum_i arctan(lambda_i(m)),
the "phase" of m.  This module holds the exact small-matrix machinery: eigenvalue
solves, elementary symmetric polynomials and the equivalent polynomial form of the
constant-phase equation, the operator derivative (I + m^2)^{-1}, phase-range
classification, the supercritical spectral inequalities, and the eigenvalue drift
of bordered matrices with a large corner entry.

Everything here is a pure function of its inputs; no shared mutable state.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMatrix, InvalidOrder, PhaseOutOfRange, PreconditionViolated

__all__ = [
    "eig_sym",
    "phase",
    "sigma_k",
    "sigma_all",
    "polynomial_residual",
    "metric_inverse",
    "PhaseSpec",
    "classify_phase",
    "SpectrumChecks",
    "supercritical_spectrum_check",
    "BorderedMatrix",
    "bordered_eig_drift",
]

_JACOBI_OFF_TOL = 1e-14


def _as_sym(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 2:
        raise InvalidMatrix("matrices of dimension >= 2 expected")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix("matrix entries must be finite")
    if not np.array_equal(m, m.T):
        raise InvalidMatrix("matrix is not exactly symmetric")
    return m


def _jacobi_eigvals(a):
    """Cyclic Jacobi rotations until the off-diagonal norm falls below
    1e-14 * max(1, ||a||_F).  Deterministic, adequate for dim <= 4."""
    a = a.copy()
    n = a.shape[0]
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(60):
        off = math.sqrt(2.0 * sum(a[p, q] ** 2 for p in range(n) for q in range(p + 1, n)))
        if off <= _JACOBI_OFF_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-30 * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                rp, rq = a[p].copy(), a[q].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))[::-1]


def eig_sym(m):
    """All eigenvalues of a symmetric matrix, sorted descending.

    Closed-form roots for dim 2, cyclic Jacobi iteration otherwise
    (residual ||Mv - lambda v|| below 1e-12 per pair at desk scales).
    """
    m = _as_sym(m)
    n = m.shape[0]
    if n == 2:
        mean = 0.5 * (m[0, 0] + m[1, 1])
        d = math.hypot(0.5 * (m[0, 0] - m[1, 1]), m[0, 1])
        return np.array([mean + d, mean - d])
    return _jacobi_eigvals(m)


def phase(m):
    """sum_i arctan(lambda_i(m)); always inside (-n*pi/2, n*pi/2)."""
    return float(np.arctan(eig_sym(m)).sum())


def sigma_all(values):
    """All elementary symmetric polynomials e_0..e_n of the given values."""
    values = np.asarray(values, dtype=float)
    e = np.zeros(values.size + 1)
    e[0] = 1.0
    for x in values:
        e[1:] = e[1:] + x * e[:-1]
    return e


def sigma_k(spectrum, k):
    """Elementary symmetric polynomial sigma_k of a spectrum (sigma_0 = 1)."""
    spectrum = np.asarray(spectrum, dtype=float)
    if not isinstance(k, (int, np.integer)) or k < 0 or k > spectrum.size:
        raise InvalidOrder(f"order k={k} outside 0..{spectrum.size}")
    return float(sigma_all(spectrum)[k])


def polynomial_residual(m, c):
    """Polynomial form of the constant-phase equation.

    Returns cos(c) * sum_{1<=2k+1<=n} (-1)^k sigma_{2k+1}
          - sin(c) * sum_{0<=2k<=n} (-1)^k sigma_{2k},
    which equals sin(phase(m) - c) * prod_i sqrt(1 + lambda_i^2).
    """
    e = sigma_all(eig_sym(m))
    n = e.size - 1
    odd = sum((-1) ** k * e[2 * k + 1] for k in range(0, (n - 1) // 2 + 1))
    even = sum((-1) ** k * e[2 * k] for k in range(0, n // 2 + 1))
    return float(math.cos(c) * odd - math.sin(c) * even)


def metric_inverse(m):
    """(I + m^2)^{-1}: the induced-metric inverse and the derivative of the
    phase operator with respect to the matrix (Frobenius pairing).

    Computed by direct inversion, not spectral reassembly; I + m^2 is always
    symmetric positive definite.
    """
    m = _as_sym(m)
    g = np.eye(m.shape[0]) + m @ m
    inv = np.linalg.inv(g)
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True)
class PhaseSpec:
    """Phase samples with their computed range classification.

    delta is the supercritical margin min|psi| - (n-2)pi/2 (0 unless
    supercritical); eps_prime the two-sided margin n*pi/2 - max|psi|;
    mirrored marks an all-negative sample range classified by |psi|.
    """

    dim: int
    values: np.ndarray
    delta: float
    eps_prime: float
    classification: str
    mirrored: bool = False

    @property
    def lo(self):
        return float(self.values.min())

    @property
    def hi(self):
        return float(self.values.max())

    @property
    def is_constant(self):
        return self.values.size == 1 or float(np.ptp(self.values)) == 0.0

    @property
    def constant_value(self):
        if not self.is_constant:
            raise PreconditionViolated("phase is not constant")
        return float(self.values.flat[0])

    def at_nodes(self, n_nodes):
        """Per-node sample vector (broadcasts a constant)."""
        if self.values.size == 1:
            return np.full(n_nodes, float(self.values.flat[0]))
        if self.values.size != n_nodes:
            raise PreconditionViolated(
                f"phase sampled at {self.values.size} points, grid has {n_nodes}"
            )
        return self.values


def classify_phase(samples, dim, tolerance=1e-12):
    """Classify a phase sample set as subcritical/critical/supercritical.

    All samples must lie strictly inside (-n*pi/2, n*pi/2).  Classification
    boundaries are compared with absolute tolerance `tolerance`; an
    all-negative range is mirrored and classified by |psi|.
    """
    values = np.atleast_1d(np.asarray(samples, dtype=float))
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise PhaseOutOfRange("phase samples must be a nonempty finite set")
    n = int(dim)
    top = n * math.pi / 2.0
    lo, hi = float(values.min()), float(values.max())
    if lo <= -top or hi >= top:
        raise PhaseOutOfRange(
            f"phase samples must lie strictly inside (-{top:.6f}, {top:.6f}); "
            f"got range [{lo:.6f}, {hi:.6f}]"
        )
    critical = (n - 2) * math.pi / 2.0
    eps_prime = top - max(abs(lo), abs(hi))
    mirrored = False
    if lo >= critical - tolerance:
        margin = lo - critical
    elif hi <= -(critical - tolerance):
        mirrored = True
        margin = -hi - critical
    else:
        margin = -math.inf
    if margin > tolerance:
        cls, delta = "supercritical", margin
    elif margin >= -tolerance:
        cls, delta = "critical", 0.0
    else:
        cls, delta = "subcritical", 0.0
    return PhaseSpec(
        dim=n,
        values=values,
        delta=delta,
        eps_prime=eps_prime,
        classification=cls,
        mirrored=mirrored,
    )


@dataclass(frozen=True)
class SpectrumChecks:
    """Margins for the four spectral inequalities satisfied by ordered
    eigenvalues of solutions with at-least-critical phase:

    1. eig_order_margin    = min(lambda_{n-1}, lambda_{n-1} - |lambda_n|)
    2. trace_balance_margin = lambda_1 + (n-1) lambda_n
    3. sigma_margin        = min_{1<=k<=n-1} sigma_k
    4. lower_bound_margin  = lambda_n + cot(delta), only when delta > 0

    A check passes when its margin is >= 0.
    """

    eig_order_margin: float
    trace_balance_margin: float
    sigma_margin: float
    lower_bound_margin: float | None

    @property
    def margins(self):
        return {
            "eigOrder": self.eig_order_margin,
            "traceBalance": self.trace_balance_margin,
            "sigmaNonneg": self.sigma_margin,
            "hessianLower": self.lower_bound_margin,
        }

    @property
    def passed(self):
        return {
            k: (v is None or v >= 0.0) for k, v in self.margins.items()
        }

    @property
    def all_ok(self):
        return all(self.passed.values())

    def min_margins(self, other):
        """Componentwise minimum, for aggregating margins over grid nodes."""
        lb = None
        pair = [m for m in (self.lower_bound_margin, other.lower_bound_margin) if m is not None]
        if pair:
            lb = min(pair)
        return SpectrumChecks(
            min(self.eig_order_margin, other.eig_order_margin),
            min(self.trace_balance_margin, other.trace_balance_margin),
            min(self.sigma_margin, other.sigma_margin),
            lb,
        )


def supercritical_spectrum_check(spectrum, psi_min, delta=0.0):
    """Check the four eigenvalue inequalities of at-least-critical spectra.

    psi_min must be >= (n-2)pi/2 (checks 1-3 assume it); check 4
    (lambda_n >= -cot(delta)) runs only when delta > 0.
    """
    values = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    n = values.size
    if n < 2:
        raise PreconditionViolated("spectrum of length >= 2 expected")
    critical = (n - 2) * math.pi / 2.0
    if psi_min < critical - 1e-12:
        raise PreconditionViolated(
            f"psi_min={psi_min:.6f} below the critical value {critical:.6f}"
        )
    lam_n1, lam_n = values[n - 2], values[n - 1]
    m1 = min(lam_n1, lam_n1 - abs(lam_n))
    m2 = values[0] + (n - 1) * lam_n
    e = sigma_all(values)
    m3 = float(np.min(e[1:n]))
    m4 = None
    if delta > 0.0:
        m4 = lam_n + 1.0 / math.tan(delta)
    return SpectrumChecks(float(m1), float(m2), m3, m4)


@dataclass(frozen=True)
class BorderedMatrix:
    """Symmetric matrix with a fixed diagonal leading block, a bounded border
    column/row, and a large corner entry."""

    base: np.ndarray
    border: np.ndarray
    corner: float

    def assemble(self):
        base = np.asarray(self.base, dtype=float)
        border = np.asarray(self.border, dtype=float)
        if base.shape != border.shape or base.ndim != 1:
            raise InvalidMatrix("base and border must be 1-d arrays of equal length")
        n = base.size + 1
        m = np.zeros((n, n))
        m[np.arange(n - 1), np.arange(n - 1)] = base
        m[:-1, -1] = border
        m[-1, :-1] = border
        m[-1, -1] = self.corner
        return m


def bordered_eig_drift(b):
    """Eigenvalue drift of a bordered matrix versus its diagonal block.

    Removes the eigenvalue nearest the corner entry, matches the rest to the
    descending-sorted base, and returns (|lambda_i - base_i| for i < n,
    |lambda_corner - corner|).  As the corner grows, the drifts vanish while
    the corner gap stays bounded.
    """
    m = b.assemble()
    lam = eig_sym(m)
    k = int(np.argmin(np.abs(lam - b.corner)))
    rest = np.delete(lam, k)
    base = np.sort(np.asarray(b.base, dtype=float))[::-1]
    drift = np.abs(rest - base)
    corner_gap = float(abs(lam[k] - b.corner))
    return drift, corner_gap
