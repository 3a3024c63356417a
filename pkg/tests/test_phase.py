"""Spectral-core tests: eigenvalues, phase, symmetric polynomials, the operator
derivative, range classification, the supercritical spectral inequalities, and
bordered-matrix eigenvalue drift.

np.linalg.eigh is used here only as the independent eigenvalue oracle; the
package itself never calls it.
"""

import math

import numpy as np
import pytest

from lmce.errors import InvalidMatrix, InvalidOrder, PhaseOutOfRange, PreconditionViolated
from lmce.phase import (
    BorderedMatrix,
    bordered_eig_drift,
    classify_phase,
    eig_sym,
    metric_inverse,
    phase,
    polynomial_residual,
    sigma_k,
    supercritical_spectrum_check,
)


class TestEigSym:
    def test_identity(self):
        np.testing.assert_allclose(eig_sym(np.eye(2)), [1.0, 1.0], atol=1e-15)

    def test_offdiagonal(self):
        np.testing.assert_allclose(eig_sym([[0.0, 1.0], [1.0, 0.0]]), [1.0, -1.0], atol=1e-15)

    def test_shifted(self):
        # roots of lambda^2 - 4 lambda + 3
        np.testing.assert_allclose(eig_sym([[2.0, 1.0], [1.0, 2.0]]), [3.0, 1.0], atol=1e-14)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_oracle(self, n):
        rng = np.random.default_rng(7 + n)
        for _ in range(200):
            a = rng.uniform(-5.0, 5.0, (n, n))
            m = 0.5 * (a + a.T)
            got = eig_sym(m)
            want = np.sort(np.linalg.eigvalsh(m))[::-1]
            np.testing.assert_allclose(got, want, atol=1e-11)

    @pytest.mark.parametrize("n", [3, 4])
    def test_eigen_residual(self, n):
        # residual ||Mv - lambda v|| <= 1e-12 per pair, v from the oracle basis
        rng = np.random.default_rng(17)
        a = rng.uniform(-2.0, 2.0, (n, n))
        m = 0.5 * (a + a.T)
        lam = eig_sym(m)
        w, v = np.linalg.eigh(m)
        for lam_i, v_i in zip(np.sort(lam), v[:, np.argsort(w)].T):
            assert np.linalg.norm(m @ v_i - lam_i * v_i) <= 1e-12

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_reconstruction_preserves_phase(self, n):
        # a diagonal matrix rebuilt from the spectrum carries the same phase
        rng = np.random.default_rng(31 + n)
        for _ in range(100):
            a = rng.uniform(-4.0, 4.0, (n, n))
            m = 0.5 * (a + a.T)
            assert phase(np.diag(eig_sym(m))) == pytest.approx(phase(m), abs=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidMatrix):
            eig_sym([[np.nan, 0.0], [0.0, 1.0]])

    def test_asymmetric_rejected(self):
        with pytest.raises(InvalidMatrix):
            eig_sym([[1.0, 2.0], [2.0 + 1e-14, 1.0]])


class TestPhase:
    def test_identity_n2(self):
        assert phase(np.eye(2)) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_zero_n3(self):
        assert phase(np.zeros((3, 3))) == pytest.approx(0.0, abs=1e-15)

    def test_reciprocal_pair(self):
        # arctan a + arctan(1/a) = pi/2 for a > 0
        assert phase(np.diag([2.0, 0.5])) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_range(self):
        rng = np.random.default_rng(3)
        for n in (2, 3, 4):
            for _ in range(50):
                a = rng.uniform(-50.0, 50.0, (n, n))
                m = 0.5 * (a + a.T)
                assert abs(phase(m)) < n * math.pi / 2

    def test_rotation_invariance(self):
        rng = np.random.default_rng(11)
        for n in (2, 3, 4):
            for _ in range(100):
                a = rng.uniform(-5.0, 5.0, (n, n))
                m = 0.5 * (a + a.T)
                q, _ = np.linalg.qr(rng.normal(size=(n, n)))
                rotated = q.T @ m @ q
                rotated = 0.5 * (rotated + rotated.T)
                assert phase(rotated) == pytest.approx(phase(m), abs=1e-12)

    def test_monotone_in_psd_directions(self):
        rng = np.random.default_rng(13)
        for n in (2, 3):
            for _ in range(200):
                a = rng.uniform(-4.0, 4.0, (n, n))
                m = 0.5 * (a + a.T)
                b = rng.normal(size=(n, n))
                v = b @ b.T
                assert phase(m + v) >= phase(m) - 1e-13


class TestSigma:
    def test_pair_of_ones(self):
        assert sigma_k(np.array([1.0, 1.0]), 2) == pytest.approx(1.0)

    def test_sum(self):
        assert sigma_k(np.array([2.0, 0.5]), 1) == pytest.approx(2.5)

    def test_product(self):
        assert sigma_k(np.array([3.0, 1.0]), 2) == pytest.approx(3.0)

    def test_sigma0_convention(self):
        assert sigma_k(np.array([4.0, 5.0, 6.0]), 0) == 1.0

    def test_out_of_range(self):
        with pytest.raises(InvalidOrder):
            sigma_k(np.array([1.0, 2.0]), 3)
        with pytest.raises(InvalidOrder):
            sigma_k(np.array([1.0, 2.0]), -1)


class TestPolynomialResidual:
    def test_unit_determinant(self):
        assert polynomial_residual(np.diag([1.0, 1.0]), math.pi / 2) == pytest.approx(0.0, abs=1e-14)

    def test_zero_matrix_zero_phase(self):
        assert polynomial_residual(np.zeros((2, 2)), 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_reciprocal_pair(self):
        # n=2 residual at c=pi/2 reduces to sigma_2 - 1 = 2*0.5 - 1
        assert polynomial_residual(np.diag([2.0, 0.5]), math.pi / 2) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_identity_with_phase(self, n):
        # polynomial residual == sin(phase - c) * prod sqrt(1 + lambda_i^2)
        rng = np.random.default_rng(29 + n)
        for _ in range(1000):
            a = rng.uniform(-5.0, 5.0, (n, n))
            m = 0.5 * (a + a.T)
            c = rng.uniform(-n * math.pi / 2, n * math.pi / 2)
            lam = eig_sym(m)
            want = math.sin(phase(m) - c) * float(np.sqrt(1.0 + lam**2).prod())
            got = polynomial_residual(m, c)
            assert abs(got - want) <= 1e-10 * max(1.0, abs(want))


class TestMetricInverse:
    def test_zero(self):
        np.testing.assert_allclose(metric_inverse(np.zeros((2, 2))), np.eye(2), atol=1e-15)

    def test_identity(self):
        np.testing.assert_allclose(metric_inverse(np.eye(2)), np.diag([0.5, 0.5]), atol=1e-15)

    def test_reciprocal_pair(self):
        np.testing.assert_allclose(
            metric_inverse(np.diag([2.0, 0.5])), np.diag([0.2, 0.8]), atol=1e-15
        )

    @pytest.mark.parametrize("n", [2, 3])
    def test_is_phase_derivative(self, n):
        # central differences of phase match <metric_inverse, V> to O(h^2)
        rng = np.random.default_rng(41 + n)
        orders = []
        for _ in range(20):
            a = rng.uniform(-2.0, 2.0, (n, n))
            m = 0.5 * (a + a.T)
            b = rng.uniform(-1.0, 1.0, (n, n))
            v = 0.5 * (b + b.T)
            pairing = float(np.sum(metric_inverse(m) * v))
            errs = []
            for h in (1e-3, 1e-4):
                slope = (phase(m + h * v) - phase(m - h * v)) / (2 * h)
                errs.append(abs(slope - pairing))
            if errs[0] > 1e-12:  # skip directions with a vanishing third-order term
                orders.append(math.log10(errs[0] / max(errs[1], 1e-18)))
        assert np.median(orders) == pytest.approx(2.0, abs=0.35)


class TestClassifyPhase:
    def test_supercritical_n2(self):
        spec = classify_phase(math.pi / 2, dim=2)
        assert spec.classification == "supercritical"
        assert spec.delta == pytest.approx(math.pi / 2)
        assert spec.eps_prime == pytest.approx(math.pi / 2)

    def test_critical_n3(self):
        spec = classify_phase(math.pi / 2, dim=3)
        assert spec.classification == "critical"
        assert spec.delta == 0.0

    def test_subcritical_n3(self):
        assert classify_phase(0.0, dim=3).classification == "subcritical"

    def test_mirrored_range(self):
        spec = classify_phase([-math.pi / 2 - 0.3, -math.pi / 2 - 0.1], dim=3)
        assert spec.mirrored
        assert spec.classification == "supercritical"
        assert spec.delta == pytest.approx(0.1)

    def test_out_of_range(self):
        with pytest.raises(PhaseOutOfRange):
            classify_phase(math.pi, dim=2)

    def test_boundary_tolerance(self):
        # exactly-critical input must not round into supercritical
        spec = classify_phase(math.pi / 2 + 5e-13, dim=3, tolerance=1e-12)
        assert spec.classification == "critical"


class TestSupercriticalSpectrum:
    def test_reciprocal_pair(self):
        checks = supercritical_spectrum_check([2.0, 0.5], psi_min=math.pi / 2, delta=math.pi / 2)
        assert checks.all_ok
        # bound for check 4 is -cot(pi/2) = 0 <= 0.5
        assert checks.lower_bound_margin == pytest.approx(0.5, abs=1e-12)

    def test_ones_n3(self):
        checks = supercritical_spectrum_check([1.0, 1.0, 1.0], psi_min=3 * math.pi / 4)
        assert checks.passed["eigOrder"] and checks.passed["traceBalance"] and checks.passed["sigmaNonneg"]
        assert checks.lower_bound_margin is None

    def test_wide_pair(self):
        # phase arctan(10) + arctan(-0.05) = 1.4212 >= 0
        psi = math.atan(10.0) + math.atan(-0.05)
        assert psi == pytest.approx(1.4211692785817919, abs=1e-12)
        checks = supercritical_spectrum_check([10.0, -0.05], psi_min=psi)
        assert checks.eig_order_margin > 0
        assert checks.trace_balance_margin == pytest.approx(10.0 - 0.05 * 1)
        assert checks.sigma_margin == pytest.approx(9.95)

    def test_below_critical_rejected(self):
        with pytest.raises(PreconditionViolated):
            supercritical_spectrum_check([1.0, 1.0, 1.0], psi_min=0.0)

    @pytest.mark.parametrize("n", [2, 3])
    def test_random_supercritical_spectra(self, n):
        # sampled spectra with phase >= (n-2)pi/2 pass all four checks exactly
        rng = np.random.default_rng(59 + n)
        critical = (n - 2) * math.pi / 2
        done = 0
        while done < 1000:
            lam = rng.uniform(-3.0, 3.0, n)
            p = float(np.arctan(lam).sum())
            if p < critical:
                continue
            done += 1
            delta = p - critical
            checks = supercritical_spectrum_check(lam, psi_min=p, delta=delta)
            assert checks.all_ok, (lam, checks.margins)


class TestBorderedDrift:
    def test_block_diagonal(self):
        b = BorderedMatrix(np.array([1.0, 2.0]), np.array([0.0, 0.0]), 100.0)
        drift, gap = bordered_eig_drift(b)
        np.testing.assert_allclose(drift, 0.0, atol=1e-12)
        assert gap == pytest.approx(0.0, abs=1e-12)

    def test_moderate_border(self):
        b = BorderedMatrix(np.array([1.0, 2.0]), np.array([0.5, 0.5]), 100.0)
        drift, gap = bordered_eig_drift(b)
        assert np.all(drift <= 0.01)
        assert gap <= 0.01
        # cross-check the full spectrum against the oracle
        lam = np.sort(np.linalg.eigvalsh(b.assemble()))[::-1]
        got = eig_sym(b.assemble())
        np.testing.assert_allclose(got, lam, atol=1e-10)

    def test_drift_decreases_with_corner(self):
        drifts, gaps = [], []
        for a in (1e2, 1e4, 1e6):
            b = BorderedMatrix(np.array([1.0, 2.0]), np.array([0.5, 0.5]), a)
            d, g = bordered_eig_drift(b)
            drifts.append(d.max())
            gaps.append(g)
        assert drifts[0] > drifts[1] > drifts[2]
        assert max(gaps) <= 1.0

    def test_inverse_corner_rate(self):
        # drift <= C/a with a fitted C at most 1 across three decades
        cs = []
        for a in (1e2, 1e3, 1e4):
            b = BorderedMatrix(np.array([1.0, 2.0]), np.array([0.5, 0.5]), a)
            d, g = bordered_eig_drift(b)
            cs.append(d.max() * a)
            assert g <= 1.0
        assert max(cs) <= 1.0
