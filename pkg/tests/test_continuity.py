"""Continuation-solver tests: initial guess, damped Newton, homotopy runs, and
the mollified-boundary sequence."""

import math

import numpy as np
import pytest

from lmce.continuity import (
    ContinuityOptions,
    c0_boundary_run,
    continuity_run,
    initial_guess,
    newton_solve,
)
from lmce.errors import ContinuationFailure, PhaseOutOfRange
from lmce.geometry import BoundaryData, DomainSpec, build_grid
from lmce.phase import classify_phase
from lmce.schemes import (
    assemble_linearization,
    field_from_function,
    hessian_components,
    phase_residual,
    solve_linear,
)

DISK = DomainSpec("disk", (0.0, 0.0), (1.0, 1.0))


def _phi(fn, smooth="C4", spec=DISK):
    return BoundaryData(spec, fn, smoothness=smooth)


@pytest.fixture(scope="module")
def grid32():
    return build_grid(DISK, 1 / 32)


@pytest.fixture(scope="module")
def grid8():
    return build_grid(DISK, 1 / 8)


class TestInitialGuess:
    def test_matching_quadratic_data_is_exact(self, grid8):
        phi = _phi(lambda x, y: 0.5 * (x**2 + y**2))
        guess = initial_guess(grid8, phi, math.pi / 2)
        want = 0.5 * (grid8.xy**2).sum(1)
        assert np.abs(guess.values - want).max() <= 1e-11

    def test_zero_data_keeps_base_phase(self, grid8):
        # centered disk: the lift of -q|boundary is the constant -1/2, so the
        # guess is 0.5(|x|^2 - 1) with phase exactly pi/2
        phi = _phi(lambda x, y: np.zeros_like(x))
        guess = initial_guess(grid8, phi, math.pi / 2)
        want = 0.5 * ((grid8.xy**2).sum(1) - 1.0)
        assert np.abs(guess.values - want).max() <= 1e-10
        assert np.abs(phase_residual(guess, math.pi / 2)).max() <= 1e-10

    def test_zero_base_phase_gives_harmonic_extension(self, grid8):
        phi = _phi(lambda x, y: x * y + 0.2 * x)
        guess = initial_guess(grid8, phi, 0.0)
        zero = field_from_function(grid8, lambda x, y: np.zeros_like(x))
        lap = assemble_linearization(zero, boundary_values=phi(grid8.hits_xy))
        want = solve_linear(lap)
        assert np.abs(guess.values - want).max() <= 1e-11

    def test_out_of_range_base(self, grid8):
        with pytest.raises(PhaseOutOfRange):
            initial_guess(grid8, _phi(lambda x, y: np.zeros_like(x)), math.pi)


class TestNewtonSolve:
    def test_exact_solution_fixed_point(self, grid32):
        u0 = field_from_function(grid32, lambda x, y: 0.5 * (x**2 + y**2))
        u, iters = newton_solve(u0, math.pi / 2, 1e-12)
        assert iters <= 1
        assert np.abs(phase_residual(u, math.pi / 2)).max() <= 1e-12

    def test_seeded_smooth_bump_budget(self, grid32):
        # fixed-seed smooth interior perturbation of amplitude 0.01: pinned
        # budget of 8 damped iterations to 1e-10 (6 observed)
        rng = np.random.default_rng(0)
        c = rng.uniform(-1, 1, 6)
        u0 = field_from_function(grid32, lambda x, y: 0.5 * (x**2 + y**2))
        x, y = grid32.xy[:, 0], grid32.xy[:, 1]
        bump = c[0] * np.sin(2 * x + c[1]) * np.cos(2 * y + c[2]) + c[3] * np.sin(
            3 * x + c[4]
        ) * np.cos(y + c[5])
        u0.values += 0.01 * bump * np.clip(grid32.boundary_distances() / 0.1, 0.0, 1.0)
        u, iters = newton_solve(u0, math.pi / 2, 1e-10)
        assert iters <= 8
        assert np.abs(phase_residual(u, math.pi / 2)).max() <= 1e-10

    def test_target_out_of_range_checked_first(self, grid8):
        u0 = field_from_function(grid8, lambda x, y: 0.5 * (x**2 + y**2))
        with pytest.raises(PhaseOutOfRange):
            newton_solve(u0, math.pi, 1e-10)


class TestContinuityRun:
    def test_exact_quadratic_both_endpoints(self, grid32):
        phi = _phi(lambda x, y: 0.5 * (x**2 + y**2))
        u, rep = continuity_run(grid32, phi, classify_phase(math.pi / 2, dim=2))
        want = 0.5 * (grid32.xy**2).sum(1)
        assert rep.converged
        assert rep.final_residual <= 1e-10
        assert np.abs(u.values - want).max() <= 1e-9
        assert rep.sandwich_margin >= 0.0

    @pytest.mark.parametrize("a", [1.0, 2.0, 5.0])
    def test_anisotropic_quadratic_family(self, grid32, a):
        phi = _phi(lambda x, y: 0.5 * (a * x**2 + y**2 / a))
        u, rep = continuity_run(grid32, phi, classify_phase(math.pi / 2, dim=2))
        want = 0.5 * (a * grid32.xy[:, 0] ** 2 + grid32.xy[:, 1] ** 2 / a)
        assert rep.final_residual <= 1e-10
        assert np.abs(u.values - want).max() <= 1e-9

    def test_zero_data_unit_determinant(self, grid32):
        phi = _phi(lambda x, y: np.zeros_like(x))
        u, rep = continuity_run(grid32, phi, classify_phase(math.pi / 2, dim=2))
        uxx, uyy, uxy = hessian_components(u)
        det = uxx * uyy - uxy**2
        deep = grid32.boundary_distances() >= 4 * grid32.h
        assert np.abs(det - 1.0)[deep].max() <= 5 * grid32.h**2
        assert rep.converged

    def test_matches_poisson_fixed_point_oracle(self):
        # brute-force oracle for det(D^2 u) = 1, u|boundary = 0: iterate
        # Delta u <- sqrt((uxx - uyy)^2 + 4 uxy^2 + 4) on the 17x17-scale grid
        for spec in (DISK, DomainSpec("ellipse", (0.0, 0.0), (1.2, 0.8))):
            g = build_grid(spec, 1 / 8)
            zero = field_from_function(g, lambda x, y: np.zeros_like(x))
            lap = assemble_linearization(zero)
            u = zero.copy()
            for _ in range(400):
                uxx, uyy, uxy = hessian_components(u)
                rhs = np.sqrt((uxx - uyy) ** 2 + 4 * uxy**2 + 4.0)
                new_vals = solve_linear(lap, rhs=rhs)
                step = np.abs(new_vals - u.values).max()
                u.values = new_vals
                if step < 1e-13:
                    break
            phi = _phi(lambda x, y: np.zeros_like(x), spec=spec)
            sol, _ = continuity_run(g, phi, classify_phase(math.pi / 2, dim=2))
            assert np.abs(sol.values - u.values).max() <= 1e-10

    def test_variable_supercritical_margins(self, grid32):
        x, y = grid32.xy[:, 0], grid32.xy[:, 1]
        psi = classify_phase(math.pi / 2 + 0.05 + 0.25 * (x**2 + y**2), dim=2)
        phi = _phi(lambda x, y: 0.5 * (x**2 + y**2))
        u, rep = continuity_run(grid32, phi, psi)
        assert rep.converged
        bound = -10 * grid32.h**2
        for key, margin in rep.spectrum_margins.items():
            if margin is not None:
                assert margin >= bound, key
        assert rep.sandwich_margin >= -5 * grid32.h**2
        # homotopy progress: t strictly increasing to 1.0
        ts = [s["t"] for s in rep.step_history]
        assert ts[-1] == 1.0
        assert all(t2 >= t1 for t1, t2 in zip(ts, ts[1:]))
        assert all(t2 > t1 for t1, t2 in zip(ts[:-2], ts[1:-1]))

    def test_homotopy_state_invariant(self, grid32):
        phi = _phi(lambda x, y: 0.5 * (x**2 + y**2))
        x, y = grid32.xy[:, 0], grid32.xy[:, 1]
        psi = classify_phase(math.pi / 2 + 0.1 + 0.2 * x**2, dim=2)
        u, rep = continuity_run(grid32, phi, psi)
        state = rep.state
        recomputed = float(np.abs(phase_residual(state.u, psi.values)).max())
        assert abs(recomputed - state.residual_norm) <= 1e-14

    def test_subcritical_rejected(self, grid8):
        phi = _phi(lambda x, y: np.zeros_like(x))
        with pytest.raises(PhaseOutOfRange):
            continuity_run(grid8, phi, classify_phase(0.0, dim=2))

    def test_step_floor_failure(self, grid8):
        # a Newton budget of zero forces halving down to the floor
        x = grid8.xy[:, 0]
        psi = classify_phase(math.pi / 2 + 0.1 + 0.2 * x**2, dim=2)
        phi = _phi(lambda x, y: 0.5 * (x**2 + y**2))
        opts = ContinuityOptions(max_newton=0, dt_floor=2.0**-6)
        with pytest.raises(ContinuationFailure) as err:
            continuity_run(grid8, phi, psi, opts)
        assert err.value.last_good_t == 0.0


class TestC0BoundaryRun:
    def test_smooth_data_stages_agree(self, grid32):
        phi = _phi(lambda x, y: x, smooth="C0")  # cos(theta): its own limit
        psi = classify_phase(math.pi / 2, dim=2)
        u, rep = c0_boundary_run(grid32, phi, psi, (0.4, 0.2))
        assert rep.converged
        pair = rep.cauchy["pairs"][0]
        assert pair["withinContract"]
        assert pair["interiorGap"] <= pair["boundaryGap"] + 5 * grid32.h**2

    def test_single_radius_matches_plain_run(self, grid8):
        from lmce.geometry import mollify_boundary

        phi = _phi(lambda x, y: np.abs(x), smooth="C0")
        psi = classify_phase(math.pi / 2, dim=2)
        u_seq, rep_seq = c0_boundary_run(grid8, phi, psi, (0.2,))
        u_one, _ = continuity_run(grid8, mollify_boundary(phi, 0.2), psi)
        assert u_seq.sup_diff(u_one) == 0.0
        assert rep_seq.cauchy["pairs"] == []

    def test_rejects_nondecreasing_radii(self, grid8):
        phi = _phi(lambda x, y: np.abs(x), smooth="C0")
        psi = classify_phase(math.pi / 2, dim=2)
        with pytest.raises(PhaseOutOfRange):
            c0_boundary_run(grid8, phi, psi, (0.1, 0.2))
