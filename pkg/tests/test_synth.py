import numpy as np
import pytest

import refvals as rv
from mphd import (
    DiagonalUnitary,
    cluster_unitary,
    enumerate_solutions,
    feasibility,
    fourier_program,
    linear_cluster_4,
    is_real_orthogonal,
    solve_approx,
    solve_exact,
    verify_solution,
)
from mphd.errors import (
    CapacityError,
    DimensionError,
    FeasibilityError,
    InternalConsistencyError,
    ValidationError,
)
from mphd.synth import SynthesisSolution

CZ2_TARGET = cluster_unitary(np.array([[0.0, 1.0], [1.0, 0.0]])).u
CZ2_G = np.eye(2, dtype=complex)


def phase_scan_oracle(u, step=1e-2):
    """Best achievable distance over a phase grid, via the closed-form
    nuclear-norm expression for the optimal 2x2 gain matrix."""
    grid = np.arange(0.0, 2 * np.pi, step)
    p1, p2 = np.meshgrid(grid, grid, indexing="ij")
    # columns of Re(U diag(e^{-i p1}, e^{-i p2}))
    col1 = np.multiply.outer(u[:, 0], np.exp(-1j * p1))
    col2 = np.multiply.outer(u[:, 1], np.exp(-1j * p2))
    m11, m21 = col1[0].real, col1[1].real
    m12, m22 = col2[0].real, col2[1].real
    fro2 = m11**2 + m21**2 + m12**2 + m22**2
    det = m11 * m22 - m12 * m21
    nuclear = np.sqrt(fro2 + 2 * np.abs(det))
    return float(np.sqrt(np.maximum(4.0 - 2.0 * nuclear, 0.0)).min())


class TestFeasibility:
    def test_target_equals_g(self):
        report = feasibility(rv.G_LIN4, rv.G_LIN4)
        assert report.feasible
        np.testing.assert_allclose(report.d_candidate, np.eye(4), atol=1e-12)

    def test_linear_cluster_diagonal(self):
        report = feasibility(rv.CLUSTER_4, rv.G_LIN4)
        assert report.feasible
        assert report.offdiag_residual <= 1e-12
        np.testing.assert_allclose(report.d_diagonal(), rv.D_LIN4, atol=1e-9)

    def test_gate_diagonal(self):
        report = feasibility(rv.GATE_TARGET, rv.G_GATE)
        assert report.feasible
        np.testing.assert_allclose(report.d_diagonal(), rv.D_GATE, atol=1e-9)

    def test_infeasible_target(self):
        report = feasibility(CZ2_TARGET, CZ2_G)
        assert not report.feasible
        assert report.offdiag_residual > 0.9  # D = i * adjacency

    def test_non_unitary_input_named(self):
        bad = np.eye(4) * 1.5
        with pytest.raises(ValidationError, match="u_th"):
            feasibility(bad, rv.G_LIN4)
        with pytest.raises(ValidationError, match="g"):
            feasibility(np.eye(4), bad)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            feasibility(np.eye(3), np.eye(4))


class TestSolveExact:
    def test_principal_branch_of_trivial_problem(self):
        report = feasibility(rv.G_LIN4, rv.G_LIN4)
        sol = solve_exact(report, rv.G_LIN4, rv.G_LIN4)
        np.testing.assert_allclose(sol.delta_lo.diagonal(), 1.0, atol=1e-12)
        np.testing.assert_allclose(sol.gains, np.eye(4), atol=1e-12)
        assert sol.residual <= 1e-12

    def test_published_linear_cluster_branch(self):
        report = feasibility(rv.CLUSTER_4, rv.G_LIN4)
        sol = solve_exact(report, rv.G_LIN4, rv.CLUSTER_4, branch=(1, 0, 0, 1))
        np.testing.assert_allclose(sol.delta_lo.diagonal(), rv.DELTA_LIN4, atol=1e-12)
        np.testing.assert_allclose(sol.gains, rv.O_LIN4, atol=1e-12)
        assert sol.residual <= 1e-12

    def test_published_gate_branch(self):
        report = feasibility(rv.GATE_TARGET, rv.G_GATE)
        sol = solve_exact(report, rv.G_GATE, rv.GATE_TARGET, branch=(1, 0, 0, 1))
        np.testing.assert_allclose(sol.delta_lo.diagonal(), rv.DELTA_GATE, atol=1e-12)
        np.testing.assert_allclose(sol.gains, rv.O_GATE, atol=1e-12)

    def test_infeasible_report_refused(self):
        report = feasibility(CZ2_TARGET, CZ2_G)
        with pytest.raises(FeasibilityError):
            solve_exact(report, CZ2_G, CZ2_TARGET)

    def test_branch_length_checked(self):
        report = feasibility(rv.G_LIN4, rv.G_LIN4)
        with pytest.raises(DimensionError):
            solve_exact(report, rv.G_LIN4, rv.G_LIN4, branch=(0, 1))


class TestEnumerateSolutions:
    def test_sixteen_branches(self):
        report = feasibility(rv.CLUSTER_4, rv.G_LIN4)
        sols = enumerate_solutions(report, rv.G_LIN4, rv.CLUSTER_4)
        assert len(sols) == 16
        assert len({s.branch_id for s in sols}) == 16

    def test_every_branch_reconstructs(self):
        report = feasibility(rv.CLUSTER_4, rv.G_LIN4)
        for sol in enumerate_solutions(report, rv.G_LIN4, rv.CLUSTER_4):
            assert sol.residual <= 1e-9
            assert is_real_orthogonal(sol.gains, 1e-9)

    def test_single_mode_pair(self):
        g = np.eye(1, dtype=complex)
        report = feasibility(g, g)
        sols = enumerate_solutions(report, g, g)
        assert len(sols) == 2
        pairs = sorted(
            (float(s.delta_lo.diagonal()[0].real), float(s.gains[0, 0])) for s in sols
        )
        np.testing.assert_allclose(pairs, [(-1.0, -1.0), (1.0, 1.0)], atol=1e-12)

    def test_capacity_guard(self):
        g = np.eye(21, dtype=complex)
        report = feasibility(g, g)
        with pytest.raises(CapacityError):
            enumerate_solutions(report, g, g)


class TestVerifySolution:
    def test_exact_solution(self):
        report = feasibility(rv.CLUSTER_4, rv.G_LIN4)
        sol = solve_exact(report, rv.G_LIN4, rv.CLUSTER_4, branch=(1, 0, 0, 1))
        assert verify_solution(sol, rv.CLUSTER_4, rv.G_LIN4) <= 1e-9

    def test_closed_form_parameters(self):
        sol = SynthesisSolution(
            delta_lo=DiagonalUnitary(np.angle(rv.DELTA_LIN4)),
            gains=rv.O_LIN4,
            u_mphd=(rv.O_LIN4 * rv.DELTA_LIN4[None, :]) @ rv.G_LIN4,
            residual=0.0,
        )
        assert verify_solution(sol, rv.CLUSTER_4, rv.G_LIN4) <= 1e-9

    def test_flipped_gain_sign_detected(self):
        gains = rv.O_LIN4.copy()
        gains[0, 0] = -gains[0, 0]
        sol = SynthesisSolution(
            delta_lo=DiagonalUnitary(np.angle(rv.DELTA_LIN4)),
            gains=gains,
            u_mphd=(gains * rv.DELTA_LIN4[None, :]) @ rv.G_LIN4,
            residual=0.0,
        )
        assert verify_solution(sol, rv.CLUSTER_4, rv.G_LIN4) >= 0.1

    def test_tampered_product_detected(self):
        report = feasibility(rv.CLUSTER_4, rv.G_LIN4)
        sol = solve_exact(report, rv.G_LIN4, rv.CLUSTER_4)
        tampered = SynthesisSolution(
            delta_lo=sol.delta_lo,
            gains=sol.gains,
            u_mphd=sol.u_mphd + 1e-6,
            residual=sol.residual,
        )
        with pytest.raises(InternalConsistencyError):
            verify_solution(tampered, rv.CLUSTER_4, rv.G_LIN4)


class TestRandomizedSoundness:
    def test_sufficiency_and_necessity(self):
        rng = np.random.default_rng(100)
        for trial in range(60):
            n = int(rng.integers(2, 6))
            if trial % 3 == 0 and n == 4:
                g = rv.G_LIN4
            else:
                g = rv.random_unitary(rng, n)
            phases = rng.uniform(0, 2 * np.pi, n)
            gains = rv.random_orthogonal(rng, n)
            delta = DiagonalUnitary(phases)
            u_th = (gains * delta.diagonal()[None, :]) @ g
            report = feasibility(u_th, g)
            assert report.feasible
            # necessity: the diagonal is exactly the squared dephasing
            np.testing.assert_allclose(
                report.d_diagonal(), delta.diagonal() ** 2, atol=1e-9
            )
            for bits in ((0,) * n, tuple(rng.integers(0, 2, n))):
                sol = solve_exact(report, g, u_th, bits)
                assert sol.residual <= 1e-9
                assert is_real_orthogonal(sol.gains, 1e-9)


class TestSolveApprox:
    def test_trivial_target_first_restart(self):
        result = solve_approx(rv.G_LIN4, rv.G_LIN4, restarts=1, seed=0)
        assert result.solution.residual <= 1e-10

    def test_rediscovers_exact_solution(self):
        result = solve_approx(rv.CLUSTER_4, rv.G_LIN4, restarts=8, seed=1)
        assert result.solution.residual <= 1e-6
        report = feasibility(rv.CLUSTER_4, rv.G_LIN4)
        exact = solve_exact(report, rv.G_LIN4, rv.CLUSTER_4)
        assert result.solution.residual <= exact.residual + 1e-9

    def test_trace_monotone(self):
        for seed in (0, 1, 5):
            result = solve_approx(rv.CLUSTER_4, rv.G_LIN4, restarts=2, seed=seed)
            trace = result.objective_trace
            assert all(trace[i + 1] <= trace[i] + 1e-12 for i in range(len(trace) - 1))

    def test_infeasible_two_mode_target(self):
        result = solve_approx(CZ2_TARGET, CZ2_G, restarts=8, seed=3)
        assert result.solution.residual > 1e-3  # honestly infeasible
        scan = phase_scan_oracle(CZ2_TARGET)
        assert abs(result.solution.residual - scan) <= 1e-2
        # closed-form optimum for this target
        assert result.solution.residual == pytest.approx(np.sqrt(4 - 2 * np.sqrt(2)), abs=1e-9)

    def test_deterministic_given_seed(self):
        a = solve_approx(CZ2_TARGET, CZ2_G, restarts=3, seed=42)
        b = solve_approx(CZ2_TARGET, CZ2_G, restarts=3, seed=42)
        assert a.solution.residual == b.solution.residual
        np.testing.assert_array_equal(a.solution.gains, b.solution.gains)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValidationError):
            solve_approx(np.eye(2) * 2.0, CZ2_G)


class TestGateProgramTieIn:
    def test_fourier_solutions_contain_published_pair(self):
        program = fourier_program()
        report = feasibility(program.u_th, rv.G_GATE)
        sols = enumerate_solutions(report, rv.G_GATE, program.u_th)
        delta_errs = [np.abs(s.delta_lo.diagonal() - rv.DELTA_GATE).max() for s in sols]
        best = int(np.argmin(delta_errs))
        assert delta_errs[best] <= 1e-12
        np.testing.assert_allclose(sols[best].gains, rv.O_GATE, atol=1e-12)

    def test_target_is_cluster_generator(self):
        np.testing.assert_allclose(linear_cluster_4(), rv.CLUSTER_4, atol=0)
