"""Deciding and constructing detector-side emulations of target unitaries.

Given a fixed front-end matrix ``G`` and a target unitary ``U_th``, the
pipeline can realize ``U_th = O . Delta_LO . G`` with tunable local-oscillator
pixel phases ``Delta_LO`` and real orthogonal digital gains ``O``. This is
possible exactly iff ``U'^T U'`` is diagonal with unit-modulus entries, where
``U' = U_th G^dag``; then every square-root branch ``Delta_LO`` of that
diagonal yields an exact solution ``O = U' Delta_LO^{-1}``. Targets that fail
the test can still be approximated in Frobenius distance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapacityError,
    DimensionError,
    FeasibilityError,
    InternalConsistencyError,
    ValidationError,
)
from .matcore import (
    DEFAULT_TOL,
    DiagonalUnitary,
    as_complex_matrix,
    diag_sqrt_branches,
    frobenius_distance,
    is_real_orthogonal,
    is_unitary,
    procrustes_best_orthogonal,
)


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the exact-synthesis test for one (U_th, G) pair.

    ``feasible`` holds iff both residuals are within ``tol``: the off-diagonal
    residual is the largest off-diagonal modulus of ``D = U'^T U'`` and the
    modulus residual the largest deviation of ``|d_kk|`` from 1.
    """

    u_prime: np.ndarray
    d_candidate: np.ndarray
    offdiag_residual: float
    modulus_residual: float
    feasible: bool
    tol: float

    @property
    def dim(self) -> int:
        return self.d_candidate.shape[0]

    def d_diagonal(self) -> np.ndarray:
        return np.diag(self.d_candidate)


@dataclass(frozen=True)
class SynthesisSolution:
    """One realization ``(Delta_LO, O)`` of a target unitary.

    ``branch_id`` addresses which square-root branch produced the solution
    (``None`` for solutions found by the approximate optimizer); ``residual``
    is the Frobenius distance of ``O Delta_LO G`` to the target.
    """

    delta_lo: DiagonalUnitary
    gains: np.ndarray
    u_mphd: np.ndarray
    residual: float
    branch_id: tuple[int, ...] | None = None


@dataclass(frozen=True)
class ApproxResult:
    """Best solution found by :func:`solve_approx` plus convergence data."""

    solution: SynthesisSolution
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def feasibility(u_th, g, tol: float = DEFAULT_TOL) -> FeasibilityReport:
    """Test whether ``U_th`` is exactly realizable over the fixed ``G``.

    Both inputs must be square unitary matrices of the same size (validated
    within ``tol``). Returns the full report; no exception is raised for an
    infeasible target.
    """
    u = as_complex_matrix(u_th, "u_th")
    gm = as_complex_matrix(g, "g")
    if u.shape[0] != u.shape[1] or gm.shape[0] != gm.shape[1]:
        raise DimensionError("u_th and g must be square")
    if u.shape != gm.shape:
        raise DimensionError(f"shape mismatch: u_th {u.shape} vs g {gm.shape}")
    if not is_unitary(u, tol):
        raise ValidationError("u_th is not unitary within tolerance")
    if not is_unitary(gm, tol):
        raise ValidationError("g is not unitary within tolerance")
    u_prime = u @ gm.conj().T
    d = u_prime.T @ u_prime
    off = d - np.diag(np.diag(d))
    offdiag = float(np.abs(off).max()) if d.shape[0] > 1 else 0.0
    modulus = float(np.abs(np.abs(np.diag(d)) - 1.0).max())
    return FeasibilityReport(
        u_prime=u_prime,
        d_candidate=d,
        offdiag_residual=offdiag,
        modulus_residual=modulus,
        feasible=bool(offdiag <= tol and modulus <= tol),
        tol=tol,
    )


def _solution_from_branch(report: FeasibilityReport, g, u_th, bits) -> SynthesisSolution:
    d = DiagonalUnitary.from_diagonal(
        report.d_diagonal() / np.abs(report.d_diagonal())
    )
    delta = diag_sqrt_branches(d, bits)
    o_complex = report.u_prime * np.conj(delta.diagonal())[None, :]
    ortho_tol = max(100 * report.tol, 1e-10)
    if not is_real_orthogonal(o_complex, ortho_tol):
        raise InternalConsistencyError(
            "reconstructed gain matrix is not real orthogonal; this indicates "
            "a bug or a barely-feasible report"
        )
    gains = o_complex.real
    u_mphd = (gains * delta.diagonal()[None, :]) @ np.asarray(g, dtype=complex)
    return SynthesisSolution(
        delta_lo=delta,
        gains=gains,
        u_mphd=u_mphd,
        residual=frobenius_distance(u_mphd, u_th),
        branch_id=tuple(int(b) for b in bits),
    )


def solve_exact(
    report: FeasibilityReport, g, u_th, branch=None
) -> SynthesisSolution:
    """Construct the exact solution for one square-root branch.

    ``branch`` is a bit-vector over principal-root sign flips (default: the
    principal branch, all zeros). Requires ``report.feasible``.
    """
    if not report.feasible:
        raise FeasibilityError(
            f"target failed the feasibility test (offdiag {report.offdiag_residual:.2e}, "
            f"modulus {report.modulus_residual:.2e}, tol {report.tol:.2e})"
        )
    bits = np.zeros(report.dim, dtype=int) if branch is None else np.asarray(branch, dtype=int)
    if bits.shape != (report.dim,):
        raise DimensionError(f"branch must have length {report.dim}")
    return _solution_from_branch(report, g, u_th, bits)


def enumerate_solutions(report: FeasibilityReport, g, u_th) -> list[SynthesisSolution]:
    """All ``2**N`` exact solutions, ordered by branch bits as binary counting."""
    if not report.feasible:
        raise FeasibilityError("cannot enumerate solutions of an infeasible problem")
    if report.dim > 20:
        raise CapacityError(
            f"2**{report.dim} branches is too many to enumerate; "
            "pick single branches with solve_exact instead"
        )
    return [
        _solution_from_branch(report, g, u_th, bits)
        for bits in itertools.product((0, 1), repeat=report.dim)
    ]


def verify_solution(sol: SynthesisSolution, u_th, g, tol: float = 1e-10) -> float:
    """Recompute ``O Delta_LO G`` from stored parameters; return its distance to ``U_th``.

    Also enforces the stored-product invariant: the recomputed matrix must be
    within ``tol`` of ``sol.u_mphd``.
    """
    product = (sol.gains * sol.delta_lo.diagonal()[None, :]) @ np.asarray(g, dtype=complex)
    if frobenius_distance(product, sol.u_mphd) > tol:
        raise InternalConsistencyError(
            "stored u_mphd differs from the recomputed product beyond tolerance"
        )
    return frobenius_distance(product, u_th)


def _objective(gains, phases, g, u_th) -> float:
    return float(
        np.linalg.norm((gains * np.exp(1j * phases)[None, :]) @ g - u_th)
    )


def _golden_min(f, a: float, b: float, tol: float = 1e-12) -> float:
    """Golden-section minimum of a unimodal function on [a, b]."""
    inv_gr = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv_gr * (b - a), a + inv_gr * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_gr * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def solve_approx(
    u_th,
    g,
    *,
    max_iters: int = 200,
    restarts: int = 8,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> ApproxResult:
    """Minimize ``||O Delta_LO(phi) G - U_th||_F`` by alternating descent.

    Each iteration solves the gain matrix in closed form (orthogonal
    Procrustes on ``Re(Delta G U_th^dag)``) and then descends on the N pixel
    phases one coordinate at a time with a derivative-free golden-section
    line search, bracketed by an 8-point coarse probe of the (periodic)
    coordinate restriction. Restarts draw independent random phase vectors
    from a generator seeded with ``seed``; the best run is returned with its
    monotone objective trace. ``converged`` is False when that run was still
    improving at ``max_iters``.
    """
    u = as_complex_matrix(u_th, "u_th")
    gm = as_complex_matrix(g, "g")
    if u.shape != gm.shape or u.shape[0] != u.shape[1]:
        raise DimensionError("u_th and g must be square matrices of equal size")
    if not is_unitary(u, max(tol, 1e-8)) or not is_unitary(gm, max(tol, 1e-8)):
        raise ValidationError("approximate synthesis expects unitary u_th and g")
    n = u.shape[0]
    rng = np.random.default_rng(seed)
    best: tuple | None = None
    for _ in range(max(1, restarts)):
        phases = rng.uniform(0.0, 2.0 * np.pi, n)
        gains = procrustes_best_orthogonal(
            ((np.exp(1j * phases)[:, None] * gm) @ u.conj().T).real
        )
        f_val = _objective(gains, phases, gm, u)
        trace: list[float] = []
        converged = False
        for _ in range(max_iters):
            f_prev = f_val
            # closed-form gain step
            delta_g = np.exp(1j * phases)[:, None] * gm
            candidate = procrustes_best_orthogonal((delta_g @ u.conj().T).real)
            if _objective(candidate, phases, gm, u) <= f_val:
                gains = candidate
                f_val = _objective(gains, phases, gm, u)
            # per-coordinate phase line search
            for k in range(n):
                def f_k(x, k=k):
                    p = phases.copy()
                    p[k] = x
                    return _objective(gains, p, gm, u)

                probes = phases[k] + np.linspace(0.0, 2.0 * np.pi, 9)[:-1]
                probe_vals = [f_k(x) for x in probes]
                center = probes[int(np.argmin(probe_vals))]
                cand = _golden_min(f_k, center - np.pi / 4, center + np.pi / 4)
                if f_k(cand) <= f_val:
                    phases[k] = cand
                    f_val = f_k(cand)
            trace.append(f_val)
            if f_prev - f_val < 1e-13:
                converged = True
                break
        if best is None or f_val < best[0]:
            best = (f_val, phases.copy(), gains.copy(), trace, converged)
        if best[0] < 1e-12:
            break
    f_val, phases, gains, trace, converged = best
    delta = DiagonalUnitary(phases)
    u_mphd = (gains * delta.diagonal()[None, :]) @ gm
    solution = SynthesisSolution(
        delta_lo=delta,
        gains=gains,
        u_mphd=u_mphd,
        residual=frobenius_distance(u_mphd, u),
        branch_id=None,
    )
    return ApproxResult(
        solution=solution,
        objective_trace=trace,
        iterations=len(trace),
        converged=converged,
    )
