"""Cluster-state unitaries from graph adjacency matrices.

A graph with symmetric adjacency ``V`` (zero diagonal) defines a family of
unitaries ``U = X + iY`` subject to ``Y = VX``, ``XX^T + YY^T = I``,
``X^T Y = Y^T X`` and ``X Y^T = Y X^T``. Writing ``A = XX^T`` reduces the
constraints to the linear system ``VAV = I - A``; the symmetric PSD root
``X_s`` of ``A`` generates every solution as ``U = (I + iV) X_s O`` with
``O`` an arbitrary real orthogonal freedom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InfeasibleGraphError, ValidationError
from .matcore import as_complex_matrix, is_real_orthogonal


def validate_adjacency(v) -> np.ndarray:
    """Coerce and validate a real symmetric zero-diagonal adjacency matrix."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"adjacency matrix must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("adjacency matrix contains non-finite entries")
    if np.abs(arr - arr.T).max(initial=0.0) > 1e-12:
        raise ValidationError("adjacency matrix must be symmetric")
    if np.abs(np.diag(arr)).max(initial=0.0) > 1e-12:
        raise ValidationError("adjacency matrix must have zero diagonal")
    return arr


def path_adjacency(n: int, weight: float = 1.0) -> np.ndarray:
    """Adjacency matrix of the n-vertex path graph."""
    if n < 1:
        raise ValidationError(f"need at least one vertex, got {n}")
    v = np.zeros((n, n))
    idx = np.arange(n - 1)
    v[idx, idx + 1] = weight
    v[idx + 1, idx] = weight
    return v


@dataclass(frozen=True)
class ClusterSolution:
    """One member of the solution family for a given graph."""

    a: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    orthogonal_freedom: np.ndarray


@dataclass(frozen=True)
class ClusterValidation:
    """Per-condition residuals of the cluster constraint set."""

    passed: bool
    residuals: dict[str, float]


def solve_a(v, tol: float = 1e-10) -> np.ndarray:
    """Solve ``VAV = I - A`` for the symmetric PSD gain matrix ``A``.

    The (possibly underdetermined) system is vectorized as
    ``(V (x) V + I) vec(A) = vec(I)`` and solved by minimum-Frobenius-norm
    least squares, then symmetrized. The result is rejected with
    :class:`InfeasibleGraphError` if the equation residual exceeds ``tol`` or
    the matrix is not PSD within ``-1e-10``.
    """
    arr = validate_adjacency(v)
    n = arr.shape[0]
    system = np.kron(arr, arr) + np.eye(n * n)
    vec_a, *_ = np.linalg.lstsq(system, np.eye(n).reshape(-1), rcond=None)
    a = vec_a.reshape(n, n)
    a = 0.5 * (a + a.T)
    residual = float(np.linalg.norm(arr @ a @ arr - (np.eye(n) - a)))
    if residual > tol:
        raise InfeasibleGraphError(
            f"no solution of VAV = I - A within tolerance (residual {residual:.2e})",
            residual=residual,
        )
    min_eig = float(np.linalg.eigvalsh(a).min())
    if min_eig < -1e-10:
        raise InfeasibleGraphError(
            f"gain matrix solution is not PSD (min eigenvalue {min_eig:.2e})",
            residual=residual,
        )
    return a


def symmetric_x(a, tol: float = 1e-10) -> np.ndarray:
    """Principal symmetric PSD square root via eigendecomposition."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    if np.abs(arr - arr.T).max(initial=0.0) > tol:
        raise ValidationError("matrix must be symmetric")
    eigvals, eigvecs = np.linalg.eigh(arr)
    if eigvals.min() < -tol:
        raise ValidationError(f"matrix is not PSD (min eigenvalue {eigvals.min():.2e})")
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)[None, :]) @ eigvecs.T


def cluster_unitary(v, freedom=None) -> ClusterSolution:
    """Build a cluster-state unitary for graph ``v``.

    ``freedom`` selects a member of the solution family ``U = (I + iV) X_s O``
    (default: identity, yielding the symmetric solution).
    """
    arr = validate_adjacency(v)
    n = arr.shape[0]
    a = solve_a(arr)
    x_s = symmetric_x(a)
    if freedom is None:
        free = np.eye(n)
    else:
        free = np.asarray(freedom, dtype=float)
        if free.shape != (n, n):
            raise DimensionError(f"freedom must be {n}x{n}, got {free.shape}")
        if not is_real_orthogonal(free, 1e-9):
            raise ValidationError("freedom matrix is not real orthogonal")
    x = x_s @ free
    y = arr @ x
    return ClusterSolution(a=a, x=x, y=y, u=x + 1j * y, orthogonal_freedom=free)


def validate_cluster(u, v, tol: float = 1e-9) -> ClusterValidation:
    """Check the five cluster conditions for ``u`` against graph ``v``."""
    arr = validate_adjacency(v)
    um = as_complex_matrix(u, "u")
    if um.shape != arr.shape:
        raise DimensionError(f"shape mismatch: u {um.shape} vs adjacency {arr.shape}")
    x, y = um.real, um.imag
    eye = np.eye(arr.shape[0])
    residuals = {
        "y_equals_vx": float(np.abs(y - arr @ x).max()),
        "xxT_plus_yyT_equals_i": float(np.abs(x @ x.T + y @ y.T - eye).max()),
        "xTy_symmetric": float(np.abs(x.T @ y - y.T @ x).max()),
        "xyT_symmetric": float(np.abs(x @ y.T - y @ x.T).max()),
        "unitary": float(np.linalg.norm(um.conj().T @ um - eye)),
    }
    return ClusterValidation(
        passed=bool(max(residuals.values()) <= tol),
        residuals=residuals,
    )


def euler_orthogonal(psi: float, theta: float, phi: float) -> np.ndarray:
    """3x3 rotation from the Euler factorization R(psi) R(theta) R(phi)."""

    def _rz(angle):
        c, s = np.cos(angle), np.sin(angle)
        return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])

    c, s = np.cos(theta), np.sin(theta)
    ry = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return _rz(psi) @ ry @ _rz(phi)


def linear_cluster_3() -> np.ndarray:
    """Generator of the three-mode linear (path) cluster used by the gate programs."""
    s2, s3, s6 = np.sqrt(2.0), np.sqrt(3.0), np.sqrt(6.0)
    return np.array(
        [
            [0.0, -np.sqrt(2.0 / 3.0), -1j / s3],
            [-1j / s2, -1j / s6, -1.0 / s3],
            [-1.0 / s2, 1.0 / s6, -1j / s3],
        ]
    )


def linear_cluster_4() -> np.ndarray:
    """Generator of the four-mode linear (path) cluster state."""
    s2, s10 = np.sqrt(2.0), np.sqrt(10.0)
    return np.array(
        [
            [1 / s2, 1 / s10, 2j / s10, 0.0],
            [1j / s2, -1j / s10, 2 / s10, 0.0],
            [0.0, -2 / s10, 1j / s10, 1j / s2],
            [0.0, -2j / s10, -1 / s10, 1 / s2],
        ]
    )
