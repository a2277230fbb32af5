"""Dense-matrix utilities shared by the synthesis and simulation layers.

Conventions used throughout the package:

* complex matrices are plain ``numpy`` arrays (``complex128``);
* diagonal unitaries are stored as phase vectors (:class:`DiagonalUnitary`),
  so every diagonal entry has unit modulus by construction;
* real orthogonal matrices are plain real arrays validated with
  :func:`is_real_orthogonal`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError

#: Default tolerance for structure checks on analytically exact inputs.
DEFAULT_TOL = 1e-9

#: Selector value asking :func:`diag_sqrt_branches` for every branch.
ALL_BRANCHES = "all"


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a 2-D complex array with finite entries."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def _require_square(m: np.ndarray, name: str) -> np.ndarray:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def is_unitary(m, tol: float = DEFAULT_TOL) -> bool:
    """Check ``||M^dag M - I||_F <= tol`` for a square matrix."""
    if tol <= 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    arr = _require_square(as_complex_matrix(m, "matrix"), "matrix")
    n = arr.shape[0]
    return bool(np.linalg.norm(arr.conj().T @ arr - np.eye(n)) <= tol)


def is_real_orthogonal(m, tol: float = DEFAULT_TOL) -> bool:
    """Check that ``m`` is real (entrywise within ``tol``) and orthogonal.

    Orthogonality is measured as ``||Re(M)^T Re(M) - I||_F <= tol``; the
    determinant may be +1 or -1.
    """
    arr = _require_square(as_complex_matrix(m, "matrix"), "matrix")
    if np.abs(arr.imag).max(initial=0.0) > tol:
        return False
    r = arr.real
    n = r.shape[0]
    return bool(np.linalg.norm(r.T @ r - np.eye(n)) <= tol)


def frobenius_distance(m1, m2) -> float:
    """Frobenius distance ``||M1 - M2||_F`` between same-shape matrices."""
    a = as_complex_matrix(m1, "m1")
    b = as_complex_matrix(m2, "m2")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def wrap_angle(phi):
    """Wrap angles to the principal interval ``(-pi, pi]``."""
    w = np.mod(np.asarray(phi, dtype=float), 2 * np.pi)
    return np.where(w > np.pi, w - 2 * np.pi, w)


@dataclass(frozen=True)
class DiagonalUnitary:
    """Diagonal unitary ``diag(e^{i phi_1}, ..., e^{i phi_N})``.

    Phases are stored as angles in radians rather than complex entries, so
    unit modulus is exact by construction.
    """

    phases: np.ndarray = field()

    def __post_init__(self):
        phases = np.atleast_1d(np.asarray(self.phases, dtype=float))
        if phases.ndim != 1:
            raise DimensionError("phases must be a 1-D vector of angles")
        if not np.all(np.isfinite(phases)):
            raise ValidationError("phases contain non-finite values")
        object.__setattr__(self, "phases", phases)

    @property
    def dim(self) -> int:
        return self.phases.shape[0]

    def diagonal(self) -> np.ndarray:
        """Complex diagonal entries ``e^{i phi_k}``."""
        return np.exp(1j * self.phases)

    def matrix(self) -> np.ndarray:
        """Dense complex matrix representation."""
        return np.diag(self.diagonal())

    def conj(self) -> "DiagonalUnitary":
        return DiagonalUnitary(-self.phases)

    def inverse(self) -> "DiagonalUnitary":
        # unit modulus: inverse == conjugate
        return self.conj()

    @classmethod
    def identity(cls, n: int) -> "DiagonalUnitary":
        return cls(np.zeros(n))

    @classmethod
    def from_diagonal(cls, diag, tol: float = DEFAULT_TOL) -> "DiagonalUnitary":
        """Build from complex diagonal entries, requiring unit modulus within ``tol``."""
        z = np.atleast_1d(np.asarray(diag, dtype=complex))
        if z.ndim != 1:
            raise DimensionError("diagonal must be a 1-D vector")
        if np.abs(np.abs(z) - 1.0).max() > tol:
            raise ValidationError("diagonal entries are not unit modulus")
        return cls(np.angle(z))


def diag_sqrt_branches(d: DiagonalUnitary, selector=ALL_BRANCHES):
    """Square-root branches of a diagonal unitary.

    The principal root takes the half-angle of ``arg(d_kk)`` wrapped to
    ``(-pi, pi]``, so its phases lie in ``(-pi/2, pi/2]``. Branch bit ``k``
    flips the sign of the k-th principal entry (adds ``pi`` to its phase).
    Every branch satisfies ``Delta . Delta == D`` exactly in phase
    arithmetic.

    Parameters
    ----------
    d : DiagonalUnitary
        The diagonal unitary to take the square root of.
    selector : sequence of {0, 1} or ``ALL_BRANCHES``
        A bit-vector choosing one branch, or ``ALL_BRANCHES`` for the full
        list of ``2**N`` branches ordered as binary counting over bits.

    Returns
    -------
    DiagonalUnitary or list of DiagonalUnitary
    """
    half = wrap_angle(d.phases) / 2.0
    if isinstance(selector, str):
        if selector != ALL_BRANCHES:
            raise ValidationError(f"unknown selector {selector!r}")
        return [
            DiagonalUnitary(half + np.pi * np.asarray(bits, dtype=float))
            for bits in itertools.product((0, 1), repeat=d.dim)
        ]
    bits = np.asarray(selector, dtype=float)
    if bits.shape != (d.dim,):
        raise DimensionError(
            f"selector length {bits.shape} does not match dimension {d.dim}"
        )
    if not np.all((bits == 0) | (bits == 1)):
        raise ValidationError("selector must contain only bits 0/1")
    return DiagonalUnitary(half + np.pi * bits)


def procrustes_best_orthogonal(b) -> np.ndarray:
    """Orthogonal matrix maximizing ``trace(O B)``.

    With the singular decomposition ``B = P S Q^T`` the maximizer is
    ``O = Q P^T`` and the achieved trace equals the sum of singular values.
    The result may have determinant +1 or -1.
    """
    arr = np.asarray(b, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square real matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix contains non-finite entries")
    p, _, qt = np.linalg.svd(arr)
    return qt.T @ p.T
