"""Coupling matrices, transfer matrices and the exponential linking them.

Index convention
----------------
``TransferMatrix.u[j, k]`` is the amplitude for a photon entering port ``j``
to leave through port ``k`` (row = input, column = output). All observables
(intensities ``|u[j, k]|**2``, coincidence probabilities) read it this way.

The mode-operator matrix ``M`` acting on column vectors, ``b = M a``, is the
transpose: ``M = u.T``. Heisenberg evolution ``da/dz = -i C a`` produces
``M = exp(-i C L)``; use :meth:`TransferMatrix.from_operator` to convert.
For the real-symmetric couplings used by the devices here both conventions
coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

UNITARITY_TOL = 1e-10
HERMITIAN_TOL = 1e-12


def as_complex_matrix(a, name="matrix") -> np.ndarray:
    """Validate ``a`` as a finite 2-D complex array and return a copy."""
    arr = np.array(a, dtype=complex)
    if arr.ndim != 2 or arr.size == 0:
        raise ValidationError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def _as_square(a, name) -> np.ndarray:
    arr = as_complex_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def unitarity_deviation(u) -> float:
    """Return ``max |U^dagger U - I|`` for a square matrix."""
    arr = _as_square(u, "u")
    return float(np.max(np.abs(arr.conj().T @ arr - np.eye(arr.shape[0]))))


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Unitary N x N transfer matrix in row-input / column-output convention.

    Construction validates unitarity to ``tol``; the stored array is read-only.
    """

    u: np.ndarray
    tol: float = UNITARITY_TOL

    def __post_init__(self):
        arr = _as_square(self.u, "transfer matrix")
        dev = unitarity_deviation(arr)
        if dev > self.tol:
            raise ValidationError(f"transfer matrix is not unitary: max|U'U - I| = {dev:.3e}")
        object.__setattr__(self, "u", _freeze(arr))

    @classmethod
    def from_operator(cls, m, tol=UNITARITY_TOL) -> "TransferMatrix":
        """Build from a mode-operator matrix ``M`` with ``b = M a``."""
        return cls(np.asarray(m, dtype=complex).T, tol=tol)

    @property
    def n_modes(self) -> int:
        return self.u.shape[0]

    @property
    def operator(self) -> np.ndarray:
        """Mode-operator matrix ``M = u.T``."""
        return self.u.T

    @property
    def intensities(self) -> np.ndarray:
        """Classical splitting ratios ``|u[j, k]|**2`` (row = input)."""
        return np.abs(self.u) ** 2

    def amplitude(self, i: int, k: int) -> complex:
        """Amplitude between 1-based input ``i`` and output ``k``."""
        return complex(self.u[i - 1, k - 1])

    def __eq__(self, other):
        if not isinstance(other, TransferMatrix):
            return NotImplemented
        return np.array_equal(self.u, other.u)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.u, dtype=dtype)


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Hermitian coupling matrix ``C`` of the coupled-mode equations.

    Entries are dimensionless effective couplings (strength x length / phase
    velocity) so that a unit propagation length gives the device operator.
    """

    c: np.ndarray

    def __post_init__(self):
        arr = _as_square(self.c, "coupling matrix")
        dev = float(np.max(np.abs(arr - arr.conj().T)))
        if dev > HERMITIAN_TOL:
            raise ValidationError(f"coupling matrix is not Hermitian: max|C - C'| = {dev:.3e}")
        object.__setattr__(self, "c", _freeze(arr))

    @property
    def n_modes(self) -> int:
        return self.c.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.c, dtype=dtype)


def expm_hermitian(c, length: float = 1.0) -> TransferMatrix:
    """Propagate through a uniform coupling region.

    Computes the mode operator ``exp(-i C L)`` from the eigendecomposition of
    the Hermitian ``C``, ``sum_k exp(-i lambda_k L) v_k v_k^dagger``.

    Parameters
    ----------
    c : CouplingMatrix or array_like
        Hermitian coupling matrix.
    length : float
        Effective propagation length, finite and non-negative.

    Returns
    -------
    TransferMatrix
    """
    if not isinstance(c, CouplingMatrix):
        c = CouplingMatrix(c)
    length = float(length)
    if not np.isfinite(length) or length < 0:
        raise ValidationError(f"length must be finite and >= 0, got {length}")
    w, v = np.linalg.eigh(c.c)
    m = (v * np.exp(-1j * w * length)) @ v.conj().T
    return TransferMatrix.from_operator(m)


def check_unitarity(u) -> float:
    """Return ``max |U^dagger U - I|``; accepts a TransferMatrix or any square array."""
    if isinstance(u, TransferMatrix):
        u = u.u
    return unitarity_deviation(u)


def matmul(a, b) -> np.ndarray:
    """Complex matrix product with shape validation."""
    a = as_complex_matrix(a, "a")
    b = as_complex_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValidationError(f"shape mismatch: {a.shape} @ {b.shape}")
    return a @ b
