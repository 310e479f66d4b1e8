"""Device builders: the isosceles tritter and the four-coupler four-port."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .linalg import CouplingMatrix, TransferMatrix, as_complex_matrix, expm_hermitian

__all__ = [
    "TritterCoupling",
    "FourPortParams",
    "tritter_coupling_matrix",
    "tritter_unitary",
    "beamsplitter_matrix",
    "phase_matrix",
    "fourport_composed",
    "fourport_closed_form",
    "symmetric_tritter_reference",
    "tritter_intensities_batch",
    "fourport_intensities",
]

COUPLING_MAX = 4 * math.pi


def wrap_phase(phi: float) -> float:
    """Map an angle to ``[-pi, pi)``."""
    return (phi + math.pi) % (2 * math.pi) - math.pi


@dataclass(frozen=True)
class TritterCoupling:
    """Effective couplings of the isosceles three-waveguide region.

    ``g_bar`` couples waveguides 1-2 and 2-3, ``G_bar`` couples 1-3; both are
    dimensionless (coupling x length / phase velocity). ``beta`` is the common
    propagation phase and only contributes a global phase.
    """

    g_bar: float
    G_bar: float
    beta: float = 0.0

    def __post_init__(self):
        for name in ("g_bar", "G_bar", "beta"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValidationError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)
        for name in ("g_bar", "G_bar"):
            val = getattr(self, name)
            if not 0.0 <= val <= COUPLING_MAX:
                raise ValidationError(f"{name} must lie in [0, 4*pi], got {val}")


@dataclass(frozen=True)
class FourPortParams:
    """Coupler reflectivity ``eta`` and inner-arm phase ``phi`` (radians, wrapped to [-pi, pi))."""

    eta: float
    phi: float = 0.0

    def __post_init__(self):
        eta, phi = float(self.eta), float(self.phi)
        if not 0.0 <= eta <= 1.0:
            raise ValidationError(f"eta must lie in [0, 1], got {eta}")
        if not math.isfinite(phi):
            raise ValidationError(f"phi must be finite, got {phi}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "phi", wrap_phase(phi))


def _coupling(p) -> TritterCoupling:
    if isinstance(p, TritterCoupling):
        return p
    return TritterCoupling(*p)


def _fourport(p) -> FourPortParams:
    if isinstance(p, FourPortParams):
        return p
    return FourPortParams(*p)


def tritter_coupling_matrix(p) -> CouplingMatrix:
    """Return ``[[b, g, G], [g, b, g], [G, g, b]]`` for a :class:`TritterCoupling`."""
    p = _coupling(p)
    g, G, b = p.g_bar, p.G_bar, p.beta
    return CouplingMatrix(np.array([[b, g, G], [g, b, g], [G, g, b]], dtype=complex))


def tritter_unitary(p) -> TransferMatrix:
    """Transfer matrix of the tritter; the interaction length is folded into the couplings."""
    return expm_hermitian(tritter_coupling_matrix(p), 1.0)


def tritter_intensities_batch(g_bar, G_bar) -> np.ndarray:
    """Vectorized ``|U|**2`` of the tritter over arrays of couplings.

    Uses the isosceles block structure: ``(e1 - e3)/sqrt(2)`` is an eigenvector
    with eigenvalue ``-G``; ``(e1 + e3)/sqrt(2)`` and ``e2`` span the 2x2 block
    ``[[G, sqrt(2) g], [sqrt(2) g, 0]]``, exponentiated in closed form.

    Returns an array of shape ``broadcast(g_bar, G_bar).shape + (3, 3)``.
    """
    g, G = np.broadcast_arrays(np.asarray(g_bar, float), np.asarray(G_bar, float))
    half = G / 2
    omega = np.sqrt(half**2 + 2 * g**2)
    cos, sinc = np.cos(omega), np.sinc(omega / np.pi)
    ph = np.exp(-1j * half)
    a_ss = ph * (cos - 1j * sinc * half)
    a_sm = ph * (-1j * sinc * np.sqrt(2) * g)
    a_mm = ph * (cos + 1j * sinc * half)
    anti = np.exp(1j * G)
    p11 = np.abs((a_ss + anti) / 2) ** 2
    p13 = np.abs((a_ss - anti) / 2) ** 2
    p12 = np.abs(a_sm) ** 2 / 2
    p22 = np.abs(a_mm) ** 2
    rows = [
        np.stack([p11, p12, p13], -1),
        np.stack([p12, p22, p12], -1),
        np.stack([p13, p12, p11], -1),
    ]
    return np.stack(rows, -2)


def tritter_intensity_terms(g_bar: float, G_bar: float):
    """Scalar ``(|U11|^2, |U12|^2, |U13|^2, |U22|^2)`` by the same block reduction."""
    half = G_bar / 2
    omega = math.sqrt(half * half + 2 * g_bar * g_bar)
    sinc = math.sin(omega) / omega if omega > 0 else 1.0
    cos = math.cos(omega)
    ph = cmath.exp(-1j * half)
    a_ss = ph * complex(cos, -sinc * half)
    a_mm = ph * complex(cos, sinc * half)
    anti = cmath.exp(1j * G_bar)
    p12 = (sinc * g_bar) ** 2
    return abs((a_ss + anti) / 2) ** 2, p12, abs((a_ss - anti) / 2) ** 2, abs(a_mm) ** 2


def _check_modes(i, j, n_modes):
    if n_modes < 2:
        raise ValidationError(f"n_modes must be >= 2, got {n_modes}")
    for idx in (i, j):
        if not 1 <= idx <= n_modes:
            raise ValidationError(f"mode index {idx} outside 1..{n_modes}")
    if i == j:
        raise ValidationError("beamsplitter needs two distinct modes")


def _beamsplitter_operator(i, j, eta, n_modes) -> np.ndarray:
    _check_modes(i, j, n_modes)
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"eta must lie in [0, 1], got {eta}")
    m = np.eye(n_modes, dtype=complex)
    t, r = math.sqrt(eta), math.sqrt(1.0 - eta)
    a, b = i - 1, j - 1
    m[a, a] = m[b, b] = t
    m[a, b] = m[b, a] = -1j * r
    return m


def beamsplitter_matrix(i: int, j: int, eta: float, n_modes: int) -> TransferMatrix:
    """Directional coupler on 1-based modes ``i, j`` embedded in ``n_modes`` modes.

    The 2x2 block is ``[[sqrt(eta), -i sqrt(1-eta)], [-i sqrt(1-eta), sqrt(eta)]]``,
    which is symmetric, so the transfer and operator forms agree.
    """
    return TransferMatrix.from_operator(_beamsplitter_operator(i, j, float(eta), n_modes))


def phase_matrix(j: int, phi: float, n_modes: int) -> TransferMatrix:
    """Phase ``exp(+i phi)`` on 1-based mode ``j``.

    The positive sign is the one for which the coupler product reproduces the
    closed-form four-port matrix entry by entry.
    """
    if not 1 <= j <= n_modes:
        raise ValidationError(f"mode index {j} outside 1..{n_modes}")
    m = np.eye(n_modes, dtype=complex)
    m[j - 1, j - 1] = np.exp(1j * phi)
    return TransferMatrix.from_operator(m)


def fourport_composed(p) -> TransferMatrix:
    """Four-port built as ``B24 B13 P2 P3 B34 B12`` (rightmost acts first) on mode operators."""
    p = _fourport(p)
    e, n = p.eta, 4
    ops = [
        _beamsplitter_operator(2, 4, e, n),
        _beamsplitter_operator(1, 3, e, n),
        phase_matrix(2, p.phi, n).operator,
        phase_matrix(3, p.phi, n).operator,
        _beamsplitter_operator(3, 4, e, n),
        _beamsplitter_operator(1, 2, e, n),
    ]
    m = np.eye(n, dtype=complex)
    for op in ops:
        m = m @ op
    return TransferMatrix.from_operator(m)


def fourport_closed_form(p) -> TransferMatrix:
    """Closed-form four-port transfer matrix (row = input port)."""
    p = _fourport(p)
    e = p.eta
    r = math.sqrt((1.0 - e) * e)
    f = np.exp(1j * p.phi)
    u = np.array(
        [
            [e, -1j * f * r, -1j * r, f * (e - 1)],
            [-1j * r, f * e, e - 1, -1j * f * r],
            [-1j * f * r, e - 1, f * e, -1j * r],
            [f * (e - 1), -1j * r, -1j * f * r, e],
        ],
        dtype=complex,
    )
    return TransferMatrix(u, tol=1e-12)


def fourport_intensities(eta: float) -> np.ndarray:
    """``|U|**2`` of the four-port; independent of ``phi``."""
    e = float(eta)
    d, x, c = e * e, e * (1 - e), (1 - e) ** 2
    return np.array([[d, x, x, c], [x, d, c, x], [x, c, d, x], [c, x, x, d]])


def symmetric_tritter_reference() -> TransferMatrix:
    """Discrete-Fourier tritter ``omega**(j k) / sqrt(3)``, ``omega = exp(2 pi i / 3)``."""
    jk = np.outer(np.arange(3), np.arange(3))
    return TransferMatrix(np.exp(2j * np.pi * jk / 3) / math.sqrt(3), tol=1e-14)


def custom_transfer_matrix(u) -> TransferMatrix:
    """Wrap a user-supplied unitary (row = input port)."""
    return TransferMatrix(as_complex_matrix(u, "u"))
