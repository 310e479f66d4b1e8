"""Two-photon coincidence probabilities and HOM visibilities.

For single photons injected into ports ``i, j`` and detected at ``k, l``::

    Q = |U_ik U_jl + U_il U_jk|^2 / (1 + delta_ij)     (indistinguishable photons)
    C = |U_ik U_jl|^2 + |U_il U_jk|^2                  (distinguishable photons)
    V = (C - Q) / C

``V > 0`` is a coincidence dip, ``V < 0`` a peak. Ports are 1-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .devices import TritterCoupling, tritter_unitary
from .exceptions import UndefinedVisibilityError, ValidationError
from .linalg import TransferMatrix

__all__ = [
    "PortPair",
    "VisibilityMatrix",
    "quantum_coincidence",
    "classical_coincidence",
    "two_photon_probability",
    "visibility",
    "visibility_matrix",
    "visibility_sweep",
]

# classical coincidence at or below this is treated as a forbidden combination
C_ZERO = 1e-20


@dataclass(frozen=True, order=True)
class PortPair:
    """Unordered pair of 1-based ports, stored with ``a <= b``."""

    a: int
    b: int

    def __post_init__(self):
        a, b = int(self.a), int(self.b)
        if a < 1 or b < 1:
            raise ValidationError(f"ports are 1-based, got ({a}, {b})")
        if a > b:
            a, b = b, a
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def of(cls, p) -> "PortPair":
        if isinstance(p, PortPair):
            return p
        a, b = p
        return cls(a, b)

    @property
    def distinct(self) -> bool:
        return self.a != self.b

    @property
    def label(self) -> str:
        return f"{self.a}{self.b}"

    def __iter__(self):
        return iter((self.a, self.b))

    def check(self, n_modes: int):
        if self.b > n_modes:
            raise ValidationError(f"port {self.b} outside 1..{n_modes}")
        return self


def distinct_pairs(n_modes: int) -> list[PortPair]:
    """All ``k < l`` port pairs in lexicographic order."""
    return [PortPair(a, b) for a, b in itertools.combinations(range(1, n_modes + 1), 2)]


@dataclass
class VisibilityMatrix:
    """Visibilities keyed by ``(input_pair, output_pair)``.

    Entries that could not be evaluated (forbidden classical combination,
    failed dip fit) are absent from ``values`` and listed in ``undefined``
    with a reason.
    """

    n_modes: int
    input_pairs: tuple = ()
    output_pairs: tuple = ()
    values: dict = field(default_factory=dict)
    uncertainties: dict | None = None
    undefined: dict = field(default_factory=dict)

    def __post_init__(self):
        self.input_pairs = tuple(PortPair.of(p) for p in self.input_pairs)
        self.output_pairs = tuple(PortPair.of(p) for p in self.output_pairs)

    @staticmethod
    def key(input_pair, output_pair) -> tuple:
        return PortPair.of(input_pair), PortPair.of(output_pair)

    def __len__(self):
        return len(self.values)

    def __contains__(self, key):
        return self.key(*key) in self.values

    def __getitem__(self, key) -> float:
        return self.values[self.key(*key)]

    def get(self, input_pair, output_pair, default=None):
        return self.values.get(self.key(input_pair, output_pair), default)

    def sigma(self, input_pair, output_pair, default=None):
        if self.uncertainties is None:
            return default
        return self.uncertainties.get(self.key(input_pair, output_pair), default)

    def keys(self):
        """Defined entries in lexicographic (input, output) order."""
        return sorted(self.values)

    def as_array(self) -> np.ndarray:
        """Dense ``(n_inputs, n_outputs)`` array with NaN for undefined entries."""
        arr = np.full((len(self.input_pairs), len(self.output_pairs)), np.nan)
        for r, ip in enumerate(self.input_pairs):
            for c, op in enumerate(self.output_pairs):
                arr[r, c] = self.values.get((ip, op), np.nan)
        return arr

    def for_input(self, input_pair) -> "VisibilityMatrix":
        """Sub-matrix holding only one input pair."""
        ip = PortPair.of(input_pair)
        vals = {k: v for k, v in self.values.items() if k[0] == ip}
        unc = None
        if self.uncertainties is not None:
            unc = {k: v for k, v in self.uncertainties.items() if k[0] == ip}
        und = {k: v for k, v in self.undefined.items() if k[0] == ip}
        return VisibilityMatrix(self.n_modes, (ip,), self.output_pairs, vals, unc, und)


def _resolve(u, in_pair, out_pair):
    if not isinstance(u, TransferMatrix):
        u = TransferMatrix(u)
    ip, op = PortPair.of(in_pair).check(u.n_modes), PortPair.of(out_pair).check(u.n_modes)
    return u.u, ip, op


def _path_amplitudes(m, ip, op):
    i, j, k, l = ip.a - 1, ip.b - 1, op.a - 1, op.b - 1
    return m[i, k] * m[j, l], m[i, l] * m[j, k]


def quantum_coincidence(u, in_pair, out_pair) -> float:
    """Coincidence probability ``Q`` for indistinguishable photons."""
    m, ip, op = _resolve(u, in_pair, out_pair)
    x, y = _path_amplitudes(m, ip, op)
    q = abs(x + y) ** 2
    return float(q / 2 if not ip.distinct else q)


def classical_coincidence(u, in_pair, out_pair) -> float:
    """Coincidence probability ``C`` for distinguishable photons."""
    m, ip, op = _resolve(u, in_pair, out_pair)
    x, y = _path_amplitudes(m, ip, op)
    return float(abs(x) ** 2 + abs(y) ** 2)


def two_photon_probability(u, in_pair, out_pair) -> float:
    """Probability of the two-photon output state, bunched outputs included.

    Uses the normalized permanent ``|perm|^2 / (n_in! n_out!)``; for distinct
    output ports this equals :func:`quantum_coincidence`.
    """
    m, ip, op = _resolve(u, in_pair, out_pair)
    x, y = _path_amplitudes(m, ip, op)
    norm = (1 + (not ip.distinct)) * (1 + (not op.distinct))
    return float(abs(x + y) ** 2 / norm)


def visibility(u, in_pair, out_pair) -> float:
    """HOM visibility ``(C - Q) / C``.

    Raises
    ------
    UndefinedVisibilityError
        If the classical coincidence vanishes.
    """
    c = classical_coincidence(u, in_pair, out_pair)
    if c <= C_ZERO:
        raise UndefinedVisibilityError(PortPair.of(in_pair), PortPair.of(out_pair), c)
    q = quantum_coincidence(u, in_pair, out_pair)
    return (c - q) / c


def visibility_matrix(u, input_pairs=None, output_pairs=None) -> VisibilityMatrix:
    """Visibilities over all distinct input pairs x distinct output pairs."""
    if not isinstance(u, TransferMatrix):
        u = TransferMatrix(u)
    n = u.n_modes
    if n < 2:
        raise ValidationError("need at least two modes")
    ins = distinct_pairs(n) if input_pairs is None else [PortPair.of(p).check(n) for p in input_pairs]
    outs = distinct_pairs(n) if output_pairs is None else [PortPair.of(p).check(n) for p in output_pairs]
    values, undefined = {}, {}
    for ip in ins:
        for op in outs:
            try:
                values[(ip, op)] = visibility(u, ip, op)
            except UndefinedVisibilityError as exc:
                undefined[(ip, op)] = str(exc)
    return VisibilityMatrix(n, tuple(ins), tuple(outs), values, None, undefined)


def visibility_sweep(ratio: float, g_max: float, points: int, beta: float = 0.0):
    """Tritter visibilities along ``g_bar`` in ``[0, g_max]`` with ``G_bar = ratio * g_bar``.

    Returns a list of ``(g_bar, VisibilityMatrix)`` on an inclusive uniform grid.
    """
    ratio, g_max = float(ratio), float(g_max)
    if not np.isfinite(ratio) or ratio < 0:
        raise ValidationError(f"ratio must be finite and >= 0, got {ratio}")
    if not np.isfinite(g_max) or g_max < 0:
        raise ValidationError(f"g_max must be finite and >= 0, got {g_max}")
    if int(points) != points or points < 2:
        raise ValidationError(f"points must be an integer >= 2, got {points}")
    out = []
    for g in np.linspace(0.0, g_max, int(points)):
        u = tritter_unitary(TritterCoupling(float(g), float(ratio * g), beta))
        out.append((float(g), visibility_matrix(u)))
    return out
