"""Independent reference computations used to check the package.

Nothing here imports from ``multiport``; each function recomputes a quantity
from first principles with a different method than the library uses.
"""

import itertools
import math
from collections import defaultdict

import numpy as np
from scipy.linalg import expm


def tritter_operator_expm(g, G):
    """Mode-operator matrix exp(-i C) via scipy's Pade expm."""
    c = np.array([[0, g, G], [g, 0, g], [G, g, 0]], dtype=float)
    return expm(-1j * c)


def tritter_intensity_expm(g, G):
    m = tritter_operator_expm(g, G)
    return np.abs(m.T) ** 2


def fourport_entries(eta, phi):
    """Closed-form four-port matrix typed in entry by entry (row = input)."""
    s = math.sqrt((1 - eta) * eta)
    f = np.exp(1j * phi)
    return np.array(
        [
            [eta, -1j * f * s, -1j * s, f * (eta - 1)],
            [-1j * s, f * eta, eta - 1, -1j * f * s],
            [-1j * f * s, eta - 1, f * eta, -1j * s],
            [f * (eta - 1), -1j * s, -1j * f * s, eta],
        ]
    )


def fock_output_distribution(u, inputs):
    """Output-state probabilities for photons injected at ``inputs`` (0-based).

    Builds the output polynomial prod_i (sum_k u[i,k] b_k^dag) term by term and
    normalizes with the bosonic factors sqrt(prod n_k!) / sqrt(prod m_i!).
    """
    u = np.asarray(u)
    n = u.shape[1]
    amps = defaultdict(complex)
    for outs in itertools.product(range(n), repeat=len(inputs)):
        coeff = 1.0 + 0j
        for i, k in zip(inputs, outs):
            coeff *= u[i, k]
        amps[tuple(sorted(outs))] += coeff
    in_norm = math.prod(math.factorial(inputs.count(i)) for i in set(inputs))
    probs = {}
    for state, a in amps.items():
        occ = math.prod(math.factorial(state.count(k)) for k in set(state))
        probs[state] = abs(a) ** 2 * occ / in_norm
    return probs


def coincidence_visibility(u, i, j, k, l):
    """Visibility from the Fock-space oracle: distinguishable vs indistinguishable rate."""
    u = np.asarray(u)
    quantum = fock_output_distribution(u, [i, j]).get(tuple(sorted((k, l))), 0.0)
    classical = abs(u[i, k] * u[j, l]) ** 2 + abs(u[i, l] * u[j, k]) ** 2
    return (classical - quantum) / classical


def random_unitary(n, rng):
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
