"""Deterministic grid search followed by bounded Nelder-Mead refinement."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import minimize

PENALTY = 1e300


@dataclass(eq=False)
class Candidate:
    x: np.ndarray
    fun: float
    nit: int
    nfev: int
    success: bool


def _finite(f):
    def wrapped(x):
        val = f(np.asarray(x, float))
        return float(val) if np.isfinite(val) else PENALTY

    return wrapped


def grid_minima(values: np.ndarray, axes, n_starts: int):
    """Indices of the ``n_starts`` best local minima of a gridded objective."""
    vals = np.where(np.isfinite(values), values, PENALTY)
    is_min = vals == minimum_filter(vals, size=3, mode="nearest")
    idx = [tuple(int(i) for i in t) for t in zip(*np.nonzero(is_min))]
    if not idx:
        idx = [tuple(int(i) for i in np.unravel_index(np.argmin(vals), vals.shape))]
    pts = [np.array([ax[i] for ax, i in zip(axes, t)]) for t in idx]
    order = sorted(range(len(idx)), key=lambda n: (vals[idx[n]], tuple(pts[n])))
    return [pts[n] for n in order[:n_starts]]


def grid_then_simplex(
    objective,
    axes,
    bounds,
    batch_objective=None,
    n_starts: int = 8,
    xatol: float = 1e-10,
    fatol: float = 1e-12,
    max_iter: int = 4000,
    merge_tol: float = 1e-6,
):
    """Minimize ``objective`` over a box.

    Parameters
    ----------
    objective : callable
        Maps a 1-D parameter vector to a float.
    axes : sequence of 1-D arrays
        Grid coordinates per parameter; the full tensor grid is evaluated.
    bounds : sequence of (lo, hi)
    batch_objective : callable, optional
        Vectorized objective taking one broadcast array per parameter.

    Returns
    -------
    list of Candidate
        Distinct refined minima, sorted by objective then parameters.
    """
    f = _finite(objective)
    axes = [np.asarray(a, float) for a in axes]
    if batch_objective is not None:
        mesh = np.meshgrid(*axes, indexing="ij")
        with np.errstate(all="ignore"):
            grid_vals = np.asarray(batch_objective(*mesh), float)
    else:
        grid_vals = np.empty([len(a) for a in axes])
        for idx in itertools.product(*(range(len(a)) for a in axes)):
            grid_vals[idx] = f(np.array([a[i] for a, i in zip(axes, idx)]))

    found: list[Candidate] = []
    for x0 in grid_minima(grid_vals, axes, n_starts):
        # objective round-off scales with its magnitude; an absolute fatol below it never triggers
        ftol = fatol * max(1.0, abs(f(x0)))
        res = minimize(
            f,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": xatol, "fatol": ftol, "maxiter": max_iter, "maxfev": 2 * max_iter},
        )
        cand = Candidate(np.asarray(res.x, float), float(res.fun), int(res.nit), int(res.nfev), bool(res.success))
        dup = next((c for c in found if np.max(np.abs(c.x - cand.x)) < merge_tol), None)
        if dup is None:
            found.append(cand)
        elif (cand.fun, tuple(cand.x)) < (dup.fun, tuple(dup.x)):
            found[next(i for i, c in enumerate(found) if c is dup)] = cand
    found.sort(key=lambda c: (c.fun, tuple(c.x)))
    return found


def numerical_hessian(f, x, step=1e-5):
    """Central-difference Hessian of a scalar function."""
    x = np.asarray(x, float)
    n = x.size
    h = step * np.maximum(1.0, np.abs(x))
    hess = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        hess[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return hess
