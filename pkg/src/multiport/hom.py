"""Delay-scanned HOM experiments: dip synthesis with counting noise and dip fitting.

The coincidence rate as a function of relative delay is modeled as

    R(tau) = baseline * (1 - v * exp(-(tau - center)^2 / (2 width^2)))

so the far-from-center rate is the classical coincidence level and the rate
at zero delay is the quantum one; ``v`` is the visibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .exceptions import FitError, UndefinedVisibilityError, ValidationError
from .linalg import TransferMatrix
from .two_photon import C_ZERO, PortPair, VisibilityMatrix, classical_coincidence, distinct_pairs, visibility

__all__ = [
    "DipScan",
    "DipFit",
    "DipFitError",
    "dip_rate_model",
    "synthesize_scan",
    "synthesize_device_scans",
    "fit_dip",
    "fit_dip_curve",
    "fit_scans",
    "scans_to_visibility_matrix",
]


class DipFitError(FitError):
    """Dip fit failed; ``diagnostics`` carries the optimizer state."""

    def __init__(self, message, diagnostics=None, best=None):
        super().__init__(message, best=best)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True, eq=False)
class DipScan:
    """Coincidence counts recorded at a sequence of relative delays (ps)."""

    input_pair: PortPair
    output_pair: PortPair
    delays: np.ndarray
    counts: np.ndarray
    accumulation_time: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "input_pair", PortPair.of(self.input_pair))
        object.__setattr__(self, "output_pair", PortPair.of(self.output_pair))
        delays = np.array(self.delays, dtype=float)
        counts = np.array(self.counts)
        if delays.ndim != 1 or counts.shape != delays.shape:
            raise ValidationError("delays and counts must be 1-D arrays of equal length")
        if not np.all(np.isfinite(delays)) or np.any(np.diff(delays) <= 0):
            raise ValidationError("delays must be finite and strictly increasing")
        if counts.size and (np.any(counts < 0) or not np.all(np.equal(np.mod(counts, 1), 0))):
            raise ValidationError("counts must be non-negative integers")
        if not (math.isfinite(self.accumulation_time) and self.accumulation_time > 0):
            raise ValidationError("accumulation_time must be positive")
        delays.setflags(write=False)
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "counts", counts)

    @property
    def key(self):
        return self.input_pair, self.output_pair

    def __eq__(self, other):
        if not isinstance(other, DipScan):
            return NotImplemented
        return (
            self.key == other.key
            and np.array_equal(self.delays, other.delays)
            and np.array_equal(self.counts, other.counts)
            and self.accumulation_time == other.accumulation_time
        )


@dataclass(frozen=True)
class DipFit:
    visibility: float
    baseline: float
    center: float
    width: float
    uncertainties: dict
    cost: float = 0.0

    @property
    def visibility_sigma(self) -> float:
        return self.uncertainties["visibility"]


def dip_rate_model(tau, baseline, v, center, width):
    """Expected coincidence rate at delay ``tau``; vectorized over ``tau``."""
    if not width > 0:
        raise ValidationError(f"width must be positive, got {width}")
    if baseline < 0:
        raise ValidationError(f"baseline must be >= 0, got {baseline}")
    tau = np.asarray(tau, float)
    return baseline * (1.0 - v * np.exp(-((tau - center) ** 2) / (2.0 * width**2)))


def synthesize_scan(
    u,
    in_pair,
    out_pair,
    pair_rate: float,
    width: float,
    delays,
    seed=None,
    accumulation_time: float = 1.0,
) -> DipScan:
    """Poisson-sampled dip scan for one input/output combination.

    The expected count at delay ``tau`` is
    ``pair_rate * accumulation_time * C * (1 - V exp(-tau^2 / 2 width^2))``
    with ``C`` and ``V`` from the transfer matrix.
    """
    if not isinstance(u, TransferMatrix):
        u = TransferMatrix(u)
    if not (math.isfinite(pair_rate) and pair_rate > 0):
        raise ValidationError(f"pair_rate must be positive, got {pair_rate}")
    ip, op = PortPair.of(in_pair), PortPair.of(out_pair)
    c = classical_coincidence(u, ip, op)
    if c <= C_ZERO:
        raise UndefinedVisibilityError(ip, op, c)
    v = visibility(u, ip, op)
    delays = np.asarray(delays, float)
    expected = dip_rate_model(delays, pair_rate * accumulation_time * c, v, 0.0, width)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(np.clip(expected, 0.0, None))
    return DipScan(ip, op, delays, counts, accumulation_time)


def synthesize_device_scans(u, pair_rate, width, delays, seed=0, accumulation_time=1.0, input_pairs=None):
    """All distinct input x output scans; scan ``n`` is seeded with ``(seed, n)``.

    Combinations with vanishing classical coincidence are skipped.
    """
    if not isinstance(u, TransferMatrix):
        u = TransferMatrix(u)
    pairs = distinct_pairs(u.n_modes)
    ins = pairs if input_pairs is None else [PortPair.of(p) for p in input_pairs]
    scans = []
    for n, (ip, op) in enumerate((ip, op) for ip in ins for op in pairs):
        try:
            scans.append(
                synthesize_scan(u, ip, op, pair_rate, width, delays, np.random.SeedSequence([seed, n]), accumulation_time)
            )
        except UndefinedVisibilityError:
            continue
    return scans


def _initial_guess(tau, y):
    n = len(tau)
    edge = max(2, n // 8)
    baseline = float(np.mean(np.concatenate([y[:edge], y[-edge:]])))
    baseline = max(baseline, 1.0)
    dev = baseline - y
    i0 = int(np.argmax(np.abs(dev)))
    center = float(tau[i0])
    v = float(dev[i0] / baseline)
    span = float(tau[-1] - tau[0])
    area = float(np.trapezoid(dev, tau)) if hasattr(np, "trapezoid") else float(np.trapz(dev, tau))
    width = span / 10
    if abs(v) > 1e-3 and area * v > 0:
        width = area / (baseline * v * math.sqrt(2 * math.pi))
    step = float(np.min(np.diff(tau)))
    width = min(max(width, step), span / 4)
    return np.array([baseline, np.clip(v, -1.9, 1.9), center, width])


def fit_dip(scan: DipScan) -> DipFit:
    """Weighted least-squares fit of :func:`dip_rate_model` to a scan.

    Residuals are weighted by ``1 / sqrt(max(count, 1))``. Standard errors
    come from the Gauss-Newton curvature ``(J^T J)^-1`` at the optimum.
    The width is bounded to a quarter of the scanned range so the scan
    always covers at least four widths.
    """
    return fit_dip_curve(scan.delays, scan.counts)


def fit_dip_curve(delays, counts) -> DipFit:
    """Same as :func:`fit_dip` on raw arrays; ``counts`` may be non-integer expected rates."""
    tau = np.asarray(delays, float)
    y = np.asarray(counts, float)
    if tau.ndim != 1 or y.shape != tau.shape:
        raise ValidationError("delays and counts must be 1-D arrays of equal length")
    if np.any(np.diff(tau) <= 0):
        raise ValidationError("delays must be strictly increasing")
    if len(tau) < 8:
        raise DipFitError(f"need >= 8 delay points, got {len(tau)}")
    span = float(tau[-1] - tau[0])
    step = float(np.min(np.diff(tau)))
    sw = 1.0 / np.sqrt(np.maximum(y, 1.0))
    x0 = _initial_guess(tau, y)

    def residuals(p):
        base, v, c, w = p
        return (base * (1.0 - v * np.exp(-((tau - c) ** 2) / (2.0 * w * w))) - y) * sw

    lo = [1e-12, -2.0, tau[0], step / 2]
    hi = [np.inf, 2.0, tau[-1], span / 4]
    x0 = np.clip(x0, np.array(lo) + 1e-9, np.array(hi) - 1e-9)
    res = least_squares(residuals, x0, bounds=(lo, hi), method="trf", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=5000)
    diag = {"status": int(res.status), "message": res.message, "nfev": int(res.nfev), "x": res.x.tolist()}
    if res.status <= 0:
        raise DipFitError("dip fit did not converge", diag)
    base, v, c, w = res.x
    if not base > 0:
        raise DipFitError("fitted baseline is not positive", diag)
    jac = res.jac
    cov = np.linalg.pinv(jac.T @ jac)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    unc = dict(zip(("baseline", "visibility", "center", "width"), map(float, se)))
    return DipFit(float(v), float(base), float(c), float(w), unc, float(2 * res.cost))


def fit_scans(scans):
    """Fit each scan; returns ``(scan, DipFit or DipFitError)`` pairs in input order."""
    out = []
    for s in scans:
        try:
            out.append((s, fit_dip(s)))
        except DipFitError as exc:
            out.append((s, exc))
    return out


def scans_to_visibility_matrix(scans, n_modes: int | None = None, fits=None) -> VisibilityMatrix:
    """Fit every scan and collect visibilities with their standard errors.

    ``fits`` may carry the output of :func:`fit_scans` for the same scans to
    avoid refitting.
    """
    scans = list(scans)
    keys = [s.key for s in scans]
    if len(set(keys)) != len(keys):
        raise ValidationError("duplicate (input_pair, output_pair) among scans")
    if n_modes is None:
        n_modes = max((max(ip.b, op.b) for ip, op in keys), default=0)
    values, unc, undefined = {}, {}, {}
    for s, fit in fits if fits is not None else fit_scans(scans):
        if isinstance(fit, DipFitError):
            undefined[s.key] = str(fit)
            continue
        values[s.key] = fit.visibility
        unc[s.key] = fit.visibility_sigma
    ins = tuple(sorted({k[0] for k in keys}))
    outs = tuple(sorted({k[1] for k in keys}))
    return VisibilityMatrix(n_modes, ins, outs, values, unc, undefined)
