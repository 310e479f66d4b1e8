"""Classical characterization from port-to-port intensities under unknown losses.

A port-to-port intensity ``N[j, k] = e_in[j] e_out[k] M |U[j, k]|^2`` depends on
unknown facet losses, but the ratio

    F(j, r; k, s) = N[j, k] N[r, s] / (N[r, k] N[j, s])

does not. Device parameters are found by weighted least squares on these
ratios (the Gaussian maximum-likelihood estimate), using a deterministic grid
followed by Nelder-Mead refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._optimize import grid_then_simplex, numerical_hessian
from .devices import fourport_closed_form, fourport_intensities, tritter_intensities_batch, tritter_intensity_terms
from .exceptions import FitError, UnderdeterminedFitError, ValidationError
from .linalg import TransferMatrix
from .two_photon import PortPair, VisibilityMatrix, visibility

__all__ = [
    "IntensityRecord",
    "IntensityDataset",
    "FractionEntry",
    "FractionSet",
    "FitResult",
    "MissingRecordError",
    "TRITTER_FRACTIONS",
    "FOURPORT_FRACTIONS",
    "predict_intensities",
    "add_intensity_noise",
    "compute_fractions",
    "model_fractions",
    "fit_tritter",
    "fit_fourport_eta",
    "fit_fourport_phi",
]

# (j, r, k, s): inputs j, r and outputs k, s, all 1-based
TRITTER_FRACTIONS = ((1, 2, 1, 2), (1, 3, 1, 3), (2, 3, 2, 3))
FOURPORT_FRACTIONS = ((1, 2, 1, 2), (1, 3, 1, 3), (1, 4, 1, 4), (2, 3, 2, 3), (2, 4, 2, 4), (3, 4, 3, 4))

DEGENERATE_FRACTION = 1e-12
PHI_SENSITIVITY = 1e-9


class MissingRecordError(ValidationError):
    """An intensity record needed for a ratio is absent or unusable."""

    def __init__(self, input_port, output_port, reason):
        self.input_port = input_port
        self.output_port = output_port
        super().__init__(f"intensity record (input {input_port}, output {output_port}): {reason}")


@dataclass(frozen=True)
class IntensityRecord:
    input_port: int
    output_port: int
    mean: float
    std: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.mean) and self.mean >= 0):
            raise ValidationError(f"mean power must be finite and >= 0, got {self.mean}")
        if not (math.isfinite(self.std) and self.std >= 0):
            raise ValidationError(f"std must be finite and >= 0, got {self.std}")


@dataclass(frozen=True)
class IntensityDataset:
    """Measured classical powers, one record per (input, output) port pair."""

    n_modes: int
    records: tuple

    def __post_init__(self):
        recs = tuple(r if isinstance(r, IntensityRecord) else IntensityRecord(*r) for r in self.records)
        seen = set()
        for r in recs:
            for p in (r.input_port, r.output_port):
                if not 1 <= p <= self.n_modes:
                    raise ValidationError(f"port {p} outside 1..{self.n_modes}")
            key = (r.input_port, r.output_port)
            if key in seen:
                raise ValidationError(f"duplicate intensity record for {key}")
            seen.add(key)
        object.__setattr__(self, "records", recs)

    @classmethod
    def from_matrix(cls, means, stds=None) -> "IntensityDataset":
        """Build from an ``(n, n)`` array with rows = input ports."""
        means = np.asarray(means, float)
        if means.ndim != 2 or means.shape[0] != means.shape[1]:
            raise ValidationError(f"intensity matrix must be square, got {means.shape}")
        stds = np.zeros_like(means) if stds is None else np.asarray(stds, float)
        n = means.shape[0]
        recs = [
            IntensityRecord(j + 1, k + 1, float(means[j, k]), float(stds[j, k]))
            for j in range(n)
            for k in range(n)
        ]
        return cls(n, tuple(recs))

    def lookup(self, input_port, output_port) -> IntensityRecord | None:
        for r in self.records:
            if r.input_port == input_port and r.output_port == output_port:
                return r
        return None

    def as_matrix(self):
        """``(means, stds)`` arrays with NaN where a record is missing."""
        means = np.full((self.n_modes, self.n_modes), np.nan)
        stds = np.full_like(means, np.nan)
        for r in self.records:
            means[r.input_port - 1, r.output_port - 1] = r.mean
            stds[r.input_port - 1, r.output_port - 1] = r.std
        return means, stds


@dataclass(frozen=True)
class FractionEntry:
    j: int
    r: int
    k: int
    s: int
    value: float
    sigma: float = 0.0

    @property
    def indices(self):
        return (self.j, self.r, self.k, self.s)


@dataclass(frozen=True)
class FractionSet:
    entries: tuple

    def __post_init__(self):
        ents = tuple(e if isinstance(e, FractionEntry) else FractionEntry(*e) for e in self.entries)
        for e in ents:
            if e.j == e.r or e.k == e.s:
                raise ValidationError(f"fraction {e.indices} needs distinct inputs and outputs")
            if not (math.isfinite(e.value) and e.value > 0):
                raise ValidationError(f"fraction {e.indices} must be positive, got {e.value}")
            if not (math.isfinite(e.sigma) and e.sigma >= 0):
                raise ValidationError(f"fraction {e.indices} has invalid sigma {e.sigma}")
        object.__setattr__(self, "entries", ents)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, indices) -> FractionEntry | None:
        indices = tuple(indices)
        return next((e for e in self.entries if e.indices == indices), None)

    def subset(self, requested) -> "FractionSet":
        missing = [tuple(q) for q in requested if self.get(q) is None]
        if missing:
            raise ValidationError(f"fraction set lacks required entries {missing}")
        return FractionSet(tuple(self.get(q) for q in requested))


@dataclass
class FitResult:
    """Outcome of a characterization fit."""

    parameters: dict
    objective_value: float
    iterations: int
    converged: bool
    covariance_estimate: np.ndarray | None = None
    weighted: bool = True
    ambiguous: bool = False
    alternatives: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def standard_errors(self) -> dict | None:
        if self.covariance_estimate is None:
            return None
        diag = np.diag(self.covariance_estimate)
        return {k: float(np.sqrt(v)) if v >= 0 else float("nan") for k, v in zip(self.parameters, diag)}


def predict_intensities(u, losses_in=None, losses_out=None, source_power: float = 1.0) -> IntensityDataset:
    """Noiseless output powers for every (input, output) pair under the loss model."""
    if not isinstance(u, TransferMatrix):
        u = TransferMatrix(u)
    n = u.n_modes
    if not (math.isfinite(source_power) and source_power > 0):
        raise ValidationError(f"source power must be positive, got {source_power}")
    e_in = np.ones(n) if losses_in is None else np.asarray(losses_in, float)
    e_out = np.ones(n) if losses_out is None else np.asarray(losses_out, float)
    for name, e in (("losses_in", e_in), ("losses_out", e_out)):
        if e.shape != (n,):
            raise ValidationError(f"{name} must have length {n}")
        if np.any(~np.isfinite(e)) or np.any(e <= 0) or np.any(e > 1):
            raise ValidationError(f"{name} must lie in (0, 1]")
    means = e_in[:, None] * e_out[None, :] * source_power * u.intensities
    return IntensityDataset.from_matrix(means)


def add_intensity_noise(data: IntensityDataset, rel_noise: float, rng) -> IntensityDataset:
    """Apply Gaussian relative noise and record ``std = rel_noise * mean``."""
    rng = np.random.default_rng(rng)
    recs = []
    for r in data.records:
        mean = max(r.mean * (1.0 + rel_noise * rng.standard_normal()), 0.0)
        recs.append(IntensityRecord(r.input_port, r.output_port, mean, rel_noise * r.mean))
    return IntensityDataset(data.n_modes, tuple(recs))


def compute_fractions(data: IntensityDataset, requested=TRITTER_FRACTIONS) -> FractionSet:
    """Loss-free ratios with first-order error propagation.

    ``(sigma_F / F)^2`` is the sum of ``(sigma_N / N)^2`` over the four records.
    """
    requested = [tuple(int(x) for x in q) for q in requested]
    peak = max((r.mean for r in data.records), default=0.0)
    floor = DEGENERATE_FRACTION * peak
    entries = []
    for j, r, k, s in requested:
        if j == r or k == s:
            raise ValidationError(f"fraction {(j, r, k, s)} needs distinct inputs and outputs")
        recs = []
        for a, b in ((j, k), (r, s), (r, k), (j, s)):
            rec = data.lookup(a, b)
            if rec is None:
                raise MissingRecordError(a, b, "missing")
            if rec.mean <= floor:
                raise MissingRecordError(a, b, f"mean {rec.mean:.3g} is degenerate (<= 1e-12 of max)")
            recs.append(rec)
        n_jk, n_rs, n_rk, n_js = (x.mean for x in recs)
        value = (n_jk * n_rs) / (n_rk * n_js)
        rel2 = sum((x.std / x.mean) ** 2 for x in recs)
        entries.append(FractionEntry(j, r, k, s, value, value * math.sqrt(rel2)))
    return FractionSet(tuple(entries))


def model_fractions(intensity, requested) -> np.ndarray:
    """Ratios from model intensities; ``intensity`` may carry leading batch axes."""
    p = np.asarray(intensity, float)
    out = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for j, r, k, s in requested:
            j, r, k, s = j - 1, r - 1, k - 1, s - 1
            out.append(p[..., j, k] * p[..., r, s] / (p[..., r, k] * p[..., j, s]))
    return np.stack(out, -1)


def _weights(sigmas, what):
    sigmas = np.asarray(sigmas, float)
    if np.all(sigmas > 0):
        return 1.0 / sigmas, True
    if np.all(sigmas == 0):
        return np.ones_like(sigmas), False
    raise ValidationError(f"{what}: uncertainties must be all positive or all zero")


def _select(cands, names, weighted, what):
    """Pick the lowest-order minimum among statistically equivalent candidates."""
    if not cands:
        raise FitError(f"{what}: optimizer produced no candidates")
    best = cands[0]
    slack = 1.0 if weighted else 1e-12
    threshold = max(2.0 * best.fun, best.fun + slack)
    tied = [c for c in cands if c.fun <= threshold]
    chosen = min(tied, key=lambda c: (float(np.sum(c.x)), c.fun, tuple(c.x)))
    alts = [
        {"parameters": dict(zip(names, map(float, c.x))), "objective_value": c.fun}
        for c in tied
        if c is not chosen
    ]
    return chosen, alts


def _finish(chosen, alts, names, objective, bounds, weighted, what, notes=()):
    params = dict(zip(names, map(float, chosen.x)))
    if not chosen.success:
        partial = FitResult(params, chosen.fun, chosen.nit, False, weighted=weighted)
        raise FitError(f"{what}: no convergence within the iteration budget", best=partial)
    cov = None
    if weighted:
        step = 1e-5
        x = chosen.x
        inside = all(lo + 3 * step < xi < hi - 3 * step for xi, (lo, hi) in zip(x, bounds))
        if inside:
            hess = numerical_hessian(objective, x, step)
            try:
                cov = 2.0 * np.linalg.inv(hess)
            except np.linalg.LinAlgError:
                cov = None
    return FitResult(
        params,
        chosen.fun,
        chosen.nit,
        True,
        covariance_estimate=cov,
        weighted=weighted,
        ambiguous=bool(alts),
        alternatives=alts,
        notes=list(notes),
    )


def fit_tritter(fractions: FractionSet, grid_points: int = 64, xatol: float = 1e-10, max_iter: int = 4000) -> FitResult:
    """Fit ``(g_bar, G_bar)`` in ``[0, pi]^2`` to the three tritter ratios.

    The ratios admit several exact solutions in the box (coupling is periodic
    in effect). Among minima whose objective is statistically equivalent to
    the best one, the lowest-order solution (smallest ``g_bar + G_bar``) is
    returned; the others are listed in ``alternatives``.
    """
    fr = fractions.subset(TRITTER_FRACTIONS)
    meas = np.array([e.value for e in fr])
    w, weighted = _weights([e.sigma for e in fr], "fit_tritter")

    def batch(g, G):
        model = model_fractions(tritter_intensities_batch(g, G), TRITTER_FRACTIONS)
        return np.sum(((model - meas) * w) ** 2, -1)

    m12, m13, m23 = meas
    w12, w13, w23 = w

    def objective(x):
        p11, p12, p13, p22 = tritter_intensity_terms(x[0], x[1])
        try:
            f12 = p11 * p22 / (p12 * p12)
            f13 = p11 * p11 / (p13 * p13)
        except ZeroDivisionError:
            return math.inf
        return ((f12 - m12) * w12) ** 2 + ((f13 - m13) * w13) ** 2 + ((f12 - m23) * w23) ** 2

    bounds = [(0.0, math.pi), (0.0, math.pi)]
    axis = np.linspace(0.0, math.pi, grid_points)
    cands = grid_then_simplex(objective, [axis, axis], bounds, batch_objective=batch, xatol=xatol, max_iter=max_iter)
    chosen, alts = _select(cands, ("g_bar", "G_bar"), weighted, "fit_tritter")
    notes = []
    if np.allclose(meas, 1.0, atol=1e-9):
        notes.append("near-symmetric: all ratios equal 1, so g_bar and G_bar are weakly distinguished")
    result = _finish(chosen, alts, ("g_bar", "G_bar"), objective, bounds, weighted, "fit_tritter", notes)
    if notes:
        result.ambiguous = True
    return result


def fit_fourport_eta(fractions: FractionSet, grid_points: int = 201, xatol: float = 1e-10, max_iter: int = 4000) -> FitResult:
    """Fit the coupler reflectivity ``eta`` in ``[0, 1]`` to the six four-port ratios."""
    if len(fractions) == 0:
        raise ValidationError("fit_fourport_eta: empty fraction set")
    fr = fractions.subset(FOURPORT_FRACTIONS)
    meas = np.array([e.value for e in fr])
    w, weighted = _weights([e.sigma for e in fr], "fit_fourport_eta")

    def objective(x):
        model = model_fractions(fourport_intensities(x[0]), FOURPORT_FRACTIONS)
        return float(np.sum(((model - meas) * w) ** 2))

    bounds = [(0.0, 1.0)]
    cands = grid_then_simplex(objective, [np.linspace(0.0, 1.0, grid_points)], bounds, xatol=xatol, max_iter=max_iter)
    chosen, alts = _select(cands, ("eta",), weighted, "fit_fourport_eta")
    return _finish(chosen, alts, ("eta",), objective, bounds, weighted, "fit_fourport_eta")


def _phi_model(eta, phi, keys):
    u = fourport_closed_form((eta, phi))
    return np.array([visibility(u, ip, op) for ip, op in keys])


def fit_fourport_phi(eta: float, visibilities: VisibilityMatrix, grid_points: int = 91, xatol: float = 1e-10, max_iter: int = 4000) -> FitResult:
    """Fit the inner-arm phase ``phi`` to measured four-port visibilities.

    Visibilities are even in ``phi`` and periodic with period ``pi``, so the
    fit runs over ``[0, pi/2]`` and reports that representative; ``-phi`` and
    ``phi + pi`` are observationally identical.

    Raises
    ------
    UnderdeterminedFitError
        Fewer than three usable visibilities, or visibilities that do not
        depend on ``phi`` (input pairs (1, 2) and (3, 4)).
    """
    eta = float(eta)
    if not 0.0 < eta < 1.0:
        raise ValidationError(f"eta must lie in (0, 1), got {eta}")
    keys = [k for k in visibilities.keys() if PortPair.of(k[1]).distinct]
    if len(keys) < 3:
        raise UnderdeterminedFitError(f"fit_fourport_phi: need >= 3 visibilities, got {len(keys)}")
    meas = np.array([visibilities.values[k] for k in keys])
    sig = [visibilities.sigma(*k, default=0.0) or 0.0 for k in keys]
    w, weighted = _weights(sig, "fit_fourport_phi")

    axis = np.linspace(0.0, math.pi / 2, grid_points)
    table = np.array([_phi_model(eta, p, keys) for p in axis])
    if np.max(np.ptp(table, axis=0)) < PHI_SENSITIVITY:
        raise UnderdeterminedFitError("fit_fourport_phi: these visibilities do not depend on phi")

    def objective(x):
        return float(np.sum(((_phi_model(eta, x[0], keys) - meas) * w) ** 2))

    bounds = [(0.0, math.pi / 2)]
    cands = grid_then_simplex(objective, [axis], bounds, xatol=xatol, max_iter=max_iter)
    chosen, alts = _select(cands, ("phi",), weighted, "fit_fourport_phi")
    notes = ["phi is determined up to sign and modulo pi"]
    return _finish(chosen, alts, ("phi",), objective, bounds, weighted, "fit_fourport_phi", notes)
