"""scikit-learn style wrappers around the characterization and dip fits.

The estimators follow the usual contract: hyperparameters live in ``__init__``
and learned state in trailing-underscore attributes set by ``fit``, with
``get_params`` / ``set_params`` / ``clone`` inherited from ``BaseEstimator``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .characterization import (
    FOURPORT_FRACTIONS,
    TRITTER_FRACTIONS,
    FractionSet,
    IntensityDataset,
    compute_fractions,
    fit_fourport_eta,
    fit_fourport_phi,
    fit_tritter,
    predict_intensities,
)
from .devices import TritterCoupling, fourport_closed_form, tritter_unitary
from .exceptions import ValidationError
from .hom import DipScan, fit_dip_curve
from .two_photon import visibility, visibility_matrix


def _as_fractions(X, requested, n_modes):
    if isinstance(X, FractionSet):
        return X
    if isinstance(X, IntensityDataset):
        data = X
    else:
        X = check_array(X, ensure_min_samples=n_modes, ensure_min_features=n_modes)
        if X.shape != (n_modes, n_modes):
            raise ValidationError(f"expected a {n_modes}x{n_modes} intensity matrix, got {X.shape}")
        data = IntensityDataset.from_matrix(X)
    if data.n_modes != n_modes:
        raise ValidationError(f"expected {n_modes}-port data, got {data.n_modes}")
    return compute_fractions(data, requested)


def _port_quads(X):
    X = check_array(X, dtype=None)
    if X.shape[1] != 4:
        raise ValidationError("X must have columns (i, j, k, l) of 1-based ports")
    return X.astype(int)


class _DeviceCharacterizer(BaseEstimator):
    """Shared ``predict`` / ``predict_intensities`` on a fitted ``transfer_matrix_``."""

    def predict(self, X):
        """Visibilities for rows ``(i, j, k, l)``: inputs ``i, j``, outputs ``k, l``."""
        check_is_fitted(self, "transfer_matrix_")
        return np.array([visibility(self.transfer_matrix_, (i, j), (k, l)) for i, j, k, l in _port_quads(X)])

    def visibility_matrix(self):
        check_is_fitted(self, "transfer_matrix_")
        return visibility_matrix(self.transfer_matrix_)

    def predict_intensities(self):
        check_is_fitted(self, "transfer_matrix_")
        return predict_intensities(self.transfer_matrix_)


class TritterCharacterizer(_DeviceCharacterizer):
    """Fit the tritter couplings from classical intensities.

    ``fit`` accepts a 3x3 intensity matrix (rows = input ports), an
    :class:`IntensityDataset`, or a ready :class:`FractionSet`.

    Attributes
    ----------
    g_bar_, G_bar_ : float
    fit_result_ : FitResult
    transfer_matrix_ : TransferMatrix
    """

    def __init__(self, grid_points=64, xatol=1e-10, max_iter=4000):
        self.grid_points = grid_points
        self.xatol = xatol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        fractions = _as_fractions(X, TRITTER_FRACTIONS, 3)
        res = fit_tritter(fractions, self.grid_points, self.xatol, self.max_iter)
        self.fit_result_ = res
        self.g_bar_ = res.parameters["g_bar"]
        self.G_bar_ = res.parameters["G_bar"]
        self.transfer_matrix_ = tritter_unitary(TritterCoupling(self.g_bar_, self.G_bar_))
        return self


class FourPortCharacterizer(_DeviceCharacterizer):
    """Fit ``eta`` from intensities and, optionally, ``phi`` from visibilities.

    Without visibilities the phase stays at ``phi`` (default 0); intensities
    alone cannot determine it.
    """

    def __init__(self, phi=0.0, grid_points=201, xatol=1e-10, max_iter=4000):
        self.phi = phi
        self.grid_points = grid_points
        self.xatol = xatol
        self.max_iter = max_iter

    def fit(self, X, y=None, visibilities=None):
        fractions = _as_fractions(X, FOURPORT_FRACTIONS, 4)
        res = fit_fourport_eta(fractions, self.grid_points, self.xatol, self.max_iter)
        self.eta_fit_ = res
        self.eta_ = res.parameters["eta"]
        self.phi_ = float(self.phi)
        self.phi_fit_ = None
        if visibilities is not None:
            self.phi_fit_ = fit_fourport_phi(self.eta_, visibilities, xatol=self.xatol, max_iter=self.max_iter)
            self.phi_ = self.phi_fit_.parameters["phi"]
        self.transfer_matrix_ = fourport_closed_form((self.eta_, self.phi_))
        return self


class HOMDipRegressor(RegressorMixin, BaseEstimator):
    """Gaussian HOM dip/peak fit on (delay, count) data.

    ``X`` is a single column of delays (or a :class:`DipScan` passed as
    ``X`` with ``y=None``); ``predict`` returns expected rates.

    Attributes
    ----------
    visibility_, baseline_, center_, width_ : float
    uncertainties_ : dict
    """

    def fit(self, X, y=None):
        if isinstance(X, DipScan):
            tau, counts = X.delays, X.counts
        else:
            X, y = check_X_y(X, y, ensure_min_samples=8, y_numeric=True)
            if X.shape[1] != 1:
                raise ValidationError("X must be a single column of delays")
            order = np.argsort(X[:, 0], kind="stable")
            tau, counts = X[order, 0], y[order]
        fit = fit_dip_curve(tau, counts)
        self.dip_fit_ = fit
        self.visibility_ = fit.visibility
        self.baseline_ = fit.baseline
        self.center_ = fit.center
        self.width_ = fit.width
        self.uncertainties_ = fit.uncertainties
        return self

    def predict(self, X):
        check_is_fitted(self, "visibility_")
        X = check_array(X)
        tau = X[:, 0]
        return self.baseline_ * (1.0 - self.visibility_ * np.exp(-((tau - self.center_) ** 2) / (2 * self.width_**2)))
