"""Simulation and maximum-likelihood characterization of integrated 3- and 4-port multiports."""

from .characterization import (
    FitResult,
    FractionSet,
    IntensityDataset,
    compute_fractions,
    fit_fourport_eta,
    fit_fourport_phi,
    fit_tritter,
    predict_intensities,
)
from .devices import (
    FourPortParams,
    TritterCoupling,
    beamsplitter_matrix,
    fourport_closed_form,
    fourport_composed,
    symmetric_tritter_reference,
    tritter_coupling_matrix,
    tritter_unitary,
)
from .estimators import FourPortCharacterizer, HOMDipRegressor, TritterCharacterizer
from .exceptions import FitError, SchemaError, UndefinedVisibilityError, UnderdeterminedFitError, ValidationError
from .hom import DipFit, DipScan, dip_rate_model, fit_dip, scans_to_visibility_matrix, synthesize_scan
from .linalg import CouplingMatrix, TransferMatrix, check_unitarity, expm_hermitian, matmul
from .two_photon import (
    PortPair,
    VisibilityMatrix,
    classical_coincidence,
    quantum_coincidence,
    visibility,
    visibility_matrix,
    visibility_sweep,
)

__version__ = "0.1.0"
