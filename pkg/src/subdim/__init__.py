"""Tests and estimates of the signal subspace dimension for PCA, FOBI and SIR."""

__version__ = "0.1.0"

from .bootstrap import (
    BootstrapConfig,
    DimensionEstimate,
    alpha_schedule,
    bootstrap_pvalue,
    estimate_dimension,
)
from .estimators import FOBISubspace, PCASubspace, SIRSubspace
from .exceptions import (
    ColumnNotFound,
    ConvergenceFailure,
    DataError,
    DegenerateObservation,
    InsufficientVariation,
    InvalidInput,
    InvalidK,
    InvalidSlices,
    InvalidSpectrum,
    NumericalError,
    ParseError,
    ReplicateFailure,
    SingularMatrix,
    SubdimError,
    UsageError,
)
from .fobi import fobi_asymp_pvalue, fobi_boot_pvalue, fobi_fit, fobi_test
from .io import DataTable, load_table
from .pca import pca_asymp_pvalue, pca_boot_pvalue, pca_fit, pca_test
from .results import TestResult
from .sir import sir_asymp_pvalue, sir_boot_pvalue, sir_fit, sir_test
from .simulate import SimulationSpec, rejection_rate, simulate_model

__all__ = [
    "BootstrapConfig", "DimensionEstimate", "alpha_schedule", "bootstrap_pvalue",
    "estimate_dimension", "FOBISubspace", "PCASubspace", "SIRSubspace",
    "ColumnNotFound", "ConvergenceFailure", "DataError", "DegenerateObservation",
    "InsufficientVariation", "InvalidInput", "InvalidK", "InvalidSlices", "InvalidSpectrum",
    "NumericalError", "ParseError", "ReplicateFailure", "SingularMatrix", "SubdimError",
    "UsageError", "fobi_asymp_pvalue", "fobi_boot_pvalue", "fobi_fit", "fobi_test",
    "DataTable", "load_table", "pca_asymp_pvalue", "pca_boot_pvalue", "pca_fit", "pca_test",
    "TestResult", "sir_asymp_pvalue", "sir_boot_pvalue", "sir_fit", "sir_test",
    "SimulationSpec", "rejection_rate", "simulate_model",
]
