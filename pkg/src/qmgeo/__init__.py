"""
qmgeo - QMGeo stochastic quantization for differentially private federated learning.

Exact mixed truncated-geometric quantizer, closed-form and oracle privacy
accounting, a desk-scale federated simulator and a PL convergence-bound
calculator.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, DomainError, NumericalError, QMGeoError
from .config import FLConfig, RunConfig, load_config, parse_config
from .tools import (
    DiscreteDistribution,
    QuantizerConfig,
    PrivacyReport,
    BoundParams,
    output_distribution,
    quantize_vector,
    build_report,
)
from .flsim import run_training, simulate

__all__ = [
    "__version__",
    # Errors
    "QMGeoError",
    "ConfigError",
    "DataError",
    "DomainError",
    "NumericalError",
    # Configuration
    "FLConfig",
    "RunConfig",
    "load_config",
    "parse_config",
    # Core types and entry points
    "DiscreteDistribution",
    "QuantizerConfig",
    "PrivacyReport",
    "BoundParams",
    "output_distribution",
    "quantize_vector",
    "build_report",
    "run_training",
    "simulate",
]
