"""
qmgeo constants: single source of truth for magic numbers and defaults.

All reference hyperparameters, numerical tolerances and file-format versions live
here.  Import from this module instead of hardcoding values across tools,
config, and the CLI.
"""

from __future__ import annotations

# ── Quantizer defaults ──────────────────────────────────────────────
DEFAULT_LEVELS: int = 8
DEFAULT_P: float = 0.5
DEFAULT_W_MAX: float = 0.05                    # per-element clipping threshold
DEFAULT_GAMMA: float = 0.25                    # mixture-weight floor (dp-safe mode)
QUANTIZER_MODES: tuple[str, ...] = ("paper-literal", "dp-safe")
DEFAULT_QUANTIZER_MODE: str = "dp-safe"

# Elements per derived random sub-stream when quantizing a vector.
STREAM_BLOCK_SIZE: int = 256

# ── Federated-learning defaults (desk-scale analogue of the MNIST reference setup) ──
DEFAULT_CLIENTS: int = 5
DEFAULT_ROUNDS: int = 200
DEFAULT_BATCH_SIZE: int = 64
DEFAULT_LEARNING_RATE: float = 0.04
DEFAULT_INPUT_DIM: int = 100                   # PCA target dimensionality
DEFAULT_HIDDEN_DIM: int = 32
HOLDOUT_FRACTION: float = 0.10
DEFAULT_SYNTH_SAMPLES: int = 3000
DEFAULT_SYNTH_CLASSES: int = 3
DEFAULT_SYNTH_SEPARATION: float = 6.0
OBJECTIVES: tuple[str, ...] = ("mlp", "quadratic")
AGGREGATIONS: tuple[str, ...] = ("sum", "weighted")

# Quadratic PL test objective
DEFAULT_QUADRATIC_DIM: int = 16
DEFAULT_QUADRATIC_EIGEN_RANGE: tuple[float, float] = (0.5, 2.0)

# ── Privacy accounting ──────────────────────────────────────────────
DEFAULT_ALPHA: float = 2.0
MAX_SUBSAMPLED_ALPHA: float = 2.0              # amplification lemma scope
PAPER_KAPPA: float = 64 / 12000                # reported as 0.005333
PAPER_MODEL_DIM: int = 3562                    # (100, 32, 10) MLP
DEFAULT_ORACLE_GRID: int = 512
DEFAULT_DELTA: float = 1e-5

# Per-round ε values reported for the MNIST experiments, keyed by (R, p).
PAPER_REPORTED_EPS: dict[tuple[int, float], float] = {
    (8, 0.9): 2.626,
    (16, 0.9): 4.492,
    (8, 0.5): 0.784,
}
PAPER_RESIDUAL_TOLERANCE: float = 0.01         # relative; beyond this a warning is logged

# ── Numerical tolerances ────────────────────────────────────────────
MASS_SUM_TOLERANCE: float = 1e-12
LOG_DOMAIN_THRESHOLD: float = 600.0            # α·log(1/q)·m above this → log-domain sums
INEQUALITY_TOLERANCE: float = 1e-9             # relative slack for the descent check

# PCA subspace iteration
PCA_MAX_ITER: int = 5000
PCA_TOL: float = 1e-10                         # residual relative to the component's eigenvalue
PCA_OVERSAMPLE: int = 10                       # extra block columns beyond k (at least)

# ── Output formats ──────────────────────────────────────────────────
EPS_SIGNIFICANT_DIGITS: int = 6
INF_LITERAL: str = "+inf"
CSV_SCHEMA_PREFIX: str = "# schema: "
CSV_SCHEMAS: dict[str, int] = {
    "qmgeo.pmf": 1,
    "qmgeo.quantize": 1,
    "qmgeo.sweep": 1,
    "qmgeo.metrics": 1,
    "qmgeo.bound": 1,
}

# ── CLI exit codes ──────────────────────────────────────────────────
EXIT_OK: int = 0
EXIT_CONFIG_ERROR: int = 2
EXIT_DATA_ERROR: int = 3
EXIT_NUMERICAL_ERROR: int = 4
