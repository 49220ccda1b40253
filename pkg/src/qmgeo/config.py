"""
qmgeo run configuration.

A run config is a JSON (or YAML) document with the blocks ``quantizer``,
``fl``, ``privacy``, ``bound``, ``pmf`` and ``quantize`` plus the top-level
keys ``output_dir`` and ``master_seed``.  Every block is optional and falls
back to the defaults in :mod:`qmgeo.constants`; unknown keys at any level are
rejected with the dotted key path.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
import yaml

from .constants import (
    AGGREGATIONS,
    DEFAULT_ALPHA,
    DEFAULT_BATCH_SIZE,
    DEFAULT_CLIENTS,
    DEFAULT_DELTA,
    DEFAULT_GAMMA,
    DEFAULT_HIDDEN_DIM,
    DEFAULT_INPUT_DIM,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LEVELS,
    DEFAULT_ORACLE_GRID,
    DEFAULT_P,
    DEFAULT_QUADRATIC_DIM,
    DEFAULT_QUADRATIC_EIGEN_RANGE,
    DEFAULT_QUANTIZER_MODE,
    DEFAULT_ROUNDS,
    DEFAULT_SYNTH_CLASSES,
    DEFAULT_SYNTH_SAMPLES,
    DEFAULT_SYNTH_SEPARATION,
    DEFAULT_W_MAX,
    HOLDOUT_FRACTION,
    MAX_SUBSAMPLED_ALPHA,
    OBJECTIVES,
    PAPER_KAPPA,
    PAPER_MODEL_DIM,
)
from .errors import ConfigError
from .tools.quantizer_tools import QuantizerConfig

logger = logging.getLogger(__name__)

DATASET_KINDS = ("synthetic", "csv")
PMF_MECHANISMS = ("qmgeo", "klevel")
FL_QUANTIZERS = ("qmgeo", "none")
MAX_SEED = 2**64 - 1


# =====================================================================
# Blocks
# =====================================================================


@dataclass(frozen=True)
class DatasetSource:
    """Where the training data comes from."""

    kind: str = "synthetic"
    samples: int = DEFAULT_SYNTH_SAMPLES
    separation: float = DEFAULT_SYNTH_SEPARATION
    path: Optional[str] = None
    label_column: str = "label"
    raw_dim: Optional[int] = None
    pca_dim: Optional[int] = None
    holdout_fraction: float = HOLDOUT_FRACTION

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ConfigError(f"must be one of {', '.join(DATASET_KINDS)}, got {self.kind!r}", "fl.dataset.kind")
        if self.kind == "csv" and not self.path:
            raise ConfigError("a csv dataset needs a path", "fl.dataset.path")
        if self.samples < 1:
            raise ConfigError(f"must be >= 1, got {self.samples!r}", "fl.dataset.samples")
        if self.raw_dim is not None and self.raw_dim < 1:
            raise ConfigError(f"must be >= 1, got {self.raw_dim!r}", "fl.dataset.raw_dim")
        if self.pca_dim is not None and self.pca_dim < 1:
            raise ConfigError(f"must be >= 1, got {self.pca_dim!r}", "fl.dataset.pca_dim")
        if not (0.0 <= self.holdout_fraction < 1.0):
            raise ConfigError(f"must lie in [0, 1), got {self.holdout_fraction!r}", "fl.dataset.holdout_fraction")


@dataclass(frozen=True)
class QuadraticSpec:
    """Shape of the quadratic test objective."""

    dim: int = DEFAULT_QUADRATIC_DIM
    eigen_min: float = DEFAULT_QUADRATIC_EIGEN_RANGE[0]
    eigen_max: float = DEFAULT_QUADRATIC_EIGEN_RANGE[1]
    centre_scale: float = 1.0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"must be >= 1, got {self.dim!r}", "fl.quadratic.dim")
        if not 0 < self.eigen_min <= self.eigen_max:
            raise ConfigError("need 0 < eigen_min <= eigen_max", "fl.quadratic.eigen_min")


@dataclass(frozen=True)
class FLConfig:
    """Everything :func:`qmgeo.flsim.engine.run_training` needs."""

    clients: int = DEFAULT_CLIENTS
    rounds: int = DEFAULT_ROUNDS
    batch_size: int = DEFAULT_BATCH_SIZE
    learning_rate: float = DEFAULT_LEARNING_RATE
    quantizer: Optional[QuantizerConfig] = None
    w_max: float = DEFAULT_W_MAX
    alpha: float = DEFAULT_ALPHA
    master_seed: int = 0
    input_dim: int = DEFAULT_INPUT_DIM
    hidden_dim: int = DEFAULT_HIDDEN_DIM
    classes: int = DEFAULT_SYNTH_CLASSES
    dataset: DatasetSource = field(default_factory=DatasetSource)
    objective: str = "mlp"
    aggregation: str = "sum"
    quadratic: QuadraticSpec = field(default_factory=QuadraticSpec)

    def __post_init__(self):
        for name in ("clients", "rounds", "batch_size"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"must be a positive integer, got {value!r}", f"fl.{name}")
        if not self.learning_rate > 0:
            raise ConfigError(f"must be > 0, got {self.learning_rate!r}", "fl.learning_rate")
        if not self.w_max > 0:
            raise ConfigError(f"must be > 0, got {self.w_max!r}", "quantizer.w_max")
        if self.quantizer is not None and self.quantizer.w_max != self.w_max:
            raise ConfigError(
                f"clipping threshold {self.w_max!r} differs from quantizer.w_max {self.quantizer.w_max!r}",
                "quantizer.w_max",
            )
        if not self.alpha > 1:
            raise ConfigError(f"must be > 1, got {self.alpha!r}", "privacy.alpha")
        if self.quantizer is not None and self.alpha > MAX_SUBSAMPLED_ALPHA:
            raise ConfigError(
                f"per-round RDP uses the subsampled bound, valid only for alpha <= {MAX_SUBSAMPLED_ALPHA:g}",
                "privacy.alpha",
            )
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"must be one of {', '.join(OBJECTIVES)}, got {self.objective!r}", "fl.objective")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(
                f"must be one of {', '.join(AGGREGATIONS)}, got {self.aggregation!r}", "fl.aggregation"
            )
        if not 0 <= self.master_seed <= MAX_SEED:
            raise ConfigError(f"must be an unsigned 64-bit integer, got {self.master_seed!r}", "master_seed")


@dataclass(frozen=True)
class PrivacyBlock:
    """Accountant inputs and sweep grids for the ``privacy`` subcommand."""

    alpha: float = DEFAULT_ALPHA
    delta: Optional[float] = DEFAULT_DELTA
    grid_points: int = DEFAULT_ORACLE_GRID
    d: int = PAPER_MODEL_DIM
    kappa: float = PAPER_KAPPA
    rounds: int = 1
    p_grid: Tuple[float, ...] = tuple(np.round(np.linspace(0.5, 0.99, 50), 6).tolist())
    alpha_grid: Tuple[float, ...] = tuple(np.round(np.linspace(1.1, 10.0, 90), 6).tolist())
    sweep_levels: Tuple[int, ...] = (4, 8, 16)

    def __post_init__(self):
        if not self.alpha > 1:
            raise ConfigError(f"must be > 1, got {self.alpha!r}", "privacy.alpha")
        if self.alpha > MAX_SUBSAMPLED_ALPHA:
            raise ConfigError(
                f"alpha={self.alpha!r} refused: the subsampled RDP bound only holds for "
                f"alpha <= {MAX_SUBSAMPLED_ALPHA:g}",
                "privacy.alpha",
            )
        if self.delta is not None and not (0.0 < self.delta <= 1.0):
            raise ConfigError(f"must lie in (0, 1], got {self.delta!r}", "privacy.delta")
        if self.grid_points < 2:
            raise ConfigError(f"must be >= 2, got {self.grid_points!r}", "privacy.grid_points")
        if self.d < 1:
            raise ConfigError(f"must be >= 1, got {self.d!r}", "privacy.d")
        if not (0.0 < self.kappa <= 1.0):
            raise ConfigError(f"must lie in (0, 1], got {self.kappa!r}", "privacy.kappa")
        if self.rounds < 1:
            raise ConfigError(f"must be >= 1, got {self.rounds!r}", "privacy.rounds")
        if any(not (0.0 < p < 1.0) for p in self.p_grid):
            raise ConfigError("every entry must lie in (0, 1)", "privacy.p_grid")
        if any(not a > 1.0 for a in self.alpha_grid):
            raise ConfigError("every entry must be > 1", "privacy.alpha_grid")
        if any(r < 2 for r in self.sweep_levels):
            raise ConfigError("every entry must be >= 2", "privacy.sweep_levels")


@dataclass(frozen=True)
class BoundBlock:
    """Constants for the ``bound`` subcommand; ``eta`` defaults to the fl learning rate."""

    L: Optional[float] = None
    mu: Optional[float] = None
    eta: Optional[float] = None
    f_star: Optional[float] = None
    F0_gap: Optional[float] = None
    T: Optional[int] = None
    metrics: Optional[str] = None


@dataclass(frozen=True)
class PmfBlock:
    w: float = 0.0
    mechanism: str = "qmgeo"

    def __post_init__(self):
        if self.mechanism not in PMF_MECHANISMS:
            raise ConfigError(f"must be one of {', '.join(PMF_MECHANISMS)}, got {self.mechanism!r}", "pmf.mechanism")


@dataclass(frozen=True)
class QuantizeBlock:
    input: Optional[str] = None
    clip: bool = True


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration; :meth:`to_dict` gives a document that reproduces it."""

    quantizer: QuantizerConfig = field(
        default_factory=lambda: QuantizerConfig(DEFAULT_LEVELS, DEFAULT_P, DEFAULT_W_MAX)
    )
    fl: FLConfig = field(default_factory=FLConfig)
    privacy: PrivacyBlock = field(default_factory=PrivacyBlock)
    bound: BoundBlock = field(default_factory=BoundBlock)
    pmf: PmfBlock = field(default_factory=PmfBlock)
    quantize: QuantizeBlock = field(default_factory=QuantizeBlock)
    output_dir: str = "qmgeo_output"
    master_seed: int = 0

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        if seed is None:
            return self
        if not 0 <= seed <= MAX_SEED:
            raise ConfigError(f"must be an unsigned 64-bit integer, got {seed!r}", "master_seed")
        return dataclasses.replace(self, master_seed=seed, fl=dataclasses.replace(self.fl, master_seed=seed))

    def with_output_dir(self, out: Optional[str]) -> "RunConfig":
        return self if out is None else dataclasses.replace(self, output_dir=str(out))

    def to_dict(self) -> Dict[str, Any]:
        fl = {f.name: getattr(self.fl, f.name) for f in dataclasses.fields(self.fl)}
        fl["quantizer"] = "none" if self.fl.quantizer is None else "qmgeo"
        del fl["w_max"], fl["alpha"], fl["master_seed"]
        fl["dataset"] = dataclasses.asdict(self.fl.dataset)
        fl["quadratic"] = dataclasses.asdict(self.fl.quadratic)
        fl["model"] = {
            "input_dim": fl.pop("input_dim"),
            "hidden_dim": fl.pop("hidden_dim"),
            "classes": fl.pop("classes"),
        }
        privacy = dataclasses.asdict(self.privacy)
        for key in ("p_grid", "alpha_grid", "sweep_levels"):
            privacy[key] = list(privacy[key])
        return {
            "quantizer": self.quantizer.to_dict(),
            "fl": fl,
            "privacy": privacy,
            "bound": dataclasses.asdict(self.bound),
            "pmf": dataclasses.asdict(self.pmf),
            "quantize": dataclasses.asdict(self.quantize),
            "output_dir": self.output_dir,
            "master_seed": self.master_seed,
        }


# =====================================================================
# Parsing
# =====================================================================


def _check_keys(data: Any, allowed, prefix: str) -> Dict[str, Any]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping, got {type(data).__name__}", prefix or None)
    for key in data:
        if key not in allowed:
            path = f"{prefix}.{key}" if prefix else str(key)
            raise ConfigError("unknown key", path)
    return dict(data)


def _coerce(value: Any, default: Any, key_path: str) -> Any:
    """Coerce a scalar to the type of its default (ints stay ints, tuples stay tuples)."""
    if value is None:
        return None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", key_path)
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"expected an integer, got {value!r}", key_path)
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key_path)
        value = float(value)
        if math.isnan(value):
            raise ConfigError("NaN is not allowed", key_path)
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigError(f"expected a non-empty list, got {value!r}", key_path)
        return tuple(_coerce(v, default[0], f"{key_path}[{i}]") for i, v in enumerate(value))
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key_path)
        return value
    return value


# Scalar types for fields whose default is None
_OPTIONAL_TYPES: Dict[str, Any] = {
    "fl.dataset.path": "",
    "fl.dataset.raw_dim": 0,
    "fl.dataset.pca_dim": 0,
    "privacy.delta": 0.0,
    "bound.L": 0.0,
    "bound.mu": 0.0,
    "bound.eta": 0.0,
    "bound.f_star": 0.0,
    "bound.F0_gap": 0.0,
    "bound.T": 0,
    "bound.metrics": "",
    "quantize.input": "",
}


def _build_block(cls, data: Any, prefix: str, skip=()):
    names = [f.name for f in dataclasses.fields(cls)]
    raw = _check_keys(data, names, prefix)
    defaults = cls()
    kwargs = {}
    for name in names:
        if name in skip or name not in raw:
            continue
        key_path = f"{prefix}.{name}"
        default = getattr(defaults, name)
        template = _OPTIONAL_TYPES.get(key_path, default)
        kwargs[name] = _coerce(raw[name], template, key_path)
    return cls(**kwargs)


def _build_quantizer(data: Any) -> QuantizerConfig:
    raw = _check_keys(data, ("R", "p", "w_max", "mode", "gamma"), "quantizer")
    templates = {"R": 0, "p": 0.0, "w_max": 0.0, "mode": "", "gamma": 0.0}
    values = {
        "R": DEFAULT_LEVELS,
        "p": DEFAULT_P,
        "w_max": DEFAULT_W_MAX,
        "mode": DEFAULT_QUANTIZER_MODE,
        "gamma": DEFAULT_GAMMA,
    }
    for key, value in raw.items():
        values[key] = _coerce(value, templates[key], f"quantizer.{key}")
    return QuantizerConfig(**values)


_FL_KEYS = (
    "clients", "rounds", "batch_size", "learning_rate", "quantizer",
    "model", "dataset", "objective", "aggregation", "quadratic",
)


def _build_fl(data: Any, quantizer: QuantizerConfig, alpha: float, seed: int) -> FLConfig:
    raw = _check_keys(data, _FL_KEYS, "fl")
    defaults = FLConfig()
    kwargs: Dict[str, Any] = {}
    for name in ("clients", "rounds", "batch_size", "learning_rate", "objective", "aggregation"):
        if name in raw:
            kwargs[name] = _coerce(raw[name], getattr(defaults, name), f"fl.{name}")

    mode = _coerce(raw.get("quantizer", "qmgeo"), "", "fl.quantizer")
    if mode not in FL_QUANTIZERS:
        raise ConfigError(f"must be one of {', '.join(FL_QUANTIZERS)}, got {mode!r}", "fl.quantizer")
    kwargs["quantizer"] = quantizer if mode == "qmgeo" else None

    model = _check_keys(raw.get("model"), ("input_dim", "hidden_dim", "classes"), "fl.model")
    for name, value in model.items():
        kwargs[name] = _coerce(value, 0, f"fl.model.{name}")

    kwargs["dataset"] = _build_block(DatasetSource, raw.get("dataset"), "fl.dataset")
    kwargs["quadratic"] = _build_block(QuadraticSpec, raw.get("quadratic"), "fl.quadratic")
    return FLConfig(w_max=quantizer.w_max, alpha=alpha, master_seed=seed, **kwargs)


_TOP_KEYS = ("quantizer", "fl", "privacy", "bound", "pmf", "quantize", "output_dir", "master_seed")


def parse_config(data: Any) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed document, rejecting unknown keys."""
    raw = _check_keys(data, _TOP_KEYS, "")
    seed = _coerce(raw.get("master_seed", 0), 0, "master_seed")
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"must be an unsigned 64-bit integer, got {seed!r}", "master_seed")
    output_dir = _coerce(raw.get("output_dir", "qmgeo_output"), "", "output_dir")

    quantizer = _build_quantizer(raw.get("quantizer"))
    privacy = _build_block(PrivacyBlock, raw.get("privacy"), "privacy")
    fl = _build_fl(raw.get("fl"), quantizer, privacy.alpha, seed)
    return RunConfig(
        quantizer=quantizer,
        fl=fl,
        privacy=privacy,
        bound=_build_block(BoundBlock, raw.get("bound"), "bound"),
        pmf=_build_block(PmfBlock, raw.get("pmf"), "pmf"),
        quantize=_build_block(QuantizeBlock, raw.get("quantize"), "quantize"),
        output_dir=output_dir,
        master_seed=seed,
    )


def load_config(path: str | Path) -> RunConfig:
    """Read a JSON or YAML run config from *path*."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    logger.debug("Loaded config from %s", path)
    return parse_config(data)
