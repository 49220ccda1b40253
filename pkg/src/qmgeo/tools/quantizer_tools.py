"""
Quantizer Tools: the QMGeo stochastic quantizer and the stochastic k-level baseline.

An input ``w ∈ [-w_max, w_max]`` falls in the half-open interval
``[Bin(r), Bin(r+1))``.  With weight ``μ`` the output walks *down* from level
``r`` by a truncated geometric number of steps (support ``{1, …, r+1}``);
otherwise it walks *up* from level ``r+1`` (support ``{1, …, R-1-r}``).
Every level is reachable, and for ``p = 1`` the mechanism collapses to
conventional stochastic rounding.

``μ = (Bin(r+1) - w) / Δ`` weights the lower side.  In ``dp-safe`` mode it is
clamped to ``[γ, 1-γ]`` so no level ever has zero probability.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..constants import DEFAULT_GAMMA, DEFAULT_QUANTIZER_MODE, QUANTIZER_MODES
from ..errors import ConfigError, DomainError
from ..utils.streams import element_uniforms, uniforms_for_indices
from .geom_tools import DiscreteDistribution, tgeo_masses

logger = logging.getLogger(__name__)

# Slack for inputs that clipping maps onto ±w_max up to rounding.
_DOMAIN_SLACK = 1e-12


# =====================================================================
# Types
# =====================================================================


@dataclass(frozen=True)
class QuantizerConfig:
    """Parameters that fully determine the QMGeo mechanism."""

    R: int
    p: float
    w_max: float
    mode: str = DEFAULT_QUANTIZER_MODE
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if int(self.R) != self.R or self.R < 2:
            raise ConfigError(f"must be an integer >= 2, got {self.R!r}", "quantizer.R")
        object.__setattr__(self, "R", int(self.R))
        if not (0.0 < self.p <= 1.0) or math.isnan(self.p):
            raise ConfigError(f"must lie in (0, 1], got {self.p!r}", "quantizer.p")
        if not self.w_max > 0 or math.isinf(self.w_max):
            raise ConfigError(f"must be a positive finite real, got {self.w_max!r}", "quantizer.w_max")
        if self.mode not in QUANTIZER_MODES:
            raise ConfigError(
                f"must be one of {', '.join(QUANTIZER_MODES)}, got {self.mode!r}", "quantizer.mode"
            )
        if not (0.0 <= self.gamma < 0.5):
            raise ConfigError(f"must lie in [0, 0.5), got {self.gamma!r}", "quantizer.gamma")

    @property
    def step(self) -> float:
        """Spacing ``Δ = 2 w_max / (R - 1)`` between adjacent levels."""
        return 2.0 * self.w_max / (self.R - 1)

    @property
    def levels(self) -> np.ndarray:
        """All bin values ``Bin(0..R-1)``."""
        return -self.w_max + 2.0 * np.arange(self.R) * self.w_max / (self.R - 1)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class QuantizedValue:
    """One quantizer output: the level index and its bin value."""

    level_index: int
    value: float


# =====================================================================
# Bins, clipping, interval lookup
# =====================================================================


def bin_value(r: int, cfg: QuantizerConfig) -> float:
    """``Bin(r) = -w_max + 2 r w_max / (R - 1)``."""
    if not 0 <= r <= cfg.R - 1:
        raise IndexError(f"level index {r} outside [0, {cfg.R - 1}]")
    return -cfg.w_max + 2.0 * r * cfg.w_max / (cfg.R - 1)


def clip_elementwise(g: Sequence[float], w_max: float) -> np.ndarray:
    """Clip every entry of *g* into ``[-w_max, w_max]``."""
    if not w_max > 0:
        raise ConfigError(f"w_max must be positive, got {w_max!r}")
    return np.clip(np.asarray(g, dtype=float), -w_max, w_max)


def _check_domain(w: np.ndarray, cfg: QuantizerConfig) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    bad = ~(np.abs(w) <= cfg.w_max * (1.0 + _DOMAIN_SLACK))
    if np.any(bad):
        first = float(w[bad].flat[0]) if w.ndim else float(w)
        raise DomainError(f"input {first!r} outside [-{cfg.w_max}, {cfg.w_max}]; clip first")
    return np.clip(w, -cfg.w_max, cfg.w_max)


def _interval_indices(w: np.ndarray, cfg: QuantizerConfig) -> np.ndarray:
    r = np.floor((w + cfg.w_max) * (cfg.R - 1) / (2.0 * cfg.w_max)).astype(np.int64)
    return np.clip(r, 0, cfg.R - 2)


def interval_index(w: float, cfg: QuantizerConfig) -> int:
    """Index ``r`` with ``w ∈ [Bin(r), Bin(r+1))``; ``+w_max`` maps to ``R-2``."""
    w_arr = _check_domain(np.asarray([w]), cfg)
    return int(_interval_indices(w_arr, cfg)[0])


def _mixture_weights(w: np.ndarray, r: np.ndarray, cfg: QuantizerConfig) -> np.ndarray:
    # Offset from the same float as cfg.levels[r], so μ is exactly 1 on a level.
    lower = -cfg.w_max + 2.0 * r * cfg.w_max / (cfg.R - 1)
    mu = 1.0 - (w - lower) / cfg.step
    mu = np.clip(mu, 0.0, 1.0)
    if cfg.mode == "dp-safe":
        mu = np.clip(mu, cfg.gamma, 1.0 - cfg.gamma)
    return mu


def mixture_weight(w: float, cfg: QuantizerConfig) -> float:
    """Probability of the lower component for input *w*."""
    w_arr = _check_domain(np.asarray([w]), cfg)
    r = _interval_indices(w_arr, cfg)
    return float(_mixture_weights(w_arr, r, cfg)[0])


# =====================================================================
# Output distributions
# =====================================================================


@lru_cache(maxsize=64)
def _component_tables(R: int, p: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-interval lower/upper component masses over the R levels.

    ``lower[r]`` places ``tgeo(r+1)`` at levels ``r, r-1, …, 0``;
    ``upper[r]`` places ``tgeo(R-1-r)`` at levels ``r+1, …, R-1``.
    """
    lower = np.zeros((R - 1, R), dtype=float)
    upper = np.zeros((R - 1, R), dtype=float)
    for r in range(R - 1):
        lower[r, r::-1] = tgeo_masses(p, r + 1)
        upper[r, r + 1 :] = tgeo_masses(p, R - 1 - r)
    lower.setflags(write=False)
    upper.setflags(write=False)
    return lower, upper


def output_matrix(w: Sequence[float], cfg: QuantizerConfig) -> np.ndarray:
    """QMGeo output masses for each input: shape ``(len(w), R)``."""
    w_arr = _check_domain(np.atleast_1d(np.asarray(w, dtype=float)), cfg)
    r = _interval_indices(w_arr, cfg)
    mu = _mixture_weights(w_arr, r, cfg)
    lower, upper = _component_tables(cfg.R, float(cfg.p))
    return mu[:, None] * lower[r] + (1.0 - mu)[:, None] * upper[r]


def klevel_matrix(w: Sequence[float], cfg: QuantizerConfig) -> np.ndarray:
    """Stochastic k-level output masses for each input: shape ``(len(w), R)``."""
    w_arr = _check_domain(np.atleast_1d(np.asarray(w, dtype=float)), cfg)
    r = _interval_indices(w_arr, cfg)
    lower = -cfg.w_max + 2.0 * r * cfg.w_max / (cfg.R - 1)
    up_prob = np.clip((w_arr - lower) / cfg.step, 0.0, 1.0)
    out = np.zeros((w_arr.size, cfg.R), dtype=float)
    rows = np.arange(w_arr.size)
    out[rows, r] = 1.0 - up_prob
    out[rows, r + 1] += up_prob
    return out


def output_distribution(w: float, cfg: QuantizerConfig) -> DiscreteDistribution:
    """QMGeo output law over level indices ``0..R-1`` for input *w*."""
    return DiscreteDistribution.from_array(output_matrix([w], cfg)[0])


def klevel_output_distribution(w: float, cfg: QuantizerConfig) -> DiscreteDistribution:
    """Stochastic k-level (unbiased rounding) output law for input *w*."""
    return DiscreteDistribution.from_array(klevel_matrix([w], cfg)[0])


# =====================================================================
# Sampling
# =====================================================================


def _draw_levels(masses: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF lookup per row of *masses* with one uniform per row."""
    cdf = np.cumsum(masses, axis=1)
    cdf /= cdf[:, -1:]
    idx = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(idx, masses.shape[1] - 1)


def quantize_scalar(w: float, cfg: QuantizerConfig, stream: np.random.Generator) -> QuantizedValue:
    """Draw one quantized level for *w* from its output distribution."""
    masses = output_matrix([w], cfg)
    r = int(_draw_levels(masses, np.asarray([stream.random()]))[0])
    return QuantizedValue(r, bin_value(r, cfg))


def quantize_levels(
    g: Sequence[float],
    cfg: QuantizerConfig,
    seed_seq: np.random.SeedSequence,
    indices: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Level indices for a vector; element ``i`` uses the draw derived for index ``i``.

    *indices* gives the global element index of each entry of *g* when only a
    subset (or a permutation) of a vector is being quantized.
    """
    g = np.asarray(g, dtype=float)
    if g.size == 0:
        return np.empty(0, dtype=np.int64)
    masses = output_matrix(g, cfg)
    if indices is None:
        u = element_uniforms(seed_seq, g.size)
    else:
        u = uniforms_for_indices(seed_seq, indices)
    return _draw_levels(masses, u)


def quantize_vector(
    g: Sequence[float],
    cfg: QuantizerConfig,
    seed_seq: np.random.SeedSequence,
) -> List[QuantizedValue]:
    """Element-wise independent QMGeo quantization of a clipped vector."""
    levels = quantize_levels(g, cfg, seed_seq)
    values = dequantize(levels, cfg)
    return [QuantizedValue(int(r), float(v)) for r, v in zip(levels, values)]


def dequantize(levels: Sequence[int], cfg: QuantizerConfig) -> np.ndarray:
    """Map level indices back to bin values (what the server reconstructs)."""
    levels = np.asarray(levels, dtype=np.int64)
    if levels.size and (levels.min() < 0 or levels.max() > cfg.R - 1):
        raise IndexError(f"level indices must lie in [0, {cfg.R - 1}]")
    return cfg.levels[levels]


# =====================================================================
# Diagnostics
# =====================================================================


def quantization_moments(w: float, cfg: QuantizerConfig, mechanism: str = "qmgeo") -> Dict[str, float]:
    """Exact mean, bias and variance of the quantized output value for input *w*.

    Returns:
        Dict containing ``mean``, ``bias`` (mean − w) and ``variance``.
    """
    if mechanism == "qmgeo":
        masses = output_matrix([w], cfg)[0]
    elif mechanism == "klevel":
        masses = klevel_matrix([w], cfg)[0]
    else:
        raise ConfigError(f"unknown mechanism {mechanism!r}")
    values = cfg.levels
    mean = float(np.dot(masses, values))
    variance = float(max(np.dot(masses, (values - mean) ** 2), 0.0))
    return {"mean": mean, "bias": mean - float(w), "variance": variance}


def communication_bits(d: int, cfg: Optional[QuantizerConfig], float_bits: int = 32) -> Dict[str, Any]:
    """Upload size of one update of dimension *d*.

    Returns:
        Dict containing ``bits_per_element``, ``bits_per_update`` and
        ``compression_ratio`` versus *float_bits*-bit floats.
    """
    per_element = float_bits if cfg is None else max(1, math.ceil(math.log2(cfg.R)))
    return {
        "bits_per_element": per_element,
        "bits_per_update": per_element * int(d),
        "compression_ratio": float_bits / per_element,
    }
