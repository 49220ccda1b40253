"""
Geom Tools: exact arithmetic for truncated geometric and finite discrete distributions.

``DiscreteDistribution`` is the common currency for PMFs, the quantizer's
output laws, and the privacy oracles.  Every operation here is a pure
function of its inputs except :func:`sample`, which only advances the
caller's generator.

The printed variance formula for the truncated geometric distribution is
kept in :func:`tgeo_variance_paper` for reference only: it returns negative
values for valid parameters.  :func:`moments_bruteforce` is the trusted
source for moments.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from ..constants import LOG_DOMAIN_THRESHOLD, MASS_SUM_TOLERANCE
from ..errors import ConfigError

logger = logging.getLogger(__name__)


# =====================================================================
# Types
# =====================================================================


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability masses over a finite, strictly increasing integer support."""

    support: Tuple[int, ...]
    masses: Tuple[float, ...]
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        support = tuple(int(k) for k in self.support)
        masses = tuple(float(m) for m in self.masses)
        if len(support) != len(masses):
            raise ConfigError(
                f"support has {len(support)} labels but masses has {len(masses)} entries"
            )
        if not support:
            raise ConfigError("distribution support must not be empty")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ConfigError("support labels must be strictly increasing")
        arr = np.asarray(masses, dtype=float)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ConfigError("masses must be finite and non-negative")
        total = math.fsum(masses)
        if abs(total - 1.0) > MASS_SUM_TOLERANCE:
            raise ConfigError(f"masses sum to {total!r}, expected 1")

        cdf = np.cumsum(arr)
        cdf /= cdf[-1]
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "_cdf", cdf)

    @classmethod
    def from_array(cls, masses: Sequence[float], start: int = 0) -> "DiscreteDistribution":
        """Build a distribution on the consecutive labels ``start, start+1, ...``."""
        masses = list(masses)
        return cls(tuple(range(start, start + len(masses))), tuple(masses))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.masses, dtype=float)

    def mass(self, label: int) -> float:
        """Mass at *label* (0 for labels outside the support)."""
        try:
            return self.masses[self.support.index(int(label))]
        except ValueError:
            return 0.0

    def reversed(self) -> "DiscreteDistribution":
        """Mirror the masses onto the same support (label k ↔ first+last−k)."""
        return DiscreteDistribution(self.support, tuple(reversed(self.masses)))

    def __len__(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class TGeoParams:
    """Truncated geometric on ``{1, …, support_size}`` with success probability *p*."""

    p: float
    support_size: int

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0) or math.isnan(self.p):
            raise ConfigError(f"p must lie in (0, 1], got {self.p!r}")
        if int(self.support_size) != self.support_size or self.support_size < 1:
            raise ConfigError(f"support_size must be a positive integer, got {self.support_size!r}")
        object.__setattr__(self, "support_size", int(self.support_size))

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def truncation_point(self) -> int:
        """The excluded right truncation point ``b = support_size + 1``."""
        return self.support_size + 1


# =====================================================================
# Truncated geometric
# =====================================================================


def tgeo_masses(p: float, support_size: int) -> np.ndarray:
    """Normalized masses ``p q^{k-1} / (1 - q^m)`` for ``k = 1..m`` as an array."""
    m = int(support_size)
    if p >= 1.0 or m == 1:
        out = np.zeros(m, dtype=float)
        out[0] = 1.0
        return out
    k = np.arange(m, dtype=float)
    log_q = math.log1p(-p)
    normalizer = -math.expm1(m * log_q)
    return p * np.exp(k * log_q) / normalizer


def tgeo_pmf(params: TGeoParams) -> DiscreteDistribution:
    """PMF of the truncated geometric distribution on ``{1, …, m}``."""
    masses = tgeo_masses(params.p, params.support_size)
    return DiscreteDistribution(tuple(range(1, params.support_size + 1)), tuple(masses))


def tgeo_mean_closed_form(params: TGeoParams) -> float:
    """Closed-form mean ``(1 - b q^{b-1} + (b-1) q^b) / (p (1 - q^{b-1}))`` with ``b = m + 1``.

    For ``p = 1`` the closed form divides by zero, so the brute-force mean
    (exactly 1) is returned instead.
    """
    if params.p >= 1.0:
        return moments_bruteforce(tgeo_pmf(params))[0]
    p, q, b = params.p, params.q, params.truncation_point
    numerator = 1.0 - b * q ** (b - 1) + (b - 1) * q**b
    denominator = p * -math.expm1((b - 1) * math.log1p(-p))
    return numerator / denominator


def tgeo_variance_paper(params: TGeoParams) -> float:
    """Variance formula exactly as printed, with ``b = m + 1``.

    Not a variance: it goes negative for valid parameters (``p=0.5, b=4``
    gives about -1.271).  Use :func:`moments_bruteforce` for real moments.
    """
    if params.p >= 1.0:
        raise ConfigError("printed variance formula requires p < 1")
    q, b = params.q, params.truncation_point
    numerator = (1 + q ** (2 * b)) * q - q**b * (1 + q**2) * b**2 + q ** (b + 1) * (b**2 - 1)
    denominator = (1 - q) ** 2 * (1 - q**b) ** 2
    return numerator / denominator


def moments_bruteforce(dist: DiscreteDistribution) -> Tuple[float, float]:
    """Exact ``(mean, variance)`` by direct summation over the support."""
    k = np.asarray(dist.support, dtype=float)
    m = dist.as_array()
    mean = math.fsum(k * m)
    second = math.fsum(k * k * m)
    variance = max(second - mean * mean, 0.0)
    return mean, variance


# =====================================================================
# Sampling
# =====================================================================


def sample(dist: DiscreteDistribution, stream: np.random.Generator) -> int:
    """Draw one label by inverse-CDF lookup on the precomputed cumulative masses."""
    u = stream.random()
    idx = int(np.searchsorted(dist._cdf, u, side="right"))
    return dist.support[min(idx, len(dist.support) - 1)]


def sample_many(dist: DiscreteDistribution, stream: np.random.Generator, n: int) -> np.ndarray:
    """Vectorised :func:`sample`: ``n`` labels from ``n`` consecutive uniforms."""
    u = stream.random(int(n))
    idx = np.minimum(np.searchsorted(dist._cdf, u, side="right"), len(dist.support) - 1)
    return np.asarray(dist.support, dtype=np.int64)[idx]


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    """Total-variation distance ``½ Σ |p_k - q_k|`` between aligned mass vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p - q).sum())


def empirical_masses(labels: np.ndarray, support: Sequence[int]) -> np.ndarray:
    """Empirical frequencies of *labels* over *support*."""
    support = np.asarray(support)
    counts = np.array([(labels == k).sum() for k in support], dtype=float)
    return counts / max(len(labels), 1)


# =====================================================================
# Rényi divergence
# =====================================================================


def renyi_log_sum(p: np.ndarray, q: np.ndarray, alpha: float) -> float:
    """``log Σ_k q_k (p_k / q_k)^α`` for aligned non-negative mass arrays.

    Masses need not be normalized, which lets the privacy oracle evaluate
    sums under alternative normalizers.  Returns ``+inf`` when some ``p_k > 0``
    has ``q_k = 0``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    active = p > 0
    if np.any(active & (q <= 0)):
        return math.inf
    if not np.any(active):
        return -math.inf
    log_terms = alpha * np.log(p[active]) + (1.0 - alpha) * np.log(q[active])
    spread = float(np.max(log_terms) - np.min(log_terms))
    if spread > LOG_DOMAIN_THRESHOLD:
        logger.debug("Rényi sum spans %.1f nats; accumulating in log domain", spread)
        return float(logsumexp(log_terms))
    shift = float(np.max(log_terms))
    return shift + math.log(math.fsum(np.exp(log_terms - shift)))


def renyi_divergence(P: DiscreteDistribution, Q: DiscreteDistribution, alpha: float) -> float:
    """Order-α Rényi divergence ``D_α(P || Q)`` for distributions on the same support."""
    if not alpha > 1.0:
        raise ConfigError(f"alpha must be > 1, got {alpha!r}")
    if P.support != Q.support:
        raise ConfigError("P and Q must share the same support")
    log_sum = renyi_log_sum(P.as_array(), Q.as_array(), alpha)
    if math.isinf(log_sum):
        return log_sum
    # Clamp rounding noise for P == Q.
    return max(log_sum / (alpha - 1.0), 0.0)
