"""
Quadratic test objective with exactly known smoothness, PL constant and optimum.

Client ``n`` holds ``F_n(w) = ½ Σ_j λ_j (w_j - c_{n,j})²`` with a shared
diagonal Hessian ``diag(λ)``.  The server descends the aggregate
``F(w) = Σ_n a_n F_n(w)`` where ``a_n`` are the aggregation weights, so
``L = (Σ a_n)·max λ``, ``μ = (Σ a_n)·min λ`` and the minimizer is the
``a``-weighted mean of the client centres.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..constants import DEFAULT_QUADRATIC_DIM, DEFAULT_QUADRATIC_EIGEN_RANGE
from ..errors import ConfigError, DataError
from ..utils.streams import PURPOSE_DATA, PURPOSE_INIT, derive_stream

logger = logging.getLogger(__name__)

# Sub-path under PURPOSE_DATA (0 and 1 belong to the dataset module)
_DATA_QUADRATIC = 2


@dataclass(frozen=True)
class QuadraticProblem:
    """Per-client quadratics sharing one diagonal Hessian."""

    eigenvalues: np.ndarray         # (dim,)
    centres: np.ndarray             # (clients, dim)
    weights: np.ndarray             # (clients,) aggregation weights a_n

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        centres = np.atleast_2d(np.asarray(self.centres, dtype=float))
        weights = np.asarray(self.weights, dtype=float)
        if np.any(lam <= 0):
            raise ConfigError("Hessian eigenvalues must be positive", "fl.quadratic")
        if centres.shape[1] != lam.size or weights.shape != (centres.shape[0],):
            raise DataError("eigenvalues, centres and weights have inconsistent shapes")
        if np.any(weights <= 0):
            raise ConfigError("aggregation weights must be positive", "fl.aggregation")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "centres", centres)
        object.__setattr__(self, "weights", weights)

    # ── shape ──

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def n_clients(self) -> int:
        return int(self.centres.shape[0])

    # ── exact constants ──

    @property
    def curvature(self) -> np.ndarray:
        """Diagonal of the aggregate Hessian."""
        return self.weights.sum() * self.eigenvalues

    @property
    def L(self) -> float:
        return float(self.curvature.max())

    @property
    def mu(self) -> float:
        return float(self.curvature.min())

    @property
    def optimum(self) -> np.ndarray:
        return self.weights @ self.centres / self.weights.sum()

    @property
    def f_star(self) -> float:
        return self.loss(self.optimum)

    def constants(self) -> Dict[str, float]:
        return {"L": self.L, "mu": self.mu, "f_star": self.f_star}

    # ── objective ──

    def client_loss(self, w: np.ndarray, client: int) -> float:
        diff = np.asarray(w, dtype=float) - self.centres[client]
        return 0.5 * float(np.dot(self.eigenvalues, diff * diff))

    def client_gradient(self, w: np.ndarray, client: int) -> np.ndarray:
        return self.eigenvalues * (np.asarray(w, dtype=float) - self.centres[client])

    def loss(self, w: np.ndarray) -> float:
        return float(sum(a * self.client_loss(w, n) for n, a in enumerate(self.weights)))

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return self.curvature * (np.asarray(w, dtype=float) - self.optimum)

    # ── engine interface ──

    def initial_params(self, seed: int) -> np.ndarray:
        scale = float(np.abs(self.centres).max()) if self.centres.size else 1.0
        return self.optimum + derive_stream(seed, PURPOSE_INIT).uniform(-2.0, 2.0, self.dim) * scale

    def local_gradient(self, w: np.ndarray, client: int, batch_size: int, rng: np.random.Generator):
        """Exact client gradient; the full local objective is used every round."""
        return self.client_gradient(w, client)

    def sampling_rate(self, batch_size: int) -> float:
        return 1.0

    def aggregation_weights(self) -> np.ndarray:
        return self.weights

    def reference_gradient(self, w: np.ndarray, raw_clipped: Sequence[np.ndarray]) -> np.ndarray:
        """``∇F(w)``: the descent-check perturbation then also carries the clipping error."""
        return self.gradient(w)

    def holdout_accuracy(self, w: np.ndarray) -> float:
        return float("nan")


def make_quadratic(
    seed: int,
    clients: int,
    dim: int = DEFAULT_QUADRATIC_DIM,
    eigen_range: Tuple[float, float] = DEFAULT_QUADRATIC_EIGEN_RANGE,
    centre_scale: float = 1.0,
    aggregation: str = "sum",
) -> QuadraticProblem:
    """Evenly spaced eigenvalues over *eigen_range*, Gaussian client centres."""
    lo, hi = float(eigen_range[0]), float(eigen_range[1])
    if not 0 < lo <= hi:
        raise ConfigError(f"need 0 < min <= max, got ({lo!r}, {hi!r})", "fl.quadratic.eigen_range")
    if dim < 1:
        raise ConfigError(f"must be >= 1, got {dim!r}", "fl.quadratic.dim")
    if clients < 1:
        raise ConfigError(f"must be >= 1, got {clients!r}", "fl.clients")
    eigenvalues = np.linspace(lo, hi, dim)
    centres = centre_scale * derive_stream(seed, PURPOSE_DATA, _DATA_QUADRATIC).standard_normal(
        (clients, dim)
    )
    weights = np.ones(clients) if aggregation == "sum" else np.full(clients, 1.0 / clients)
    problem = QuadraticProblem(eigenvalues, centres, weights)
    logger.debug("quadratic problem: dim=%d, L=%.6g, mu=%.6g, F*=%.6g", dim, problem.L, problem.mu, problem.f_star)
    return problem


def descend(
    problem: QuadraticProblem,
    w0: np.ndarray,
    eta: float,
    perturbations: Sequence[np.ndarray],
) -> Dict[str, List[float]]:
    """Run ``w ← w - η(∇F(w) + δ_t)`` with the given perturbations.

    Returns per-round ``loss``, ``loss_next``, ``delta_norm_sq`` and
    ``grad_dot_delta`` lists for :func:`~qmgeo.tools.convergence_tools.verify_descent_inequality`.
    """
    w = np.asarray(w0, dtype=float).copy()
    out: Dict[str, List[float]] = {"loss": [], "loss_next": [], "delta_norm_sq": [], "grad_dot_delta": []}
    for delta in perturbations:
        delta = np.asarray(delta, dtype=float)
        g = problem.gradient(w)
        out["loss"].append(problem.loss(w))
        out["delta_norm_sq"].append(float(delta @ delta))
        out["grad_dot_delta"].append(float(g @ delta))
        w = w - eta * (g + delta)
        out["loss_next"].append(problem.loss(w))
    return out
