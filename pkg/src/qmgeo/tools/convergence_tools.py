"""
Convergence Tools: optimality-gap machinery for perturbed gradient descent under PL.

For ``w_{t+1} = w_t - η(∇F(w_t) + δ_t)`` on an L-smooth, μ-PL objective::

    F(w_{t+1}) - F* ≤ X (F(w_t) - F*) + Y_t + Z_t
    X   = 1 - 2μη(1 - ηL/2)
    Y_t = η² (L/2) ‖δ_t‖²
    Z_t = η(-1 + ηL) ∇F(w_t)ᵀ δ_t

:func:`gap_bound` unrolls that recursion, :func:`verify_descent_inequality`
checks it round by round on a measured trace.  L, μ and F* are user inputs;
for neural-network runs the result is only diagnostic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..constants import INEQUALITY_TOLERANCE
from ..errors import ConfigError, DataError

logger = logging.getLogger(__name__)

GAP_FORMS = ("paper", "recursive")


@dataclass(frozen=True)
class BoundParams:
    """Constants of the optimality-gap recursion."""

    L: float
    mu: float
    eta: float
    F0_gap: float
    T: int

    def __post_init__(self):
        if not self.L > 0:
            raise ConfigError(f"must be > 0, got {self.L!r}", "bound.L")
        if not self.mu > 0:
            raise ConfigError(f"must be > 0, got {self.mu!r}", "bound.mu")
        if self.mu > self.L:
            raise ConfigError(f"PL constant mu={self.mu!r} cannot exceed L={self.L!r}", "bound.mu")
        if not self.eta > 0:
            raise ConfigError(f"must be > 0, got {self.eta!r}", "bound.eta")
        if int(self.T) != self.T or self.T < 1:
            raise ConfigError(f"must be a positive integer, got {self.T!r}", "bound.T")
        object.__setattr__(self, "T", int(self.T))

    @property
    def X(self) -> float:
        return 1.0 - 2.0 * self.mu * self.eta * (1.0 - self.eta * self.L / 2.0)

    @property
    def contracting(self) -> bool:
        """``0 < X < 1``, i.e. ``0 < η < 2/L`` and ``μη(2 - ηL) < 1``."""
        return 0.0 < self.X < 1.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class StepTrace:
    """Per-round perturbation measurements (arrays of equal length)."""

    delta_norm_sq: np.ndarray
    grad_dot_delta: np.ndarray
    loss_gap: Optional[np.ndarray] = None

    def __post_init__(self):
        self.delta_norm_sq = np.asarray(self.delta_norm_sq, dtype=float)
        self.grad_dot_delta = np.asarray(self.grad_dot_delta, dtype=float)
        if self.delta_norm_sq.shape != self.grad_dot_delta.shape:
            raise DataError("delta_norm_sq and grad_dot_delta must have the same length")
        if np.any(self.delta_norm_sq < 0):
            raise DataError("delta_norm_sq must be non-negative")
        if self.loss_gap is not None:
            self.loss_gap = np.asarray(self.loss_gap, dtype=float)

    def __len__(self) -> int:
        return int(self.delta_norm_sq.size)


@dataclass
class GapBound:
    """Bound trajectory ``G_1..G_T`` plus the contraction diagnostics."""

    values: np.ndarray
    X: float
    contracting: bool
    form: str


def step_terms(bp: BoundParams, delta_norm_sq: float, grad_dot_delta: float) -> Tuple[float, float, float]:
    """``(X, Y, Z)`` for one round."""
    if not (math.isfinite(delta_norm_sq) and math.isfinite(grad_dot_delta)):
        raise DataError("step terms need finite inputs")
    X = bp.X
    Y = bp.eta**2 * (bp.L / 2.0) * delta_norm_sq
    Z = bp.eta * (-1.0 + bp.eta * bp.L) * grad_dot_delta
    return X, Y, Z


def gap_bound(bp: BoundParams, trace: StepTrace, form: str = "paper") -> GapBound:
    """Optimality-gap bound sequence ``G_t`` for ``t = 1..T``.

    ``form="paper"`` evaluates the printed unrolled sum
    ``G_t = X^t G_0 + Σ_{a=1}^{t-1} (Y_a + Z_a) X^{t-a-1}`` with trace rows
    indexed from 0.  ``form="recursive"`` iterates ``G_t = X G_{t-1} + Y_{t-1} + Z_{t-1}``,
    which also carries the first round's perturbation.
    """
    if form not in GAP_FORMS:
        raise ConfigError(f"unknown form {form!r}; use one of {', '.join(GAP_FORMS)}")
    if len(trace) < bp.T:
        raise DataError(f"trace has {len(trace)} rounds, need at least T={bp.T}")

    X = bp.X
    if not bp.contracting:
        logger.warning("X = %.6g outside (0, 1): the recursion does not contract", X)

    Y = bp.eta**2 * (bp.L / 2.0) * trace.delta_norm_sq[: bp.T]
    Z = bp.eta * (-1.0 + bp.eta * bp.L) * trace.grad_dot_delta[: bp.T]
    YZ = Y + Z

    values = np.empty(bp.T, dtype=float)
    if form == "recursive":
        g = bp.F0_gap
        for t in range(bp.T):
            g = X * g + YZ[t]
            values[t] = g
    else:
        for t in range(1, bp.T + 1):
            acc = X**t * bp.F0_gap
            for a in range(1, t):
                acc += YZ[a] * X ** (t - a - 1)
            values[t - 1] = acc
    return GapBound(values=values, X=X, contracting=bp.contracting, form=form)


def verify_descent_inequality(
    bp: BoundParams,
    losses: Sequence[float],
    next_losses: Sequence[float],
    delta_norm_sq: Sequence[float],
    grad_dot_delta: Sequence[float],
    f_star: Optional[float],
    tolerance: float = INEQUALITY_TOLERANCE,
) -> np.ndarray:
    """Check ``F(w_{t+1}) - F* ≤ X(F(w_t) - F*) + Y_t + Z_t`` round by round.

    Returns a boolean array, one entry per round.
    """
    if f_star is None or not math.isfinite(f_star):
        raise ConfigError("F* must be supplied to check the descent inequality", "bound.f_star")
    losses = np.asarray(losses, dtype=float)
    next_losses = np.asarray(next_losses, dtype=float)
    dns = np.asarray(delta_norm_sq, dtype=float)
    gdd = np.asarray(grad_dot_delta, dtype=float)
    if not (losses.shape == next_losses.shape == dns.shape == gdd.shape):
        raise DataError("loss, next-loss and perturbation columns must have equal length")

    X = bp.X
    Y = bp.eta**2 * (bp.L / 2.0) * dns
    Z = bp.eta * (-1.0 + bp.eta * bp.L) * gdd
    lhs = next_losses - f_star
    rhs = X * (losses - f_star) + Y + Z
    scale = np.maximum.reduce([np.abs(lhs), np.abs(X * (losses - f_star)), np.abs(Y), np.abs(Z), np.ones_like(lhs)])
    holds = lhs <= rhs + tolerance * scale
    n_bad = int((~holds).sum())
    if n_bad:
        logger.info("descent inequality violated in %d of %d rounds", n_bad, holds.size)
    return holds


def bound_table(
    bp: BoundParams,
    metrics: pd.DataFrame,
    f_star: float,
) -> pd.DataFrame:
    """Bound trajectory and inequality flags for a metrics table.

    *metrics* needs ``round``, ``train_loss``, ``train_loss_next``,
    ``perturbation_norm`` and ``grad_dot_perturbation`` columns.  Row ``t`` of the
    output describes the state after round ``t``: the empirical gap ``F(w_{t+1}) - F*``, both bound
    forms ``G_{t+1}``, and whether the one-step inequality held.
    """
    required = ["round", "train_loss", "train_loss_next", "perturbation_norm", "grad_dot_perturbation"]
    for col in required:
        if col not in metrics.columns:
            raise DataError(f"metrics table is missing column {col!r}")

    dns = metrics["perturbation_norm"].to_numpy(dtype=float) ** 2
    gdd = metrics["grad_dot_perturbation"].to_numpy(dtype=float)
    trace = StepTrace(delta_norm_sq=dns, grad_dot_delta=gdd)
    paper = gap_bound(bp, trace, form="paper")
    recursive = gap_bound(bp, trace, form="recursive")
    holds = verify_descent_inequality(
        bp,
        metrics["train_loss"].to_numpy(dtype=float)[: bp.T],
        metrics["train_loss_next"].to_numpy(dtype=float)[: bp.T],
        dns[: bp.T],
        gdd[: bp.T],
        f_star,
    )
    return pd.DataFrame(
        {
            "round": metrics["round"].to_numpy()[: bp.T],
            "empirical_gap": metrics["train_loss_next"].to_numpy(dtype=float)[: bp.T] - f_star,
            "bound_G_t": paper.values,
            "bound_G_t_recursive": recursive.values,
            "inequality_holds": holds,
        }
    )
