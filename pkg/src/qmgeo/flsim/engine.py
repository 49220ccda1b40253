"""
Federated training loop with clipping, QMGeo quantization and per-round telemetry.

Each round every client computes a local gradient, clips it element-wise,
quantizes it (unless the quantizer is ``None``) and uploads it; the server
applies ``w ← w - η Σ_n a_n u_n`` with ``a_n = 1`` (plain sum) or
``a_n = |B_n|/B`` (weighted).  The perturbation ``δ_t`` is the transmitted
aggregate minus the reference aggregate: the raw clipped aggregate for the
MLP, the exact ``∇F(w_t)`` for the quadratic objective.

All randomness is drawn from streams keyed by ``(master_seed, purpose,
round, client)``, so client evaluation order never changes results.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..config import FLConfig
from ..errors import ConfigError, DataError
from ..tools.privacy_tools import compose_rounds, eps_vector_paper, rdp_vector_paper
from ..tools.quantizer_tools import clip_elementwise, communication_bits, dequantize, quantize_levels
from ..utils.streams import PURPOSE_BATCH, PURPOSE_QUANTIZE, derive_seed, derive_stream
from .dataset import Dataset, load_csv_dataset, pca_reduce, synth_dataset
from .model import ModelShape, accuracy, init_params, local_gradient, loss
from .quadratic import QuadraticProblem, make_quadratic

logger = logging.getLogger(__name__)


# =====================================================================
# Types
# =====================================================================


@dataclass
class RoundMetrics:
    """Telemetry for one communication round (CSV columns in declared order).

    ``delta_*`` describe the quantization error: transmitted aggregate minus the raw
    clipped aggregate. ``perturbation_*`` describe transmitted aggregate minus the
    objective's reference gradient, which is what the descent inequality consumes;
    for the quadratic objective that reference is the exact ``∇F`` and the clipping
    error is included.
    """

    round: int
    train_loss: float
    holdout_accuracy: float
    delta_norm: float
    grad_dot_delta: float
    eps_round_pure: float
    eps_round_rdp: float
    eps_cumulative: float
    train_loss_next: float
    perturbation_norm: float
    grad_dot_perturbation: float

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ClientUpdate:
    """What one client uploads in one round, plus the pre-quantization record."""

    client: int
    transmitted: np.ndarray
    raw_clipped: np.ndarray
    raw_gradient: np.ndarray
    batch_size: int
    kappa: float
    levels: Optional[np.ndarray] = None

    @property
    def delta(self) -> np.ndarray:
        return self.transmitted - self.raw_clipped


@dataclass
class TrainingRun:
    """Result of :func:`simulate`."""

    metrics: List[RoundMetrics]
    params: np.ndarray
    summary: Dict[str, Any] = field(default_factory=dict)


# =====================================================================
# MLP objective
# =====================================================================


class MLPObjective:
    """Softmax-MLP clients over a partitioned :class:`Dataset`."""

    def __init__(self, shape: ModelShape, dataset: Dataset, aggregation: str = "sum"):
        if dataset.input_dim != shape.input_dim:
            raise DataError(
                f"dataset has {dataset.input_dim} features but fl.model.input_dim is {shape.input_dim}"
            )
        if int(dataset.labels.max()) >= shape.classes:
            raise DataError(
                f"dataset has labels up to {int(dataset.labels.max())} but fl.model.classes is {shape.classes}"
            )
        self.shape = shape
        self.dataset = dataset
        sizes = np.asarray(dataset.partition_sizes, dtype=float)
        self._loss_weights = sizes / sizes.sum()
        self._agg_weights = np.ones(sizes.size) if aggregation == "sum" else self._loss_weights

    @property
    def dim(self) -> int:
        return self.shape.dim

    @property
    def n_clients(self) -> int:
        return self.dataset.n_clients

    def initial_params(self, seed: int) -> np.ndarray:
        return init_params(self.shape, seed)

    def local_gradient(self, w: np.ndarray, client: int, batch_size: int, rng: np.random.Generator):
        """Mean gradient over a uniform mini-batch drawn without replacement."""
        idx = self.dataset.partitions[client]
        if batch_size > idx.size:
            raise ConfigError(
                f"batch size {batch_size} exceeds client {client}'s {idx.size} samples", "fl.batch_size"
            )
        batch = rng.choice(idx, size=batch_size, replace=False)
        return local_gradient(w, self.shape, self.dataset.features[batch], self.dataset.labels[batch])

    def sampling_rate(self, batch_size: int) -> float:
        """``κ = b / min_n |B_n|`` (the largest per-client rate)."""
        return batch_size / min(self.dataset.partition_sizes)

    def aggregation_weights(self) -> np.ndarray:
        return self._agg_weights

    def client_loss(self, w: np.ndarray, client: int) -> float:
        X, y = self.dataset.client_data(client)
        return loss(w, self.shape, X, y)

    def loss(self, w: np.ndarray) -> float:
        """``F(w) = Σ_n (|B_n|/B) F_n(w)``."""
        return float(sum(a * self.client_loss(w, n) for n, a in enumerate(self._loss_weights)))

    def reference_gradient(self, w: np.ndarray, raw_clipped: Sequence[np.ndarray]) -> np.ndarray:
        return np.sum([a * g for a, g in zip(self._agg_weights, raw_clipped)], axis=0)

    def holdout_accuracy(self, w: np.ndarray) -> float:
        if self.dataset.holdout.size == 0:
            return float("nan")
        X, y = self.dataset.holdout_data()
        return accuracy(w, self.shape, X, y)


Objective = Union[MLPObjective, QuadraticProblem]


def build_dataset(cfg: FLConfig) -> Dataset:
    """Materialize the dataset described by ``cfg.dataset`` (PCA applied if requested)."""
    src = cfg.dataset
    if src.kind == "csv":
        dataset = load_csv_dataset(src.path, src.label_column, cfg.clients, cfg.master_seed, src.holdout_fraction)
    else:
        dim = cfg.input_dim if src.raw_dim is None else src.raw_dim
        dataset = synth_dataset(
            cfg.master_seed, src.samples, dim, cfg.classes, src.separation, cfg.clients, src.holdout_fraction
        )
    if src.pca_dim is not None and src.pca_dim < dataset.input_dim:
        dataset = pca_reduce(dataset, src.pca_dim, cfg.master_seed)
    return dataset


def build_objective(cfg: FLConfig, dataset: Optional[Dataset] = None) -> Objective:
    if cfg.objective == "quadratic":
        q = cfg.quadratic
        return make_quadratic(
            cfg.master_seed, cfg.clients, q.dim, (q.eigen_min, q.eigen_max), q.centre_scale, cfg.aggregation
        )
    if dataset is None:
        dataset = build_dataset(cfg)
    shape = ModelShape(cfg.input_dim, cfg.hidden_dim, cfg.classes)
    return MLPObjective(shape, dataset, cfg.aggregation)


# =====================================================================
# Client and server steps
# =====================================================================


def client_update(
    w: np.ndarray,
    objective: Objective,
    client: int,
    cfg: FLConfig,
    round_index: int,
) -> ClientUpdate:
    """Mini-batch gradient → element-wise clip → QMGeo quantization for one client."""
    rng = derive_stream(cfg.master_seed, PURPOSE_BATCH, round_index, client)
    raw = objective.local_gradient(w, client, cfg.batch_size, rng)
    clipped = clip_elementwise(raw, cfg.w_max)

    levels = None
    if cfg.quantizer is None:
        transmitted = clipped.copy()
    else:
        seed_seq = derive_seed(cfg.master_seed, PURPOSE_QUANTIZE, round_index, client)
        levels = quantize_levels(clipped, cfg.quantizer, seed_seq)
        transmitted = dequantize(levels, cfg.quantizer)

    return ClientUpdate(
        client=client,
        transmitted=transmitted,
        raw_clipped=clipped,
        raw_gradient=raw,
        batch_size=cfg.batch_size,
        kappa=objective.sampling_rate(cfg.batch_size),
        levels=levels,
    )


def server_aggregate(
    w: np.ndarray,
    updates: Sequence[np.ndarray],
    eta: float,
    weights: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """``w - η Σ_n a_n u_n`` with ``a_n = 1`` unless *weights* is given."""
    w = np.asarray(w, dtype=float)
    if weights is None:
        weights = np.ones(len(updates))
    if len(weights) != len(updates):
        raise DataError(f"{len(updates)} updates but {len(weights)} weights")
    total = np.zeros_like(w)
    for n, (a, u) in enumerate(zip(weights, updates)):
        u = np.asarray(u, dtype=float)
        if u.shape != w.shape:
            raise DataError(f"update from client {n} has shape {u.shape}, model has {w.shape}")
        total += a * u
    return w - eta * total


# =====================================================================
# Training loop
# =====================================================================


def per_round_eps(cfg: FLConfig, d: int, kappa: float):
    """``(pure, rdp)`` per-round ε of the vector mechanism; ``+inf`` without a DP quantizer."""
    q = cfg.quantizer
    if q is None or q.p >= 1.0:
        return math.inf, math.inf
    return (
        eps_vector_paper(q.R, q.p, d, kappa),
        rdp_vector_paper(q.R, q.p, cfg.alpha, d, kappa),
    )


def simulate(cfg: FLConfig, dataset: Optional[Dataset] = None) -> TrainingRun:
    """Run ``cfg.rounds`` rounds and return metrics, final parameters and a run summary."""
    objective = build_objective(cfg, dataset)
    w = objective.initial_params(cfg.master_seed)
    weights = objective.aggregation_weights()
    kappa = objective.sampling_rate(cfg.batch_size)
    eps_pure, eps_rdp = per_round_eps(cfg, objective.dim, kappa)

    logger.info(
        "Training %s (d=%d) over %d clients for %d rounds; quantizer=%s, kappa=%.6g",
        cfg.objective, objective.dim, objective.n_clients, cfg.rounds,
        "none" if cfg.quantizer is None else f"R={cfg.quantizer.R} p={cfg.quantizer.p}", kappa,
    )

    metrics: List[RoundMetrics] = []
    loss_t = objective.loss(w)
    f0 = loss_t
    for t in range(cfg.rounds):
        updates = [client_update(w, objective, n, cfg, t) for n in range(objective.n_clients)]
        transmitted = np.sum([a * u.transmitted for a, u in zip(weights, updates)], axis=0)
        raw_clipped = [u.raw_clipped for u in updates]
        raw_aggregate = np.sum([a * g for a, g in zip(weights, raw_clipped)], axis=0)
        delta = transmitted - raw_aggregate
        reference = objective.reference_gradient(w, raw_clipped)
        perturbation = transmitted - reference

        if logger.isEnabledFor(logging.DEBUG):
            norms = ", ".join(f"{np.linalg.norm(u.delta):.4g}" for u in updates)
            logger.debug("round %d per-client |delta|: %s", t, norms)

        w = server_aggregate(w, [u.transmitted for u in updates], cfg.learning_rate, weights)
        loss_next = objective.loss(w)
        metrics.append(
            RoundMetrics(
                round=t,
                train_loss=loss_t,
                holdout_accuracy=objective.holdout_accuracy(w),
                delta_norm=float(np.linalg.norm(delta)),
                grad_dot_delta=float(raw_aggregate @ delta),
                eps_round_pure=eps_pure,
                eps_round_rdp=eps_rdp,
                eps_cumulative=compose_rounds(eps_rdp, t + 1),
                train_loss_next=loss_next,
                perturbation_norm=float(np.linalg.norm(perturbation)),
                grad_dot_perturbation=float(reference @ perturbation),
            )
        )
        if not math.isfinite(loss_next):
            logger.warning("training loss diverged at round %d", t)
        loss_t = loss_next

    last = metrics[-1]
    summary: Dict[str, Any] = {
        "objective": cfg.objective,
        "model_dim": objective.dim,
        "clients": objective.n_clients,
        "rounds": cfg.rounds,
        "kappa": kappa,
        "initial_train_loss": f0,
        "final_train_loss": last.train_loss_next,
        "final_holdout_accuracy": last.holdout_accuracy,
        "eps_round_pure": eps_pure,
        "eps_round_rdp": eps_rdp,
        "eps_cumulative": last.eps_cumulative,
        "communication": communication_bits(objective.dim, cfg.quantizer),
    }
    if isinstance(objective, QuadraticProblem):
        summary.update(objective.constants())
        summary["F0_gap"] = f0 - objective.f_star
    else:
        summary["partition_sizes"] = objective.dataset.partition_sizes
        summary["holdout_size"] = int(objective.dataset.holdout.size)
    logger.info(
        "Finished: train loss %.6g, holdout accuracy %.4f, cumulative eps %s",
        last.train_loss_next, last.holdout_accuracy, last.eps_cumulative,
    )
    return TrainingRun(metrics=metrics, params=w, summary=summary)


def run_training(cfg: FLConfig, dataset: Optional[Dataset] = None) -> List[RoundMetrics]:
    """Per-round metrics of a full training run."""
    return simulate(cfg, dataset).metrics
