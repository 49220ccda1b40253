"""
Datasets for the federated simulation: synthetic Gaussian blobs, CSV ingestion,
client partitioning and PCA reduction.

A :class:`Dataset` keeps every sample in one feature matrix; clients and the
server's holdout set are index lists into it.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from ..constants import (
    DEFAULT_CLIENTS,
    DEFAULT_SYNTH_CLASSES,
    DEFAULT_SYNTH_SAMPLES,
    DEFAULT_SYNTH_SEPARATION,
    HOLDOUT_FRACTION,
    PCA_MAX_ITER,
    PCA_OVERSAMPLE,
    PCA_TOL,
)
from ..errors import ConfigError, DataError, NumericalError
from ..utils.streams import PURPOSE_DATA, PURPOSE_PCA, derive_stream
from ..utils.table_io import atomic_write_text

logger = logging.getLogger(__name__)

# Sub-paths under PURPOSE_DATA
_DATA_SYNTH = 0
_DATA_SPLIT = 1


@dataclass(frozen=True)
class PCABasis:
    """Principal axes fitted on the training partition."""

    mean: np.ndarray
    components: np.ndarray          # (input_dim, k), orthonormal columns
    eigenvalues: np.ndarray         # (k,), non-increasing
    total_variance: float

    @property
    def explained_variance_ratio(self) -> float:
        if self.total_variance <= 0:
            return 1.0
        return float(self.eigenvalues.sum() / self.total_variance)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) @ self.components


@dataclass
class Dataset:
    """Features, integer labels, per-client partitions and the holdout index list."""

    features: np.ndarray
    labels: np.ndarray
    partitions: List[np.ndarray]
    holdout: np.ndarray
    classes: int
    pca: Optional[PCABasis] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DataError(f"features must be a matrix, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DataError("labels must have one entry per sample")

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_clients(self) -> int:
        return len(self.partitions)

    @property
    def train_indices(self) -> np.ndarray:
        if not self.partitions:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(self.partitions)

    @property
    def partition_sizes(self) -> List[int]:
        return [int(p.size) for p in self.partitions]

    def client_data(self, client: int):
        idx = self.partitions[client]
        return self.features[idx], self.labels[idx]

    def holdout_data(self):
        return self.features[self.holdout], self.labels[self.holdout]


# ── Partitioning ────────────────────────────────────────────────────


def split_indices(
    n_samples: int,
    clients: int,
    seed: int,
    holdout_fraction: float = HOLDOUT_FRACTION,
):
    """Random holdout plus an even split of the remainder across *clients*.

    Returns ``(partitions, holdout)``; partition sizes differ by at most one.
    """
    if clients < 1:
        raise ConfigError(f"must be >= 1, got {clients!r}", "fl.clients")
    if not (0.0 <= holdout_fraction < 1.0):
        raise ConfigError(f"holdout fraction must lie in [0, 1), got {holdout_fraction!r}")
    perm = derive_stream(seed, PURPOSE_DATA, _DATA_SPLIT).permutation(n_samples)
    n_holdout = int(round(holdout_fraction * n_samples))
    holdout = np.sort(perm[:n_holdout])
    train = perm[n_holdout:]
    if train.size < clients:
        raise ConfigError(
            f"{train.size} training samples cannot be split across {clients} clients", "fl.clients"
        )
    partitions = [np.sort(part) for part in np.array_split(train, clients)]
    return partitions, holdout


# ── Sources ─────────────────────────────────────────────────────────


def synth_dataset(
    seed: int,
    samples: int = DEFAULT_SYNTH_SAMPLES,
    input_dim: int = 100,
    classes: int = DEFAULT_SYNTH_CLASSES,
    separation: float = DEFAULT_SYNTH_SEPARATION,
    clients: int = DEFAULT_CLIENTS,
    holdout_fraction: float = HOLDOUT_FRACTION,
) -> Dataset:
    """Gaussian class blobs: ``separation · u_c + N(0, I)`` with unit-norm random centres ``u_c``."""
    if classes < 2:
        raise ConfigError(f"must be >= 2, got {classes!r}", "fl.dataset.classes")
    if samples < classes:
        raise ConfigError(f"need at least one sample per class, got {samples!r}", "fl.dataset.samples")
    if input_dim < 1:
        raise ConfigError(f"must be >= 1, got {input_dim!r}", "fl.model.input_dim")

    rng = derive_stream(seed, PURPOSE_DATA, _DATA_SYNTH)
    centres = rng.standard_normal((classes, input_dim))
    centres /= np.linalg.norm(centres, axis=1, keepdims=True)
    labels = rng.permutation(np.arange(samples) % classes)
    features = separation * centres[labels] + rng.standard_normal((samples, input_dim))

    partitions, holdout = split_indices(samples, clients, seed, holdout_fraction)
    logger.debug(
        "synthetic dataset: %d samples, %d dims, %d classes, separation %.3g",
        samples, input_dim, classes, separation,
    )
    return Dataset(features, labels, partitions, holdout, classes)


_LINE_RE = re.compile(r"line (\d+)")


def load_csv_dataset(
    path: str | Path,
    label_column: str = "label",
    clients: int = DEFAULT_CLIENTS,
    seed: int = 0,
    holdout_fraction: float = HOLDOUT_FRACTION,
) -> Dataset:
    """Load a numeric CSV with a header row; *label_column* holds class indices."""
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", str(path))
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.ParserError as exc:
        m = _LINE_RE.search(str(exc))
        raise DataError(f"ragged row: {exc}", str(path), int(m.group(1)) if m else None) from exc
    except pd.errors.EmptyDataError as exc:
        raise DataError("empty file", str(path)) from exc

    if label_column not in df.columns:
        raise DataError(f"label column {label_column!r} not found", str(path), 1)
    if df.shape[0] == 0:
        raise DataError("no data rows", str(path))

    missing = df.isna().any(axis=1).to_numpy()
    if missing.any():
        row = int(np.flatnonzero(missing)[0])
        raise DataError("row has missing fields", str(path), row + 2)
    numeric = df.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise DataError("row has non-numeric fields", str(path), row + 2)

    raw_labels = numeric[label_column].to_numpy(dtype=float)
    if np.any(raw_labels < 0) or np.any(raw_labels != np.round(raw_labels)):
        row = int(np.flatnonzero((raw_labels < 0) | (raw_labels != np.round(raw_labels)))[0])
        raise DataError("labels must be non-negative integers", str(path), row + 2)
    labels = raw_labels.astype(np.int64)
    features = numeric.drop(columns=[label_column]).to_numpy(dtype=float)

    partitions, holdout = split_indices(len(labels), clients, seed, holdout_fraction)
    logger.info("Loaded %d samples x %d features from %s", features.shape[0], features.shape[1], path)
    return Dataset(features, labels, partitions, holdout, int(labels.max()) + 1)


def write_csv_dataset(dataset: Dataset, path: str | Path, label_column: str = "label") -> Path:
    """Write features and labels as a CSV that :func:`load_csv_dataset` reads back exactly."""
    columns = {f"x{j}": dataset.features[:, j] for j in range(dataset.input_dim)}
    columns[label_column] = dataset.labels
    text = pd.DataFrame(columns).to_csv(index=False, lineterminator="\n", float_format="%.17g")
    return atomic_write_text(path, text)


# ── PCA ─────────────────────────────────────────────────────────────


def _rayleigh_ritz(A: np.ndarray, Q: np.ndarray):
    """Ritz pairs of *A* on span(*Q*), largest first, plus ``A @ V``."""
    Z = A @ Q
    H = Q.T @ Z
    theta, S = np.linalg.eigh(0.5 * (H + H.T))
    order = np.argsort(theta)[::-1]
    theta, S = theta[order], S[:, order]
    return theta, Q @ S, Z @ S


def fit_pca(
    X: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = PCA_MAX_ITER,
    tol: float = PCA_TOL,
) -> PCABasis:
    """Top-*k* covariance eigenvectors of *X* by orthogonal subspace iteration.

    The block carries ``k + max(k, PCA_OVERSAMPLE)`` columns (capped at the input
    dimension) and is re-orthonormalized with a QR step every iteration. Component
    ``j`` has converged when ``|A v_j - θ_j v_j| <= tol·θ_j``, or when the residual is
    at the rounding floor ``dim·eps·trace(A)``.
    """
    X = np.asarray(X, dtype=float)
    n, dim = X.shape
    if not 1 <= k <= dim:
        raise ConfigError(f"must lie in [1, {dim}], got {k!r}", "fl.dataset.pca_dim")
    if n < 2:
        raise DataError("PCA needs at least two training samples")

    mean = X.mean(axis=0)
    Xc = X - mean
    A = (Xc.T @ Xc) / (n - 1)
    total = float(np.trace(A))
    floor = dim * np.finfo(float).eps * max(total, np.finfo(float).tiny)

    block = min(dim, k + max(k, PCA_OVERSAMPLE))
    Q, _ = np.linalg.qr(derive_stream(seed, PURPOSE_PCA).standard_normal((dim, block)))
    residual = np.full(k, np.inf)
    worst = np.inf
    for it in range(1, max_iter + 1):
        theta, V, AV = _rayleigh_ritz(A, Q)
        residual = np.linalg.norm(AV[:, :k] - V[:, :k] * theta[:k], axis=0)
        limit = tol * np.abs(theta[:k]) + floor
        worst = float(np.max(residual / limit))
        if worst <= 1.0:
            break
        Q, _ = np.linalg.qr(AV)
    else:
        raise NumericalError(
            f"subspace iteration did not converge in {max_iter} iterations",
            float(np.max(residual)),
        )
    logger.debug("PCA converged after %d iteration(s), worst residual ratio %.3e", it, worst)

    components = V[:, :k]
    # sign convention: largest-magnitude entry of each axis is positive
    pivots = np.argmax(np.abs(components), axis=0)
    components = components * np.sign(components[pivots, np.arange(k)])
    eigenvalues = np.maximum(theta[:k], 0.0)
    return PCABasis(mean=mean, components=components, eigenvalues=eigenvalues, total_variance=total)


def pca_reduce(dataset: Dataset, k: int, seed: int = 0) -> Dataset:
    """Project every sample onto the top-*k* axes fitted on the training partitions only."""
    basis = fit_pca(dataset.features[dataset.train_indices], k, seed)
    logger.info(
        "PCA %d -> %d dims, explained variance ratio %.4f",
        dataset.input_dim, k, basis.explained_variance_ratio,
    )
    return replace(dataset, features=basis.transform(dataset.features), pca=basis)
