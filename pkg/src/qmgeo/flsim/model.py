"""
One-hidden-layer MLP on a flat parameter vector.

Layout of ``w`` (fixed order): ``W1 (input×hidden)``, ``b1 (hidden)``,
``W2 (hidden×classes)``, ``b2 (classes)``.  The network is
affine → ReLU → affine → softmax, trained with mean cross-entropy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import log_softmax, softmax

from ..errors import ConfigError, DataError
from ..utils.streams import PURPOSE_INIT, derive_stream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelShape:
    """Layer widths of the network."""

    input_dim: int
    hidden_dim: int
    classes: int

    def __post_init__(self):
        for name in ("input_dim", "hidden_dim", "classes"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"must be a positive integer, got {value!r}", f"fl.model.{name}")

    @property
    def dim(self) -> int:
        """Parameter count ``d``."""
        i, h, c = self.input_dim, self.hidden_dim, self.classes
        return i * h + h + h * c + c

    def unflatten(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Views ``(W1, b1, W2, b2)`` into *w*."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise DataError(f"parameter vector has shape {w.shape}, expected ({self.dim},)")
        i, h, c = self.input_dim, self.hidden_dim, self.classes
        o1 = i * h
        o2 = o1 + h
        o3 = o2 + h * c
        return w[:o1].reshape(i, h), w[o1:o2], w[o2:o3].reshape(h, c), w[o3:]

    @staticmethod
    def flatten(W1, b1, W2, b2) -> np.ndarray:
        return np.concatenate([np.ravel(W1), np.ravel(b1), np.ravel(W2), np.ravel(b2)])


def init_params(shape: ModelShape, seed: int) -> np.ndarray:
    """``U(-1/√fan_in, 1/√fan_in)`` for every layer, biases included."""
    rng = derive_stream(seed, PURPOSE_INIT)
    i, h, c = shape.input_dim, shape.hidden_dim, shape.classes
    s1 = 1.0 / np.sqrt(i)
    s2 = 1.0 / np.sqrt(h)
    W1 = rng.uniform(-s1, s1, (i, h))
    b1 = rng.uniform(-s1, s1, h)
    W2 = rng.uniform(-s2, s2, (h, c))
    b2 = rng.uniform(-s2, s2, c)
    return ModelShape.flatten(W1, b1, W2, b2)


def _check_batch(shape: ModelShape, X: np.ndarray, y: np.ndarray):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise DataError("batch must not be empty")
    if X.shape[1] != shape.input_dim:
        raise DataError(f"batch has {X.shape[1]} features, model expects {shape.input_dim}")
    if y.shape != (X.shape[0],):
        raise DataError("labels must have one entry per sample")
    if y.min() < 0 or y.max() >= shape.classes:
        raise DataError(f"labels must lie in [0, {shape.classes - 1}]")
    return X, y


def logits(w: np.ndarray, shape: ModelShape, X: np.ndarray) -> np.ndarray:
    W1, b1, W2, b2 = shape.unflatten(w)
    hidden = np.maximum(np.atleast_2d(X) @ W1 + b1, 0.0)
    return hidden @ W2 + b2


def loss(w: np.ndarray, shape: ModelShape, X: np.ndarray, y: np.ndarray) -> float:
    """Mean softmax cross-entropy over the batch."""
    X, y = _check_batch(shape, X, y)
    logp = log_softmax(logits(w, shape, X), axis=1)
    return float(-logp[np.arange(y.size), y].mean())


def local_gradient(w: np.ndarray, shape: ModelShape, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of :func:`loss` with respect to the flat parameter vector."""
    X, y = _check_batch(shape, X, y)
    W1, b1, W2, b2 = shape.unflatten(w)
    n = y.size

    pre = X @ W1 + b1
    hidden = np.maximum(pre, 0.0)
    probs = softmax(hidden @ W2 + b2, axis=1)

    error = probs
    error[np.arange(n), y] -= 1.0
    error /= n

    dW2 = hidden.T @ error
    db2 = error.sum(axis=0)
    dhidden = error @ W2.T
    dhidden[pre <= 0] = 0.0
    dW1 = X.T @ dhidden
    db1 = dhidden.sum(axis=0)
    return ModelShape.flatten(dW1, db1, dW2, db2)


def accuracy(w: np.ndarray, shape: ModelShape, X: np.ndarray, y: np.ndarray) -> float:
    X, y = _check_batch(shape, X, y)
    return float((logits(w, shape, X).argmax(axis=1) == y).mean())


def finite_difference_gradient(
    w: np.ndarray,
    shape: ModelShape,
    X: np.ndarray,
    y: np.ndarray,
    step: float = 1e-5,
) -> np.ndarray:
    """Central-difference gradient of :func:`loss` (for checking backprop)."""
    w = np.array(w, dtype=float)
    grad = np.empty_like(w)
    for k in range(w.size):
        orig = w[k]
        w[k] = orig + step
        up = loss(w, shape, X, y)
        w[k] = orig - step
        down = loss(w, shape, X, y)
        w[k] = orig
        grad[k] = (up - down) / (2.0 * step)
    return grad
