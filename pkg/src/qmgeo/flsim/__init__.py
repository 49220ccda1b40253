"""
Desk-scale federated learning simulation.
"""

from .dataset import Dataset, synth_dataset, load_csv_dataset, pca_reduce
from .model import ModelShape, local_gradient
from .engine import RoundMetrics, client_update, server_aggregate, run_training, simulate
from .quadratic import QuadraticProblem, make_quadratic

__all__ = [
    "Dataset",
    "synth_dataset",
    "load_csv_dataset",
    "pca_reduce",
    "ModelShape",
    "local_gradient",
    "RoundMetrics",
    "client_update",
    "server_aggregate",
    "run_training",
    "simulate",
    "QuadraticProblem",
    "make_quadratic",
]
