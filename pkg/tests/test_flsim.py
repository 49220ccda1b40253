"""
Tests for the federated simulation: datasets, PCA, the MLP, client/server steps and training runs.
"""

import math
import textwrap
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from qmgeo.config import DatasetSource, FLConfig, QuadraticSpec
from qmgeo.constants import PAPER_KAPPA, PAPER_MODEL_DIM
from qmgeo.errors import ConfigError, DataError, NumericalError
from qmgeo.flsim.dataset import (
    Dataset,
    fit_pca,
    load_csv_dataset,
    pca_reduce,
    split_indices,
    synth_dataset,
    write_csv_dataset,
)
from qmgeo.flsim.engine import (
    MLPObjective,
    RoundMetrics,
    build_dataset,
    build_objective,
    client_update,
    per_round_eps,
    run_training,
    server_aggregate,
    simulate,
)
from qmgeo.flsim.model import (
    ModelShape,
    accuracy,
    finite_difference_gradient,
    init_params,
    local_gradient,
    loss,
)
from qmgeo.flsim.quadratic import make_quadratic
from qmgeo.tools.convergence_tools import BoundParams, bound_table
from qmgeo.tools.privacy_tools import rdp_vector_paper
from qmgeo.tools.quantizer_tools import QuantizerConfig
from qmgeo.utils.streams import derive_stream


# ── Fixtures ────────────────────────────────────────────────────────


@pytest.fixture()
def small_cfg() -> FLConfig:
    return FLConfig(
        clients=3,
        rounds=4,
        batch_size=16,
        learning_rate=0.05,
        w_max=0.05,
        input_dim=10,
        hidden_dim=8,
        classes=3,
        dataset=DatasetSource(samples=300, separation=4.0),
    )


@pytest.fixture()
def quantized_cfg(small_cfg) -> FLConfig:
    q = QuantizerConfig(R=8, p=0.9, w_max=0.05)
    return replace(small_cfg, quantizer=q)


@pytest.fixture()
def quadratic_cfg() -> FLConfig:
    return FLConfig(
        objective="quadratic",
        clients=5,
        rounds=60,
        learning_rate=0.05,
        quantizer=QuantizerConfig(R=16, p=0.9, w_max=1.0),
        w_max=1.0,
        quadratic=QuadraticSpec(dim=8, eigen_min=0.5, eigen_max=2.0),
    )


# ── Datasets ────────────────────────────────────────────────────────


class TestSyntheticDataset:
    def test_same_seed_identical(self):
        a = synth_dataset(7, samples=200, input_dim=5)
        b = synth_dataset(7, samples=200, input_dim=5)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)
        for pa, pb in zip(a.partitions, b.partitions):
            np.testing.assert_array_equal(pa, pb)

    def test_different_seed_differs(self):
        a = synth_dataset(1, samples=50, input_dim=3)
        b = synth_dataset(2, samples=50, input_dim=3)
        assert not np.array_equal(a.features, b.features)

    def test_even_partitions(self):
        ds = synth_dataset(0, samples=100, input_dim=4, classes=3, clients=5)
        sizes = ds.partition_sizes
        assert max(sizes) - min(sizes) <= 1

    def test_partitions_and_holdout_cover_all_samples(self):
        ds = synth_dataset(0, samples=157, input_dim=4, clients=4)
        everything = np.sort(np.concatenate([*ds.partitions, ds.holdout]))
        np.testing.assert_array_equal(everything, np.arange(157))
        assert ds.holdout.size == round(0.1 * 157)

    def test_centroid_classifier_separates_blobs(self):
        ds = synth_dataset(1, samples=600, input_dim=20, classes=3, separation=10.0, clients=3)
        X, y = ds.features[ds.train_indices], ds.labels[ds.train_indices]
        centroids = np.stack([X[y == c].mean(axis=0) for c in range(3)])
        Xh, yh = ds.holdout_data()
        dist = ((Xh[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assert (dist.argmin(axis=1) == yh).mean() >= 0.99

    def test_too_many_clients(self):
        with pytest.raises(ConfigError):
            split_indices(5, 10, seed=0)

    def test_needs_two_classes(self):
        with pytest.raises(ConfigError):
            synth_dataset(0, samples=20, classes=1)


class TestCSVDataset:
    def test_toy_file(self, tmp_path: Path):
        path = tmp_path / "toy.csv"
        path.write_text(
            textwrap.dedent("""\
            x0,x1,label
            0.5,1.5,0
            -1.0,2.0,1
            3.25,0.0,2
            """),
            encoding="utf-8",
        )
        ds = load_csv_dataset(path, clients=1, holdout_fraction=0.0)
        assert ds.n_samples == 3
        assert ds.features.shape == (3, 2)
        assert ds.classes == 3
        np.testing.assert_array_equal(ds.labels, [0, 1, 2])

    def test_ragged_row_names_line(self, tmp_path: Path):
        path = tmp_path / "ragged.csv"
        path.write_text("x0,x1,label\n1,2,0\n1,2,3,4\n5,6,1\n", encoding="utf-8")
        with pytest.raises(DataError) as exc_info:
            load_csv_dataset(path, clients=1)
        assert exc_info.value.line == 3

    def test_short_row_names_line(self, tmp_path: Path):
        path = tmp_path / "short.csv"
        path.write_text("x0,x1,label\n1,2,0\n1,2\n", encoding="utf-8")
        with pytest.raises(DataError) as exc_info:
            load_csv_dataset(path, clients=1)
        assert exc_info.value.line == 3

    def test_non_numeric_field(self, tmp_path: Path):
        path = tmp_path / "text.csv"
        path.write_text("x0,label\n1.0,0\nabc,1\n", encoding="utf-8")
        with pytest.raises(DataError) as exc_info:
            load_csv_dataset(path, clients=1)
        assert exc_info.value.line == 3

    def test_missing_label_column(self, tmp_path: Path):
        path = tmp_path / "nolabel.csv"
        path.write_text("x0,x1\n1,2\n", encoding="utf-8")
        with pytest.raises(DataError, match="label"):
            load_csv_dataset(path, clients=1)

    def test_fractional_labels(self, tmp_path: Path):
        path = tmp_path / "frac.csv"
        path.write_text("x0,label\n1,0\n2,0.5\n", encoding="utf-8")
        with pytest.raises(DataError, match="non-negative integers"):
            load_csv_dataset(path, clients=1)

    def test_round_trip(self, tmp_path: Path):
        ds = synth_dataset(3, samples=40, input_dim=6, clients=2)
        path = write_csv_dataset(ds, tmp_path / "round.csv")
        back = load_csv_dataset(path, clients=2, seed=3)
        np.testing.assert_array_equal(back.features, ds.features)
        np.testing.assert_array_equal(back.labels, ds.labels)
        for pa, pb in zip(back.partitions, ds.partitions):
            np.testing.assert_array_equal(pa, pb)


class TestPCA:
    def test_full_rank_identity_subspace(self):
        rng = derive_stream(0, 99)
        X = rng.standard_normal((400, 3)) * np.array([5.0, 2.0, 0.5])
        basis = fit_pca(X, 3)
        recon = basis.transform(X) @ basis.components.T + basis.mean
        np.testing.assert_allclose(recon, X, atol=1e-8)
        assert basis.explained_variance_ratio == pytest.approx(1.0, rel=1e-9)

    def test_rank_one(self):
        rng = derive_stream(0, 98)
        direction = np.array([1.0, -2.0, 0.5, 3.0])
        X = rng.standard_normal(200)[:, None] * direction
        basis = fit_pca(X, 1)
        assert basis.explained_variance_ratio == pytest.approx(1.0, rel=1e-9)
        cos = abs(basis.components[:, 0] @ direction) / np.linalg.norm(direction)
        assert cos == pytest.approx(1.0, abs=1e-9)

    def test_matches_dense_eigensolver(self):
        rng = derive_stream(0, 97)
        X = rng.standard_normal((500, 10)) * np.arange(10, 0, -1)
        basis = fit_pca(X, 3)
        dense = np.sort(np.linalg.eigvalsh(np.cov(X, rowvar=False)))[::-1][:3]
        np.testing.assert_allclose(basis.eigenvalues, dense, rtol=1e-6)
        projected = basis.transform(X).var(axis=0, ddof=1).sum()
        assert projected == pytest.approx(dense.sum(), rel=1e-6)

    @pytest.mark.parametrize("input_dim, k", [(50, 20), (100, 50), (200, 100)])
    def test_noise_bulk_converges(self, input_dim, k):
        # most axes sit in the isotropic noise bulk with closely spaced eigenvalues
        ds = synth_dataset(0, samples=3000, input_dim=input_dim)
        X = ds.features[ds.train_indices]
        basis = fit_pca(X, k)
        dense = np.sort(np.linalg.eigvalsh(np.cov(X, rowvar=False)))[::-1][:k]
        np.testing.assert_allclose(basis.eigenvalues, dense, rtol=1e-8)
        np.testing.assert_allclose(basis.components.T @ basis.components, np.eye(k), atol=1e-10)
        reduced = pca_reduce(ds, k)
        assert reduced.features.shape == (3000, k)

    def test_iteration_cap_reports_residual(self):
        ds = synth_dataset(0, samples=3000, input_dim=50)
        with pytest.raises(NumericalError, match="did not converge") as exc_info:
            fit_pca(ds.features[ds.train_indices], 20, max_iter=1)
        assert exc_info.value.residual > 0

    def test_invalid_k(self):
        with pytest.raises(ConfigError):
            fit_pca(np.zeros((5, 3)), 4)

    def test_reduce_fits_on_training_rows(self):
        ds = synth_dataset(2, samples=120, input_dim=12, clients=3)
        reduced = pca_reduce(ds, 2)
        assert reduced.features.shape == (120, 2)
        assert reduced.pca is not None
        np.testing.assert_allclose(reduced.pca.mean, ds.features[ds.train_indices].mean(axis=0))
        assert reduced.partitions is ds.partitions


# ── Model ───────────────────────────────────────────────────────────


class TestModel:
    def test_paper_parameter_count(self):
        assert ModelShape(100, 32, 10).dim == PAPER_MODEL_DIM

    def test_flatten_unflatten(self):
        shape = ModelShape(4, 3, 2)
        w = np.arange(shape.dim, dtype=float)
        np.testing.assert_array_equal(ModelShape.flatten(*shape.unflatten(w)), w)

    def test_wrong_parameter_length(self):
        with pytest.raises(DataError):
            ModelShape(4, 3, 2).unflatten(np.zeros(5))

    def test_invalid_shape(self):
        with pytest.raises(ConfigError):
            ModelShape(0, 3, 2)

    def test_init_deterministic(self):
        shape = ModelShape(5, 4, 3)
        np.testing.assert_array_equal(init_params(shape, 3), init_params(shape, 3))

    def test_gradient_matches_finite_differences(self):
        shape = ModelShape(4, 5, 3)
        worst = 0.0
        for seed in range(20):
            rng = derive_stream(seed, 50)
            w = 2.0 * init_params(shape, seed)
            X = rng.standard_normal((8, shape.input_dim))
            y = rng.integers(0, shape.classes, 8)
            analytic = local_gradient(w, shape, X, y)
            numeric = finite_difference_gradient(w, shape, X, y, step=1e-5)
            denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-3)
            worst = max(worst, float(np.max(np.abs(analytic - numeric) / denom)))
        assert worst < 1e-4

    def test_zero_network_bias_gradient(self):
        shape = ModelShape(3, 4, 3)
        w = np.zeros(shape.dim)
        X = derive_stream(0, 51).standard_normal((6, 3))
        y = np.array([0, 1, 2, 0, 1, 2])
        grad = local_gradient(w, shape, X, y)
        _, _, _, db2 = shape.unflatten(grad)
        np.testing.assert_allclose(db2, np.full(3, 1 / 3) - np.bincount(y, minlength=3) / 6, atol=1e-15)
        np.testing.assert_allclose(grad, 0.0, atol=1e-15)

    def test_zero_network_unbalanced_batch(self):
        shape = ModelShape(3, 4, 3)
        X = derive_stream(0, 52).standard_normal((4, 3))
        y = np.array([0, 0, 0, 2])
        grad = local_gradient(np.zeros(shape.dim), shape, X, y)
        np.testing.assert_allclose(shape.unflatten(grad)[3], [1 / 3 - 0.75, 1 / 3, 1 / 3 - 0.25])

    def test_duplicated_batch_same_gradient(self):
        shape = ModelShape(4, 5, 3)
        rng = derive_stream(1, 53)
        w = init_params(shape, 1)
        X = rng.standard_normal((6, 4))
        y = rng.integers(0, 3, 6)
        once = local_gradient(w, shape, X, y)
        twice = local_gradient(w, shape, np.vstack([X, X]), np.concatenate([y, y]))
        np.testing.assert_allclose(twice, once, rtol=1e-12, atol=1e-15)

    def test_uniform_logits_loss(self):
        shape = ModelShape(2, 2, 4)
        X = np.ones((3, 2))
        assert loss(np.zeros(shape.dim), shape, X, np.array([0, 1, 2])) == pytest.approx(math.log(4))

    def test_bad_labels(self):
        shape = ModelShape(2, 2, 2)
        with pytest.raises(DataError):
            loss(np.zeros(shape.dim), shape, np.ones((2, 2)), np.array([0, 5]))

    def test_accuracy_range(self):
        shape = ModelShape(2, 3, 2)
        X = derive_stream(0, 54).standard_normal((10, 2))
        y = (X[:, 0] > 0).astype(int)
        acc = accuracy(init_params(shape, 0), shape, X, y)
        assert 0.0 <= acc <= 1.0


# ── Client and server steps ─────────────────────────────────────────


class TestClientUpdate:
    def test_identity_pipeline_without_quantizer(self, small_cfg):
        cfg = replace(small_cfg, w_max=1e9)
        objective = build_objective(cfg)
        w = objective.initial_params(cfg.master_seed)
        update = client_update(w, objective, 0, cfg, round_index=0)
        np.testing.assert_array_equal(update.transmitted, update.raw_gradient)
        assert update.levels is None

    def test_clipped_without_quantizer(self, small_cfg):
        cfg = replace(small_cfg, w_max=1e-3)
        objective = build_objective(cfg)
        update = client_update(objective.initial_params(0), objective, 1, cfg, round_index=0)
        assert np.all(np.abs(update.transmitted) <= 1e-3)

    def test_quantized_values_are_levels(self, quantized_cfg):
        objective = build_objective(quantized_cfg)
        w = objective.initial_params(0)
        update = client_update(w, objective, 2, quantized_cfg, round_index=3)
        levels = quantized_cfg.quantizer.levels
        assert np.all(np.isin(update.transmitted, levels))
        np.testing.assert_array_equal(update.transmitted, levels[update.levels])
        assert update.delta.shape == w.shape

    def test_same_round_same_update(self, quantized_cfg):
        objective = build_objective(quantized_cfg)
        w = objective.initial_params(0)
        a = client_update(w, objective, 1, quantized_cfg, round_index=2)
        b = client_update(w, objective, 1, quantized_cfg, round_index=2)
        np.testing.assert_array_equal(a.transmitted, b.transmitted)

    def test_sampling_rate(self, small_cfg):
        objective = build_objective(small_cfg)
        update = client_update(objective.initial_params(0), objective, 0, small_cfg, 0)
        assert update.kappa == pytest.approx(16 / min(objective.dataset.partition_sizes))

    def test_batch_larger_than_partition(self, small_cfg):
        cfg = replace(small_cfg, batch_size=500)
        objective = build_objective(cfg)
        with pytest.raises(ConfigError) as exc_info:
            client_update(objective.initial_params(0), objective, 0, cfg, 0)
        assert exc_info.value.key_path == "fl.batch_size"


class TestServerAggregate:
    def test_zero_updates(self):
        w = np.array([1.0, -2.0])
        np.testing.assert_array_equal(server_aggregate(w, [np.zeros(2), np.zeros(2)], 0.1), w)

    def test_single_client(self):
        w = np.array([1.0, -2.0])
        u = np.array([0.5, 0.25])
        np.testing.assert_allclose(server_aggregate(w, [u], 0.2), w - 0.2 * u)

    def test_cancellation(self):
        w = np.array([1.0, -2.0, 3.0])
        u = np.array([0.5, 0.25, -1.0])
        np.testing.assert_allclose(server_aggregate(w, [u, -u], 0.3), w)

    def test_weighted(self):
        w = np.zeros(2)
        out = server_aggregate(w, [np.ones(2), 3 * np.ones(2)], 1.0, weights=[0.75, 0.25])
        np.testing.assert_allclose(out, -1.5 * np.ones(2))

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            server_aggregate(np.zeros(3), [np.zeros(2)], 0.1)

    def test_weight_count_mismatch(self):
        with pytest.raises(DataError):
            server_aggregate(np.zeros(2), [np.zeros(2)], 0.1, weights=[0.5, 0.5])


class TestObjectiveWeighting:
    def test_loss_weighted_by_partition_size(self):
        ds = synth_dataset(4, samples=103, input_dim=5, clients=4)
        assert len(set(ds.partition_sizes)) > 1
        shape = ModelShape(5, 6, 3)
        objective = MLPObjective(shape, ds)
        w = init_params(shape, 4)
        pooled = loss(w, shape, ds.features[ds.train_indices], ds.labels[ds.train_indices])
        assert objective.loss(w) == pytest.approx(pooled, rel=1e-12)

    def test_aggregation_weights(self):
        ds = synth_dataset(4, samples=103, input_dim=5, clients=4)
        shape = ModelShape(5, 6, 3)
        np.testing.assert_array_equal(MLPObjective(shape, ds, "sum").aggregation_weights(), np.ones(4))
        weighted = MLPObjective(shape, ds, "weighted").aggregation_weights()
        assert weighted.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(weighted, np.array(ds.partition_sizes) / sum(ds.partition_sizes))

    def test_paper_split_sampling_rate(self):
        n = 60000
        ds = Dataset(
            features=np.zeros((n, 2)),
            labels=np.zeros(n, dtype=int),
            partitions=np.array_split(np.arange(n), 5),
            holdout=np.empty(0, dtype=int),
            classes=1,
        )
        objective = MLPObjective(ModelShape(2, 2, 2), ds)
        assert objective.sampling_rate(64) == pytest.approx(PAPER_KAPPA)
        assert objective.sampling_rate(64) == pytest.approx(0.005333, abs=1e-6)

    def test_dimension_mismatch(self):
        ds = synth_dataset(0, samples=30, input_dim=5, clients=2)
        with pytest.raises(DataError):
            MLPObjective(ModelShape(6, 2, 3), ds)


# ── Training runs ───────────────────────────────────────────────────


class TestTraining:
    def test_metrics_shape(self, quantized_cfg):
        metrics = run_training(quantized_cfg)
        assert len(metrics) == quantized_cfg.rounds
        assert [m.round for m in metrics] == list(range(quantized_cfg.rounds))
        assert RoundMetrics.columns()[0] == "round"
        for prev, cur in zip(metrics, metrics[1:]):
            assert cur.train_loss == prev.train_loss_next

    def test_deterministic(self, quantized_cfg):
        a = [m.to_dict() for m in run_training(quantized_cfg)]
        b = [m.to_dict() for m in run_training(quantized_cfg)]
        assert a == b

    def test_seed_changes_run(self, quantized_cfg):
        other = replace(quantized_cfg, master_seed=1)
        a = run_training(quantized_cfg)[-1].train_loss_next
        b = run_training(other)[-1].train_loss_next
        assert a != b

    def test_epsilon_columns(self, quantized_cfg):
        run = simulate(quantized_cfg)
        kappa = run.summary["kappa"]
        expected = rdp_vector_paper(8, 0.9, 2.0, run.summary["model_dim"], kappa)
        for m in run.metrics:
            assert m.eps_round_rdp == pytest.approx(expected)
            assert m.eps_cumulative == pytest.approx((m.round + 1) * expected)

    def test_delta_norm_within_clip_range(self, quantized_cfg):
        d = ModelShape(quantized_cfg.input_dim, quantized_cfg.hidden_dim, quantized_cfg.classes).dim
        limit = quantized_cfg.clients * math.sqrt(d) * 2 * quantized_cfg.w_max
        for m in run_training(quantized_cfg):
            assert 0.0 <= m.delta_norm <= limit
            # the MLP reference is the clipped aggregate itself
            assert m.perturbation_norm == m.delta_norm
            assert m.grad_dot_perturbation == m.grad_dot_delta

    def test_unquantized_has_no_delta(self, small_cfg):
        for m in run_training(small_cfg):
            assert m.delta_norm == 0.0
            assert m.grad_dot_delta == 0.0

    def test_unquantized_epsilon_infinite(self, small_cfg):
        metrics = run_training(small_cfg)
        assert all(math.isinf(m.eps_round_pure) and math.isinf(m.eps_cumulative) for m in metrics)

    def test_per_round_eps_paper_setup(self):
        cfg = FLConfig(quantizer=QuantizerConfig(R=8, p=0.9, w_max=0.05), w_max=0.05)
        _, rdp = per_round_eps(cfg, PAPER_MODEL_DIM, PAPER_KAPPA)
        assert rdp == pytest.approx(2.626, rel=1e-3)

    def test_summary_fields(self, quantized_cfg):
        summary = simulate(quantized_cfg).summary
        assert summary["objective"] == "mlp"
        assert summary["communication"]["bits_per_element"] == 3
        assert sum(summary["partition_sizes"]) + summary["holdout_size"] == 300

    def test_pca_dataset(self, small_cfg):
        # 3 blobs span 2 directions, so the top-2 axes are well separated from the noise
        cfg = replace(
            small_cfg, input_dim=2, dataset=DatasetSource(samples=300, raw_dim=20, pca_dim=2)
        )
        ds = build_dataset(cfg)
        assert ds.input_dim == 2
        assert ds.pca is not None
        assert len(run_training(cfg, ds)) == cfg.rounds

    def test_csv_dataset(self, small_cfg, tmp_path: Path):
        src = synth_dataset(0, samples=120, input_dim=10)
        path = write_csv_dataset(src, tmp_path / "train.csv")
        cfg = replace(small_cfg, dataset=DatasetSource(kind="csv", path=str(path)))
        metrics = run_training(cfg)
        assert len(metrics) == cfg.rounds


class TestQuadraticRun:
    def test_exact_constants(self, quadratic_cfg):
        problem = make_quadratic(0, 5, 8, (0.5, 2.0))
        assert problem.L == pytest.approx(10.0)
        assert problem.mu == pytest.approx(2.5)
        np.testing.assert_allclose(problem.gradient(problem.optimum), 0.0, atol=1e-12)
        summary = simulate(quadratic_cfg).summary
        assert summary["L"] == pytest.approx(10.0)
        assert summary["mu"] == pytest.approx(2.5)

    def test_weighted_aggregation_scales_constants(self):
        problem = make_quadratic(0, 4, 6, (1.0, 3.0), aggregation="weighted")
        assert problem.L == pytest.approx(3.0)
        assert problem.mu == pytest.approx(1.0)

    def test_delta_excludes_clipping_error(self):
        cfg = FLConfig(
            objective="quadratic",
            clients=5,
            rounds=5,
            learning_rate=0.05,
            quantizer=QuantizerConfig(R=8, p=0.9, w_max=0.05),
            w_max=0.05,
            quadratic=QuadraticSpec(dim=16),
        )
        limit = cfg.clients * math.sqrt(16) * 2 * cfg.w_max
        for m in run_training(cfg):
            assert 0.0 <= m.delta_norm <= limit
            # gradients far outside the clip range: the descent-check perturbation is clip-dominated
            assert m.perturbation_norm > limit

    def test_holdout_accuracy_not_defined(self, quadratic_cfg):
        metrics = run_training(quadratic_cfg)
        assert all(math.isnan(m.holdout_accuracy) for m in metrics)

    def test_bound_holds_with_exact_constants(self, quadratic_cfg):
        run = simulate(quadratic_cfg)
        s = run.summary
        df = pd.DataFrame([m.to_dict() for m in run.metrics])
        bp = BoundParams(L=s["L"], mu=s["mu"], eta=quadratic_cfg.learning_rate, F0_gap=s["F0_gap"], T=len(df))
        table = bound_table(bp, df, s["f_star"])
        assert table["inequality_holds"].all()
        slack = 1e-9 * np.maximum(1.0, np.abs(table["bound_G_t_recursive"]))
        assert np.all(table["empirical_gap"] <= table["bound_G_t_recursive"] + slack)

    def test_understated_smoothness_detected(self):
        cfg = FLConfig(
            objective="quadratic",
            clients=1,
            rounds=10,
            learning_rate=0.45,
            quantizer=QuantizerConfig(R=4, p=0.5, w_max=1.0),
            w_max=1.0,
            quadratic=QuadraticSpec(dim=4, eigen_min=2.0, eigen_max=2.0, centre_scale=0.01),
        )
        run = simulate(cfg)
        s = run.summary
        df = pd.DataFrame([m.to_dict() for m in run.metrics])
        bp = BoundParams(L=s["L"] / 2, mu=s["mu"] / 2, eta=cfg.learning_rate, F0_gap=s["F0_gap"], T=len(df))
        table = bound_table(bp, df, s["f_star"])
        assert not table["inequality_holds"].all()


@pytest.fixture(scope="module")
def baseline():
    return simulate(FLConfig()).summary


@pytest.mark.slow
class TestDeskScaleAccuracy:
    def test_unquantized_baseline(self, baseline):
        assert baseline["final_holdout_accuracy"] >= 0.85

    def test_quantized_close_to_baseline(self, baseline):
        cfg = FLConfig(quantizer=QuantizerConfig(R=8, p=0.9, w_max=0.05), w_max=0.05)
        summary = simulate(cfg).summary
        assert summary["final_holdout_accuracy"] >= baseline["final_holdout_accuracy"] - 0.05
        assert math.isfinite(summary["eps_round_rdp"])
