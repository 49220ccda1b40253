"""
Tests for run-config parsing: defaults, key-path errors, type coercion and round trips.
"""

import json
import textwrap
from pathlib import Path

import pytest

from qmgeo.config import FLConfig, RunConfig, load_config, parse_config
from qmgeo.constants import DEFAULT_LEVELS, DEFAULT_W_MAX
from qmgeo.errors import ConfigError
from qmgeo.tools.quantizer_tools import QuantizerConfig
from qmgeo.utils.preset_loader import find_preset, load_presets


def _key_path(data) -> str:
    with pytest.raises(ConfigError) as exc_info:
        parse_config(data)
    return exc_info.value.key_path


# ── Defaults ────────────────────────────────────────────────────────


class TestDefaults:
    def test_empty_document(self):
        cfg = parse_config({})
        assert cfg.quantizer == RunConfig().quantizer
        assert cfg.privacy == RunConfig().privacy
        assert cfg.quantizer.R == DEFAULT_LEVELS
        assert cfg.fl.w_max == DEFAULT_W_MAX
        assert cfg.fl.quantizer == cfg.quantizer

    def test_none_document(self):
        assert parse_config(None) == parse_config({})

    def test_not_a_mapping(self):
        with pytest.raises(ConfigError, match="expected a mapping"):
            parse_config([1, 2])

    def test_quantizer_shared_with_fl(self):
        cfg = parse_config({"quantizer": {"R": 16, "p": 0.9, "w_max": 0.1}})
        assert cfg.fl.quantizer.R == 16
        assert cfg.fl.w_max == 0.1

    def test_unquantized_fl(self):
        cfg = parse_config({"fl": {"quantizer": "none"}})
        assert cfg.fl.quantizer is None
        assert cfg.quantizer.R == DEFAULT_LEVELS

    def test_model_block(self):
        cfg = parse_config({"fl": {"model": {"input_dim": 20, "hidden_dim": 4, "classes": 5}}})
        assert (cfg.fl.input_dim, cfg.fl.hidden_dim, cfg.fl.classes) == (20, 4, 5)

    def test_integer_accepted_for_float(self):
        cfg = parse_config({"bound": {"L": 10, "mu": 2}})
        assert cfg.bound.L == 10.0 and isinstance(cfg.bound.L, float)

    def test_whole_float_accepted_for_integer(self):
        assert parse_config({"fl": {"rounds": 5.0}}).fl.rounds == 5


# ── Errors carry the dotted key path ───────────────────────────────


class TestKeyPaths:
    @pytest.mark.parametrize(
        "data, key",
        [
            ({"bogus": 1}, "bogus"),
            ({"quantizer": {"levels": 8}}, "quantizer.levels"),
            ({"fl": {"epochs": 3}}, "fl.epochs"),
            ({"fl": {"dataset": {"smaples": 3}}}, "fl.dataset.smaples"),
            ({"fl": {"model": {"depth": 2}}}, "fl.model.depth"),
            ({"privacy": {"epsilon": 1.0}}, "privacy.epsilon"),
        ],
    )
    def test_unknown_keys(self, data, key):
        assert _key_path(data) == key

    @pytest.mark.parametrize(
        "data, key",
        [
            ({"quantizer": {"R": "eight"}}, "quantizer.R"),
            ({"fl": {"rounds": 2.5}}, "fl.rounds"),
            ({"fl": {"clients": True}}, "fl.clients"),
            ({"privacy": {"p_grid": []}}, "privacy.p_grid"),
            ({"privacy": {"p_grid": [0.5, "x"]}}, "privacy.p_grid[1]"),
            ({"quantize": {"clip": "yes"}}, "quantize.clip"),
            ({"bound": {"T": 1.5}}, "bound.T"),
            ({"output_dir": 3}, "output_dir"),
        ],
    )
    def test_type_errors(self, data, key):
        assert _key_path(data) == key

    @pytest.mark.parametrize(
        "data, key",
        [
            ({"quantizer": {"p": float("nan")}}, "quantizer.p"),
            ({"quantizer": {"p": 1.5}}, "quantizer.p"),
            ({"quantizer": {"R": 1}}, "quantizer.R"),
            ({"quantizer": {"mode": "strict"}}, "quantizer.mode"),
            ({"fl": {"quantizer": "gauss"}}, "fl.quantizer"),
            ({"fl": {"objective": "svm"}}, "fl.objective"),
            ({"fl": {"aggregation": "mean"}}, "fl.aggregation"),
            ({"fl": {"dataset": {"kind": "csv"}}}, "fl.dataset.path"),
            ({"pmf": {"mechanism": "gaussian"}}, "pmf.mechanism"),
            ({"master_seed": -1}, "master_seed"),
            ({"master_seed": 2**64}, "master_seed"),
        ],
    )
    def test_range_errors(self, data, key):
        assert _key_path(data) == key

    def test_alpha_above_two_refused(self):
        with pytest.raises(ConfigError, match="refused") as exc_info:
            parse_config({"privacy": {"alpha": 3.0}})
        assert exc_info.value.key_path == "privacy.alpha"

    def test_message_names_key(self):
        with pytest.raises(ConfigError, match=r"fl\.dataset\.smaples"):
            parse_config({"fl": {"dataset": {"smaples": 3}}})


class TestFLConfig:
    def test_clip_threshold_must_match_quantizer(self):
        with pytest.raises(ConfigError) as exc_info:
            FLConfig(quantizer=QuantizerConfig(R=8, p=0.5, w_max=0.05), w_max=0.1)
        assert exc_info.value.key_path == "quantizer.w_max"

    def test_quantized_run_refuses_large_alpha(self):
        with pytest.raises(ConfigError) as exc_info:
            FLConfig(quantizer=QuantizerConfig(R=8, p=0.5, w_max=0.05), alpha=4.0)
        assert exc_info.value.key_path == "privacy.alpha"

    def test_unquantized_run_allows_large_alpha(self):
        assert FLConfig(alpha=4.0).alpha == 4.0


# ── Round trips ─────────────────────────────────────────────────────


class TestRoundTrip:
    def test_defaults(self):
        cfg = RunConfig()
        assert parse_config(cfg.to_dict()) == cfg

    def test_through_json(self):
        cfg = parse_config(
            {
                "quantizer": {"R": 4, "p": 0.7, "w_max": 0.2, "mode": "paper-literal"},
                "fl": {"quantizer": "none", "rounds": 7, "dataset": {"samples": 500, "pca_dim": 10}},
                "privacy": {"p_grid": [0.5, 0.6], "sweep_levels": [2, 4]},
                "bound": {"L": 3.0, "T": 5},
                "master_seed": 2**63,
            }
        )
        assert parse_config(json.loads(json.dumps(cfg.to_dict()))) == cfg

    @pytest.mark.parametrize("name", [p["name"] for p in load_presets()])
    def test_bundled_presets(self, name):
        cfg = parse_config(find_preset(name)["config"])
        assert parse_config(cfg.to_dict()) == cfg


class TestOverrides:
    def test_with_seed(self):
        cfg = RunConfig().with_seed(42)
        assert cfg.master_seed == 42
        assert cfg.fl.master_seed == 42

    def test_with_seed_none(self):
        cfg = RunConfig()
        assert cfg.with_seed(None) is cfg

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_with_seed_range(self, seed):
        with pytest.raises(ConfigError):
            RunConfig().with_seed(seed)

    def test_with_output_dir(self):
        assert RunConfig().with_output_dir("runs/x").output_dir == "runs/x"


# ── Files ───────────────────────────────────────────────────────────


class TestLoadConfig:
    def test_yaml(self, tmp_path: Path):
        path = tmp_path / "run.yaml"
        path.write_text(
            textwrap.dedent("""\
            quantizer:
              R: 16
              p: 0.9
            fl:
              rounds: 3
            """),
            encoding="utf-8",
        )
        cfg = load_config(path)
        assert cfg.quantizer.R == 16
        assert cfg.fl.rounds == 3

    def test_json(self, tmp_path: Path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"pmf": {"w": 0.01, "mechanism": "klevel"}}), encoding="utf-8")
        assert load_config(path).pmf.mechanism == "klevel"

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json")

    def test_malformed(self, tmp_path: Path):
        path = tmp_path / "bad.yaml"
        path.write_text("quantizer: [unclosed\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="cannot parse"):
            load_config(path)
