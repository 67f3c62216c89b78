import json

import pytest

from order_ltr.config import DwellBenchConfig, GenerateConfig, Settings, get_settings, load_config
from order_ltr.errors import ConfigError
from order_ltr.synthetic import BenchConfig


class TestSettings:
    def test_defaults(self):
        settings = Settings()
        assert settings.lam == 1e-3
        assert settings.log_level == "INFO"
        assert settings.altmin_config().eps == 1e-10

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv("ORDER_LTR_LAM", "0.5")
        monkeypatch.setenv("ORDER_LTR_ETA", "0.25")
        settings = get_settings()
        assert settings.lam == 0.5
        assert settings.altmin_config().eta == 0.25

    def test_none_overrides_are_ignored(self):
        cfg = Settings().gd_config(step_size=None, max_iters=10, tol=None)
        assert (cfg.step_size, cfg.max_iters, cfg.tol) == (1.0, 10, 1e-8)

    def test_invalid_override(self):
        with pytest.raises(ValueError):
            Settings().altmin_config(eta=-1.0)


class TestLoadConfig:
    def test_defaults_without_a_file(self):
        assert load_config(None, GenerateConfig) == GenerateConfig()

    def test_file_values_and_overrides(self, tmp_path):
        path = tmp_path / "bench.json"
        path.write_text(json.dumps({"n": 3, "gain_vectors": [[0.5, 0.3, 0.2]], "seed": 4, "gd": {"max_iters": 50}}))
        cfg = load_config(path, BenchConfig, seed=9, workers=None)
        assert cfg.n == 3
        assert cfg.seed == 9
        assert cfg.workers == 1
        assert cfg.gd.max_iters == 50

    @pytest.mark.parametrize(
        "document",
        [
            {"n": 3, "gain_vector": [0.5, 0.5]},
            {"n": 2, "gain_vector": [0.5, -0.5]},
            {"num_sessions": 0},
            {"unknown": 1},
        ],
    )
    def test_rejects_invalid_files(self, tmp_path, document):
        path = tmp_path / "generate.json"
        path.write_text(json.dumps(document))
        with pytest.raises(ConfigError):
            load_config(path, GenerateConfig)

    def test_settings_layer_sits_under_file_and_flags(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ORDER_LTR_WORKERS", "3")
        monkeypatch.setenv("ORDER_LTR_LAM", "0.2")
        monkeypatch.setenv("ORDER_LTR_MAX_ITERS", "77")
        defaults = get_settings().run_defaults()
        path = tmp_path / "dwell.json"
        path.write_text(json.dumps({"lam": 0.5, "gd": {"tol": 1e-6}}))
        cfg = load_config(path, DwellBenchConfig, defaults, seed=4)
        assert cfg.workers == 3
        assert cfg.lam == 0.5
        assert (cfg.gd.max_iters, cfg.gd.tol) == (77, 1e-6)
        assert cfg.seed == 4

    def test_settings_keys_without_a_field_are_ignored(self):
        cfg = load_config(None, GenerateConfig, Settings(seed=6).run_defaults())
        assert cfg.seed == 6

    def test_rejects_invalid_override(self):
        with pytest.raises(ConfigError):
            load_config(None, DwellBenchConfig, workers=0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json", GenerateConfig)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{n: 3")
        with pytest.raises(ConfigError):
            load_config(path, GenerateConfig)


def test_dwell_defaults_match_three_item_lists():
    cfg = DwellBenchConfig()
    assert len(cfg.gain_vector) == cfg.n == 3
    assert cfg.split.train_fraction == 0.8
