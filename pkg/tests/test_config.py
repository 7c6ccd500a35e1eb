"""Tests for configuration models and environment settings."""

import pytest
from pydantic import ValidationError

from edgeflow.config import DebiasConfig, FitConfig, PriorityConfig, Settings, StudyConfig, get_settings


class TestSchema:
    def test_defaults(self):
        assert FitConfig().restarts == 5
        assert DebiasConfig().utility_weight == 1.0
        assert PriorityConfig().unfairness_weight == 0.5
        assert StudyConfig().sample_sizes == (100, 1_000, 10_000)
        assert FitConfig().row_weighting == "uniform"
        assert StudyConfig().finite_row_weighting == "parent_mass"

    @pytest.mark.parametrize("field", ["finite_theta_concentration", "finite_score_concentration"])
    def test_concentrations_positive(self, field):
        with pytest.raises(ValidationError):
            StudyConfig(**{field: 0.0})

    def test_frozen(self):
        config = FitConfig()
        with pytest.raises(ValidationError):
            config.restarts = 2

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            FitConfig(iterations=3)

    @pytest.mark.parametrize("kwargs", [
        {"tolerance": 0.0},
        {"max_iterations": 0},
        {"restarts": 0},
        {"row_weighting": "counts"},
    ])
    def test_fit_bounds(self, kwargs):
        with pytest.raises(ValidationError):
            FitConfig(**kwargs)

    def test_negative_weights(self):
        with pytest.raises(ValidationError):
            DebiasConfig(utility_weight=-0.1)
        with pytest.raises(ValidationError):
            PriorityConfig(potential_weight=-1.0)

    @pytest.mark.parametrize("sizes", [(), (100, 100), (1000, 100), (0, 10)])
    def test_sample_sizes(self, sizes):
        with pytest.raises(ValidationError):
            StudyConfig(sample_sizes=sizes)

    def test_nested_fit(self):
        config = StudyConfig(fit={"restarts": 2})
        assert config.fit.restarts == 2
        assert config.fit.use_scaling


class TestSettings:
    def test_environment(self, monkeypatch):
        monkeypatch.setenv("CEA_THREADS", "3")
        monkeypatch.setenv("CEA_LOG_JSON", "true")
        settings = Settings()
        assert settings.threads == 3
        assert settings.log_json

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("CEA_THREADS", raising=False)
        monkeypatch.delenv("CEA_LOG_LEVEL", raising=False)
        settings = Settings(_env_file=None)
        assert settings.threads is None
        assert settings.log_level == "INFO"

    def test_invalid_threads(self, monkeypatch):
        monkeypatch.setenv("CEA_THREADS", "0")
        with pytest.raises(ValidationError):
            Settings()

    def test_cached(self):
        assert get_settings() is get_settings()
