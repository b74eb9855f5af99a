import pytest
from pydantic import ValidationError

from config.settings import EmConfig, Settings, SpectralConfig, load_config


def test_defaults():
    settings = Settings()
    assert settings.spectral.n_restarts == 10
    assert settings.spectral.clamp_low == 0.001
    assert settings.em.param_floor == 1e-6
    assert settings.selection.criterion == "gic1"
    assert settings.output.record_timing is True
    assert settings.logging.file.enabled is False


def test_load_config_from_yaml(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("spectral:\n  n_restarts: 3\nem:\n  max_iters: 50\nbenchmark:\n  threads: 4\n")
    settings = load_config(path)
    assert settings.spectral.n_restarts == 3
    assert settings.em.max_iters == 50
    assert settings.benchmark.threads == 4
    assert settings.methods.em_random_restarts == 5


def test_empty_yaml_gives_defaults(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("")
    assert load_config(path).em.tol == 1e-8


def test_invalid_config(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("selection:\n  criterion: aic\n")
    with pytest.raises(ValueError, match="Invalid configuration"):
        load_config(path)


def test_missing_config(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "absent.yaml")


def test_param_floor_bounds():
    with pytest.raises(ValidationError):
        EmConfig(param_floor=0.0)
    with pytest.raises(ValidationError):
        EmConfig(param_floor=0.5)
    assert EmConfig(param_floor=1e-3).param_floor == 1e-3


def test_clamp_bounds():
    with pytest.raises(ValidationError):
        SpectralConfig(clamp_low=0.9, clamp_high=0.1)
