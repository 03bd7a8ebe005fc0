import json
import pytest
from pathlib import Path

from ..noise import NoiseModel
from ..session_context import FOCK_DIM_ENV, ConfigError, ExperimentConfig, RunContext, env_fock_dim, version_string


def test_config_from_dict_defaults():
    config = ExperimentConfig.from_dict({'experiment': 'squeezing'})
    assert config.seed == 0
    assert config.jobs == 1
    assert config.fock_dim is None
    assert config.noise == NoiseModel()
    assert config.output_path == Path('results')


@pytest.mark.parametrize('values', [
    {'experiment': 'squeezing', 'sed': 3},
    {'seed': 3},
    {'experiment': 'squeezing', 'noise': {'kappa': 0.1}},
    {'experiment': 'squeezing', 'noise': {'kappa_over_2pi': -0.1}},
    {'experiment': 'squeezing', 'durations': 'fast'},
    {'experiment': 'squeezing', 'jobs': 0},
    {'experiment': 'squeezing', 'fock_dim': 1},
])
def test_invalid_configurations(values):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(values)


def test_config_from_toml(tmp_path: Path):
    path = tmp_path / 'run.toml'
    path.write_text(
        'experiment = "teleport_pieces"\n'
        'seed = 7\n'
        'jobs = 2\n'
        '[parameters]\n'
        'rounds = 100\n'
        '[noise]\n'
        'gamma_over_2pi = 0.005\n'
    )
    config = ExperimentConfig.load(path)
    assert config.experiment == 'teleport_pieces'
    assert config.parameters == {'rounds': 100}
    assert config.seed == 7
    assert config.noise.gamma_over_2pi == pytest.approx(0.005)


def test_config_from_json(tmp_path: Path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'experiment': 'phase_est', 'durations': {'rotation_time': 24e-9}}))
    config = ExperimentConfig.load(path)
    assert config.durations.rotation_time == pytest.approx(24e-9)
    assert config.to_dict()['durations']['rotation_time'] == pytest.approx(24e-9)


def test_config_file_errors(tmp_path: Path):
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / 'missing.toml')
    broken = tmp_path / 'broken.toml'
    broken.write_text('experiment = \n')
    with pytest.raises(ConfigError):
        ExperimentConfig.load(broken)


def test_env_fock_dim(monkeypatch):
    monkeypatch.delenv(FOCK_DIM_ENV, raising=False)
    assert env_fock_dim() is None
    monkeypatch.setenv(FOCK_DIM_ENV, '48')
    assert env_fock_dim() == 48
    monkeypatch.setenv(FOCK_DIM_ENV, 'many')
    with pytest.raises(ConfigError):
        env_fock_dim()


def test_resolve_precedence(monkeypatch, tmp_path: Path):
    config = ExperimentConfig('squeezing', seed=1, jobs=2, fock_dim=64, output_path=tmp_path / 'a')
    monkeypatch.delenv(FOCK_DIM_ENV, raising=False)
    ctxt = RunContext.resolve(config)
    assert (ctxt.seed, ctxt.jobs, ctxt.fock_dim, ctxt.output_dir) == (1, 2, 64, tmp_path / 'a')
    monkeypatch.setenv(FOCK_DIM_ENV, '80')
    ctxt = RunContext.resolve(config, seed=9, jobs=4, output_dir=tmp_path / 'b')
    assert (ctxt.seed, ctxt.jobs, ctxt.fock_dim, ctxt.output_dir) == (9, 4, 80, tmp_path / 'b')


def test_fock_config_override():
    assert RunContext().fock_config(100).dim == 100
    cfg = RunContext(fock_dim=40).fock_config(100, 1e-3)
    assert cfg.dim == 40
    assert cfg.leakage_tol == pytest.approx(1e-3)
    assert not cfg.strict


def test_version_string():
    assert version_string().startswith("0.1.0")
