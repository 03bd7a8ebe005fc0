import pytest
from pathlib import Path

from ..cli import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_SIMULATION_ERROR, main, parse_args


def _config(tmp_path: Path, text: str) -> Path:
    path = tmp_path / 'run.toml'
    path.write_text(text)
    return path


def test_parse_args():
    args = parse_args(['run', 'run.toml', '--seed', '4', '--jobs', '2'])
    assert args.command == 'run'
    assert args.config == Path('run.toml')
    assert (args.seed, args.jobs, args.out) == (4, 2, None)
    args = parse_args(['verify', '--fast', '--only', 'pcgt', '--only', 'gkp_depth'])
    assert args.fast
    assert args.only == ['pcgt', 'gkp_depth']
    with pytest.raises(SystemExit):
        parse_args(['verify', '--only', 'everything'])


def test_list(capsys):
    assert main(['list']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'teleport_pieces' in out
    assert 'fidelity_formula' in out


def test_run_writes_artifacts(tmp_path: Path, capsys):
    config = _config(tmp_path, 'experiment = "teleport_pieces"\n[parameters]\npieces = [1, 2]\nrounds = 50\n')
    out = tmp_path / 'out'
    assert main(['run', str(config), '--out', str(out), '--seed', '3']) == EXIT_OK
    assert (out / 'teleport_pieces.csv').exists()
    assert (out / 'teleport_pieces.json').exists()
    assert str(out / 'teleport_pieces.csv') in capsys.readouterr().out


@pytest.mark.parametrize('text', [
    'experiment = "teleport_everything"\n',
    'experiment = "teleport_pieces"\n[parameters]\nround = 50\n',
    'experiment = "teleport_pieces"\nseeds = 3\n',
    'experiment = "teleport_pieces"\n[noise]\nkappa_over_2pi = 100.0\n',
])
def test_configuration_errors(tmp_path: Path, capsys, text):
    assert main(['run', str(_config(tmp_path, text)), '--out', str(tmp_path / 'out')]) == EXIT_CONFIG_ERROR
    assert '[config error]' in capsys.readouterr().err


def test_missing_configuration(tmp_path: Path):
    assert main(['run', str(tmp_path / 'missing.toml')]) == EXIT_CONFIG_ERROR


def test_invalid_jobs(tmp_path: Path):
    config = _config(tmp_path, 'experiment = "teleport_pieces"\n')
    assert main(['run', str(config), '--jobs', '0']) == EXIT_CONFIG_ERROR


def test_simulation_error(tmp_path: Path, capsys):
    config = _config(tmp_path, 'experiment = "squeezing"\n[parameters]\nmax_steps = 1\n')
    assert main(['run', str(config), '--out', str(tmp_path / 'out')]) == EXIT_SIMULATION_ERROR
    assert 'NoConvergence' in capsys.readouterr().err


def test_verify_subset(capsys):
    assert main(['verify', '--fast', '--only', 'gkp_depth', '--only', 'duration_ratio']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'gkp_depth' in out
    assert 'FAILED' not in out
