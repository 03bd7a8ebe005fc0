import time
import pytest
from pathlib import Path

from .. import NoConvergence
from ..experiments import child_rngs, get_experiment, list_experiments, parallel_map, run_experiment
from ..results import read_csv
from ..session_context import ConfigError, ExperimentConfig, RunContext


def test_parallel_map_keeps_order():
    def slow_square(x: int) -> int:
        time.sleep(0.01 * (5 - x))
        return x * x

    assert parallel_map(slow_square, range(5), jobs=3) == [0, 1, 4, 9, 16]
    assert parallel_map(slow_square, [], jobs=3) == []


def test_parallel_map_propagates_errors():
    def fail_on_two(x: int) -> int:
        if x == 2:
            raise NoConvergence("two")
        return x

    with pytest.raises(NoConvergence):
        parallel_map(fail_on_two, range(4), jobs=2)


def test_child_rngs_are_reproducible():
    a = [r.random() for r in child_rngs(3, 4)]
    b = [r.random() for r in child_rngs(3, 4)]
    assert a == b
    assert len(set(a)) == 4


def test_registry():
    names = [exp.name for exp in list_experiments()]
    assert len(names) == 15
    assert names == sorted(names)
    assert 'phase_est' in names
    with pytest.raises(ConfigError):
        get_experiment('teleport_everything')


def test_unknown_parameter():
    with pytest.raises(ConfigError):
        get_experiment('teleport_pieces').resolve({'round': 10})
    assert get_experiment('teleport_pieces').resolve({'rounds': 10})['rounds'] == 10


def test_run_is_independent_of_jobs(run_ctxt: RunContext, tmp_path: Path):
    config = ExperimentConfig('teleport_pieces', {'pieces': [1, 2, 4], 'rounds': 200})
    serial = run_experiment(config, run_ctxt)
    threaded = run_experiment(config, RunContext(run_ctxt.seed, 3, tmp_path / 'threaded', run_ctxt.fock_dim,
                                                 run_ctxt.version))
    assert serial.csv_path.read_bytes() == threaded.csv_path.read_bytes()
    assert serial.digest == threaded.digest
    header, rows = read_csv(serial.csv_path)
    assert header['schema'] == '1'
    assert [r['pieces'] for r in rows] == ['1', '2', '4']
    assert float(rows[0]['fidelity_formula']) == pytest.approx(0.9755, abs=1e-4)


def test_seed_changes_monte_carlo_rows(tmp_path: Path):
    config = ExperimentConfig('teleport_pieces', {'pieces': [2], 'rounds': 200})
    first = run_experiment(config, RunContext(seed=1, output_dir=tmp_path / 'a'))
    second = run_experiment(config, RunContext(seed=2, output_dir=tmp_path / 'b'))
    assert first.digest != second.digest


def test_simulation_error_names_the_experiment(run_ctxt: RunContext):
    config = ExperimentConfig('squeezing', {'max_steps': 1})
    with pytest.raises(NoConvergence, match='squeezing'):
        run_experiment(config, run_ctxt)


def test_teleport_compare_rows(run_ctxt: RunContext):
    config = ExperimentConfig('teleport_compare', {'pieces': [1, 2]})
    _, rows = read_csv(run_experiment(config, run_ctxt).csv_path)
    assert [(r['mode'], r['pieces'], r['stabilization_rounds']) for r in rows] == [
        ('trivial', '1', '0'), ('trivial', '1', '1'), ('error_corrected', '1', '0'), ('error_corrected', '2', '0'),
    ]
    fidelity = {(r['mode'], r['pieces']): float(r['fidelity']) for r in rows}
    assert fidelity[('error_corrected', '2')] > fidelity[('error_corrected', '1')]
