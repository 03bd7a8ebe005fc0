"""Registry of named experiments.

Each experiment declares its default parameters and CSV columns and turns a resolved parameter
set into rows. Sweep points run on a bounded pool of threads; rows come back in sweep order.
"""
from __future__ import annotations
import math
import logging
import threading
from dataclasses import dataclass
from typing import Any, Callable, Iterable, TypeVar

import numpy as np

from .definitions import SQUARE_GKP_SPACING, SimulationError
from .hilbert import displacement_operator
from .composite_pulses import (
    Bb1Spec, GcrSpec, build_bb1, build_gcr, chi, evaluate_rotation, no_qsp_cat_fidelity,
)
from .state_prep import (
    CatSpec, GkpPrepPlan, SqueezeSchedule, law_eberly_fock, prepare_cat, prepare_fock1, prepare_four_legged_cat,
    prepare_gkp, run_squeezing,
)
from .gkp_code import GkpCode
from .gkp import (
    ReadoutScheme, TeleportPlan, arbitrary_state_transfer, flip_averaged_fidelity, noisy_gkp_prep_experiment,
    pcgt_fidelity,
    pcgt_toy_model, readout_sweep, sbs_backaction, sbs_outcome_probabilities, teleport_gate, teleport_two_qubit,
)
from .noise import NoiseModel
from .phase_estimation import PhaseEstSpec, expected_momentum_moments, run_phase_estimation
from .results import ResultFiles, Row, write_results
from .session_context import ConfigError, ExperimentConfig, RunContext

_logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def parallel_map(function: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Applies function to every item on at most `jobs` threads; results keep the order of items.

    The first exception raised by a worker is re-raised once every thread has joined.
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    results: list[Any] = [None] * len(items)
    errors: list[BaseException | None] = [None] * len(items)
    cursor = iter(enumerate(items))
    lock = threading.Lock()

    def worker():
        while True:
            with lock:
                try:
                    index, item = next(cursor)
                except StopIteration:
                    return
            try:
                results[index] = function(item)
            except BaseException as e:
                errors[index] = e

    threads: list[threading.Thread] = []
    for _ in range(min(jobs, len(items))):
        threads.append(threading.Thread(target=worker))
        threads[-1].start()
    for thread in threads:
        thread.join()
    for error in errors:
        if error is not None:
            raise error
    return results


def child_rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    columns: tuple[str, ...]
    defaults: dict[str, Any]
    runner: Callable[[dict[str, Any], RunContext], list[Row]]

    def resolve(self, parameters: dict[str, Any]) -> dict[str, Any]:
        for key in parameters:
            if key not in self.defaults:
                raise ConfigError(f"unknown parameter '{key}' for experiment '{self.name}' "
                                  f"(expected one of: {', '.join(sorted(self.defaults))})")
        return {**self.defaults, **parameters}

    def run(self, parameters: dict[str, Any], ctxt: RunContext) -> list[Row]:
        return self.runner(self.resolve(parameters), ctxt)


REGISTRY: dict[str, Experiment] = {}


def experiment(name: str, description: str, columns: tuple[str, ...], **defaults):
    def register(runner):
        REGISTRY[name] = Experiment(name, description, columns, defaults, runner)
        return runner
    return register


def get_experiment(name: str) -> Experiment:
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment '{name}' (available: {', '.join(sorted(REGISTRY))})")
    return REGISTRY[name]


def list_experiments() -> list[Experiment]:
    return [REGISTRY[name] for name in sorted(REGISTRY)]


# composite pulses

@experiment("gcr_vs_bb1_scaling", "GCR and BB1 failure probability and infidelity versus |alpha|",
            ('alpha', 'chi', 'Pe_gcr', 'Pe_bb1', 'FH_gcr', 'FH_bb1', 'T_gcr_us', 'T_bb1_us'),
            alphas=[4, 6, 8, 10, 12, 14], delta=1.0, theta=math.pi / 2, fock_dim=64)
def _scaling(params: dict, ctxt: RunContext) -> list[Row]:
    cfg = ctxt.fock_config(params['fock_dim'])
    delta, theta = float(params['delta']), float(params['theta'])

    def point(alpha: float) -> Row:
        gcr = build_gcr(GcrSpec(theta, alpha, delta))
        bb1 = build_bb1(Bb1Spec(theta, alpha))
        m_gcr = evaluate_rotation(gcr, alpha, delta, cfg)
        m_bb1 = evaluate_rotation(bb1, alpha, delta, cfg)
        return {
            'alpha': alpha, 'chi': chi(theta, delta, alpha),
            'Pe_gcr': m_gcr.p_e, 'Pe_bb1': m_bb1.p_e,
            'FH_gcr': m_gcr.f_hybrid, 'FH_bb1': m_bb1.f_hybrid,
            'T_gcr_us': gcr.duration(ctxt.durations) * 1e6, 'T_bb1_us': bb1.duration(ctxt.durations) * 1e6,
        }

    return parallel_map(point, [float(a) for a in params['alphas']], ctxt.jobs)


# state preparation

@experiment("squeezing", "momentum squeezing by repeated gadgets",
            ('steps', 'final_delta', 'db_x', 'db_p', 'fisher', 'infidelity', 'duration_us', 'total_duration_us', 'p_e'),
            a=0.06, c=2.0, target_db=8.5, accelerated_fit=False, delta_extraction='variance', max_steps=400,
            initial_amplitude=0.13, fock_dim=100)
def _squeezing(params: dict, ctxt: RunContext) -> list[Row]:
    schedule = SqueezeSchedule(float(params['a']), float(params['c']), float(params['target_db']),
                               bool(params['accelerated_fit']), int(params['max_steps']), params['delta_extraction'],
                               initial_amplitude=float(params['initial_amplitude']))
    report = run_squeezing(schedule, ctxt.fock_config(params['fock_dim']))
    return [{
        'steps': report.steps, 'final_delta': report.deltas[-1], 'db_x': report.db_x, 'db_p': report.db_p,
        'fisher': report.fisher, 'infidelity': report.infidelity, 'duration_us': report.duration_us,
        'total_duration_us': report.total_duration_us, 'p_e': report.p_e,
    }]


@experiment("cat_prep", "two-legged cats with and without quantum signal processing",
            ('alpha', 'corrector', 'parity', 'p_e', 'infidelity_hybrid', 'infidelity_postselected', 'no_qsp_prediction'),
            alphas=[2, 3, 4], correctors=['none', 'gcr', 'bb1'], parity='even', delta=1.0)
def _cat_prep(params: dict, ctxt: RunContext) -> list[Row]:
    points = [(float(a), c) for a in params['alphas'] for c in params['correctors']]

    def point(p) -> Row:
        alpha, corrector = p
        spec = CatSpec(alpha, float(params['delta']), params['parity'])
        cfg = ctxt.fock_config(0) if ctxt.fock_dim is not None else None
        _, metrics = prepare_cat(spec, corrector, cfg)
        return {
            'alpha': alpha, 'corrector': corrector, 'parity': spec.parity, 'p_e': metrics.p_e,
            'infidelity_hybrid': metrics.infidelity_hybrid,
            'infidelity_postselected': metrics.infidelity_postselected,
            'no_qsp_prediction': 1 - no_qsp_cat_fidelity(alpha, spec.delta),
        }

    return parallel_map(point, points, ctxt.jobs)


@experiment("four_legged_cat", "rectangular four-legged cats from a momentum cat",
            ('alpha', 'beta', 'corrector', 'p_e', 'infidelity_hybrid'),
            alpha=4.0, beta=2.0, correctors=['gcr', 'bb1'])
def _four_cat(params: dict, ctxt: RunContext) -> list[Row]:
    alpha, beta = float(params['alpha']), float(params['beta'])

    def point(corrector: str) -> Row:
        cfg = ctxt.fock_config(0) if ctxt.fock_dim is not None else None
        _, metrics = prepare_four_legged_cat(alpha, beta, corrector, cfg)
        return {'alpha': alpha, 'beta': beta, 'corrector': corrector, 'p_e': metrics.p_e,
                'infidelity_hybrid': metrics.infidelity_hybrid}

    return parallel_map(point, list(params['correctors']), ctxt.jobs)


@experiment("fock_prep", "Fock states from short CD circuits and a Trotterized Law-Eberly ladder",
            ('method', 'n', 'depth', 'fidelity'),
            depths=[1, 2, 3], ladder_targets=[1, 2, 3], trotter_steps=8)
def _fock(params: dict, ctxt: RunContext) -> list[Row]:
    rows = []
    for depth in params['depths']:
        _, weight = prepare_fock1(int(depth), ctxt.fock_config(32))
        rows.append({'method': 'cd_circuit', 'n': 1, 'depth': int(depth), 'fidelity': weight})
    steps = int(params['trotter_steps'])
    for n in params['ladder_targets']:
        _, fid = law_eberly_fock(int(n), steps, ctxt.fock_config(max(32, 4 * int(n) + 16)))
        rows.append({'method': 'law_eberly', 'n': int(n), 'depth': steps, 'fidelity': fid})
    return rows


@experiment("gkp_prep", "noiseless GKP preparation with the cat-splitting circuits",
            ('step', 'p_g', 'sigma_z', 'f_h', 'root_fidelity', 's_x', 's_p'),
            delta=0.34, append_sbs=False, fock_dim=100)
def _gkp_prep(params: dict, ctxt: RunContext) -> list[Row]:
    plan = GkpPrepPlan(float(params['delta']), append_sbs=bool(params['append_sbs']))
    _, history = prepare_gkp(plan, ctxt.fock_config(params['fock_dim']))
    return [{
        'step': m.step, 'p_g': m.p_g, 'sigma_z': m.sigma_z, 'f_h': m.f_h, 'root_fidelity': m.root_fidelity,
        's_x': m.s_x, 's_p': m.s_p,
    } for m in history]


@experiment("gkp_noisy", "error-detected GKP preparation under loss and ancilla decoherence",
            ('rounds', 'successes', 'success_fraction', 'mean_fidelity', 'stage_pass_probabilities'),
            rounds=2000, delta=0.34, include_sbs=True, squeeze=True, method='density', fock_dim=60,
            kappa_over_2pi=1e-3, gamma_over_2pi=5e-3, gamma_phi_over_2pi=5e-3)
def _gkp_noisy(params: dict, ctxt: RunContext) -> list[Row]:
    # a noise block in the configuration wins over the experiment's default rates
    noise = ctxt.noise if not ctxt.noise.noiseless else NoiseModel(
        float(params['kappa_over_2pi']), float(params['gamma_over_2pi']), float(params['gamma_phi_over_2pi']))
    report = noisy_gkp_prep_experiment(int(params['rounds']), noise, float(params['delta']),
                                       ctxt.fock_config(params['fock_dim'], 1e-5), ctxt.durations, ctxt.seed,
                                       bool(params['include_sbs']), params['method'], bool(params['squeeze']))
    return [{
        'rounds': report.rounds, 'successes': report.successes, 'success_fraction': report.success_fraction,
        'mean_fidelity': report.mean_fidelity,
        'stage_pass_probabilities': ";".join(f"{p:.8f}" for p in report.stage_pass_probabilities),
    }]


# GKP control

@experiment("sbs_backaction", "back action of one SBS round on a displaced codeword",
            ('epsilon', 'p_g', 'p_e', 'p_e_predicted', 'shift_g', 'slope', 'predicted_slope', 'momentum_std_ratio_e'),
            delta=0.34, epsilons=[0.05, 0.1, 0.15], fock_dim=100)
def _sbs_backaction(params: dict, ctxt: RunContext) -> list[Row]:
    delta = float(params['delta'])
    code = GkpCode(delta, cfg=ctxt.fock_config(params['fock_dim']))

    def point(eps: float) -> Row:
        back = sbs_backaction(code, eps)
        displaced = displacement_operator(eps, code.cfg) @ code.codeword('0')
        _, p_e = sbs_outcome_probabilities(displaced, eps, delta, code.lattice_spacing)
        return {
            'epsilon': eps, 'p_g': back.p_g, 'p_e': back.p_e, 'p_e_predicted': p_e, 'shift_g': back.shift_g,
            'slope': back.shift_slope, 'predicted_slope': -math.pi * delta ** 2 / 2,
            'momentum_std_ratio_e': back.momentum_std_ratio_e,
        }

    return parallel_map(point, [float(e) for e in params['epsilons']], ctxt.jobs)


@experiment("readout_sweep", "logical readout error across the Voronoi cell for the five schemes",
            ('variant', 'basis', 'epsilon', 'error', 'back_action_fidelity'),
            variants=['infinite_energy', 'gcr_finite', 'bb1', 'gcr_bb1', 'bb1_of_gcr'], basis='Z', delta=0.34,
            points=9, fock_dim=100)
def _readout_sweep(params: dict, ctxt: RunContext) -> list[Row]:
    cfg = ctxt.fock_config(params['fock_dim'])
    half = SQUARE_GKP_SPACING / 4
    epsilons = np.linspace(-half, half, int(params['points']))

    def sweep(variant: str) -> list[Row]:
        scheme = ReadoutScheme(variant, params['basis'], float(params['delta']))
        return [{'variant': variant, 'basis': scheme.basis, 'epsilon': pt.epsilon, 'error': pt.error,
                 'back_action_fidelity': pt.back_action_fidelity}
                for pt in readout_sweep(scheme, epsilons, cfg)]

    return [row for rows in parallel_map(sweep, list(params['variants']), ctxt.jobs) for row in rows]


@experiment("teleport_gate", "error-corrected logical rotation teleported through the ancilla",
            ('axis', 'theta', 'pieces', 'mode', 'flips', 'success', 'fidelity', 'root_fidelity'),
            axis='Z', theta=math.pi / 4, pieces=[1], mode='error_corrected', input='+', ancilla_error_rate=0.0,
            delta=0.34, fock_dim=100)
def _teleport_gate(params: dict, ctxt: RunContext) -> list[Row]:
    cfg = ctxt.fock_config(params['fock_dim'])
    code = GkpCode(float(params['delta']), cfg=cfg)
    oscillator = code.codeword(params['input'])
    pieces = [int(m) for m in params['pieces']]
    rngs = child_rngs(ctxt.seed, len(pieces))

    def point(i: int) -> Row:
        plan = TeleportPlan(params['axis'], float(params['theta']), pieces[i], float(params['ancilla_error_rate']),
                            params['mode'], delta=float(params['delta']))
        res = teleport_gate(oscillator, plan, cfg, rngs[i])
        return {'axis': plan.axis, 'theta': plan.theta, 'pieces': plan.pieces, 'mode': plan.mode, 'flips': res.flips,
                'success': res.success_prob, 'fidelity': res.fidelity, 'root_fidelity': res.root_fidelity}

    return parallel_map(point, range(len(pieces)), ctxt.jobs)


@experiment("teleport_pieces", "pieceable gate teleportation with a biased ancilla flip",
            ('pieces', 'p_x', 'fidelity_mc', 'stderr', 'fidelity_formula'),
            pieces=[1, 2, 4, 8], p_x=0.05, theta=math.pi / 4, rounds=4000, compensate=False)
def _teleport_pieces(params: dict, ctxt: RunContext) -> list[Row]:
    pieces = [int(m) for m in params['pieces']]
    p_x, theta, compensate = float(params['p_x']), float(params['theta']), bool(params['compensate'])
    rngs = child_rngs(ctxt.seed, len(pieces))

    def point(i: int) -> Row:
        mean, err = pcgt_toy_model(pieces[i], p_x, theta, int(params['rounds']), rngs[i], compensate)
        return {'pieces': pieces[i], 'p_x': p_x, 'fidelity_mc': mean, 'stderr': err,
                'fidelity_formula': pcgt_fidelity(pieces[i], p_x, theta, compensate)}

    return parallel_map(point, range(len(pieces)), ctxt.jobs)


@experiment("teleport_compare", "trivial teleportation plus stabilization against error-corrected pieces",
            ('mode', 'pieces', 'stabilization_rounds', 'p_x', 'fidelity', 'fidelity_formula'),
            pieces=[1, 2, 4, 8], p_x=0.05, theta=math.pi / 4, axis='Z', input='+', delta=0.34, fock_dim=100)
def _teleport_compare(params: dict, ctxt: RunContext) -> list[Row]:
    # the trivial arm teleports once and spends the other m - 1 rounds on SBS
    cfg = ctxt.fock_config(params['fock_dim'])
    code = GkpCode(float(params['delta']), cfg=cfg)
    oscillator = code.codeword(params['input'])
    p_x, theta = float(params['p_x']), float(params['theta'])
    points = [(mode, int(m)) for mode in ('trivial', 'error_corrected') for m in params['pieces']]

    def point(p) -> Row:
        mode, m = p
        plan = TeleportPlan(params['axis'], theta, 1 if mode == 'trivial' else m, p_x, mode,
                            stabilization_rounds=m - 1 if mode == 'trivial' else 0, delta=float(params['delta']))
        return {'mode': mode, 'pieces': plan.pieces, 'stabilization_rounds': plan.stabilization_rounds, 'p_x': p_x,
                'fidelity': flip_averaged_fidelity(oscillator, plan, cfg),
                'fidelity_formula': pcgt_fidelity(plan.pieces, p_x, theta)}

    return parallel_map(point, points, ctxt.jobs)


@experiment("two_qubit_bell"), "two-mode entangling gate teleported through two ancillae",
            ('variant', 'inputs', 'theta', 'success', 'fidelity', 'root_fidelity'),
            variant='zz', inputs=['+', '+'], theta=math.pi / 4, pieces=1, delta=0.34, fock_dim=40)
def _two_qubit(params: dict, ctxt: RunContext) -> list[Row]:
    inputs = tuple(params['inputs'])
    if len(inputs) != 2:
        raise ConfigError(f"'inputs' needs two codeword labels, got {inputs}")
    res = teleport_two_qubit(inputs, float(params['theta']), int(params['pieces']), params['variant'],
                             float(params['delta']), ctxt.fock_config(params['fock_dim'], 1e-3))
    return [{'variant': params['variant'], 'inputs': "".join(inputs), 'theta': float(params['theta']),
             'success': res.success_prob, 'fidelity': res.fidelity, 'root_fidelity': res.root_fidelity}]


@experiment("state_transfer", "qubit state transferred onto a GKP codeword",
            ('a', 'b', 'from_vacuum', 'success', 'fidelity'),
            states=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], delta=0.34, from_vacuum=False, fock_dim=100)
def _state_transfer(params: dict, ctxt: RunContext) -> list[Row]:
    code = GkpCode(float(params['delta']), cfg=ctxt.fock_config(params['fock_dim']))

    def point(ab) -> Row:
        a, b = complex(ab[0]), complex(ab[1])
        res = arbitrary_state_transfer(a, b, code, from_vacuum=bool(params['from_vacuum']))
        return {'a': a, 'b': b, 'from_vacuum': bool(params['from_vacuum']), 'success': res.success_prob,
                'fidelity': res.fidelity}

    return parallel_map(point, list(params['states']), ctxt.jobs)


# phase estimation

@experiment("phase_est", "oscillator-assisted phase estimation of exp(i theta sigma_y)",
            ('theta', 'r', 'alpha', 'mean_p', 'std_p', 'shots', 'expected_mean_p', 'expected_std_p'),
            thetas=[math.pi / 8, math.pi / 4, 3 * math.pi / 8], rs=[0.0, 0.5, 1.0, 1.5], alpha=1.0, shots=0)
def _phase_est(params: dict, ctxt: RunContext) -> list[Row]:
    points = [(float(t), float(r)) for t in params['thetas'] for r in params['rs']]
    rngs = child_rngs(ctxt.seed, len(points))

    def point(i: int) -> Row:
        theta, r = points[i]
        spec = PhaseEstSpec(theta, float(params['alpha']), r, int(params['shots']))
        cfg = ctxt.fock_config(0) if ctxt.fock_dim is not None else None
        res = run_phase_estimation(spec, cfg, rngs[i])
        mean, std = expected_momentum_moments(spec)
        return {'theta': theta, 'r': r, 'alpha': spec.alpha, 'mean_p': res.mean_p, 'std_p': res.std_p,
                'shots': spec.shots, 'expected_mean_p': mean, 'expected_std_p': std}

    return parallel_map(point, range(len(points)), ctxt.jobs)


def run_experiment(config: ExperimentConfig, ctxt: RunContext) -> ResultFiles:
    """Runs a configured experiment and writes its CSV and JSON artifacts.

    :raises ConfigError: for an unknown experiment or parameter
    :raises SimulationError: re-raised with the experiment name and its parameters
    """
    exp = get_experiment(config.experiment)
    params = exp.resolve(config.parameters)
    logger = logging.getLogger(f"{Experiment.__name__}-{exp.name}")
    logger.info(f"start (seed={ctxt.seed}, jobs={ctxt.jobs}, fock_dim={ctxt.fock_dim})")
    try:
        rows = exp.run(config.parameters, ctxt)
    except SimulationError as e:
        raise type(e)(f"{exp.name} with {params}: {e}") from e
    resolved = {**config.to_dict(), 'parameters': params, 'seed': ctxt.seed, 'fock_dim': ctxt.fock_dim}
    # jobs and the output directory never change the rows
    resolved.pop('jobs')
    resolved.pop('output_path')
    files = write_results(ctxt.output_dir, exp.name, rows, exp.columns, resolved, ctxt.version,
                          {'description': exp.description})
    logger.info(f"done: {len(rows)} rows")
    return files
