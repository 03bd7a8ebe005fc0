import math
import pytest
import numpy as np

from .. import AspectRatioError, NoConvergence, SQUARE_GKP_SPACING
from ..hilbert import FockBasisConfig, HybridState, KET_G, squeezed_vacuum
from ..state_prep import (
    CatSpec, GkpPrepPlan, SqueezeSchedule, cat_unentangler, fock1_sequence, gkp_depth, gkp_depth_exact, gkp_stage, law_eberly_fock,
    optimal_unentangling_coefficient, prepare_cat, prepare_fock1, prepare_four_legged_cat, prepare_gkp, run_squeezing,
    position_squeezing_sequence, small_cat_weights, squeezing_db, squeezing_gadget,
)
from ..instructions import apply


def test_squeezing_db():
    assert squeezing_db(0.25) == pytest.approx(0.0)
    assert squeezing_db(0.025) == pytest.approx(10.0)


def test_squeeze_schedule_validation():
    with pytest.raises(ValueError):
        SqueezeSchedule(a=0.0)
    with pytest.raises(ValueError):
        SqueezeSchedule(delta_extraction='moments')
    with pytest.raises(ValueError):
        SqueezeSchedule(initial_amplitude=0.0)
    schedule = SqueezeSchedule()
    assert schedule.step_amplitude(1.0) == pytest.approx(math.sqrt(2) * 0.06)
    assert schedule.step_amplitude(1.0, step=0) == pytest.approx(math.sqrt(2) * 0.13)
    assert SqueezeSchedule(initial_amplitude=None).step_amplitude(1.0, step=0) == pytest.approx(math.sqrt(2) * 0.06)


def test_single_gadget_widens_position():
    cfg = FockBasisConfig(100, leakage_tol=1e-6, strict=False)
    state = HybridState.product([squeezed_vacuum(1.0, cfg)], [KET_G])
    _, delta, p_e, gadget = squeezing_gadget(state, 0.035, 1.0, cfg)
    assert delta > 1.0
    assert 0 <= p_e < 1e-2
    assert len(gadget) == 2


def test_squeezing_reaches_small_target():
    report = run_squeezing(SqueezeSchedule(target_db=1.0))
    assert report.db_p >= 1.0
    assert report.steps == len(report.deltas) - 1
    assert report.infidelity < 1e-2
    assert report.fisher == pytest.approx(4 * 10 ** (report.db_p / 10), rel=1e-9)


def test_squeezing_step_cap():
    with pytest.raises(NoConvergence):
        run_squeezing(SqueezeSchedule(max_steps=1))


def test_vacuum_fisher_information():
    # F = 2 / var in units where the vacuum variance is 1/2
    report = run_squeezing(SqueezeSchedule(target_db=-1.0))
    assert report.steps == 0
    assert report.db_p == pytest.approx(0.0, abs=1e-9)
    assert report.fisher == pytest.approx(4.0)
    assert report.duration_us == 0.0


def test_squeezing_meets_the_time_bound():
    report = run_squeezing(SqueezeSchedule())
    assert report.db_p >= 8.4
    assert report.duration_us <= 6.5
    assert report.total_duration_us > report.duration_us


def test_accelerated_squeezing_fisher_information():
    report = run_squeezing(SqueezeSchedule(target_db=11.2, accelerated_fit=True))
    assert report.db_p >= 11.2
    assert report.fisher == pytest.approx(53.5, rel=0.05)
    assert report.duration_us <= 9.0


def test_position_squeezing_from_vacuum():
    cfg = FockBasisConfig(100, leakage_tol=1e-6, strict=False)
    state = apply(HybridState.vacuum(cfg), position_squeezing_sequence(0.34, cfg=cfg), cfg)
    branch = state.branch(0)
    assert abs(np.vdot(squeezed_vacuum(0.34, cfg), branch / np.linalg.norm(branch))) ** 2 > 0.98
    with pytest.raises(ValueError):
        position_squeezing_sequence(1.2)


def test_cat_spec_validation():
    with pytest.raises(ValueError):
        CatSpec(0)
    with pytest.raises(ValueError):
        CatSpec(2.0, parity='triple')
    assert CatSpec(2.0, parity='odd').sign == -1


def test_small_cat_weights_sum_to_one():
    even, odd = small_cat_weights(0.5)
    assert even + odd == pytest.approx(1.0)
    assert even - odd == pytest.approx(math.exp(-0.5))


def test_corrected_unentangler_needs_large_cat():
    with pytest.raises(ValueError):
        cat_unentangler(0.5, 1.0, 'gcr')


def test_bare_cat_infidelity_law():
    _, metrics = prepare_cat(CatSpec(4.0), 'none')
    assert metrics.infidelity_hybrid == pytest.approx(math.pi ** 2 / (64 * 16), rel=0.1)


def test_gcr_cat_beats_bare_cat():
    _, bare = prepare_cat(CatSpec(4.0), 'none')
    _, gcr = prepare_cat(CatSpec(4.0), 'gcr')
    assert gcr.infidelity_hybrid * 10 <= bare.infidelity_hybrid


def test_four_legged_cat_aspect_ratio():
    with pytest.raises(AspectRatioError):
        prepare_four_legged_cat(3.0, 1.0, 'gcr')
    with pytest.raises(ValueError):
        prepare_four_legged_cat(-1.0, 1.0)


def test_gkp_depth_table():
    assert {d: gkp_depth(d) for d in (0.1, 0.2, 0.3, 0.4)} == {0.1: 31, 0.2: 7, 0.3: 3, 0.4: 1}
    with pytest.raises(ValueError):
        gkp_depth(0.0)


def test_gkp_plan():
    plan = GkpPrepPlan(0.34)
    assert plan.depth == gkp_depth(0.34)
    assert plan.n_circuits == plan.depth + 1
    x0 = SQUARE_GKP_SPACING / 2
    assert plan.coefficients[0] == pytest.approx(math.pi / (4 * x0))
    assert optimal_unentangling_coefficient(4, x0) <= math.pi / (16 * x0)
    with pytest.raises(ValueError):
        GkpPrepPlan(1.2)


def test_gkp_plan_logical_frame():
    assert GkpPrepPlan(0.34).logical_frame == (0, 1)
    assert GkpPrepPlan(0.34, depth=1).logical_frame == (1, 0)


def test_gkp_stage_layout():
    # R_y, CD(sigma_z), corrected unentangler (two CDs), R_y back
    assert len(gkp_stage(1, GkpPrepPlan(0.34))) == 5


def test_fock1_single_gadget_root_fidelity():
    beta = math.pi / 4
    _, f_h = prepare_fock1(1)
    assert f_h == pytest.approx(beta * math.exp(-beta ** 2 / 2), rel=1e-6)
    with pytest.raises(ValueError):
        fock1_sequence(4)


@pytest.mark.parametrize('depth, expected', [(1, 0.58), (2, 0.84), (3, 0.99)])
def test_fock1_fidelity_by_depth(depth, expected):
    _, f_h = prepare_fock1(depth)
    assert f_h == pytest.approx(expected, abs=0.01)


def test_law_eberly_single_photon():
    _, fid = law_eberly_fock(1, 32)
    assert fid > 0.99
    with pytest.raises(ValueError):
        law_eberly_fock(0)


def test_gkp_depth_exact_scales_with_inverse_square_width():
    assert gkp_depth_exact(0.1) == pytest.approx(4 * gkp_depth_exact(0.2))
    with pytest.raises(ValueError):
        gkp_depth_exact(0.2, peak_fraction=0.5)


def test_noiseless_gkp_preparation():
    plan = GkpPrepPlan(0.34)
    state, history = prepare_gkp(plan)
    assert [m.step for m in history] == [f"C{k}" for k in range(1, plan.n_circuits + 1)]
    assert history[-1].f_h >= 0.99
    assert history[-1].sigma_z >= 0.97
    assert state.num_modes == 1


def test_sbs_after_preparation_keeps_the_tracked_codeword():
    _, history = prepare_gkp(GkpPrepPlan(0.34, append_sbs=True))
    assert history[-1].step == "SBS"
    assert history[-1].f_h > 0.99
