from ..acceptance import CRITERIA, format_report, verify


def test_slow_criteria_are_skipped_when_fast():
    results = verify(fast=True, names=['squeezing', 'gkp_depth'])
    assert [r.name for r in results] == ['squeezing', 'gkp_depth']
    assert results[0].skipped
    assert results[0].passed
    assert not results[1].skipped
    assert results[1].passed


def test_deterministic_criteria_pass():
    results = verify(fast=True, jobs=2, names=['csv_determinism', 'duration_ratio'])
    assert all(r.passed for r in results)
    report = format_report(results)
    assert report.count('PASS') == 2
    assert 'csv_determinism' in report


def test_every_criterion_has_a_budget():
    assert len(CRITERIA) == 16
    for criterion in CRITERIA.values():
        assert criterion.budget_s > 0
