import pytest
from pydantic import ValidationError

from services.fuzz_service import (
    SUITES,
    FuzzConfig,
    FuzzService,
    Report,
    SuiteReport,
    TrialOutcome,
    rate_violations,
    trial_generator,
)
from services.substrate import TriState


def test_config_validation():
    with pytest.raises(ValidationError):
        FuzzConfig(dims=[2], trials=0)
    with pytest.raises(ValidationError):
        FuzzConfig(dims=[], trials=1)
    with pytest.raises(ValidationError):
        FuzzConfig(dims=[0, 2], trials=1)
    with pytest.raises(ValidationError):
        FuzzConfig(dims=[2], trials=1, suites=["nonsense"])


def test_trial_outcome_status():
    out = TrialOutcome()
    out.check("residual", 1e-12, 1e-9)
    out.expect(TriState.TRUE)
    assert out.status == "pass"
    out.expect(TriState.INDETERMINATE)
    assert out.status == "indeterminate"
    out.check("residual", 1e-3, 1e-9)
    assert out.status == "fail"
    assert TrialOutcome(error="NotInvertible: boom").status == "fail"


def test_trial_generators_are_independent():
    a = trial_generator(1, "fiber", 4, 0).standard_normal(3)
    b = trial_generator(1, "fiber", 4, 0).standard_normal(3)
    c = trial_generator(1, "fiber", 4, 1).standard_normal(3)
    assert (a == b).all()
    assert not (a == c).all()


def test_small_run_has_no_failures():
    report = FuzzService(FuzzConfig(dims=[2, 4], trials=3, seed=11)).run()
    assert set(report.suites) == set(SUITES)
    assert report.total_failures == 0
    for suite in report.suites.values():
        assert suite.passed + suite.indeterminate == 6


def test_buckholtz_criteria_agree_on_every_trial():
    report = FuzzService(FuzzConfig(dims=[2], trials=20, suites=["buckholtz"])).run()
    suite = report.suites["buckholtz"]
    assert suite.failed == 0
    assert suite.flags["three_way_agreement"] == 20


def test_fiber_negative_control_is_reported():
    report = FuzzService(FuzzConfig(dims=[6], trials=10, suites=["fiber"], seed=5)).run()
    flags = report.suites["fiber"].flags
    assert flags["negative_control_trials"] == 10
    assert flags["negative_control_escaped"] >= 9


def test_reports_are_deterministic():
    config = FuzzConfig(dims=[3], trials=4, seed=42, suites=["transition", "complement", "trivialization"])
    first = FuzzService(config).run().deterministic_dump()
    second = FuzzService(config).run().deterministic_dump()
    assert first == second
    assert "wall_clock_seconds" not in first


def test_worker_threads_do_not_change_the_report():
    serial = FuzzConfig(dims=[2, 3], trials=3, seed=9, suites=["oblique", "section", "charts"])
    threaded = serial.model_copy(update={"workers": 4})
    assert FuzzService(serial).run().deterministic_dump() == FuzzService(threaded).run().deterministic_dump()


def test_replay_reproduces_a_trial():
    service = FuzzService(FuzzConfig(dims=[5], trials=3, seed=2, suites=["unitary"]))
    first = service.replay("unitary", 5, 2)
    again = service.replay("unitary", 5, 2)
    assert first.status == "pass"
    assert first.residuals == again.residuals
    with pytest.raises(ValueError):
        service.replay("nonsense", 5, 2)


def test_negative_control_rate_floor():
    assert rate_violations({"negative_control_trials": 20, "negative_control_escaped": 18})
    assert rate_violations({"negative_control_trials": 20, "negative_control_escaped": 19}) == []
    assert rate_violations({"negative_control_trials": 5, "negative_control_escaped": 0}) == []
    assert rate_violations({}) == []


def test_rate_violations_count_as_failures():
    suite = SuiteReport(passed=40, flags={"negative_control_trials": 40, "negative_control_escaped": 30})
    suite.violations = rate_violations(suite.flags)
    report = Report(seed=0, dims=[4], trials=40, suites={"fiber": suite})
    assert report.total_failures == 1
    assert "30 of 40" in report.deterministic_dump()["suites"]["fiber"]["violations"][0]
