from services.fuzz_service import FailingInstanceModel, Report, SuiteReport
from services.ledger_service import LedgerService


def _report(seed, failures=()):
    suite = SuiteReport(passed=3, failed=len(failures), worst_residuals={"section": 1e-13},
                        flags={"negative_control_escaped": 2},
                        failing_instances=[FailingInstanceModel(dim=4, trial=t, error="boom") for t in failures])
    return Report(seed=seed, dims=[4], trials=3, suites={"section": suite}, wall_clock_seconds=0.5)


def test_record_and_history():
    ledger = LedgerService("sqlite://")
    assert ledger.available
    run_id = ledger.record(_report(1, failures=(0, 2)))
    assert run_id is not None
    history = ledger.history()
    assert len(history) == 1
    run = history[0]
    assert run["id"] == run_id and run["seed"] == 1 and run["dims"] == [4]
    assert run["total_failures"] == 2
    assert sorted(f["trial"] for f in run["failures"]) == [0, 2]


def test_history_limit(tmp_path):
    ledger = LedgerService(f"sqlite:///{tmp_path / 'runs.db'}")
    for seed in range(3):
        ledger.record(_report(seed))
    assert len(ledger.history(limit=2)) == 2
    assert len(LedgerService(f"sqlite:///{tmp_path / 'runs.db'}").history()) == 3


def test_unreachable_database_is_not_fatal():
    ledger = LedgerService("notadialect://nowhere")
    assert not ledger.available
    assert ledger.record(_report(0)) is None
    assert ledger.history() == []
