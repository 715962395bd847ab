import pytest

from droidcage.app_model import Event, apply_event, identify_element
from droidcage.coverage import (
    AggregateRow,
    CoverageIntegrityError,
    CoverageReport,
    aggregate,
    improvement_ratio,
    measure,
    per_app_csv,
)
from droidcage.session import Session

from conftest import device_for


def _report(package, blocks, crashed=False, totals=10_000):
    executed = round(blocks * totals)
    return CoverageReport(package, executed, totals, executed, totals,
                          executed, totals, crashed)


def test_measure_simple_ratio(tiny_taps):
    session = Session(executed_blocks={"t1"})
    report = measure(session, tiny_taps)
    assert report.blocks_executed == 1
    assert report.blocks_total == 3
    assert report.block_ratio == pytest.approx(1 / 3)


def test_measure_empty_session(login_gate):
    report = measure(Session(), login_gate)
    assert (report.blocks_executed, report.methods_executed, report.classes_executed) == (0, 0, 0)


def test_measure_derived_method_and_class_counts(login_gate):
    # b7 and b8 share LoginActivity.onLoginClick
    report = measure(Session(executed_blocks={"b7", "b8"}), login_gate)
    assert report.blocks_executed == 2
    assert report.methods_executed == 1
    assert report.classes_executed == 1
    assert report.classes_total == 3
    assert report.methods_total == 12


def test_measure_rejects_foreign_blocks(tiny_taps):
    with pytest.raises(CoverageIntegrityError):
        measure(Session(executed_blocks={"zz"}), tiny_taps)


def test_coverage_is_monotone_in_session_prefix(login_gate):
    # applying a prefix of an event sequence never yields higher coverage
    device = device_for(login_gate)
    elements = login_gate.ui_state("LoginActivity", "form").elements
    keys = {e.id_string: identify_element("LoginActivity", e) for e in elements}
    events = [
        Event.set_text(keys["edit_username"], "u"),
        Event.set_text(keys["edit_password"], "123456"),
        Event.click(keys["btn_login"]),
        Event.broadcast("android.intent.action.BOOT_COMPLETED"),
    ]
    seen = set()
    previous = -1
    for ev in events:
        res = apply_event(device, login_gate, ev)
        device = res.device
        seen |= set(res.executed_blocks)
        ratio = measure(Session(executed_blocks=set(seen)), login_gate).blocks_executed
        assert ratio >= previous
        previous = ratio


def test_aggregate_mean():
    row = aggregate([_report("a", 0.20), _report("b", 0.60)], "monkey")
    assert row.blocks_avg == pytest.approx(40.0)


def test_aggregate_reproduces_published_monkey_blocks_average():
    # arithmetic fixture: four per-app ratios whose mean is the published row
    ratios = [0.20, 0.40, 0.4528, 0.40]
    reports = [_report(f"app{i}", r) for i, r in enumerate(ratios)]
    row = aggregate(reports, "monkey")
    assert row.blocks_avg == pytest.approx(36.32, abs=1e-9)


def test_aggregate_crash_rate():
    row = aggregate([_report("a", 0.5, crashed=True)], "monkey")
    assert row.crash_rate == 100.0


def test_aggregate_empty_list_rejected():
    with pytest.raises(ValueError):
        aggregate([], "monkey")


def test_crashed_apps_still_contribute_partial_ratios():
    reports = [_report("a", 0.2, crashed=True), _report("b", 0.6)]
    row = aggregate(reports, "x")
    assert row.blocks_avg == pytest.approx(40.0)
    assert row.crash_rate == pytest.approx(50.0)
    excluded = aggregate(reports, "x", include_crashed=False)
    assert excluded.blocks_avg == pytest.approx(60.0)
    assert excluded.crash_rate == pytest.approx(50.0)


def test_level_consistency(login_gate):
    report = measure(Session(executed_blocks={"b1"}), login_gate)
    assert (report.blocks_executed > 0) == (report.methods_executed > 0)
    assert (report.methods_executed > 0) == (report.classes_executed > 0)
    empty = measure(Session(), login_gate)
    assert (empty.blocks_executed, empty.methods_executed, empty.classes_executed) == (0, 0, 0)


def test_improvement_ratio_published_values():
    combined = AggregateRow("smart_monkey", 37.12, 41.6, 41.23, 16.0)
    baseline = AggregateRow("monkey", 32.93, 35.05, 36.32, 16.0)
    assert improvement_ratio(combined, baseline) == pytest.approx(1.1352, abs=1e-4)


def test_improvement_ratio_identity_and_arithmetic():
    row = AggregateRow("a", 10, 10, 25.0, 0)
    assert improvement_ratio(row, row) == 1.0
    double = AggregateRow("b", 10, 10, 50.0, 0)
    assert improvement_ratio(double, row) == 2.0


def test_improvement_ratio_zero_baseline():
    zero = AggregateRow("z", 0, 0, 0.0, 0)
    with pytest.raises(ZeroDivisionError):
        improvement_ratio(zero, zero)


def test_per_app_csv_shape(tiny_taps):
    report = measure(Session(executed_blocks={"t1"}), tiny_taps)
    text = per_app_csv([("monkey", report)])
    lines = text.strip().split("\n")
    assert lines[0].startswith("package,method,blocks_executed")
    assert lines[1].startswith("com.fixture.tinytaps,monkey,1,3,")
