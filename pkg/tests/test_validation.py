import math

from scfox import validation


def test_tightened_tolerances_report_failures_with_margins(tmp_path):
    loose = validation.check_special_functions(tol_scale=1.0)
    tight = validation.check_special_functions(tol_scale=1e-4)
    assert all(r.passed for r in loose)
    failed = [r for r in tight if not r.passed]
    assert failed
    assert all(r.margin < 1 for r in failed)
    report = tmp_path / "report.csv"
    validation.write_report(str(report), loose + tight)
    lines = report.read_text().splitlines()
    assert lines[0].startswith("criterion,check,tolerance,achieved,margin,passed,runtime_s")
    assert any(",FAIL," in ln for ln in lines)


def test_contour_shift_check_passes():
    (res,) = validation.check_contour_shift()
    assert res.passed and res.achieved < 1.0


def test_margin_of_exact_result_is_infinite():
    r = validation.CheckResult(3, "x", 0.0, 0.0, True)
    assert math.isinf(r.margin)


def test_monotone_violation_helper():
    assert validation._monotone_violation([3, 2, 1], True, True) == 0.0
    assert validation._monotone_violation([3, 3, 1], True, True) > 0.0
    assert validation._monotone_violation([3, 3, 1], True, False) == 0.0
    assert validation._monotone_violation([1, 2, 1.5], False, False) > 0.0
