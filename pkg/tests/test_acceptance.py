"""Acceptance gate: one test per criterion, each with its runtime budget.

Every test records a one-line PASS/FAIL summary; the lines are printed as the
test runs (visible with ``-s``) and again in the terminal summary.
"""

import subprocess
import sys
import time

import pytest

from bellcast import verify
from bellcast.verify import VerifyReport

RESULTS: list[str] = []


def _gate(label, budget, run):
    report = VerifyReport("paper", 1)
    start = time.perf_counter()
    run(report)
    elapsed = time.perf_counter() - start
    in_time = elapsed < budget
    ok = report.passed and in_time
    failed = [c.name for c in report.checks if not c.passed]
    line = (f"{label}: {'PASS' if ok else 'FAIL'}  ({sum(c.passed for c in report.checks)}/{len(report.checks)} checks, "
            f"{elapsed:.1f} s of {budget:g} s)")
    if failed:
        line += f"  failed: {', '.join(failed)}"
    print(line)
    RESULTS.append(line)
    assert report.passed, f"failed checks: {failed}\n{report.table()}"
    assert in_time, f"took {elapsed:.1f} s, budget {budget} s"


def test_criterion_1_exact_bounds():
    _gate("criterion 1 exact polytope bounds", 10, verify.check_bounds)


def test_criterion_2_quantum_point_values():
    _gate("criterion 2 quantum point values", 5, verify.check_quantum_points)


def test_criterion_3_r3_quantum_maximum():
    _gate("criterion 3 R3 quantum maximum", 60, lambda r: verify.check_r3_maximum(r, seed=1, restarts=64))


def test_criterion_4_closed_form_oracles():
    _gate("criterion 4 closed-form oracle equality", 10, verify.check_closed_forms)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_criterion_5_sweep_positivity(n):
    _gate(f"criterion 5 sweep positivity n={n}", 300,
          lambda r: verify.check_sweep(r, n, seed=1, points=50, restarts=4))


def test_criterion_6_ghz_anonymity():
    _gate("criterion 6 GHZ anonymity", 30, verify.check_anonymity)


def test_criterion_7_structure():
    _gate("criterion 7 structure properties", 120, lambda r: verify.check_structure(r, seed=1))


def test_criterion_8_deterministic_reports(tmp_path):
    paths = [tmp_path / "run1.json", tmp_path / "run2.json"]
    for p in paths:
        res = subprocess.run([sys.executable, "-m", "bellcast.cli", "verify", "--suite", "paper", "--seed", "1",
                              "--json", str(p)], capture_output=True, text=True)
        assert res.returncode == 0, res.stdout + res.stderr
    same = paths[0].read_bytes() == paths[1].read_bytes()
    line = f"criterion 8 byte-identical verify reports: {'PASS' if same else 'FAIL'}"
    print(line)
    RESULTS.append(line)
    assert same
