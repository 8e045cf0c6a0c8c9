"""Acceptance battery: every quantitative gate at its stated tolerance.

The battery runs once (single worker) and the criteria are asserted from the
returned results; the determinism criterion reruns the whole battery with a
different worker count and compares output trees byte for byte.  Each test
prints one pass/fail line.
"""

import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

from towerlab.experiments import run_all_acceptance

SEED = 20260809


def tree_digest(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="session")
def battery(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance-a")
    code, results, durations = run_all_acceptance(out, SEED, workers=1,
                                                  echo=None)
    return {"out": out, "code": code, "results": results,
            "durations": durations}


def _check(result, name):
    for c in result.checks:
        if c.name == name:
            return c
    raise AssertionError(f"check {name} not found in "
                         f"{[c.name for c in result.checks]}")


def report_value(result, key):
    for k, v in result.report_pairs:
        if k == key:
            return v
    raise AssertionError(f"report key {key} missing")


def announce(num, ok, detail):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def test_criterion_1_return_tail(battery):
    res = battery["results"]["return-tail-lsv05"]
    c = _check(res, "tail-slope-in-band")
    dt = battery["durations"]["return-tail-lsv05"]
    ok = c.passed and dt <= 120.0
    announce(1, ok, f"alpha=0.5 survival slope {c.value:.3f} in -2.0 +/- 0.2 "
                    f"at 1e7 returns, single-worker runtime {dt:.0f}s <= 120s")


def test_criterion_2_meeting_tail_slope(battery):
    res = battery["results"]["meeting-tail-poly3"]
    c = _check(res, "meeting-slope-in-band")
    dt = battery["durations"]["meeting-tail-poly3"]
    ok = c.passed and dt <= 300.0
    announce(2, ok, f"cubic roof tail transfers to meeting-time slope "
                    f"{c.value:.3f} in -2.0 +/- 0.3 at 1e6 runs, "
                    f"runtime {dt:.0f}s <= 300s")


def test_criterion_3_comparator_ratio_trend(battery):
    res = battery["results"]["meeting-tail-poly3"]
    c = _check(res, "comparator-ratio-no-upward-trend")
    announce(3, c.passed,
             f"survival / roof-excess ratio spearman {c.value:.3f} <= 0.2")


def test_criterion_4_exponential_transfer(battery):
    res = battery["results"]["meeting-tail-geometric"]
    c1 = _check(res, "log-survival-linear-r2")
    c2 = _check(res, "exact-oracle-within-3sigma")
    announce(4, c1.passed and c2.passed,
             f"geometric roof: log-survival R^2 {c1.value:.5f} > 0.98, "
             f"exact pair-chain oracle max deviation {c2.value:.2f} sigma <= 3")


def test_criterion_5_approximation_decay(battery):
    res = battery["results"]["approx-decay-poly3"]
    names = [c.name for c in res.checks]
    bound_ok = all(_check(res, f"decay-below-calibrated-comparator-m{m}").passed
                   for m in (8, 16, 32))
    err_ok = all(_check(res, f"decay-mc-error-fraction-m{m}").passed
                 for m in (8, 16, 32))
    ests = [report_value(res, f"estimate_m{m}") for m in (8, 16, 32)]
    announce(5, bound_ok and err_ok,
             f"E|tilde X - X| at m=8,16,32 = "
             f"{', '.join(f'{e:.2e}' for e in ests)} below the comparator "
             f"calibrated at m=4, each with mc error under 20%")


def test_criterion_6_covariance_and_variance(battery):
    res = battery["results"]["variance-poly25"]
    c1 = _check(res, "abs-autocov-increment-share")
    c2 = _check(res, "gk-cutoff-drift")
    c3 = _check(res, "block-variance-matches-gk")
    announce(6, c1.passed and c2.passed and c3.passed,
             f"beta=2.5: |cov| increment share {c1.value:.4f} < 0.02, "
             f"gk drift {c2.value:.4f} < 0.05, "
             f"finite-n variance gap {c3.value:.4f} < 0.10")


def test_criterion_7_clt(battery):
    res = battery["results"]["clt-lsv04"]
    c = _check(res, "ks-distance-normal")
    dt = battery["durations"]["clt-lsv04"]
    ok = c.passed and dt <= 900.0
    announce(7, ok, f"alpha=0.4 tower, n=1e4, 5000 replicates: KS "
                    f"{c.value:.4f} < 0.03, runtime {dt:.0f}s <= 900s")


def test_criterion_8_zero_variance_coboundary(battery):
    res = battery["results"]["coboundary-level"]
    c1 = _check(res, "telescoping-bound")
    c2 = _check(res, "longrun-variance-vanishes")
    sup = report_value(res, "sup_abs_sn")
    chi_sup = report_value(res, "chi_sup")
    tight = sup <= 2 * chi_sup + 1e-9
    announce(8, c1.passed and c2.passed and tight,
             f"sup|S_n| = {sup} <= {2 * chi_sup} + 1e-9 over 1e6 steps and "
             f"long-run variance {report_value(res, 'c_hat2'):.2e} below 1% "
             f"of Var(v)")


def test_criterion_9_stationarity(battery):
    res = battery["results"]["stationarity-poly3"]
    c1 = _check(res, "kernel-exactly-stationary")
    c2 = _check(res, "occupancy-tv")
    announce(9, c1.passed and c2.passed,
             f"exact kernel stationarity {c1.value:.2e} < 1e-12 and "
             f"occupancy TV {c2.value:.4f} < 0.01 over 1e7 steps")


def test_criterion_10_base_return_rate(battery):
    res = battery["results"]["stationarity-poly3"]
    c = _check(res, "base-return-rate")
    announce(10, c.passed,
             f"base-return frequency {c.value:.5f} within 1% of "
             f"{report_value(res, 'base_rate_target'):.5f} at 1e7 steps")


def test_criterion_11_determinism(battery, tmp_path_factory):
    out_b = tmp_path_factory.mktemp("acceptance-b")
    code_b, _, _ = run_all_acceptance(out_b, SEED, workers=2, echo=None)
    da = tree_digest(battery["out"])
    db = tree_digest(out_b)
    same_names = sorted(da) == sorted(db)
    diff = [k for k in da if da.get(k) != db.get(k)] if same_names else ["(file sets differ)"]
    ok = same_names and not diff
    announce(11, ok,
             f"two full battery runs (workers 1 vs 2) produced byte-identical "
             f"output trees ({len(da)} files)" if ok else
             f"trees differ at: {diff[:8]}")


def test_battery_exit_status(battery):
    assert battery["code"] == 0, "some acceptance check failed inside the battery"
