"""Acceptance criteria 1-11, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line, shown in the terminal summary under
"acceptance criteria" (and inline with ``-s``).
"""

import json
import math
import time

import numpy as np
import pytest

from renyi_polygamy import cli, lemma, roof
from renyi_polygamy import polygamy as P
from renyi_polygamy.measures import ALPHA_MAX, ALPHA_MIN, f_alpha
from renyi_polygamy.states import derive_seed, ginibre_random_mixed, haar_random_pure, named_state

SEED = 20240101
ALPHAS = (ALPHA_MIN, 0.9, 1.0, 1.15, ALPHA_MAX)
MUS = (0.0, 0.25, 0.5, 0.75, 1.0)


def pure_battery(n3, n4, offset=0):
    for n, count in ((3, n3), (4, n4)):
        for k in range(count):
            yield haar_random_pure(n, derive_seed(SEED + n + offset, k))


def two_qubit_battery(count, offset=0):
    for k in range(count):
        yield ginibre_random_mixed(2, 2 + k % 3, derive_seed(SEED + offset, k))


def test_c01_subadditivity_grid(criterion):
    start = time.perf_counter()
    report = lemma.scan_sign("g", "D", 2e-3, alphas=lemma.lemma_alphas(21))
    elapsed = time.perf_counter() - start
    ok = report.min_value >= -1e-9 and report.violations == 0 and elapsed < 120
    assert criterion(1, ok, f"g min {report.min_value:.3e} over {report.n_points} points, {elapsed:.1f} s")


def test_c02_boundary_identities(criterion):
    x = lemma.unit_grid(1e-3)
    zeros = np.zeros_like(x)
    worst_axes = max(
        max(np.abs(lemma.g_alpha(x, zeros, a)).max(), np.abs(lemma.g_alpha(zeros, x, a)).max())
        for a in lemma.lemma_alphas(21)
    )
    worst_m = max(max(abs(lemma.m_alpha(0.0, a)), abs(lemma.m_alpha(1.0, a))) for a in lemma.lemma_alphas(21))
    worst_h = float(np.abs(lemma.h_alpha(lemma.unit_grid(1e-3, interior=True), 1.0)).max())
    ok = worst_axes <= 1e-12 and worst_m <= 1e-12 and worst_h <= 1e-9
    assert criterion(2, ok, f"|g| on axes {worst_axes:.1e}, |m| at ends {worst_m:.1e}, |h| at alpha=1 {worst_h:.1e}")


def test_c03_sign_scans(criterion):
    start = time.perf_counter()
    h1 = lemma.scan_sign("h", "D1", 1e-3)
    h2 = lemma.scan_sign("h", "D2", 1e-3)
    m = lemma.scan_sign("m", "D3", 1e-3)
    slope = np.asarray(lemma.dm_dalpha(1 / math.sqrt(2), lemma.range_grid(ALPHA_MIN, ALPHA_MAX, 1e-3)))
    above = lemma.h_limit_x1(lemma.range_grid(1.0, ALPHA_MAX, 1e-3, interior=True))
    below = lemma.h_limit_x1(lemma.range_grid(ALPHA_MIN, 1.0, 1e-3, interior=True))
    elapsed = time.perf_counter() - start
    ok = (
        h1.max_value <= 1e-9 and h2.min_value >= -1e-9 and m.max_value <= 1e-9
        and slope.min() >= -1e-9 and np.all(above < 0) and np.all(below > 0) and elapsed < 60
    )
    detail = (
        f"h max on D1 {h1.max_value:.2e}, h min on D2 {h2.min_value:.2e}, m max {m.max_value:.2e}, "
        f"min dm/dalpha {slope.min():.3f}, limit signs ok={bool(np.all(above < 0) and np.all(below > 0))}, {elapsed:.1f} s"
    )
    assert criterion(3, ok, detail)


def test_c04_critical_points(criterion):
    start = time.perf_counter()
    report = lemma.critical_point_scan("h", "D1", 5e-3)
    elapsed = time.perf_counter() - start
    ok = report.common_cells == 0 and elapsed < 120
    assert criterion(4, ok, f"common cells {report.common_cells}, sign-change cells {report.sign_change_cells}, {elapsed:.1f} s")


def test_c05_coa_polygamy(criterion):
    start = time.perf_counter()
    worst = min(P.check_eq1_eq2(psi).margin for psi in pure_battery(1000, 1000))
    w = P.check_eq1_eq2(named_state("w", 3)).margin
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-9 and abs(w) <= 1e-9 and elapsed < 60
    assert criterion(5, ok, f"worst margin {worst:.3e} over 2000 states, W(3) margin {w:.1e}, {elapsed:.1f} s")


def test_c06_certified_polygamy(criterion):
    start = time.perf_counter()
    reports = [P.check_eq19_pure(psi, None, a) for psi in pure_battery(1000, 500) for a in ALPHAS]
    ghz = [P.check_eq19_pure(named_state("ghz", 3), None, a) for a in ALPHAS]
    elapsed = time.perf_counter() - start
    violations = sum(r.verdict == "VIOLATION" for r in reports)
    not_holding = sum(r.verdict != "holds" for r in reports)
    ghz_ok = all(abs(r.lhs - 1) <= 1e-9 and abs(r.rhs - 2) <= 1e-9 for r in ghz)
    ok = violations == 0 and ghz_ok and elapsed < 180
    detail = (
        f"{len(reports)} checks, {violations} VIOLATION, {not_holding} not holds, "
        f"worst margin {min(r.margin for r in reports):.3e}, GHZ(3) 1 vs 2 ok={ghz_ok}, {elapsed:.1f} s"
    )
    assert criterion(6, ok, detail)


@pytest.mark.slow
def test_c07_coa_floor_sandwich(criterion):
    start = time.perf_counter()
    floor_gap, ceiling_gap, eq8_checks = math.inf, math.inf, 0
    for k, rho in enumerate(two_qubit_battery(500)):
        for a in ALPHAS:
            value = roof.reoa(rho, a, seed=k).value
            floor_gap = min(floor_gap, value - roof.lemma1_floor(rho, a))
            if a < 1.0:
                ceiling_gap = min(ceiling_gap, P.eq8_ceiling(rho, a) - value)
                eq8_checks += 1
    elapsed = time.perf_counter() - start
    ok = floor_gap >= -1e-6 and ceiling_gap >= -1e-6 and elapsed < 900
    detail = (
        f"min(reoa - floor) {floor_gap:.3e} over 2500, min(ceiling - reoa) {ceiling_gap:.3e} over {eq8_checks}, "
        f"{elapsed:.0f} s"
    )
    assert criterion(7, ok, detail)


@pytest.mark.slow
def test_c08_coa_oracle(criterion):
    start = time.perf_counter()
    worst = 0.0
    for k, rho in enumerate(two_qubit_battery(200, offset=1)):
        found = roof.optimize_roof(rho, roof.concurrence_objective(), "max", seed=k).value
        worst = max(worst, abs(found - roof.coa_exact(rho)))
    elapsed = time.perf_counter() - start
    ok = worst <= 2e-4 and elapsed < 600
    assert criterion(8, ok, f"max |optimizer - closed form| {worst:.3e} over 200 states, {elapsed:.0f} s")


def test_c09_power_polygamy(criterion):
    start = time.perf_counter()
    violations, mismatched, count = 0, 0, 0
    for psi in pure_battery(50, 50):
        for a in ALPHAS:
            base = P.check_eq19_pure(psi, None, a)
            for mu in MUS:
                rep = P.power_report(base, mu)
                count += 1
                violations += rep.verdict == "VIOLATION"
                if mu == 1.0 and rep.verdict != base.verdict:
                    mismatched += 1
    elapsed = time.perf_counter() - start
    ok = violations == 0 and mismatched == 0 and elapsed < 120
    assert criterion(9, ok, f"{count} checks, {violations} VIOLATION, {mismatched} mu=1 mismatches, {elapsed:.1f} s")


def test_c10_alpha_one_continuity(criterion):
    x = lemma.unit_grid(1e-2)
    s = np.sqrt(np.clip(1 - x * x, 0, 1))
    p = (1 + s) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        q = 1 - p
        h2 = -(p * np.log2(p) + np.where(q > 0, q * np.log2(q), 0.0))
    worst = max(float(np.abs(f_alpha(x, a) - h2).max()) for a in (1 - 1e-4, 1 + 1e-4))
    assert criterion(10, worst <= 1e-3, f"max deviation {worst:.3e} at alpha = 1 +- 1e-4")


def test_c11_determinism(criterion, tmp_path, capsys):
    config = {
        "seed": 11,
        "inequalities": list(P.INEQUALITIES),
        "counts": {"pure": 6, "two_qubit": 4, "mixed": 2},
        "alphas": [0.9, 1.1],
        "mus": [0.0, 0.5, 1.0],
        "budget": {"restarts": 6},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(config))
    codes = []
    for name, threads in (("run1", 1), ("run2", 1), ("run8", 8)):
        codes.append(cli.main(["verify", str(path), "--threads", str(threads), "--out", str(tmp_path / name)]))
    capsys.readouterr()
    bodies = [(tmp_path / name / "report.jsonl").read_bytes() for name in ("run1", "run2", "run8")]
    ok = codes == [0, 0, 0] and bodies[0] == bodies[1] == bodies[2] and len(bodies[0]) > 0
    lines = bodies[0].count(b"\n")
    assert criterion(11, ok, f"{lines} report lines, identical across 2 runs and 1 vs 8 threads: {ok}")
