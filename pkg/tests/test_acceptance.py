"""Acceptance criteria, one test each.

Every test appends a PASS/FAIL line to ``ACCEPTANCE_LINES``; the lines are
printed in the terminal summary.  Thresholds are asserted as stated; a
criterion that does not hold is left failing.
"""

import statistics
import time

import gmpy2
import mpmath
import numpy as np
import pytest
from gmpy2 import mpfr

import frozen
import oracles
from conftest import ACCEPTANCE_LINES
from unimodal_lab.branches import monotone_branches
from unimodal_lab.cli import main
from unimodal_lab.config import RunConfig, save
from unimodal_lab.mapcore import UnimodalMap, reversing_fixed_point
from unimodal_lab.pipeline import run_pipeline
from unimodal_lab.returns import central_domain, first_entry_time, transfer_components
from unimodal_lab.wmp import closest_approach

pytestmark = pytest.mark.slow


def record(k, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    return ok


@pytest.fixture(scope="session")
def full_bundle():
    return run_pipeline(RunConfig())


def test_criterion_01_chebyshev_branches():
    start = time.perf_counter()
    m = UnimodalMap(2, 1)
    worst, counts_ok = mpfr(0), True
    for n in range(0, 11):
        branches = monotone_branches(m, n)
        counts_ok &= len(branches) == 2 ** n
        ends = [b.domain.lo for b in branches] + [branches[-1].domain.hi]
        want = oracles.chebyshev_endpoints(n)
        with m.ctx.precise():
            for got, w in zip(ends, want):
                worst = max(worst, abs(got - mpfr(mpmath.nstr(w, 90))))
    elapsed = time.perf_counter() - start
    with m.ctx.precise():
        close = worst <= mpfr(2) ** -128
    ok = counts_ok and bool(close) and elapsed < 10
    record(1, ok, f"n<=10, counts exact={counts_ok}, max error {float(worst):.2e} "
                  f"(bound 2^-128), {elapsed:.2f}s")
    assert ok


def test_criterion_02_entry_time_oracle():
    start = time.perf_counter()
    m = UnimodalMap(2, frozen.A)
    p0 = reversing_fixed_point(m)
    xs = [p0, central_domain(m, p0).psi]
    structures = [transfer_components(m, x, 1000, "1e-8") for x in xs]
    rng = np.random.default_rng(20240502)
    pairs = agree = covered = 0
    for _ in range(1000):
        ts = structures[int(rng.integers(len(structures)))]
        y = mpfr(float(rng.random()))
        pairs += 1
        comp = ts.component_at(y)
        if comp is None:
            continue
        covered += 1
        agree += first_entry_time(m, y, ts.V, 1000) == comp.time
    elapsed = time.perf_counter() - start
    coverage = min(float(ts.coverage) for ts in structures)
    ok = agree == covered and coverage >= 0.99 and elapsed < 120
    record(2, ok, f"{agree}/{covered} covered pairs agree ({pairs} drawn), "
                  f"min coverage {coverage:.6f}, {elapsed:.1f}s")
    assert ok


def test_criterion_03_q_table():
    m = UnimodalMap(2, frozen.A)
    table = closest_approach(m, 10_000)
    rows = table.rows
    with m.ctx.precise():
        ys = [m.c]
        y = m.c
        for _ in range(10_000):
            y = m._f(y)
            ys.append(y)
        minimal = True
        for prev, row in zip(rows, rows[1:]):
            V = prev.V
            first = next((t for t in range(prev.q + 1, 10_001) if V.lo < ys[t] < V.hi), None)
            minimal &= first == row.q
        dists = [abs(ys[r.q] - m.c) for r in rows]
        decreasing = all(b < a for a, b in zip(dists, dists[1:]))
    oracle_prefix = tuple(oracles.q_table(frozen.A, 10)[0])
    prefix = table.q[:5]
    ok = minimal and decreasing and prefix == oracle_prefix == frozen.Q_PREFIX
    record(3, ok, f"{len(rows)} rows, rescan minimal={minimal}, distances decreasing={decreasing}, "
                  f"prefix {prefix} vs oracle {oracle_prefix}")
    assert ok


def test_criterion_04_geometry_floors(full_bundle):
    deltas = [d for row in full_bundle.geometry for d in row.deltas()]
    floor = all(d >= mpfr("1e-3") for d in deltas)
    ratio = float(min(deltas) / statistics.median(deltas)) if deltas else 0.0
    ok = bool(deltas) and floor and ratio >= 0.25
    record(4, ok, f"{len(deltas)} deltas over {len(full_bundle.anchors)} anchors, all >= 1e-3: {floor}, "
                  f"min/median = {ratio:.3g} (need >= 0.25)")
    assert ok


def test_criterion_05_koebe_consistency(full_bundle):
    checked = full_bundle.wmp.checked
    bad = 0
    with gmpy2.context(precision=256):
        for p in checked:
            d = p.delta
            if not d > 0:
                continue
            if p.K > ((1 + d) / d) ** 2 * (1 + mpfr("1e-6")):
                bad += 1
    ok = len(checked) >= 1000 and bad == 0 and full_bundle.wmp.koebe_violations == 0
    record(5, ok, f"{len(checked)} measured (delta, K) pairs of {len(full_bundle.wmp.pairs)}, "
                  f"{bad} violations")
    assert ok


def test_criterion_06_lemma24(full_bundle):
    violations = [row.lemma24 for row in full_bundle.geometry]
    ok = bool(violations) and sum(violations) == 0
    record(6, ok, f"{len(violations)} anchors, {sum(violations)} overlaps")
    assert ok


def test_criterion_07_shrinking(full_bundle):
    tr = full_bundle.transfer
    lens = [r.V.length for r in tr.ranges]
    ratio = float(lens[-1] / lens[0]) if len(lens) >= 2 else float("nan")
    ok = len(lens) >= 2 and tr.shrinking and tr.approaching and ratio <= 0.1
    record(7, ok, f"{len(lens)} ranges, strictly shrinking={tr.shrinking}, "
                  f"approaching c={tr.approaching}, |V_last|/|V_first| = {ratio:.3g}")
    assert ok


def test_criterion_08_density(full_bundle):
    rows = full_bundle.density
    trend = all(
        b.ratio >= a.ratio - 2 * (a.stderr ** 2 + b.stderr ** 2) ** 0.5 for a, b in zip(rows, rows[1:])
    )
    samples_ok = all(r.samples == 10_000 for r in rows)
    final = rows[-1].ratio if rows else 0.0
    ok = bool(rows) and trend and samples_ok and final >= 0.95
    record(8, ok, f"{len(rows)} windows, non-decreasing within 2 SE={trend}, final ratio {final:.4f}")
    assert ok


def test_criterion_09_cor36(full_bundle):
    rows = [g.cor36 for g in full_bundle.geometry]
    qualifying = [r for r in rows if r.qualifies]
    finite = all(gmpy2.is_finite(r.A_sup) for r in rows)
    if qualifying:
        vals = [r.A_sup for r in qualifying]
        ratio = float(max(vals) / statistics.median(vals))
        ok = finite and ratio <= 10
        detail = f"{len(qualifying)} qualifying anchors, A_sup max/median = {ratio:.3g}"
    else:
        vals = [r.A_sup for r in rows]
        ratio = float(max(vals) / statistics.median(vals)) if vals else float("nan")
        ok = False
        detail = (f"no anchor has |V|/|U| <= 1 + rho, criterion not exercised "
                  f"(all {len(rows)} anchors: A_sup max/median = {ratio:.3g})")
    record(9, ok, detail)
    assert ok


def test_criterion_10_determinism(tmp_path):
    outs = []
    for workers in (1, 2):
        cfg = RunConfig(
            orbit_horizon=300, entry_horizon=200, niceness_horizon=300, max_time=60,
            min_width="1e-7", anchor_depth=16, base_depth=6, node_budget=4000,
            geometry_samples=10, wmp_samples=40, density_samples=300, density_horizon=200,
            workers=workers, output_dir=str(tmp_path / f"w{workers}"),
        )
        path = tmp_path / f"w{workers}.cfg"
        save(cfg, path)
        code = main(["run", str(path)])
        assert code in (0, 1)
        outs.append(tmp_path / f"w{workers}")
    names = sorted(p.name for p in outs[0].iterdir() if p.suffix in (".json", ".csv", ".svg"))
    same = [n for n in names if (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()]
    ok = len(names) >= 12 and same == names
    record(10, ok, f"{len(same)}/{len(names)} JSON/CSV/SVG files byte-identical for workers 1 vs 2")
    assert ok
