"""Acceptance gate: one test per criterion, summarised as PASS/FAIL lines.

Run with ``pytest tests/test_acceptance.py -s`` to also see the measured
numbers printed by each criterion.
"""
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from lorhom import cli
from lorhom.factor import validate_factor
from lorhom.geodesics import conjugate_point, cut_point
from lorhom.homotopy import (OBSTRUCTED, attempt_causal_homotopy, limit_curve_check, meridian_homotopy,
                             obstruction_margin, perturb_homotopy, topological_homotopy,
                             verify_causal_homotopy)
from lorhom.lengths import excess_over, length
from lorhom.config import load_scenario
from lorhom.level_degree import connected_level_component, level_curve_rows
from lorhom.sphere import NORTH, SOUTH, SphereCurve, from_angles, meridian, meridian_azimuth
from lorhom.spacetime import (CAUSAL, LIGHTLIKE, TIMELIKE, SpacetimeCurve, classify, deform_to_timelike,
                              lift_meridian)
from lorhom.timelike import build_modified_factor, choose_dips, derive_excess, excess_cover_holds, validate_midpoint_excess

from test_level_degree import closed_form_grid, random_pinned_grid

ROOT = Path(__file__).resolve().parents[1]
PAIRS = [(i, j) for i in range(1, 5) for j in range(i + 1, 5)]


def show(*parts):
    print("   ", *parts)


@pytest.fixture(scope="module")
def certificates(base):
    return {pair: obstruction_margin(base, *pair, levels=(6, 7)) for pair in PAIRS}


def test_criterion_1_factor_validation(base, unit):
    start = time.perf_counter()
    rep = validate_factor(base, 2048, 4096, 1e-9)
    elapsed = time.perf_counter() - start
    failed_unit = [c.name for c in validate_factor(unit, 2048, 4096, 1e-9).conditions if not c.passed]
    show(f"base passed={rep.passed} in {elapsed:.1f}s, unit fails {failed_unit}")
    assert rep.passed
    assert failed_unit == ["c2"]
    assert elapsed < 30


def test_criterion_2_lightlike_lifts(base):
    for n in range(1, 9):
        c = classify(lift_meridian(n, base, samples=2048))
        assert c.verdict == LIGHTLIKE
        assert np.max(np.abs(c.ratios - 1)) <= 1e-6


def test_criterion_3_length_squeeze(base, unit):
    assert abs(length(unit, meridian(phi=0.0)) - math.pi) <= 1e-10
    for n in range(1, 9):
        assert abs(length(base, meridian(n=n)) - math.pi) <= 1e-9
    flats = [1 / (n * math.pi) for n in range(1, 400)]
    arcs = [(meridian_azimuth(n + 1), meridian_azimuth(n)) for n in range(1, 8)]
    rng = np.random.default_rng(2024)
    arcs += [(a, a + w) for a, w in zip(rng.uniform(0.035, 1.5, 60), rng.uniform(1e-3, 0.05, 60))]
    checked = 0
    for a, b in arcs:
        # strictly inside (0, pi/2), open ends kept off the flat meridians
        a, b = a + 1e-3 * (b - a), b - 1e-3 * (b - a)
        if any(a <= v <= b for v in flats):
            continue
        t = np.linspace(a, b, 1025)
        curve = SphereCurve(t, from_angles(np.full_like(t, math.pi / 2), t), unit_speed=True)
        ex, err = excess_over(base, curve, target=b - a)
        assert ex > err, (a, b, ex, err)
        checked += 1
    show(f"{checked} equator arcs strictly longer than their g0-length")
    assert checked >= 30


def test_criterion_4_level_sets():
    spans = sum(connected_level_component(random_pinned_grid(seed, n=256), math.pi / 2).spans
                for seed in range(100))
    assert spans == 100
    grid = closed_form_grid(256)
    comp = connected_level_component(grid, math.pi / 2)
    cell = grid.t[1] - grid.t[0]
    for i, (lo, hi) in level_curve_rows(comp, grid).items():
        for s in (grid.s[i], grid.s[i + 1]):
            exact = math.pi * 2.0 ** (-1.0 / (1.0 + s))
            assert lo - cell <= exact <= hi + cell


def test_criterion_5_certificates(base):
    for pair in PAIRS:
        start = time.perf_counter()
        c = obstruction_margin(base, *pair, levels=(6, 7))
        elapsed = time.perf_counter() - start
        coarse = min(a.coarse_excess for a in c.arcs)
        show(f"pair {pair}: margin {c.margin:.6g} error {c.error:.3g} "
             f"level6 {coarse:.6g} ({elapsed:.1f}s)")
        assert c.verdict == OBSTRUCTED and c.margin > c.error
        assert abs(c.margin - coarse) <= 1e-3 * c.margin
        assert elapsed < 300


def test_criterion_6_discrete_sweep(base, certificates):
    for k in range(20):
        pair = PAIRS[k % len(PAIRS)]
        long_way = k >= 10
        H = meridian_homotopy(*pair, n_s=64, n_t=256, long_way=long_way)
        if k % 2:
            H = perturb_homotopy(H, np.random.default_rng(k), amplitude=0.02)
        v = verify_causal_homotopy(base, H)
        cert = certificates[pair]
        assert v.coverage.arc == ("outer" if long_way else "inner"), (k, pair)
        assert v.max_excess >= cert.margin - 2 * cert.error, (k, pair)


def test_criterion_7_adversarial_search(base, unit, certificates):
    margin = certificates[(1, 2)].margin
    r = attempt_causal_homotopy(base, 1, 2, iterations=5000, seed=0)
    show(f"base residual {r.residual:.6g} (margin {margin:.6g}), accepted {r.accepted}/{r.iterations}")
    assert min(r.history) >= margin / 2 and r.residual >= margin / 2
    ru = attempt_causal_homotopy(unit, 1, 2, iterations=5000, seed=0)
    show(f"unit residual {ru.residual:.3g}")
    assert ru.residual < 1e-6


def test_criterion_8_modified_pipeline(base):
    params = choose_dips([derive_excess(base, n) for n in range(1, 6)])
    assert params.max_index == 6 and params.violations() == [] and excess_cover_holds(params, base)
    modified = build_modified_factor(base, params)
    rep = validate_midpoint_excess(modified, params, [1, 2, 3, 4], levels=(6, 7))
    for e in rep.entries:
        show(f"p_{e.index}: excess {e.excess:.4g} error {e.error:.3g} {e.verdict}")
        assert e.excess > e.error
    assert rep.validated
    for n in range(1, 7):
        lift = lift_meridian(n, modified)
        assert classify(lift).verdict == CAUSAL
        d = deform_to_timelike(lift)
        assert classify(d).verdict == TIMELIKE
        assert d.tau[0] == 0.0 and d.tau[-1] == math.pi
        assert np.array_equal(d.space.points[0], NORTH) and np.array_equal(d.space.points[-1], SOUTH)
    for pair in PAIRS:
        c = obstruction_margin(modified, *pair, levels=(6, 7))
        assert c.verdict == OBSTRUCTED, pair


def test_criterion_9_conjugate_and_cut(base, unit, modified):
    for spec in (unit, base, modified):
        conj = conjugate_point(spec, NORTH, [1.0, 0.0, 0.0])
        show(f"{spec.variant}: conjugate point at {conj!r}")
        assert conj is not None and abs(conj - math.pi) <= 1e-3
    cb = cut_point(base, 0.0, levels=(6, 7))
    tol = max(cb.error, 8 * np.finfo(float).eps)
    assert abs(cb.distance - math.pi) <= tol and cb.deficit <= tol
    cm = cut_point(modified, 0.0, levels=(6, 7))
    show(f"modified cut deficit {cm.deficit:.4g} error {cm.error:.3g}")
    assert cm.deficit > cm.error


def test_criterion_10_topological_contrast(base):
    H = topological_homotopy(1, 3)
    assert np.allclose(H.boundary_azimuths(), (meridian_azimuth(1), meridian_azimuth(3)), rtol=1e-14)
    assert np.all(H.points[:, 0] == NORTH) and np.all(H.points[:, -1] == SOUTH)
    v = verify_causal_homotopy(base, H)
    assert v.violations
    seq = [lift_meridian(n, base) for n in range(1, 9)]
    rep = limit_curve_check(seq, SpacetimeCurve(meridian(phi=0.0), base))
    assert rep.decreasing and rep.limit_verdict == LIGHTLIKE
    for n, d in enumerate(rep.distances, start=1):
        assert abs(d - 1 / (n * math.pi)) <= 1e-9
    assert rep.distances[-1] < rep.distances[0] / 7


def _scenario_configs():
    return sorted(p for p in (ROOT / "configs").glob("*.toml") if p.stem != "malformed")


def test_criterion_11_determinism(tmp_path):
    outputs = {}
    for run in ("a", "b"):
        for cfg in _scenario_configs():
            task = load_scenario(cfg).task
            code = cli.main([task, "--config", str(cfg), "--out", str(tmp_path / run)])
            outputs.setdefault(cfg.stem, []).append(code)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    # a fresh interpreter with another hash seed writes the same bytes
    env = dict(os.environ, PYTHONHASHSEED="12345")
    for stem in ("lengths-base", "topological-13", "limit-curves", "certify-base-12"):
        cfg = ROOT / "configs" / f"{stem}.toml"
        task = load_scenario(cfg).task
        subprocess.run([sys.executable, "-m", "lorhom.cli", task, "--config", str(cfg),
                        "--out", str(tmp_path / "c")], env=env, check=False, capture_output=True)
        report = f"{load_scenario(cfg).name}.json"
        assert (tmp_path / "c" / report).read_bytes() == (tmp_path / "a" / report).read_bytes(), stem
    assert all(a == b for a, b in outputs.values())
    show("exit codes", json.dumps({k: v[0] for k, v in sorted(outputs.items())}))
