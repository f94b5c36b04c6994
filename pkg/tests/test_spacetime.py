import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorhom.factor import FactorSpec
from lorhom.sphere import NORTH, SOUTH, meridian
from lorhom.spacetime import (CAUSAL, LIGHTLIKE, NONCAUSAL, TIMELIKE, NoSlackError, SpacetimeCurve,
                              classify, deform_to_timelike, lift_curve, lift_meridian, stationary,
                              write_curve_csv)


@pytest.mark.parametrize("n", range(1, 9))
def test_base_lifts_are_lightlike(base, n):
    c = classify(lift_meridian(n, base))
    assert c.verdict == LIGHTLIKE
    assert c.max_abs_deviation <= 1e-6


def test_unit_lift_is_lightlike(unit):
    assert classify(lift_curve(meridian(phi=1.0), unit)).verdict == LIGHTLIKE


@pytest.mark.parametrize("variant", ["unit", "base"])
def test_stationary_curve_is_timelike(variant):
    c = classify(stationary(NORTH, FactorSpec(variant=variant)))
    assert c.verdict == TIMELIKE and c.worst_ratio == 0.0


def test_off_meridian_lift_is_not_causal(base):
    c = classify(lift_curve(meridian(phi=0.29), base))
    assert c.verdict == NONCAUSAL and c.slack < 0


@pytest.mark.parametrize("n", range(1, 7))
def test_modified_lifts_are_causal_with_slack(modified, params, n):
    c = classify(lift_meridian(n, modified))
    assert c.verdict == CAUSAL
    assert c.slack > c.slack_error
    # strictly faster time only where the dip sits, near the equator
    t = lift_meridian(n, modified).t
    mid = 0.5 * (t[:-1] + t[1:])
    fast = c.deviations < -c.errors
    assert np.all(np.abs(mid[fast] - math.pi / 2) <= params.eps[n - 1] / 2 + (t[1] - t[0]))


@pytest.mark.parametrize("n", range(1, 7))
def test_deformation_is_timelike_with_fixed_ends(modified, n):
    d = deform_to_timelike(lift_meridian(n, modified))
    assert classify(d).verdict == TIMELIKE
    assert d.tau[0] == 0.0 and d.tau[-1] == math.pi
    assert np.array_equal(d.space.points[0], NORTH) and np.array_equal(d.space.points[-1], SOUTH)
    assert np.all(np.diff(d.tau) > 0)


def test_no_slack_on_flat_meridian(base):
    with pytest.raises(NoSlackError):
        deform_to_timelike(lift_meridian(1, base))


def test_deform_rejects_non_causal(base):
    with pytest.raises(ValueError, match="not causal"):
        deform_to_timelike(lift_curve(meridian(phi=0.29), base))


@pytest.mark.parametrize("samples", [512, 1024, 4096])
def test_classification_is_refinement_invariant(modified, samples):
    assert classify(lift_meridian(2, modified, samples)).verdict == CAUSAL
    assert classify(lift_meridian(2, FactorSpec.base(), samples)).verdict == LIGHTLIKE


@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_speed_ratio_is_monotone_in_the_factor(c1, c2):
    lo, hi = sorted((c1, c2))
    curve = meridian(phi=0.7, samples=128)
    r_lo = classify(lift_curve(curve, FactorSpec.base().scaled(lo))).worst_ratio
    r_hi = classify(lift_curve(curve, FactorSpec.base().scaled(hi))).worst_ratio
    assert r_lo <= r_hi


@given(st.floats(0.3, 0.99))
def test_shrunken_round_metric_makes_lifts_timelike(c):
    assert classify(lift_curve(meridian(phi=0.2, samples=64), FactorSpec.unit().scaled(c))).verdict == TIMELIKE


def test_fixed_tolerance_band(base):
    c = classify(lift_curve(meridian(phi=0.135), base), tol=1e-12)
    assert c.verdict == LIGHTLIKE


def test_lead_steps_are_validated(base):
    space = meridian(n=1, samples=8)
    with pytest.raises(ValueError):
        SpacetimeCurve(space, base, np.zeros(3))
    with pytest.raises(ValueError):
        SpacetimeCurve(space, base, np.full(8, -1.0))


def test_lift_index_range(base):
    with pytest.raises(ValueError):
        lift_meridian(9, base)


def test_curve_csv(tmp_path, modified):
    path = tmp_path / "curve.csv"
    d = deform_to_timelike(lift_meridian(3, modified, samples=256))
    write_curve_csv(d, path)
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["t", "tau", "x", "y", "z", "speed_ratio", "speed_ratio_minus_1"]
    assert len(rows) == 257
    assert float(rows[-1]["tau"]) == math.pi
    assert all(float(r["speed_ratio_minus_1"]) < 0 for r in rows)
