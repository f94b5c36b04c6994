import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorhom.factor import Dip, FactorSpec, smooth_step, validate_factor
from lorhom.sphere import (NORTH, SOUTH, SphereCurve, SpherePoint, equator_point, from_angles,
                           meridian, meridian_azimuth, midpoint_azimuth, tag_reciprocal)

from oracles import EXCESS_AT_TWO_OVER_PI, MIDPOINT_AZIMUTH, MIDPOINT_EXCESS

angles = st.tuples(st.floats(0.0, math.pi), st.floats(-math.pi, math.pi))


def test_meridian_and_midpoint_azimuths():
    for n in range(1, 6):
        assert meridian_azimuth(n) == pytest.approx(1 / (n * math.pi), rel=1e-15)
        assert midpoint_azimuth(n) == pytest.approx(MIDPOINT_AZIMUTH[n - 1], rel=1e-14)
        assert meridian_azimuth(n + 1) < midpoint_azimuth(n) < meridian_azimuth(n)


def test_sphere_point_normalises_and_rejects_zero():
    assert np.linalg.norm(SpherePoint(np.array([1.0, 1.0, 0.0])).position) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        SpherePoint(np.zeros(3))


def test_curve_rejects_antipodal_step():
    with pytest.raises(ValueError, match="antipodal"):
        SphereCurve(np.array([0.0, 1.0]), np.stack([NORTH, SOUTH]))


def test_tagged_meridian_has_exact_zero_sine():
    for n in range(1, 9):
        phi, s, c = tag_reciprocal(("index", n))
        assert s == 0.0 and c == (-1) ** n and phi == meridian_azimuth(n)


def test_smooth_step_limits_and_symmetry():
    x = np.linspace(-0.5, 1.5, 201)
    s, _, _ = smooth_step(x)
    assert np.all(s[x <= 0] == 0) and np.all(s[x >= 1] == 1)
    inner = (x > 0) & (x < 1)
    s2, _, _ = smooth_step(1 - x[inner])
    np.testing.assert_allclose(s[inner] + s2, 1.0, atol=1e-15)


@given(st.floats(0.01, 0.99))
def test_smooth_step_derivative_matches_difference(x):
    h = 1e-6
    _, d1, _ = smooth_step(np.array([x]))
    sp, _, _ = smooth_step(np.array([x + h]))
    sm, _, _ = smooth_step(np.array([x - h]))
    assert d1[0] == pytest.approx((sp[0] - sm[0]) / (2 * h), rel=1e-5, abs=1e-9)


def test_closed_form_oracle(base):
    assert float(base.excess_angles(math.pi / 2, 2 / math.pi)) == pytest.approx(EXCESS_AT_TWO_OVER_PI, rel=1e-13)
    for n in range(1, 6):
        got = float(base.excess_angles(math.pi / 2, midpoint_azimuth(n)))
        assert got == pytest.approx(MIDPOINT_EXCESS[n - 1], rel=1e-12)


@given(angles)
def test_base_excess_nonnegative(p):
    th, ph = p
    spec = FactorSpec.base()
    assert float(spec.excess_angles(th, ph)) >= 0.0


@given(st.floats(0.0, math.pi))
def test_tagged_meridians_are_flat(th):
    spec = FactorSpec.base()
    for n in range(1, 9):
        x = from_angles(np.array([th]), np.array([meridian_azimuth(n)]))
        assert float(spec.excess(x, tag=("index", n))[0]) == 0.0


@given(st.floats(0.0, 1.0), st.floats(-math.pi, math.pi))
def test_caps_are_round(frac, ph):
    spec = FactorSpec.base()
    th = frac * (math.pi / 2 - 0.6)
    assert float(spec.excess_angles(th, ph)) == 0.0
    assert float(spec.excess_angles(math.pi - th, ph)) == 0.0


@given(st.floats(0.02, 1.5))
def test_unit_is_flat_everywhere(ph):
    assert float(FactorSpec.unit().excess_angles(1.0, ph)) == 0.0


def test_dip_depth_at_center(base):
    spec = base.with_dips([Dip(2, 0.01, 0.25)])
    q = meridian_azimuth(2)
    assert float(spec.excess_angles(math.pi / 2, q)) == pytest.approx(-0.25, rel=1e-14)
    # outside the dip nothing changes
    far = midpoint_azimuth(1)
    assert float(spec.excess_angles(math.pi / 2, far)) == float(base.excess_angles(math.pi / 2, far))


@pytest.mark.parametrize("kw", [dict(plateau=0.7, support=0.6), dict(variant="round"),
                                dict(scale=0.0), dict(max_index=0)])
def test_invalid_specs_rejected(kw):
    with pytest.raises(ValueError):
        FactorSpec(**kw)


def test_dips_only_on_modified():
    with pytest.raises(ValueError):
        FactorSpec(variant="base", dips=(Dip(1, 0.01, 0.1),))


def test_round_trip_dict(modified):
    assert FactorSpec.from_dict(modified.to_dict()) == modified


def test_validation_small_grid(base, unit):
    rep = validate_factor(base, 256, 512)
    assert rep.passed
    names = [c.name for c in validate_factor(unit, 256, 512).conditions if not c.passed]
    assert names == ["c2"]


def test_validation_detects_dips(base):
    rep = validate_factor(base.with_dips([Dip(1, 0.02, 0.3)]), 256, 512)
    failed = {c.name for c in rep.conditions if not c.passed}
    assert {"a", "b"} <= failed
    assert -0.3 <= rep["a"].worst_value < 0


def test_validation_rejects_tiny_grid(base):
    with pytest.raises(ValueError):
        validate_factor(base, 16, 16)


def test_equator_point_and_meridian_endpoints():
    c = meridian(n=3, samples=64)
    assert np.array_equal(c.points[0], NORTH) and np.array_equal(c.points[-1], SOUTH)
    assert c.azimuth_tag == ("index", 3) and c.unit_speed
    assert equator_point(0.3).polar == pytest.approx(math.pi / 2)
