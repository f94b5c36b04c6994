import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorhom.factor import FactorSpec
from lorhom.sphere import meridian_azimuth, midpoint_azimuth
from lorhom.timelike import (TimelikeParamSet, build_modified_factor, cap_samples, choose_dips,
                             derive_excess, derive_params, excess_cover_holds, validate_midpoint_excess)

from oracles import MIDPOINT_EXCESS


def test_derived_parameters_are_valid(base, params):
    assert params.violations() == []
    assert params.max_index == 6
    assert all(v < 1 for v in params.nu)
    for name in ("mu", "delta", "nu", "eps"):
        v = getattr(params, name)
        assert all(b < a for a, b in zip(v, v[1:]))
    assert excess_cover_holds(params, base)


def test_first_excess_is_half_the_peak(base):
    mu, delta = derive_excess(base, 1)
    assert mu == pytest.approx(0.5 * MIDPOINT_EXCESS[0], rel=1e-12)
    assert 0 < delta <= (meridian_azimuth(1) - meridian_azimuth(2)) / 2


def test_cap_samples_stay_in_cap():
    th, ph = cap_samples(0.3, 0.01)
    d = np.arccos(np.clip(np.sin(th) * np.cos(ph - 0.3), -1, 1))
    assert np.max(d) == pytest.approx(0.01, rel=1e-9)


def test_no_excess_on_the_round_sphere(unit):
    with pytest.raises(ValueError, match="no excess"):
        derive_excess(unit, 1)


def test_dip_as_wide_as_the_meridian_is_rejected(params):
    eps = (meridian_azimuth(1),) + params.eps[1:]
    with pytest.raises(ValueError, match="invalid parameter set"):
        TimelikeParamSet(params.mu, params.delta, params.nu, eps)
    loose = TimelikeParamSet(params.mu, params.delta, params.nu, eps, enforce=False)
    assert any("meets" in v for v in loose.violations())


@given(st.floats(4.0, 1e6))
def test_deeper_dips_break_sufficiency(factor):
    p = derive_params(FactorSpec.base(), 3)
    nu = tuple(min(v * factor, 0.9) * (0.999 ** k) for k, v in enumerate(p.nu))
    bad = TimelikeParamSet(p.mu, p.delta, nu, p.eps, enforce=False).violations()
    assert any("too deep" in v for v in bad)


def test_parameter_lengths_checked(params):
    with pytest.raises(ValueError):
        TimelikeParamSet(params.mu, params.delta, params.nu[:-1], params.eps[:-1])


def test_round_trip(params):
    assert TimelikeParamSet.from_dict(params.to_dict()) == params


def test_choose_dips_is_deterministic(base):
    ex = [derive_excess(base, n) for n in range(1, 4)]
    assert choose_dips(ex) == choose_dips(ex)


def test_modified_factor_values(base, modified, params):
    for n in range(1, 7):
        q = meridian_azimuth(n)
        assert float(modified.excess_angles(math.pi / 2, q)) == pytest.approx(-params.nu[n - 1], rel=1e-12)
    for n in range(1, 6):
        p = midpoint_azimuth(n)
        assert float(modified.excess_angles(math.pi / 2, p)) == float(base.excess_angles(math.pi / 2, p))


@given(st.floats(0.0, 0.95), st.floats(-math.pi, math.pi))
def test_modified_caps_are_round(th, ph):
    spec = build_modified_factor(FactorSpec.base(), derive_params(FactorSpec.base(), 6))
    assert float(spec.excess_angles(th, ph)) == 0.0
    assert float(spec.excess_angles(math.pi - th, ph)) == 0.0


def test_modified_needs_a_base_factor(unit, params):
    with pytest.raises(ValueError):
        build_modified_factor(unit, params)


def test_too_many_dips(base):
    with pytest.raises(ValueError):
        derive_params(base, 9)


def test_midpoint_excess_validated(modified, params):
    rep = validate_midpoint_excess(modified, params, [1, 2, 3, 4], levels=(6, 7))
    assert rep.validated and not rep.flags
    assert [e.index for e in rep.entries] == [1, 2, 3, 4]
    for e in rep.entries:
        assert e.excess > e.error and e.excess > 0


def test_midpoint_excess_flags_bad_parameters(params):
    nu = tuple(v * 100 for v in params.nu)
    stress = TimelikeParamSet(params.mu, params.delta, nu, params.eps, enforce=False)
    rep = validate_midpoint_excess(FactorSpec.base(), stress, [1, 2], levels=(5, 6))
    assert not rep.validated and rep.flags
