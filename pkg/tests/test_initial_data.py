"""Initial-profile catalog tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repde.initial_data import (
    Algebraic,
    Custom,
    DoublyExponential,
    Exponential,
    SeparableMarker,
    check_integrability,
    normalize_unit_mass,
    parse_family,
    sample,
    tail_mass,
)
from repde.radial_core import RadialField, build_grid, integrate


def test_sample_pointwise_values():
    g = build_grid(1, 2.0, 16)
    f = sample(Algebraic(c0=1.0, gamma=4.0), g)
    assert f.values[0] == pytest.approx(1.0)
    r1 = np.argmin(np.abs(g.radii - 1.0))
    assert f.values[r1] == pytest.approx(2.0**-4)
    fe = sample(Exponential(c0=2.0, alpha=0.5, beta=1.0), g)
    assert fe.values[-1] == pytest.approx(2.0 * np.exp(-1.0), rel=1e-12)


def test_doubly_exponential_underflows_to_zero_cleanly():
    g = build_grid(1, 50.0, 200)
    f = sample(DoublyExponential(c0=1.0, alpha=0.5, beta=2.0), g)
    assert np.all(np.isfinite(f.values))
    assert f.values[-1] == 0.0
    assert f.values[0] == pytest.approx(np.exp(-0.5))


@given(
    gamma=st.floats(min_value=1.2, max_value=9.0),
    alpha=st.floats(min_value=0.1, max_value=2.0),
    beta=st.floats(min_value=0.5, max_value=3.0),
)
@settings(max_examples=40, deadline=None)
def test_profiles_positive_and_nonincreasing(gamma, alpha, beta):
    g = build_grid(1, 10.0, 128)
    for family in (
        Algebraic(1.0, gamma),
        Exponential(1.0, alpha, beta),
        DoublyExponential(1.0, alpha, beta),
    ):
        vals = sample(family, g).values
        assert np.all(vals >= 0)
        assert vals[0] > 0
        assert np.all(np.diff(vals) <= 1e-300 + 1e-12 * vals[:-1])


def test_normalize_unit_mass():
    g = build_grid(1, 1.0, 64)
    f = RadialField(g, np.full(g.node_count, 1.0))  # mass 2
    normalized, scale = normalize_unit_mass(f)
    assert scale == pytest.approx(0.5)
    assert integrate(normalized) == pytest.approx(1.0, abs=1e-12)
    again, scale2 = normalize_unit_mass(normalized)
    assert scale2 == pytest.approx(1.0, abs=1e-12)


def test_normalize_scale_against_closed_form_mass():
    # 2 int_0^100 (1+r)^-4 dr = (2/3)(1 - 101^-3) = 0.66666601960656805
    g = build_grid(1, 100.0, 4000)
    f = sample(Algebraic(1.0, 4.0), g)
    _, scale = normalize_unit_mass(f)
    assert 1.0 / scale == pytest.approx(0.66666601960656805, rel=1e-3)
    # and the discretization error shrinks at second order
    g_fine = build_grid(1, 100.0, 16000)
    mass_fine = integrate(sample(Algebraic(1.0, 4.0), g_fine))
    err = abs(1.0 / scale - 0.66666601960656805)
    err_fine = abs(mass_fine - 0.66666601960656805)
    assert err / err_fine > 10.0  # ~16 for second order


def test_normalize_rejects_nonpositive_mass():
    g = build_grid(1, 1.0, 16)
    with pytest.raises(ValueError):
        normalize_unit_mass(RadialField(g, np.zeros(g.node_count)))


def test_check_integrability():
    assert check_integrability(Algebraic(1.0, 4.0), 1, 0.5) is True
    assert check_integrability(Algebraic(1.0, 1.5), 1, 0.5) is False
    assert check_integrability(Exponential(1.0, 1.0, 1.0), 3, 0.1) is True
    assert check_integrability(DoublyExponential(1.0, 1.0, 1.0), 2, 0.9) is True
    with pytest.raises(ValueError):
        check_integrability(Algebraic(1.0, 4.0), 1, 1.5)


def test_tail_mass_algebraic_closed_form():
    fam = Algebraic(1.0, 4.0)
    # 2 int_R^inf (1+r)^-4 = (2/3)(1+R)^-3
    assert tail_mass(fam, 1, 9.0) == pytest.approx((2.0 / 3.0) * 10.0**-3, rel=1e-12)
    # numeric path agrees on another dimension
    got = tail_mass(fam, 3, 50.0)
    assert got > 0
    fam_exp = Exponential(1.0, 1.0, 1.0)
    assert tail_mass(fam_exp, 1, 20.0) == pytest.approx(
        2.0 * np.exp(-20.0) * 1.0, rel=1e-6
    )


def test_parameter_validation():
    with pytest.raises(ValueError):
        Algebraic(c0=-1.0, gamma=4.0)
    with pytest.raises(ValueError):
        Exponential(c0=1.0, alpha=0.0, beta=1.0)


def test_parse_family_strings():
    fam = parse_family("algebraic:c0=1,gamma=4")
    assert fam == Algebraic(1.0, 4.0)
    fam = parse_family("exponential:c0=2,alpha=0.5,beta=1")
    assert fam == Exponential(2.0, 0.5, 1.0)
    fam = parse_family("doubly_exponential:alpha=1,beta=2")
    assert fam == DoublyExponential(1.0, 1.0, 2.0)
    fam = parse_family("separable:delta=2")
    assert fam == SeparableMarker(delta=2.0)
    with pytest.raises(ValueError):
        parse_family("algebraic:c0=1")  # missing gamma
    with pytest.raises(ValueError):
        parse_family("parabolic:c0=1")
    with pytest.raises(ValueError):
        parse_family("algebraic:c0")


def test_custom_profile_passthrough():
    g = build_grid(1, 1.0, 16)
    fam = Custom(lambda r: 1.0 / (1.0 + r), label="inverse")
    vals = sample(fam, g).values
    assert vals[0] == 1.0
    assert vals[-1] == pytest.approx(0.5)
    assert check_integrability(fam, 1, 0.5) is True
