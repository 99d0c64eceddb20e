import math

import pytest
from hypothesis import given, strategies as st

from cavchar.errors import AsymmetricError, DomainError, UnitMismatchError
from cavchar.quantity import C_LIGHT, Quantity, Unit, propagate, q_add, q_sub

THz = 1e12


def hz(v, s=10e6):
    return Quantity.of(v, s, Unit.HZ)


def test_fsr_difference_quadrature():
    fsr = q_sub(hz(384.22777 * THz), hz(383.23957 * THz))
    assert fsr.value == pytest.approx(0.98820 * THz, abs=1.0)
    assert fsr.sigma == pytest.approx(10e6 * math.sqrt(2), rel=1e-12)


def test_fsr_difference_resolution_mode():
    fsr = q_sub(hz(384.22777 * THz), hz(383.23957 * THz), mode="resolution")
    assert fsr.sigma == 10e6
    assert q_sub(hz(2.0), hz(1.0), mode="resolution", resolution=3.0).sigma == 3.0


def test_self_difference():
    x = hz(5e9, 7.0)
    d = q_sub(x, x)
    assert d.value == 0.0
    assert d.sigma == pytest.approx(7.0 * math.sqrt(2))


def test_transverse_separation_value():
    trans = q_sub(hz(1.00547 * THz), hz(0.98820 * THz))
    assert trans.value == pytest.approx(17.270e9, abs=1.0)


def test_unit_mismatch_is_error():
    with pytest.raises(UnitMismatchError):
        q_sub(hz(1.0), Quantity.of(1.0, 0.0, Unit.M))
    with pytest.raises(UnitMismatchError):
        q_add(hz(1.0), Quantity.of(1.0, 0.0, Unit.M))


def test_asymmetric_arithmetic_rejected():
    a = Quantity(0.99, 0.03, 0.01, Unit.ONE)
    with pytest.raises(AsymmetricError):
        q_sub(a, Quantity.of(0.1))
    with pytest.raises(AsymmetricError):
        propagate(lambda x: x, [a])
    with pytest.raises(AsymmetricError):
        a.sigma


def test_negative_sigma_rejected():
    with pytest.raises(DomainError):
        Quantity(1.0, -1.0, 0.0)


def test_propagate_identity():
    q = propagate(lambda x: x, [Quantity.of(5.0, 1.0)])
    assert q.value == 5.0
    assert q.sigma == pytest.approx(1.0, rel=1e-9)


def test_propagate_length_from_fsr_matches_analytic_partial():
    nu = Quantity.of(0.98820 * THz, 1.414e7, Unit.HZ)
    q = propagate(lambda v: C_LIGHT / (2 * v), [nu], Unit.M)
    analytic = C_LIGHT / (2 * nu.value**2) * nu.sigma
    assert q.value == pytest.approx(151.686e-6, abs=1e-9)
    assert q.sigma == pytest.approx(analytic, rel=1e-8)
    assert q.sigma == pytest.approx(2.2e-9, abs=0.05e-9)


def test_propagate_product_rule():
    q = propagate(lambda a, b: a * b, [Quantity.of(2.0, 0.1), Quantity.of(3.0, 0.1)])
    assert q.value == 6.0
    assert q.sigma == pytest.approx(math.sqrt(0.09 + 0.04), rel=1e-9)


def test_propagate_non_finite_is_error():
    with pytest.raises(DomainError):
        propagate(lambda x: math.inf, [Quantity.of(1.0, 0.1)])
    with pytest.raises(DomainError):
        propagate(lambda x: math.sqrt(x), [Quantity.of(-1.0, 0.1)])


def test_zero_sigma_inputs_give_zero_sigma():
    q = propagate(lambda a, b: a / b, [Quantity.of(2.0), Quantity.of(3.0)])
    assert q.sigma == 0.0


def test_dict_round_trip():
    for q in (Quantity.of(1.5e-7, 2e-12, Unit.M), Quantity(0.995, 0.03, 0.005, Unit.ONE)):
        assert Quantity.from_dict(q.to_dict()) == q


finite = st.floats(-1e6, 1e6, allow_nan=False)
sig = st.floats(0.0, 1e3, allow_nan=False)


@given(finite, finite, sig, sig)
def test_subtraction_antisymmetric(a, b, sa, sb):
    x, y = Quantity.of(a, sa), Quantity.of(b, sb)
    assert q_sub(x, y).value == -q_sub(y, x).value
    assert q_sub(x, y).sigma == q_sub(y, x).sigma


@given(
    st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    st.lists(st.floats(1.0, 1e3), min_size=3, max_size=3),
    st.lists(st.floats(1e-3, 10.0), min_size=3, max_size=3),
)
def test_linear_propagation_exact(coef, xs, ss):
    f = lambda a, b, c: coef[0] * a + coef[1] * b + coef[2] * c
    q = propagate(f, [Quantity.of(x, s) for x, s in zip(xs, ss)])
    exact = math.sqrt(sum((k * s) ** 2 for k, s in zip(coef, ss)))
    assert q.sigma == pytest.approx(exact, rel=1e-6, abs=1e-12)
