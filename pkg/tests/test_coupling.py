import math

import numpy as np
import pytest

from cavchar import geometry as g
from cavchar.coupling import AtomicLine, g0_from_mode_volume, g0_max, strong_coupling
from cavchar.errors import DomainError
from cavchar.quantity import Quantity, Unit

RB = AtomicLine.rb87_d2()
LINE = AtomicLine(Quantity.of(3.0325e6, 0.0045e6, Unit.HZ), Quantity.of(780.245e-9, 0, Unit.M), "rb")
L0 = Quantity.of(151.686e-6, 2e-9, Unit.M)
R0 = Quantity.of(0.1007, 1e-4, Unit.M)


def m(v):
    return Quantity.of(v, 0.0, Unit.M)


def hz(v, s=0.0):
    return Quantity.of(v, s, Unit.HZ)


def test_rb87_line():
    assert RB.gamma_over_2pi.value == pytest.approx(3.0325e6)
    assert RB.gamma_over_2pi.sigma == pytest.approx(0.0045e6)


def test_paper_g0():
    q = g0_max(L0, R0, LINE)
    assert round(q.value / 1e6, 2) == 16.04
    assert q.sigma == pytest.approx(0.01e6, abs=0.01e6)


def test_length_scaling():
    a = g0_max(m(100e-6), m(0.1), LINE).value
    b = g0_max(m(400e-6), m(0.1), LINE).value
    assert b / a == pytest.approx(4 ** -0.75, rel=1e-12)


def test_mode_volume_oracle():
    w0 = g.waist(L0, R0, LINE.wavelength)
    vc = g.mode_volume(w0, L0)
    a = g0_max(L0, R0, LINE).value
    b = g0_from_mode_volume(vc, LINE).value
    assert abs(a - b) / b < 5e-3


def test_oracle_across_near_planar_cavities():
    rng = np.random.default_rng(2)
    for _ in range(200):
        R = rng.uniform(0.02, 1.0)
        # the closed form drops a (1 - L/2R)**(1/4) factor; keep L/R small
        L = R * rng.uniform(1e-4, 0.02)
        vc = g.mode_volume(g.waist(m(L), m(R), LINE.wavelength), m(L))
        a = g0_max(m(L), m(R), LINE).value
        assert a == pytest.approx(g0_from_mode_volume(vc, LINE).value, rel=5e-3)


def test_unstable():
    with pytest.raises(DomainError):
        g0_max(m(0.3), m(0.1), LINE)


def test_monotone_decreasing():
    rng = np.random.default_rng(4)
    for _ in range(200):
        R = rng.uniform(0.01, 1.0)
        L = R * rng.uniform(0.001, 1.5)
        base = g0_max(m(L), m(R), LINE).value
        assert g0_max(m(L * 1.01), m(R), LINE).value < base
        assert g0_max(m(L), m(R * 1.01), LINE).value < base


class TestStrongCoupling:
    def test_paper_margin(self):
        r = strong_coupling(hz(16.04e6), hz(18.55e6), LINE)
        assert r.margin == pytest.approx(4.57, abs=0.01)
        assert r.strong

    def test_boundary(self):
        line = AtomicLine(hz(1.0), m(780e-9))
        r = strong_coupling(hz(2.0), hz(4.0), line)
        assert r.margin == 1.0
        assert not r.strong

    def test_zero(self):
        with pytest.raises(DomainError):
            strong_coupling(hz(0.0), hz(18.55e6), LINE)

    def test_angular_units_audit(self):
        g0, k, y = 16.04e6, 18.55e6, 3.0325e6
        r = strong_coupling(hz(g0), hz(k), LINE)
        tp = 2 * math.pi
        assert r.margin == pytest.approx((tp * g0) ** 2 / (tp * k * tp * y), rel=1e-14)

    def test_paper_chain(self):
        g0 = g0_max(L0, R0, LINE)
        r = strong_coupling(g0, hz(37.1e6 / 2, 0.45e6), LINE)
        assert r.strong and r.margin > 1

    def test_to_dict(self):
        d = strong_coupling(hz(16.04e6), hz(18.55e6), LINE).to_dict()
        assert d["strong"] is True
        assert float(d["margin"]["value"]) == pytest.approx(4.57, abs=0.01)


def test_atomic_line_invalid():
    with pytest.raises(DomainError):
        AtomicLine(hz(0.0), m(780e-9))
