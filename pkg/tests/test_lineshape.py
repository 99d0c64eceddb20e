import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavchar.errors import DegenerateDataError, DomainError
from cavchar.lineshape import (
    AxisKind,
    LorentzianParams,
    TransmissionTrace,
    average_fwhm,
    compare_polarizations,
    finesse_from_fwhm,
    fit_lorentzian,
    initial_guess,
    lorentzian_eval,
    read_trace_csv,
    synth_trace,
    write_trace_csv,
)
from cavchar.quantity import Quantity, Unit

P0 = LorentzianParams(1.0, 0.0, 37.1e6, 0.0)
GRID = (-150e6, 150e6, 1001)
FSR = Quantity.of(0.98820e12, 0.0, Unit.HZ)


def hz(v, s=0.0):
    return Quantity.of(v, s, Unit.HZ)


class TestEval:
    def test_peak(self):
        p = LorentzianParams(2.0, 5.0, 3.0, 0.5)
        assert lorentzian_eval(p, 5.0) == 2.5

    def test_half_max(self):
        p = LorentzianParams(2.0, 5.0, 3.0, 0.5)
        assert lorentzian_eval(p, [3.5, 6.5]) == pytest.approx([1.5, 1.5], rel=1e-15)

    def test_baseline(self):
        p = LorentzianParams(2.0, 5.0, 3.0, 0.5)
        assert lorentzian_eval(p, 1e12) == pytest.approx(0.5, abs=1e-20 + 1e-10)

    @given(st.floats(0.1, 10), st.floats(-1e3, 1e3), st.floats(0.1, 100), st.floats(-5, 5), st.floats(-1e4, 1e4))
    def test_bounds(self, a, c, w, o, x):
        y = lorentzian_eval(LorentzianParams(a, c, w, o), x)
        assert o <= y <= o + a

    def test_invalid_params(self):
        with pytest.raises(DomainError):
            LorentzianParams(1.0, 0.0, 0.0)
        with pytest.raises(DomainError):
            LorentzianParams(-1.0, 0.0, 1.0)


class TestSynth:
    def test_noiseless_exact(self):
        tr = synth_trace(P0, GRID, 0.0)
        assert np.array_equal(tr.values, lorentzian_eval(P0, tr.abscissa))

    def test_determinism(self):
        a = synth_trace(P0, GRID, 0.02, seed=9)
        b = synth_trace(P0, GRID, 0.02, seed=9)
        assert np.array_equal(a.values, b.values)
        c = synth_trace(P0, GRID, 0.02, seed=10)
        assert not np.array_equal(a.values, c.values)

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            synth_trace(P0, np.array([]))

    def test_negative_noise(self):
        with pytest.raises(DomainError):
            synth_trace(P0, GRID, -1.0)


class TestTrace:
    def test_not_increasing(self):
        with pytest.raises(DomainError):
            TransmissionTrace([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])

    def test_nonfinite(self):
        with pytest.raises(DomainError):
            TransmissionTrace([0.0, 1.0], [1.0, math.nan])

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            TransmissionTrace([0.0, 1.0], [1.0])


class TestFit:
    def test_noiseless(self):
        fit = fit_lorentzian(synth_trace(P0, GRID))
        assert fit.params.fwhm == pytest.approx(37.1e6, rel=1e-8)
        assert fit.params.amplitude == pytest.approx(1.0, rel=1e-8)
        assert abs(fit.params.center) < 1e-8 * 37.1e6
        assert abs(fit.params.offset) < 1e-8

    def test_seed_42_regression(self):
        fit = fit_lorentzian(synth_trace(P0, GRID, 0.02, seed=42))
        assert abs(fit.params.fwhm - 37.1e6) <= 1e6
        # frozen after first run
        assert fit.params.fwhm == pytest.approx(36.98e6, abs=0.01e6)

    def test_flat_trace(self):
        tr = TransmissionTrace(np.linspace(-1, 1, 50), np.full(50, 0.3))
        with pytest.raises(DegenerateDataError):
            fit_lorentzian(tr)

    def test_too_few_samples(self):
        tr = TransmissionTrace(np.arange(5.0), np.array([0, 1, 2, 1, 0.0]))
        with pytest.raises(DegenerateDataError):
            fit_lorentzian(tr)

    def test_wrong_axis(self):
        tr = synth_trace(P0, GRID)
        tr = TransmissionTrace(tr.abscissa, tr.values, AxisKind.TIME)
        with pytest.raises(DomainError):
            fit_lorentzian(tr)

    def test_initial_guess(self):
        tr = synth_trace(P0, GRID)
        g = initial_guess(tr.abscissa, tr.values)
        # offset = min sits above the true baseline, which narrows the guess
        assert g.fwhm == pytest.approx(37.1e6, rel=0.03)
        assert g.amplitude == pytest.approx(1.0, rel=0.02)

    def test_within_three_sigma(self):
        hits = 0
        for seed in range(100):
            fit = fit_lorentzian(synth_trace(P0, GRID, 0.01, seed=seed))
            hits += abs(fit.params.fwhm - 37.1e6) <= 3 * fit.sigmas["fwhm"]
        assert hits >= 99

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, 10), st.floats(-0.2, 0.2), st.floats(0.05, 0.3), st.floats(-1, 1))
    def test_noiseless_identity(self, a, c_frac, w_frac, o):
        span = 300e6
        p = LorentzianParams(a, c_frac * span, w_frac * span, o)
        fit = fit_lorentzian(synth_trace(p, (-span / 2, span / 2, 801)))
        assert fit.params.fwhm == pytest.approx(p.fwhm, rel=1e-8)
        assert fit.params.amplitude == pytest.approx(a, rel=1e-8)
        assert fit.params.center == pytest.approx(p.center, abs=1e-8 * span)
        assert fit.params.offset == pytest.approx(o, abs=1e-8 * max(1.0, a))

    def test_translation_invariance(self):
        tr = synth_trace(P0, GRID, 0.02, seed=3)
        shift = 12.5e6
        moved = TransmissionTrace(tr.abscissa + shift, tr.values)
        a, b = fit_lorentzian(tr), fit_lorentzian(moved)
        assert b.params.center - a.params.center == pytest.approx(shift, rel=1e-6)
        assert b.params.fwhm == pytest.approx(a.params.fwhm, rel=1e-8)

    def test_scale_invariance(self):
        tr = synth_trace(P0, GRID, 0.02, seed=4)
        k = 7.3
        scaled = TransmissionTrace(tr.abscissa, tr.values * k)
        a, b = fit_lorentzian(tr), fit_lorentzian(scaled)
        assert b.params.fwhm == pytest.approx(a.params.fwhm, rel=1e-8)
        assert b.params.amplitude == pytest.approx(k * a.params.amplitude, rel=1e-8)

    def test_to_dict(self):
        d = fit_lorentzian(synth_trace(P0, GRID)).to_dict()
        assert set(d["params"]) == {"amplitude", "center", "fwhm", "offset"}
        assert float(d["params"]["fwhm"]) == pytest.approx(37.1e6)


def test_average_fwhm():
    q = average_fwhm([36e6, 37e6, 38e6])
    assert q.value == 37e6
    assert q.sigma == pytest.approx(1e6 / math.sqrt(3))
    with pytest.raises(DegenerateDataError):
        average_fwhm([])


def test_average_of_76_shots():
    widths = [fit_lorentzian(synth_trace(P0, GRID, 0.02, seed=s)).params.fwhm for s in range(76)]
    assert abs(average_fwhm(widths).value - 37.1e6) < 1e6


class TestFinesse:
    def test_paper_780(self):
        r = finesse_from_fwhm(hz(37.1e6, 0.9e6), FSR)
        assert r.finesse.value == pytest.approx(2.66e4, abs=0.005e4)
        assert r.finesse.sigma == pytest.approx(0.06e4, abs=0.01e4)
        assert r.total_loss_ppm.value == pytest.approx(236, abs=0.5)
        assert r.total_loss_ppm.sigma == pytest.approx(6, abs=0.5)
        assert r.kappa_over_2pi.value == 18.55e6

    def test_paper_795(self):
        r = finesse_from_fwhm(hz(34.8e6, 0.9e6), FSR)
        assert r.finesse.value == pytest.approx(2.84e4, abs=0.005e4)
        assert r.total_loss_ppm.value == pytest.approx(221, abs=0.5)

    def test_half_fsr(self):
        assert finesse_from_fwhm(hz(0.5e12), hz(1e12)).finesse.value == 2.0

    def test_errors(self):
        with pytest.raises(DomainError):
            finesse_from_fwhm(hz(1e12), hz(1e12))
        with pytest.raises(DomainError):
            finesse_from_fwhm(hz(0.0), hz(1e12))

    @given(st.floats(1e3, 1e9), st.floats(1.5, 1e6))
    def test_exact_identities(self, w, ratio):
        fsr = w * ratio
        r = finesse_from_fwhm(hz(w), hz(fsr))
        assert r.finesse.value == fsr / w
        assert r.total_loss_ppm.value * r.finesse.value == pytest.approx(2 * math.pi * 1e6, rel=1e-15)


class TestPolarizations:
    def test_780_row(self):
        v = compare_polarizations([(p, hz(37.1e6, 0.9e6)) for p in "HVD"])
        assert v.max_pairwise_diff.value == 0.0
        assert not v.distinguishable

    def test_795_row(self):
        v = compare_polarizations([("H", hz(34.8e6, 0.9e6)), ("V", hz(34.9e6, 0.9e6)), ("D", hz(34.7e6, 0.9e6))])
        assert v.max_pairwise_diff.value == pytest.approx(0.2e6)
        assert 2 * v.combined_sigma == pytest.approx(2.55e6, abs=0.01e6)
        assert not v.distinguishable
        assert set(v.pair) == {"V", "D"}

    def test_distinguishable(self):
        assert compare_polarizations([("A", hz(10e6, 0.1e6)), ("B", hz(20e6, 0.1e6))]).distinguishable

    def test_too_few(self):
        with pytest.raises(DomainError):
            compare_polarizations([("A", hz(1.0))])

    def test_mixed_units(self):
        with pytest.raises(DomainError):
            compare_polarizations([("A", hz(1.0)), ("B", Quantity.of(1.0, 0, Unit.M))])


class TestCsv:
    def test_round_trip(self, tmp_path):
        tr = synth_trace(P0, GRID, 0.02, seed=1)
        write_trace_csv(tr, tmp_path / "t.csv")
        back = read_trace_csv(tmp_path / "t.csv")
        assert np.array_equal(back.abscissa, tr.abscissa)
        assert np.array_equal(back.values, tr.values)
        assert back.abscissa_kind is AxisKind.DETUNING

    def test_fit_column(self, tmp_path):
        tr = synth_trace(P0, GRID)
        write_trace_csv(tr, tmp_path / "t.csv", fit=P0)
        header = (tmp_path / "t.csv").read_text().splitlines()[0]
        assert header.split(",") == ["detuning_hz", "value", "fit"]
        assert np.array_equal(read_trace_csv(tmp_path / "t.csv").values, tr.values)

    def test_bad_header(self, tmp_path):
        (tmp_path / "t.csv").write_text("x,y\n1,2\n")
        with pytest.raises(DomainError):
            read_trace_csv(tmp_path / "t.csv")
