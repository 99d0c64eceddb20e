"""Chirped piezo drive, mechanical-resonance response and dip detection.

The cavity is locked on resonance with the probe laser while a chirped
voltage drives the piezo. Each mechanical mode responds as a driven damped
oscillator; the axial part of that motion modulates the cavity detuning
sinusoidally with amplitude D, which lowers the time-averaged transmission
to ``1 / sqrt(1 + (D / hwhm)**2)``. This quasi-static picture assumes the
mechanical period is long compared with the cavity lifetime and short
compared with the sweep dwell time.

Two axis conventions exist for the chirp ``V0 sin(2 pi ((f_f - f_i) t/T + f_i) t)``:
``sweep`` labels time t by ``f_i + (f_f - f_i) t / T``; ``instantaneous``
uses the true instantaneous frequency ``f_i + 2 (f_f - f_i) t / T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.signal import find_peaks

from .errors import DomainError
from .lineshape import AxisKind, TransmissionTrace
from .quantity import Quantity, Unit

SWEEP = "sweep"
INSTANTANEOUS = "instantaneous"
AXIS_CONVENTIONS = (SWEEP, INSTANTANEOUS)

PZT_VOLTS_PER_FSR = 770.0


@dataclass(frozen=True)
class ChirpSpec:
    V0: Quantity
    f_i: float
    f_f: float
    duration_T: float
    sample_rate: float

    def __post_init__(self):
        if not self.f_f > self.f_i >= 0:
            raise DomainError(f"need f_f > f_i >= 0, got f_i={self.f_i!r}, f_f={self.f_f!r}")
        if not self.duration_T > 0:
            raise DomainError("chirp duration must be positive")
        if not self.sample_rate > 4.0 * self.f_f:
            raise DomainError(
                f"sample rate {self.sample_rate!r} Hz must exceed 4 * f_f = {4 * self.f_f!r} Hz"
            )

    @classmethod
    def paper_default(cls, sample_rate=400e3) -> "ChirpSpec":
        return cls(Quantity.of(10e-3, 0.0, Unit.V), 0.0, 90e3, 0.5, sample_rate)


@dataclass(frozen=True)
class MechMode:
    frequency: float
    quality_Q: float
    axial_coupling: float = 1.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise DomainError("mode frequency must be positive")
        if not self.quality_Q > 0:
            raise DomainError("quality factor must be positive")
        if not 0.0 <= self.axial_coupling <= 1.0:
            raise DomainError("axial coupling must lie in [0, 1]")


@dataclass(frozen=True)
class PztCalibration:
    volts_per_fsr: Quantity
    fsr: Quantity

    def __post_init__(self):
        if not (self.volts_per_fsr.value > 0 and self.fsr.value > 0):
            raise DomainError("calibration fields must be positive")


@dataclass(frozen=True)
class Dip:
    frequency: float
    depth: float
    prominence: float

    def to_dict(self):
        return {
            "frequency": Quantity.of(self.frequency, 0.0, Unit.HZ).to_dict(),
            "depth": Quantity.of(self.depth, 0.0, Unit.ONE).to_dict(),
            "prominence": Quantity.of(self.prominence, 0.0, Unit.ONE).to_dict(),
        }


@dataclass(frozen=True)
class DipReport:
    dips: tuple

    @property
    def frequencies(self):
        return [d.frequency for d in self.dips]

    def to_dict(self):
        return {"dips": [d.to_dict() for d in self.dips]}


def volts_to_detuning(volts, cal: PztCalibration):
    return volts * cal.fsr.value / cal.volts_per_fsr.value


def sweep_frequency(spec: ChirpSpec, t, axis: str = SWEEP):
    rate = (spec.f_f - spec.f_i) / spec.duration_T
    if axis == SWEEP:
        return spec.f_i + rate * np.asarray(t)
    if axis == INSTANTANEOUS:
        return spec.f_i + 2.0 * rate * np.asarray(t)
    raise ValueError(f"unknown axis convention {axis!r}; expected one of {AXIS_CONVENTIONS}")


def chirp_waveform(spec: ChirpSpec, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > spec.duration_T):
        raise DomainError(f"t outside [0, {spec.duration_T!r}] s")
    phase = 2.0 * np.pi * ((spec.f_f - spec.f_i) * t_arr / spec.duration_T + spec.f_i) * t_arr
    out = spec.V0.value * np.sin(phase)
    return float(out) if np.ndim(out) == 0 else out


def oscillator_response(mode: MechMode, f):
    """Magnitude of a driven damped oscillator normalized to the static gain."""
    r = np.asarray(f, dtype=float) / mode.frequency
    h = 1.0 / np.sqrt((1.0 - r * r) ** 2 + (r / mode.quality_Q) ** 2)
    return float(h) if np.ndim(h) == 0 else h


def avg_transmission(D, hwhm):
    """Phase average of a Lorentzian under sinusoidal detuning of amplitude D."""
    h = np.asarray(hwhm, dtype=float)
    if not np.all(h > 0):
        raise DomainError("hwhm must be positive")
    d = np.asarray(D, dtype=float) / h
    out = 1.0 / np.sqrt(1.0 + d * d)
    return float(out) if np.ndim(out) == 0 else out


def detuning_amplitude(spec: ChirpSpec, modes, cal: PztCalibration, f):
    """Peak detuning at drive frequency ``f``: mode magnitudes add in phase."""
    d0 = volts_to_detuning(spec.V0.value, cal)
    total = np.zeros_like(np.asarray(f, dtype=float))
    for m in modes:
        total = total + m.axial_coupling * oscillator_response(m, f)
    return d0 * total


def simulate_sweep(spec: ChirpSpec, modes, cal: PztCalibration, hwhm: float, axis: str = SWEEP) -> TransmissionTrace:
    """Transmission versus drive frequency, sampled at the chirp sample rate."""
    n = int(round(spec.duration_T * spec.sample_rate)) + 1
    t = np.linspace(0.0, spec.duration_T, n)
    f = sweep_frequency(spec, t, axis)
    modes = list(modes)
    if modes:
        d = detuning_amplitude(spec, modes, cal, f)
    else:
        d = np.zeros_like(f)
    values = avg_transmission(d, hwhm)
    meta = {"axis": axis, "hwhm_hz": hwhm, "normalized": True}
    return TransmissionTrace(f, values, AxisKind.SWEEP_FREQUENCY, meta)


def normalize_trace(trace: TransmissionTrace, lower: float, upper: float) -> TransmissionTrace:
    if not upper > lower:
        raise DomainError(f"normalization needs upper > lower, got {lower!r}, {upper!r}")
    v = np.clip((trace.values - lower) / (upper - lower), 0.0, 1.0)
    meta = dict(trace.meta, normalized=True, norm_lower=lower, norm_upper=upper)
    return TransmissionTrace(trace.abscissa.copy(), v, trace.abscissa_kind, meta)


def _parabolic_vertex(x, y, i):
    if i == 0 or i == len(y) - 1:
        return x[i], y[i]
    # parabola through the three points, in coordinates local to x[i]
    h0, h2 = x[i - 1] - x[i], x[i + 1] - x[i]
    s0, s2 = (y[i - 1] - y[i]) / h0, (y[i + 1] - y[i]) / h2
    a = (s2 - s0) / (h2 - h0)
    if not a > 0:
        return x[i], y[i]
    b = s0 - a * h0
    u = -b / (2.0 * a)
    if not h0 <= u <= h2:
        return x[i], y[i]
    return x[i] + u, y[i] + b * u + a * u * u


def detect_dips(trace: TransmissionTrace, min_prominence: float = 0.02) -> DipReport:
    """Local transmission minima with at least ``min_prominence``.

    Each minimum is refined with a three-point parabola. Depth is measured
    from full transmission, i.e. ``1 - refined value``.
    """
    if trace.abscissa_kind is not AxisKind.SWEEP_FREQUENCY:
        raise DomainError(
            f"dip detection needs a sweep-frequency axis, got {trace.abscissa_kind.value}"
        )
    if not 0.0 < min_prominence < 1.0:
        raise DomainError("min_prominence must lie in (0, 1)")
    x, y = trace.abscissa, trace.values
    if len(y) < 3:
        return DipReport(())
    idx, props = find_peaks(-y, prominence=min_prominence)
    dips = []
    for i, prom in zip(idx, props["prominences"]):
        xv, yv = _parabolic_vertex(x, y, int(i))
        depth = min(max(1.0 - yv, np.finfo(float).tiny), 1.0)
        dips.append(Dip(float(xv), float(depth), float(prom)))
    dips.sort(key=lambda d: d.frequency)
    return DipReport(tuple(dips))


def match_reference(measured, reference, tolerance: float = 2e3):
    """Pair measured and reference frequencies one-to-one, nearest first.

    Returns a list of ``(measured, reference, |difference|, within)`` rows,
    ordered by measured frequency; unpaired entries are dropped.
    """
    measured = list(measured)
    reference = list(reference)
    if not measured or not reference:
        return []
    cost = np.abs(np.subtract.outer(measured, reference))
    rows, cols = linear_sum_assignment(cost)
    pairs = sorted(
        (measured[r], reference[c], float(cost[r, c]), bool(cost[r, c] <= tolerance))
        for r, c in zip(rows, cols)
    )
    return pairs

