"""Reduction of simultaneous wavelength-meter readings to cavity geometry.

Two lasers are tuned onto two cavity modes at once and both frequencies
are read out together, so cavity drift drops out of the difference. The
mode each laser sits on is supplied by the caller.

Typical use with three readings (reference TEM00 on mode n, probe TEM00 and
probe TEM10 on mode n+1)::

    fsr, trans = reduce_lines(ref, probe00, probe10)
    geo = solve_geometry(fsr, trans, probe00.wavelength)
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from . import geometry as g
from .errors import DomainError, ModeAssignmentError
from .geometry import CavityGeometry
from .quantity import C_LIGHT, QUADRATURE, RESOLUTION, Quantity, Unit, _check_mode, propagate, q_sub

WLM_RESOLUTION_HZ = 10e6
PRECISION_ENV = "CAVCHAR_PRECISION"


def default_wlm_sigma() -> float:
    """WLM sigma in Hz, overridable through ``CAVCHAR_PRECISION``."""
    raw = os.environ.get(PRECISION_ENV)
    if raw is None or raw.strip() == "":
        return WLM_RESOLUTION_HZ
    val = float(raw)
    if not val > 0:
        raise DomainError(f"{PRECISION_ENV} must be a positive number of Hz, got {raw!r}")
    return val


@dataclass(frozen=True)
class LaserLine:
    label: str
    frequency: Quantity
    longitudinal_offset: int = 0
    transverse_order: int = 0

    def __post_init__(self):
        if self.frequency.unit is not Unit.HZ:
            raise DomainError(f"laser {self.label!r}: frequency must be in Hz")
        if not self.frequency.value > 0:
            raise DomainError(f"laser {self.label!r}: frequency must be positive")
        if self.transverse_order < 0:
            raise DomainError(f"laser {self.label!r}: transverse order must be >= 0")

    @classmethod
    def reading(cls, label, hz, longitudinal_offset=0, transverse_order=0, sigma=None):
        s = default_wlm_sigma() if sigma is None else sigma
        return cls(label, Quantity.of(hz, s, Unit.HZ), longitudinal_offset, transverse_order)

    @property
    def mode(self) -> tuple[int, int]:
        return (self.longitudinal_offset, self.transverse_order)

    @property
    def wavelength(self) -> Quantity:
        return propagate(lambda nu: C_LIGHT / nu, [self.frequency], Unit.M)


@dataclass(frozen=True)
class ModePairing:
    reference: LaserLine
    probe: LaserLine

    def __post_init__(self):
        if self.reference.mode == self.probe.mode:
            raise ModeAssignmentError(
                f"reference and probe share mode {self.reference.mode}; pairing is degenerate"
            )
        if not self.probe.frequency.value > self.reference.frequency.value:
            raise ModeAssignmentError(
                "probe frequency must exceed reference frequency "
                f"({self.probe.frequency.value!r} <= {self.reference.frequency.value!r})"
            )


def _check_pairing(pairing: ModePairing, probe_order: int) -> None:
    if pairing.reference.mode != (0, 0):
        raise ModeAssignmentError(
            f"reference must be TEM00 on mode n, got (offset, order)={pairing.reference.mode}"
        )
    if pairing.probe.mode != (1, probe_order):
        raise ModeAssignmentError(
            f"probe must be on mode n+1 with transverse order {probe_order}, "
            f"got (offset, order)={pairing.probe.mode}"
        )


def reduce_fsr(pairing: ModePairing, mode: str = QUADRATURE) -> Quantity:
    """FSR from a reference TEM00 (mode n) and a probe TEM00 (mode n+1)."""
    _check_pairing(pairing, 0)
    fsr = q_sub(pairing.probe.frequency, pairing.reference.frequency, mode)
    if fsr.value <= 0:
        raise ModeAssignmentError("non-positive FSR")
    return fsr


def reduce_trans(pairing: ModePairing, fsr: Quantity, mode: str = QUADRATURE) -> Quantity:
    """TEM00-TEM10 spacing from a pairing whose probe is TEM10 on mode n+1.

    The separation ``probe - reference`` and ``fsr`` are treated as
    independent. Use :func:`reduce_lines` when the same reference reading
    enters both differences.
    """
    _check_pairing(pairing, 1)
    sep = q_sub(pairing.probe.frequency, pairing.reference.frequency, mode)
    trans = q_sub(sep, fsr, mode)
    _check_trans(trans.value, fsr.value)
    return trans


def _check_trans(trans, fsr):
    if not (0.0 < trans < fsr):
        raise ModeAssignmentError(
            f"transverse spacing {trans!r} Hz outside (0, {fsr!r}) Hz; "
            "probe is probably not TEM10 on mode n+1"
        )


def reduce_lines(
    reference: LaserLine,
    probe00: LaserLine,
    probe10: LaserLine,
    mode: str = QUADRATURE,
) -> tuple[Quantity, Quantity]:
    """FSR and transverse spacing from three readings sharing one reference.

    In quadrature mode both quantities are propagated from the distinct raw
    readings, so a reading that appears in both differences is counted once
    (the reference cancels from the transverse spacing). In resolution mode
    each derived difference carries the largest line sigma.
    """
    _check_mode(mode)
    _check_pairing(ModePairing(reference, probe00), 0)
    _check_pairing(ModePairing(reference, probe10), 1)

    if mode == RESOLUTION:
        res = max(line.frequency.sigma for line in (reference, probe00, probe10))
        fsr = reduce_fsr(ModePairing(reference, probe00), RESOLUTION)
        fsr = Quantity.of(fsr.value, res, Unit.HZ)
        trans = reduce_trans(ModePairing(reference, probe10), fsr, RESOLUTION)
        return fsr, Quantity.of(trans.value, res, Unit.HZ)

    readings = [reference.frequency, probe00.frequency, probe10.frequency]
    fsr = propagate(lambda r, p0, p1: p0 - r, readings, Unit.HZ)
    if fsr.value <= 0:
        raise ModeAssignmentError("non-positive FSR")
    trans = propagate(lambda r, p0, p1: (p1 - r) - (p0 - r), readings, Unit.HZ)
    _check_trans(trans.value, fsr.value)
    return fsr, trans


def solve_geometry(fsr: Quantity, trans: Quantity, lam: Quantity) -> CavityGeometry:
    """Full geometric parameter set from the two measured spacings.

    Each output is propagated directly from ``(fsr, trans, lam)`` so that
    correlations inside the chain (L and R both depend on fsr) are kept.
    """
    if not (0.0 < trans.value < fsr.value):
        raise ModeAssignmentError(
            f"transverse spacing {trans.value!r} Hz outside (0, {fsr.value!r}) Hz"
        )
    inputs = [fsr, trans, lam]

    def L(f, t, lam_):
        return g._length(f)

    def zeta(f, t, lam_):
        return g._gouy_from_trans(t, f)

    def R(f, t, lam_):
        return g._radius(zeta(f, t, lam_), L(f, t, lam_))

    def w0(f, t, lam_):
        return g._waist(L(f, t, lam_), R(f, t, lam_), lam_)

    def z0(f, t, lam_):
        return g._rayleigh(w0(f, t, lam_), lam_)

    def vc(f, t, lam_):
        return g._mode_volume(w0(f, t, lam_), L(f, t, lam_))

    return CavityGeometry(
        fsr=fsr,
        length_L=propagate(L, inputs, Unit.M),
        gouy=propagate(zeta, inputs, Unit.RAD),
        radius_R=propagate(R, inputs, Unit.M),
        waist_w0=propagate(w0, inputs, Unit.M),
        rayleigh_z0=propagate(z0, inputs, Unit.M),
        mode_volume_Vc=propagate(vc, inputs, Unit.M3),
        wavelength_lambda=lam,
    )


def spectrum_from_geometry(length: float, radius: float) -> tuple[float, float]:
    """Ideal (fsr, trans) in Hz for a cavity of given L and R (floats, SI)."""
    fsr = g._fsr(length)
    return fsr, g._trans(g._gouy(length, radius), fsr)

