"""Closed-form relations for a symmetric two-mirror Gaussian cavity.

All functions accept and return :class:`~cavchar.quantity.Quantity` in SI
units. Each one has a plain-float twin (leading underscore) that does the
actual arithmetic; the public wrappers add domain checks and propagate the
uncertainty.

Gouy phase and Rayleigh range use the dimensionally consistent forms

    gouy = 2 * arctan(sqrt(L / (2R - L)))
    z0   = pi * w0**2 / lam
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import DomainError
from .quantity import C_LIGHT, Quantity, Unit, propagate


def _length(fsr):
    if fsr <= 0:
        raise DomainError(f"free spectral range must be positive, got {fsr!r}")
    return C_LIGHT / (2.0 * fsr)


def _fsr(length):
    if length <= 0:
        raise DomainError(f"cavity length must be positive, got {length!r}")
    return C_LIGHT / (2.0 * length)


def _check_stable(length, radius):
    if not (0.0 < length < 2.0 * radius):
        raise DomainError(
            f"unstable cavity: need 0 < L < 2R, got L={length!r}, R={radius!r}",
            code="E_UNSTABLE",
        )


def _gouy(length, radius):
    _check_stable(length, radius)
    return 2.0 * math.atan(math.sqrt(length / (2.0 * radius - length)))


def _radius(gouy, length):
    if not (0.0 < gouy < math.pi):
        raise DomainError(f"Gouy phase must lie in (0, pi), got {gouy!r}")
    if length <= 0:
        raise DomainError(f"cavity length must be positive, got {length!r}")
    return length / (2.0 * math.sin(gouy / 2.0) ** 2)


def _trans(gouy, fsr):
    if not (0.0 < gouy < math.pi):
        raise DomainError(f"Gouy phase must lie in (0, pi), got {gouy!r}")
    if fsr <= 0:
        raise DomainError(f"free spectral range must be positive, got {fsr!r}")
    return gouy * fsr / math.pi


def _gouy_from_trans(trans, fsr):
    if fsr <= 0:
        raise DomainError(f"free spectral range must be positive, got {fsr!r}")
    if not (0.0 < trans < fsr):
        raise DomainError(
            f"transverse spacing {trans!r} Hz outside (0, fsr={fsr!r} Hz); "
            "check the transverse-order assignment",
            code="E_MODE_ASSIGNMENT",
        )
    return math.pi * trans / fsr


def _waist(length, radius, lam):
    _check_stable(length, radius)
    if lam <= 0:
        raise DomainError(f"wavelength must be positive, got {lam!r}")
    return (length * (2.0 * radius - length) * lam**2 / (4.0 * math.pi**2)) ** 0.25


def _rayleigh(w0, lam):
    if w0 <= 0 or lam <= 0:
        raise DomainError(f"waist and wavelength must be positive, got {w0!r}, {lam!r}")
    return math.pi * w0**2 / lam


def _mode_volume(w0, length):
    if w0 <= 0 or length <= 0:
        raise DomainError(f"waist and length must be positive, got {w0!r}, {length!r}")
    return math.pi * w0**2 * length / 4.0


def length_from_fsr(fsr: Quantity) -> Quantity:
    return propagate(_length, [fsr], Unit.M)


def fsr_from_length(length: Quantity) -> Quantity:
    return propagate(_fsr, [length], Unit.HZ)


def gouy_from_geometry(length: Quantity, radius: Quantity) -> Quantity:
    """Round-trip Gouy phase of the fundamental mode."""
    return propagate(_gouy, [length, radius], Unit.RAD)


def radius_from_gouy(gouy: Quantity, length: Quantity) -> Quantity:
    return propagate(_radius, [gouy, length], Unit.M)


def trans_spacing_from_gouy(gouy: Quantity, fsr: Quantity) -> Quantity:
    return propagate(_trans, [gouy, fsr], Unit.HZ)


def gouy_from_trans(trans: Quantity, fsr: Quantity) -> Quantity:
    return propagate(_gouy_from_trans, [trans, fsr], Unit.RAD)


def waist(length: Quantity, radius: Quantity, lam: Quantity) -> Quantity:
    return propagate(_waist, [length, radius, lam], Unit.M)


def rayleigh(w0: Quantity, lam: Quantity) -> Quantity:
    return propagate(_rayleigh, [w0, lam], Unit.M)


def mode_volume(w0: Quantity, length: Quantity) -> Quantity:
    return propagate(_mode_volume, [w0, length], Unit.M3)


def mode_frequency(n: int, transverse_order: int, fsr: Quantity, gouy: Quantity) -> Quantity:
    """Resonance of the ``n``-th longitudinal mode of given transverse order.

    The ladder is ``n*fsr + order*gouy*fsr/pi``; the common Gouy offset of
    the fundamental is dropped, so only differences are physical.
    """
    if transverse_order < 0:
        raise DomainError(f"transverse order must be >= 0, got {transverse_order!r}")

    def nu(f, g):
        if f <= 0:
            raise DomainError(f"free spectral range must be positive, got {f!r}")
        return n * f + transverse_order * g * f / math.pi

    return propagate(nu, [fsr, gouy], Unit.HZ)


@dataclass(frozen=True)
class CavityGeometry:
    fsr: Quantity
    length_L: Quantity
    gouy: Quantity
    radius_R: Quantity
    waist_w0: Quantity
    rayleigh_z0: Quantity
    mode_volume_Vc: Quantity
    wavelength_lambda: Quantity

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name).to_dict() for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "CavityGeometry":
        return cls(**{f.name: Quantity.from_dict(d[f.name]) for f in fields(cls)})
