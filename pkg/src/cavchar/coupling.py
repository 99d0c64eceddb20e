"""Maximal single-atom coupling g0 and the strong-coupling test.

Rates are handled in ordinary frequency units (value / 2pi, in Hz). The
ratio g0**2 / (kappa * gamma) is the same in angular units because the
2pi factors cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .geometry import _check_stable
from .quantity import C_LIGHT, Quantity, Unit, propagate

# Rb-87 D2 line: natural linewidth 2*gamma = 2pi * 6.065(9) MHz
RB87_D2_LINEWIDTH_HZ = 6.065e6
RB87_D2_LINEWIDTH_SIGMA_HZ = 0.009e6
RB87_D2_WAVELENGTH_M = 780.241209686e-9


@dataclass(frozen=True)
class AtomicLine:
    gamma_over_2pi: Quantity
    wavelength: Quantity
    label: str = ""

    def __post_init__(self):
        if not (self.gamma_over_2pi.value > 0 and self.wavelength.value > 0):
            raise DomainError("atomic decay rate and wavelength must be positive")

    @classmethod
    def rb87_d2(cls) -> "AtomicLine":
        return cls(
            Quantity.of(RB87_D2_LINEWIDTH_HZ / 2, RB87_D2_LINEWIDTH_SIGMA_HZ / 2, Unit.HZ),
            Quantity.of(RB87_D2_WAVELENGTH_M, 0.0, Unit.M),
            "87Rb D2 F=2 -> F'=3",
        )

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "gamma_over_2pi": self.gamma_over_2pi.to_dict(),
            "wavelength": self.wavelength.to_dict(),
        }


def _g0_over_2pi(length, radius, gamma_over_2pi, lam):
    _check_stable(length, radius)
    if gamma_over_2pi <= 0 or lam <= 0:
        raise DomainError("atomic decay rate and wavelength must be positive")
    # gamma/pi in the closed form equals 2 * (gamma/2pi)
    pref = math.sqrt(3.0 / (2.0 * math.sqrt(2.0) * math.pi**2))
    return pref * math.sqrt(C_LIGHT * lam / math.sqrt(radius * length**3) * 2.0 * gamma_over_2pi)


def g0_max(length: Quantity, radius: Quantity, line: AtomicLine) -> Quantity:
    """g0/2pi in Hz for an atom on an antinode at the mode waist."""
    return propagate(
        _g0_over_2pi, [length, radius, line.gamma_over_2pi, line.wavelength], Unit.HZ
    )


def g0_from_mode_volume(mode_volume: Quantity, line: AtomicLine) -> Quantity:
    """g0/2pi from the dipole coupling in a standing-wave mode of volume V.

    g0 = sqrt(3 c lam^2 gamma / (4 pi V)) in angular units, with gamma the
    angular polarization decay rate.
    """

    def f(v, gam, lam):
        if v <= 0:
            raise DomainError("mode volume must be positive")
        g = math.sqrt(3.0 * C_LIGHT * lam**2 * (2.0 * math.pi * gam) / (4.0 * math.pi * v))
        return g / (2.0 * math.pi)

    return propagate(f, [mode_volume, line.gamma_over_2pi, line.wavelength], Unit.HZ)


@dataclass(frozen=True)
class CouplingResult:
    g0_over_2pi: Quantity
    kappa_over_2pi: Quantity
    gamma_over_2pi: Quantity
    strong: bool
    margin: float

    def to_dict(self) -> dict:
        return {
            "g0_over_2pi": self.g0_over_2pi.to_dict(),
            "kappa_over_2pi": self.kappa_over_2pi.to_dict(),
            "gamma_over_2pi": self.gamma_over_2pi.to_dict(),
            "strong": self.strong,
            "margin": Quantity.of(self.margin, 0.0, Unit.ONE).to_dict(),
        }


def strong_coupling(g0_over_2pi: Quantity, kappa_over_2pi: Quantity, line: AtomicLine) -> CouplingResult:
    g, k, y = g0_over_2pi.value, kappa_over_2pi.value, line.gamma_over_2pi.value
    if not (g > 0 and k > 0 and y > 0):
        raise DomainError("g0, kappa and gamma must all be positive")
    margin = g * g / (k * y)
    return CouplingResult(g0_over_2pi, kappa_over_2pi, line.gamma_over_2pi, margin > 1.0, margin)
