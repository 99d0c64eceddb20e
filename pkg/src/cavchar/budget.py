"""Mirror transmission statistics, total loss and outcoupling efficiency."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, DomainError
from .quantity import Quantity, Unit, propagate


@dataclass(frozen=True)
class MirrorSet:
    transmittances: list
    wavelength: Quantity
    systematic_fraction: float = 0.0

    def __post_init__(self):
        if len(self.transmittances) == 0:
            raise DegenerateDataError("mirror set is empty")
        for t in self.transmittances:
            v = t.value if isinstance(t, Quantity) else float(t)
            if not 0.0 < v < 1e6:
                raise DomainError(f"transmittance {v!r} ppm outside (0, 1e6)")
        if self.systematic_fraction < 0:
            raise DomainError("systematic_fraction must be >= 0")


def mirror_stats(mirrors: MirrorSet) -> Quantity:
    """Mean transmittance in ppm.

    Sigma is the sample standard deviation of the individual mirrors, with
    the systematic term (a fraction of that statistical sigma) added in
    quadrature.
    """
    vals = np.array(
        [t.value if isinstance(t, Quantity) else float(t) for t in mirrors.transmittances]
    )
    mean = float(np.mean(vals))
    stat = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
    sigma = math.hypot(stat, mirrors.systematic_fraction * stat)
    return Quantity.of(mean, sigma, Unit.PPM)


def total_loss_from_finesse(finesse: Quantity) -> Quantity:
    if not finesse.value > 0:
        raise DomainError(f"finesse must be positive, got {finesse.value!r}")
    return propagate(lambda f: 2.0 * math.pi / f * 1e6, [finesse], Unit.PPM)


@dataclass(frozen=True)
class OutcouplingResult:
    efficiency: Quantity
    transmittance_T: Quantity
    total_loss: Quantity
    clamped: bool = field(default=False)

    def to_dict(self) -> dict:
        return {
            "efficiency": self.efficiency.to_dict(),
            "transmittance_T": self.transmittance_T.to_dict(),
            "total_loss": self.total_loss.to_dict(),
            "clamped": self.clamped,
        }


def outcoupling(transmittance: Quantity, total_loss: Quantity) -> OutcouplingResult:
    """Efficiency T / L_tot.

    If the upper error bar would pass 1 it is cut back to 1 - value and the
    result becomes asymmetric; the lower bar and central value are kept.
    """
    for name, q in (("transmittance", transmittance), ("total loss", total_loss)):
        if not q.value > 0:
            raise DomainError(f"{name} must be positive, got {q.value!r}")
    eff = propagate(lambda t, l: t / l, [transmittance, total_loss], Unit.ONE)
    if eff.value > 1.0:
        raise DomainError(
            f"transmittance exceeds total loss (efficiency {eff.value:.4g} > 1)"
        )
    clamped = eff.value + eff.sigma > 1.0
    if clamped:
        eff = Quantity(eff.value, eff.sigma, 1.0 - eff.value, Unit.ONE)
    return OutcouplingResult(eff, transmittance, total_loss, clamped)
