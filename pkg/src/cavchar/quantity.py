"""Scalars with a unit tag and 1-sigma uncertainty, plus first-order propagation.

Values are always stored in SI base units (Hz, m, rad, ...). The only
exception is ``ppm``, which is kept in parts per million because that is
how mirror losses are quoted.

Two bookkeeping modes exist for differences of measured frequencies:

``quadrature``
    independent Gaussian errors, ``sigma = hypot(sa, sb)``.
``resolution``
    a derived difference inherits the instrument resolution (the larger
    input sigma, or an explicit value) instead of the quadrature sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

from .errors import AsymmetricError, DomainError, UnitMismatchError

C_LIGHT = 299_792_458.0  # m/s, exact

QUADRATURE = "quadrature"
RESOLUTION = "resolution"
PROPAGATION_MODES = (QUADRATURE, RESOLUTION)


class Unit(str, Enum):
    HZ = "Hz"
    M = "m"
    M2 = "m^2"
    M3 = "m^3"
    RAD = "rad"
    ONE = "1"
    V = "V"
    PPM = "ppm"
    S = "s"


@dataclass(frozen=True)
class Quantity:
    value: float
    sigma_minus: float = 0.0
    sigma_plus: float = 0.0
    unit: Unit = Unit.ONE

    def __post_init__(self):
        object.__setattr__(self, "unit", Unit(self.unit))
        for s in (self.sigma_minus, self.sigma_plus):
            if not s >= 0.0:
                raise DomainError(f"uncertainty must be >= 0, got {s!r}")

    @classmethod
    def of(cls, value, sigma=0.0, unit=Unit.ONE) -> "Quantity":
        return cls(float(value), float(sigma), float(sigma), Unit(unit))

    @property
    def symmetric(self) -> bool:
        return self.sigma_minus == self.sigma_plus

    @property
    def sigma(self) -> float:
        if not self.symmetric:
            raise AsymmetricError(
                f"quantity {self} has asymmetric uncertainty; use sigma_minus/sigma_plus"
            )
        return self.sigma_minus

    @property
    def relative_sigma(self) -> float:
        return self.sigma / abs(self.value)

    def to_dict(self) -> dict:
        d = {"value": repr(self.value), "unit": self.unit.value}
        if self.symmetric:
            d["sigma"] = repr(self.sigma_minus)
        else:
            d["sigma_minus"] = repr(self.sigma_minus)
            d["sigma_plus"] = repr(self.sigma_plus)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Quantity":
        if "sigma" in d:
            lo = hi = float(d["sigma"])
        else:
            lo, hi = float(d.get("sigma_minus", 0.0)), float(d.get("sigma_plus", 0.0))
        return cls(float(d["value"]), lo, hi, Unit(d["unit"]))

    def __str__(self):
        if self.symmetric:
            return f"{self.value:.6g} ± {self.sigma_minus:.2g} {self.unit.value}"
        return (
            f"{self.value:.6g} +{self.sigma_plus:.2g}/-{self.sigma_minus:.2g} "
            f"{self.unit.value}"
        )


def _require_symmetric(*qs: Quantity) -> None:
    for q in qs:
        if not q.symmetric:
            raise AsymmetricError(f"arithmetic on asymmetric quantity {q} is not supported")


def _check_mode(mode: str) -> None:
    if mode not in PROPAGATION_MODES:
        raise ValueError(f"unknown propagation mode {mode!r}; expected one of {PROPAGATION_MODES}")


def q_add(a: Quantity, b: Quantity) -> Quantity:
    if a.unit is not b.unit:
        raise UnitMismatchError(f"cannot add {a.unit.value} and {b.unit.value}")
    _require_symmetric(a, b)
    return Quantity.of(a.value + b.value, math.hypot(a.sigma, b.sigma), a.unit)


def q_sub(a: Quantity, b: Quantity, mode: str = QUADRATURE, resolution: float | None = None) -> Quantity:
    """Difference ``a - b``.

    In ``resolution`` mode the result carries ``resolution`` (default: the
    larger of the two input sigmas) rather than the quadrature sum.
    """
    _check_mode(mode)
    if a.unit is not b.unit:
        raise UnitMismatchError(f"cannot subtract {b.unit.value} from {a.unit.value}")
    _require_symmetric(a, b)
    if mode == RESOLUTION:
        sigma = max(a.sigma, b.sigma) if resolution is None else float(resolution)
    else:
        sigma = math.hypot(a.sigma, b.sigma)
    return Quantity.of(a.value - b.value, sigma, a.unit)


def _step(x: float, s: float) -> float:
    return max(abs(x) * 1e-7, s * 1e-3)


def partials(f: Callable[..., float], values: Sequence[float], sigmas: Sequence[float]) -> list[float]:
    """Central finite-difference partial derivatives of ``f`` at ``values``.

    Inputs with zero sigma get a zero partial; they cannot contribute.
    """
    out = []
    for i, (x, s) in enumerate(zip(values, sigmas)):
        if s == 0.0:
            out.append(0.0)
            continue
        h = _step(x, s)
        up = list(values)
        dn = list(values)
        up[i] = x + h
        dn[i] = x - h
        d = (f(*up) - f(*dn)) / (2.0 * h)
        if not math.isfinite(d):
            raise DomainError(f"non-finite difference quotient for input {i}")
        out.append(d)
    return out


def propagate(f: Callable[..., float], inputs: Sequence[Quantity], unit=Unit.ONE) -> Quantity:
    """Evaluate ``f`` at the input central values with first-order sigma.

    ``sigma**2 = sum((df/dx_i * sigma_i)**2)`` with independent inputs.
    """
    _require_symmetric(*inputs)
    values = [q.value for q in inputs]
    sigmas = [q.sigma for q in inputs]
    try:
        y = f(*values)
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"function undefined at central values: {exc}") from exc
    if not math.isfinite(y):
        raise DomainError("function is not finite at the central values")
    try:
        grads = partials(f, values, sigmas)
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"function undefined near central values: {exc}") from exc
    sigma = math.sqrt(math.fsum((g * s) ** 2 for g, s in zip(grads, sigmas)))
    return Quantity.of(y, sigma, unit)
