"""Lorentzian transmission peaks: model, synthetic traces, fitting, finesse.

The fitter is a small Levenberg-Marquardt loop with an analytic Jacobian.
Internally the abscissa is centred and rescaled to order one, which keeps
the normal equations well conditioned when x is in Hz (~1e8) and the
amplitude is ~1.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DegenerateDataError, DomainError
from .quantity import Quantity, Unit, propagate


class AxisKind(str, Enum):
    DETUNING = "detuning"
    SWEEP_FREQUENCY = "sweep_frequency"
    TIME = "time"


CSV_HEADERS = {
    AxisKind.DETUNING: "detuning_hz",
    AxisKind.SWEEP_FREQUENCY: "sweep_hz",
    AxisKind.TIME: "time_s",
}
_KIND_FROM_HEADER = {v: k for k, v in CSV_HEADERS.items()}


@dataclass(frozen=True)
class LorentzianParams:
    amplitude: float
    center: float
    fwhm: float
    offset: float = 0.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise DomainError(f"fwhm must be positive, got {self.fwhm!r}")
        if not self.amplitude > 0:
            raise DomainError(f"amplitude must be positive, got {self.amplitude!r}")

    def as_array(self):
        return np.array([self.amplitude, self.center, self.fwhm, self.offset])


PARAM_NAMES = ("amplitude", "center", "fwhm", "offset")


@dataclass
class TransmissionTrace:
    abscissa: np.ndarray
    values: np.ndarray
    abscissa_kind: AxisKind = AxisKind.DETUNING
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.abscissa_kind = AxisKind(self.abscissa_kind)
        if self.abscissa.ndim != 1 or self.abscissa.shape != self.values.shape:
            raise DomainError("abscissa and values must be 1-D arrays of equal length")
        if self.abscissa.size == 0:
            raise DomainError("empty trace")
        if np.any(np.diff(self.abscissa) <= 0):
            raise DomainError("abscissa must be strictly increasing")
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.abscissa))):
            raise DomainError("trace contains non-finite samples")

    def __len__(self):
        return self.abscissa.size


def lorentzian_eval(p: LorentzianParams, x):
    u = 2.0 * (np.asarray(x, dtype=float) - p.center) / p.fwhm
    return p.offset + p.amplitude / (1.0 + u * u)


def _grid(grid) -> np.ndarray:
    if isinstance(grid, tuple) and len(grid) == 3:
        start, stop, num = grid
        return np.linspace(start, stop, int(num))
    return np.asarray(grid, dtype=float)


def synth_trace(p: LorentzianParams, grid, noise_sigma: float = 0.0, seed: int = 0, meta=None) -> TransmissionTrace:
    """Sample the model on ``grid`` and add seeded Gaussian noise.

    ``grid`` is either an array of abscissa values or ``(start, stop, num)``.
    """
    x = _grid(grid)
    if x.size == 0:
        raise DomainError("empty grid")
    if noise_sigma < 0:
        raise DomainError("noise_sigma must be >= 0")
    y = lorentzian_eval(p, x)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        y = y + rng.normal(0.0, noise_sigma, size=x.size)
    m = {"seed": seed, "noise_sigma": noise_sigma}
    m.update(meta or {})
    return TransmissionTrace(x, y, AxisKind.DETUNING, m)


@dataclass(frozen=True)
class FitResult:
    params: LorentzianParams
    sigmas: dict
    iterations: int
    cost: float

    @property
    def fwhm(self) -> Quantity:
        return Quantity.of(self.params.fwhm, self.sigmas["fwhm"], Unit.HZ)

    def to_dict(self) -> dict:
        return {
            "params": {k: repr(float(getattr(self.params, k))) for k in PARAM_NAMES},
            "sigmas": {k: repr(float(self.sigmas[k])) for k in PARAM_NAMES},
            "iterations": self.iterations,
            "cost": repr(float(self.cost)),
        }


def initial_guess(x, y) -> LorentzianParams:
    """Offset = min, amplitude = max - min, center = argmax, fwhm from the
    half-maximum crossings (linear interpolation on each flank)."""
    lo, hi = float(np.min(y)), float(np.max(y))
    amp = hi - lo
    if not amp > 1e-12 * max(abs(hi), abs(lo), 1e-300):
        raise DegenerateDataError("trace is flat; nothing to fit")
    k = int(np.argmax(y))
    half = lo + amp / 2.0

    left = x[0]
    for i in range(k, 0, -1):
        if y[i - 1] < half <= y[i]:
            left = x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
            break
    right = x[-1]
    for i in range(k, len(x) - 1):
        if y[i + 1] < half <= y[i]:
            right = x[i] + (y[i] - half) * (x[i + 1] - x[i]) / (y[i] - y[i + 1])
            break
    width = right - left
    if not width > 0:
        width = 3.0 * (x[-1] - x[0]) / max(len(x) - 1, 1)
    return LorentzianParams(amp, float(x[k]), float(width), lo)


def _model_and_jac(q, u_x):
    a, c, w, o = q
    u = 2.0 * (u_x - c) / w
    d = 1.0 + u * u
    f = o + a / d
    jac = np.empty((u_x.size, 4))
    jac[:, 0] = 1.0 / d
    jac[:, 1] = 4.0 * a * u / (w * d * d)
    jac[:, 2] = 2.0 * a * u * u / (w * d * d)
    jac[:, 3] = 1.0
    return f, jac


def fit_lorentzian(trace: TransmissionTrace, init: LorentzianParams | None = None, max_iter: int = 200) -> FitResult:
    """Least-squares Lorentzian fit with 1-sigma parameter errors.

    Stops when the largest relative parameter step drops below 1e-10 or an
    accepted step lowers the cost by less than 1e-12 relative. Errors come
    from ``s**2 * inv(J^T J)`` with ``s**2 = RSS / (n - 4)``.
    """
    if len(trace) < 8:
        raise DegenerateDataError(f"need at least 8 samples, got {len(trace)}")
    if trace.abscissa_kind is not AxisKind.DETUNING:
        raise DomainError(f"Lorentzian fit expects a detuning axis, got {trace.abscissa_kind.value}")
    x, y = trace.abscissa, trace.values
    if init is None:
        init = initial_guess(x, y)
    elif np.ptp(y) == 0:
        raise DegenerateDataError("trace is flat; nothing to fit")

    x0 = 0.5 * (x[0] + x[-1])
    xs = 0.5 * (x[-1] - x[0])
    ux = (x - x0) / xs
    q = np.array([init.amplitude, (init.center - x0) / xs, init.fwhm / xs, init.offset])

    f, jac = _model_and_jac(q, ux)
    r = y - f
    cost = float(r @ r)
    scale = float(y @ y)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if cost <= 1e-30 * scale:
            converged = True
            break
        jtj = jac.T @ jac
        g = jac.T @ r
        step_taken = False
        while lam < 1e16:
            a = jtj + lam * np.diag(np.diag(jtj))
            try:
                delta = np.linalg.solve(a, g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            q_new = q + delta
            f_new, jac_new = _model_and_jac(q_new, ux)
            r_new = y - f_new
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                rel_step = np.max(np.abs(delta) / (np.abs(q_new) + 1e-8))
                rel_cost = (cost - cost_new) / max(cost, 1e-300)
                q, f, jac, r, cost = q_new, f_new, jac_new, r_new, cost_new
                lam = max(lam / 10.0, 1e-12)
                step_taken = True
                if rel_step < 1e-10 or rel_cost < 1e-12:
                    converged = True
                break
            lam *= 10.0
        if not step_taken:
            # no downhill direction left at any damping: already at the minimum
            converged = True
        if converged:
            break
    if not converged:
        raise ConvergenceError(f"Lorentzian fit did not converge in {max_iter} iterations")

    q[2] = abs(q[2])
    dof = x.size - 4
    s2 = cost / dof if dof > 0 else 0.0
    try:
        cov = s2 * np.linalg.inv(jac.T @ jac)
        err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        err = np.full(4, np.nan)
    params = LorentzianParams(float(q[0]), float(q[1] * xs + x0), float(q[2] * xs), float(q[3]))
    sig = {
        "amplitude": float(err[0]),
        "center": float(err[1] * xs),
        "fwhm": float(err[2] * xs),
        "offset": float(err[3]),
    }
    return FitResult(params, sig, it, cost)


def average_fwhm(fwhms) -> Quantity:
    """Mean of per-shot fitted widths with the standard error of the mean."""
    vals = np.array([q.value if isinstance(q, Quantity) else float(q) for q in fwhms])
    if vals.size == 0:
        raise DegenerateDataError("no widths to average")
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return Quantity.of(float(np.mean(vals)), se, Unit.HZ)


@dataclass(frozen=True)
class FinesseResult:
    fwhm: Quantity
    fsr: Quantity
    finesse: Quantity
    kappa_over_2pi: Quantity
    total_loss_ppm: Quantity

    def to_dict(self) -> dict:
        return {
            "fwhm": self.fwhm.to_dict(),
            "fsr": self.fsr.to_dict(),
            "finesse": self.finesse.to_dict(),
            "kappa_over_2pi": self.kappa_over_2pi.to_dict(),
            "total_loss_ppm": self.total_loss_ppm.to_dict(),
        }


def finesse_from_fwhm(fwhm: Quantity, fsr: Quantity) -> FinesseResult:
    """F = fsr / fwhm, kappa/2pi = fwhm/2 and total round-trip loss 2pi/F."""
    if not (0.0 < fwhm.value < fsr.value):
        raise DomainError(f"need 0 < fwhm < fsr, got fwhm={fwhm.value!r}, fsr={fsr.value!r}")
    fin = propagate(lambda w, f: f / w, [fwhm, fsr], Unit.ONE)
    loss = propagate(lambda w, f: 2.0 * math.pi * w / f * 1e6, [fwhm, fsr], Unit.PPM)
    # exact central values; propagate only supplies the sigmas
    fin = Quantity.of(fsr.value / fwhm.value, fin.sigma, Unit.ONE)
    loss = Quantity.of(2.0 * math.pi * 1e6 / fin.value, loss.sigma, Unit.PPM)
    kappa = Quantity.of(fwhm.value / 2.0, fwhm.sigma / 2.0, Unit.HZ)
    return FinesseResult(fwhm, fsr, fin, kappa, loss)


@dataclass(frozen=True)
class BirefringenceVerdict:
    max_pairwise_diff: Quantity
    combined_sigma: float
    distinguishable: bool
    pair: tuple = ()

    def to_dict(self) -> dict:
        return {
            "max_pairwise_diff": self.max_pairwise_diff.to_dict(),
            "combined_sigma": Quantity.of(self.combined_sigma, 0.0, self.max_pairwise_diff.unit).to_dict(),
            "distinguishable": self.distinguishable,
            "pair": list(self.pair),
        }


def compare_polarizations(fits) -> BirefringenceVerdict:
    """Largest pairwise FWHM difference among polarizations.

    ``fits`` is a sequence of ``(label, fwhm Quantity)``. The pair is
    distinguishable if its difference exceeds twice the combined sigma.
    """
    fits = list(fits)
    if len(fits) < 2:
        raise DomainError("need at least two polarizations to compare")
    units = {q.unit for _, q in fits}
    if len(units) != 1:
        raise DomainError(f"mixed units in polarization comparison: {sorted(u.value for u in units)}")
    best = None
    for (la, qa), (lb, qb) in itertools.combinations(fits, 2):
        d = abs(qa.value - qb.value)
        if best is None or d > best[0]:
            best = (d, la, lb, math.hypot(qa.sigma, qb.sigma))
    d, la, lb, comb = best
    return BirefringenceVerdict(
        Quantity.of(d, comb, fits[0][1].unit), comb, bool(d > 2.0 * comb), (la, lb)
    )


def read_trace_csv(path) -> TransmissionTrace:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DomainError(f"{path}: empty trace file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] not in _KIND_FROM_HEADER or header[1] != "value":
        raise DomainError(
            f"{path}: header must be '<detuning_hz|sweep_hz|time_s>,value', got {','.join(header)}"
        )
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows[1:] if r], dtype=float)
    except (ValueError, IndexError) as exc:
        raise DomainError(f"{path}: malformed row ({exc})") from exc
    if data.size == 0:
        raise DomainError(f"{path}: no samples")
    return TransmissionTrace(data[:, 0], data[:, 1], _KIND_FROM_HEADER[header[0]], {"source": path.name})


def write_trace_csv(trace: TransmissionTrace, path, fit: LorentzianParams | None = None) -> None:
    """Write a trace as CSV; with ``fit`` a third ``fit`` column is added."""
    header = [CSV_HEADERS[trace.abscissa_kind], "value"]
    curve = None
    if fit is not None:
        header.append("fit")
        curve = lorentzian_eval(fit, trace.abscissa)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, (xv, yv) in enumerate(zip(trace.abscissa, trace.values)):
            row = [repr(float(xv)), repr(float(yv))]
            if curve is not None:
                row.append(repr(float(curve[i])))
            w.writerow(row)
