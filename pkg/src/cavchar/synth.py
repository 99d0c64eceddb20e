"""Synthetic measurement campaigns from a ground-truth cavity.

Given (L, R) and a seed, :func:`synthesize` writes a measurement file whose
three laser readings sit on the ideal mode ladder, quantized to the
wavelength-meter grid, together with seeded noisy transmission traces.
Running the analysis on the output should recover the ground truth.

Ground-truth config keys (all optional except ``length_m``/``radius_m``)::

    length_m, radius_m          cavity geometry
    wlm_grid_hz                 readout quantization step (10 MHz)
    reference_wavelength_m      where the reference laser sits (782 nm)
    finesse: [ {wavelength_m, fwhm_hz, shots, polarizations, noise_sigma,
                fwhm_jitter_hz, points, half_span_hz} ]
    mirrors: [ {wavelength_m, count, mean_ppm, std_ppm, systematic_fraction} ]
    mech: {chirp, modes, hwhm_hz, reference_hz, min_prominence, noise_sigma}
    atomic_line, pzt_calibration   copied through unchanged
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import CavcharError
from .geometry import _check_stable
from .lineshape import LorentzianParams, synth_trace, write_trace_csv
from .measurement import InputError, fmt, num, write_json
from .mech import PztCalibration, simulate_sweep
from .quantity import C_LIGHT, Quantity, Unit
from .twolaser import spectrum_from_geometry

MEASUREMENT_NAME = "measurement.json"
GROUND_TRUTH_NAME = "ground_truth.json"


def ideal_lines(length, radius, reference_wavelength=782e-9, offset_hz=0.0):
    """Unquantized (ref TEM00 n, probe TEM00 n+1, probe TEM10 n+1) in Hz."""
    fsr, trans = spectrum_from_geometry(length, radius)
    n = round(C_LIGHT / reference_wavelength / fsr)
    ref = n * fsr + offset_hz
    return ref, ref + fsr, ref + fsr + trans


def quantize(hz, grid):
    return round(hz / grid) * grid


def _child_seeds(seed, n):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)]


def synthesize(config: dict, seed: int, out_dir) -> Path:
    """Write ``measurement.json``, traces and ``ground_truth.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        length, radius = num(config["length_m"]), num(config["radius_m"])
    except KeyError as exc:
        raise InputError(f"ground-truth config lacks {exc.args[0]!r}", code="E_SCHEMA") from exc
    try:
        _check_stable(length, radius)
    except CavcharError as exc:
        raise InputError(str(exc), code="E_UNSTABLE") from exc

    rng = np.random.default_rng(seed)
    grid = num(config.get("wlm_grid_hz", 10e6))
    ref_wl = num(config.get("reference_wavelength_m", 782e-9))
    # random absolute position so the quantization error differs per seed
    offset = float(rng.uniform(0.0, 100.0 * grid))
    nu = [quantize(v, grid) for v in ideal_lines(length, radius, ref_wl, offset)]
    labels = ("reference", "probe-TEM00", "probe-TEM10")
    modes = ((0, 0), (1, 0), (1, 1))
    meas = {
        "schema_version": 1,
        "lasers": [
            {
                "label": lab,
                "frequency_hz": fmt(v),
                "sigma_hz": fmt(grid),
                "longitudinal_offset": m[0],
                "transverse_order": m[1],
            }
            for lab, v, m in zip(labels, nu, modes)
        ],
    }
    fsr, trans = spectrum_from_geometry(length, radius)
    truth = {"length_m": fmt(length), "radius_m": fmt(radius), "fsr_hz": fmt(fsr), "trans_hz": fmt(trans), "seed": seed}

    traces = []
    for block in config.get("finesse", []):
        lam = num(block.get("wavelength_m", 780.24e-9))
        fwhm = num(block.get("fwhm_hz", 37.1e6))
        shots = int(block.get("shots", 8))
        pols = block.get("polarizations", ["unpolarized"])
        noise = num(block.get("noise_sigma", 0.02))
        jitter = num(block.get("fwhm_jitter_hz", 0.0))
        points = int(block.get("points", 1001))
        half = num(block.get("half_span_hz", 4.0 * fwhm))
        for pol in pols:
            seeds = _child_seeds(int(rng.integers(2**63)), shots)
            for k, s in enumerate(seeds):
                w = fwhm + jitter * float(rng.normal()) if jitter else fwhm
                tr = synth_trace(LorentzianParams(1.0, 0.0, w, 0.0), (-half, half, points), noise, s)
                name = f"finesse_{lam * 1e9:.2f}nm_{pol}_{k:03d}.csv"
                write_trace_csv(tr, out / name)
                traces.append({"path": name, "role": "finesse", "wavelength_m": fmt(lam), "polarization": pol})
        truth.setdefault("fwhm_hz", {})[fmt(lam)] = fmt(fwhm)

    mirrors = []
    for block in config.get("mirrors", []):
        if "count" in block:
            vals = rng.normal(num(block["mean_ppm"]), num(block["std_ppm"]), int(block["count"]))
            entry = {"wavelength_m": fmt(num(block["wavelength_m"])), "transmittances_ppm": [fmt(v) for v in vals]}
            if "systematic_fraction" in block:
                entry["systematic_fraction"] = fmt(num(block["systematic_fraction"]))
            mirrors.append(entry)
        else:
            mirrors.append(block)
    if mirrors:
        meas["mirrors"] = mirrors

    for key in ("atomic_line", "pzt_calibration", "kappa_over_2pi_hz", "wavelength_m"):
        if key in config:
            meas[key] = config[key]

    mech = config.get("mech")
    if mech is not None:
        from .pipeline import chirp_from_config, modes_from_config

        mech = dict(mech)
        noise = num(mech.pop("noise_sigma", 0.0))
        spec = chirp_from_config(mech)
        pzt = config.get("pzt_calibration", {})
        cal = PztCalibration(
            Quantity.of(num(pzt.get("volts_per_fsr", 770.0)), 0.0, Unit.V),
            Quantity.of(fsr, 0.0, Unit.HZ),
        )
        hwhm = num(mech.get("hwhm_hz", config.get("kappa_over_2pi_hz", 18.55e6)))
        tr = simulate_sweep(spec, modes_from_config(mech), cal, hwhm)
        if noise > 0:
            tr.values = np.clip(tr.values + rng.normal(0.0, noise, len(tr)), 0.0, 1.0)
        write_trace_csv(tr, out / "chirp.csv")
        traces.append({"path": "chirp.csv", "role": "chirp"})
        meas["mech"] = mech
    if traces:
        meas["traces"] = traces

    write_json(truth, out / GROUND_TRUTH_NAME)
    path = out / MEASUREMENT_NAME
    write_json(meas, path)
    return path
