"""Report fragments built from measurement files.

Each ``*_fragment`` function returns a plain JSON-ready dict with one
top-level section plus ``provenance``. Fragments are merged into a full
report by :func:`merge_fragments`.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import numpy as np

from . import __version__
from .budget import MirrorSet, mirror_stats, outcoupling, total_loss_from_finesse
from .coupling import AtomicLine, g0_from_mode_volume, g0_max, strong_coupling
from .errors import CavcharError, ModeAssignmentError
from .lineshape import (
    AxisKind,
    average_fwhm,
    compare_polarizations,
    finesse_from_fwhm,
    fit_lorentzian,
    read_trace_csv,
    write_trace_csv,
)
from .measurement import InputError, MeasurementFile, fmt, num, sha256_bytes
from .mech import (
    PZT_VOLTS_PER_FSR,
    SWEEP,
    ChirpSpec,
    MechMode,
    PztCalibration,
    detect_dips,
    match_reference,
    normalize_trace,
    simulate_sweep,
)
from .quantity import QUADRATURE, Quantity, Unit
from .twolaser import ModePairing, reduce_fsr, reduce_lines, solve_geometry

TOOL = "cavchar"
SPREAD_SEM = "sem"
SPREAD_STD = "std"


class ComputationError(CavcharError):
    code = "E_COMPUTATION"


def provenance(hashes: dict, propagation: str = QUADRATURE, **extra) -> dict:
    p = {"tool": TOOL, "version": __version__, "propagation": propagation, "inputs": dict(sorted(hashes.items()))}
    p.update(extra)
    return p


# --- laser lines -----------------------------------------------------------

def select_lines(lasers, need_transverse=True):
    """Pick reference TEM00 (n), probe TEM00 (n+1) and probe TEM10 (n+1)."""
    by_mode = defaultdict(list)
    for line in lasers:
        by_mode[line.mode].append(line)
    for mode, lines in by_mode.items():
        if len(lines) > 1:
            labels = ", ".join(repr(l.label) for l in lines)
            raise InputError(f"several lines claim mode {mode}: {labels}", code="E_DUPLICATE_MODE")
    wanted = [((0, 0), "E_MISSING_REFERENCE", "missing reference TEM00 line (offset 0, order 0)"),
              ((1, 0), "E_MISSING_PROBE", "missing adjacent TEM00 probe (offset 1, order 0)")]
    if need_transverse:
        wanted.append(((1, 1), "E_MISSING_TRANSVERSE", "missing transverse probe (offset 1, order 1)"))
    out = []
    for mode, code, msg in wanted:
        if mode not in by_mode:
            raise InputError(msg, code=code)
        out.append(by_mode[mode][0])
    return out


def spectra_from_file(mf: MeasurementFile, propagation=QUADRATURE):
    ref, p00, p10 = select_lines(mf.lasers())
    try:
        return reduce_lines(ref, p00, p10, propagation), (ref, p00, p10)
    except ModeAssignmentError as exc:
        raise InputError(str(exc), code=exc.code) from exc


def fsr_from_file(mf: MeasurementFile, propagation=QUADRATURE) -> Quantity:
    if "fsr_hz" in mf.data:
        return Quantity.of(num(mf.data["fsr_hz"]), 0.0, Unit.HZ)
    ref, p00 = select_lines(mf.lasers(), need_transverse=False)
    try:
        return reduce_fsr(ModePairing(ref, p00), propagation)
    except ModeAssignmentError as exc:
        raise InputError(str(exc), code=exc.code) from exc


def geometry_from_file(mf: MeasurementFile, propagation=QUADRATURE):
    (fsr, trans), lines = spectra_from_file(mf, propagation)
    if "wavelength_m" in mf.data:
        lam = Quantity.of(num(mf.data["wavelength_m"]), 0.0, Unit.M)
    else:
        lam = lines[1].wavelength
    return solve_geometry(fsr, trans, lam), fsr, trans, lines


def geometry_fragment(mf: MeasurementFile, propagation=QUADRATURE) -> dict:
    geo, fsr, trans, lines = geometry_from_file(mf, propagation)
    return {
        "geometry": {
            "parameters": geo.to_dict(),
            "fsr": fsr.to_dict(),
            "trans": trans.to_dict(),
            "lasers": [
                {
                    "label": l.label,
                    "frequency": l.frequency.to_dict(),
                    "longitudinal_offset": l.longitudinal_offset,
                    "transverse_order": l.transverse_order,
                }
                for l in lines
            ],
        },
        "provenance": provenance(mf.hashes, propagation),
    }


# --- line shape --------------------------------------------------------------

def fit_trace_files(paths, names=None):
    """Fit each CSV; returns (results, errors) keyed by display name."""
    results, errors = [], []
    for i, path in enumerate(paths):
        name = names[i] if names else Path(path).name
        try:
            trace = read_trace_csv(path)
            if trace.abscissa_kind is not AxisKind.DETUNING:
                raise InputError(f"{name}: expected a detuning_hz trace", code="E_AXIS")
            results.append((name, fit_lorentzian(trace), trace))
        except InputError:
            raise
        except CavcharError as exc:
            errors.append({"source": name, "code": exc.code, "message": str(exc)})
    return results, errors


def _width_of_group(fits, spread):
    if len(fits) == 1:
        return fits[0]
    vals = np.array([q.value for q in fits])
    if spread == SPREAD_STD:
        return Quantity.of(float(np.mean(vals)), float(np.std(vals, ddof=1)), Unit.HZ)
    return average_fwhm(fits)


def fit_fragment(paths, fsr: Quantity | None = None, curves_dir=None, spread=SPREAD_SEM) -> tuple[dict, bool]:
    """Fit a batch of traces. Returns (fragment, ok)."""
    hashes = {Path(p).name: sha256_bytes(Path(p).read_bytes()) for p in paths}
    results, errors = fit_trace_files(paths)
    section = {"fits": [dict(source=n, **r.to_dict()) for n, r, _ in results], "errors": errors}
    if results:
        mean = _width_of_group([r.fwhm for _, r, _ in results], spread)
        section["fwhm_mean"] = mean.to_dict()
        section["shots"] = len(results)
        if fsr is not None:
            section["finesse"] = finesse_from_fwhm(mean, fsr).to_dict()
    if curves_dir is not None:
        Path(curves_dir).mkdir(parents=True, exist_ok=True)
        for name, r, trace in results:
            write_trace_csv(trace, Path(curves_dir) / f"{Path(name).stem}_fit.csv", r.params)
    return {"fit": section, "provenance": provenance(hashes)}, not errors and bool(results)


def _wl_key(lam) -> float:
    # group wavelengths on a 0.01 nm grid; 0.0 marks "not given"
    return 0.0 if lam is None else round(num(lam) * 1e11) / 1e11


def collect_widths(mf: MeasurementFile):
    """Per-shot FWHM values grouped by wavelength then polarization.

    Returns ``(groups, errors, summary_keys)``; ``summary_keys`` holds the
    wavelengths that include pre-averaged ``fwhm`` records.
    """
    groups = defaultdict(lambda: defaultdict(list))
    summary_keys = set()
    traces = mf.traces("finesse")
    paths = [mf.resolve(t["path"]) for t in traces]
    results, errors = fit_trace_files(paths, [t["path"] for t in traces])
    by_name = {n: r for n, r, _ in results}
    for t in traces:
        if t["path"] not in by_name:
            continue
        lam = _wl_key(t.get("wavelength_m"))
        pol = t.get("polarization", "unpolarized")
        groups[lam][pol].append(by_name[t["path"]].fwhm)
    for rec in mf.get("fwhm", []):
        q = Quantity.of(num(rec["fwhm_hz"]), num(rec.get("sigma_hz", 0.0)), Unit.HZ)
        key = _wl_key(rec["wavelength_m"])
        groups[key][rec.get("polarization", "unpolarized")].append(q)
        summary_keys.add(key)
    return groups, errors, summary_keys


def finesse_results(mf: MeasurementFile, propagation=QUADRATURE, spread=SPREAD_SEM):
    groups, errors, summary_keys = collect_widths(mf)
    if not groups:
        return [], errors
    fsr = fsr_from_file(mf, propagation)
    rows = []
    for lam in sorted(groups):
        pols = groups[lam]
        shots = [q for qs in pols.values() for q in qs]
        width = _width_of_group(shots, spread)
        if lam in summary_keys and len(shots) > 1:
            # summary records are already averages of one measurement; their
            # quoted sigma is a floor, not something to divide by sqrt(n)
            floor = float(np.mean([q.sigma for q in shots]))
            width = Quantity.of(width.value, max(width.sigma, floor), Unit.HZ)
        try:
            fin = finesse_from_fwhm(width, fsr)
        except CavcharError as exc:
            raise ComputationError(str(exc), code=exc.code) from exc
        per_pol = [(p, _width_of_group(qs, SPREAD_STD)) for p, qs in sorted(pols.items())]
        verdict = compare_polarizations(per_pol) if len(per_pol) >= 2 else None
        rows.append((lam, len(shots), fin, per_pol, verdict))
    return rows, errors


def finesse_fragment(mf: MeasurementFile, propagation=QUADRATURE, spread=SPREAD_SEM) -> tuple[dict, bool]:
    rows, errors = finesse_results(mf, propagation, spread)
    out = []
    for lam, n, fin, per_pol, verdict in rows:
        entry = {
            "wavelength_m": None if lam == 0.0 else fmt(lam),
            "shots": n,
            "result": fin.to_dict(),
            "polarizations": {p: q.to_dict() for p, q in per_pol},
        }
        if verdict is not None:
            entry["birefringence"] = verdict.to_dict()
        out.append(entry)
    frag = {
        "finesse": {"by_wavelength": out, "errors": errors, "spread": spread},
        "provenance": provenance(mf.hashes, propagation),
    }
    return frag, not errors


def _finesse_near(rows, lam, tol):
    best = None
    for row in rows:
        d = abs(row[0] - lam)
        if d <= tol and (best is None or d < best[0]):
            best = (d, row)
    return None if best is None else best[1]


# --- budget --------------------------------------------------------------------

def budget_fragment(mf: MeasurementFile, propagation=QUADRATURE, spread=SPREAD_SEM) -> dict:
    entries = mf.get("mirrors", [])
    if not entries:
        raise InputError("no 'mirrors' section in measurement file", code="E_MISSING_MIRRORS")
    rows = None
    out = []
    for e in entries:
        lam = num(e["wavelength_m"])
        if "transmittances_ppm" in e:
            ms = MirrorSet(
                [num(v) for v in e["transmittances_ppm"]],
                Quantity.of(lam, 0.0, Unit.M),
                num(e.get("systematic_fraction", 0.0)),
            )
            t = mirror_stats(ms)
        elif "transmittance_ppm" in e:
            t = Quantity.of(num(e["transmittance_ppm"]), num(e.get("transmittance_sigma_ppm", 0.0)), Unit.PPM)
        else:
            raise InputError(f"mirror entry at {lam} m has no transmittance", code="E_MISSING_MIRRORS")
        if "finesse" in e:
            fin = Quantity.of(num(e["finesse"]), num(e.get("finesse_sigma", 0.0)), Unit.ONE)
        else:
            if rows is None:
                rows, _ = finesse_results(mf, propagation, spread)
            row = _finesse_near(rows, lam, 0.5e-9)
            if row is None:
                raise InputError(f"no finesse data within 0.5 nm of {lam} m", code="E_MISSING_FINESSE")
            fin = row[2].finesse
        try:
            res = outcoupling(t, total_loss_from_finesse(fin))
        except CavcharError as exc:
            raise ComputationError(str(exc), code=exc.code) from exc
        out.append({"wavelength_m": fmt(lam), "finesse": fin.to_dict(), **res.to_dict()})
    return {"budget": out, "provenance": provenance(mf.hashes, propagation)}


# --- coupling ------------------------------------------------------------------

def atomic_line_from_file(mf: MeasurementFile) -> AtomicLine:
    rec = mf.get("atomic_line")
    if rec is None:
        return AtomicLine.rb87_d2()
    return AtomicLine(
        Quantity.of(num(rec["gamma_over_2pi_hz"]), num(rec.get("gamma_sigma_hz", 0.0)), Unit.HZ),
        Quantity.of(num(rec["wavelength_m"]), 0.0, Unit.M),
        rec.get("label", ""),
    )


def kappa_from_file(mf: MeasurementFile, lam: float, propagation=QUADRATURE, spread=SPREAD_SEM) -> Quantity:
    if "kappa_over_2pi_hz" in mf.data:
        return Quantity.of(num(mf.data["kappa_over_2pi_hz"]), num(mf.data.get("kappa_sigma_hz", 0.0)), Unit.HZ)
    rows, _ = finesse_results(mf, propagation, spread)
    row = _finesse_near(rows, lam, 2e-9)
    if row is None:
        raise InputError(f"no linewidth data within 2 nm of {lam} m for kappa", code="E_MISSING_KAPPA")
    return row[2].kappa_over_2pi


def coupling_fragment(mf: MeasurementFile, propagation=QUADRATURE, spread=SPREAD_SEM) -> dict:
    geo, *_ = geometry_from_file(mf, propagation)
    line = atomic_line_from_file(mf)
    kappa = kappa_from_file(mf, line.wavelength.value, propagation, spread)
    try:
        g0 = g0_max(geo.length_L, geo.radius_R, line)
        res = strong_coupling(g0, kappa, line)
        check = g0_from_mode_volume(geo.mode_volume_Vc, line)
    except CavcharError as exc:
        raise ComputationError(str(exc), code=exc.code) from exc
    return {
        "coupling": {
            **res.to_dict(),
            "atomic_line": line.to_dict(),
            "g0_mode_volume_check": check.to_dict(),
        },
        "provenance": provenance(mf.hashes, propagation),
    }


# --- mechanics -----------------------------------------------------------------

def chirp_from_config(mech: dict) -> ChirpSpec:
    c = mech.get("chirp", {})
    return ChirpSpec(
        Quantity.of(num(c.get("V0_v", 10e-3)), 0.0, Unit.V),
        num(c.get("f_i_hz", 0.0)),
        num(c.get("f_f_hz", 90e3)),
        num(c.get("duration_s", 0.5)),
        num(c.get("sample_rate_hz", 400e3)),
    )


def modes_from_config(mech: dict):
    return [
        MechMode(num(m["frequency_hz"]), num(m["quality_Q"]), num(m.get("axial_coupling", 1.0)))
        for m in mech.get("modes", [])
    ]


def calibration_from_file(mf: MeasurementFile, propagation=QUADRATURE) -> PztCalibration:
    rec = mf.get("pzt_calibration", {})
    volts = Quantity.of(num(rec.get("volts_per_fsr", PZT_VOLTS_PER_FSR)), num(rec.get("volts_sigma", 0.0)), Unit.V)
    if "fsr_hz" in rec:
        fsr = Quantity.of(num(rec["fsr_hz"]), 0.0, Unit.HZ)
    else:
        fsr = fsr_from_file(mf, propagation)
    return PztCalibration(volts, fsr)


def chirp_sim(mf: MeasurementFile, axis=SWEEP, propagation=QUADRATURE):
    mech = mf.get("mech")
    if mech is None:
        raise InputError("no 'mech' section in input", code="E_MISSING_MECH")
    if "hwhm_hz" in mech:
        hwhm = num(mech["hwhm_hz"])
    elif "kappa_over_2pi_hz" in mf.data:
        hwhm = num(mf.data["kappa_over_2pi_hz"])
    else:
        raise InputError("need mech.hwhm_hz or kappa_over_2pi_hz for the cavity half-width", code="E_MISSING_HWHM")
    try:
        spec = chirp_from_config(mech)
        modes = modes_from_config(mech)
    except CavcharError as exc:
        raise InputError(str(exc), code=exc.code) from exc
    cal = calibration_from_file(mf, propagation)
    return simulate_sweep(spec, modes, cal, hwhm, axis), spec, modes, cal, hwhm


def chirp_sim_fragment(mf: MeasurementFile, out_csv, axis=SWEEP, propagation=QUADRATURE) -> dict:
    trace, spec, modes, cal, hwhm = chirp_sim(mf, axis, propagation)
    write_trace_csv(trace, out_csv)
    return {
        "chirp_sim": {
            "axis": axis,
            "samples": len(trace),
            "hwhm": Quantity.of(hwhm, 0.0, Unit.HZ).to_dict(),
            "drive_detuning_amplitude": Quantity.of(
                spec.V0.value * cal.fsr.value / cal.volts_per_fsr.value, 0.0, Unit.HZ
            ).to_dict(),
            "modes": [
                {"frequency_hz": fmt(m.frequency), "quality_Q": fmt(m.quality_Q), "axial_coupling": fmt(m.axial_coupling)}
                for m in modes
            ],
            "trace_sha256": sha256_bytes(Path(out_csv).read_bytes()),
        },
        "provenance": provenance(mf.hashes, propagation, axis=axis),
    }


def dips_fragment(trace_path, hashes, min_prominence=0.02, reference=None, tolerance=2e3,
                  normalization=None, axis=SWEEP) -> dict:
    trace = read_trace_csv(trace_path)
    if trace.abscissa_kind is not AxisKind.SWEEP_FREQUENCY:
        raise InputError("dip detection needs a sweep_hz trace", code="E_AXIS")
    if normalization is not None:
        trace = normalize_trace(trace, *normalization)
    report = detect_dips(trace, min_prominence)
    section = {"min_prominence": fmt(min_prominence), **report.to_dict()}
    if reference:
        section["reference_match"] = [
            {
                "measured": Quantity.of(m, 0.0, Unit.HZ).to_dict(),
                "reference": Quantity.of(r, 0.0, Unit.HZ).to_dict(),
                "difference": Quantity.of(d, 0.0, Unit.HZ).to_dict(),
                "within_tolerance": ok,
            }
            for m, r, d, ok in match_reference(report.frequencies, reference, tolerance)
        ]
        section["match_tolerance"] = Quantity.of(tolerance, 0.0, Unit.HZ).to_dict()
    return {"mech": section, "provenance": provenance(hashes, axis=axis)}


def dips_from_file(mf: MeasurementFile, min_prominence=None, axis=SWEEP) -> dict:
    chirps = mf.traces("chirp")
    if not chirps:
        raise InputError("no trace with role 'chirp' in measurement file", code="E_MISSING_CHIRP")
    mech = mf.get("mech", {})
    norm = mech.get("normalization")
    return dips_fragment(
        mf.resolve(chirps[0]["path"]),
        mf.hashes,
        num(mech.get("min_prominence", 0.02)) if min_prominence is None else min_prominence,
        [num(v) for v in mech.get("reference_hz", [])],
        num(mech.get("match_tolerance_hz", 2e3)),
        None if norm is None else (num(norm["lower"]), num(norm["upper"])),
        axis,
    )


# --- report --------------------------------------------------------------------

def merge_fragments(fragments) -> dict:
    """Combine fragments; sections must not collide."""
    report = {}
    prov = {"tool": TOOL, "version": __version__, "inputs": {}, "sections": []}
    modes = set()
    for frag in fragments:
        for key, val in frag.items():
            if key == "provenance":
                prov["inputs"].update(val.get("inputs", {}))
                if "propagation" in val:
                    modes.add(val["propagation"])
                if "axis" in val:
                    prov["axis"] = val["axis"]
                continue
            if key in report:
                raise InputError(f"section {key!r} appears in more than one fragment", code="E_MERGE")
            report[key] = val
            prov["sections"].append(key)
    prov["inputs"] = dict(sorted(prov["inputs"].items()))
    prov["sections"] = sorted(prov["sections"])
    if len(modes) > 1:
        raise InputError(f"fragments mix propagation modes {sorted(modes)}", code="E_MERGE")
    prov["propagation"] = modes.pop() if modes else QUADRATURE
    report["provenance"] = prov
    return report


def full_report(mf: MeasurementFile, propagation=QUADRATURE, spread=SPREAD_SEM, axis=SWEEP) -> tuple[dict, bool]:
    """Run every analysis the measurement file has data for."""
    frags = []
    ok = True
    has_lasers = bool(mf.get("lasers"))
    if has_lasers:
        frags.append(geometry_fragment(mf, propagation))
    if mf.traces("finesse") or mf.get("fwhm"):
        frag, good = finesse_fragment(mf, propagation, spread)
        ok &= good
        frags.append(frag)
    if mf.get("mirrors"):
        frags.append(budget_fragment(mf, propagation, spread))
    if has_lasers and ("kappa_over_2pi_hz" in mf.data or mf.traces("finesse") or mf.get("fwhm")):
        frags.append(coupling_fragment(mf, propagation, spread))
    if mf.traces("chirp"):
        frags.append(dips_from_file(mf, axis=axis))
    return merge_fragments(frags), ok

