"""Measurement-file schema and loading.

A measurement file is JSON. Numbers may be given either as JSON numbers or
as decimal strings (the form written by this package, which keeps golden
files free of binary float drift). Trace paths are relative to the
measurement file.

Minimal example::

    {
      "lasers": [
        {"label": "782", "frequency_hz": "383239570000000", "longitudinal_offset": 0, "transverse_order": 0},
        {"label": "780", "frequency_hz": "384227770000000", "longitudinal_offset": 1, "transverse_order": 0},
        {"label": "780-TEM10", "frequency_hz": "384245040000000", "longitudinal_offset": 1, "transverse_order": 1}
      ]
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import CavcharError
from .quantity import Quantity, Unit
from .twolaser import LaserLine, default_wlm_sigma

SCHEMA_VERSION = 1


class InputError(CavcharError):
    code = "E_INPUT"


_NUM = {
    "anyOf": [
        {"type": "number"},
        {"type": "string", "pattern": r"^\s*[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\s*$"},
    ]
}
_POS_INT = {"type": "integer", "minimum": 0}

MEASUREMENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "lasers": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "label": {"type": "string"},
                    "frequency_hz": _NUM,
                    "sigma_hz": _NUM,
                    "longitudinal_offset": _POS_INT,
                    "transverse_order": _POS_INT,
                },
                "required": ["label", "frequency_hz", "longitudinal_offset", "transverse_order"],
                "additionalProperties": False,
            },
        },
        "wavelength_m": _NUM,
        "fsr_hz": _NUM,
        "traces": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "path": {"type": "string"},
                    "role": {"enum": ["finesse", "chirp"]},
                    "wavelength_m": _NUM,
                    "polarization": {"type": "string"},
                },
                "required": ["path", "role"],
                "additionalProperties": False,
            },
        },
        "fwhm": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "wavelength_m": _NUM,
                    "polarization": {"type": "string"},
                    "fwhm_hz": _NUM,
                    "sigma_hz": _NUM,
                },
                "required": ["wavelength_m", "fwhm_hz"],
                "additionalProperties": False,
            },
        },
        "mirrors": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "wavelength_m": _NUM,
                    "transmittances_ppm": {"type": "array", "items": _NUM, "minItems": 1},
                    "transmittance_ppm": _NUM,
                    "transmittance_sigma_ppm": _NUM,
                    "systematic_fraction": _NUM,
                    "finesse": _NUM,
                    "finesse_sigma": _NUM,
                },
                "required": ["wavelength_m"],
                "additionalProperties": False,
            },
        },
        "atomic_line": {
            "type": "object",
            "properties": {
                "label": {"type": "string"},
                "gamma_over_2pi_hz": _NUM,
                "gamma_sigma_hz": _NUM,
                "wavelength_m": _NUM,
            },
            "required": ["gamma_over_2pi_hz", "wavelength_m"],
            "additionalProperties": False,
        },
        "kappa_over_2pi_hz": _NUM,
        "kappa_sigma_hz": _NUM,
        "pzt_calibration": {
            "type": "object",
            "properties": {"volts_per_fsr": _NUM, "volts_sigma": _NUM, "fsr_hz": _NUM},
            "additionalProperties": False,
        },
        "mech": {
            "type": "object",
            "properties": {
                "chirp": {
                    "type": "object",
                    "properties": {
                        "V0_v": _NUM,
                        "f_i_hz": _NUM,
                        "f_f_hz": _NUM,
                        "duration_s": _NUM,
                        "sample_rate_hz": _NUM,
                    },
                    "additionalProperties": False,
                },
                "modes": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "frequency_hz": _NUM,
                            "quality_Q": _NUM,
                            "axial_coupling": _NUM,
                        },
                        "required": ["frequency_hz", "quality_Q"],
                        "additionalProperties": False,
                    },
                },
                "hwhm_hz": _NUM,
                "reference_hz": {"type": "array", "items": _NUM},
                "min_prominence": _NUM,
                "match_tolerance_hz": _NUM,
                "normalization": {
                    "type": "object",
                    "properties": {"lower": _NUM, "upper": _NUM},
                    "required": ["lower", "upper"],
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def num(x) -> float:
    return float(x)


def fmt(x) -> str:
    """Decimal string that round-trips exactly through ``float``."""
    return repr(float(x))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def load_json(path) -> tuple[dict, bytes]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}", code="E_NO_INPUT") from exc
    try:
        return json.loads(raw), raw
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})", code="E_JSON") from exc


@dataclass
class MeasurementFile:
    data: dict
    base_dir: Path
    hashes: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "MeasurementFile":
        path = Path(path)
        data, raw = load_json(path)
        try:
            jsonschema.validate(data, MEASUREMENT_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise InputError(f"{path.name}: schema violation at {where}: {exc.message}", code="E_SCHEMA") from exc
        mf = cls(data, path.parent.resolve(), {path.name: sha256_bytes(raw)})
        for t in data.get("traces", []):
            p = mf.resolve(t["path"])
            if not p.is_file():
                raise InputError(f"referenced trace file {t['path']!r} not found", code="E_NO_TRACE")
            mf.hashes[t["path"]] = sha256_bytes(p.read_bytes())
        return mf

    def resolve(self, rel) -> Path:
        return (self.base_dir / rel).resolve()

    def lasers(self) -> list[LaserLine]:
        out = []
        for rec in self.data.get("lasers", []):
            sigma = num(rec["sigma_hz"]) if "sigma_hz" in rec else default_wlm_sigma()
            out.append(
                LaserLine(
                    rec["label"],
                    Quantity.of(num(rec["frequency_hz"]), sigma, Unit.HZ),
                    int(rec["longitudinal_offset"]),
                    int(rec["transverse_order"]),
                )
            )
        return out

    def traces(self, role: str) -> list[dict]:
        return [t for t in self.data.get("traces", []) if t["role"] == role]

    def get(self, key, default=None):
        return self.data.get(key, default)


def write_json(obj, path=None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
