"""JSON config loading: filter specs, project configs, output provenance headers."""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import jsonschema

from tafa import __version__
from tafa.filter_core import FilterSpec, SpecError
from tafa.spectral import LossSpec

FILTER_SPEC_SCHEMA = {
    "type": "object",
    "required": ["mode", "num_taps", "tap_interval_s", "clock_period_s", "band_edges_hz"],
    "properties": {
        "mode": {"enum": ["lowpass", "bandpass-target"]},
        "num_taps": {"type": "integer", "minimum": 1},
        "tap_interval_s": {"type": "number", "exclusiveMinimum": 0},
        "clock_period_s": {"type": "number", "exclusiveMinimum": 0},
        "band_edges_hz": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                          "minItems": 1, "maxItems": 3},
        "attenuation_db": {"type": "number"},
        "amplitude": {"type": "number", "exclusiveMinimum": 0},
        "loss": {
            "oneOf": [
                {"enum": ["full_band", "band_notch"]},
                {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["full_band", "band_notch"]},
                        "grid_points": {"type": "integer", "minimum": 2},
                        "normalize": {"type": "boolean"},
                        "printed_sign": {"type": "boolean"},
                    },
                    "additionalProperties": False,
                },
            ]
        },
    },
    "additionalProperties": False,
}

PROJECT_SCHEMA = {
    "type": "object",
    "properties": {
        "tuner": {"type": "object"},
        "hardware": {"type": "object"},
        "stimulus": {"type": "object", "required": ["kind", "num_samples"]},
        "surrogate": {"type": "object"},
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Malformed or schema-violating config; the message carries file and line."""


def _line_of(text: str, path) -> int:
    """Best-effort line number of the JSON element addressed by ``path``."""
    pos = 0
    for key in path:
        if isinstance(key, str):
            m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
            if m is None:
                break
            pos = m.start()
    return text.count("\n", 0, pos) + 1


def load_json(path, schema: dict | None = None) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if schema is not None:
        validator = jsonschema.Draft202012Validator(schema)
        errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
        if errors:
            err = errors[0]
            where = "/".join(str(p) for p in err.absolute_path) or "<root>"
            line = _line_of(text, list(err.absolute_path))
            raise ConfigError(f"{path}:{line}: {where}: {err.message}")
    return data


def load_filter_spec(path) -> tuple[FilterSpec, dict]:
    """Parse and validate a filter spec file; returns the spec and the raw dict."""
    data = load_json(path, FILTER_SPEC_SCHEMA)
    text = Path(path).read_text()
    try:
        spec = FilterSpec(
            mode=data["mode"],
            num_taps=data["num_taps"],
            tap_interval=data["tap_interval_s"],
            clock_period=data["clock_period_s"],
            band_edges=data["band_edges_hz"],
            attenuation_db=data.get("attenuation_db"),
        )
    except SpecError as exc:
        raise ConfigError(f"{path}:{_line_of(text, ['band_edges_hz'])}: {exc}") from None
    return spec, data


def loss_from_spec(spec: FilterSpec, selector=None) -> LossSpec:
    """Loss for a spec; ``selector`` is a kind name or a dict of LossSpec options."""
    if selector is None:
        selector = "full_band" if spec.mode == "lowpass" else "band_notch"
    opts = {"kind": selector} if isinstance(selector, str) else dict(selector)
    kind = opts.pop("kind")
    if kind == "full_band":
        return LossSpec("full_band", B=spec.nyquist, **opts)
    if spec.mode != "bandpass-target":
        raise ConfigError("band_notch loss needs a bandpass-target spec with [B1, f0, B2] band edges")
    b1, f0, b2 = spec.band_edges
    return LossSpec("band_notch", B1=b1, f0=f0, B2=b2, **opts)


def config_hash(*parts) -> str:
    blob = json.dumps(parts, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance(seed, *config_parts) -> dict:
    return {"tool": f"tafa {__version__}", "config_hash": config_hash(*config_parts), "seed": seed}


def header_lines(meta: dict) -> list[str]:
    return [f"{k}={meta[k]}" for k in sorted(meta)]
