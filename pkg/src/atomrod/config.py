"""Flat key=value configuration files."""

from __future__ import annotations

from .cell_energy import SpringModel
from .errors import ValidationError


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse 'key = value' lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {ln}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip().lower()
        if not key:
            raise ValidationError(f"line {ln}: empty key")
        if key in out:
            raise ValidationError(f"line {ln}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


_MODEL_KEYS = {"k1", "k2", "penalty_strength", "penalty_radius", "surface_springs"}
_TRUTHY = {"1", "on", "true", "yes"}
_FALSY = {"0", "off", "false", "no"}


def model_from_config(text: str) -> SpringModel:
    cfg = parse_flat_config(text)
    unknown = set(cfg) - _MODEL_KEYS
    if unknown:
        raise ValidationError(f"unknown model keys: {sorted(unknown)}")
    kwargs: dict = {}
    for key, value in cfg.items():
        if key == "surface_springs":
            low = value.lower()
            if low in _TRUTHY:
                kwargs[key] = True
            elif low in _FALSY:
                kwargs[key] = False
            else:
                raise ValidationError(f"model key {key!r}: expected on/off, got {value!r}")
            continue
        try:
            kwargs[key] = float(value)
        except ValueError:
            raise ValidationError(f"model key {key!r}: not a number: {value!r}")
    return SpringModel(**kwargs)


def read_model_config(path) -> SpringModel:
    with open(path) as fh:
        return model_from_config(fh.read())
