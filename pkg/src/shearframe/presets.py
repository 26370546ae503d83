"""Named parameter sets shipped with the package."""

from __future__ import annotations

from .geometry import FrameSpec

DESK = {"lambda": 2.0, "t": 0.5, "rho": 1.0, "eps": 0.3, "eps0": 0.1, "j0": 0, "j_coarse": 0, "j_fine": 2, "grid_n": 256}

_VARIANT_OF = {
    "nonstat-default": "non-stationary",
    "quasi-stationary": "quasi-stationary",
    "cone-cut": "cone-cut",
    "glued": "glued",
    "shannon": "shannon",
    "framelet-stationary": "framelet-stationary",
    "framelet-non-stationary": "framelet-non-stationary",
}

# Band widened past the admissible range: scale bands reach their own 2 pi translates.
COUNTEREXAMPLE = "widened-counterexample"

PRESETS = tuple(_VARIANT_OF) + (COUNTEREXAMPLE,)
VALID_PRESETS = tuple(_VARIANT_OF)


def preset_config(name: str) -> dict:
    if name == COUNTEREXAMPLE:
        return dict(DESK, variant="quasi-stationary", rho=1.5)
    if name not in _VARIANT_OF:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return dict(DESK, variant=_VARIANT_OF[name])


def preset(name: str, **overrides) -> FrameSpec:
    """FrameSpec of a named preset; keyword overrides use config field names."""
    cfg = preset_config(name)
    cfg.update(overrides)
    return FrameSpec.from_dict(cfg, check=name != COUNTEREXAMPLE)


def default_spec(**overrides) -> FrameSpec:
    return preset("nonstat-default", **overrides)


__all__ = ["PRESETS", "VALID_PRESETS", "COUNTEREXAMPLE", "DESK", "preset", "preset_config", "default_spec"]
