"""File formats: atlas, pyramid and mask directories, configs, PGM and raw images.

Directory layouts share one convention: a ``manifest.json`` (sorted keys,
fixed indentation, so identical inputs give identical bytes) plus one
little-endian row-major binary per array.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import CONFIG_FIELDS, FrameSpec, SpecError, SubbandIndex
from .generators import GeneratorGrid, SystemAtlas
from .transform import CoefficientPyramid, continuum_factor

MANIFEST = "manifest.json"
REAL_DTYPE = "<f8"
COMPLEX_DTYPE = "<c16"
FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Unreadable or invalid configuration; the message names the file and line."""


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_manifest(out_dir: Path, manifest: dict) -> Path:
    path = out_dir / MANIFEST
    path.write_text(dump_json(manifest))
    return path


def _read_manifest(directory: str | Path, kind: str) -> tuple[Path, dict]:
    d = Path(directory)
    path = d / MANIFEST
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no manifest found")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if manifest.get("format") != kind:
        raise ConfigError(f"{path}: expected a {kind} manifest, found {manifest.get('format')!r}")
    return d, manifest


def _write_array(path: Path, arr: np.ndarray, dtype: str) -> None:
    np.ascontiguousarray(arr, dtype=np.dtype(dtype)).tofile(path)


def _read_array(path: Path, dtype: str, shape: tuple[int, ...]) -> np.ndarray:
    data = np.fromfile(path, dtype=np.dtype(dtype))
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: expected {int(np.prod(shape))} values, found {data.size}")
    return data.reshape(shape).astype(np.dtype(dtype).newbyteorder("="))


# ------------------------------------------------------------ configs


@dataclass
class RunConfig:
    """Parsed config file: the frame, optional tolerance overrides and worker cap."""

    spec: FrameSpec
    tolerances: dict[str, float] = field(default_factory=dict)
    threads: int | None = None
    source: str = ""


def _key_line(text: str, key: str) -> int:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _field_of(message: str, text: str) -> str | None:
    """The config key named earliest in ``message`` among those present in ``text``."""
    best, where = None, len(message) + 1
    for key in CONFIG_FIELDS + ("preset",):
        m = re.search(r"\b" + re.escape(key) + r"\b", message)
        if m and m.start() < where and f'"{key}"' in text:
            best, where = key, m.start()
    return best


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Build a RunConfig from JSON text.

    Recognized keys: the frame fields, ``preset`` (a shipped preset used as the
    base), ``tolerances`` (mapping) and ``threads``.
    """
    from .presets import COUNTEREXAMPLE, preset_config

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}:1: config must be a JSON object")
    raw = dict(raw)
    tolerances = raw.pop("tolerances", {}) or {}
    threads = raw.pop("threads", None)
    name = raw.pop("preset", None)
    check = True
    cfg = {}
    if name is not None:
        try:
            cfg = preset_config(str(name))
        except KeyError as exc:
            raise ConfigError(f"{source}:{_key_line(text, 'preset')}: {exc.args[0]}") from exc
        check = name != COUNTEREXAMPLE
    cfg.update(raw)
    if "check" in cfg:
        check = bool(cfg.pop("check"))
    try:
        spec = FrameSpec.from_dict(cfg, check=check)
    except (SpecError, ValueError, TypeError) as exc:
        key = _field_of(str(exc), text)
        line = _key_line(text, key) if key else 1
        raise ConfigError(f"{source}:{line}: {exc}") from exc
    if not isinstance(tolerances, dict) or not all(isinstance(v, (int, float)) for v in tolerances.values()):
        raise ConfigError(f"{source}:{_key_line(text, 'tolerances')}: tolerances must map names to numbers")
    if threads is not None and (not isinstance(threads, int) or threads < 1):
        raise ConfigError(f"{source}:{_key_line(text, 'threads')}: threads must be a positive integer")
    return RunConfig(spec, {k: float(v) for k, v in tolerances.items()}, threads, source)


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: {exc.strerror or exc}") from exc
    return parse_config(text, str(p))


# ------------------------------------------------------------ atlases


def _entry(g: GeneratorGrid, role: str, file: str) -> dict:
    return {"name": g.label, "role": role, "file": file, "index": g.index.to_dict(), "norm_sq": g.norm_sq}


def save_atlas(atlas: SystemAtlas, out_dir: str | Path, tolerances: dict | None = None) -> Path:
    """Write one binary per generator grid plus the manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for role, g in [("lowpass", atlas.lowpass)] + [("subband", s) for s in atlas.subbands]:
        fname = f"{g.label}.f64"
        _write_array(out / fname, g.values, REAL_DTYPE)
        entries.append(_entry(g, role, fname))
    manifest = {
        "format": "shearframe-atlas", "version": FORMAT_VERSION, "dtype": REAL_DTYPE, "order": "C",
        "grid_n": atlas.n, "spec": atlas.spec.to_dict(), "check": atlas.spec.check,
        "tolerances": dict(tolerances or {}), "entries": entries,
    }
    return _write_manifest(out, manifest)


def load_atlas(directory: str | Path) -> SystemAtlas:
    d, m = _read_manifest(directory, "shearframe-atlas")
    spec = FrameSpec.from_dict(m["spec"], check=bool(m.get("check", True)))
    n = int(m["grid_n"])
    low, subs = None, []
    for e in m["entries"]:
        g = GeneratorGrid(SubbandIndex.from_dict(e["index"]), _read_array(d / e["file"], m["dtype"], (n, n)), e["name"])
        if e["role"] == "lowpass":
            low = g
        else:
            subs.append(g)
    if low is None:
        raise ConfigError(f"{d / MANIFEST}: no lowpass entry")
    return SystemAtlas(spec, low, subs)


def atlas_tolerances(directory: str | Path) -> dict[str, float]:
    _, m = _read_manifest(directory, "shearframe-atlas")
    return dict(m.get("tolerances", {}))


# ------------------------------------------------------------ pyramids


def save_pyramid(pyramid: CoefficientPyramid, out_dir: str | Path, spec: FrameSpec | None = None) -> Path:
    """Coefficient blocks as complex128 binaries; the manifest records factors and continuum constants."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    blocks = [("lowpass", pyramid.lowpass_index, pyramid.lowpass)]
    blocks += [(name, pyramid.indices[name], b) for name, b in pyramid.blocks.items()]
    entries = []
    for name, idx, b in blocks:
        key = idx.name if name == "lowpass" and idx is not None else name
        fname = f"{name}.c128"
        _write_array(out / fname, b, COMPLEX_DTYPE)
        entries.append({
            "name": name, "file": fname, "shape": list(b.shape),
            "index": None if idx is None else idx.to_dict(),
            "decimation": pyramid.factor(key) if pyramid.mode == "decimated" else 1,
            "continuum_factor": None if idx is None else continuum_factor(idx),
        })
    manifest = {
        "format": "shearframe-pyramid", "version": FORMAT_VERSION, "dtype": COMPLEX_DTYPE, "order": "C",
        "mode": pyramid.mode, "n": pyramid.n, "spec": None if spec is None else spec.to_dict(),
        "entries": entries,
    }
    return _write_manifest(out, manifest)


def load_pyramid(directory: str | Path) -> CoefficientPyramid:
    d, m = _read_manifest(directory, "shearframe-pyramid")
    low, low_idx, blocks, indices, factors = None, None, {}, {}, {}
    for e in m["entries"]:
        arr = _read_array(d / e["file"], m["dtype"], tuple(e["shape"]))
        idx = None if e["index"] is None else SubbandIndex.from_dict(e["index"])
        if e["name"] == "lowpass":
            low, low_idx = arr, idx
        else:
            blocks[e["name"]] = arr
            indices[e["name"]] = idx
        if m["mode"] == "decimated":
            # analysis keys the lowpass factor by its generator label
            key = idx.name if e["name"] == "lowpass" and idx is not None else e["name"]
            factors[key] = int(e["decimation"])
    return CoefficientPyramid(m["mode"], int(m["n"]), low, blocks, indices, factors, low_idx)


# ------------------------------------------------------------ masks


def save_masks(masks: dict, spec: FrameSpec, out_dir: str | Path, report_dict: dict | None = None) -> Path:
    """Filter bank masks per scale, same binary and manifest convention as atlases."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for j in sorted(masks):
        for mk in masks[j]:
            fname = f"{mk.name}.f64"
            _write_array(out / fname, mk.values, REAL_DTYPE)
            entries.append({"name": mk.name, "file": fname, "j": mk.j, "ell": mk.ell, "tag": mk.tag})
    n = next(iter(masks.values()))[0].values.shape[0] if masks else spec.grid_n
    manifest = {
        "format": "shearframe-masks", "version": FORMAT_VERSION, "dtype": REAL_DTYPE, "order": "C",
        "grid_n": n, "spec": spec.to_dict(), "entries": entries,
    }
    if report_dict is not None:
        (out / "pr_report.json").write_text(dump_json(report_dict))
    return _write_manifest(out, manifest)


def load_masks(directory: str | Path) -> dict:
    from .filterbank import MaskGrid

    d, m = _read_manifest(directory, "shearframe-masks")
    n = int(m["grid_n"])
    out: dict[int, list] = {}
    for e in m["entries"]:
        vals = _read_array(d / e["file"], m["dtype"], (n, n))
        out.setdefault(int(e["j"]), []).append(MaskGrid(e["tag"], int(e["j"]), int(e["ell"]), vals))
    return out


# ------------------------------------------------------------ images


def _pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """First ``count`` header integers and the offset just past the single whitespace after them."""
    vals, pos = [], 2
    while len(vals) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ValueError("malformed PGM header")
        vals.append(int(data[start:pos]))
    return vals, pos + 1


def read_pgm(path: str | Path) -> tuple[np.ndarray, int]:
    """Grayscale image as float64 (rows, cols) plus its maxval; binary P5 and ASCII P2."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise ValueError(f"{path}: not a PGM file (magic {magic!r})")
    (w, h, maxval), off = _pgm_tokens(data, 3)
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: maxval {maxval} out of range")
    if magic == b"P2":
        img = np.array(data[off:].split()[: w * h], dtype=np.float64)
    else:
        dt = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        img = np.frombuffer(data, dtype=dt, count=w * h, offset=off).astype(np.float64)
    if img.size != w * h:
        raise ValueError(f"{path}: truncated pixel data")
    return img.reshape(h, w), maxval


def write_pgm(path: str | Path, img: np.ndarray, maxval: int = 255) -> None:
    """Binary PGM; values are rounded and clipped to [0, maxval]."""
    if not 0 < maxval < 65536:
        raise ValueError(f"maxval {maxval} out of range")
    arr = np.clip(np.rint(np.asarray(img, dtype=np.float64)), 0, maxval)
    dt = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(arr.astype(dt).tobytes())


def raw_sidecar(path: str | Path) -> Path:
    return Path(str(path) + ".json")


def read_raw(path: str | Path) -> np.ndarray:
    """Square little-endian float64 image; side length from the sidecar header {"n": n}."""
    side = raw_sidecar(path)
    if not side.is_file():
        raise FileNotFoundError(f"{side}: raw images need a sidecar header with the side length")
    n = int(json.loads(side.read_text())["n"])
    return _read_array(Path(path), REAL_DTYPE, (n, n))


def write_raw(path: str | Path, img: np.ndarray) -> None:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"raw images must be square, got {arr.shape}")
    _write_array(Path(path), arr, REAL_DTYPE)
    raw_sidecar(path).write_text(dump_json({"n": arr.shape[0]}))


def read_image(path: str | Path) -> tuple[np.ndarray, int | None]:
    """PGM by extension, otherwise raw float64; returns (image, pgm maxval or None)."""
    if str(path).lower().endswith(".pgm"):
        return read_pgm(path)
    return read_raw(path), None


def write_image(path: str | Path, img: np.ndarray, maxval: int | None = None) -> None:
    if str(path).lower().endswith(".pgm"):
        write_pgm(path, img, maxval or 255)
    else:
        write_raw(path, img)


# ------------------------------------------------------------ tiling rasters


def _picture(values: np.ndarray) -> np.ndarray:
    """Grid (axis 0 = xi_1) to picture orientation: xi_1 left to right, xi_2 bottom to top."""
    return values.T[::-1]


def tiling_sum(atlas: SystemAtlas) -> np.ndarray:
    """round(255 * sum of squared generators) as uint8; flat 255 for a partition of unity."""
    return np.clip(np.rint(255 * _picture(atlas.squared_sum())), 0, 255).astype(np.uint8)


def tiling_argmax(atlas: SystemAtlas) -> np.ndarray:
    """Gray level of the dominant generator at each grid point.

    Levels are spread with a fixed stride so neighbouring subbands get distinct shades.
    """
    stack = np.stack([g.values for g in atlas.all_grids()])
    label = np.argmax(stack, axis=0)
    count = stack.shape[0]
    stride = max(1, int(round(count * 0.618)))
    while np.gcd(stride, count) != 1:
        stride += 1
    levels = np.rint(np.linspace(0, 255, count)).astype(np.uint8)
    order = (np.arange(count) * stride) % count  # lowpass stays black
    return _picture(levels[order][label])


def generator_raster(g: GeneratorGrid) -> np.ndarray:
    """round(255 h) of one generator grid."""
    return np.clip(np.rint(255 * _picture(g.values)), 0, 255).astype(np.uint8)


__all__ = [
    "ConfigError", "RunConfig", "parse_config", "load_config", "save_atlas", "load_atlas", "atlas_tolerances",
    "save_pyramid", "load_pyramid", "save_masks", "load_masks", "read_pgm", "write_pgm", "read_raw",
    "write_raw", "read_image", "write_image", "tiling_sum", "tiling_argmax", "generator_raster", "dump_json",
]
