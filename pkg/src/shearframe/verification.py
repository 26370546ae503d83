"""Numerical certification of the tight-frame conditions on frequency grids."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import NONSTATIONARY, FrameSpec, FrequencyGrid, SubbandIndex
from .generators import (
    Construction, PointSet, ShannonSystem, SystemAtlas, build_atlas, construction, grid_points,
    undilated,
)

SMOOTH_TOL = 1e-10
OVERLAP_TOL = 1e-14
SAMPLES_PER_PERIOD = 64


@dataclass
class ConditionResult:
    max_abs_deviation: float
    worst_point: tuple
    tolerance: float
    status: str = ""  # "pass", "fail" or "vacuous"

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.max_abs_deviation <= self.tolerance else "fail"

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "vacuous")

    def to_dict(self) -> dict:
        return {
            "max_abs_deviation": float(self.max_abs_deviation),
            "worst_point": [int(v) if isinstance(v, (int, np.integer)) else float(v) for v in self.worst_point],
            "pass": self.passed,
            "status": self.status,
            "tolerance": float(self.tolerance),
        }


@dataclass
class VerificationReport:
    """Condition name -> result; the report passes when every entry does."""

    entries: dict[str, ConditionResult] = field(default_factory=dict)

    def add(self, name: str, result: ConditionResult) -> None:
        self.entries[name] = result

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        for k, v in other.entries.items():
            self.entries[k] = v
        return self

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.entries.values())

    def __getitem__(self, name: str) -> ConditionResult:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def worst(self) -> float:
        return max((r.max_abs_deviation for r in self.entries.values()), default=0.0)

    def to_dict(self) -> dict:
        return {k: self.entries[k].to_dict() for k in sorted(self.entries)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def table(self) -> str:
        rows = [f"{'condition':<44} {'max dev':>11} {'tol':>9}  status"]
        for k in sorted(self.entries):
            r = self.entries[k]
            rows.append(f"{k:<44} {r.max_abs_deviation:11.3e} {r.tolerance:9.1e}  {r.status}")
        return "\n".join(rows)


def default_tolerance(spec: FrameSpec) -> float:
    return 0.0 if spec.variant == "shannon" else SMOOTH_TOL


def _worst(dev: np.ndarray, grid_n: int | None = None) -> tuple[float, tuple]:
    if dev.size == 0:
        return 0.0, ()
    flat = int(np.argmax(dev))
    pos = np.unravel_index(flat, dev.shape)
    if grid_n is not None:
        # report the integer frequency index k in [-N/2, N/2)
        pos = tuple(int(p) - grid_n // 2 for p in pos)
    return float(dev.ravel()[flat]), tuple(int(p) for p in pos)


def boundary_mask(spec: FrameSpec, grid: FrequencyGrid) -> np.ndarray:
    """Samples excluded from a.e. identities: indicator ties for Shannon, none otherwise."""
    sys, pts = grid_points(spec, grid)
    if isinstance(sys, ShannonSystem):
        return sys.boundary_mask(pts)
    return np.zeros((grid.n, grid.n), dtype=bool)


# ------------------------------------------------------------ partition


def check_partition(atlas: SystemAtlas, tol: float | None = None) -> ConditionResult:
    """max |lowpass^2 + sum subband^2 - 1| over the grid, boundary samples excluded."""
    tol = default_tolerance(atlas.spec) if tol is None else tol
    dev = np.abs(atlas.squared_sum() - 1.0)
    dev[boundary_mask(atlas.spec, atlas.grid)] = 0.0
    val, pos = _worst(dev, atlas.n)
    return ConditionResult(val, pos, tol)


# ------------------------------------------------------------ non-overlap


def tile_radius(spec: FrameSpec, index: SubbandIndex) -> float:
    """Max-norm radius of a box containing the support of the composed tile."""
    p, lam = spec.params, spec.lam
    over = 2 * p.eps0 if spec.variant in NONSTATIONARY else 0.0
    if index.kind == "lowpass":
        # lowpass of scale J is supported where the bands below J live
        return lam ** (2 * index.j - 2) * max(p.rho, 1.0) * np.pi * (1 + over) * (1 + 1e-9)
    return lam ** (2 * index.j) * p.rho * np.pi * (1 + over / lam ** (2 * index.j)) * (1 + 1e-9)


def _generator_box(spec: FrameSpec, index: SubbandIndex) -> np.ndarray:
    """Per-axis half-widths of a box containing the support of the undilated generator."""
    r = tile_radius(spec, index)
    return np.abs(index.matrix) @ np.array([r, r])


def generator_overlap(spec: FrameSpec, index: SubbandIndex, sys: Construction | None = None,
                      per_period: int = SAMPLES_PER_PERIOD) -> tuple[float, tuple]:
    """max |h(eta) h(eta + 2 pi k)| over sampled eta and every k != 0 that can overlap.

    h is sampled on a lattice of spacing 2 pi / per_period covering its support,
    so each shift by 2 pi k is an exact index offset.
    """
    sys = sys or construction(spec)
    half = _generator_box(spec, index)
    step = 2 * np.pi / per_period
    m = np.ceil(half / step).astype(int) + 1
    e1 = step * np.arange(-m[0], m[0] + 1)
    e2 = step * np.arange(-m[1], m[1] + 1)
    g1, g2 = np.meshgrid(e1, e2, indexing="ij")
    h = np.abs(undilated(spec, index, g1, g2, sys))
    kmax = np.floor(2 * m * step / (2 * np.pi)).astype(int) + 1
    worst, where = 0.0, ()
    for k1 in range(0, kmax[0] + 1):
        for k2 in range(-kmax[1], kmax[1] + 1):
            if k1 == 0 and k2 <= 0:
                continue  # k and -k give the same products
            s1, s2 = k1 * per_period, k2 * per_period
            if s1 >= h.shape[0] or abs(s2) >= h.shape[1]:
                continue
            a = h[: h.shape[0] - s1, max(0, -s2): h.shape[1] - max(0, s2)]
            b = h[s1:, max(0, s2): h.shape[1] + min(0, s2)]
            val = float((a * b).max()) if a.size else 0.0
            if val > worst:
                worst, where = val, (k1, k2)
    return worst, where


def check_nonoverlap(atlas_or_spec, tol: float = OVERLAP_TOL) -> VerificationReport:
    """Per-generator non-overlap report (one entry per lowpass/subband)."""
    spec = atlas_or_spec.spec if isinstance(atlas_or_spec, SystemAtlas) else atlas_or_spec
    from .geometry import all_subbands, lowpass_index

    sys = construction(spec)
    rep = VerificationReport()
    for idx in [lowpass_index(spec)] + all_subbands(spec):
        val, k = generator_overlap(spec, idx, sys)
        rep.add(f"nonoverlap/{idx.name}", ConditionResult(val, k, tol))
    return rep


# ------------------------------------------------------------ cascade / limit


def check_cascade(atlas: SystemAtlas, tol: float | None = None) -> VerificationReport:
    """Per scale: |phi^{j+1}|^2 - |phi^j|^2 - sum of that scale's subbands^2."""
    spec = atlas.spec
    tol = default_tolerance(spec) if tol is None else tol
    sys, pts = grid_points(spec, atlas.grid)
    mask = boundary_mask(spec, atlas.grid)
    rep = VerificationReport()
    for j in range(spec.j_coarse, spec.j_fine):
        band = sum(g.values ** 2 for g in atlas.scale(j))
        dev = np.abs(sys.lowpass_at(j + 1, pts) ** 2 - sys.lowpass_at(j, pts) ** 2 - band)
        dev[mask] = 0.0
        val, pos = _worst(dev, atlas.n)
        rep.add(f"cascade/j{j}", ConditionResult(val, pos, tol))
    return rep


def default_probe_points(count: int = 64, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    fixed = np.array([[0.0, 0.0], [np.pi, np.pi], [-np.pi, np.pi], [np.pi, 0.0], [-np.pi, -np.pi]])
    return np.vstack([fixed, rng.uniform(-np.pi, np.pi, size=(count, 2))])


def check_lowpass_limit(spec: FrameSpec, probe_points=None, extra: int = 3,
                        tol: float | None = None) -> ConditionResult:
    """|phi^j(N^j xi)|^2 = 1 for j = J1 .. J1 + extra at every probe point."""
    tol = default_tolerance(spec) if tol is None else tol
    pts_arr = default_probe_points() if probe_points is None else np.atleast_2d(np.asarray(probe_points, float))
    sys = construction(spec)
    pts = PointSet(pts_arr[:, 0], pts_arr[:, 1])
    worst, where = 0.0, ()
    for j in range(spec.j_fine, spec.j_fine + extra + 1):
        dev = np.abs(sys.lowpass_at(j, pts) ** 2 - 1.0)
        i = int(np.argmax(dev))
        if dev[i] > worst or not where:
            worst, where = float(dev[i]), (j, i)
    return ConditionResult(worst, where, tol)


# ------------------------------------------------------------ general brackets


def _shift_admissible(matrix: np.ndarray, k: tuple[int, int]) -> bool:
    v = matrix @ np.asarray(k, dtype=float)
    return bool(np.all(np.abs(v - np.round(v)) < 1e-9))


def bracket_sums(spec: FrameSpec, n: int = 32, kmax: int | None = None) -> dict[tuple[int, int], np.ndarray]:
    """Signed bracket sums over the cell grid for every shift k with |k_i| <= kmax.

    For each generator with dilation U only shifts with U k integral enter.
    The sums are taken over composed tiles: T(xi) T(xi + 2 pi k).
    """
    from .geometry import all_subbands, lowpass_index

    if n > 64:
        raise ValueError("the bracket test enumerates shifts explicitly; use n <= 64")
    sys = construction(spec)
    gens = [lowpass_index(spec)] + all_subbands(spec)
    if kmax is None:
        reach = max(tile_radius(spec, g) for g in gens)
        kmax = int(math.ceil((reach + np.pi) / (2 * np.pi)))
    big = np.arange(-n // 2 - n * kmax, n // 2 + n * kmax) * (2 * np.pi / n)
    g1, g2 = np.meshgrid(big, big, indexing="ij")
    pts = PointSet(g1, g2)
    if hasattr(sys, "prepare"):
        sys.prepare(pts)
    vals = [(g, sys.value(g, pts)) for g in gens]
    c0 = n * kmax
    out = {}
    for k1 in range(-kmax, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            acc = np.zeros((n, n))
            for g, v in vals:
                if not _shift_admissible(g.matrix, (k1, k2)):
                    continue
                here = v[c0:c0 + n, c0:c0 + n]
                there = v[c0 + k1 * n: c0 + k1 * n + n, c0 + k2 * n: c0 + k2 * n + n]
                acc += here * there
            out[(k1, k2)] = acc
    return out


def check_general_characterization(atlas_small: SystemAtlas | FrameSpec, n: int | None = None,
                                   tol: float | None = None) -> VerificationReport:
    """Bracket identities: sum = 1 for k = 0 and 0 for every other admissible shift."""
    spec = atlas_small.spec if isinstance(atlas_small, SystemAtlas) else atlas_small
    if n is None:
        n = atlas_small.n if isinstance(atlas_small, SystemAtlas) else min(spec.grid_n, 32)
    tol = default_tolerance(spec) if tol is None else tol
    sums = bracket_sums(spec, n)
    mask = boundary_mask(spec, FrequencyGrid(n))
    rep = VerificationReport()
    worst, where = 0.0, ()
    for k, s in sums.items():
        target = 1.0 if k == (0, 0) else 0.0
        dev = np.abs(s - target)
        dev[mask] = 0.0
        val, pos = _worst(dev, n)
        if k == (0, 0):
            rep.add("brackets/k=0", ConditionResult(val, pos, tol))
        elif val > worst or not where:
            worst, where = val, k + pos
    rep.add("brackets/k!=0", ConditionResult(worst, where, max(tol, OVERLAP_TOL)))
    return rep


# ------------------------------------------------------------ smoothness


@dataclass
class ProbeResult:
    point: float
    steps: np.ndarray
    mismatch: np.ndarray  # |f(x+h) - 2 f(x) + f(x-h)| / h
    order: float  # fitted decay order of the second difference
    smooth: bool


def smoothness_probe(f: Callable[[np.ndarray], np.ndarray], x0: float,
                     steps: Sequence[float] | None = None, floor: float = 1e-12) -> ProbeResult:
    """Detect jumps in value or slope of a 1D function at x0.

    For C^2 behaviour the second difference shrinks like h^2 (mismatch ~ h);
    a slope jump leaves the mismatch constant and a value jump makes it grow.
    Mismatches under ``floor`` count as converged (flat or linear pieces).
    """
    hs = np.asarray(steps if steps is not None else 1e-2 * 0.5 ** np.arange(7), dtype=float)
    x = np.concatenate([x0 + hs, [x0], x0 - hs])
    fx = np.asarray(f(x), dtype=float)
    m = len(hs)
    second = np.abs(fx[:m] - 2 * fx[m] + fx[m + 1:])
    mismatch = second / hs
    ok = second > floor
    if ok.sum() >= 2:
        slope, _ = np.polyfit(np.log(hs[ok]), np.log(second[ok]), 1)
        order = float(slope)
    else:
        order = math.inf
    smooth = bool(np.all(mismatch <= floor) or (order >= 1.5 and mismatch[-1] < mismatch[0]))
    return ProbeResult(x0, hs, mismatch, order, smooth)


def seam_path(spec: FrameSpec, j: int, radius: float, side: int = -1) -> Callable[[np.ndarray], tuple]:
    """Path crossing the seam |xi_2| = |xi_1| at max-norm ``radius``.

    ``side=-1`` crosses the anti-diagonal through (radius, -radius).
    Parameter s < 0 lies in the horizontal cone, s > 0 in the vertical one.
    """

    def path(s):
        s = np.asarray(s, dtype=float)
        return np.full_like(s, radius), side * radius * (1 + s)

    return path


def seam_probe(spec: FrameSpec, index: SubbandIndex, radius: float, side: int = -1,
               steps: Sequence[float] | None = None) -> ProbeResult:
    """Smoothness of one seam element along a path crossing the diagonal."""
    sys = construction(spec)
    path = seam_path(spec, index.j, radius, side)

    def f(s):
        x1, x2 = path(s)
        return sys.tile(index, PointSet(x1, x2))

    return smoothness_probe(f, 0.0, steps)


# ------------------------------------------------------------ driver


TOLERANCE_KEYS = ("partition", "nonoverlap", "cascade", "lowpass_limit", "brackets")


def verify_atlas(atlas: SystemAtlas, bracket_n: int = 32, include_brackets: bool = True,
                 tolerances: dict[str, float] | None = None) -> VerificationReport:
    """All grid conditions; ``tolerances`` overrides defaults by key (see TOLERANCE_KEYS)."""
    tols = dict(tolerances or {})
    unknown = set(tols) - set(TOLERANCE_KEYS)
    if unknown:
        raise ValueError(f"unknown tolerance keys: {', '.join(sorted(unknown))}")
    spec = atlas.spec
    rep = VerificationReport()
    rep.add("partition", check_partition(atlas, tols.get("partition")))
    rep.merge(check_nonoverlap(atlas, tols.get("nonoverlap", OVERLAP_TOL)))
    rep.merge(check_cascade(atlas, tols.get("cascade")))
    rep.add("lowpass_limit", check_lowpass_limit(spec, tol=tols.get("lowpass_limit")))
    if include_brackets:
        small = spec.replace(grid_n=min(bracket_n, spec.grid_n))
        rep.merge(check_general_characterization(small, n=small.grid_n, tol=tols.get("brackets")))
    return rep


__all__ = [
    "ConditionResult", "VerificationReport", "check_partition", "check_nonoverlap",
    "generator_overlap", "check_cascade", "check_lowpass_limit", "check_general_characterization",
    "bracket_sums", "smoothness_probe", "seam_probe", "ProbeResult", "verify_atlas",
    "boundary_mask", "default_probe_points", "tile_radius", "build_atlas", "TOLERANCE_KEYS",
]
