"""Frequency-domain generators of every construction, sampled at dilated arguments.

All evaluation goes through *composed* values: for a subband with dilation U
the stored sample at frequency xi is h(U xi).  Each construction knows how to
produce these composed values at arbitrary point arrays, so the same code
serves grids, enlarged grids and scattered probe points.

Conventions
-----------
* ``r = xi_2 / xi_1`` is the horizontal slope; it is +-inf on the xi_2 axis
  and at the origin, where every angular window vanishes.
* The vertical cone is the horizontal formula evaluated at the swapped point.
* For indicator and hard-cut systems the diagonal belongs to the horizontal
  cone; see ``horizontal_dominates``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import windows as W
from .geometry import (
    FRAMELET, NONSTATIONARY, STATIONARY, FrameSpec, FrequencyGrid, SubbandIndex,
    all_subbands, apply_matrix, contributing_scales, lowpass_index, shear_bound,
)

# ------------------------------------------------------------------ points


def slope(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """num/den with +-inf where den == 0 (inf at 0/0 as well)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / den
    return np.where(den == 0, np.inf, r)


def horizontal_dominates(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Cone split for indicator-type systems.

    A coordinate's effective size is |x| nudged up for x >= 0 and down for
    x < 0, which matches the half-open cell [-pi, pi).  Ties go horizontal.
    """
    a1, a2 = np.abs(x1), np.abs(x2)
    return (a2 < a1) | ((a2 == a1) & ((x2 >= 0) <= (x1 >= 0)))


def signed_band(u: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """u in [lo, hi) or u in [-hi, -lo)."""
    return ((u >= lo) & (u < hi)) | ((u >= -hi) & (u < -lo))


class PointSet:
    """Frequency points (x1, x2) with memoized intermediate arrays."""

    def __init__(self, x1, x2):
        self.x1 = np.asarray(x1, dtype=np.float64)
        self.x2 = np.asarray(x2, dtype=np.float64)
        if self.x1.shape != self.x2.shape:
            raise ValueError("coordinate arrays must have equal shapes")
        self._memo: dict = {}

    @classmethod
    def from_grid(cls, grid: FrequencyGrid) -> "PointSet":
        return cls(*grid.mesh())

    @property
    def shape(self) -> tuple:
        return self.x1.shape

    @property
    def max_abs(self) -> float:
        if self.x1.size == 0:
            return 0.0
        return float(max(np.abs(self.x1).max(), np.abs(self.x2).max()))

    def memo(self, key, fn: Callable[[], np.ndarray]) -> np.ndarray:
        try:
            return self._memo[key]
        except KeyError:
            val = fn()
            self._memo[key] = val
            return val

    def coords(self, cone: str) -> tuple[np.ndarray, np.ndarray]:
        return (self.x1, self.x2) if cone == "h" else (self.x2, self.x1)

    def ratio(self, cone: str) -> np.ndarray:
        u, v = self.coords(cone)
        return self.memo(("ratio", cone), lambda: slope(v, u))


# ------------------------------------------------------------ constructions


class Construction:
    """Composed generator values for one frame configuration."""

    def __init__(self, spec: FrameSpec):
        self.spec = spec
        self.p = spec.params
        self.lam = spec.lam

    # composed lowpass phi^j(N^j xi) of the nested sequence
    def lowpass_at(self, j: int, pts: PointSet) -> np.ndarray:
        raise NotImplementedError

    def lowpass(self, pts: PointSet) -> np.ndarray:
        return self.lowpass_at(self.spec.j_coarse, pts)

    def tile(self, index: SubbandIndex, pts: PointSet) -> np.ndarray:
        raise NotImplementedError

    def value(self, index: SubbandIndex, pts: PointSet) -> np.ndarray:
        if index.kind == "lowpass":
            return self.lowpass_at(index.j, pts)
        return self.tile(index, pts)

    def prepare(self, pts: PointSet) -> None:
        """Fill shared caches before parallel evaluation."""

    # helpers shared by the smooth families
    def _tensor_alpha(self, pts: PointSet, j: int) -> np.ndarray:
        s = self.lam ** (-2 * j)
        return pts.memo(("phi", j), lambda: W.alpha(self.p, s * pts.x1) * W.alpha(self.p, s * pts.x2))

    def _omega_stationary(self, pts: PointSet, j: int) -> np.ndarray:
        """omega(lam^-2j xi) with omega^2 = phi(lam^-2 .)^2 - phi^2, summed without cancellation."""

        def build():
            s = self.lam ** (-2 * j)
            y1, y2 = s * pts.x1, s * pts.x2
            outer1 = W.alpha(self.p, y1 / self.lam ** 2)
            a2 = W.alpha(self.p, y2)
            b1, b2 = W.beta(self.p, y1), W.beta(self.p, y2)
            return np.sqrt((outer1 * b2) ** 2 + (a2 * b1) ** 2)

        return pts.memo(("omega", j), build)

    def _radial(self, pts: PointSet, j: int, cone: str) -> np.ndarray:
        u, _ = pts.coords(cone)
        return pts.memo(("beta", j, cone), lambda: W.beta(self.p, self.lam ** (-2 * j) * u))


class ShannonSystem(Construction):
    """Indicator system: lowpass box, radial bands, half-open shear wedges."""

    def _box(self, j: int) -> float:
        return self.lam ** (2 * j - 2) * self.p.rho * np.pi

    def lowpass_at(self, j, pts):
        a = self._box(j)
        inside = (pts.x1 >= -a) & (pts.x1 < a) & (pts.x2 >= -a) & (pts.x2 < a)
        return inside.astype(np.float64)

    def tile(self, index, pts):
        j, ell = index.j, index.ell
        u, v = pts.coords(index.cone)
        dom = horizontal_dominates(pts.x1, pts.x2)
        if index.cone == "v":
            dom = ~dom
        band = signed_band(u, self._box(j), self._box(j + 1))
        lam_j = self.lam ** j
        cap = W.shear_count_toy(lam_j)
        with np.errstate(invalid="ignore"):
            which = np.floor(lam_j * slope(v, u) + 0.5)
        which = np.clip(np.nan_to_num(which, nan=cap + 1, posinf=cap + 1, neginf=-cap - 1), -cap, cap)
        return (dom & band & (which == -ell)).astype(np.float64)

    def boundary_mask(self, pts: PointSet) -> np.ndarray:
        """Points lying exactly on an indicator boundary (ties resolved by convention)."""
        x1, x2 = pts.x1, pts.x2
        a1, a2 = np.abs(x1), np.abs(x2)
        mask = a1 == a2
        sp = self.spec
        for j in range(sp.j_coarse, sp.j_fine + 1):
            edge = self._box(j)
            mask |= np.isclose(a1, edge, rtol=1e-12, atol=0) & (a2 <= a1)
            mask |= np.isclose(a2, edge, rtol=1e-12, atol=0) & (a1 <= a2)
        for j in range(sp.j_coarse, sp.j_fine):
            lam_j = self.lam ** j
            lo, hi = self._box(j), self._box(j + 1)
            for u, v in ((x1, x2), (x2, x1)):
                active = (np.abs(v) <= np.abs(u)) & (np.abs(u) >= lo) & (np.abs(u) <= hi)
                s = lam_j * slope(v, u) + 0.5
                with np.errstate(invalid="ignore"):
                    tie = np.isfinite(s) & np.isclose(s, np.round(s), rtol=0, atol=1e-12)
                mask |= active & tie
        return mask


class NonStationarySystem(Construction):
    """Scale-dependent system normalized by the global weight Theta."""

    def shears(self, j: int) -> int:
        return W.shear_count_smooth(self.lam ** j, self.p.eps)

    def angular(self, j: int, ell: int, pts: PointSet, cone: str) -> np.ndarray:
        def build():
            x = self.lam ** j * pts.ratio(cone)
            cap = self.shears(j)
            if abs(ell) < cap:
                return W.gamma_eps(self.p.eps, x + ell)
            if ell == cap:
                return W.gamma_corner_smooth(self.p, j, "-", x + ell)
            if ell == -cap:
                return W.gamma_corner_smooth(self.p, j, "+", x + ell)
            raise ValueError(f"shear {ell} out of range at scale {j}")

        return pts.memo(("ang", j, ell, cone), build)

    def angular_energy(self, j: int, pts: PointSet, cone: str) -> np.ndarray:
        def build():
            cap = self.shears(j)
            return sum(self.angular(j, ell, pts, cone) ** 2 for ell in range(-cap, cap + 1))

        return pts.memo(("angsq", j, cone), build)

    def scale_energy(self, j: int, pts: PointSet) -> np.ndarray:
        """Sum over both cones and all shears of squared raw tiles at scale j."""

        def build():
            h = self._radial(pts, j, "h") ** 2 * self.angular_energy(j, pts, "h")
            v = self._radial(pts, j, "v") ** 2 * self.angular_energy(j, pts, "v")
            return h + v

        return pts.memo(("Z", j), build)

    def scales(self, pts: PointSet) -> range:
        return contributing_scales(self.spec, pts.max_abs)

    def base_energy(self, pts: PointSet) -> np.ndarray:
        return self._tensor_alpha(pts, self.spec.j0) ** 2

    def theta(self, pts: PointSet) -> np.ndarray:
        def build():
            total = self.base_energy(pts).copy()
            for j in self.scales(pts):
                total = total + self.scale_energy(j, pts)
            return total

        return pts.memo(("theta",), build)

    def gamma_big(self, j: int, pts: PointSet) -> np.ndarray:
        return pts.memo(("Gamma", j), lambda: self.angular_energy(j, pts, "h") + self.angular_energy(j, pts, "v"))

    def omega(self, j: int, pts: PointSet) -> np.ndarray:
        return pts.memo(("omega_ns", j), lambda: np.sqrt(self.scale_energy(j, pts) / self.theta(pts)))

    def lowpass_at(self, j, pts):
        def build():
            acc = self.base_energy(pts).copy()
            for i in range(self.spec.j0, j):
                acc = acc + self.scale_energy(i, pts)
            return np.sqrt(acc / self.theta(pts))

        return pts.memo(("lowpass", j), build)

    def tile(self, index, pts):
        j = index.j
        gam = self.gamma_big(j, pts)
        ang = self.angular(j, index.ell, pts, index.cone)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.omega(j, pts) * ang / np.sqrt(gam)
        return np.where(gam > 0, val, 0.0)

    def prepare(self, pts):
        self.theta(pts)
        for j in range(self.spec.j_coarse, self.spec.j_fine):
            self.scale_energy(j, pts)
            self.gamma_big(j, pts)
            self.omega(j, pts)


class QuasiStationarySystem(Construction):
    """Fixed tensor lowpass; each scale band split by normalized angular windows."""

    def shears(self, j: int) -> int:
        return W.shear_count_smooth(self.lam ** j, self.p.eps)

    def angular(self, j: int, ell: int, pts: PointSet, cone: str) -> np.ndarray:
        return pts.memo(("ang", j, ell, cone),
                        lambda: W.gamma_eps(self.p.eps, self.lam ** j * pts.ratio(cone) + ell))

    def gamma_big(self, j: int, pts: PointSet) -> np.ndarray:
        def build():
            cap = self.shears(j)
            return sum(self.angular(j, ell, pts, c) ** 2
                       for c in ("h", "v") for ell in range(-cap, cap + 1))

        return pts.memo(("Gamma", j), build)

    def omega(self, j: int, pts: PointSet) -> np.ndarray:
        return self._omega_stationary(pts, j)

    def lowpass_at(self, j, pts):
        return self._tensor_alpha(pts, j)

    def tile(self, index, pts):
        j = index.j
        gam = self.gamma_big(j, pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.omega(j, pts) * self.angular(j, index.ell, pts, index.cone) / np.sqrt(gam)
        return np.where(gam > 0, val, 0.0)

    def prepare(self, pts):
        for j in range(self.spec.j_coarse, self.spec.j_fine):
            self.gamma_big(j, pts)
            self.omega(j, pts)


class ConeCutSystem(Construction):
    """Indicator cones with smooth radial windows and hard-cut seam pieces."""

    def lowpass_at(self, j, pts):
        s = self.lam ** (-2 * j)
        dom = horizontal_dominates(pts.x1, pts.x2)
        return np.where(dom, W.alpha(self.p, s * pts.x1), W.alpha(self.p, s * pts.x2))

    def angular(self, j: int, ell: int, pts: PointSet, cone: str) -> np.ndarray:
        lam_j = self.lam ** j
        x = lam_j * pts.ratio(cone) + ell
        cap = W.shear_count_toy(lam_j)
        if abs(ell) < cap:
            return W.gamma_eps(self.p.eps, x)
        return W.gamma_corner_hard(lam_j, self.p.eps, "-" if ell > 0 else "+", x)

    def tile(self, index, pts):
        dom = horizontal_dominates(pts.x1, pts.x2)
        own = dom if index.cone == "h" else ~dom
        val = self._radial(pts, index.j, index.cone) * self.angular(index.j, index.ell, pts, index.cone)
        return np.where(own, val, 0.0)


class GluedSystem(Construction):
    """Stationary radial profile, hard corners glued across the seam into one element."""

    SEAM_WEIGHT = 1 / math.sqrt(2)  # each glued element is listed once per cone

    def lowpass_at(self, j, pts):
        return self._tensor_alpha(pts, j)

    def seam_profile(self, j: int, ell: int, pts: PointSet) -> np.ndarray:
        """Angular factor of the glued seam element; symmetric under the flip."""

        def build():
            r = pts.ratio("h")
            inner = np.abs(r) <= 1
            with np.errstate(divide="ignore"):
                folded = np.where(inner, r, 1.0 / r)
            if j == 0:
                return W.gamma_eps(self.p.eps, folded + ell)
            lam_j = self.lam ** j
            return W.gamma_corner_hard(lam_j, self.p.eps, "-" if ell > 0 else "+", lam_j * folded + ell)

        return pts.memo(("seam", j, ell), build)

    def tile(self, index, pts):
        omega = self._omega_stationary(pts, index.j)
        if index.kind == "interior":
            lam_j = self.lam ** index.j
            return omega * W.gamma_eps(self.p.eps, lam_j * pts.ratio(index.cone) + index.ell)
        return self.SEAM_WEIGHT * omega * self.seam_profile(index.j, index.ell, pts)


def construction(spec: FrameSpec) -> Construction:
    v = spec.variant
    if v == "shannon":
        return ShannonSystem(spec)
    if v in NONSTATIONARY:
        return NonStationarySystem(spec)
    if v in STATIONARY:
        return QuasiStationarySystem(spec)
    if v == "cone-cut":
        return ConeCutSystem(spec)
    if v == "glued":
        return GluedSystem(spec)
    raise ValueError(f"unknown variant {v!r}")


def undilated(spec: FrameSpec, index: SubbandIndex, eta1, eta2, sys: Construction | None = None) -> np.ndarray:
    """Generator h itself at points eta, via h(eta) = tile(U^-1 eta)."""
    sys = sys or construction(spec)
    inv = np.linalg.inv(index.matrix)
    x1, x2 = apply_matrix(inv, np.asarray(eta1, float), np.asarray(eta2, float))
    return sys.value(index, PointSet(x1, x2))


# ------------------------------------------------------------ grid samples


@dataclass(frozen=True)
class GeneratorGrid:
    """Samples h(U xi) of one generator over an N x N frequency grid."""

    index: SubbandIndex | None
    values: np.ndarray
    label: str = ""
    norm_sq: float = field(init=False)

    def __post_init__(self):
        self.values.setflags(write=False)
        n = self.values.shape[0]
        cell = (2 * np.pi / n) ** 2
        object.__setattr__(self, "norm_sq", float(np.sum(self.values ** 2) * cell))
        if not self.label and self.index is not None:
            object.__setattr__(self, "label", self.index.name)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass
class SystemAtlas:
    """Lowpass plus all wavelet subbands of a truncated system on one grid."""

    spec: FrameSpec
    lowpass: GeneratorGrid
    subbands: list[GeneratorGrid]

    @property
    def n(self) -> int:
        return self.lowpass.n

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.n)

    def all_grids(self) -> list[GeneratorGrid]:
        return [self.lowpass] + list(self.subbands)

    def by_name(self, name: str) -> GeneratorGrid:
        for g in self.all_grids():
            if g.label == name:
                return g
        raise KeyError(name)

    def squared_sum(self) -> np.ndarray:
        total = self.lowpass.values ** 2
        for g in self.subbands:
            total = total + g.values ** 2
        return total

    def scale(self, j: int) -> list[GeneratorGrid]:
        return [g for g in self.subbands if g.index.j == j]

    def without(self, name: str) -> "SystemAtlas":
        return SystemAtlas(self.spec, self.lowpass, [g for g in self.subbands if g.label != name])


@lru_cache(maxsize=4)
def _grid_cache(spec: FrameSpec, n: int) -> tuple[Construction, PointSet]:
    sys = construction(spec)
    return sys, PointSet.from_grid(FrequencyGrid(n))


def grid_points(spec: FrameSpec, grid: FrequencyGrid | None = None) -> tuple[Construction, PointSet]:
    """Shared construction and memoized grid points for (spec, grid)."""
    return _grid_cache(spec, (grid or FrequencyGrid(spec.grid_n)).n)


def clear_caches() -> None:
    _grid_cache.cache_clear()


def _require(spec: FrameSpec, allowed: tuple, what: str) -> None:
    if spec.variant not in allowed:
        raise ValueError(f"{what} needs variant in {allowed}, got {spec.variant!r}")


def _sample(spec: FrameSpec, index: SubbandIndex, grid: FrequencyGrid | None) -> GeneratorGrid:
    sys, pts = grid_points(spec, grid)
    return GeneratorGrid(index, np.ascontiguousarray(sys.value(index, pts)))


def eval_shannon(spec: FrameSpec, index: SubbandIndex, grid: FrequencyGrid | None = None) -> GeneratorGrid:
    _require(spec, ("shannon",), "eval_shannon")
    return _sample(spec, index, grid)


def eval_psi(spec: FrameSpec, index: SubbandIndex, grid: FrequencyGrid | None = None) -> GeneratorGrid:
    _require(spec, NONSTATIONARY + STATIONARY, "eval_psi")
    return _sample(spec, index, grid)


def eval_conecut(spec: FrameSpec, index: SubbandIndex, grid: FrequencyGrid | None = None) -> GeneratorGrid:
    _require(spec, ("cone-cut",), "eval_conecut")
    return _sample(spec, index, grid)


def eval_glued(spec: FrameSpec, index: SubbandIndex, grid: FrequencyGrid | None = None) -> GeneratorGrid:
    _require(spec, ("glued",), "eval_glued")
    return _sample(spec, index, grid)


def eval_subband(spec: FrameSpec, index: SubbandIndex, grid: FrequencyGrid | None = None) -> GeneratorGrid:
    return _sample(spec, index, grid)


def eval_theta(spec: FrameSpec, grid: FrequencyGrid | None = None) -> GeneratorGrid:
    _require(spec, NONSTATIONARY, "eval_theta")
    sys, pts = grid_points(spec, grid)
    return GeneratorGrid(None, sys.theta(pts), label="theta")


def _as_points(xi) -> PointSet:
    arr = np.asarray(xi, dtype=np.float64)
    if arr.shape[-1] != 2:
        raise ValueError("xi must have a trailing axis of length 2")
    return PointSet(arr[..., 0], arr[..., 1])


def eval_gamma_big(spec: FrameSpec, j: int, which: str, xi) -> np.ndarray:
    """Angular normalizer at points ``xi`` (trailing axis of length 2).

    ``which`` is "nonstationary" (corner pieces included) or "stationary".
    """
    pts = _as_points(xi)
    if np.any((pts.x1 == 0) & (pts.x2 == 0)):
        raise ValueError("the angular normalizer is undefined at the origin")
    if which == "nonstationary":
        sys = NonStationarySystem(spec)
    elif which == "stationary":
        sys = QuasiStationarySystem(spec)
    else:
        raise ValueError(f"which must be 'nonstationary' or 'stationary', got {which!r}")
    return sys.gamma_big(j, pts)


def eval_omega(spec: FrameSpec, j: int, xi) -> np.ndarray:
    """Band profile of scale j at points ``xi``, composed with the isotropic dilation."""
    pts = _as_points(xi)
    if spec.variant in NONSTATIONARY:
        return NonStationarySystem(spec).omega(j, pts)
    if spec.variant in STATIONARY + ("glued",):
        return QuasiStationarySystem(spec).omega(j, pts)
    raise ValueError(f"no band profile for variant {spec.variant!r}")


def eval_phi_chain(spec: FrameSpec, grid: FrequencyGrid | None = None) -> list[GeneratorGrid]:
    """Composed lowpass functions for scales j_coarse .. j_fine inclusive."""
    sys, pts = grid_points(spec, grid)
    out = []
    for j in range(spec.j_coarse, spec.j_fine + 1):
        idx = SubbandIndex(j, 0, "h", "lowpass", tuple(np.ravel(spec.lam ** (-2 * j) * np.eye(2))))
        out.append(GeneratorGrid(idx, sys.lowpass_at(j, pts)))
    return out


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("SHEARFRAME_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def build_atlas(spec: FrameSpec, grid: FrequencyGrid | None = None, threads: int | None = None) -> SystemAtlas:
    """Sample the lowpass and every wavelet subband of ``spec`` on the grid."""
    sys, pts = grid_points(spec, grid)
    sys.prepare(pts)
    low = GeneratorGrid(lowpass_index(spec), np.ascontiguousarray(sys.lowpass(pts)))
    indices = all_subbands(spec)

    def one(idx: SubbandIndex) -> GeneratorGrid:
        return GeneratorGrid(idx, np.ascontiguousarray(sys.tile(idx, pts)))

    workers = thread_count(threads)
    if workers == 1:
        subs = [one(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            subs = list(ex.map(one, indices))
    return SystemAtlas(spec, low, subs)


def shannon_boundary_mask(spec: FrameSpec, grid: FrequencyGrid | None = None) -> np.ndarray:
    _require(spec, ("shannon",), "shannon_boundary_mask")
    sys, pts = grid_points(spec, grid)
    return sys.boundary_mask(pts)


__all__ = [
    "PointSet", "Construction", "ShannonSystem", "NonStationarySystem", "QuasiStationarySystem",
    "ConeCutSystem", "GluedSystem", "construction", "undilated", "GeneratorGrid", "SystemAtlas",
    "grid_points", "clear_caches", "eval_shannon", "eval_psi", "eval_conecut", "eval_glued",
    "eval_subband", "eval_theta", "eval_gamma_big", "eval_omega", "eval_phi_chain", "build_atlas",
    "shannon_boundary_mask", "thread_count", "slope", "horizontal_dominates", "signed_band",
    "shear_bound", "FRAMELET",
]
