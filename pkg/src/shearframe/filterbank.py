"""Refinement masks of the framelet systems and their perfect-reconstruction identities.

Masks are 2 pi periodic and sampled on the centered N x N grid of
[-pi, pi)^2, so a shift by 2 pi (p, q) / lambda^2 is an exact roll.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import windows as W
from .generators import NonStationarySystem, PointSet, QuasiStationarySystem, construction, thread_count
from .geometry import NONSTATIONARY, STATIONARY, FrameSpec, FrequencyGrid, SpecError, SubbandIndex, shear_bound
from .transform import integer_lambda
from .verification import SMOOTH_TOL, ConditionResult, VerificationReport

SIGMA_FLOOR = 1e-14


@dataclass(frozen=True)
class MaskGrid:
    """One periodic mask sampled on the grid.

    ``tag`` is "lowpass", "highpass" or "flipped" (a highpass mask composed
    with the coordinate exchange).
    """

    tag: str
    j: int
    ell: int
    values: np.ndarray

    @property
    def name(self) -> str:
        if self.tag == "lowpass":
            return f"a_j{self.j}"
        suffix = "_flip" if self.tag == "flipped" else ""
        return f"b_j{self.j}_l{self.ell:+d}{suffix}"


def _family(spec: FrameSpec) -> str:
    if spec.variant in NONSTATIONARY:
        return "non-stationary"
    if spec.variant in STATIONARY:
        return "stationary"
    raise ValueError(f"masks exist for the smooth framelet families only, got {spec.variant!r}")


def support_halfwidth(spec: FrameSpec, j: int) -> float:
    """Half-width (in units of pi) of a box holding the support of the next lowpass."""
    p = spec.params
    if _family(spec) == "non-stationary":
        return p.lam ** -2 * p.rho * (1 + 2 * p.eps0 * p.lam ** (-2 * j))
    return p.lam ** -2 * p.rho


def require_nesting(spec: FrameSpec, j: int) -> float:
    rs = support_halfwidth(spec, j)
    if rs >= 1:
        raise SpecError(f"lowpass support half-width {rs:.6g} pi does not fit inside the period; supports do not nest")
    return rs


def plateau(spec: FrameSpec, j: int, grid: FrequencyGrid) -> np.ndarray:
    """Smooth periodic g: 1 on the support of the next lowpass, tensor of bumps."""
    rs = require_nesting(spec, j)
    r0 = (rs + 1) / 2
    delta = (1 - r0) * np.pi / 2
    x1, x2 = grid.mesh()
    return W.bump(-r0 * np.pi, r0 * np.pi, delta, delta, x1) * W.bump(-r0 * np.pi, r0 * np.pi, delta, delta, x2)


def _scaled_points(spec: FrameSpec, j: int, grid: FrequencyGrid) -> PointSet:
    s = spec.lam ** (2 * j + 2)
    x1, x2 = grid.mesh()
    return PointSet(s * x1, s * x2)


def _nonstationary_parts(spec: FrameSpec, j: int, grid: FrequencyGrid):
    """Partial scale sums at lam^(2j+2) xi: below j, and including j."""
    sys = NonStationarySystem(spec)
    pts = _scaled_points(spec, j, grid)
    below = sys.base_energy(pts).copy()
    for i in range(spec.j0, j):
        below = below + sys.scale_energy(i, pts)
    band = sys.scale_energy(j, pts)
    return sys, pts, below, band, below + band


def build_lowpass_mask(spec: FrameSpec, j: int, grid: FrequencyGrid | None = None) -> MaskGrid:
    grid = grid or FrequencyGrid(spec.grid_n)
    require_nesting(spec, j)
    if _family(spec) == "stationary":
        x1, x2 = grid.mesh()
        return MaskGrid("lowpass", j, 0, W.mask_mu(spec.params, x1) * W.mask_mu(spec.params, x2))
    _, _, below, _, upto = _nonstationary_parts(spec, j, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(upto > 0, np.sqrt(below / upto), 0.0)
    return MaskGrid("lowpass", j, 0, val)


def _highpass_profile(spec: FrameSpec, j: int, grid: FrequencyGrid) -> np.ndarray:
    """sqrt(g - |a|^2), in explicit form on the support of the next lowpass."""
    g = plateau(spec, j, grid)
    if _family(spec) == "stationary":
        p = spec.params
        x1, x2 = grid.mesh()
        inside = (W.alpha(p, x1) * W.alpha(p, x2)) > 0
        ups1, ups2, mu2 = W.mask_upsilon(p, x1), W.mask_upsilon(p, x2), W.mask_mu(p, x2)
        return np.where(inside, np.sqrt(ups2 ** 2 + (mu2 * ups1) ** 2), np.sqrt(g))
    _, _, _, band, upto = _nonstationary_parts(spec, j, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(upto > 0, np.sqrt(band / upto), np.sqrt(g))


def _angular_split(spec: FrameSpec, j: int, grid: FrequencyGrid):
    """Normalized angular windows at scale j on the grid (ratio only, so unscaled points suffice)."""
    sys = NonStationarySystem(spec) if _family(spec) == "non-stationary" else QuasiStationarySystem(spec)
    pts = PointSet(*grid.mesh())
    gam = sys.gamma_big(j, pts)

    def piece(ell: int, cone: str) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(gam > 0, sys.angular(j, ell, pts, cone) / np.sqrt(gam), 0.0)

    return piece


def build_highpass_masks(spec: FrameSpec, j: int, grid: FrequencyGrid | None = None) -> list[MaskGrid]:
    """b^{j,ell} for every shear, followed by the flipped copies."""
    grid = grid or FrequencyGrid(spec.grid_n)
    prof = _highpass_profile(spec, j, grid)
    piece = _angular_split(spec, j, grid)
    cap = shear_bound(spec, j)
    out = [MaskGrid("highpass", j, ell, prof * piece(ell, "h")) for ell in range(-cap, cap + 1)]
    out += [MaskGrid("flipped", j, m.ell, np.ascontiguousarray(m.values.T)) for m in out]
    return out


def build_masks(spec: FrameSpec, j: int, grid: FrequencyGrid | None = None) -> list[MaskGrid]:
    return [build_lowpass_mask(spec, j, grid)] + build_highpass_masks(spec, j, grid)


# ------------------------------------------------------------ identities


def next_lowpass(spec: FrameSpec, j: int, grid: FrequencyGrid) -> np.ndarray:
    """phi^{j+1}(xi) on the grid (the undilated generator of the next space)."""
    sys = construction(spec)
    return sys.lowpass_at(j + 1, _scaled_points(spec, j, grid))


def refinability(spec: FrameSpec, j: int, masks: list[MaskGrid], grid: FrequencyGrid | None = None,
                 tol: float = SMOOTH_TOL) -> VerificationReport:
    """phi^j(lam^2 xi) = a phi^{j+1}(xi) and psi^{j,ell}(lam^2 xi) = b^{j,ell} phi^{j+1}(xi)."""
    grid = grid or FrequencyGrid(spec.grid_n)
    sys = construction(spec)
    pts = _scaled_points(spec, j, grid)
    nxt = sys.lowpass_at(j + 1, pts)
    rep = VerificationReport()
    low = masks[0]
    dev = np.abs(sys.lowpass_at(j, pts) - low.values * nxt)
    rep.add(f"refine/lowpass/j{j}", _entry(dev, tol))
    worst = np.zeros_like(dev)
    for m in masks[1:]:
        cone = "v" if m.tag == "flipped" else "h"
        kind = "interior" if abs(m.ell) < shear_bound(spec, j) else ("seam_plus" if m.ell > 0 else "seam_minus")
        tile = sys.tile(SubbandIndex(j, m.ell, cone, kind), pts)
        worst = np.maximum(worst, np.abs(tile - m.values * nxt))
    rep.add(f"refine/highpass/j{j}", _entry(worst, tol))
    return rep


def _entry(dev: np.ndarray, tol: float, status: str = "") -> ConditionResult:
    if dev.size == 0 or not np.any(np.isfinite(dev)):
        return ConditionResult(0.0, (), tol, status or "vacuous")
    i = int(np.argmax(dev))
    pos = tuple(int(v) - dev.shape[0] // 2 for v in np.unravel_index(i, dev.shape))
    return ConditionResult(float(dev.ravel()[i]), pos, tol, status)


def cosets(lam: int) -> list[tuple[int, int]]:
    """Nonzero representatives (p, q) of omega = (p, q) / lam^2 in [0, 1)^2."""
    m = lam * lam
    return [(p, q) for p in range(m) for q in range(m) if (p, q) != (0, 0)]


def check_pr(masks: list[MaskGrid], spec: FrameSpec, j: int, tol: float = SMOOTH_TOL,
             grid: FrequencyGrid | None = None) -> VerificationReport:
    """PR1 on sigma and PR2 on sigma intersected with its shift, for every nonzero coset."""
    lam = integer_lambda(spec.lam)
    n = masks[0].values.shape[0]
    grid = grid or FrequencyGrid(n)
    if n % (lam * lam):
        raise ValueError(f"grid side {n} must be divisible by lambda^2 = {lam * lam}")
    sigma = next_lowpass(spec, j, grid) ** 2 > SIGMA_FLOOR
    rep = VerificationReport()
    total = sum(m.values ** 2 for m in masks)
    dev = np.where(sigma, np.abs(total - 1.0), 0.0)
    rep.add(f"pr1/j{j}", _entry(dev, tol))
    step = n // (lam * lam)
    for p, q in cosets(lam):
        shift = (-p * step, -q * step)  # value at xi + 2 pi omega
        dom = sigma & np.roll(sigma, shift, (0, 1))
        name = f"pr2/j{j}/w=({p},{q})/{lam * lam}"
        if not dom.any():
            rep.add(name, ConditionResult(0.0, (), tol, "vacuous"))
            continue
        acc = sum(m.values * np.roll(m.values, shift, (0, 1)) for m in masks)
        rep.add(name, _entry(np.where(dom, np.abs(acc), 0.0), tol))
    return rep


def consistency(spec: FrameSpec, j: int, grid: FrequencyGrid | None = None, tol: float = SMOOTH_TOL) -> ConditionResult:
    """|b^j|^2 + |a^j|^2 = g^j on the grid."""
    grid = grid or FrequencyGrid(spec.grid_n)
    a = build_lowpass_mask(spec, j, grid).values
    b = _highpass_profile(spec, j, grid)
    return _entry(np.abs(a ** 2 + b ** 2 - plateau(spec, j, grid)), tol)


def _scale_report(spec: FrameSpec, j: int, grid: FrequencyGrid) -> tuple[VerificationReport, list[MaskGrid]]:
    ms = build_masks(spec, j, grid)
    rep = refinability(spec, j, ms, grid)
    rep.merge(check_pr(ms, spec, j, grid=grid))
    rep.add(f"consistency/j{j}", consistency(spec, j, grid))
    return rep, ms


def filterbank_report(spec: FrameSpec, grid: FrequencyGrid | None = None,
                      threads: int | None = None) -> tuple[VerificationReport, dict]:
    """Masks and all identities for every scale j_coarse <= j < j_fine, scales in parallel."""
    grid = grid or FrequencyGrid(spec.grid_n)
    scales = list(range(spec.j_coarse, spec.j_fine))
    workers = min(thread_count(threads), len(scales))
    if workers <= 1:
        parts = [_scale_report(spec, j, grid) for j in scales]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda j: _scale_report(spec, j, grid), scales))
    rep = VerificationReport()
    for r, _ in parts:
        rep.merge(r)
    return rep, {j: ms for j, (_, ms) in zip(scales, parts)}


__all__ = [
    "MaskGrid", "build_lowpass_mask", "build_highpass_masks", "build_masks", "check_pr", "refinability",
    "consistency", "filterbank_report", "plateau", "support_halfwidth", "require_nesting", "cosets", "next_lowpass",
]
