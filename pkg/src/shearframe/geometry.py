"""Matrices, subband bookkeeping, cones and frequency-grid conventions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .windows import WindowParams, shear_count_smooth, shear_count_toy

VARIANTS = (
    "shannon",
    "non-stationary",
    "quasi-stationary",
    "cone-cut",
    "glued",
    "framelet-non-stationary",
    "framelet-stationary",
)
TOY_SHEAR_VARIANTS = ("shannon", "cone-cut", "glued")
NONSTATIONARY = ("non-stationary", "framelet-non-stationary")
STATIONARY = ("quasi-stationary", "framelet-stationary")
FRAMELET = ("framelet-non-stationary", "framelet-stationary")
SMOOTH = NONSTATIONARY + STATIONARY + ("glued",)

CONFIG_FIELDS = ("lambda", "t", "rho", "eps", "eps0", "j0", "j_coarse", "j_fine", "variant", "grid_n")


class SpecError(ValueError):
    """Raised when construction parameters violate a validity rule."""


# ----------------------------------------------------------------- matrices

EXCHANGE = np.array([[0.0, 1.0], [1.0, 0.0]])


def shear_lower(ell: float) -> np.ndarray:
    """Shear acting on the second coordinate: (x1, x2) -> (x1, ell*x1 + x2)."""
    return np.array([[1.0, 0.0], [float(ell), 1.0]])


def shear_upper(ell: float) -> np.ndarray:
    """Transpose shear: (x1, x2) -> (x1 + ell*x2, x2)."""
    return np.array([[1.0, float(ell)], [0.0, 1.0]])


def parabolic(lam: float, j: int = 1) -> np.ndarray:
    """Spatial parabolic dilation diag(lam^2, lam) raised to j."""
    return np.diag([lam ** (2 * j), lam ** j]).astype(float)


def parabolic_dual(lam: float, j: int = 1) -> np.ndarray:
    """Inverse transpose of ``parabolic``: the frequency-side dilation."""
    return np.diag([lam ** (-2 * j), lam ** (-j)]).astype(float)


def isotropic(lam: float, j: int = 1) -> np.ndarray:
    return lam ** (2 * j) * np.eye(2)


def isotropic_dual(lam: float, j: int = 1) -> np.ndarray:
    return lam ** (-2 * j) * np.eye(2)


def anisotropic_shift(lam: float, j: int = 1) -> np.ndarray:
    """diag(1, lam^j): frequency-side parabolic dilation = isotropic_dual @ anisotropic_shift."""
    return np.diag([1.0, lam ** j])


# ------------------------------------------------------------------- specs


@dataclass(frozen=True)
class FrameSpec:
    """All construction parameters of one frame.

    ``j_fine`` may be given as None, in which case the smallest scale that
    makes the truncated system an exact partition of unity on the grid is used.
    ``check=False`` skips validity rules (used for deliberate counterexamples).
    """

    params: WindowParams
    j0: int = 0
    j_coarse: int = 0
    j_fine: int | None = None
    variant: str = "non-stationary"
    grid_n: int = 256
    check: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise SpecError(f"unknown variant {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.j_fine is None:
            object.__setattr__(self, "j_fine", default_fine_scale(self))
        if self.check:
            problems = self.violations()
            if problems:
                raise SpecError("; ".join(problems))

    @property
    def lam(self) -> float:
        return self.params.lam

    def violations(self) -> list[str]:
        p = self.params
        out = []
        if self.grid_n <= 0 or self.grid_n % 2:
            out.append(f"grid_n must be a positive even integer, got {self.grid_n}")
        if not 0 <= self.j0 <= self.j_coarse < self.j_fine:
            out.append(f"need 0 <= j0 <= j_coarse < j_fine, got {self.j0}, {self.j_coarse}, {self.j_fine}")
        if self.variant == "shannon":
            ok = p.rho <= 1 or (p.lam ** 2 <= p.rho <= 2 and p.lam <= math.sqrt(2))
            if not ok:
                out.append(f"shannon needs 0 < rho <= 1, or lambda^2 <= rho <= 2 with lambda <= sqrt 2; got rho={p.rho}")
        elif p.rho > 1:
            out.append(f"rho must not exceed 1 for smooth constructions, got {p.rho}")
        if self.variant in NONSTATIONARY:
            if p.t >= 1:
                out.append("t = 1 leaves no gap at the origin, so the scale sum does not truncate; use t < 1")
            out.extend(eps0_violations(p, self.j0))
        return out

    def to_dict(self) -> dict:
        p = self.params
        return {
            "lambda": p.lam, "t": p.t, "rho": p.rho, "eps": p.eps, "eps0": p.eps0,
            "j0": self.j0, "j_coarse": self.j_coarse, "j_fine": self.j_fine,
            "variant": self.variant, "grid_n": self.grid_n,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict, check: bool = True) -> "FrameSpec":
        unknown = set(d) - set(CONFIG_FIELDS)
        if unknown:
            raise SpecError(f"unknown config fields: {', '.join(sorted(unknown))}")
        try:
            params = WindowParams(
                lam=float(d.get("lambda", 2.0)), t=float(d.get("t", 0.5)),
                rho=float(d.get("rho", 1.0)), eps=float(d.get("eps", 0.3)),
                eps0=float(d.get("eps0", 0.1)),
            )
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
        j_fine = d.get("j_fine")
        return cls(
            params=params, j0=int(d.get("j0", 0)), j_coarse=int(d.get("j_coarse", d.get("j0", 0))),
            j_fine=None if j_fine is None else int(j_fine),
            variant=str(d.get("variant", "non-stationary")), grid_n=int(d.get("grid_n", 256)),
            check=check,
        )

    @classmethod
    def from_json(cls, text: str, check: bool = True) -> "FrameSpec":
        return cls.from_dict(json.loads(text), check=check)

    def replace(self, **kw) -> "FrameSpec":
        d = self.to_dict()
        check = kw.pop("check", self.check)
        d.update(kw)
        return FrameSpec.from_dict(d, check=check)


def eps0_bounds(p: WindowParams, j0: int) -> dict[str, float]:
    """The three upper bounds on eps0 for the scale-dependent construction."""
    gap = 1 / p.rho - 0.5 - p.eps
    return {
        "lambda^(j0-1)/2": p.lam ** (j0 - 1) / 2,
        "lambda^(2 j0) (lambda^2/(2 rho) - 1/2)": p.lam ** (2 * j0) * (p.lam ** 2 / (2 * p.rho) - 0.5),
        "(1/rho - 1/2 - eps) lambda^j0": gap * p.lam ** j0,
    }


def eps0_violations(p: WindowParams, j0: int) -> list[str]:
    out = []
    gap = 1 / p.rho - 0.5 - p.eps
    if gap <= 0:
        out.append(f"need 1/rho - 1/2 - eps > 0, got {gap:.6g}")
    for name, bound in eps0_bounds(p, j0).items():
        if not p.eps0 < bound:
            out.append(f"eps0 = {p.eps0:g} violates eps0 < {name} = {bound:.6g}")
    return out


def default_fine_scale(spec: FrameSpec) -> int:
    """Smallest scale above ``j_coarse`` whose lowpass is identically 1 on [-pi, pi)^2."""
    p = spec.params
    width = p.rho if spec.variant == "shannon" else (1 - p.t) * p.rho
    if width <= 0:
        return spec.j_coarse + 1
    j = spec.j_coarse + 1
    while p.lam ** (2 * j - 2) * width <= 1:
        j += 1
    return j


# ---------------------------------------------------------------- subbands


@dataclass(frozen=True)
class SubbandIndex:
    """One generator instance: scale, shear, cone, kind and its frequency dilation.

    ``dilation`` is the row-major 2x2 matrix U with tile(xi) = h(U xi).
    """

    j: int
    ell: int
    cone: str
    kind: str
    dilation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 1.0)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.dilation, dtype=float).reshape(2, 2)

    @property
    def name(self) -> str:
        if self.kind == "lowpass":
            return f"lowpass_j{self.j}"
        return f"j{self.j}_l{self.ell:+d}_{self.cone}"

    def to_dict(self) -> dict:
        return {"j": self.j, "ell": self.ell, "cone": self.cone, "kind": self.kind,
                "dilation": list(self.dilation)}

    @classmethod
    def from_dict(cls, d: dict) -> "SubbandIndex":
        return cls(int(d["j"]), int(d["ell"]), d["cone"], d["kind"], tuple(float(v) for v in d["dilation"]))


def _flat(m: np.ndarray) -> tuple[float, float, float, float]:
    return tuple(float(v) for v in m.ravel())


def shear_bound(spec: FrameSpec, j: int) -> int:
    """Largest |shear| at scale j."""
    lam_j = spec.lam ** j
    if spec.variant in TOY_SHEAR_VARIANTS:
        return shear_count_toy(lam_j)
    return shear_count_smooth(lam_j, spec.params.eps)


def interior_pure_bound(spec: FrameSpec, j: int) -> int:
    """Largest |shear| at which a generator is a pure shear of one fixed function.

    Returns -1 when no such shear exists.
    """
    p = spec.params
    if spec.variant in STATIONARY:
        r = math.floor(p.lam ** (j - 2) * (1 - p.t) * p.rho - (0.5 + p.eps))
        return max(int(r), -1)
    if spec.variant in NONSTATIONARY:
        return max(shear_bound(spec, j) - 2, -1)
    raise ValueError(f"no pure-shear subsystem is defined for {spec.variant}")


def lowpass_index(spec: FrameSpec) -> SubbandIndex:
    return SubbandIndex(spec.j_coarse, 0, "h", "lowpass", _flat(isotropic_dual(spec.lam, spec.j_coarse)))


def subband_dilation(spec: FrameSpec, j: int, ell: int, cone: str, kind: str) -> np.ndarray:
    lam = spec.lam
    if spec.variant in FRAMELET:
        base = isotropic_dual(lam, j)
        return base @ EXCHANGE if cone == "v" else base
    base = shear_lower(ell) @ parabolic_dual(lam, j)
    if spec.variant == "glued" and kind != "interior":
        base = shear_lower(ell) if j == 0 else base / 2
    return base @ EXCHANGE if cone == "v" else base


def enumerate_subbands(spec: FrameSpec, j: int) -> list[SubbandIndex]:
    """All wavelet subbands at scale j: horizontal cone first, shears ascending."""
    s = shear_bound(spec, j)
    out = []
    for cone in ("h", "v"):
        for ell in range(-s, s + 1):
            kind = "interior" if abs(ell) < s else ("seam_plus" if ell > 0 else "seam_minus")
            out.append(SubbandIndex(j, ell, cone, kind, _flat(subband_dilation(spec, j, ell, cone, kind))))
    return out


def all_subbands(spec: FrameSpec) -> list[SubbandIndex]:
    out = []
    for j in range(spec.j_coarse, spec.j_fine):
        out.extend(enumerate_subbands(spec, j))
    return out


def contributing_scales(spec: FrameSpec, max_abs_xi: float) -> range:
    """Scales j >= j0 whose band can be nonzero somewhere in the max-norm box of radius ``max_abs_xi``.

    The inner radius of scale j is lam^(2j-2) (1-t) rho pi; every scale whose
    inner radius exceeds the box contributes exactly zero.
    """
    p = spec.params
    if p.t >= 1:
        raise ValueError("t = 1 gives bands reaching the origin at every scale")
    inner = (1 - p.t) * p.rho * np.pi
    j = spec.j0
    while p.lam ** (2 * j - 2) * inner <= max_abs_xi:
        j += 1
    return range(spec.j0, j)


# -------------------------------------------------------------------- grids


@dataclass(frozen=True)
class FrequencyGrid:
    """Centered N x N lattice of the cell [-pi, pi)^2, axis 0 is xi_1."""

    n: int

    def __post_init__(self) -> None:
        if self.n <= 0 or self.n % 2:
            raise ValueError(f"grid side must be a positive even integer, got {self.n}")

    @property
    def k(self) -> np.ndarray:
        return np.arange(-self.n // 2, self.n // 2)

    @property
    def xi(self) -> np.ndarray:
        return 2 * np.pi * self.k / self.n

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.n

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xi, self.xi, indexing="ij")


def apply_matrix(m: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return m[0, 0] * x1 + m[0, 1] * x2, m[1, 0] * x1 + m[1, 1] * x2


def describe(spec: FrameSpec) -> Iterable[str]:
    yield f"variant={spec.variant} lambda={spec.lam:g} scales {spec.j_coarse}..{spec.j_fine - 1} N={spec.grid_n}"
    for j in range(spec.j_coarse, spec.j_fine):
        yield f"  j={j}: shears |ell| <= {shear_bound(spec, j)}, {len(enumerate_subbands(spec, j))} subbands"
