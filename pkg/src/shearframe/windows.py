"""One-dimensional windows, transitions and masks.

Every function is vectorized: array input gives an array of the same shape,
scalar input gives a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .kernels import nu_fill

TABLE_SIZE = 4096
QUAD_TOL = 1e-14


@dataclass(frozen=True)
class WindowParams:
    """Parameters shared by all windows.

    Attributes
    ----------
    lam : float
        Dilation factor, > 1.
    t : float
        Transition width fraction in (0, 1].
    rho : float
        Band fraction (> 0; the admissible range depends on the construction).
    eps : float
        Angular transition half-width in (0, 1/2].
    eps0 : float
        Seamline overshoot of the smooth corner pieces, > 0.
    """

    lam: float = 2.0
    t: float = 0.5
    rho: float = 1.0
    eps: float = 0.3
    eps0: float = 0.1

    def __post_init__(self) -> None:
        if not self.lam > 1:
            raise ValueError(f"lambda must exceed 1, got {self.lam}")
        if not 0 < self.t <= 1:
            raise ValueError(f"t must lie in (0, 1], got {self.t}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not 0 < self.eps <= 0.5:
            raise ValueError(f"eps must lie in (0, 1/2], got {self.eps}")
        if not self.eps0 > 0:
            raise ValueError(f"eps0 must be positive, got {self.eps0}")


def _plateau_integrand(s: float) -> float:
    if abs(s) >= 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 + s) ** 2 - 1.0 / (1.0 - s) ** 2)


@lru_cache(maxsize=1)
def nu_table() -> tuple[np.ndarray, np.ndarray]:
    """Node and cubic-coefficient tables for the normalized integral of the bump.

    Returns ``(nodes, coef)`` with ``nodes`` of length m+1 and ``coef`` of
    shape (m, 4), highest power first, in the local variable ``x - nodes[i]``.
    """
    nodes = np.linspace(-1.0, 1.0, TABLE_SIZE)
    pieces = np.empty(TABLE_SIZE - 1)
    for i in range(TABLE_SIZE - 1):
        pieces[i] = quad(_plateau_integrand, nodes[i], nodes[i + 1],
                         epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
    g = np.concatenate([[0.0], np.cumsum(pieces)])
    g /= g[-1]
    with np.errstate(over="ignore", divide="ignore"):
        interp = PchipInterpolator(nodes, g)
    coef = np.ascontiguousarray(interp.c.T)
    return np.ascontiguousarray(interp.x), coef


def _out(x, values: np.ndarray):
    if np.ndim(x) == 0:
        return float(values.reshape(()))
    return values


def nu(x) -> np.ndarray:
    """Smooth transition: 0 for x <= -1, 1 for x >= 1, nu(x)^2 + nu(-x)^2 = 1."""
    arr = np.ascontiguousarray(np.asarray(x, dtype=np.float64).ravel())
    out = np.empty_like(arr)
    nodes, coef = nu_table()
    nu_fill(arr, out, nodes, coef)
    return out.reshape(np.shape(x))


def nu_transition(x):
    return _out(x, nu(x))


def bump(a: float, b: float, eps1: float, eps2: float, x):
    """Smooth plateau equal to 1 on [a+eps1, b-eps2] with support [a-eps1, b+eps2]."""
    if not (eps1 > 0 and eps2 > 0):
        raise ValueError("transition widths must be positive")
    if eps1 + eps2 > b - a:
        raise ValueError(f"eps1 + eps2 = {eps1 + eps2} exceeds b - a = {b - a}")
    xa = np.asarray(x, dtype=np.float64)
    rise = nu((xa - a) / eps1)
    fall = nu((b - xa) / eps2)
    val = np.where(xa < a + eps1, rise, np.where(xa > b - eps2, fall, 1.0))
    return _out(x, val)


# Arguments of nu shared by alpha, beta and the masks. ``scale`` is the power of
# lambda multiplying |xi|: 0 gives the outer edge of beta, 2 the edge of alpha,
# 4 the edge of alpha(lambda^2 .).
def _edge_arg(p: WindowParams, a: np.ndarray, scale: int) -> np.ndarray:
    rp = p.rho * np.pi
    return (-2.0 * p.lam ** scale * a + (2.0 - p.t) * rp) / (p.t * rp)


def _sqdiff(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """sqrt(nu(hi)^2 - nu(lo)^2) for hi >= lo, switching to the complementary form near 1."""
    direct = nu(hi) ** 2 - nu(lo) ** 2
    flipped = nu(-lo) ** 2 - nu(-hi) ** 2
    d = np.where(lo > 0, flipped, direct)
    return np.sqrt(np.maximum(d, 0.0))


def _branch_one(p: WindowParams) -> bool:
    return 1.0 - p.t >= p.lam ** -2


def alpha(p: WindowParams, xi):
    """Even lowpass window: 1 near 0, support [-rho pi / lam^2, rho pi / lam^2]."""
    a = np.abs(np.asarray(xi, dtype=np.float64))
    # nu clamps, so the three printed branches collapse into one call
    return _out(xi, nu(_edge_arg(p, a, 2)))


def _beta_abs(p: WindowParams, a: np.ndarray) -> np.ndarray:
    inner, outer = _edge_arg(p, a, 2), _edge_arg(p, a, 0)
    if _branch_one(p):
        return np.where(a < p.lam ** -2 * p.rho * np.pi, nu(-inner), nu(outer))
    return _sqdiff(outer, inner)


def beta(p: WindowParams, xi):
    """Bandpass window with alpha^2 + beta^2 = alpha(. / lam^2)^2."""
    a = np.abs(np.asarray(xi, dtype=np.float64))
    return _out(xi, _beta_abs(p, a))


def _reduce(xi) -> np.ndarray:
    x = np.asarray(xi, dtype=np.float64)
    return np.abs((x + np.pi) % (2 * np.pi) - np.pi)


def mask_mu(p: WindowParams, xi):
    """2pi-periodic lowpass mask with alpha(lam^2 xi) = mu(xi) alpha(xi)."""
    a = _reduce(xi)
    edge = p.lam ** -4 * p.rho * np.pi
    if _branch_one(p):
        val = np.where(a <= edge, nu(_edge_arg(p, a, 4)), 0.0)
    else:
        den = nu(np.where(a <= edge, _edge_arg(p, a, 2), 1.0))
        val = np.where(a <= edge, nu(_edge_arg(p, a, 4)) / den, 0.0)
    return _out(xi, val)


def mask_upsilon(p: WindowParams, xi):
    """2pi-periodic highpass mask with beta(lam^2 xi) = upsilon(xi) alpha(xi).

    Off the support of beta(lam^2 .) the value is the plateau that is 0 near
    the origin and 1 near the boundary of the period.
    """
    a = _reduce(xi)
    rp = p.rho * np.pi
    lo, hi = p.lam ** -4 * (1 - p.t) * rp, p.lam ** -4 * rp
    inner = _edge_arg(p, a, 4)
    if _branch_one(p):
        return _out(xi, nu(-inner))
    mid = (a > lo) & (a < hi)
    num = _sqdiff(_edge_arg(p, a, 2), inner)
    den = nu(np.where(mid, _edge_arg(p, a, 2), 1.0))
    val = np.where(a <= lo, 0.0, np.where(a >= hi, 1.0, num / den))
    return _out(xi, val)


def beta_dilated(p: WindowParams, xi):
    """beta(lam^2 xi), evaluated in the same arithmetic form as ``mask_upsilon``."""
    a = np.abs(np.asarray(xi, dtype=np.float64))
    if _branch_one(p):
        return _out(xi, _beta_abs(p, p.lam ** 2 * a))
    return _out(xi, _sqdiff(_edge_arg(p, a, 2), _edge_arg(p, a, 4)))


def gamma_eps(eps: float, x):
    """Angular window: 1 on |x| <= 1/2 - eps, support [-1/2 - eps, 1/2 + eps]."""
    xa = np.abs(np.asarray(x, dtype=np.float64))
    return _out(x, nu((0.5 - xa) / eps))


def shear_count_smooth(lam_j: float, eps: float) -> int:
    """Largest shear of the smooth constructions at dilation ``lam_j``."""
    return int(math.floor(lam_j + 0.5 - eps))


def shear_count_toy(lam_j: float) -> int:
    """Largest shear of the indicator and hard-cut constructions at dilation ``lam_j``."""
    return int(math.floor(lam_j - 0.5)) + 1


def _corner_plus(lam_j: float, eps: float, eps0: float, x: np.ndarray) -> np.ndarray:
    ell = shear_count_smooth(lam_j, eps)
    tail = nu(1.0 + lam_j ** 2 / eps0 - (lam_j / eps0) * (x + ell))
    edge = nu((0.5 + x) / eps)
    return np.where(x >= -0.5 + eps, tail, edge)


def gamma_corner_smooth(p: WindowParams, j: int, sign: str, x):
    """Smooth corner piece at scale ``j``.

    ``sign='+'`` is the piece shifted by -ell (reaching past the seam at
    ratio +1); ``sign='-'`` is its mirror image.
    """
    xa = np.asarray(x, dtype=np.float64)
    lam_j = p.lam ** j
    if sign == "+":
        val = _corner_plus(lam_j, p.eps, p.eps0, xa)
    elif sign == "-":
        val = _corner_plus(lam_j, p.eps, p.eps0, -xa)
    else:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    return _out(x, val)


def gamma_corner_hard(lambda_j: float, eps: float, sign: str, x):
    """Corner piece cut off sharply at the cone boundary."""
    xa = np.asarray(x, dtype=np.float64)
    if sign == "-":
        xa = -xa
    elif sign != "+":
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    cut = lambda_j - shear_count_toy(lambda_j)
    edge = nu((0.5 + xa) / eps)
    val = np.where(xa < -0.5 + eps, edge, np.where(xa <= cut, 1.0, 0.0))
    return _out(x, val)
