"""DFT-domain analysis and synthesis with a sampled system atlas.

Discrete conventions: forward DFT unscaled, inverse scaled by 1/n^2, image
axis 0 pairs with xi_1.  The undecimated coefficient block of a subband with
grid samples H is ``ifft2(fft2(f) * H)``; summed squared magnitudes over all
blocks equal the image energy because the squared samples sum to 1.

Decimated blocks keep every m-th sample in each direction, scaled by m, where
m is the largest power of lambda^2 for which the subband samples do not meet
their own translates by 2 pi q / m.  Synthesis zero-fills and scales back.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import FRAMELET, SubbandIndex, parabolic_dual, shear_lower
from .generators import GeneratorGrid, SystemAtlas, thread_count

MODES = ("undecimated", "decimated")


def to_fft_order(values: np.ndarray) -> np.ndarray:
    """Centered grid (k in [-N/2, N/2)) to numpy FFT index order."""
    return np.fft.ifftshift(values)


def integer_lambda(lam: float) -> int:
    r = round(lam)
    if abs(lam - r) > 1e-12 or r < 2:
        raise ValueError(f"decimated mode needs an integer lambda >= 2, got {lam}")
    return int(r)


def aliasing(values: np.ndarray, m: int) -> float:
    """max |H(xi) H(xi + 2 pi q / m)| over q != 0 in (Z/m)^2."""
    n = values.shape[0]
    if n % m:
        raise ValueError(f"factor {m} does not divide {n}")
    step = n // m
    worst = 0.0
    for q1 in range(m):
        for q2 in range(m):
            if q1 == 0 and q2 == 0:
                continue
            worst = max(worst, float(np.max(np.abs(values * np.roll(values, (q1 * step, q2 * step), (0, 1))))))
    return worst


def decimation_factor(values: np.ndarray, lam: float, limit: int | None = None) -> int:
    """Largest power of lambda^2 dividing n at which the samples are alias free."""
    base = integer_lambda(lam) ** 2
    n = values.shape[0]
    limit = n if limit is None else limit
    m = 1
    while m * base <= limit and n % (m * base) == 0 and aliasing(values, m * base) == 0.0:
        m *= base
    return m


@dataclass
class CoefficientPyramid:
    """Lowpass block plus one block per subband, keyed by subband name."""

    mode: str
    n: int
    lowpass: np.ndarray
    blocks: dict[str, np.ndarray]
    indices: dict[str, SubbandIndex]
    factors: dict[str, int] = field(default_factory=dict)
    lowpass_index: SubbandIndex | None = None

    def names(self) -> list[str]:
        return list(self.blocks)

    def energy(self) -> float:
        total = float(np.sum(np.abs(self.lowpass) ** 2))
        for b in self.blocks.values():
            total += float(np.sum(np.abs(b) ** 2))
        return total

    def factor(self, name: str) -> int:
        return self.factors.get(name, 1)

    def scaled(self, a: complex) -> "CoefficientPyramid":
        return CoefficientPyramid(self.mode, self.n, a * self.lowpass, {k: a * v for k, v in self.blocks.items()},
                                  dict(self.indices), dict(self.factors), self.lowpass_index)


def _check_image(image: np.ndarray, atlas: SystemAtlas) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ValueError(f"image must be square, got shape {img.shape}")
    if img.shape[0] != atlas.n:
        raise ValueError(f"image side {img.shape[0]} does not match the atlas grid {atlas.n}")
    return img


def _check_decimated(atlas: SystemAtlas) -> None:
    spec = atlas.spec
    lam = integer_lambda(spec.lam)
    for j in range(spec.j_coarse, spec.j_fine):
        if atlas.n % lam ** (2 * j):
            raise ValueError(f"grid side {atlas.n} is not divisible by lambda^(2j) = {lam ** (2 * j)}")


def block_factors(atlas: SystemAtlas) -> dict[str, int]:
    return {g.label: decimation_factor(g.values, atlas.spec.lam) for g in atlas.all_grids()}


def analyze(image: np.ndarray, atlas: SystemAtlas, mode: str = "undecimated",
            threads: int | None = None) -> CoefficientPyramid:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    img = _check_image(image, atlas)
    spectrum = np.fft.fft2(img)
    factors = {}
    if mode == "decimated":
        _check_decimated(atlas)
        factors = block_factors(atlas)

    def one(g: GeneratorGrid) -> np.ndarray:
        c = np.fft.ifft2(spectrum * to_fft_order(g.values))
        if mode == "undecimated":
            return c
        m = factors[g.label]
        return m * c[::m, ::m]

    grids = atlas.all_grids()
    workers = thread_count(threads)
    if workers == 1:
        out = [one(g) for g in grids]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(one, grids))
    blocks = {g.label: b for g, b in zip(grids[1:], out[1:])}
    return CoefficientPyramid(mode, atlas.n, out[0], blocks, {g.label: g.index for g in grids[1:]},
                              factors, atlas.lowpass.index)


def _block_spectrum(block: np.ndarray, m: int, n: int) -> np.ndarray:
    """DFT of the full-rate sequence obtained by zero-filling a decimated block."""
    if m == 1:
        return np.fft.fft2(block)
    up = np.zeros((n, n), dtype=complex)
    up[::m, ::m] = block
    return m * np.fft.fft2(up)


def synthesize(pyramid: CoefficientPyramid, atlas: SystemAtlas, real: bool = True,
               threads: int | None = None) -> np.ndarray:
    if pyramid.n != atlas.n:
        raise ValueError(f"pyramid side {pyramid.n} does not match the atlas grid {atlas.n}")
    missing = [g.label for g in atlas.subbands if g.label not in pyramid.blocks]
    if missing:
        raise ValueError(f"pyramid lacks blocks for {len(missing)} subbands, e.g. {missing[0]}")
    n = atlas.n

    def one(item: tuple[GeneratorGrid, np.ndarray]) -> np.ndarray:
        g, block = item
        m = pyramid.factor(g.label) if pyramid.mode == "decimated" else 1
        return _block_spectrum(block, m, n) * to_fft_order(g.values)

    items = [(atlas.lowpass, pyramid.lowpass)] + [(g, pyramid.blocks[g.label]) for g in atlas.subbands]
    workers = thread_count(threads)
    if workers == 1:
        parts = [one(it) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(one, items))
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    out = np.fft.ifft2(total)
    return out.real if real else out


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    den = float(np.linalg.norm(b))
    return float(np.linalg.norm(a - b)) / den if den else float(np.linalg.norm(a - b))


# ------------------------------------------------------------ shear lattice


def shear_matrix(lam: float, j: int, ell: int, cone: str) -> np.ndarray:
    """Frequency dilation S_ell B^j (times the exchange for the vertical cone)."""
    u = shear_lower(ell) @ parabolic_dual(lam, j)
    return u[:, ::-1] if cone == "v" else u


def framelet_lattice_samples(block: np.ndarray, values: np.ndarray, m: int, j: int, lam: int, cone: str) -> np.ndarray:
    """Coefficients on the framelet translation lattice of scale j.

    Entry k' holds lam^(-2j) c(N^j k') (horizontal) or the transposed
    position (vertical), where c is the full-rate coefficient function; the
    block is unfolded with the subband support, then trigonometric
    interpolation onto the finer lattice is a zero-padded inverse DFT.
    """
    n = values.shape[0]
    spec = _block_spectrum(block, m, n) * (to_fft_order(values) != 0)
    side = lam ** (2 * j) * n
    pad = np.zeros((side, side), dtype=complex)
    k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    pad[np.ix_(k % side, k % side)] = spec
    fine = np.fft.ifft2(pad) * (side / n) ** 2
    if cone == "v":
        fine = fine.T
    return lam ** (-2 * j) * fine


def extract_shear_coefficients(pyramid: CoefficientPyramid, atlas: SystemAtlas) -> dict[str, np.ndarray]:
    """Shear-system coefficients read off a decimated framelet pyramid.

    For subband (j, ell) the output entry at (k1, k2), k1 in [0, L),
    k2 in [0, L / lam^j) with L = lam^(2j) n, is lam^(j/2) times the framelet
    lattice coefficient at (k1 + ell k2, lam^j k2) modulo L.
    """
    spec = atlas.spec
    if spec.variant not in FRAMELET:
        raise ValueError("shear extraction reads a framelet pyramid; build the atlas with a framelet variant")
    if pyramid.mode != "decimated":
        raise ValueError("shear extraction expects a decimated pyramid")
    lam = integer_lambda(spec.lam)
    out = {}
    for g in atlas.subbands:
        idx = g.index
        side = lam ** (2 * idx.j) * atlas.n
        if side % lam ** idx.j:
            raise ValueError(f"lambda^j = {lam ** idx.j} does not divide the lattice side {side}")
        fine = framelet_lattice_samples(pyramid.blocks[g.label], g.values, pyramid.factor(g.label), idx.j, lam, idx.cone)
        k1 = np.arange(side)[:, None]
        k2 = np.arange(side // lam ** idx.j)[None, :]
        rows = (k1 + idx.ell * k2) % side
        cols = (lam ** idx.j * k2) % side
        out[g.label] = math.sqrt(lam ** idx.j) * fine[rows, cols]
    return out


def continuum_factor(index: SubbandIndex) -> float:
    """sqrt |det U|: factor turning a full-rate discrete coefficient into the continuum normalization."""
    return math.sqrt(abs(np.linalg.det(index.matrix)))


__all__ = [
    "CoefficientPyramid", "analyze", "synthesize", "extract_shear_coefficients", "decimation_factor",
    "aliasing", "relative_error", "shear_matrix", "framelet_lattice_samples", "continuum_factor",
    "to_fft_order", "MODES", "block_factors",
]
