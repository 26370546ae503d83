import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shearframe import transform as T
from shearframe.generators import build_atlas
from shearframe.geometry import FrequencyGrid
from shearframe.presets import VALID_PRESETS, preset

FRAMELETS = ["framelet-stationary", "framelet-non-stationary"]


@pytest.fixture(scope="module")
def atlases64():
    return {name: build_atlas(preset(name, grid_n=64)) for name in VALID_PRESETS}


@pytest.mark.parametrize("name", VALID_PRESETS)
def test_undecimated_roundtrip_and_energy(atlases64, rng, name):
    atlas = atlases64[name]
    img = rng.standard_normal((64, 64))
    pyr = T.analyze(img, atlas)
    assert abs(pyr.energy() - np.sum(img ** 2)) / np.sum(img ** 2) <= 1e-10
    assert T.relative_error(T.synthesize(pyr, atlas), img) <= 1e-10


@pytest.mark.parametrize("name", FRAMELETS)
def test_decimated_roundtrip_and_energy(atlases64, rng, name):
    atlas = atlases64[name]
    img = rng.standard_normal((64, 64))
    pyr = T.analyze(img, atlas, "decimated")
    assert abs(pyr.energy() - np.sum(img ** 2)) / np.sum(img ** 2) <= 1e-8
    assert T.relative_error(T.synthesize(pyr, atlas), img) <= 1e-8
    # decimation actually happens away from the coarsest level
    assert max(pyr.factors.values()) > 1
    for name_, block in pyr.blocks.items():
        assert block.shape == (64 // pyr.factor(name_),) * 2


def test_zero_image_gives_zero_pyramid(atlases64):
    pyr = T.analyze(np.zeros((64, 64)), atlases64["nonstat-default"])
    assert pyr.energy() == 0.0


def test_single_frequency_energy(atlases64):
    # a pure exponential at a grid frequency keeps its energy because the squares sum to one there
    atlas = atlases64["quasi-stationary"]
    k = np.arange(64)
    img = np.exp(2j * np.pi * (5 * k[:, None] + 3 * k[None, :]) / 64)
    pyr = T.analyze(img, atlas)
    assert pyr.energy() == pytest.approx(64 * 64, rel=1e-12)


def test_linearity(atlases64, rng):
    atlas = atlases64["glued"]
    f, g = rng.standard_normal((2, 64, 64))
    pa, pf, pg = T.analyze(2 * f - 3 * g, atlas), T.analyze(f, atlas), T.analyze(g, atlas)
    for name in pa.blocks:
        np.testing.assert_allclose(pa.blocks[name], 2 * pf.blocks[name] - 3 * pg.blocks[name], atol=1e-12)


def test_shift_covariance(atlases64, rng):
    atlas = atlases64["nonstat-default"]
    img = rng.standard_normal((64, 64))
    shift = (5, -9)
    a, b = T.analyze(img, atlas), T.analyze(np.roll(img, shift, (0, 1)), atlas)
    for name in a.blocks:
        np.testing.assert_allclose(np.roll(a.blocks[name], shift, (0, 1)), b.blocks[name], atol=1e-12)


def test_scaled_pyramid():
    pyr = T.CoefficientPyramid("undecimated", 2, np.ones((2, 2)), {"x": np.ones((2, 2))}, {})
    assert pyr.scaled(2).energy() == 4 * pyr.energy()


def test_aliasing_and_decimation_factor():
    vals = np.zeros((16, 16))
    vals[7:10, 7:10] = 1.0  # support |k| <= 1 around the center
    assert T.aliasing(vals, 4) == 0.0
    assert T.aliasing(vals, 8) == 1.0  # step 2 is narrower than the support
    assert T.decimation_factor(vals, 2.0) == 4
    assert T.decimation_factor(np.ones((16, 16)), 2.0) == 1
    assert T.decimation_factor(vals, 2.0, limit=2) == 1
    with pytest.raises(ValueError):
        T.aliasing(vals, 3)


def test_integer_lambda():
    assert T.integer_lambda(2.0) == 2
    with pytest.raises(ValueError, match="integer lambda"):
        T.integer_lambda(1.5)


def test_error_cases(atlases64):
    atlas = atlases64["nonstat-default"]
    with pytest.raises(ValueError, match="square"):
        T.analyze(np.zeros((64, 32)), atlas)
    with pytest.raises(ValueError, match="does not match"):
        T.analyze(np.zeros((32, 32)), atlas)
    with pytest.raises(ValueError, match="mode"):
        T.analyze(np.zeros((64, 64)), atlas, "bogus")
    pyr = T.analyze(np.zeros((64, 64)), atlas)
    del pyr.blocks[next(iter(pyr.blocks))]
    with pytest.raises(ValueError, match="lacks"):
        T.synthesize(pyr, atlas)
    odd = build_atlas(preset("framelet-stationary", grid_n=6, j_fine=2))
    with pytest.raises(ValueError, match="divisible"):
        T.analyze(np.zeros((6, 6)), odd, "decimated")
    nonint = build_atlas(preset("framelet-stationary", grid_n=32, **{"lambda": 1.5}))
    with pytest.raises(ValueError, match="integer lambda"):
        T.analyze(np.zeros((32, 32)), nonint, "decimated")


def test_extraction_errors(atlases64):
    atlas = atlases64["nonstat-default"]
    pyr = T.analyze(np.zeros((64, 64)), atlas, "decimated")
    with pytest.raises(ValueError, match="framelet"):
        T.extract_shear_coefficients(pyr, atlas)
    fr = atlases64["framelet-stationary"]
    with pytest.raises(ValueError, match="decimated"):
        T.extract_shear_coefficients(T.analyze(np.zeros((64, 64)), fr), fr)


def test_shear_matrix_and_continuum_factor():
    np.testing.assert_array_equal(T.shear_matrix(2.0, 1, 1, "h"), [[0.25, 0], [0.25, 0.5]])
    np.testing.assert_array_equal(T.shear_matrix(2.0, 1, 1, "v"), [[0, 0.25], [0.5, 0.25]])
    atlas = build_atlas(preset("framelet-stationary", grid_n=16))
    g = atlas.by_name("j1_l+0_h")
    assert T.continuum_factor(g.index) == pytest.approx(math.sqrt(abs(np.linalg.det(g.index.matrix))))


# ------------------------------------------------------------ shear extraction


def shear_oracle(img: np.ndarray, values: np.ndarray, lam: int, j: int, ell: int, cone: str,
                 k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
    """Inner product with the shear element at B^j S^ell k by direct summation over the grid frequencies."""
    n = img.shape[0]
    spectrum = np.fft.fftshift(np.fft.fft2(img))
    xi = FrequencyGrid(n).xi
    x1 = (k1 + ell * k2) / lam ** (2 * j)
    x2 = k2 / lam ** j
    if cone == "v":
        x1, x2 = x2, x1
    out = np.empty(k1.shape, dtype=complex)
    weighted = spectrum * values
    for i, (a, b) in enumerate(zip(x1.ravel(), x2.ravel())):
        phase = np.exp(1j * (a * xi[:, None] + b * xi[None, :]))
        out.ravel()[i] = np.sum(weighted * phase)
    return lam ** (-1.5 * j) * out / n ** 2


@pytest.mark.parametrize("name", FRAMELETS)
def test_extraction_matches_inner_products(rng, name):
    atlas = build_atlas(preset(name, grid_n=32))
    img = rng.standard_normal((32, 32))
    pyr = T.analyze(img, atlas, "decimated")
    shear = T.extract_shear_coefficients(pyr, atlas)
    lam = 2
    for g in atlas.subbands:
        idx = g.index
        assert idx.j <= 1
        block = shear[g.label]
        assert block.shape == (32 * lam ** (2 * idx.j), 32 * lam ** idx.j)
        k1 = rng.integers(0, block.shape[0], 40)
        k2 = rng.integers(0, block.shape[1], 40)
        want = shear_oracle(img, g.values, lam, idx.j, idx.ell, idx.cone, k1, k2)
        assert np.max(np.abs(block[k1, k2] - want)) <= 1e-8, g.label


def test_extraction_scale_zero_is_identity(rng):
    atlas = build_atlas(preset("framelet-stationary", grid_n=32))
    img = rng.standard_normal((32, 32))
    full = T.analyze(img, atlas)
    shear = T.extract_shear_coefficients(T.analyze(img, atlas, "decimated"), atlas)
    # vertical outputs are indexed in exchanged coordinates
    for g in atlas.subbands:
        if g.index.j == 0 and g.index.ell == 0:
            want = full.blocks[g.label] if g.index.cone == "h" else full.blocks[g.label].T
            np.testing.assert_allclose(shear[g.label], want, atol=1e-12)


def test_extraction_index_map():
    # shear index (3, 2) at j=1, ell=1 reads lattice index (5, 4) with weight sqrt(2)
    atlas = build_atlas(preset("framelet-stationary", grid_n=16))
    g = atlas.by_name("j1_l+1_h")
    img = np.random.default_rng(7).standard_normal((16, 16))
    pyr = T.analyze(img, atlas, "decimated")
    fine = T.framelet_lattice_samples(pyr.blocks[g.label], g.values, pyr.factor(g.label), 1, 2, "h")
    shear = T.extract_shear_coefficients(pyr, atlas)[g.label]
    assert shear[3, 2] == pytest.approx(math.sqrt(2) * fine[5, 4], abs=1e-14)


@settings(max_examples=15)
@given(st.integers(0, 63), st.integers(0, 63))
def test_shift_covariance_property(s1, s2):
    atlas = _quasi32()
    img = np.random.default_rng(s1 * 64 + s2).standard_normal((32, 32))
    a, b = T.analyze(img, atlas), T.analyze(np.roll(img, (s1, s2), (0, 1)), atlas)
    for name in a.blocks:
        np.testing.assert_allclose(np.roll(a.blocks[name], (s1, s2), (0, 1)), b.blocks[name], atol=1e-12)


_CACHE = {}


def _quasi32():
    if "q" not in _CACHE:
        _CACHE["q"] = build_atlas(preset("quasi-stationary", grid_n=32))
    return _CACHE["q"]
