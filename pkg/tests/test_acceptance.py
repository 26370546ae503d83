"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are written
straight to the terminal.
"""

import time

import numpy as np
import pytest

from shearframe import filterbank as F
from shearframe import transform as T
from shearframe import verification as V
from shearframe import windows as W
from shearframe.generators import PointSet, build_atlas, construction
from shearframe.geometry import FrequencyGrid, SubbandIndex, interior_pure_bound, shear_bound
from shearframe.presets import COUNTEREXAMPLE, VALID_PRESETS, preset

SMOOTH = ["nonstat-default", "quasi-stationary", "cone-cut", "glued", "framelet-stationary", "framelet-non-stationary"]
FRAMELETS = ["framelet-stationary", "framelet-non-stationary"]


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail

    return emit


def test_1_partition_of_unity(report):
    lines, ok = [], True
    for name in SMOOTH:
        start = time.perf_counter()
        res = V.check_partition(build_atlas(preset(name, grid_n=1024)), tol=1e-10)
        elapsed = time.perf_counter() - start
        good = res.max_abs_deviation <= 1e-10 and elapsed <= 60
        ok &= good
        lines.append(f"{name} dev={res.max_abs_deviation:.1e} t={elapsed:.1f}s")
    report(1, ok, "partition at N=1024; " + "; ".join(lines))


def test_2_shannon_exact(report):
    atlas = build_atlas(preset("shannon", grid_n=1024))
    mask = V.boundary_mask(atlas.spec, atlas.grid)
    dev = np.abs(atlas.squared_sum() - 1)[~mask].max()
    frac = mask.mean()
    report(2, dev == 0.0 and frac < 0.01, f"shannon off-mask deviation {dev}, mask fraction {frac:.4f}")


def test_3_nonoverlap(report):
    worst = {name: V.check_nonoverlap(preset(name)).worst() for name in VALID_PRESETS}
    counter = V.check_nonoverlap(preset(COUNTEREXAMPLE))
    ok = all(w <= 1e-14 for w in worst.values()) and not counter.passed
    report(3, ok, f"max shifted product {max(worst.values()):.1e} over shipped presets; "
                  f"counterexample {counter.worst():.2f} (fails as expected)")


def _pure_shear(spec, j, ell, x1, x2):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(x1 == 0, np.inf, x2 / x1)
    ang = np.where(np.isfinite(r), W.gamma_eps(spec.params.eps, spec.lam ** j * np.nan_to_num(r, posinf=0) + ell), 0.0)
    return W.beta(spec.params, spec.lam ** (-2 * j) * x1) * ang


def test_4_subsystem(report):
    worst, checked = 0.0, 0
    grid = FrequencyGrid(512)
    for name, scales in (("nonstat-default", range(1, 5)), ("quasi-stationary", range(0, 5))):
        spec = preset(name, j_fine=5)
        sys = construction(spec)
        for j in scales:
            x1, x2 = (spec.lam ** (2 * j) * a for a in grid.mesh())
            pts = PointSet(x1, x2)
            for ell in range(-interior_pure_bound(spec, j), interior_pure_bound(spec, j) + 1):
                got = sys.tile(SubbandIndex(j, ell, "h", "interior"), pts)
                worst = max(worst, float(np.max(np.abs(got - _pure_shear(spec, j, ell, x1, x2)))))
                checked += 1
    report(4, worst <= 1e-12 and checked > 0, f"{checked} interior generators equal pure shears, max diff {worst:.1e}")


def test_5_roundtrip(report):
    rng = np.random.default_rng(2024)
    worst, slowest = {}, 0.0
    cases = [(name, "undecimated", 1e-10) for name in VALID_PRESETS] + [(name, "decimated", 1e-8) for name in FRAMELETS]
    ok = True
    for name, mode, tol in cases:
        atlas = build_atlas(preset(name, grid_n=256))
        errs = []
        for _ in range(10):
            img = rng.standard_normal((256, 256))
            start = time.perf_counter()
            err = T.relative_error(T.synthesize(T.analyze(img, atlas, mode), atlas), img)
            slowest = max(slowest, time.perf_counter() - start)
            errs.append(err)
        worst[f"{name}/{mode}"] = max(errs)
        ok &= max(errs) <= tol
    ok &= slowest <= 10
    top = max(worst, key=worst.get)
    report(5, ok, f"{len(cases) * 10} round trips, worst {worst[top]:.1e} ({top}), slowest image {slowest:.2f}s")


def _inner_product_oracle(img, values, lam, j, ell, cone, k1, k2):
    n = img.shape[0]
    spectrum = np.fft.fftshift(np.fft.fft2(img)) * values
    xi = FrequencyGrid(n).xi
    x1, x2 = (k1 + ell * k2) / lam ** (2 * j), k2 / lam ** j
    if cone == "v":
        x1, x2 = x2, x1
    phase = np.exp(1j * (x1[:, None, None] * xi[None, :, None] + x2[:, None, None] * xi[None, None, :]))
    return lam ** (-1.5 * j) * np.sum(spectrum[None] * phase, axis=(1, 2)) / n ** 2


def test_6_extraction(report):
    rng = np.random.default_rng(6)
    worst, count = 0.0, 0
    for name in FRAMELETS:
        atlas = build_atlas(preset(name, grid_n=32))
        for _ in range(2):
            img = rng.standard_normal((32, 32))
            shear = T.extract_shear_coefficients(T.analyze(img, atlas, "decimated"), atlas)
            for g in atlas.subbands:
                if g.index.j > 1:
                    continue
                block = shear[g.label]
                k1 = rng.integers(0, block.shape[0], 64)
                k2 = rng.integers(0, block.shape[1], 64)
                want = _inner_product_oracle(img, g.values, 2, g.index.j, g.index.ell, g.index.cone, k1, k2)
                worst = max(worst, float(np.max(np.abs(block[k1, k2] - want))))
                count += 1
    report(6, worst <= 1e-8, f"{count} subband blocks against direct inner products, max diff {worst:.1e}")


def test_7_filterbank(report):
    details, ok = [], True
    for name in FRAMELETS:
        rep, _ = F.filterbank_report(preset(name))
        d = rep.to_dict()
        pr2 = [k for k in d if k.startswith("pr2/")]
        per_scale = {j: sum(k.startswith(f"pr2/j{j}/") for k in pr2) for j in (0, 1)}
        vacuous = sum(d[k]["status"] == "vacuous" for k in pr2)
        ok &= rep.passed and rep.worst() <= 1e-10 and all(c == 15 for c in per_scale.values())
        details.append(f"{name} worst {rep.worst():.1e}, {len(pr2)} cosets ({vacuous} vacuous)")
    report(7, ok, "; ".join(details))


def test_8_window_identities(report):
    rng = np.random.default_rng(8)
    p = W.WindowParams()
    lam2 = p.lam ** 2
    x = rng.uniform(-2, 2, 100_000)
    xi = rng.uniform(-4 * np.pi, 4 * np.pi, 100_000)
    xp = rng.uniform(-np.pi, np.pi, 100_000)
    res = {
        "nu": np.abs(W.nu(x) ** 2 + W.nu(-x) ** 2 - 1).max(),
        "alpha_beta": np.abs(W.alpha(p, xi) ** 2 + W.beta(p, xi) ** 2 - W.alpha(p, xi / lam2) ** 2).max(),
        "mu": np.abs(W.alpha(p, lam2 * xp) - W.mask_mu(p, xp) * W.alpha(p, xp)).max(),
        "upsilon": np.abs(W.beta(p, lam2 * xp) - W.mask_upsilon(p, xp) * W.alpha(p, xp)).max(),
        "gamma": np.abs(sum(W.gamma_eps(p.eps, 3 * x + k) ** 2 for k in range(-8, 9)) - 1).max(),
    }
    r = rng.uniform(-1, 1, 100_000)
    ns, st = 0.0, 0.0
    for j in range(5):
        lam_j = p.lam ** j
        cap = W.shear_count_smooth(lam_j, p.eps)
        u = lam_j * r
        total = sum(W.gamma_eps(p.eps, u + ell) ** 2 for ell in range(-cap + 1, cap))
        total = total + W.gamma_corner_smooth(p, j, "+", u - cap) ** 2 + W.gamma_corner_smooth(p, j, "-", u + cap) ** 2
        ns = max(ns, np.abs(total - 1).max())
        y = r * (cap + 0.5 - p.eps) / lam_j
        total = sum(W.gamma_eps(p.eps, lam_j * y + ell) ** 2 for ell in range(-cap, cap + 1))
        st = max(st, np.abs(total - 1).max())
    res["angular_nonstationary"], res["angular_stationary"] = ns, st
    worst = max(res.values())
    report(8, worst <= 1e-12, "1e5 points each, " + ", ".join(f"{k} {v:.1e}" for k, v in res.items()))


def test_9_smoothness(report):
    p = W.WindowParams()
    rp, lam2 = p.rho * np.pi, p.lam ** 2
    junctions = {
        "nu-1": (W.nu, -1.0), "nu+1": (W.nu, 1.0),
        "alpha_plateau": (lambda s: W.alpha(p, s), (1 - p.t) * rp / lam2),
        "alpha_support": (lambda s: W.alpha(p, s), rp / lam2),
        "beta_inner": (lambda s: W.beta(p, s), rp / lam2),
        "beta_plateau": (lambda s: W.beta(p, s), (1 - p.t) * rp),
        "beta_support": (lambda s: W.beta(p, s), rp),
        "gamma_plateau": (lambda s: W.gamma_eps(p.eps, s), 0.5 - p.eps),
        "gamma_support": (lambda s: W.gamma_eps(p.eps, s), 0.5 + p.eps),
        "corner_branch": (lambda s: W.gamma_corner_smooth(p, 1, "+", s), -0.5 + p.eps),
        "corner_support": (lambda s: W.gamma_corner_smooth(p, 1, "+", s),
                           p.lam * (1 + 2 * p.eps0 / lam2) - W.shear_count_smooth(p.lam, p.eps)),
    }
    rough = [k for k, (f, x0) in junctions.items() if not V.smoothness_probe(f, x0).smooth]
    glued, cut = preset("glued"), preset("cone-cut")
    glued_rough, cut_smooth = [], []
    for j in (0, 1):
        cap = shear_bound(glued, j)
        radius = 0.75 * glued.lam ** (2 * j) * np.pi
        for ell, side in ((cap, -1), (-cap, 1)):
            kind = "seam_plus" if ell > 0 else "seam_minus"
            if not V.seam_probe(glued, SubbandIndex(j, ell, "h", kind), radius, side).smooth:
                glued_rough.append((j, ell))
            if V.seam_probe(cut, SubbandIndex(j, ell, "h", kind), radius, side).smooth:
                cut_smooth.append((j, ell))
    ok = not rough and not glued_rough and not cut_smooth
    report(9, ok, f"{len(junctions)} window junctions smooth, glued seam smooth, "
                  f"cone-cut seam pieces fail the probe as expected (unexpected: {rough + glued_rough + cut_smooth})")
