import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from shearframe import io
from shearframe.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(path, **fields):
    path.write_text(json.dumps(fields, indent=2))
    return str(path)


@pytest.fixture
def small_atlas(tmp_path, runner):
    cfg = write_config(tmp_path / "cfg.json", preset="nonstat-default", grid_n=32)
    out = tmp_path / "atlas"
    res = runner.invoke(main, ["build", cfg, str(out)])
    assert res.exit_code == 0, res.output
    return out


def test_build_file_count(small_atlas):
    assert len(list(small_atlas.glob("*.f64"))) == 17
    assert (small_atlas / "manifest.json").is_file()


def test_build_preset_name(tmp_path, runner):
    res = runner.invoke(main, ["build", "shannon", str(tmp_path / "s"), "--threads", "2"])
    assert res.exit_code == 0, res.output
    atlas = io.load_atlas(tmp_path / "s")
    assert atlas.n == 256 and len(atlas.all_grids()) == 17
    for g in atlas.all_grids():
        assert set(np.unique(g.values)) <= {0.0, 1.0}


def test_build_invalid_eps0(tmp_path, runner):
    cfg = write_config(tmp_path / "bad.json", preset="nonstat-default", eps0=0.9)
    res = runner.invoke(main, ["build", cfg, str(tmp_path / "o")])
    assert res.exit_code == 2
    assert "bad.json:3:" in res.output and "eps0 < lambda^(j0-1)/2 = 0.25" in res.output
    assert not (tmp_path / "o").exists()


def test_build_missing_config(tmp_path, runner):
    res = runner.invoke(main, ["build", str(tmp_path / "none.json"), str(tmp_path / "o")])
    assert res.exit_code == 2


def test_verify_pass_and_stable_json(small_atlas, tmp_path, runner):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for target in (a, b):
        res = runner.invoke(main, ["verify", str(small_atlas), "--json", str(target), "--bracket-n", "8"])
        assert res.exit_code == 0, res.output
    assert a.read_bytes() == b.read_bytes()
    assert res.output.strip().endswith("PASS")
    report = json.loads(a.read_text())
    assert all(v["pass"] for v in report.values())


def test_verify_json_stdout(small_atlas, runner):
    res = runner.invoke(main, ["verify", str(small_atlas), "--json", "-", "--no-brackets"])
    assert res.exit_code == 0
    assert "partition" in json.loads(res.output)


def test_verify_counterexample_fails(tmp_path, runner):
    cfg = write_config(tmp_path / "c.json", preset="widened-counterexample", grid_n=32)
    runner.invoke(main, ["build", cfg, str(tmp_path / "c")])
    res = runner.invoke(main, ["verify", str(tmp_path / "c"), "--bracket-n", "8"])
    assert res.exit_code == 1
    assert res.output.strip().endswith("FAIL")


def test_verify_tolerance_override_from_config(tmp_path, runner):
    cfg = write_config(tmp_path / "t.json", preset="nonstat-default", grid_n=32, tolerances={"partition": -1.0})
    runner.invoke(main, ["build", cfg, str(tmp_path / "t")])
    res = runner.invoke(main, ["verify", str(tmp_path / "t"), "--no-brackets"])
    assert res.exit_code == 1


def test_verify_bad_atlas(tmp_path, runner):
    (tmp_path / "empty").mkdir()
    res = runner.invoke(main, ["verify", str(tmp_path / "empty")])
    assert res.exit_code == 2


@pytest.mark.parametrize("mode", ["undecimated", "decimated"])
def test_transform_roundtrip_pgm(tmp_path, runner, rng, mode):
    cfg = write_config(tmp_path / "f.json", preset="framelet-stationary", grid_n=32)
    runner.invoke(main, ["build", cfg, str(tmp_path / "atlas")])
    img = rng.integers(0, 256, (32, 32)).astype(float)
    io.write_pgm(tmp_path / "in.pgm", img)
    res = runner.invoke(main, ["transform", str(tmp_path / "atlas"), str(tmp_path / "in.pgm"), str(tmp_path / "pyr"),
                               "--mode", mode, "--roundtrip"])
    assert res.exit_code == 0, res.output
    metrics = json.loads((tmp_path / "pyr" / "metrics.json").read_text())
    assert metrics["pass"] and metrics["relative_l2_error"] <= metrics["tolerance"]
    np.testing.assert_array_equal(io.read_pgm(tmp_path / "pyr" / "reconstruction.pgm")[0], img)
    # a pyramid directory as input is synthesized back to an image
    res = runner.invoke(main, ["transform", str(tmp_path / "atlas"), str(tmp_path / "pyr"), str(tmp_path / "rec.raw")])
    assert res.exit_code == 0, res.output
    np.testing.assert_allclose(io.read_raw(tmp_path / "rec.raw"), img, atol=1e-9)


def test_transform_raw_without_roundtrip(small_atlas, tmp_path, runner, rng):
    io.write_raw(tmp_path / "in.raw", rng.standard_normal((32, 32)))
    res = runner.invoke(main, ["transform", str(small_atlas), str(tmp_path / "in.raw"), str(tmp_path / "p")])
    assert res.exit_code == 0
    metrics = json.loads(res.output)
    assert metrics["energy_relative_error"] <= 1e-10 and "relative_l2_error" not in metrics


def test_transform_size_mismatch(small_atlas, tmp_path, runner):
    io.write_raw(tmp_path / "in.raw", np.zeros((16, 16)))
    res = runner.invoke(main, ["transform", str(small_atlas), str(tmp_path / "in.raw"), str(tmp_path / "p")])
    assert res.exit_code == 2 and "does not match" in res.output


def test_transform_decimated_needs_integer_lambda(tmp_path, runner):
    cfg = write_config(tmp_path / "f.json", preset="framelet-stationary", grid_n=32, **{"lambda": 1.5})
    runner.invoke(main, ["build", cfg, str(tmp_path / "atlas")])
    io.write_raw(tmp_path / "in.raw", np.zeros((32, 32)))
    res = runner.invoke(main, ["transform", str(tmp_path / "atlas"), str(tmp_path / "in.raw"), str(tmp_path / "p"),
                               "--mode", "decimated"])
    assert res.exit_code == 2


def test_filterbank(tmp_path, runner):
    cfg = write_config(tmp_path / "f.json", preset="framelet-non-stationary", grid_n=32)
    res = runner.invoke(main, ["filterbank", cfg, str(tmp_path / "m"), "--json", str(tmp_path / "pr.json")])
    assert res.exit_code == 0, res.output
    report = json.loads((tmp_path / "pr.json").read_text())
    assert len([k for k in report if k.startswith("pr2/j0/")]) == 15
    assert (tmp_path / "m" / "pr_report.json").read_text() == io.dump_json(report)
    masks = io.load_masks(tmp_path / "m")
    assert sorted(masks) == [0, 1]


def test_filterbank_rejects_other_variants(tmp_path, runner):
    res = runner.invoke(main, ["filterbank", "glued", str(tmp_path / "m")])
    assert res.exit_code == 2 and "framelet" in res.output


@pytest.mark.parametrize("mode", ["sum", "argmax"])
def test_tiling(small_atlas, tmp_path, runner, mode):
    res = runner.invoke(main, ["tiling", str(small_atlas), str(tmp_path / "t.pgm"), "--mode", mode])
    assert res.exit_code == 0
    img, mv = io.read_pgm(tmp_path / "t.pgm")
    assert img.shape == (32, 32) and mv == 255
    if mode == "sum":
        assert np.all(img == 255)


def test_threads_env_fallback(small_atlas, tmp_path, runner):
    res = runner.invoke(main, ["verify", str(small_atlas), "--no-brackets", "--json", "-"],
                        env={**os.environ, "SHEARFRAME_THREADS": "1"})
    assert res.exit_code == 0


def test_bad_threads_flag(small_atlas, runner):
    res = runner.invoke(main, ["verify", str(small_atlas), "--threads", "0"])
    assert res.exit_code == 2
