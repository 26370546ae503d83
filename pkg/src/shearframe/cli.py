"""Command-line front end: build, verify, transform, filterbank and tiling.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 for configuration or input errors.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import io
from .geometry import SpecError
from .presets import PRESETS

THREADS_HELP = "Worker cap (falls back to SHEARFRAME_THREADS, then the CPU count)."
ROUNDTRIP_TOL = {"undecimated": 1e-10, "decimated": 1e-8}


class UsageFailure(click.ClickException):
    exit_code = 2


def _fail(message: str) -> None:
    raise UsageFailure(message)


def _load_run(config: str) -> io.RunConfig:
    """A config file path, or the name of a shipped preset."""
    try:
        if not Path(config).exists() and config in PRESETS:
            return io.parse_config(io.dump_json({"preset": config}), f"preset:{config}")
        return io.load_config(config)
    except io.ConfigError as exc:
        _fail(str(exc))


def _load_atlas(path: str):
    try:
        return io.load_atlas(path)
    except (OSError, ValueError, KeyError) as exc:
        _fail(f"cannot read atlas {path}: {exc}")


def _emit_json(text: str, target: str | None) -> None:
    if target is None:
        return
    if target == "-":
        click.echo(text, nl=False)
    else:
        Path(target).write_text(text)


@click.group()
@click.version_option(package_name="artifact", prog_name="shearframe")
def main() -> None:
    """Smooth affine shear tight frames on DFT grids."""


@main.command()
@click.argument("config")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--threads", type=click.IntRange(min=1), default=None, help=THREADS_HELP)
def build(config: str, out_dir: str, threads: int | None) -> None:
    """Sample every generator of CONFIG (JSON file or preset name) into OUT_DIR."""
    from .generators import build_atlas

    run = _load_run(config)
    atlas = build_atlas(run.spec, threads=threads or run.threads)
    manifest = io.save_atlas(atlas, out_dir, run.tolerances)
    click.echo(f"{len(atlas.all_grids())} grids ({len(atlas.subbands)} subbands + lowpass) of side {atlas.n} -> {manifest}")


@main.command()
@click.argument("atlas_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--json", "json_out", default=None, help="Write the JSON report to this path ('-' for stdout).")
@click.option("--bracket-n", type=click.IntRange(min=4, max=64), default=32, show_default=True,
              help="Cell grid side of the bracket check.")
@click.option("--no-brackets", is_flag=True, help="Skip the bracket characterization.")
@click.option("--threads", type=click.IntRange(min=1), default=None, help=THREADS_HELP)
def verify(atlas_dir: str, json_out: str | None, bracket_n: int, no_brackets: bool, threads: int | None) -> None:
    """Check partition, non-overlap, cascade, lowpass limit and brackets."""
    from .verification import verify_atlas

    atlas = _load_atlas(atlas_dir)
    try:
        rep = verify_atlas(atlas, bracket_n=bracket_n, include_brackets=not no_brackets,
                           tolerances=io.atlas_tolerances(atlas_dir))
    except ValueError as exc:
        _fail(str(exc))
    _emit_json(rep.to_json() + "\n", json_out)
    if json_out != "-":
        click.echo(rep.table())
        click.echo("PASS" if rep.passed else "FAIL")
    sys.exit(0 if rep.passed else 1)


@main.command()
@click.argument("atlas_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("image_in", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--mode", type=click.Choice(["undecimated", "decimated"]), default="undecimated", show_default=True)
@click.option("--roundtrip", is_flag=True, help="Also synthesize, write the reconstruction and check the error.")
@click.option("--threads", type=click.IntRange(min=1), default=None, help=THREADS_HELP)
def transform(atlas_dir: str, image_in: str, out: str, mode: str, roundtrip: bool, threads: int | None) -> None:
    """Analyze IMAGE_IN into the pyramid directory OUT.

    If IMAGE_IN is a pyramid directory it is synthesized instead and OUT
    names the output image (.pgm, otherwise raw float64).
    """
    from .transform import analyze, relative_error, synthesize

    atlas = _load_atlas(atlas_dir)
    if Path(image_in).is_dir():
        try:
            pyr = io.load_pyramid(image_in)
            img = synthesize(pyr, atlas, threads=threads)
        except (OSError, ValueError, KeyError) as exc:
            _fail(str(exc))
        io.write_image(out, img)
        click.echo(f"reconstruction -> {out}")
        return
    try:
        img, maxval = io.read_image(image_in)
        pyr = analyze(img, atlas, mode, threads=threads)
    except (OSError, ValueError, KeyError) as exc:
        _fail(str(exc))
    io.save_pyramid(pyr, out, atlas.spec)
    energy = float(np.sum(img ** 2))
    metrics = {"mode": mode, "blocks": len(pyr.blocks) + 1,
               "energy_relative_error": abs(pyr.energy() - energy) / energy if energy else pyr.energy()}
    ok = True
    if roundtrip:
        rec = synthesize(pyr, atlas, threads=threads)
        metrics["relative_l2_error"] = relative_error(rec, img)
        metrics["tolerance"] = ROUNDTRIP_TOL[mode]
        ok = metrics["relative_l2_error"] <= metrics["tolerance"]
        suffix = ".pgm" if maxval is not None else ".raw"
        io.write_image(Path(out) / f"reconstruction{suffix}", rec, maxval)
    metrics["pass"] = ok
    text = io.dump_json(metrics)
    (Path(out) / "metrics.json").write_text(text)
    click.echo(text, nl=False)
    sys.exit(0 if ok else 1)


@main.command()
@click.argument("config")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--json", "json_out", default=None, help="Also write the PR report here ('-' for stdout).")
@click.option("--threads", type=click.IntRange(min=1), default=None, help=THREADS_HELP)
def filterbank(config: str, out_dir: str, json_out: str | None, threads: int | None) -> None:
    """Refinement masks of CONFIG with refinability and perfect-reconstruction checks."""
    from .filterbank import filterbank_report

    run = _load_run(config)
    try:
        rep, masks = filterbank_report(run.spec, threads=threads or run.threads)
    except (SpecError, ValueError) as exc:
        _fail(str(exc))
    io.save_masks(masks, run.spec, out_dir, rep.to_dict())
    _emit_json(rep.to_json() + "\n", json_out)
    if json_out != "-":
        click.echo(rep.table())
        click.echo("PASS" if rep.passed else "FAIL")
    sys.exit(0 if rep.passed else 1)


@main.command()
@click.argument("atlas_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("out_pgm", type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(["sum", "argmax"]), default="sum", show_default=True)
def tiling(atlas_dir: str, out_pgm: str, mode: str) -> None:
    """Render the frequency tiling: summed squares (flat for a tight frame) or dominant subband."""
    atlas = _load_atlas(atlas_dir)
    raster = io.tiling_sum(atlas) if mode == "sum" else io.tiling_argmax(atlas)
    io.write_pgm(out_pgm, raster, 255)
    click.echo(f"{mode} tiling {raster.shape[1]}x{raster.shape[0]} -> {out_pgm}")


if __name__ == "__main__":
    main()
