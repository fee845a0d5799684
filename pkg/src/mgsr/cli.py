"""Command-line driver for data generation, fitting, solving, and benchmarks."""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from .bench import RunSpec, build_schedule, initial_grid, run_batch, snapshot_series
from .datagen import (
    DatasetManifest,
    derive_global_spec,
    evolve,
    field_paths,
    init_broadband_velocity,
    sample_training_windows,
    window_space_size,
    write_mgds,
)
from .grid import read_pgrd, write_pgrd
from .multigrid import MultigridConfig, gauss_seidel_solve, solve
from .network import write_srwt
from .prolongation import NormalizationSpec, fit_linear_stencil
from .spectral import power_spectrum, spectrum_to_csv


@click.group()
def main():
    """Multigrid Poisson solver with super-resolution prolongation."""


@main.command()
@click.option("--n", default=192, show_default=True)
@click.option("--fields", "n_fields", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--nu", default=1e-3, show_default=True)
@click.option("--k-peak", default=4, show_default=True)
@click.option("--snapshot-every", default=20, show_default=True)
def datagen(n, n_fields, seed, out_dir, nu, k_peak, snapshot_every):
    """Evolve decaying turbulence and write pressure/source snapshot pairs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vel = init_broadband_velocity(n, seed, k_peak=k_peak, nu=nu)
    snaps = evolve(vel, None, n_fields * snapshot_every, snapshot_every=snapshot_every)
    for fid, (p, f) in enumerate(snaps):
        pp, fp = field_paths(out, fid)
        write_pgrd(p, pp)
        write_pgrd(f, fp)
    spec = derive_global_spec([p for p, _ in snaps])
    manifest = {
        "n": n,
        "fields": len(snaps),
        "seed": seed,
        "nu": nu,
        "k_peak": k_peak,
        "p_min": spec.p_min,
        "p_max": spec.p_max,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    click.echo(f"wrote {len(snaps)} (p, f) pairs to {out}")


@main.command()
@click.option("--fields", "fields_dir", required=True, type=click.Path(exists=True))
@click.option("--count", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--field-ids", default=None, help="comma-separated subset, e.g. 0,1,2")
def sample(fields_dir, count, seed, out_path, field_ids):
    """Sample coarse/fine training windows into an MGDS dataset."""
    fdir = Path(fields_dir)
    with open(fdir / "manifest.json") as fh:
        m = json.load(fh)
    ids = (
        [int(x) for x in field_ids.split(",")]
        if field_ids
        else list(range(m["fields"]))
    )
    fields = [read_pgrd(field_paths(fdir, i)[0]) for i in ids]
    spec = NormalizationSpec(m["p_min"], m["p_max"])
    samples = sample_training_windows(fields, count, seed, spec)
    write_mgds(samples, out_path)
    manifest = DatasetManifest(
        count=count,
        seed=seed,
        p_min=spec.p_min,
        p_max=spec.p_max,
        source_fields=ids,
        extras={"window_space_per_field": window_space_size(m["n"])},
    )
    manifest.to_json(str(out_path) + ".json")
    click.echo(f"wrote {count} samples to {out_path}")


@main.command("fit-linear")
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--ridge", default=1e-8, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def fit_linear(dataset, ridge, out_path):
    """Fit the affine 4x window stencil on an MGDS dataset."""
    from .datagen import read_mgds

    samples = read_mgds(dataset)
    w = fit_linear_stencil([(s.inputs, s.target) for s in samples], ridge=ridge)
    write_srwt(w, out_path)
    click.echo(f"fitted stencil on {len(samples)} samples -> {out_path}")


def _config_from_flags(npre, nsmooth, nstep, rmin, mode, tol, max_iter):
    kwargs = dict(
        n_smooth_pre=npre,
        n_smooth=nsmooth,
        n_step=nstep,
        r_min=rmin,
        cycle_mode=mode,
        max_iter=max_iter,
    )
    if tol is not None:
        kwargs["tol"] = tol
    return MultigridConfig(**kwargs)


@main.command("solve")
@click.option("--p0", default="zero", show_default=True, help="zero or random:SEED")
@click.option("--source", required=True, type=click.Path(exists=True))
@click.option("--op", default="spline", show_default=True,
              help="spline | linear:PATH | gan:PATH | gs-only")
@click.option("--schedule", default="single", type=click.Choice(["single", "alternate"]))
@click.option("--npre", default=10, show_default=True)
@click.option("--nsmooth", default=20, show_default=True)
@click.option("--nstep", default=4, show_default=True)
@click.option("--rmin", default=12, show_default=True)
@click.option("--mode", default="correction", type=click.Choice(["correction", "solution"]))
@click.option("--tol", default=None, type=float)
@click.option("--max-iter", default=500, show_default=True)
@click.option("--p-min", default=None, type=float)
@click.option("--p-max", default=None, type=float)
@click.option("--norm", "norm_mode", default="per-grid", show_default=True,
              type=click.Choice(["per-grid", "global"]),
              help="symlog bounds for window operators at solve time")
@click.option("--trace", "trace_path", default=None, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
def solve_cmd(p0, source, op, schedule, npre, nsmooth, nstep, rmin, mode, tol,
              max_iter, p_min, p_max, norm_mode, trace_path, out_path):
    """Solve one Poisson problem from a PGRD source file."""
    from .bench import ScheduleSpec

    f = read_pgrd(source)
    cfg = _config_from_flags(npre, nsmooth, nstep, rmin, mode, tol, max_iter)
    seed = 0
    kind = p0
    if p0.startswith("random:"):
        kind, seed = "random", int(p0.split(":", 1)[1])
    start = initial_grid(kind, f.n, f.h, seed)
    if op == "gs-only":
        sol, trace = gauss_seidel_solve(start, f, tol=tol)
    else:
        spec = (
            NormalizationSpec(p_min, p_max)
            if p_min is not None and p_max is not None
            else None
        )
        sched = build_schedule(
            ScheduleSpec("cli", op, alternate=(schedule == "alternate")),
            cfg, spec, per_grid=(norm_mode == "per-grid"),
        )
        sol, trace = solve(start, f, cfg, sched)
    if trace_path:
        trace.to_csv(trace_path)
    if out_path:
        write_pgrd(sol, out_path)
    status = "converged" if trace.converged else "NOT converged"
    click.echo(f"{status} after {trace.n_iterations} iterations")


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
def bench(spec_path):
    """Run a benchmark batch from a RunSpec JSON file."""
    spec = RunSpec.from_json(spec_path)
    report = run_batch(spec)
    for name, its in report["iterations"].items():
        conv = report["converged"][name]
        n_conv = sum(conv.values())
        med = float(np.median(list(its.values()))) if its else 0.0
        click.echo(f"{name}: {n_conv}/{len(its)} converged, median iterations {med:g}")


@main.command()
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def spectrum(grid_path, out_path):
    """Radially averaged power spectrum of a PGRD grid, as CSV."""
    g = read_pgrd(grid_path)
    spectrum_to_csv(power_spectrum(g), out_path)
    click.echo(f"wrote spectrum to {out_path}")


def _parse_iters(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--problem", default=0, show_default=True)
@click.option("--iters", default="1..15", show_default=True)
def snapshots(spec_path, problem, iters):
    """Dump per-iteration solution snapshots for one problem."""
    spec = RunSpec.from_json(spec_path)
    written = snapshot_series(spec, problem, _parse_iters(iters))
    click.echo(f"wrote {len(written)} snapshot files")


if __name__ == "__main__":
    main()
