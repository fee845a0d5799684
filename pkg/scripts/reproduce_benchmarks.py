#!/usr/bin/env python3
"""End-to-end benchmark reproduction.

Generates a decaying-turbulence corpus, samples a training dataset, fits
the linear window stencil, optionally trains the convolutional generator
(requires the mgtrain package), and benchmarks the prolongation schedules
on held-out problems. All artifacts land under --out.

Quick sanity run:   python3 scripts/reproduce_benchmarks.py --out /tmp/run --quick
Full-scale run:     python3 scripts/reproduce_benchmarks.py --out /tmp/run
"""

import json
from pathlib import Path

import click
import numpy as np

from mgsr.bench import RunSpec, ScheduleSpec, run_batch, snapshot_series
from mgsr.datagen import (
    derive_global_spec,
    evolve,
    field_paths,
    init_broadband_velocity,
    sample_training_windows,
    write_mgds,
)
from mgsr.grid import write_pgrd
from mgsr.multigrid import MultigridConfig
from mgsr.network import write_srwt
from mgsr.prolongation import fit_linear_stencil
from mgsr.spectral import power_spectrum, spectrum_to_csv


@click.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=2024, show_default=True)
@click.option("--train-fields", default=20, show_default=True)
@click.option("--bench-problems", default=100, show_default=True)
@click.option("--windows", default=1200, show_default=True,
              help="training window pairs to sample")
@click.option("--train-gan/--no-train-gan", default=True, show_default=True,
              help="train the generator (needs the mgtrain package)")
@click.option("--epochs", default=120, show_default=True)
@click.option("--quick", is_flag=True,
              help="48^2 grids, 3 problems, no generator training")
def main(out_dir, seed, train_fields, bench_problems, windows, train_gan,
         epochs, quick):
    out = Path(out_dir)
    fields_dir = out / "fields"
    fields_dir.mkdir(parents=True, exist_ok=True)

    if quick:
        n, train_fields, bench_problems, windows, train_gan = 48, 2, 3, 60, False
        n_step, r_min = 2, 12
    else:
        n, n_step, r_min = 192, 4, 12
    total = train_fields + bench_problems

    click.echo(f"generating {total} snapshots at {n}^2 ...")
    vel = init_broadband_velocity(n, seed)
    snaps = evolve(vel, None, total * 20, snapshot_every=20)
    train_p = [p for p, _f in snaps[:train_fields]]
    spec = derive_global_spec(train_p)
    # benchmark problems are the held-out tail of the trajectory
    for fid, (p, f) in enumerate(snaps[train_fields:]):
        pp, fp = field_paths(fields_dir, fid)
        write_pgrd(p, pp)
        write_pgrd(f, fp)
    (fields_dir / "manifest.json").write_text(json.dumps({
        "n": n, "fields": bench_problems, "seed": seed,
        "p_min": spec.p_min, "p_max": spec.p_max,
    }, indent=2))

    click.echo(f"sampling {windows} training windows ...")
    samples = sample_training_windows(train_p, windows, seed=7, spec=spec)
    write_mgds(samples, out / "train.mgds")

    click.echo("fitting the linear stencil ...")
    stencil = fit_linear_stencil([(s.inputs, s.target) for s in samples])
    write_srwt(stencil, out / "linear.srwt")

    schedules = [
        ScheduleSpec("gs-only", "gs-only", gs_max_sweeps=5000),
        ScheduleSpec("spline", "spline"),
        ScheduleSpec("linear-alt", f"linear:{out / 'linear.srwt'}", alternate=True),
    ]
    if train_gan:
        from mgtrain.train import TrainConfig, train_generator

        click.echo(f"training the generator for {epochs} epochs ...")
        train_generator(TrainConfig(
            dataset=str(out / "train.mgds"), out_path=str(out / "generator.srwt"),
            epochs=epochs, seed=0, log_path=str(out / "training_log.csv"),
        ))
        schedules.append(
            ScheduleSpec("gan-alt", f"gan:{out / 'generator.srwt'}", alternate=True)
        )

    click.echo(f"benchmarking {len(schedules)} schedules x {bench_problems} problems ...")
    run = RunSpec(
        problem_dir=str(fields_dir),
        problem_count=bench_problems,
        out_dir=str(out / "bench"),
        config=MultigridConfig(n_step=n_step, r_min=r_min, rel_tol=1e-12, max_iter=300),
        schedules=schedules,
        seed=seed,
    )
    report = run_batch(run)
    for name, its in report["iterations"].items():
        conv = sum(report["converged"][name].values())
        med = float(np.median(list(its.values())))
        click.echo(f"  {name}: {conv}/{len(its)} converged, median iterations {med:g}")

    click.echo("dumping iteration snapshots and spectra for problem 0 ...")
    paths = snapshot_series(run, 0, list(range(1, 16)))
    from mgsr.grid import read_pgrd

    for path in paths:
        if path.name.endswith("iter005.pgrd"):
            spectrum_to_csv(power_spectrum(read_pgrd(path)),
                            path.with_suffix(".spectrum.csv"))
    click.echo(f"done; artifacts under {out}")


if __name__ == "__main__":
    main()
