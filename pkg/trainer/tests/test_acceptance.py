"""Full-scale acceptance checks for the trained generator.

Session fixtures regenerate the 192^2 turbulence corpus, sample a training
set, train the generator with MSE loss, and solve all 100 held-out
benchmark problems under the alternating generator/spline schedule and the
spline-only schedule. Each criterion test prints one line with its
measured statistic.
"""

import numpy as np
import pytest
import torch

from mgsr.datagen import (
    derive_global_spec,
    evolve,
    init_broadband_velocity,
    sample_training_windows,
    write_mgds,
)
from mgsr.grid import Grid
from mgsr.multigrid import MultigridConfig, Schedule, solve
from mgsr.network import generator_infer, init_generator_weights
from mgsr.network import read_srwt as solver_read_srwt
from mgsr.network import write_srwt as solver_write_srwt
from mgsr.prolongation import GeneratorOperator, SplineOperator
from mgsr.spectral import power_spectrum

from mgtrain.formats import WeightsArchive
from mgtrain.model import Generator
from mgtrain.train import TrainConfig, train_generator

N_FINE = 192
N_TRAIN_FIELDS = 20
N_BENCH = 100


@pytest.fixture(scope="session")
def corpus():
    vel = init_broadband_velocity(N_FINE, seed=2024)
    snaps = evolve(vel, None, (N_TRAIN_FIELDS + N_BENCH) * 20, snapshot_every=20)
    train = [p for p, _f in snaps[:N_TRAIN_FIELDS]]
    bench = snaps[N_TRAIN_FIELDS:]
    return train, bench


@pytest.fixture(scope="session")
def trained_weights(corpus, tmp_path_factory):
    """MSE-trained generator weights on 1200 sampled windows."""
    train, _bench = corpus
    root = tmp_path_factory.mktemp("training")
    spec = derive_global_spec(train)
    samples = sample_training_windows(train, 1200, seed=7, spec=spec)
    data = root / "train.mgds"
    write_mgds(samples, data)
    out = root / "generator.srwt"
    cfg = TrainConfig(
        dataset=str(data), out_path=str(out), epochs=120, batch_size=64,
        lr=1e-3, seed=0,
    )
    train_generator(cfg)
    return out


@pytest.fixture(scope="session")
def benchmark_results(corpus, trained_weights):
    """Per-problem iteration counts plus iteration-5 snapshots, both schedules."""
    _train, bench = corpus
    w = solver_read_srwt(trained_weights)
    cfg = MultigridConfig(rel_tol=1e-12, max_iter=300)
    schedules = {
        "gan": Schedule.alternate(GeneratorOperator(w, compositions=2), SplineOperator(16)),
        "spline": Schedule.single(SplineOperator(16)),
    }
    results = {name: {"iters": [], "converged": [], "snap5": []} for name in schedules}
    for _p, f in bench:
        for name, sched in schedules.items():
            snaps = {}

            def grab(it, g, store=snaps):
                if it == 5:
                    store[5] = g

            _sol, trace = solve(Grid.zeros(N_FINE), f, cfg, sched, on_iteration=grab)
            results[name]["iters"].append(trace.n_iterations)
            results[name]["converged"].append(trace.converged)
            results[name]["snap5"].append(snaps[5])
    return results


def test_criterion_7_trainer_parity(tmp_path):
    """Trainer forward pass and solver inference agree to <= 1e-5 on 100
    random weight/input pairs; SRWT export -> solver load -> re-export is
    byte-identical."""
    worst = 0.0
    rng = np.random.default_rng(7)
    for trial in range(100):
        w = init_generator_weights(seed=trial)
        # half the He-init scale: full-scale random weights saturate tanh
        # and inflate float32 rounding beyond what trained weights show
        for name in w.tensors:
            w.tensors[name] = (0.5 * w.tensors[name]).astype(np.float32)
        gen = Generator(w.architecture)
        gen.load_weights(WeightsArchive(w.architecture, w.tensors))
        gen.eval()
        x = rng.uniform(-1.0, 1.0, size=(6, 6)).astype(np.float32)
        with torch.no_grad():
            ref = gen(torch.from_numpy(x)[None, None]).numpy()[0, 0]
        diff = float(np.abs(generator_infer(x, w) - ref).max())
        worst = max(worst, diff)
        assert diff <= 1e-5

    torch.manual_seed(11)
    exported = tmp_path / "exported.srwt"
    reexported = tmp_path / "reexported.srwt"
    from mgtrain.formats import write_srwt as trainer_write_srwt

    trainer_write_srwt(Generator().export_weights(), exported)
    solver_write_srwt(solver_read_srwt(exported), reexported)
    assert exported.read_bytes() == reexported.read_bytes()
    print(f"[C7] PASS: worst forward-pass deviation {worst:.3e} <= 1e-5, "
          "SRWT round trip byte-identical")


def test_criterion_8_alternating_schedule_speedup(benchmark_results):
    """Alternating generator/spline converges on all 100 problems, beats or
    ties spline-only on >= 90% of them, and has median iteration ratio < 1."""
    gan = benchmark_results["gan"]
    spline = benchmark_results["spline"]
    assert all(gan["converged"]), "alternating schedule failed to converge"
    assert all(spline["converged"]), "spline-only schedule failed to converge"
    g = np.array(gan["iters"])
    s = np.array(spline["iters"])
    frac_leq = float(np.mean(g <= s))
    ratios = g / s
    median_ratio = float(np.median(ratios))
    print(
        f"[C8] converged 100/100 both schedules; generator iterations "
        f"{g.min()}..{g.max()} (median {np.median(g):g}) vs spline "
        f"{s.min()}..{s.max()} (median {np.median(s):g}); "
        f"<= spline on {100 * frac_leq:.0f}% of problems, median ratio "
        f"{median_ratio:.3f}"
    )
    assert frac_leq >= 0.9, (
        f"generator schedule beat or tied spline on only {100 * frac_leq:.0f}% "
        "of problems (>= 90% required)"
    )
    assert median_ratio < 1.0, (
        f"median iteration ratio {median_ratio:.3f} is not below 1"
    )


def test_criterion_9_spectral_injection(benchmark_results):
    """At iteration 5 the generator schedule carries more spectral power in
    shells k > n/8 than spline-only on a majority of problems."""
    cutoff = N_FINE // 8
    wins = 0
    ratios = []
    for g5, s5 in zip(benchmark_results["gan"]["snap5"], benchmark_results["spline"]["snap5"]):
        hi_g = power_spectrum(g5).total_power_above(cutoff)
        hi_s = power_spectrum(s5).total_power_above(cutoff)
        ratios.append(hi_g / hi_s)
        if hi_g > hi_s:
            wins += 1
    assert wins > N_BENCH // 2, f"high-k power larger on only {wins}/{N_BENCH}"
    print(
        f"[C9] PASS: generator schedule carries more power above k={cutoff} "
        f"on {wins}/{N_BENCH} problems (median ratio {np.median(ratios):.1f}x)"
    )
