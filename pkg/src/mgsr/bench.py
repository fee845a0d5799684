"""Batch benchmarking: many problems x several schedules, with CSV output.

Reproduces the convergence-comparison experiments: per-problem traces,
aggregate log10 statistics across problems, iteration counts, pairwise
schedule ratios, and iteration-snapshot dumps for spectral comparison.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError
from .grid import Grid, read_pgrd, subtract_mean, write_pgrd
from .multigrid import (
    ConvergenceTrace,
    MultigridConfig,
    Schedule,
    gauss_seidel_solve,
    solve,
)
from .network import read_srwt
from .prolongation import (
    GeneratorOperator,
    LinearStencilOperator,
    NormalizationSpec,
    SplineOperator,
)


@dataclass
class ScheduleSpec:
    """One benchmark arm: an operator string, optionally alternated with spline.

    op strings: "spline", "linear:<srwt path>", "gan:<srwt path>", "gs-only".
    """

    name: str
    op: str
    alternate: bool = False
    gs_max_sweeps: int = 5000


@dataclass
class RunSpec:
    problem_dir: str
    problem_count: int
    out_dir: str
    config: MultigridConfig = field(default_factory=MultigridConfig)
    schedules: list[ScheduleSpec] = field(default_factory=list)
    p0: str = "zero"  # "zero" or "random"
    seed: int = 0
    p_min: float | None = None
    p_max: float | None = None
    per_grid_norm: bool = True
    workers: int = 1

    def to_json(self, path) -> None:
        d = dict(self.__dict__)
        d["config"] = self.config.__dict__
        d["schedules"] = [s.__dict__ for s in self.schedules]
        with open(path, "w") as fh:
            json.dump(d, fh, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "RunSpec":
        with open(path) as fh:
            d = json.load(fh)
        d["config"] = MultigridConfig(**d["config"])
        d["schedules"] = [ScheduleSpec(**s) for s in d["schedules"]]
        return cls(**d)

    def normalization(self) -> NormalizationSpec | None:
        if self.p_min is not None and self.p_max is not None:
            return NormalizationSpec(self.p_min, self.p_max)
        manifest = Path(self.problem_dir) / "manifest.json"
        if manifest.exists():
            with open(manifest) as fh:
                m = json.load(fh)
            if "p_min" in m and "p_max" in m:
                return NormalizationSpec(m["p_min"], m["p_max"])
        return None


def build_operator(op: str, cfg: MultigridConfig,
                   spec: NormalizationSpec | None = None, per_grid: bool = True):
    """Construct a prolongation operator with total factor 2^n_step."""
    if op == "spline":
        return SplineOperator(2**cfg.n_step)
    if ":" not in op:
        raise ConfigurationError(f"unknown operator {op!r}")
    kind, path = op.split(":", 1)
    if kind not in ("linear", "gan"):
        raise ConfigurationError(f"unknown operator kind {kind!r}")
    if cfg.n_step % 2 != 0:
        raise ConfigurationError("window operators need even n_step (factor 4 stages)")
    compositions = cfg.n_step // 2
    weights = read_srwt(path)
    if kind == "linear":
        return LinearStencilOperator(weights, compositions, spec, per_grid)
    return GeneratorOperator(weights, compositions, spec, per_grid)


def build_schedule(ss: ScheduleSpec, cfg: MultigridConfig,
                   spec: NormalizationSpec | None = None, per_grid: bool = True) -> Schedule:
    primary = build_operator(ss.op, cfg, spec, per_grid)
    if ss.alternate:
        return Schedule.alternate(primary, SplineOperator(2**cfg.n_step))
    return Schedule.single(primary)


def load_problems(problem_dir, count: int) -> list[tuple[int, Grid, Grid]]:
    """Load (id, pressure, source) triples field_{id}_{p,f}.pgrd, sorted by id."""
    pdir = Path(problem_dir)
    ids = sorted(
        int(p.stem.split("_")[1]) for p in pdir.glob("field_*_p.pgrd")
    )
    if len(ids) < count:
        raise InputError(f"need {count} problems, found {len(ids)} in {pdir}")
    out = []
    for fid in ids[:count]:
        p = read_pgrd(pdir / f"field_{fid}_p.pgrd")
        f = read_pgrd(pdir / f"field_{fid}_f.pgrd")
        out.append((fid, p, f))
    return out


def initial_grid(kind: str, n: int, h: float, seed: int) -> Grid:
    if kind == "zero":
        return Grid.zeros(n, h)
    if kind.startswith("random"):
        rng = np.random.default_rng(seed)
        return subtract_mean(Grid(n, h, rng.uniform(-1.0, 1.0, size=(n, n))))
    raise ConfigurationError(f"unknown initial grid kind {kind!r}")


def _solve_one(ss: ScheduleSpec, sched, cfg: MultigridConfig, p0: Grid, f: Grid):
    if ss.op == "gs-only":
        return gauss_seidel_solve(p0, f, rel_tol=cfg.rel_tol, max_sweeps=ss.gs_max_sweeps)
    return solve(p0, f, cfg, sched)


def _run_task(args):
    ss, sched, cfg, p0, f, fid = args
    _sol, trace = _solve_one(ss, sched, cfg, p0, f)
    return ss.name, fid, trace


def run_batch(spec: RunSpec) -> dict:
    """Solve every problem under every schedule; write trace and summary CSVs.

    With workers > 1 the (schedule, problem) solves run in a process pool;
    results are aggregated after a deterministic sort, so the outputs are
    byte-identical to a sequential run.

    Returns {"traces": {schedule: {id: trace}}, "iterations": ...} for
    programmatic use; all statistics are also persisted under out_dir.
    """
    problems = load_problems(spec.problem_dir, spec.problem_count)
    norm_spec = spec.normalization()
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    for ss in spec.schedules:
        sched = None
        if ss.op != "gs-only":
            sched = build_schedule(ss, spec.config, norm_spec, spec.per_grid_norm)
        (out / ss.name).mkdir(exist_ok=True)
        for fid, _p, f in problems:
            p0 = initial_grid(spec.p0, f.n, f.h, spec.seed + fid)
            tasks.append((ss, sched, spec.config, p0, f, fid))
    if spec.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    traces: dict[str, dict[int, ConvergenceTrace]] = {ss.name: {} for ss in spec.schedules}
    for name, fid, trace in sorted(results, key=lambda r: (r[0], r[1])):
        trace.to_csv(out / name / f"problem_{fid}.csv")
        traces[name][fid] = trace
    _write_aggregate(out, spec, traces)
    _write_iterations(out, spec, traces)
    _write_ratios(out, spec, traces)
    spec.to_json(out / "runspec.json")
    return {
        "traces": traces,
        "iterations": {
            name: {fid: t.n_iterations for fid, t in per.items()}
            for name, per in traces.items()
        },
        "converged": {
            name: {fid: t.converged for fid, t in per.items()}
            for name, per in traces.items()
        },
    }


def _log10_or_floor(x: float, floor: float = -30.0) -> float:
    return math.log10(x) if x > 0 else floor


def _write_aggregate(out: Path, spec: RunSpec, traces) -> None:
    """Per-iteration mean and std of log10(norm_dp) across problems."""
    names = [ss.name for ss in spec.schedules]
    max_len = max(
        (len(t.iterations) for per in traces.values() for t in per.values()),
        default=0,
    )
    with open(out / "aggregate.csv", "w") as fh:
        cols = ["iter"] + [f"{n}_mean_log10_dp,{n}_std_log10_dp" for n in names]
        fh.write(",".join(cols) + "\n")
        for i in range(max_len):
            row = [str(i + 1)]
            for name in names:
                vals = [
                    _log10_or_floor(t.norm_dp[i])
                    for _fid, t in sorted(traces[name].items())
                    if i < len(t.norm_dp)
                ]
                if vals:
                    arr = np.array(vals)
                    row.append(f"{arr.mean():.17g},{arr.std():.17g}")
                else:
                    row.append(",")
            fh.write(",".join(row) + "\n")


def _write_iterations(out: Path, spec: RunSpec, traces) -> None:
    names = [ss.name for ss in spec.schedules]
    fids = sorted(next(iter(traces.values())).keys()) if traces else []
    with open(out / "iterations.csv", "w") as fh:
        fh.write("problem," + ",".join(f"{n}_iters,{n}_converged" for n in names) + "\n")
        for fid in fids:
            row = [str(fid)]
            for name in names:
                t = traces[name][fid]
                row.append(f"{t.n_iterations},{int(t.converged)}")
            fh.write(",".join(row) + "\n")


def _write_ratios(out: Path, spec: RunSpec, traces) -> None:
    names = [ss.name for ss in spec.schedules]
    if len(names) < 2:
        return
    fids = sorted(next(iter(traces.values())).keys())
    with open(out / "ratios.csv", "w") as fh:
        pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
        fh.write("problem," + ",".join(f"{a}_over_{b}" for a, b in pairs) + "\n")
        for fid in fids:
            row = [str(fid)]
            for a, b in pairs:
                ia = traces[a][fid].n_iterations
                ib = traces[b][fid].n_iterations
                row.append(f"{ia / ib:.17g}" if ib else "inf")
            fh.write(",".join(row) + "\n")


def snapshot_series(spec: RunSpec, problem_id: int, iterations: list[int]) -> list[Path]:
    """Dump the solution grid after each listed iteration, per schedule."""
    if not iterations:
        return []
    if max(iterations) > spec.config.max_iter:
        raise ConfigurationError("requested iteration beyond max_iter")
    problems = {fid: (p, f) for fid, p, f in load_problems(spec.problem_dir, spec.problem_count)}
    if problem_id not in problems:
        raise InputError(f"problem {problem_id} not in the loaded set")
    _p, f = problems[problem_id]
    norm_spec = spec.normalization()
    wanted = set(iterations)
    out = Path(spec.out_dir)
    written: list[Path] = []
    for ss in spec.schedules:
        if ss.op == "gs-only":
            continue
        sched = build_schedule(ss, spec.config, norm_spec, spec.per_grid_norm)
        sdir = out / ss.name
        sdir.mkdir(parents=True, exist_ok=True)
        p0 = initial_grid(spec.p0, f.n, f.h, spec.seed + problem_id)

        def dump(it, grid, sdir=sdir):
            if it in wanted:
                path = sdir / f"snap_{problem_id}_iter{it:03d}.pgrd"
                write_pgrd(grid, path)
                written.append(path)

        solve(p0, f, spec.config, sched, on_iteration=dump)
    return written
