"""Experiment runner: seeded solves, sweeps and analysis CSV outputs.

Subcommands
-----------
``run``        one solve from a config file; writes trace.csv + summary.csv.
``sweep``      a grid of (method, seed) cells, parallel, deterministic per
               cell; writes sweep.csv + table.csv.
``analyze``    spectrum | sweep | optstep on the linear toy problem.
``problems``   gen: write a problem archive plus text matrices.
``selftest``   quick invariant suites; nonzero exit on any failure.

Config files are INI (key/value with sections); see the README for the
schema.  Environment overrides: DRSPLIT_OUT (output directory) and
DRSPLIT_THREADS (sweep worker count) only.

Exit codes: 0 converged / all cells ok, 2 iteration budget exhausted,
1 configuration or runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import admm as admm_mod
from . import analysis, archive, problems
from .dr import (
    CRITERION_FIXED_POINT,
    CRITERION_LINEAR_RESIDUAL,
    FORMS,
    STATUS_CONVERGED,
    StopRule,
    solve_dr,
)
from .errors import DrsplitError
from .operators import (
    firm_nonexpansiveness_violation,
    operator_norm,
    random_monotone_matrix,
)
from .stepsize import (
    MODE_ADAPTIVE_MV,
    MODE_ADAPTIVE_SV,
    MODE_FIXED,
    MODE_LIPSCHITZ,
    ConservationSchedule,
    StepsizeController,
    verify_summable_increments,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITERS = 2

DR_PROBLEMS = ("linear_toy", "lasso", "rof")
ADMM_PROBLEMS = problems.SUITE_NAMES + ("qp_strongly_convex",)


class ConfigError(DrsplitError):
    """Invalid configuration; the message names the offending field."""


# -- CSV ------------------------------------------------------------------


def format_value(x) -> str:
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(x) for x in row) + "\n")


# -- config parsing --------------------------------------------------------


@dataclass
class RunConfig:
    problem_name: str
    seed: int
    problem_opts: dict
    solver_kind: str
    form: str
    method: str
    stepsize_mode: str
    t: float
    t_min: float
    t_max: float
    kappa_min: float
    kappa_max: float
    schedule_base: float
    schedule_scale: float
    criterion: str
    tol: float
    max_iters: int
    out_dir: str
    sweep: dict


def _get(cfg, section, key, conv, default=None, required=False):
    if not cfg.has_option(section, key):
        if required:
            raise ConfigError(f"missing required field {section}.{key}")
        return default
    raw = cfg.get(section, key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"field {section}.{key}: cannot parse {raw!r}") from exc


def load_config(path) -> RunConfig:
    cfg = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cfg.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    name = _get(cfg, "problem", "name", str, required=True)
    seed = _get(cfg, "problem", "seed", int, default=0)
    opts = {}
    if cfg.has_section("problem"):
        for key in cfg.options("problem"):
            if key in ("name", "seed"):
                continue
            raw = cfg.get("problem", key)
            try:
                opts[key] = int(raw)
            except ValueError:
                try:
                    opts[key] = float(raw)
                except ValueError:
                    opts[key] = raw

    kind = _get(cfg, "solver", "kind", str, default="dr")
    if kind not in ("dr", "admm"):
        raise ConfigError(f"field solver.kind: unknown value {kind!r}")
    form = _get(cfg, "solver", "form", str, default="u")
    method = _get(cfg, "solver", "method", str, default="adaptive")
    if kind == "dr" and form not in FORMS:
        raise ConfigError(f"field solver.form: unknown form {form!r}")
    if kind == "admm" and method not in admm_mod.METHODS:
        raise ConfigError(f"field solver.method: unknown method {method!r}")

    mode = _get(cfg, "stepsize", "mode", str, default=MODE_ADAPTIVE_SV)
    if mode not in (MODE_FIXED, MODE_LIPSCHITZ, MODE_ADAPTIVE_SV, MODE_ADAPTIVE_MV):
        raise ConfigError(f"field stepsize.mode: unknown mode {mode!r}")
    t = _get(cfg, "stepsize", "t", float, default=1.0)
    t_min = _get(cfg, "stepsize", "t_min", float, default=1e-4)
    t_max = _get(cfg, "stepsize", "t_max", float, default=1e4)
    kappa_min = _get(cfg, "stepsize", "kappa_min", float, default=1e-2)
    kappa_max = _get(cfg, "stepsize", "kappa_max", float, default=1e2)
    schedule_base = _get(cfg, "stepsize", "schedule_base", float, default=0.5)
    schedule_scale = _get(cfg, "stepsize", "schedule_scale", float, default=100.0)
    if t <= 0:
        raise ConfigError("field stepsize.t: must be positive")
    if not (0.0 < t_min < t_max):
        raise ConfigError("field stepsize.t_min: need 0 < t_min < t_max")
    if not (0.0 < kappa_min < kappa_max):
        raise ConfigError("field stepsize.kappa_min: need 0 < kappa_min < kappa_max")
    if not (0.0 < schedule_base < 1.0):
        raise ConfigError("field stepsize.schedule_base: must lie in (0, 1)")
    if schedule_scale <= 0:
        raise ConfigError("field stepsize.schedule_scale: must be positive")

    criterion = _get(cfg, "stop", "criterion", str, default=CRITERION_FIXED_POINT)
    if criterion not in (CRITERION_FIXED_POINT, CRITERION_LINEAR_RESIDUAL):
        raise ConfigError(f"field stop.criterion: unknown criterion {criterion!r}")
    tol = _get(cfg, "stop", "tol", float, default=1e-8)
    if tol <= 0:
        raise ConfigError("field stop.tol: must be positive")
    max_iters = _get(cfg, "stop", "max_iters", int, default=100_000)
    if max_iters < 1:
        raise ConfigError("field stop.max_iters: must be >= 1")

    out_dir = _get(cfg, "output", "dir", str, default="out")

    sweep = {}
    if cfg.has_section("sweep"):
        if cfg.has_option("sweep", "t_values"):
            sweep["t_values"] = [float(x) for x in cfg.get("sweep", "t_values").split()]
        if cfg.has_option("sweep", "seeds"):
            sweep["seeds"] = [int(x) for x in cfg.get("sweep", "seeds").split()]
        if cfg.has_option("sweep", "methods"):
            sweep["methods"] = cfg.get("sweep", "methods").split()

    return RunConfig(
        problem_name=name,
        seed=seed,
        problem_opts=opts,
        solver_kind=kind,
        form=form,
        method=method,
        stepsize_mode=mode,
        t=t,
        t_min=t_min,
        t_max=t_max,
        kappa_min=kappa_min,
        kappa_max=kappa_max,
        schedule_base=schedule_base,
        schedule_scale=schedule_scale,
        criterion=criterion,
        tol=tol,
        max_iters=max_iters,
        out_dir=out_dir,
        sweep=sweep,
    )


# -- builders ---------------------------------------------------------------


def build_dr_problem(rc: RunConfig, seed: Optional[int] = None):
    """Problem instance plus a deterministic start vector."""
    seed = rc.seed if seed is None else seed
    name = rc.problem_name
    if name == "linear_toy":
        m = int(rc.problem_opts.get("m", 50))
        inst = problems.gen_linear_toy(m, seed)
        x0 = np.random.default_rng((seed, 1)).standard_normal(m)
    elif name == "lasso":
        rows = int(rc.problem_opts.get("rows", 20))
        cols = int(rc.problem_opts.get("cols", 100))
        alpha = float(rc.problem_opts.get("alpha", 0.5))
        inst = problems.gen_lasso(rows, cols, alpha, seed, reference_iters=0)
        x0 = np.zeros(cols)
    elif name == "rof":
        size = int(rc.problem_opts.get("size", 16))
        lam = float(rc.problem_opts.get("lam", 0.1))
        img = problems.synthetic_step_image(size)
        inst = problems.gen_rof_saddle(img, lam)
        x0 = np.concatenate([img.ravel(), np.zeros(2 * img.size)])
    else:
        raise ConfigError(
            f"field problem.name: {name!r} is not a DR problem (choose from {DR_PROBLEMS})"
        )
    return inst, x0


def build_controller(rc: RunConfig, inst=None) -> StepsizeController:
    schedule = ConservationSchedule.geometric(rc.schedule_base, rc.schedule_scale)
    if rc.stepsize_mode == MODE_FIXED:
        return StepsizeController.fixed(rc.t)
    if rc.stepsize_mode == MODE_LIPSCHITZ:
        if inst is None or inst.pair is None or inst.pair.B_mat is None:
            raise ConfigError(
                "field stepsize.mode: lipschitz needs a problem with an explicit B matrix"
            )
        return StepsizeController.lipschitz(operator_norm(inst.pair.B_mat))
    if rc.stepsize_mode == MODE_ADAPTIVE_SV:
        return StepsizeController.adaptive_single_valued(
            t_min=rc.t_min, t_max=rc.t_max, schedule=schedule, t_start=rc.t
        )
    return StepsizeController.adaptive_multivalued(
        kappa_min=rc.kappa_min,
        kappa_max=rc.kappa_max,
        schedule=schedule,
        t_start=rc.t,
    )


def build_admm_problem(rc: RunConfig, seed: Optional[int] = None):
    seed = rc.seed if seed is None else seed
    name = rc.problem_name
    if name in problems.SUITE_NAMES:
        dims = None
        if name in ("elastic_net", "lasso") and "rows" in rc.problem_opts:
            dims = (int(rc.problem_opts["rows"]), int(rc.problem_opts.get("cols", 100)))
        elif name == "qp" and "dim" in rc.problem_opts:
            dims = int(rc.problem_opts["dim"])
        elif name in ("logreg", "svm") and "samples" in rc.problem_opts:
            dims = (
                int(rc.problem_opts["samples"]),
                int(rc.problem_opts.get("features", 20)),
            )
        return problems.gen_admm_suite(name, dims, seed)
    if name == "qp_strongly_convex":
        return problems.gen_strongly_convex_qp(seed)
    raise ConfigError(
        f"field problem.name: {name!r} is not an ADMM problem (choose from {ADMM_PROBLEMS})"
    )


# -- run --------------------------------------------------------------------


def _ensure_out(rc: RunConfig, override: Optional[str]) -> Path:
    out = override or os.environ.get("DRSPLIT_OUT") or rc.out_dir
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_run(args) -> int:
    rc = load_config(args.config)
    out = _ensure_out(rc, args.out)
    seed = rc.seed if args.seed is None else args.seed

    if rc.solver_kind == "dr":
        inst, x0 = build_dr_problem(rc, seed)
        ctrl = build_controller(rc, inst)
        stop = StopRule(max_iters=rc.max_iters, tol=rc.tol, criterion=rc.criterion)
        res = solve_dr(
            inst.pair.A,
            inst.pair.B,
            ctrl,
            stop,
            rc.form,
            x0,
            objective=inst.objective,
        )
        write_csv(out / "trace.csv", res.trace.columns, res.trace.rows())
        final_residual = res.trace.fp_residual[-1] if len(res.trace) else math.nan
        final_obj = res.trace.objective[-1] if len(res.trace) else math.nan
        write_csv(
            out / "summary.csv",
            ("problem", "solver", "method", "seed", "status", "iterations",
             "final_residual", "final_objective", "final_t", "wall_ns"),
            [(
                rc.problem_name, "dr", rc.form, seed, res.status, res.iterations,
                final_residual, final_obj,
                res.trace.t[-1] if len(res.trace) else math.nan,
                res.trace.wall_ns[-1] if len(res.trace) else 0,
            )],
        )
        return EXIT_OK if res.status == STATUS_CONVERGED else EXIT_MAX_ITERS

    inst = build_admm_problem(rc, seed)
    ctrl = None
    if rc.method == admm_mod.METHOD_ADAPTIVE:
        ctrl = StepsizeController.adaptive_single_valued(
            t_min=rc.t_min,
            t_max=rc.t_max,
            schedule=ConservationSchedule.geometric(rc.schedule_base, rc.schedule_scale),
            t_start=rc.t,
        )
    res = admm_mod.solve_admm(
        inst.split,
        method=rc.method,
        t_start=rc.t,
        ctrl=ctrl,
        tol=rc.tol,
        max_iters=rc.max_iters,
        track_objective=True,
    )
    write_csv(out / "trace.csv", res.trace.columns, res.trace.rows())
    write_csv(
        out / "summary.csv",
        ("problem", "solver", "method", "seed", "status", "iterations",
         "final_residual", "final_objective", "final_t", "wall_ns"),
        [(
            rc.problem_name, "admm", rc.method, seed, res.status, res.iterations,
            res.trace.r_primal[-1] if len(res.trace) else math.nan,
            res.trace.objective[-1] if len(res.trace) else math.nan,
            res.state.t,
            res.trace.wall_ns[-1] if len(res.trace) else 0,
        )],
    )
    return EXIT_OK if res.status == admm_mod.STATUS_CONVERGED else EXIT_MAX_ITERS


# -- sweep --------------------------------------------------------------------


def _dr_cell(rc: RunConfig, method: str, seed: int):
    inst, x0 = build_dr_problem(rc, seed)
    if method.startswith("fixed:"):
        ctrl = StepsizeController.fixed(float(method.split(":", 1)[1]))
        form = "u" if inst.pair.B.single_valued else "y"
    elif method == "adaptive":
        ctrl = StepsizeController.adaptive_single_valued(
            t_min=rc.t_min,
            t_max=rc.t_max,
            schedule=ConservationSchedule.geometric(rc.schedule_base, rc.schedule_scale),
            t_start=rc.t,
        )
        form = "u"
    elif method == "nonstationary":
        ctrl = StepsizeController.adaptive_multivalued(
            kappa_min=rc.kappa_min,
            kappa_max=rc.kappa_max,
            schedule=ConservationSchedule.geometric(rc.schedule_base, rc.schedule_scale),
            t_start=rc.t,
        )
        form = "nonstationary"
    else:
        raise ConfigError(f"field sweep.methods: unknown DR method {method!r}")
    stop = StopRule(max_iters=rc.max_iters, tol=rc.tol, criterion=rc.criterion)
    res = solve_dr(inst.pair.A, inst.pair.B, ctrl, stop, form, x0,
                   objective=inst.objective)
    final_res = res.trace.fp_residual[-1] if len(res.trace) else math.nan
    final_obj = res.trace.objective[-1] if len(res.trace) else math.nan
    return (rc.problem_name, method, seed, res.status, res.iterations,
            final_res, final_obj)


def _admm_cell(rc: RunConfig, method: str, seed: int):
    inst = build_admm_problem(rc, seed)
    ctrl = None
    if method == admm_mod.METHOD_ADAPTIVE:
        ctrl = StepsizeController.adaptive_single_valued(
            t_min=rc.t_min,
            t_max=rc.t_max,
            schedule=ConservationSchedule.geometric(rc.schedule_base, rc.schedule_scale),
            t_start=rc.t,
        )
    res = admm_mod.solve_admm(
        inst.split, method=method, t_start=rc.t, ctrl=ctrl,
        tol=rc.tol, max_iters=rc.max_iters, track_objective=False,
    )
    obj = float(inst.split.objective(res.state.u, res.state.v))
    rp = res.trace.r_primal[-1] if len(res.trace) else math.nan
    return (rc.problem_name, method, seed, res.iterations, obj, rp)


def cmd_sweep(args) -> int:
    rc = load_config(args.config)
    out = _ensure_out(rc, args.out)
    threads = args.threads or int(os.environ.get("DRSPLIT_THREADS", 0)) or os.cpu_count()
    seeds = rc.sweep.get("seeds", [rc.seed])
    if rc.solver_kind == "dr":
        methods = rc.sweep.get("methods")
        if not methods:
            methods = [f"fixed:{t:g}" for t in rc.sweep.get("t_values", [rc.t])]
        header = ("problem", "method", "seed", "status", "iterations",
                  "final_residual", "final_objective")
        cell = _dr_cell
    else:
        methods = rc.sweep.get("methods", list(admm_mod.METHODS))
        header = ("problem", "method", "seed", "iterations_to_tol",
                  "final_objective", "final_primal_residual")
        cell = _admm_cell
    if not methods or not seeds:
        raise ConfigError("field sweep: needs nonempty method and seed axes")

    cells = [(m, s) for m in methods for s in seeds]
    rows = [None] * len(cells)
    errors = []

    def work(i):
        m, s = cells[i]
        try:
            rows[i] = cell(rc, m, s)
        except Exception as exc:  # cell failures recorded, sweep continues
            errors.append((m, s, repr(exc)))
            rows[i] = None

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(len(cells))))

    ok_rows = [r for r in rows if r is not None]
    write_csv(out / "sweep.csv", header, ok_rows)

    # per-method mean +- std of iteration counts
    iter_col = 4 if rc.solver_kind == "dr" else 3
    table = []
    for m in methods:
        counts = [r[iter_col] for r in ok_rows if r[1] == m]
        if counts:
            table.append(
                (rc.problem_name, m, float(np.mean(counts)), float(np.std(counts)),
                 len(counts))
            )
    write_csv(out / "table.csv",
              ("problem", "method", "iters_mean", "iters_std", "runs"), table)

    if errors:
        for m, s, msg in errors:
            print(f"cell ({m}, seed={s}) failed: {msg}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


# -- analyze ------------------------------------------------------------------


def cmd_analyze(args) -> int:
    out = Path(args.out or os.environ.get("DRSPLIT_OUT") or "out")
    out.mkdir(parents=True, exist_ok=True)
    inst = problems.gen_linear_toy(args.m, args.seed)
    A, B = inst.pair.A_mat, inst.pair.B_mat

    if args.what == "spectrum":
        ts = args.t or [0.5, 1.5, 5.0]
        rows = []
        for t in ts:
            rep = analysis.spectrum(analysis.u_iteration_matrix(A, B, t))
            rows.extend((t, lam.real, lam.imag) for lam in rep.eigenvalues)
        write_csv(out / "spectrum.csv", ("t", "re", "im"), rows)
        print(f"wrote {out / 'spectrum.csv'} ({len(rows)} rows)")
        return EXIT_OK

    if args.what == "sweep":
        t_grid = np.geomspace(args.t_lo, args.t_hi, args.t_points)
        n_iters = args.iters or [200, 500]
        x0 = np.random.default_rng((args.seed, 1)).standard_normal(args.m)
        rows = analysis.stepsize_sweep(A, B, t_grid, n_iters, x0)
        write_csv(out / "sweep.csv", ("t", "n_iters", "residual"), rows)
        print(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)")
        return EXIT_OK

    t_opt, rho_opt = analysis.optimal_constant_stepsize(
        A, B, (args.t_lo, args.t_hi), tol=args.tol
    )
    write_csv(out / "optstep.csv", ("t_opt", "rho_opt"), [(t_opt, rho_opt)])
    print(f"t_opt = {t_opt:.6g}  rho_opt = {rho_opt:.6g}")
    return EXIT_OK


# -- problems gen --------------------------------------------------------------


def cmd_problems(args) -> int:
    out = Path(args.out or os.environ.get("DRSPLIT_OUT") or "out")
    out.mkdir(parents=True, exist_ok=True)
    name, seed = args.name, args.seed
    if name == "linear_toy":
        inst = problems.gen_linear_toy(args.m, seed)
    elif name == "lasso":
        inst = problems.gen_lasso(args.rows, args.cols, args.alpha, seed,
                                  reference_iters=0)
    elif name == "rof":
        inst = problems.gen_rof_saddle(problems.synthetic_step_image(args.m), args.lam)
    elif name in problems.SUITE_NAMES:
        inst = problems.gen_admm_suite(name, None, seed)
    elif name == "qp_strongly_convex":
        inst = problems.gen_strongly_convex_qp(seed)
    else:
        print(f"unknown problem name {name!r}", file=sys.stderr)
        return EXIT_ERROR
    base = out / f"{name}_{seed}"
    inst.save(f"{base}.drsp")
    for key, block in inst.arrays.items():
        archive.write_matrix_text(f"{base}_{key}.txt", block)
    print(f"wrote {base}.drsp (fingerprint {inst.fingerprint()[:16]}...)")
    return EXIT_OK


# -- selftest -------------------------------------------------------------------


def cmd_selftest(_args) -> int:
    failures = 0

    def check(label, ok):
        nonlocal failures
        print(f"[{'PASS' if ok else 'FAIL'}] {label}")
        if not ok:
            failures += 1

    rng = np.random.default_rng(0)

    # firm nonexpansiveness of catalog resolvents
    worst = 0.0
    inst = problems.gen_linear_toy(20, 0)
    lasso = problems.gen_lasso(10, 30, 0.5, 0, reference_iters=0)
    ops = [inst.pair.A, inst.pair.B, lasso.pair.A, lasso.pair.B]
    for op in ops:
        for _ in range(200):
            x = rng.standard_normal(op.dim)
            y = rng.standard_normal(op.dim)
            for t in (0.1, 1.0, 10.0):
                worst = max(worst, firm_nonexpansiveness_violation(op, t, x, y))
    check(f"firm nonexpansiveness (max violation {worst:.2e})", worst <= 1e-9)

    # resolvent identity for single-valued catalog operators
    worst = 0.0
    for op in (inst.pair.B, lasso.pair.B):
        for t in (0.1, 1.0, 10.0):
            y = rng.standard_normal(op.dim)
            u = op.resolvent(t, y)
            gap = np.linalg.norm(t * op.apply_forward(u) - (y - u))
            worst = max(worst, gap / (1.0 + np.linalg.norm(y)))
    check(f"resolvent identity (max gap {worst:.2e})", worst <= 1e-9)

    # controller increment law on random raw sequences
    ok = True
    for trial in range(50):
        ctrl = StepsizeController.adaptive_single_valued()
        raws = np.random.default_rng(trial).uniform(1e-5, 1e5, size=200)
        ts = [ctrl.update(r) for r in raws]
        rep = verify_summable_increments(ts, ctrl.schedule, ctrl.mode,
                                         ctrl.t_min, ctrl.t_max)
        ok = ok and rep.passed and all(ctrl.t_min <= t <= ctrl.t_max for t in ts)
    check("stepsize increment law (50 random traces)", ok)

    # disk lemma mini sweep
    violations = 0
    for seed in range(10):
        g = np.random.default_rng(seed + 100)
        A = random_monotone_matrix(8, g)
        B = random_monotone_matrix(8, g)
        for t in (0.1, 1.0, 10.0):
            rep = analysis.disk_check(A, B, t)
            violations += len(rep.disk_violations)
    check("disk containment (10 pairs x 3 stepsizes)", violations == 0)

    # cross-form agreement on one seeded linear problem
    from .operators import linear_operator

    A, B = inst.pair.A_mat, inst.pair.B_mat
    x0 = rng.standard_normal(20)
    stopr = StopRule(max_iters=50, tol=1e-300)
    r1 = solve_dr(linear_operator(A), linear_operator(B),
                  StepsizeController.fixed(1.0), stopr, "u", x0)
    r2 = solve_dr(linear_operator(A), linear_operator(B),
                  StepsizeController.fixed(1.0), stopr, "pairs", x0)
    gap = np.linalg.norm(r1.solution - r2.solution)
    check(f"stationary cross-form agreement (gap {gap:.2e})", gap <= 1e-9)

    print(f"{5 - failures}/5 suites passed")
    return EXIT_OK if failures == 0 else EXIT_ERROR


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drsplit",
        description="Douglas-Rachford / ADMM experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one solve from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid of (method, seed) cells")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--threads", type=int, default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_an = sub.add_parser("analyze", help="linear-case spectral analysis")
    p_an.add_argument("what", choices=("spectrum", "sweep", "optstep"))
    p_an.add_argument("--m", type=int, default=50)
    p_an.add_argument("--seed", type=int, default=0)
    p_an.add_argument("--t", type=float, action="append")
    p_an.add_argument("--t-lo", type=float, default=0.1)
    p_an.add_argument("--t-hi", type=float, default=10.0)
    p_an.add_argument("--t-points", type=int, default=20)
    p_an.add_argument("--iters", type=int, action="append")
    p_an.add_argument("--tol", type=float, default=1e-4)
    p_an.add_argument("--out", default=None)
    p_an.set_defaults(func=cmd_analyze)

    p_prob = sub.add_parser("problems", help="problem generation")
    psub = p_prob.add_subparsers(dest="action", required=True)
    p_gen = psub.add_parser("gen", help="generate and serialize one instance")
    p_gen.add_argument("--name", required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--m", type=int, default=50)
    p_gen.add_argument("--rows", type=int, default=20)
    p_gen.add_argument("--cols", type=int, default=100)
    p_gen.add_argument("--alpha", type=float, default=0.5)
    p_gen.add_argument("--lam", type=float, default=0.1)
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=cmd_problems)

    p_self = sub.add_parser("selftest", help="run the invariant suites")
    p_self.set_defaults(func=cmd_selftest)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DrsplitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
