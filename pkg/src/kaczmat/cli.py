"""Command-line front end: generate problems, solve them, run benchmark
sweeps, and deblur images.

Subcommands write machine-readable artifacts (Matrix Market matrices, JSON
manifests, CSV traces) that regenerate byte-identically from the same seed,
wall-clock columns aside. Exit status: 0 converged, 2 iteration or time
budget exhausted, 1 error.
"""

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .images import GrayImage, read_pgm, write_pgm
from .matrices import as_dense
from .mmio import load_matrix_market, write_matrix_market
from .problems import (
    BlurSpec,
    TypeISpec,
    blur_problem,
    gen_type1,
    gen_type2,
    make_problem,
    min_norm_solution,
    psnr,
)
from .sampling import RNG_ALGORITHM
from .solvers import (
    GRABK_ADAPTIVE,
    GRABK_CONST,
    GRBK,
    GRK,
    RK_KRON,
    Problem,
    SolverConfig,
    solve,
)

CLI_METHODS = {
    "grk": GRK,
    "grbk": GRBK,
    "grabk-c": GRABK_CONST,
    "grabk-a": GRABK_ADAPTIVE,
    "rk-kron": RK_KRON,
}
# methods whose stepsize flag means anything
ETA_METHODS = ("grabk-c", "grabk-a")

TRACE_HEADER = ("iteration", "relative_error", "relative_residual",
                "elapsed_seconds")
BENCH_HEADER = ("method", "eta", "tau1", "tau2", "repeats", "converged",
                "mean_iterations", "mean_seconds", "mean_final_error")

MATRIX_FILES = {"A": "A.mtx", "B": "B.mtx", "C": "C.mtx", "X_star": "X_star.mtx"}


@dataclass
class RunRecord:
    """One solver run flattened for CSV emission."""

    method: str
    problem: str
    tau1: int
    tau2: int
    eta: float | None
    seed: int
    iterations: int
    final_error: float | None
    seconds: float
    termination: str


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.12e}"
    return str(x)


def write_trace_csv(report, path):
    with open(path, "wt", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for rec in report.records:
            writer.writerow([
                rec.iteration,
                _fmt(rec.relative_error),
                _fmt(rec.relative_residual),
                _fmt(rec.elapsed),
            ])


def _final_error(report):
    if report.final_relative_error is not None:
        return report.final_relative_error
    return report.final_relative_residual


def _elapsed(report):
    return report.records[-1].elapsed if report.records else 0.0


def _add_solver_flags(p, default_method="grbk"):
    p.add_argument("--method", choices=sorted(CLI_METHODS), default=default_method)
    p.add_argument("--tau1", type=int, default=None,
                   help="row block size (default 1, or side/2 for deblur)")
    p.add_argument("--tau2", type=int, default=None,
                   help="column block size")
    p.add_argument("--eta", type=float, default=None,
                   help="stepsize multiplier (default 1.95 constant, 1.0 adaptive)")
    p.add_argument("--weights", choices=["frobenius", "uniform"],
                   default="frobenius")
    p.add_argument("--max-iters", type=int, default=50000)
    p.add_argument("--tol", type=float, default=1e-6,
                   help="squared relative error (or relative residual) cutoff")
    p.add_argument("--trace-every", type=int, default=1)
    p.add_argument("--max-seconds", type=float, default=None,
                   help="advisory wall-clock cap on the iteration loop")
    p.add_argument("--cache-pinv", action="store_true",
                   help="reuse block pseudoinverses across iterations")
    p.add_argument("--unsafe-stepsize", action="store_true",
                   help="allow eta outside (0, 2); no convergence guarantee")


def _config_from_args(args, method=None, eta=None, seed=None, tau1=None,
                      tau2=None):
    return SolverConfig(
        method=CLI_METHODS[method if method is not None else args.method],
        tau1=tau1 if tau1 is not None else (args.tau1 or 1),
        tau2=tau2 if tau2 is not None else (args.tau2 or 1),
        eta=eta if eta is not None else args.eta,
        weight_scheme=args.weights,
        max_iters=args.max_iters,
        re_tolerance=args.tol,
        seed=seed if seed is not None else args.seed,
        trace_every=args.trace_every,
        cache_block_pinv=args.cache_pinv,
        unsafe_stepsize=args.unsafe_stepsize,
        max_seconds=args.max_seconds,
    )


def _write_problem_dir(problem, out_dir, manifest_extra):
    os.makedirs(out_dir, exist_ok=True)
    for key in ("A", "B", "C"):
        write_matrix_market(getattr(problem, key), os.path.join(
            out_dir, MATRIX_FILES[key]))
    files = {k: MATRIX_FILES[k] for k in ("A", "B", "C")}
    if problem.X_star is not None:
        write_matrix_market(problem.X_star, os.path.join(
            out_dir, MATRIX_FILES["X_star"]))
        files["X_star"] = MATRIX_FILES["X_star"]
    manifest = {"rng": RNG_ALGORITHM, "files": files}
    manifest.update(manifest_extra)
    with open(os.path.join(out_dir, "manifest.json"), "wt",
              encoding="ascii", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_problem_dir(path):
    """Rebuild a Problem from a generated directory (A/B/C plus optional
    reference solution)."""

    def _read(name):
        return load_matrix_market(os.path.join(path, name))

    for name in ("A.mtx", "B.mtx", "C.mtx"):
        if not os.path.exists(os.path.join(path, name)):
            raise FileNotFoundError(f"{path} does not contain {name}")
    A = _read("A.mtx")
    B = _read("B.mtx")
    C = as_dense(_read("C.mtx"))
    xs_path = os.path.join(path, "X_star.mtx")
    X_star = as_dense(_read("X_star.mtx")) if os.path.exists(xs_path) else None
    return Problem(A=A, B=B, C=C, X_star=X_star, name=os.path.basename(
        os.path.normpath(path)))


def cmd_generate(args):
    kinds = [k for k in ("type1", "type2", "blur") if getattr(args, k)]
    if len(kinds) != 1:
        raise ValueError("pick exactly one of --type1, --type2, --blur")
    kind = kinds[0]
    if kind == "type1":
        for flag in ("m", "p", "r1", "q", "n", "r2"):
            if getattr(args, flag) is None:
                raise ValueError(f"--type1 needs --{flag}")
        spec = TypeISpec(args.m, args.p, args.r1, args.q, args.n, args.r2,
                         seed=args.seed)
        A, B = gen_type1(spec)
        problem = make_problem(A, B, seed=args.seed + 1)
        extra = {"kind": "type1", "seed": args.seed, "x_seed": args.seed + 1,
                 "m": args.m, "p": args.p, "r1": args.r1,
                 "q": args.q, "n": args.n, "r2": args.r2}
    elif kind == "type2":
        for flag in ("m", "p", "q", "n"):
            if getattr(args, flag) is None:
                raise ValueError(f"--type2 needs --{flag}")
        A, B = gen_type2(args.m, args.p, args.q, args.n, seed=args.seed)
        problem = make_problem(A, B, seed=args.seed + 1)
        extra = {"kind": "type2", "seed": args.seed, "x_seed": args.seed + 1,
                 "m": args.m, "p": args.p, "q": args.q, "n": args.n}
    else:
        if not args.image:
            raise ValueError("--blur needs --image")
        image = read_pgm(args.image)
        spec = BlurSpec(n=image.height, r=args.r, sigma=args.sigma)
        problem = blur_problem(image, spec)
        extra = {"kind": "blur", "seed": args.seed, "image": args.image,
                 "n": spec.n, "r": spec.r, "sigma": spec.sigma,
                 "max_value": image.max_value}
    _write_problem_dir(problem, args.out, extra)
    print(f"wrote {kind} problem to {args.out}")
    return 0


def cmd_solve(args):
    problem = load_problem_dir(args.problem)
    config = _config_from_args(args)
    report = solve(problem, config)
    if args.out:
        write_trace_csv(report, args.out)
    err = _final_error(report)
    print(
        f"method={args.method} iterations={report.iterations} "
        f"termination={report.termination} final_error={_fmt(err)} "
        f"elapsed={_elapsed(report):.3f}s"
    )
    return 0 if report.termination == "tolerance" else 2


def _run_single(task):
    problem, config, method_name, eta_label = task
    report = solve(problem, config)
    return RunRecord(
        method=method_name,
        problem=problem.name,
        tau1=config.tau1,
        tau2=config.tau2,
        eta=eta_label,
        seed=config.seed,
        iterations=report.iterations,
        final_error=_final_error(report),
        seconds=_elapsed(report),
        termination=report.termination,
    )


def _parse_eta_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"--eta-grid wants start:step:stop, got {text!r}")
    start, step, stop = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"bad --eta-grid range {text!r}")
    n_steps = int(round((stop - start) / step))
    values = [start + k * step for k in range(n_steps + 1)]
    return [v for v in values if v <= stop + 1e-12]


def _benchmark_problem(args):
    if args.type1:
        for flag in ("m", "p", "r1", "q", "n", "r2"):
            if getattr(args, flag) is None:
                raise ValueError(f"--type1 needs --{flag}")
        spec = TypeISpec(args.m, args.p, args.r1, args.q, args.n, args.r2,
                         seed=args.seed)
        A, B = gen_type1(spec)
        label = f"type1-{args.m}x{args.p}r{args.r1}-{args.q}x{args.n}r{args.r2}"
    elif args.type2:
        for flag in ("m", "p", "q", "n"):
            if getattr(args, flag) is None:
                raise ValueError(f"--type2 needs --{flag}")
        A, B = gen_type2(args.m, args.p, args.q, args.n, seed=args.seed)
        label = f"type2-{args.m}x{args.p}-{args.q}x{args.n}"
    else:
        raise ValueError("pick one of --type1, --type2")
    return make_problem(A, B, seed=args.seed + 1, name=label)


def cmd_benchmark(args):
    if args.repeats < 1:
        raise ValueError("--repeats must be at least 1")
    problem = _benchmark_problem(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in CLI_METHODS:
            raise ValueError(f"unknown method {m!r}")
    etas = _parse_eta_grid(args.eta_grid) if args.eta_grid else None

    tasks = []
    for method in methods:
        method_etas = etas if (etas and method in ETA_METHODS) else [None]
        for eta in method_etas:
            for run in range(args.repeats):
                config = _config_from_args(
                    args, method=method, eta=eta, seed=args.seed + run)
                eta_label = (config.resolved_eta()
                             if method in ETA_METHODS else None)
                tasks.append((problem, config, method, eta_label))

    results = []
    if args.parallel_repeats and args.parallel_repeats > 1:
        with ProcessPoolExecutor(max_workers=args.parallel_repeats) as pool:
            futures = [pool.submit(_run_single, task) for task in tasks]
            for task, fut in zip(tasks, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:  # flag the run, keep sweeping
                    print(f"run failed ({task[2]}, seed {task[1].seed}): {exc}",
                          file=sys.stderr)
                    results.append(None)
    else:
        for task in tasks:
            try:
                results.append(_run_single(task))
            except Exception as exc:
                print(f"run failed ({task[2]}, seed {task[1].seed}): {exc}",
                      file=sys.stderr)
                results.append(None)

    # aggregate per (method, eta) in task order
    lines = []
    had_error = False
    had_unconverged = False
    idx = 0
    for method in methods:
        method_etas = etas if (etas and method in ETA_METHODS) else [None]
        for _ in method_etas:
            group = results[idx: idx + args.repeats]
            eta_label = tasks[idx][3]
            idx += args.repeats
            done = [r for r in group if r is not None]
            converged = sum(1 for r in done if r.termination == "tolerance")
            had_error = had_error or len(done) < len(group)
            had_unconverged = had_unconverged or converged < len(done)
            lines.append([
                method,
                _fmt(eta_label),
                args.tau1 or 1,
                args.tau2 or 1,
                args.repeats,
                converged,
                _fmt(float(np.mean([r.iterations for r in done]))
                     if done else None),
                _fmt(float(np.mean([r.seconds for r in done]))
                     if done else None),
                _fmt(float(np.mean([r.final_error for r in done]))
                     if done else None),
            ])

    if args.out:
        with open(args.out, "wt", encoding="ascii", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(BENCH_HEADER)
            writer.writerows(lines)
    writer = csv.writer(sys.stdout)
    writer.writerow(BENCH_HEADER)
    writer.writerows(lines)
    if had_error:
        return 1
    if had_unconverged:
        return 2
    return 0


def cmd_deblur(args):
    image = read_pgm(args.image)
    if image.height != image.width:
        raise ValueError(
            f"image must be square, got {image.height}x{image.width}"
        )
    n = image.height
    tau1 = args.tau1 if args.tau1 is not None else max(1, n // 2)
    tau2 = args.tau2 if args.tau2 is not None else max(1, n // 2)
    if args.identity_blur:
        eye = np.eye(n)
        problem = Problem(A=eye, B=eye, C=image.pixels.copy(),
                          X_star=min_norm_solution(eye, eye, image.pixels),
                          name="identity-blur")
    else:
        problem = blur_problem(image, BlurSpec(n=n, r=args.r, sigma=args.sigma))
    config = _config_from_args(args, tau1=tau1, tau2=tau2)
    report = solve(problem, config)

    os.makedirs(args.out, exist_ok=True)
    blurred = GrayImage(problem.C, image.max_value)
    restored = GrayImage(report.X, image.max_value)
    write_pgm(blurred, os.path.join(args.out, "blurred.pgm"))
    write_pgm(restored, os.path.join(args.out, "restored.pgm"))
    write_trace_csv(report, os.path.join(args.out, "trace.csv"))

    psnr_blurred = psnr(image.pixels, problem.C)
    psnr_restored = psnr(image.pixels, report.X)
    print(f"PSNR blurred:  {psnr_blurred:.2f} dB"
          if math.isfinite(psnr_blurred) else "PSNR blurred:  inf (identical)")
    print(f"PSNR restored: {psnr_restored:.2f} dB"
          if math.isfinite(psnr_restored) else "PSNR restored: inf (identical)")
    print(
        f"method={args.method} iterations={report.iterations} "
        f"termination={report.termination} elapsed={_elapsed(report):.3f}s"
    )
    return 0 if report.termination == "tolerance" else 2


def build_parser():
    ap = argparse.ArgumentParser(
        prog="kaczmat",
        description="Randomized row/column-action solvers for A X B = C",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a problem directory")
    g.add_argument("--type1", action="store_true",
                   help="rank-controlled factors, singular values in (1,2)")
    g.add_argument("--type2", action="store_true", help="standard-normal factors")
    g.add_argument("--blur", action="store_true", help="image blur system")
    for flag in ("m", "p", "r1", "q", "n", "r2"):
        g.add_argument(f"--{flag}", type=int, default=None)
    g.add_argument("--image", default=None, help="PGM image for --blur")
    g.add_argument("--r", type=int, default=3, help="blur bandwidth")
    g.add_argument("--sigma", type=float, default=7.0, help="blur width")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="problem", help="output directory")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run one solver on a problem directory")
    s.add_argument("problem", help="directory from 'generate'")
    s.add_argument("--seed", type=int, default=0)
    _add_solver_flags(s)
    s.add_argument("--out", default=None, help="trace CSV path")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("benchmark", help="repeat runs, report mean iterations")
    b.add_argument("--type1", action="store_true")
    b.add_argument("--type2", action="store_true")
    for flag in ("m", "p", "r1", "q", "n", "r2"):
        b.add_argument(f"--{flag}", type=int, default=None)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--methods", default="grk,grbk,grabk-c,grabk-a",
                   help="comma-separated method list")
    b.add_argument("--repeats", type=int, default=10)
    b.add_argument("--eta-grid", default=None,
                   help="start:step:stop stepsize sweep for the averaged methods")
    b.add_argument("--parallel-repeats", type=int, default=None,
                   help="worker processes for independent runs")
    _add_solver_flags(b, default_method="grbk")
    b.add_argument("--out", default=None, help="summary CSV path")
    b.set_defaults(func=cmd_benchmark)

    d = sub.add_parser("deblur", help="blur an image, restore it, report PSNR")
    d.add_argument("image", help="square PGM image")
    d.add_argument("--r", type=int, default=3, help="blur bandwidth")
    d.add_argument("--sigma", type=float, default=7.0, help="blur width")
    d.add_argument("--identity-blur", action="store_true",
                   help="A = B = I sanity mode")
    d.add_argument("--seed", type=int, default=0)
    _add_solver_flags(d)
    d.add_argument("--out", default="deblur-out", help="output directory")
    d.set_defaults(func=cmd_deblur)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
