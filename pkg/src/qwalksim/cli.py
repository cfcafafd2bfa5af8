"""Command-line driver: matrix generation, walk runs, solves, and the
verification suite.

Outputs per run directory:
  matrix.qram / matrix.json    packed memory and sidecar (gen)
  solve.csv                    j,p,f,p_theory,f_theory,branches
  walk.csv                     n,err,branches
  timings.csv                  per-step wall time, kept apart so the
                               deterministic files are byte-stable
  report.json                  run metadata and resource counts

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 I/O error. The QWALK_THREADS environment variable caps BLAS worker
threads when set.
"""

from __future__ import annotations

import os

if os.environ.get("QWALK_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["QWALK_THREADS"])

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import cks, matrixgen as mg, oracle, walk
from .errors import SimulationError

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_IO = 3

#: Dense oracles are quadratic in memory; above this the run is
#: property-checked only.
ORACLE_MAX_ROWS = 2048


class ConfigError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qwalk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a band matrix and pack it for the walk")
    g.add_argument("--rows", type=int, required=True, help="matrix dimension N (power of two)")
    g.add_argument("--bandwidth", type=int, required=True)
    g.add_argument("--word-length", type=int, default=8, help="element fixed-point bits")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")

    w = sub.add_parser("walk", help="run walk steps and compare against the Chebyshev oracle")
    w.add_argument("--matrix", required=True, help="matrix directory or sidecar path")
    w.add_argument("--steps", type=int, default=50)
    w.add_argument("--seed", type=int, default=0, help="seed of the random input vector")
    w.add_argument("--oracle", choices=("on", "off"), default="on")
    w.add_argument("--prune-tol", type=float, default=1e-12)
    w.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run the Chebyshev linear solver")
    s.add_argument("--matrix", required=True)
    s.add_argument("--epsilon", type=float, default=1e-3)
    s.add_argument("--steps", type=int, default=None, help="max accumulation steps (default: full horizon)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--oracle", choices=("on", "off"), default="on")
    s.add_argument("--prune-tol", type=float, default=1e-12)
    s.add_argument("--out", required=True)

    v = sub.add_parser("verify", help="run the module property suites")
    v.add_argument("--matrix", default=None, help="optionally check a packed matrix")
    v.add_argument("--out", default=None, help="directory for verify.json (default: stdout)")
    return p


def _load(path):
    image, sidecar = mg.load_image(path)
    csc = mg.unpack_qram(image, int(sidecar["N"]), int(sidecar["s"]), int(sidecar["k_w"]))
    return image, sidecar, csc


def _input_vector(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    b = rng.random(n)
    return b / np.linalg.norm(b)


def _write_report(out: Path, payload: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _peak_memory_bytes() -> int:
    try:
        import resource

        return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024
    except Exception:
        return 0


def cmd_gen(args) -> int:
    spec = mg.BandMatrixSpec(args.rows, args.bandwidth, args.word_length, args.seed)
    dense = mg.gen_band_matrix(spec)
    csc, kappa = mg.preprocess(dense, spec.word_length)
    mg.save_image(args.out, csc, kappa, args.seed)
    print(f"wrote {Path(args.out) / 'matrix.qram'} (N={csc.n_rows}, s={csc.s}, kappa={kappa:.6g})")
    return EXIT_OK


def cmd_walk(args) -> int:
    image, sidecar, csc = _load(args.matrix)
    n_rows = csc.n_rows
    b = _input_vector(n_rows, args.seed)
    state, ctx = walk.new_walk_state(image, sidecar, prune_tol=args.prune_tol)
    walk.load_input(state, ctx, b)
    use_oracle = args.oracle == "on" and n_rows <= ORACLE_MAX_ROWS
    t_vectors = None
    if use_oracle:
        h = mg.reconstruct_dense(csc) / csc.s
        t_vectors = oracle.cheb_apply(h, b, args.steps)
    walk.t_tilde(state, ctx)
    nnz_after_first_t = state.num_branches
    rows, times = [], []
    worst = 0.0
    for n in range(1, args.steps + 1):
        t0 = time.perf_counter()
        walk.walk_w(state, ctx)
        err = ""
        if use_oracle:
            probe = state.copy()
            walk.t_tilde_adjoint(probe, ctx)
            v = walk.flag_zero_vector(probe, ctx)
            err = float(np.max(np.abs(v[:n_rows] - t_vectors[n])))
            worst = max(worst, err)
        times.append((n, (time.perf_counter() - t0) * 1e3))
        rows.append((n, err, state.num_branches))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "walk.csv").write_text(
        "n,err,branches\n" + "".join(f"{n},{e!r},{br}\n" if e != "" else f"{n},,{br}\n" for n, e, br in rows)
    )
    (out / "timings.csv").write_text("n,millis\n" + "".join(f"{n},{ms:.3f}\n" for n, ms in times))
    report = _base_report(sidecar, csc, state, times)
    report.update(
        command="walk",
        steps=args.steps,
        seed=args.seed,
        oracle=use_oracle,
        maxWalkError=worst if use_oracle else None,
        oracleMismatch=bool(use_oracle and worst > 1e-8),
        branchesAfterFirstPrep=nnz_after_first_t,
        nnz=csc.nnz(),
    )
    _write_report(out, report)
    print(f"walk: {args.steps} steps, maxBranches={state.stats.max_branches}"
          + (f", max oracle error {worst:.3e}" if use_oracle else ""))
    return EXIT_OK


def cmd_solve(args) -> int:
    image, sidecar, csc = _load(args.matrix)
    n_rows = csc.n_rows
    b = _input_vector(n_rows, args.seed)
    kappa = float(sidecar["kappa"])
    plan = cks.chebyshev_plan(kappa, args.epsilon)
    use_oracle = args.oracle == "on" and n_rows <= ORACLE_MAX_ROWS
    target = p_th = f_th = None
    h = None
    if use_oracle:
        h = mg.reconstruct_dense(csc) / csc.s
        target = oracle.lin_solve(h, b)
    max_steps = plan.j0 if args.steps is None else min(args.steps, plan.j0)
    run = cks.cks_solve(image, sidecar, b, plan, max_steps=max_steps, target=target,
                        prune_tol=args.prune_tol)
    steps_run = len(run.per_step) - 1
    if use_oracle:
        _, p_th, f_th = oracle.f_apply(h, b, plan, steps_run)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["j,p,f,p_theory,f_theory,branches\n"]
    for r in run.per_step:
        f_txt = "" if r.f is None else repr(r.f)
        pt = repr(float(p_th[r.j])) if p_th is not None else ""
        ft = repr(float(f_th[r.j])) if f_th is not None else ""
        lines.append(f"{r.j},{r.p!r},{f_txt},{pt},{ft},{r.branches}\n")
    (out / "solve.csv").write_text("".join(lines))
    (out / "timings.csv").write_text(
        "j,millis\n" + "".join(f"{r.j},{r.millis:.3f}\n" for r in run.per_step)
    )
    times = [(r.j, r.millis) for r in run.per_step]
    report = _base_report(sidecar, csc, run.tau, times)
    final = run.per_step[-1]
    report.update(
        command="solve",
        epsilon=args.epsilon,
        seed=args.seed,
        oracle=use_oracle,
        j0=plan.j0,
        planB=plan.b,
        stepsRun=steps_run,
        walkSteps=run.walk_steps,
        convergedAt=run.converged_at,
        finalP=final.p,
        finalF=final.f,
        maxTheoryGapP=float(np.max(np.abs([r.p for r in run.per_step] - p_th))) if p_th is not None else None,
        maxTheoryGapF=float(np.max(np.abs([r.f for r in run.per_step] - f_th))) if f_th is not None else None,
    )
    _write_report(out, report)
    print(
        f"solve: {steps_run + 1} steps ({run.walk_steps} walk applications), "
        f"p={final.p:.6f}" + (f", F={final.f:.6f}" if final.f is not None else "")
    )
    return EXIT_OK


def _base_report(sidecar, csc, state, times) -> dict:
    ms = [t[1] for t in times]
    return {
        "rowSize": csc.n_rows,
        "wordLength": csc.k_w,
        "kappa": sidecar.get("kappa"),
        "s": csc.s,
        "qubitCountAuto": state.stats.max_working_qubits,
        "qubitCountFormula": walk.qubit_estimate(csc.n_rows, csc.s, csc.k_w),
        "maxBranches": state.stats.max_branches,
        "opCount": state.stats.op_count,
        "avgStepTime": (sum(ms) / len(ms) / 1e3) if ms else None,
        "peakMemory": _peak_memory_bytes(),
    }


def cmd_verify(args) -> int:
    from . import verify as ver

    results = ver.run_all(matrix_path=args.matrix)
    ok = all(r["passed"] for r in results)
    payload = {"passed": ok, "suites": results}
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.json").write_text(text)
    else:
        sys.stdout.write(text)
    for r in results:
        print(f"[{'PASS' if r['passed'] else 'FAIL'}] {r['name']}" +
              ("" if r["passed"] else f": {r['detail']}"), file=sys.stderr)
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "walk":
            return cmd_walk(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "verify":
            return cmd_verify(args)
        raise ConfigError(f"unknown command {args.command}")
    except (ConfigError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
