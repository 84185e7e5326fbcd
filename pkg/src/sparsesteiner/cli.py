"""Batch harness: subcommands, file formats, deterministic orchestration.

File formats (all carry a schema-version line; readers reject unknown ones):

  triple systems   header ``sts v1 n=<n>``, one line ``a b c`` per block,
                   sorted lexicographically
  catalogs         header ``erdos-catalog v1 jmax=<J>`` (see configs)
  q-systems        header ``qsys v1 n=<n> q=<q> r=<r>``, one comma-separated
                   block per line
  tracking CSV     first line ``# stats-csv v1`` (see stats)
  trajectory CSV   first line ``# trajectory-csv v1``
  JSON summaries   a ``"schema"`` field

Exit codes: 0 success, 2 target density missed, 3 verification failure,
4 configuration error.  Every subcommand is byte-deterministic given its
full flag set; wall-clock timings go to stderr, never into files.

The default output directory is the environment variable SPARSESTEINER_OUT
(falling back to the current directory).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import configs, general_designs, process, sparse_check, stats, trajectory
from .configs import ErdosCatalog, TripleSystem

EXIT_OK = 0
EXIT_TARGET_MISSED = 2
EXIT_VERIFY_FAILED = 3
EXIT_CONFIG = 4


def _out_dir() -> Path:
    return Path(os.environ.get("SPARSESTEINER_OUT", "."))


def _resolve(path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else _out_dir() / p


# ---------------------------------------------------------------------------
# Triple-system and q-system file formats
# ---------------------------------------------------------------------------


def write_sts(system: TripleSystem, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"sts v1 n={system.n}\n")
        for a, b, c in system.sorted_blocks():
            fh.write(f"{a} {b} {c}\n")


def read_sts(path: Path) -> TripleSystem:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "sts" or header[1] != "v1":
            raise ValueError(f"unrecognized triple-system header in {path}")
        n = int(header[2].removeprefix("n="))
        blocks = []
        for line in fh:
            line = line.strip()
            if line:
                blocks.append(tuple(int(x) for x in line.split()))
    return TripleSystem.from_blocks(blocks, n=n)


def write_qsys(system: general_designs.QSystem, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"qsys v1 n={system.n} q={system.q} r={system.r}\n")
        for b in sorted(system.blocks):
            fh.write(",".join(map(str, b)) + "\n")


def read_qsys(path: Path) -> general_designs.QSystem:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != "qsys" or header[1] != "v1":
            raise ValueError(f"unrecognized q-system header in {path}")
        n = int(header[2].removeprefix("n="))
        q = int(header[3].removeprefix("q="))
        r = int(header[4].removeprefix("r="))
        blocks = []
        for line in fh:
            line = line.strip()
            if line:
                blocks.append(tuple(int(x) for x in line.split(",")))
    return general_designs.QSystem.from_blocks(n, q, r, blocks)


def _write_json(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


_CATALOG_CACHE: dict[int, ErdosCatalog] = {}


def _get_catalog(j_max: int) -> ErdosCatalog:
    got = _CATALOG_CACHE.get(j_max)
    if got is None:
        got = configs.enumerate_erdos(j_max)
        _CATALOG_CACHE[j_max] = got
    return got


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_catalog(args: argparse.Namespace) -> int:
    if not 4 <= args.jmax <= configs.ENUMERATION_JMAX:
        print(f"error: --jmax must be within [4, {configs.ENUMERATION_JMAX}]", file=sys.stderr)
        return EXIT_CONFIG
    catalog = configs.enumerate_erdos(args.jmax)
    for j in range(4, args.jmax + 1):
        entries = list(catalog.entries(j))
        names = ", ".join(e.name or f"id{e.entry_id}" for e in entries) or "-"
        print(f"j={j}: {len(entries)} ({names})")
    if args.out:
        path = _resolve(args.out)
        catalog.save(str(path))
        print(f"wrote {path}")
    return EXIT_OK


def _default_checkpoints(tau_cut: int) -> list[int]:
    return sorted({0, tau_cut // 4, tau_cut // 2, 3 * tau_cut // 4, tau_cut})


def cmd_run(args: argparse.Namespace) -> int:
    catalog = _get_catalog(args.k + 2)
    params = trajectory.TrajectoryParams.from_catalog(
        args.n, args.k, catalog, eps0=args.eps0, C_err=args.c_err, gamma=args.gamma
    )
    tau_cut = params.tau_cut()
    target = math.floor((1 - args.gamma) * args.n * args.n / 6)
    state = process.init(args.n, args.k, args.seed, catalog)
    spec = stats.default_tracker(
        args.n, args.k, _default_checkpoints(tau_cut), seed=args.seed,
        n_pairs=args.pairs, n_triples=args.triples,
    )
    if args.journal:
        # Journaled runs forgo checkpoint tracking (one pass, line per step).
        with open(_resolve(args.journal), "w", encoding="utf-8") as fh:
            process.run(state, process.StopCondition(max_steps=tau_cut), journal=fh)
        snapshots = [stats.checkpoint(state, spec, params)]
    else:
        snapshots = stats.run_with_tracking(state, spec, params)
    system = state.chosen_system()
    reached = state.i >= target

    base = _resolve(args.out)
    write_sts(system, base.with_suffix(".sts"))
    with open(base.with_suffix(".stats.csv"), "w", encoding="utf-8") as fh:
        fh.write(stats.export_series(snapshots))
    violations = []
    for s in snapshots:
        frac = s.edge_in_band_fraction()
        if frac is not None and frac < 1.0:
            violations.append({"i": s.i, "kind": "edge_band", "in_band_fraction": frac})
        if not s.avail_in_band:
            violations.append({"i": s.i, "kind": "avail_band"})
    summary = {
        "schema": "run-summary v1",
        "n": args.n,
        "k": args.k,
        "gamma": args.gamma,
        "seed": args.seed,
        "eps0": args.eps0,
        "c_err": args.c_err,
        "tau": state.i,
        "tau_cut": tau_cut,
        "target": target,
        "reached_target": reached,
        "chosen": len(state.chosen_blocks),
        "available_left": state.avail_count,
        "uncovered_left": state.uncovered_count,
        "violations": violations,
    }
    _write_json(summary, base.with_suffix(".json"))
    print(f"tau={state.i} chosen={len(state.chosen_blocks)} target={target} reached={reached}")
    return EXIT_OK if reached else EXIT_TARGET_MISSED


def _one_trial(packed: tuple[int, int, int, float, int]) -> dict:
    n, k, jmax, gamma, seed = packed
    catalog = _get_catalog(jmax)
    state = process.init(n, k, seed, catalog)
    _, summary = process.run(state)
    target = math.floor((1 - gamma) * n * n / 6)
    return {
        "seed": seed,
        "tau": summary.steps,
        "chosen": summary.chosen,
        "density_ratio": summary.chosen / (n * n / 6),
        "reached_target": summary.steps >= target,
    }


def cmd_trials(args: argparse.Namespace) -> int:
    jobs = [
        (args.n, args.k, args.k + 2, args.gamma, process.trial_seed(args.master_seed, t))
        for t in range(args.trials)
    ]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_one_trial, jobs))
    else:
        results = [_one_trial(j) for j in jobs]
    ratios = [r["density_ratio"] for r in results]
    aggregate = {
        "schema": "trials-summary v1",
        "n": args.n,
        "k": args.k,
        "gamma": args.gamma,
        "master_seed": args.master_seed,
        "trials": args.trials,
        "success_fraction": sum(r["reached_target"] for r in results) / len(results),
        "mean_density_ratio": sum(ratios) / len(ratios),
        "min_density_ratio": min(ratios),
        "max_density_ratio": max(ratios),
        "per_trial": results,
    }
    if args.out:
        _write_json(aggregate, _resolve(args.out))
    print(
        f"success {aggregate['success_fraction']:.2f} "
        f"density mean {aggregate['mean_density_ratio']:.4f} "
        f"[{aggregate['min_density_ratio']:.4f}, {aggregate['max_density_ratio']:.4f}]"
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    system = read_sts(_resolve(args.file))
    if not sparse_check.is_partial_steiner(system):
        print("FAIL: some pair is covered twice")
        return EXIT_VERIFY_FAILED
    try:
        report = sparse_check.is_k_sparse(system, args.k, budget=args.budget)
    except sparse_check.SubsetBudgetError:
        report = sparse_check.sampled_sparseness(system, args.k, args.samples, args.seed)
        print("note: exhaustive scan over budget; sampled mode (evidence, not proof)")
    if report.ok:
        print(f"OK: {args.k}-sparse ({'exhaustive' if report.exhaustive else 'sampled'})")
        return EXIT_OK
    w, blocks = report.witness
    print(f"FAIL: {len(blocks)} blocks on {len(w)} points: {sorted(w)}")
    for b in sorted(blocks):
        print(f"  {b[0]} {b[1]} {b[2]}")
    return EXIT_VERIFY_FAILED


def cmd_trajectory(args: argparse.Namespace) -> int:
    catalog = _get_catalog(args.k + 2)
    params = trajectory.TrajectoryParams.from_catalog(
        args.n, args.k, catalog, eps0=args.eps0, C_err=args.c_err, gamma=args.gamma
    )
    cols = trajectory.trajectory_columns(args.k)
    grid = [params.tau_cut() * t / (args.grid - 1) for t in range(args.grid)]
    rows = trajectory.trajectory_rows(params, grid)
    path = _resolve(args.out)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# trajectory-csv v1\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(repr(x) for x in row) + "\n")
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_design(args: argparse.Namespace) -> int:
    theta = args.theta
    if theta is None:
        theta = general_designs.max_feasible_theta(args.q, args.r, args.k)
    try:
        system, report = general_designs.build_weak_sparse(
            args.n, args.q, args.r, args.k, args.gamma, theta, args.seed,
            restarts=args.restarts,
        )
    except (general_designs.ThetaInfeasibleError, general_designs.RetryBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    base = _resolve(args.out)
    write_qsys(system, base.with_suffix(".qsys"))
    payload = {
        "schema": "design-summary v1",
        **{k: v for k, v in report.__dict__.items()},
    }
    _write_json(payload, base.with_suffix(".json"))
    print(
        f"blocks={report.matched_blocks} coverage={report.coverage:.3f} "
        f"target_blocks={report.target_blocks:.1f}"
    )
    target_ok = report.matched_blocks >= report.target_blocks
    return EXIT_OK if target_ok else EXIT_TARGET_MISSED


def cmd_count(args: argparse.Namespace) -> int:
    catalog = _get_catalog(min(args.k + 2, configs.ENUMERATION_JMAX))
    if args.k + 2 > catalog.j_max:
        print(f"error: k={args.k} needs configurations up to {args.k + 2} points", file=sys.stderr)
        return EXIT_CONFIG
    log_count, constant = trajectory.conjectured_log_count(args.n, args.k, catalog.erd_counts())
    print(
        f"conjecture: about (n*exp(-{constant}) + o(n)) ** (n^2/6) "
        f"{args.k}-sparse systems of order n"
    )
    print(f"n={args.n}: leading-order log-count = {log_count:.6g} (exponent constant {constant})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsesteiner",
        description="k-sparse partial Steiner triple systems via constrained random removal",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="enumerate minimal configurations")
    p.add_argument("--jmax", type=int, required=True)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("run", help="one tracked process run")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", type=float, default=trajectory.DEFAULT_GAMMA)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--eps0", type=float, default=trajectory.DEFAULT_EPS0)
    p.add_argument("--c-err", type=float, default=trajectory.DEFAULT_C_ERR)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--triples", type=int, default=50)
    p.add_argument("--journal", type=str, default=None,
                   help="write a per-step journal instead of checkpoint tracking")
    p.add_argument("--out", type=str, required=True, help="output path prefix")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("trials", help="repeated untracked runs with derived seeds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--master-seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("verify", help="check a triple-system file for k-sparseness")
    p.add_argument("--file", type=str, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--budget", type=int, default=sparse_check.EXHAUSTIVE_SUBSET_BUDGET)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("trajectory", help="evaluate the analytic trajectories on a grid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", type=float, default=trajectory.DEFAULT_GAMMA)
    p.add_argument("--eps0", type=float, default=trajectory.DEFAULT_EPS0)
    p.add_argument("--c-err", type=float, default=trajectory.DEFAULT_C_ERR)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("design", help="weakly k-sparse partial (n,q,r)-Steiner system")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.3)
    p.add_argument("--theta", type=float, default=None, help="default: largest feasible")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--out", type=str, required=True, help="output path prefix")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("count", help="conjectured count of k-sparse systems")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_count)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; normalize to the config-error code.
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
