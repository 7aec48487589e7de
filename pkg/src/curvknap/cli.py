"""Command line: ``curvknap {generate,solve,bench,verify}``.

Exit codes: 0 success, 2 usage, 3 bad input, 4 size/mode mismatch.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import instances
from .driver import CSV_COLUMNS, DEFAULT_BUDGET, MAX_BRUTE_N, brute_force, run_algorithm
from .errors import CapabilityError, CurvKnapError, DomainError
from .multilinear import RngStream
from .verify import SUITES, run_suite

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CAPABILITY = 0, 2, 3, 4
ALGORITHMS = ("brute", "greedy", "sviridenko", "curvature", "dispatch")
MODES = ("exact", "sampled", "known-O", "enumerate", "heuristic")


class UsageError(Exception):
    pass


def _epsilon(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1), got {v}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def resolve_mode(mode: str, estimator: str | None) -> tuple[str, str]:
    """``exact`` and ``sampled`` name the estimator of the known-O pipeline."""
    if mode in ("exact", "sampled"):
        if estimator and estimator != mode:
            raise UsageError(f"--mode {mode} conflicts with --estimator {estimator}")
        return "known-O", mode
    return mode, estimator or "exact"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvknap", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file of option defaults; explicit flags win")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random instance file")
    g.add_argument("--kind", choices=("coverage", "explicit", "budget"), default="coverage")
    g.add_argument("--n", type=int, default=8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--epsilon", type=_epsilon, default=0.25)
    g.add_argument("--density", type=float)
    g.add_argument("--capacity", type=_positive)
    g.add_argument("--customers", type=_positive)
    g.add_argument("--out", help="output path (stdout if omitted)")

    def run_flags(q, multi: bool):
        act = "append" if multi else "store"
        q.add_argument("--instance", action=act, required=not multi)
        q.add_argument("--algorithm", action=act, choices=ALGORITHMS, default=None if multi else "dispatch")
        q.add_argument("--mode", action=act, choices=MODES, default=None if multi else "known-O")
        q.add_argument("--estimator", choices=("exact", "sampled"))
        q.add_argument("--epsilon", action=act, type=_epsilon)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET)
        q.add_argument("--out-csv")
        q.add_argument("--out-json")

    s = sub.add_parser("solve", help="run one algorithm on one instance")
    run_flags(s, multi=False)

    b = sub.add_parser("bench", help="factorial sweep over instances, algorithms, epsilons and seeds")
    run_flags(b, multi=True)
    b.add_argument("--generate", action="append", default=[], metavar="KIND:N[:SEED]",
                   help="generated instance, e.g. coverage:8:3")
    b.add_argument("--trials", type=_positive, default=1, help="seeds per cell, starting at --seed")
    b.add_argument("--jobs", type=_positive, default=1)

    v = sub.add_parser("verify", help="run a named invariant suite")
    v.add_argument("--suite", required=True, help=f"one of: all, {', '.join(SUITES)}")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out-json")
    return p


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            conf = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(conf, dict):
            raise DomainError("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in conf.items()})
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    opts = {k: getattr(args, k) for k in ("density", "capacity", "customers") if getattr(args, k) is not None}
    inst = instances.generate(args.kind, args.n, RngStream(args.seed), args.epsilon, **opts)
    text = inst.dumps()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _write_csv(path: str, rows: list[dict], append: bool = False) -> None:
    p = Path(path)
    new = not (append and p.exists() and p.stat().st_size)
    with p.open("a" if append else "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerows(rows)


def cmd_solve(args) -> int:
    inst = instances.load(args.instance)
    mode, estimator = resolve_mode(args.mode, args.estimator)
    eps = args.epsilon if args.epsilon is not None else inst.epsilon
    rep = run_algorithm(args.algorithm, inst.f, inst.w, eps, args.seed, mode, estimator, args.budget)
    text = rep.to_json() + "\n"
    sys.stdout.write(text)
    if args.out_json:
        Path(args.out_json).write_text(text)
    if args.out_csv:
        _write_csv(args.out_csv, [rep.csv_row(inst.name, eps)], append=True)
    return EXIT_OK


def _bench_cell(doc: dict, name: str, algorithm: str, mode: str, estimator: str, eps: float, seed: int,
                budget: int) -> dict:
    inst = instances.instance_from_dict(doc, name)
    try:
        rep = run_algorithm(algorithm, inst.f, inst.w, eps, seed, mode, estimator, budget)
        row = rep.csv_row(name, eps)
    except CurvKnapError as exc:
        row = {c: "" for c in CSV_COLUMNS}
        row.update(instance_id=name, algorithm=algorithm, mode=mode, epsilon=eps, seed=seed,
                   error=f"{type(exc).__name__}: {exc}")
    return row


def _bench_instances(args) -> list[instances.Instance]:
    out = [instances.load(p) for p in args.instance or []]
    for spec in args.generate:
        parts = spec.split(":")
        if len(parts) not in (2, 3):
            raise UsageError(f"bad --generate spec {spec!r}; expected KIND:N[:SEED]")
        kind, n, seed = parts[0], int(parts[1]), int(parts[2]) if len(parts) == 3 else 0
        inst = instances.generate(kind, n, RngStream(seed))
        inst.name = f"{kind}-n{n}-s{seed}"
        out.append(inst)
    if not out:
        raise UsageError("bench needs at least one --instance or --generate")
    names = [i.name for i in out]
    if len(set(names)) != len(names):
        raise UsageError(f"instance names must be unique, got {names}")
    return out


def cmd_bench(args) -> int:
    insts = _bench_instances(args)
    algorithms = args.algorithm or ["dispatch"]
    modes = [resolve_mode(m, args.estimator) for m in (args.mode or ["known-O"])]
    seeds = range(args.seed, args.seed + args.trials)
    cells = []
    for inst in insts:
        epsilons = args.epsilon or [inst.epsilon]
        doc = inst.to_dict()
        for alg in algorithms:
            alg_modes = modes if alg in ("curvature", "dispatch") else [("", "exact")]
            for mode, est in alg_modes:
                for eps in epsilons:
                    for seed in seeds:
                        cells.append((doc, inst.name, alg, mode, est, eps, seed, args.budget))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_cell, *zip(*cells)))
    else:
        rows = [_bench_cell(*c) for c in cells]
    rows.sort(key=lambda r: (r["instance_id"], r["algorithm"], r["mode"], float(r["epsilon"]), int(r["seed"])))

    if args.out_csv:
        _write_csv(args.out_csv, rows)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        sys.stdout.write(buf.getvalue())
    summary = bench_summary(insts, rows)
    if args.out_json:
        Path(args.out_json).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def bench_summary(insts, rows: list[dict]) -> dict:
    """Per-cell means and, where brute force is affordable, ratios to the optimum."""
    optimum = {i.name: brute_force(i.f, i.w).objective if i.n <= MAX_BRUTE_N else None for i in insts}
    cells: dict[tuple, list[dict]] = {}
    for r in rows:
        cells.setdefault((r["instance_id"], r["algorithm"], r["mode"], str(r["epsilon"])), []).append(r)
    out = []
    for (name, alg, mode, eps), rs in sorted(cells.items()):
        good = [float(r["objective"]) for r in rs if not r["error"]]
        opt = optimum[name]
        entry = {
            "instance_id": name,
            "algorithm": alg,
            "mode": mode,
            "epsilon": float(eps),
            "rows": len(rs),
            "errors": len(rs) - len(good),
            "mean_objective": float(np.mean(good)) if good else None,
            "optimum": opt,
            "mean_ratio": None,
        }
        if good and opt is not None:
            entry["mean_ratio"] = 1.0 if opt == 0 else float(np.mean(good) / opt)
        out.append(entry)
    return {"cells": out}


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    for name in names:
        if name not in SUITES:
            raise UsageError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    results = [run_suite(name, args.seed).to_dict() for name in names]
    doc = {"seed": args.seed, "ok": all(r["ok"] for r in results), "suites": results}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out_json:
        Path(args.out_json).write_text(text)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench, "verify": cmd_verify}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors this way
        return int(exc.code or 0)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
