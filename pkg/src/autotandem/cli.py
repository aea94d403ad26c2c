"""Command-line entry point ``autotandem``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .benchmarks import TestSet, get_problem, make_test_set, sbr_measure, sbr_solve
from .harness import (
    ExperimentConfig, read_records, run_experiment, summarize_experiment, validate_inverse,
)
from .nn import load_tandem
from .numcore import derive_seed
from .samplers import get_sampler


def _read_vector(path) -> np.ndarray:
    text = Path(path).read_text().strip()
    if text.startswith("["):
        return np.asarray(json.loads(text), dtype=float)
    return np.array(text.replace(",", " ").split(), dtype=float)


def _cmd_run(args) -> int:
    cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    overrides = {"benchmark": args.benchmark, "methods": args.methods, "n_max": args.n_max,
                 "repetitions": args.reps, "seed": args.seed, "model_kind": args.model_kind,
                 "test_size": args.test_size}
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if args.tandem_epochs is not None:
        cfg.setdefault("tandem", {})["epochs"] = args.tandem_epochs
    if args.model_epochs is not None:
        cfg.setdefault("model_options", {})["epochs"] = args.model_epochs
    if args.save_models:
        cfg["save_models"] = True
    config = ExperimentConfig.from_dict(cfg)
    records = run_experiment(config, args.out)
    print(summarize_experiment(records).table())
    failed = sum(r.status != "ok" for r in records)
    print(f"{len(records)} records, {failed} failed, written to {args.out}")
    return 0


def _cmd_sample(args) -> int:
    prob = get_problem(args.benchmark)
    batch = get_sampler(args.method)(prob.bounds, args.n, args.seed)
    batch.to_csv(args.out)
    print(f"wrote {len(batch)} points to {args.out}")
    return 0


def _cmd_solve_sbr(args) -> int:
    bc = _read_vector(args.bc)
    fld = sbr_solve(bc)
    result = {"bc": bc.tolist(), "measurements": sbr_measure(fld).tolist(),
              "field": fld.tolist()}
    text = json.dumps(result)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def _cmd_validate(args) -> int:
    prob = get_problem(args.benchmark)
    tandem = load_tandem(args.model)
    if args.testset:
        ts = TestSet.load(args.testset)
    else:
        ts = make_test_set(prob, args.n, derive_seed(args.seed, "testset"))
    print(json.dumps(validate_inverse(tandem, prob, ts).to_dict()))
    return 0


def _cmd_summarize(args) -> int:
    summary = summarize_experiment(read_records(args.directory))
    (Path(args.directory) / "summary.csv").write_text(summary.to_csv())
    print(summary.table())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="autotandem",
                                 description="Active learning and tandem networks for inverse design")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sampler comparison experiment")
    run.add_argument("--benchmark", help="sbr, aidlike or psidlike")
    run.add_argument("--methods", help="comma-separated subset of al,random,lhs,bc,gfp")
    run.add_argument("--n-max", type=int)
    run.add_argument("--reps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--model-kind", choices=["forest", "deep_ensemble"])
    run.add_argument("--test-size", type=int)
    run.add_argument("--tandem-epochs", type=int)
    run.add_argument("--model-epochs", type=int, help="deep ensemble member epochs")
    run.add_argument("--save-models", action="store_true")
    run.add_argument("--config", help="JSON experiment config; flags override it")
    run.add_argument("--out", default="results")
    run.set_defaults(func=_cmd_run)

    sample = sub.add_parser("sample", help="draw a design with one sampler")
    sample.add_argument("--benchmark", required=True)
    sample.add_argument("--method", required=True, help="random, lhs, gfp or bc")
    sample.add_argument("--n", type=int, required=True)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--out", required=True)
    sample.set_defaults(func=_cmd_sample)

    solve = sub.add_parser("solve-sbr", help="solve the diffusion problem for one boundary vector")
    solve.add_argument("--bc", required=True, help="file with 20 boundary concentrations")
    solve.add_argument("--out")
    solve.set_defaults(func=_cmd_solve_sbr)

    val = sub.add_parser("validate", help="score a saved tandem model")
    val.add_argument("--model", required=True)
    val.add_argument("--benchmark", required=True)
    val.add_argument("--testset", help="directory with Tx.csv and Ty.csv")
    val.add_argument("--n", type=int, default=1000)
    val.add_argument("--seed", type=int, default=0)
    val.set_defaults(func=_cmd_validate)

    summ = sub.add_parser("summarize", help="recompute summary.csv from records.jsonl")
    summ.add_argument("directory")
    summ.set_defaults(func=_cmd_summarize)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"autotandem: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
