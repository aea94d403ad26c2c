"""Experiment engine: dataset generation, tandem training, validation, statistics.

A run pits active learning against space-filling samplers on one benchmark.
Every (method, repetition) pair gets a seed derived from the base seed, a
dataset of ``n_max`` labelled designs, a tandem model and a forward model,
and is scored on a shared held-out test set.

Output directory layout written by :func:`run_experiment`::

    records.jsonl      one ExperimentRecord per line (no timings, reproducible)
    timings.jsonl      wall-clock seconds per phase for each record
    summary.csv        method x metric x {mean, std, max, min}, best flags
    boxplot_data.csv   raw per-run metrics, one row per record
    manifest.json      config, seeds, hashes, versions, modelling choices
    testset/Tx.csv, testset/Ty.csv
    traces/al_rep<i>.jsonl    acquisition rounds of each active-learning run
    models/<method>_rep<i>.json   tandem models (with save_models)
"""

from __future__ import annotations

import csv
import io
import json
import logging
import platform
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .acquisition import ALConfig, PsoConfig, active_learn
from .benchmarks import BenchmarkProblem, TestSet, get_problem, make_test_set
from .nn import TandemModel, save_tandem, tandem_fit, tandem_predict_design, tandem_spec
from .numcore import (
    LabeledDataset, MetricsReport, SummaryStats, compute_metrics, derive_seed, summarize,
)
from .samplers import get_sampler
from .surrogates import predict_mean_std, train_uncertainty_model

log = logging.getLogger(__name__)

__all__ = [
    "METHODS", "METRICS", "DEFAULT_N_MAX", "DEFAULT_MODEL_KIND",
    "ExperimentConfig", "ExperimentRecord", "ExperimentSummary",
    "validate_inverse", "validate_forward", "run_method", "run_experiment",
    "summarize_experiment", "read_records", "write_outputs",
]

METHODS = ("al", "random", "lhs", "bc", "gfp")
_ALIASES = {"r": "random", "rand": "random", "greedyfp": "gfp", "bestcandidate": "bc"}
METRICS = ("inverse_rmse", "inverse_r2", "inverse_nmae",
           "forward_rmse", "forward_r2", "forward_nmae")
DEFAULT_N_MAX = {"aidlike": 150, "psidlike": 300, "sbr": 400}
DEFAULT_MODEL_KIND = {"aidlike": "forest", "psidlike": "forest", "sbr": "deep_ensemble"}


def normalize_method(name: str) -> str:
    m = _ALIASES.get(name.strip().lower(), name.strip().lower())
    if m not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {list(METHODS)}")
    return m


@dataclass
class ExperimentConfig:
    benchmark: str = "sbr"
    methods: tuple = METHODS
    n_max: int | None = None
    repetitions: int = 30
    seed: int = 0
    model_kind: str | None = None
    n0: int = 20
    k: int = 5
    test_size: int = 1000
    pso: dict = field(default_factory=dict)
    model_options: dict = field(default_factory=dict)
    tandem: dict = field(default_factory=dict)
    save_models: bool = False

    def __post_init__(self):
        if isinstance(self.methods, str):
            self.methods = self.methods.split(",")
        self.methods = tuple(normalize_method(m) for m in self.methods)
        if not self.methods:
            raise ValueError("at least one method is required")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        get_problem(self.benchmark)
        if self.n_max is None:
            self.n_max = DEFAULT_N_MAX[self.benchmark.lower()]
        if self.model_kind is None:
            self.model_kind = DEFAULT_MODEL_KIND[self.benchmark.lower()]

    def al_config(self) -> ALConfig:
        return ALConfig(n0=self.n0, k=self.k, n_max=self.n_max, pso=PsoConfig(**self.pso),
                        model_kind=self.model_kind, model_options=dict(self.model_options))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ExperimentRecord:
    method: str
    repetition: int
    seed: int
    status: str = "ok"
    reason: str = ""
    n_samples: int = 0
    dataset_hash: str = ""
    clamp_count: int = 0
    inverse_metrics: MetricsReport | None = None
    forward_metrics: MetricsReport | None = None
    wall_time: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict, repr=False)

    def metric(self, name: str) -> float | None:
        side, key = name.split("_", 1)
        rep = self.inverse_metrics if side == "inverse" else self.forward_metrics
        return None if rep is None else getattr(rep, key)

    def to_dict(self) -> dict:
        """Reproducible fields only; timings and artifacts are left out."""
        return {
            "method": self.method, "repetition": self.repetition, "seed": self.seed,
            "status": self.status, "reason": self.reason, "n_samples": self.n_samples,
            "dataset_hash": self.dataset_hash, "clamp_count": self.clamp_count,
            "inverse_metrics": None if self.inverse_metrics is None else self.inverse_metrics.to_dict(),
            "forward_metrics": None if self.forward_metrics is None else self.forward_metrics.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        d = dict(d)
        for key in ("inverse_metrics", "forward_metrics"):
            if d.get(key) is not None:
                d[key] = MetricsReport(**d[key])
        return cls(**d)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _evaluate_rows(prob: BenchmarkProblem, X: np.ndarray) -> np.ndarray:
    try:
        return prob.evaluate_many(X)
    except Exception:
        for i, x in enumerate(X):
            try:
                prob.evaluate(x)
            except Exception as exc:
                raise RuntimeError(f"high-fidelity evaluation failed at test index {i}: {exc}") from exc
        raise


def inverse_validation(t: TandemModel, prob: BenchmarkProblem, ts: TestSet):
    """Metrics of the reconstructed responses plus the number of clamped designs."""
    if t.p != prob.p or t.d != prob.d or ts.Ty.shape[1] != prob.p:
        raise ValueError("tandem model, problem and test set disagree on dimensions")
    designs = tandem_predict_design(t, ts.Ty)
    outside = (designs < prob.bounds.lower) | (designs > prob.bounds.upper)
    clamped = prob.bounds.clip(designs)
    Py = _evaluate_rows(prob, clamped)
    return compute_metrics(ts.Ty, Py), int(outside.any(axis=1).sum())


def validate_inverse(t: TandemModel, prob: BenchmarkProblem, ts: TestSet) -> MetricsReport:
    """Feed test responses through the inverse network, clamp the proposed
    designs to the box, re-evaluate them with ``prob`` and score the
    reconstructed responses against the test responses."""
    return inverse_validation(t, prob, ts)[0]


def validate_forward(M, ts: TestSet) -> MetricsReport:
    mean, _ = predict_mean_std(M, ts.Tx)
    return compute_metrics(ts.Ty, mean)


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

def run_method(method: str, prob: BenchmarkProblem, cfg: ExperimentConfig, seed: int,
               test_set: TestSet, repetition: int = 0) -> ExperimentRecord:
    method = normalize_method(method)
    rec = ExperimentRecord(method=method, repetition=repetition, seed=int(seed))
    timer = time.perf_counter
    try:
        t0 = timer()
        if method == "al":
            res = active_learn(prob.evaluate, prob.bounds, cfg.al_config(),
                               seed=derive_seed(seed, "data"))
            D, M = res.dataset, res.model
            rec.artifacts["trace"] = res.trace
            rec.wall_time["sampling"] = timer() - t0
        else:
            X = get_sampler(method)(prob.bounds, cfg.n_max, derive_seed(seed, "data")).points
            D = LabeledDataset(X, prob.evaluate_many(X))
            rec.wall_time["sampling"] = timer() - t0
            t1 = timer()
            M = train_uncertainty_model(cfg.model_kind, D, derive_seed(seed, "forward_model"),
                                        **cfg.model_options)
            rec.wall_time["forward_model"] = timer() - t1
        rec.n_samples = len(D)
        rec.dataset_hash = D.sha256()
        t2 = timer()
        tandem = tandem_fit(D, tandem_spec(**cfg.tandem), seed=derive_seed(seed, "tandem"))
        rec.wall_time["training"] = timer() - t2
        t3 = timer()
        rec.inverse_metrics, rec.clamp_count = inverse_validation(tandem, prob, test_set)
        rec.forward_metrics = validate_forward(M, test_set)
        rec.wall_time["validation"] = timer() - t3
        rec.artifacts["tandem"] = tandem
        if not (rec.inverse_metrics.is_finite() and rec.forward_metrics.is_finite()):
            rec.status, rec.reason = "failed", "non-finite metrics"
    except Exception as exc:  # a failed repetition is reported, never resampled
        log.warning("run %s/%d failed: %s", method, repetition, exc)
        rec.status, rec.reason = "failed", f"{type(exc).__name__}: {exc}"
    rec.wall_time["total"] = sum(rec.wall_time.values())
    return rec


def record_seed(base: int, method: str, repetition: int) -> int:
    return derive_seed(base, "record", method, repetition)


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> list[ExperimentRecord]:
    prob = get_problem(cfg.benchmark)
    test_set = make_test_set(prob, cfg.test_size, derive_seed(cfg.seed, "testset"))
    records = []
    for method in cfg.methods:
        for rep in range(cfg.repetitions):
            rec = run_method(method, prob, cfg, record_seed(cfg.seed, method, rep), test_set, rep)
            log.info("%s rep %d: %s", method, rep, rec.to_dict())
            records.append(rec)
    if out_dir is not None:
        write_outputs(out_dir, cfg, prob, test_set, records)
    return records


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

@dataclass
class ExperimentSummary:
    methods: tuple
    stats: dict            # (method, metric) -> SummaryStats | None
    counts: dict           # method -> (n_ok, n_failed)
    best: dict             # metric -> method | None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "metric", "mean", "std", "max", "min", "n_ok", "n_failed", "best"])
        for m in self.methods:
            n_ok, n_failed = self.counts[m]
            for metric in METRICS:
                s = self.stats[(m, metric)]
                vals = ["unavailable"] * 4 if s is None else [repr(s.mean), repr(s.std),
                                                             repr(s.max), repr(s.min)]
                w.writerow([m, metric, *vals, n_ok, n_failed, int(self.best[metric] == m)])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'method':8s} {'metric':14s} {'mean':>10s} {'std':>10s} {'max':>10s} {'min':>10s}"]
        for m in self.methods:
            for metric in METRICS:
                s = self.stats[(m, metric)]
                mark = " *" if self.best[metric] == m else ""
                if s is None:
                    lines.append(f"{m:8s} {metric:14s} {'unavailable':>10s}")
                else:
                    lines.append(f"{m:8s} {metric:14s} {s.mean:10.4f} {s.std:10.4f} "
                                 f"{s.max:10.4f} {s.min:10.4f}{mark}")
        return "\n".join(lines)


def summarize_experiment(records) -> ExperimentSummary:
    """Per-method, per-metric statistics over successful runs.

    The best method per metric is the lowest mean for RMSE/NMAE and the
    highest mean for R2; ties go to the alphabetically first method.
    """
    methods = tuple(dict.fromkeys(r.method for r in records))
    stats, counts = {}, {}
    for m in methods:
        ok = [r for r in records if r.method == m and r.status == "ok"]
        counts[m] = (len(ok), sum(1 for r in records if r.method == m) - len(ok))
        for metric in METRICS:
            vals = [r.metric(metric) for r in ok if r.metric(metric) is not None]
            stats[(m, metric)] = summarize(vals) if vals else None
    best = {}
    for metric in METRICS:
        sign = -1.0 if metric.endswith("r2") else 1.0
        cands = sorted((sign * stats[(m, metric)].mean, m) for m in methods
                       if stats[(m, metric)] is not None)
        best[metric] = cands[0][1] if cands else None
    return ExperimentSummary(methods, stats, counts, best)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def read_records(path) -> list[ExperimentRecord]:
    path = Path(path)
    if path.is_dir():
        path = path / "records.jsonl"
    return [ExperimentRecord.from_dict(json.loads(line))
            for line in path.read_text().splitlines() if line.strip()]


def write_boxplot_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "repetition", "seed", "status", *METRICS])
    for r in records:
        vals = [r.metric(m) for m in METRICS]
        w.writerow([r.method, r.repetition, r.seed, r.status,
                    *("" if v is None else repr(v) for v in vals)])
    return buf.getvalue()


def write_outputs(out_dir, cfg: ExperimentConfig, prob: BenchmarkProblem, test_set: TestSet,
                  records) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
    with open(out / "timings.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps({"method": r.method, "repetition": r.repetition,
                                 "wall_time": r.wall_time}) + "\n")
    summary = summarize_experiment(records)
    (out / "summary.csv").write_text(summary.to_csv())
    (out / "boxplot_data.csv").write_text(write_boxplot_csv(records))
    digests = test_set.save(out / "testset", list(prob.bounds.names), list(prob.output_names))
    for r in records:
        if "trace" in r.artifacts:
            (out / "traces").mkdir(exist_ok=True)
            with open(out / "traces" / f"al_rep{r.repetition}.jsonl", "w") as fh:
                for entry in r.artifacts["trace"]:
                    fh.write(json.dumps(entry) + "\n")
        if cfg.save_models and "tandem" in r.artifacts:
            (out / "models").mkdir(exist_ok=True)
            save_tandem(r.artifacts["tandem"], out / "models" / f"{r.method}_rep{r.repetition}.json")
    manifest = {
        "config": cfg.to_dict(),
        "base_seed": cfg.seed,
        "record_seeds": {f"{r.method}/{r.repetition}": r.seed for r in records},
        "dataset_hashes": {f"{r.method}/{r.repetition}": r.dataset_hash for r in records},
        "testset": {"n": len(test_set), "seed": derive_seed(cfg.seed, "testset"),
                    "sha256": digests},
        "choices": {
            "sampler_distance_space": "unit-normalized box",
            "tandem_loss_space": "scaled",
            "inverse_designs": "clamped to bounds before evaluation",
            "best_method_ties": "alphabetically first method",
            "problem": prob.metadata,
        },
        "versions": {"autotandem": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
