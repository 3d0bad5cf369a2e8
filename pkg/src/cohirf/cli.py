"""Command-line entry point: ``cohirf {fit,search,bench-scale,bench-separation,generate}``."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import datagen
from .engine import VARIANTS, CohirfConfig, cohirf_fit
from .exceptions import CohirfError, InvalidArgumentError
from .io import (
    DatasetSchema,
    export_hierarchy,
    labels_csv,
    load_dataset,
    write_bytes_atomic,
    write_dataset_csv,
)
from .medoid import MODES, MedoidMode
from .metrics import adjusted_rand_index, rand_index

logger = logging.getLogger("cohirf")

DESK_CELL_LIMIT = 10**7
BENCH_COLUMNS = (
    "benchmark", "kind", "n", "p", "k", "delta", "variant", "seed",
    "q", "R", "C", "ari", "ri", "time_s", "n_clusters", "steps", "status",
)
TRIAL_COLUMNS = ("trial", "q", "R", "C", "seed", "ari", "ri", "n_clusters", "steps", "time_s")
SEARCH_R = (2, 10)
SEARCH_C = (2, 10)
SEARCH_Q_MAX = 30


@dataclass
class LoadedData:
    X: np.ndarray
    labels: Optional[np.ndarray]
    descriptor: dict


def _parse_gamma(s):
    if s is None or s == "median":
        return s
    return float(s)


def _add_source_args(p, synthetic_default=None):
    g = p.add_argument_group("dataset")
    g.add_argument("--csv", type=Path, help="CSV file with a header row")
    g.add_argument("--schema", type=Path, help="JSON sidecar mapping column names to kinds")
    g.add_argument("--label-column", help="treat this column as ground-truth labels")
    g.add_argument("--no-standardize", action="store_true",
                   help="keep continuous columns unscaled")
    g.add_argument("--synthetic", choices=datagen.KINDS, default=synthetic_default,
                   help="generate a synthetic dataset instead of reading a CSV")
    g.add_argument("--n", type=int, default=500, help="synthetic sample count")
    g.add_argument("--p", type=int, default=347, help="synthetic feature count")
    g.add_argument("--k", type=int, default=5, help="synthetic true cluster count")
    g.add_argument("--delta", type=float, default=100.0, help="synthetic separation")
    g.add_argument("--allow-large", action="store_true",
                   help=f"permit synthetic data with n*p > {DESK_CELL_LIMIT:.0e}")


def _add_config_args(p, with_hyper=True):
    g = p.add_argument_group("CoHiRF")
    g.add_argument("--variant", choices=VARIANTS, default="cohirf")
    if with_hyper:
        g.add_argument("--q", type=int, default=None, help="features per repetition")
        g.add_argument("--r", type=int, default=5, help="repetitions R")
        g.add_argument("--c", type=int, default=3, help="K-Means clusters C")
    g.add_argument("--medoid", choices=MODES, default=None, help="override the variant's medoid rule")
    g.add_argument("--cap", type=int, default=1000, help="subsample cap for abs_inner_capped")
    g.add_argument("--gamma", default=None, help="RBF gamma: a number or 'median' (default 1/p)")
    g.add_argument("--include-self", action="store_true",
                   help="keep the self term in the inner-product medoid objective")
    g.add_argument("--batch-size", type=int, default=None, help="batch size for cohirf-sampled")
    g.add_argument("--max-iter", type=int, default=300)
    g.add_argument("--tol", type=float, default=1e-4)
    g.add_argument("--max-steps", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--jobs", type=int, default=1, help="worker threads")


def _config_from_args(args, **overrides) -> CohirfConfig:
    kw = dict(
        q=getattr(args, "q", None),
        n_repetitions=getattr(args, "r", 5),
        n_clusters=getattr(args, "c", 3),
        seed=args.seed,
        max_iter=args.max_iter,
        tol=args.tol,
        max_steps=args.max_steps,
        n_jobs=args.jobs,
    )
    if args.medoid is not None:
        kw["medoid_mode"] = MedoidMode(
            args.medoid, cap=args.cap, gamma=_parse_gamma(args.gamma), include_self=args.include_self
        )
    elif args.variant == "cohirf-1000":
        kw["medoid_mode"] = MedoidMode.capped(args.cap, include_self=args.include_self)
    elif args.variant == "cohirf-rbf":
        kw["medoid_mode"] = MedoidMode.rbf(_parse_gamma(args.gamma))
    elif args.include_self:
        kw["medoid_mode"] = MedoidMode.abs_inner(include_self=True)
    if args.batch_size is not None:
        kw["batch_size"] = args.batch_size
    kw.update(overrides)
    return CohirfConfig.variant(args.variant, **kw)


def _check_size(n, p, allow_large):
    if n * p > DESK_CELL_LIMIT and not allow_large:
        raise InvalidArgumentError(
            f"n*p = {n * p} exceeds the desk-scale limit {DESK_CELL_LIMIT}; pass --allow-large"
        )


def _load_source(args) -> LoadedData:
    if args.csv is not None and args.synthetic is not None:
        raise InvalidArgumentError("use either --csv or --synthetic, not both")
    if args.csv is not None:
        schema = DatasetSchema.from_file(args.schema) if args.schema else None
        ds = load_dataset(args.csv, schema, label_column=args.label_column,
                          preprocess=not args.no_standardize)
        desc = {"source": "csv", "path": str(args.csv), "n": ds.X.shape[0], "p": ds.X.shape[1],
                "schema": str(args.schema) if args.schema else None,
                "standardized": not args.no_standardize}
        return LoadedData(ds.X, ds.labels, desc)
    if args.synthetic is None:
        raise InvalidArgumentError("a dataset is required: pass --csv PATH or --synthetic KIND")
    _check_size(args.n, args.p, args.allow_large)
    spec = datagen.SyntheticSpec(args.n, args.p, args.k, args.delta, args.synthetic, args.seed)
    X, y = datagen.generate(spec)
    desc = {"source": "synthetic", "kind": spec.kind, "n": spec.n, "p": spec.p, "k": spec.k,
            "delta": spec.delta, "seed": spec.seed}
    return LoadedData(X, y, desc)


def _timed_fit(X, config):
    t0 = time.perf_counter()
    result = cohirf_fit(X, config)
    return result, time.perf_counter() - t0


def run_report(command, data: LoadedData, config, variant, result, elapsed) -> dict:
    report = {
        "command": command,
        "variant": variant,
        "config": config.to_dict(),
        "dataset": data.descriptor,
        "seed": config.seed,
        "n_clusters": result.n_clusters,
        "per_step_counts": list(result.per_step_counts),
        "steps_run": result.steps_run,
        "converged": result.converged,
        "fit_time_s": elapsed,
    }
    if data.labels is not None:
        report["ari"] = adjusted_rand_index(result.labels, data.labels)
        report["ri"] = rand_index(result.labels, data.labels)
    return report


def _hierarchy_payloads(result, fmt):
    fmts = ("dot", "json") if fmt == "both" else (fmt,)
    return {f"hierarchy.{f}": export_hierarchy(result.hierarchy, f) for f in fmts}


def _write_artifacts(out_dir: Path, payloads: dict) -> None:
    """Write every payload or none of them."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for name, payload in payloads.items():
            write_bytes_atomic(out_dir / name, payload)
            written.append(out_dir / name)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def _dump(obj) -> bytes:
    return (json.dumps(obj, indent=2, default=_json_default) + "\n").encode("utf-8")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _summary(report: dict) -> str:
    keys = ("command", "variant", "n_clusters", "steps_run", "fit_time_s", "ari", "ri")
    return json.dumps({k: report[k] for k in keys if k in report}, default=_json_default)


# commands


def cmd_fit(args) -> dict:
    data = _load_source(args)
    config = _config_from_args(args)
    result, elapsed = _timed_fit(data.X, config)
    report = run_report("fit", data, config, args.variant, result, elapsed)
    payloads = {
        "labels.csv": labels_csv(result.labels),
        "report.json": _dump({**report, "labels": result.labels}),
        **_hierarchy_payloads(result, args.hierarchy_format),
    }
    _write_artifacts(args.out_dir, payloads)
    print(_summary(report))
    return report


def search_space(p: int, full_features: bool = False):
    """Inclusive (low, high) bounds for q, R and C."""
    if p >= 3:
        q_hi = min(SEARCH_Q_MAX, p - 1)
    elif p == 2 or full_features:
        q_hi = max(p, 2)
    else:
        raise InvalidArgumentError("feature sampling needs p >= 2; use --variant cohirf-full")
    return {"q": (2, q_hi), "R": SEARCH_R, "C": SEARCH_C}


def draw_trials(n_trials: int, p: int, seed: int, full_features: bool = False) -> list:
    box = search_space(p, full_features)
    rng = np.random.default_rng(seed)
    trials = []
    for t in range(n_trials):
        q = int(rng.integers(box["q"][0], box["q"][1] + 1))
        R = int(rng.integers(box["R"][0], box["R"][1] + 1))
        C = int(rng.integers(box["C"][0], box["C"][1] + 1))
        fit_seed = int(rng.integers(2**31 - 1))
        trials.append({"trial": t, "q": q, "R": R, "C": C, "seed": fit_seed})
    return trials


def run_search(X, labels, base: CohirfConfig, n_trials: int, seed: int, jobs: int = 1):
    """Uniform random search over (q, R, C); returns (trial rows, best index, best result)."""
    if labels is None:
        raise InvalidArgumentError("hyperparameter search needs ground-truth labels")
    if n_trials < 1:
        raise InvalidArgumentError("--trials must be >= 1")
    trials = draw_trials(n_trials, X.shape[1], seed, base.full_features)

    def run(trial):
        cfg = replace(base, q=min(trial["q"], X.shape[1]), n_repetitions=trial["R"],
                      n_clusters=trial["C"], seed=trial["seed"], n_jobs=1)
        result, elapsed = _timed_fit(X, cfg)
        row = dict(trial)
        row.update(ari=adjusted_rand_index(result.labels, labels), ri=rand_index(result.labels, labels),
                   n_clusters=result.n_clusters, steps=result.steps_run, time_s=elapsed)
        return row, result, cfg, elapsed

    if jobs == 1:
        outcomes = [run(t) for t in trials]
    else:
        with ThreadPoolExecutor(max_workers=jobs if jobs > 0 else None) as ex:
            outcomes = list(ex.map(run, trials))
    rows = [o[0] for o in outcomes]
    best = max(range(len(rows)), key=lambda i: (rows[i]["ari"], -i))
    return rows, best, outcomes[best]


def _csv_bytes(rows, columns) -> bytes:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue().encode("utf-8")


def cmd_search(args) -> dict:
    data = _load_source(args)
    base = _config_from_args(args)
    rows, best, (row, result, cfg, elapsed) = run_search(
        data.X, data.labels, base, args.trials, args.seed, args.jobs
    )
    report = run_report("search", data, cfg, args.variant, result, elapsed)
    report["best_trial"] = best
    report["n_trials"] = len(rows)
    report["search_space"] = search_space(data.X.shape[1], base.full_features)
    payloads = {
        "trials.csv": _csv_bytes(rows, TRIAL_COLUMNS),
        "labels.csv": labels_csv(result.labels),
        "report.json": _dump({**report, "labels": result.labels}),
        **_hierarchy_payloads(result, args.hierarchy_format),
    }
    _write_artifacts(args.out_dir, payloads)
    print(_summary(report))
    return report


def _append_rows(path: Path, rows) -> None:
    """Append rows to a benchmark CSV, writing the header only for a new file."""
    new = not path.exists() or path.stat().st_size == 0
    if not new:
        with path.open(newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
        if header != list(BENCH_COLUMNS):
            raise InvalidArgumentError(f"{path} exists with a different column set")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerows(rows)


def _bench_group(benchmark, points, variant, seed, args):
    """Run one variant/seed over its grid points, smallest first."""
    rows = []
    over_budget_at = None
    for kind, n, p, delta in points:
        row = {"benchmark": benchmark, "kind": kind, "n": n, "p": p, "k": args.k, "delta": delta,
               "variant": variant, "seed": seed, "q": min(args.q, p), "R": args.r, "C": args.c,
               "ari": "", "ri": "", "time_s": "", "n_clusters": "", "steps": "", "status": "ok"}
        if n * p > DESK_CELL_LIMIT and not args.allow_large:
            row["status"] = "skipped"
        elif over_budget_at is not None and n * p >= over_budget_at:
            row["status"] = "skipped"
        if row["status"] == "skipped":
            rows.append(row)
            continue
        X, y = datagen.generate(datagen.SyntheticSpec(n, p, args.k, delta, kind, seed))
        cfg = CohirfConfig.variant(variant, q=row["q"] if variant != "cohirf-full" else None,
                                   n_repetitions=args.r, n_clusters=args.c, seed=seed)
        result, elapsed = _timed_fit(X, cfg)
        row.update(ari=adjusted_rand_index(result.labels, y), ri=rand_index(result.labels, y),
                   time_s=elapsed, n_clusters=result.n_clusters, steps=result.steps_run)
        if args.time_budget is not None and elapsed > args.time_budget:
            over_budget_at = n * p
        rows.append(row)
    return rows


def _run_bench(benchmark, points, args):
    groups = [(v, args.seed + s) for v in args.variants for s in range(args.seeds)]

    def run(g):
        return _bench_group(benchmark, points, g[0], g[1], args)

    if args.jobs == 1:
        chunks = [run(g) for g in groups]
    else:
        with ThreadPoolExecutor(max_workers=args.jobs if args.jobs > 0 else None) as ex:
            chunks = list(ex.map(run, groups))
    rows = [r for chunk in chunks for r in chunk]
    _append_rows(args.out, rows)
    for r in rows:
        logger.info("%s n=%s p=%s delta=%s %s seed=%s ari=%s time=%s %s", benchmark, r["n"], r["p"],
                    r["delta"], r["variant"], r["seed"], r["ari"], r["time_s"], r["status"])
    print(f"wrote {len(rows)} rows to {args.out}")
    return rows


def cmd_bench_scale(args) -> list:
    if args.axis == "both":
        pairs = [(n, p) for n in args.grid for p in args.grid]
    elif args.axis == "n":
        pairs = [(n, args.fixed) for n in args.grid]
    else:
        pairs = [(args.fixed, p) for p in args.grid]
    pairs.sort(key=lambda np_: (np_[0] * np_[1], np_))
    points = [(datagen.HYPERCUBE, n, p, args.delta) for n, p in pairs]
    return _run_bench("scale", points, args)


def cmd_bench_separation(args) -> list:
    points = [(args.kind, args.n, args.p, d) for d in args.deltas]
    return _run_bench("separation", points, args)


def cmd_generate(args) -> None:
    _check_size(args.n, args.p, args.allow_large)
    spec = datagen.SyntheticSpec(args.n, args.p, args.k, args.delta, args.kind, args.seed)
    X, y = datagen.generate(spec)
    write_dataset_csv(args.out, X, y)
    schema_path = args.out.with_suffix(".schema.json")
    schema_path.write_text(json.dumps(DatasetSchema({"label": "label"}).to_dict()) + "\n", encoding="utf-8")
    print(f"wrote {args.out} and {schema_path}")


def _add_bench_common(p, variants_default=("cohirf",)):
    p.add_argument("--variants", nargs="+", choices=VARIANTS, default=list(variants_default))
    p.add_argument("--q", type=int, default=20)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--c", type=int, default=5)
    p.add_argument("--k", type=int, default=5, help="true cluster count")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--time-budget", type=float, default=None,
                   help="seconds; once a fit exceeds it, larger grid points of that variant are skipped")
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cohirf", description="Consensus hierarchical random-feature clustering")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit CoHiRF on a CSV or synthetic dataset")
    _add_source_args(p)
    _add_config_args(p)
    p.add_argument("--out-dir", type=Path, default=Path("cohirf_out"))
    p.add_argument("--hierarchy-format", choices=("dot", "json", "both"), default="both")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("search", help="random search over q, R and C maximizing ARI")
    _add_source_args(p)
    _add_config_args(p, with_hyper=False)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out-dir", type=Path, default=Path("cohirf_search"))
    p.add_argument("--hierarchy-format", choices=("dot", "json", "both"), default="both")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("bench-scale", help="runtime on hypercube data over an n/p grid")
    p.add_argument("--grid", type=int, nargs="+", default=list(datagen.SCALABILITY_GRID[:3]))
    p.add_argument("--axis", choices=("both", "n", "p"), default="both")
    p.add_argument("--fixed", type=int, default=1202, help="value of the axis not being varied")
    p.add_argument("--delta", type=float, default=100.0)
    p.add_argument("--out", type=Path, default=Path("bench_scale.csv"))
    _add_bench_common(p)
    p.set_defaults(func=cmd_bench_scale)

    p = sub.add_parser("bench-separation", help="ARI and runtime over a sweep of cluster separations")
    p.add_argument("--deltas", type=float, nargs="+", default=[70.0, 100.0, 150.0, 200.0])
    p.add_argument("--kind", choices=datagen.KINDS, default=datagen.GAUSSIANS)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--p", type=int, default=1000)
    p.add_argument("--out", type=Path, default=Path("bench_separation.csv"))
    _add_bench_common(p)
    p.set_defaults(func=cmd_bench_separation)

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    p.add_argument("--kind", choices=datagen.KINDS, default=datagen.HYPERCUBE)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--p", type=int, default=347)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--delta", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (CohirfError, OSError) as exc:
        print(f"cohirf: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
