"""Command-line frontend.

Subcommands: link, eval, synth, noise, split, predict, bench, sweep.
Configuration precedence is flags > --config JSON file > built-in defaults.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .linkage import LinkConfig, evaluate_pairs, link_accounts
from .model import (
    Dataset,
    GroundTruth,
    ingest_checkins,
    ingest_ground_truth,
    write_checkins,
    write_ground_truth,
)
from .predict import ActivityPredictor, fuse_datasets
from .report import render_report
from .synth import GenParams, generate_scaled, inject_noise, make_corpus, split_dataset
from .weights import load_weight_table, save_weight_table, weight_cache_key

__all__ = ["main"]

_CONFIG_FIELDS = list(asdict(LinkConfig()))


def _read_checkins(path: str, label: str) -> Dataset:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    return ingest_checkins(p.read_text(encoding="utf-8"), label)


def _read_truth(path: str) -> GroundTruth:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    return ingest_ground_truth(p.read_text(encoding="utf-8"))


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file of configuration values")
    parser.add_argument("--grid-size", type=int, dest="grid_size")
    parser.add_argument("--periods", type=int, dest="periods")
    parser.add_argument("--spatial-bandwidth", type=float, dest="spatial_bandwidth",
                        help="kernel bandwidth in meters")
    parser.add_argument("--temporal-bandwidth", type=float, dest="temporal_bandwidth",
                        help="kernel bandwidth in period widths")
    parser.add_argument("--alpha", type=float, dest="alpha")
    parser.add_argument("--entropy-order", type=float, dest="entropy_order")
    parser.add_argument("--top-k", type=int, dest="top_k")
    parser.add_argument("--score-threshold", type=float, dest="score_threshold")
    parser.add_argument("--keep-probability", type=float, dest="keep_probability")
    parser.add_argument("--cutoff", type=float, dest="cutoff",
                        help="density-peaks cutoff in meters (default 1.5 cell diagonals)")
    parser.add_argument("--center-score", type=float, dest="center_score")
    parser.add_argument("--filter-outliers", action=argparse.BooleanOptionalAction,
                        dest="filter_outliers", default=None)
    parser.add_argument("--weight-features", action=argparse.BooleanOptionalAction,
                        dest="weight_features", default=None)
    parser.add_argument("--prune-candidates", action=argparse.BooleanOptionalAction,
                        dest="prune_candidates", default=None)
    parser.add_argument("--n-jobs", type=int, dest="n_jobs")


def _resolve_config(args: argparse.Namespace) -> LinkConfig:
    values = asdict(LinkConfig())
    if getattr(args, "config", None):
        p = Path(args.config)
        if not p.exists():
            raise FileNotFoundError(f"config file not found: {args.config}")
        file_values = json.loads(p.read_text(encoding="utf-8"))
        unknown = set(file_values) - set(values)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(file_values)
    for key in _CONFIG_FIELDS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return LinkConfig(**values)


def _add_gen_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sigma-space", type=float, default=0.01,
                        help="spatial spread of generated records, degrees")
    parser.add_argument("--sigma-time", type=float, default=30.0,
                        help="temporal spread in generator units (period width / 36)")
    parser.add_argument("--centers-min", type=int, default=2)
    parser.add_argument("--centers-max", type=int, default=10)
    parser.add_argument("--gen-periods", type=int, default=2880,
                        help="period count sizing the generator time unit")


def _gen_params(args: argparse.Namespace) -> GenParams:
    return GenParams(
        centers_min=args.centers_min,
        centers_max=args.centers_max,
        sigma_space=args.sigma_space,
        sigma_time=args.sigma_time,
        periods=args.gen_periods,
        seed=args.seed,
    )


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _cmd_link(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    ds1 = _read_checkins(args.checkins_a, "a")
    ds2 = _read_checkins(args.checkins_b, "b")
    truth = _read_truth(args.truth) if args.truth else None

    weight_table = None
    cache_key = None
    if args.weight_cache and config.weight_features:
        cache_key = weight_cache_key(
            ds1, ds2, config.grid_size, config.periods, config.entropy_order
        )
        weight_table = load_weight_table(args.weight_cache, cache_key)

    run = link_accounts(ds1, ds2, config, weight_table=weight_table)

    if args.weight_cache and cache_key and run.weight_table is not None and weight_table is None:
        save_weight_table(run.weight_table, args.weight_cache, cache_key)

    metrics = evaluate_pairs(run.matches, truth) if truth else None
    extra = {
        "input_a": args.checkins_a,
        "input_b": args.checkins_b,
        "truth": args.truth or "none",
    }
    _write_text(args.output, render_report(run, metrics, extra))
    if args.matches_out:
        lines = [f"{u1},{u2},{score!r}\n" for u1, u2, score in run.matches]
        Path(args.matches_out).write_text("".join(lines), encoding="utf-8")
    summary = f"matched {len(run.matches)} pairs from {run.candidate_count} candidates"
    if metrics:
        summary += f"; precision={metrics.precision:.4f} recall={metrics.recall:.4f} f1={metrics.f1:.4f}"
    print(summary)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    p = Path(args.matches)
    if not p.exists():
        raise FileNotFoundError(f"input file not found: {args.matches}")
    pairs = []
    for line in p.read_text(encoding="utf-8").splitlines():
        if line.strip():
            parts = line.split(",")
            pairs.append((parts[0], parts[1]))
    truth = _read_truth(args.truth)
    m = evaluate_pairs(pairs, truth)
    text = (
        f"correct={m.n_correct}\ntruth={m.n_truth}\nreturned={m.n_returned}\n"
        f"precision={m.precision!r}\nrecall={m.recall!r}\nf1={m.f1!r}\n"
    )
    _write_text(args.output, text)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    base1 = _read_checkins(args.checkins_a, "a")
    base2 = _read_checkins(args.checkins_b, "b")
    truth = _read_truth(args.truth)
    ds1, ds2, new_truth = generate_scaled(base1, base2, truth, args.copies, _gen_params(args))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "a_scaled.csv", "w", encoding="utf-8") as f:
        write_checkins(ds1, f)
    with open(out / "b_scaled.csv", "w", encoding="utf-8") as f:
        write_checkins(ds2, f)
    with open(out / "truth_scaled.csv", "w", encoding="utf-8") as f:
        write_ground_truth(new_truth, f)
    print(
        f"scaled to {len(ds1)}+{len(ds2)} accounts, "
        f"{ds1.record_count() + ds2.record_count()} records, {len(new_truth)} pairs"
        f" (seed {args.seed})"
    )
    return 0


def _cmd_noise(args: argparse.Namespace) -> int:
    ds = _read_checkins(args.checkins, "a")
    noisy = inject_noise(ds, args.fraction, _gen_params(args))
    with open(args.output, "w", encoding="utf-8") as f:
        write_checkins(noisy, f)
    print(f"wrote {noisy.record_count()} records with {args.fraction:.0%} noise (seed {args.seed})")
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    ds = _read_checkins(args.checkins, "base")
    part_a, part_b = split_dataset(ds, args.seed)
    with open(args.out_a, "w", encoding="utf-8") as f:
        write_checkins(part_a, f)
    with open(args.out_b, "w", encoding="utf-8") as f:
        write_checkins(part_b, f)
    if args.truth_out:
        with open(args.truth_out, "w", encoding="utf-8") as f:
            write_ground_truth(GroundTruth.identity(ds), f)
    print(f"split {len(ds)} accounts into {part_a.record_count()}+{part_b.record_count()} records")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    if args.checkins_b or args.matches:
        if not (args.checkins_b and args.matches):
            raise ValueError("--checkins-b and --matches must be given together")
        ds1 = _read_checkins(args.checkins, "a")
        ds2 = _read_checkins(args.checkins_b, "b")
        mpath = Path(args.matches)
        if not mpath.exists():
            raise FileNotFoundError(f"input file not found: {args.matches}")
        pairs = [
            tuple(line.split(",")[:2])
            for line in mpath.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        fused = fuse_datasets(ds1, ds2, pairs)
    else:
        fused = _read_checkins(args.checkins, "fused")
    predictor = ActivityPredictor(
        grid_size=args.grid_size or 15000,
        periods=args.periods or 2880,
        cutoff=args.cutoff,
        center_score=args.center_score if args.center_score is not None else 30.0,
    ).fit(fused)
    lines: list[str] = []
    if args.task == "user":
        if args.lat is None or args.lng is None or args.time is None:
            raise ValueError("task 'user' needs --lat, --lng, and --time")
        ranked = predictor.predict_user(args.lat, args.lng, args.time)
        lines = [f"{aid},{prob!r}\n" for aid, prob in ranked[: args.top]]
    elif args.task == "location":
        if args.account is None or args.time is None:
            raise ValueError("task 'location' needs --account and --time")
        ranked = predictor.predict_location(args.account, args.time)
        lines = [f"{rid},{prob!r}\n" for rid, prob in ranked[: args.top]]
    else:
        if args.account is None or args.lat is None or args.lng is None:
            raise ValueError("task 'time' needs --account, --lat, and --lng")
        period = predictor.predict_time(args.account, args.lat, args.lng)
        lines = [f"{period}\n"]
    _write_text(args.output, "".join(lines))
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    params = GenParams(
        sigma_space=args.sigma_space,
        sigma_time=args.sigma_time,
        periods=config.periods,
        seed=args.seed,
    )
    rows = [
        f"# seed={args.seed} records_per_account={args.records} top_k={config.top_k}",
        "size,candidates,pairs_scored,preprocess_s,calc_s,total_s,avg_per_returned_s"
        + (",exhaustive_calc_s,calc_speedup" if args.compare_exhaustive else ""),
    ]
    for size in sizes:
        base = make_corpus(size, args.records, params)
        half_a, half_b = split_dataset(base, seed=args.seed)
        run = link_accounts(half_a, half_b, config)
        total = run.preprocess_seconds + run.score_seconds
        per_pair = total / len(run.matches) if run.matches else float("nan")
        row = (
            f"{size},{run.candidate_count},{run.counters.pairs},"
            f"{run.preprocess_seconds:.4f},{run.score_seconds:.4f},{total:.4f},{per_pair:.6f}"
        )
        if args.compare_exhaustive:
            exhaustive = link_accounts(
                half_a,
                half_b,
                LinkConfig(**{**asdict(config), "prune_candidates": False}),
            )
            speedup = exhaustive.score_seconds / run.score_seconds if run.score_seconds else float("inf")
            row += f",{exhaustive.score_seconds:.4f},{speedup:.2f}"
        rows.append(row)
    _write_text(args.output, "\n".join(rows) + "\n")
    return 0


def _parse_list(text: str, cast) -> list:
    return [cast(part) for part in text.split(",") if part]


def _cmd_sweep(args: argparse.Namespace) -> int:
    base_config = _resolve_config(args)
    ds1 = _read_checkins(args.checkins_a, "a")
    ds2 = _read_checkins(args.checkins_b, "b")
    truth = _read_truth(args.truth)
    bandwidths = _parse_list(args.spatial_bandwidths, float) or [base_config.spatial_bandwidth]
    orders = _parse_list(args.entropy_orders, float) or [base_config.entropy_order]
    alphas = _parse_list(args.alphas, float) or [base_config.alpha]
    ks = _parse_list(args.top_ks, int) or [base_config.top_k]
    thresholds = _parse_list(args.score_thresholds, float) or [base_config.score_threshold]

    rows = ["spatial_bandwidth,entropy_order,alpha,top_k,score_threshold,precision,recall,f1"]
    best = None
    for h, q, a, k in itertools.product(bandwidths, orders, alphas, ks):
        cfg = LinkConfig(**{
            **asdict(base_config),
            "spatial_bandwidth": h,
            "entropy_order": q,
            "alpha": a,
            "top_k": k,
        })
        run = link_accounts(ds1, ds2, cfg)
        for s in thresholds:
            m = evaluate_pairs(run.matches_at(s), truth)
            rows.append(f"{h!r},{q!r},{a!r},{k},{s!r},{m.precision!r},{m.recall!r},{m.f1!r}")
            key = (m.f1, -h, -q)
            if best is None or key > best[0]:
                best = (key, (h, q, a, k, s, m.f1))
    rows.append("")
    h, q, a, k, s, f1 = best[1]
    rows.append(
        f"best: spatial_bandwidth={h!r} entropy_order={q!r} alpha={a!r} "
        f"top_k={k} score_threshold={s!r} f1={f1!r}"
    )
    _write_text(args.output, "\n".join(rows) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geolink",
        description="Link accounts across two location platforms from check-in data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("link", help="run the linkage pipeline on two check-in files")
    p.add_argument("checkins_a")
    p.add_argument("checkins_b")
    p.add_argument("--truth", help="ground-truth pair file for evaluation")
    p.add_argument("--output", default="-", help="report path (default stdout)")
    p.add_argument("--matches-out", help="also write matched pairs as CSV")
    p.add_argument("--weight-cache", help="weight-table cache file keyed by data and parameters")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_link)

    p = sub.add_parser("eval", help="evaluate a matches CSV against ground truth")
    p.add_argument("--matches", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="scale a linked corpus with synthetic account pairs")
    p.add_argument("checkins_a")
    p.add_argument("checkins_b")
    p.add_argument("truth")
    p.add_argument("--copies", type=int, default=1)
    p.add_argument("--out-dir", default="synth_out")
    _add_gen_flags(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("noise", help="replace a fraction of records with perturbed ones")
    p.add_argument("checkins")
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--output", required=True)
    _add_gen_flags(p)
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("split", help="split each account's records into two halves")
    p.add_argument("checkins")
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.add_argument("--truth-out", help="write the identity ground truth")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("predict", help="rank users/regions/periods from fused check-ins")
    p.add_argument("checkins", help="fused check-in file (or platform A with --checkins-b/--matches)")
    p.add_argument("--checkins-b", help="platform B check-ins to fuse via --matches")
    p.add_argument("--matches", help="matched pairs CSV used to fuse the two inputs")
    p.add_argument("--task", choices=("user", "location", "time"), required=True)
    p.add_argument("--lat", type=float)
    p.add_argument("--lng", type=float)
    p.add_argument("--time", type=float)
    p.add_argument("--account")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--output", default="-")
    p.add_argument("--grid-size", type=int, dest="grid_size")
    p.add_argument("--periods", type=int, dest="periods")
    p.add_argument("--cutoff", type=float, dest="cutoff")
    p.add_argument("--center-score", type=float, dest="center_score")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("bench", help="time the pipeline over a schedule of corpus sizes")
    p.add_argument("--sizes", required=True, help="comma-separated account counts")
    p.add_argument("--records", type=int, default=120, help="records per generated account")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-space", type=float, default=1e-9)
    p.add_argument("--sigma-time", type=float, default=0.0)
    p.add_argument("--compare-exhaustive", action="store_true",
                   help="also time scoring without candidate pruning")
    p.add_argument("--output", default="-")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("sweep", help="grid-search parameters, ranking combinations by F1")
    p.add_argument("checkins_a")
    p.add_argument("checkins_b")
    p.add_argument("truth")
    p.add_argument("--spatial-bandwidths", default="", help="comma-separated meters")
    p.add_argument("--entropy-orders", default="")
    p.add_argument("--alphas", default="")
    p.add_argument("--top-ks", default="")
    p.add_argument("--score-thresholds", default="")
    p.add_argument("--output", default="-")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
