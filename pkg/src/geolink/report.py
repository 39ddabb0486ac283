"""Run reports: a human-readable summary plus a machine-readable section.

The machine section embeds the full effective configuration, the fitted
specs, seeds, timing split, and kernel counters, so re-running a report's
configuration reproduces its pair set bit-exactly.
"""

from __future__ import annotations

from dataclasses import asdict

from .linkage import LinkageMetrics, LinkageRun

__all__ = ["render_report", "parse_report"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    return str(value)


def render_report(
    run: LinkageRun,
    metrics: LinkageMetrics | None = None,
    extra: dict | None = None,
) -> str:
    """Render a linkage run (and optional evaluation) as report text."""
    cfg = asdict(run.config)
    lines: list[str] = []
    out = lines.append
    out("account linkage run report")
    out("=" * 26)
    out("")
    out("configuration:")
    for key in sorted(cfg):
        out(f"  {key} = {_fmt(cfg[key])}")
    if extra:
        for key in sorted(extra):
            out(f"  {key} = {_fmt(extra[key])}")
    out("")
    g = run.grid_spec
    t = run.time_spec
    out(
        f"grid: d={g.d} lat=[{g.min_lat!r}, {g.max_lat!r}] "
        f"lng=[{g.min_lng!r}, {g.max_lng!r}] ref_lat={g.ref_lat!r}"
    )
    out(f"time: periods={t.periods} span=[{t.t_min!r}, {t.t_max!r}]")
    out("")
    out("timing:")
    out(f"  preprocessing_seconds = {run.preprocess_seconds!r}")
    out(f"  calculation_seconds = {run.score_seconds!r}")
    out("")
    out("counters:")
    out(f"  candidates = {run.candidate_count}")
    out(f"  pairs_scored = {run.counters.pairs}")
    out(f"  spatial_kernel_evals = {run.counters.spatial_evals}")
    out(f"  temporal_kernel_evals = {run.counters.temporal_evals}")
    out("")
    removed_total = sum(len(v) for v in run.removed_cells_1.values()) + sum(
        len(v) for v in run.removed_cells_2.values()
    )
    out(f"outlier cells removed: {removed_total}")
    for side, removed in (("a", run.removed_cells_1), ("b", run.removed_cells_2)):
        for aid in sorted(removed):
            out(f"  {side}:{aid}: {','.join(str(c) for c in removed[aid])}")
    out("")
    if metrics is not None:
        out("metrics:")
        out(f"  precision = {metrics.precision!r}")
        out(f"  recall = {metrics.recall!r}")
        out(f"  f1 = {metrics.f1!r}")
        out(
            f"  correct = {metrics.n_correct}  truth = {metrics.n_truth}"
            f"  returned = {metrics.n_returned}"
        )
        out("")
    out(f"matches: {len(run.matches)} (listed in the [matches] section)")
    out("")

    out("[machine]")
    machine: dict[str, object] = dict(cfg)
    machine.update(
        grid_min_lat=g.min_lat,
        grid_min_lng=g.min_lng,
        grid_max_lat=g.max_lat,
        grid_max_lng=g.max_lng,
        grid_d=g.d,
        grid_ref_lat=g.ref_lat,
        time_t_min=t.t_min,
        time_t_max=t.t_max,
        time_periods=t.periods,
        preprocessing_seconds=run.preprocess_seconds,
        calculation_seconds=run.score_seconds,
        candidates=run.candidate_count,
        pairs_scored=run.counters.pairs,
        spatial_kernel_evals=run.counters.spatial_evals,
        temporal_kernel_evals=run.counters.temporal_evals,
        outlier_cells_removed=removed_total,
        match_count=len(run.matches),
    )
    if extra:
        machine.update(extra)
    if metrics is not None:
        machine.update(
            precision=metrics.precision,
            recall=metrics.recall,
            f1=metrics.f1,
            correct=metrics.n_correct,
            truth=metrics.n_truth,
            returned=metrics.n_returned,
        )
    for key in sorted(machine):
        out(f"{key}={_fmt(machine[key])}")
    out("[matches]")
    for u1, u2, score in run.matches:
        out(f"{u1},{u2},{score!r}")
    out("[end]")
    out("")
    return "\n".join(lines)


def parse_report(text: str) -> dict:
    """Recover the machine keys and the match triples from report text."""
    machine: dict[str, str] = {}
    matches: list[tuple[str, str, float]] = []
    section = None
    for line in text.splitlines():
        if line == "[machine]":
            section = "machine"
            continue
        if line == "[matches]":
            section = "matches"
            continue
        if line == "[end]":
            section = None
            continue
        if section == "machine" and "=" in line:
            key, _, value = line.partition("=")
            machine[key] = value
        elif section == "matches" and line:
            u1, u2, score = line.split(",")
            matches.append((u1, u2, float(score)))
    return {"machine": machine, "matches": matches}
