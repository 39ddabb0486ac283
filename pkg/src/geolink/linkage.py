"""End-to-end account linkage pipeline and evaluation.

Pipeline: fit grid/time specs over both datasets, build per-account
representations, compute feature weights, prune outlier cells, retrieve
top-k candidates through the inverted cell index, score candidates with the
joint weighted similarity, and keep pairs at or above the score threshold.
Preprocessing and pair scoring are timed separately; kernel counters record
how much work the scoring phase did.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass
from typing import Iterable, Sequence

from joblib import Parallel, delayed
from sklearn.base import BaseEstimator

from .candidates import CandidatePair, retrieve_candidates
from .indexing import GridSpec, TimeSpec, build_representation, build_specs
from .kde import Bandwidths, KernelCounters, make_scoring_view, score_views
from .model import Dataset, GroundTruth
from .outliers import DpParams, detect_outliers
from .validation import check_dataset, check_positive, check_unit_interval
from .weights import WeightTable, build_weight_table

__all__ = [
    "LinkConfig",
    "LinkageMetrics",
    "LinkageRun",
    "link_accounts",
    "evaluate_pairs",
    "AccountLinker",
]


@dataclass(frozen=True, slots=True)
class LinkConfig:
    """All linkage parameters. Defaults follow the dense-dataset setting:
    15000x15000 grid, 2880 periods, 60 m / 1 period bandwidths, alpha 0.5,
    entropy order 0.4, top-1 retrieval, score threshold 2e-5."""

    grid_size: int = 15000
    periods: int = 2880
    spatial_bandwidth: float = 60.0      # meters
    temporal_bandwidth: float = 1.0      # period widths
    alpha: float = 0.5                   # spatial/temporal trade-off exponent
    entropy_order: float = 0.4           # q of the entropy weights
    top_k: int = 1
    score_threshold: float = 2e-5
    keep_probability: float = 5e-5       # outlier probability floor
    cutoff: float | None = None          # meters; None = 1.5 cell diagonals
    center_score: float = 30.0           # density-peaks center threshold
    filter_outliers: bool = True
    weight_features: bool = True
    prune_candidates: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        if self.grid_size < 1 or self.periods < 1:
            raise ValueError("grid_size and periods must be >= 1")
        check_positive(self.spatial_bandwidth, "spatial_bandwidth")
        check_positive(self.temporal_bandwidth, "temporal_bandwidth")
        check_unit_interval(self.alpha, "alpha")
        check_positive(self.entropy_order, "entropy_order")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.score_threshold < 0:
            raise ValueError("score_threshold must be >= 0")

    def bandwidths(self) -> Bandwidths:
        return Bandwidths(self.spatial_bandwidth, self.temporal_bandwidth)

    def dp_params(self, grid: GridSpec) -> DpParams:
        cutoff = self.cutoff if self.cutoff is not None else 1.5 * grid.cell_diagonal_meters()
        return DpParams(cutoff, self.center_score, self.keep_probability)


@dataclass(frozen=True, slots=True)
class LinkageMetrics:
    """Exact set arithmetic of returned pairs against the ground truth."""

    n_correct: int
    n_truth: int
    n_returned: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class LinkageRun:
    """Everything one pipeline run produced, enough to reproduce it."""

    config: LinkConfig
    grid_spec: GridSpec
    time_spec: TimeSpec
    scored: tuple[tuple[str, str, float], ...]   # every scored candidate
    matches: tuple[tuple[str, str, float], ...]  # scored >= threshold
    candidate_count: int
    counters: KernelCounters
    removed_cells_1: dict[str, tuple[int, ...]]
    removed_cells_2: dict[str, tuple[int, ...]]
    preprocess_seconds: float
    score_seconds: float
    weight_table: WeightTable | None = None

    def matches_at(self, threshold: float) -> tuple[tuple[str, str, float], ...]:
        """Re-threshold the scored candidates without re-running the pipeline."""
        return tuple(row for row in self.scored if row[2] >= threshold)


def _build_reps(ds: Dataset, grid: GridSpec, time: TimeSpec):
    grids, times, joints = {}, {}, {}
    for aid, acct in ds.accounts.items():
        g, t, j = build_representation(acct, grid, time)
        grids[aid] = g
        times[aid] = t
        joints[aid] = j
    return grids, times, joints


def _score_chunk(chunk, views1, views2, alpha, bw):
    counters = KernelCounters()
    out = []
    for u1, u2 in chunk:
        out.append((u1, u2, score_views(views1[u1], views2[u2], alpha, bw, counters)))
    return out, counters


def link_accounts(
    ds1: Dataset,
    ds2: Dataset,
    config: LinkConfig | None = None,
    weight_table: WeightTable | None = None,
) -> LinkageRun:
    """Run the whole pipeline and return scored pairs plus run diagnostics.

    A precomputed ``weight_table`` (e.g. from the on-disk cache) skips the
    weight-building step; it must have been built for the same data, grid,
    periods, and entropy order.
    """
    config = config or LinkConfig()
    check_dataset(ds1, "platform 1 dataset")
    check_dataset(ds2, "platform 2 dataset")

    t0 = _time.perf_counter()
    grid, tspec = build_specs(ds1, ds2, config.grid_size, config.periods)
    grids1, times1, joints1 = _build_reps(ds1, grid, tspec)
    grids2, times2, joints2 = _build_reps(ds2, grid, tspec)

    weights: WeightTable | None = None
    if config.weight_features:
        weights = weight_table
        if weights is None:
            weights = build_weight_table(
                list(grids1.values()) + list(grids2.values()),
                list(times1.values()) + list(times2.values()),
                config.entropy_order,
            )

    removed1: dict[str, tuple[int, ...]] = {}
    removed2: dict[str, tuple[int, ...]] = {}
    if config.filter_outliers:
        dp = config.dp_params(grid)
        for aid in list(joints1):
            joints1[aid], removed = detect_outliers(joints1[aid], dp)
            if removed:
                removed1[aid] = removed
        for aid in list(joints2):
            joints2[aid], removed = detect_outliers(joints2[aid], dp)
            if removed:
                removed2[aid] = removed

    if config.prune_candidates:
        candidates: Sequence[CandidatePair] = retrieve_candidates(
            joints1, joints2, config.top_k
        ).pairs
        pair_ids = [(c.u1, c.u2) for c in candidates]
    else:
        pair_ids = [(u1, u2) for u1 in sorted(joints1) for u2 in sorted(joints2)]
    preprocess_seconds = _time.perf_counter() - t0

    t1 = _time.perf_counter()
    views1 = {aid: make_scoring_view(rep, weights) for aid, rep in joints1.items()}
    views2 = {aid: make_scoring_view(rep, weights) for aid, rep in joints2.items()}
    bw = config.bandwidths()
    counters = KernelCounters()
    if config.n_jobs == 1 or len(pair_ids) < 64:
        scored, chunk_counters = _score_chunk(pair_ids, views1, views2, config.alpha, bw)
        counters.merge(chunk_counters)
    else:
        n_chunks = max(1, min(len(pair_ids) // 32, 8 * abs(config.n_jobs)))
        chunks = [pair_ids[i::n_chunks] for i in range(n_chunks)]
        results = Parallel(n_jobs=config.n_jobs, prefer="threads")(
            delayed(_score_chunk)(chunk, views1, views2, config.alpha, bw)
            for chunk in chunks
        )
        scored = [row for rows, _ in results for row in rows]
        for _, chunk_counters in results:
            counters.merge(chunk_counters)
    # fixed output order regardless of retrieval rank or thread count
    scored.sort(key=lambda r: (r[0], r[1]))
    score_seconds = _time.perf_counter() - t1

    matches = tuple(row for row in scored if row[2] >= config.score_threshold)
    return LinkageRun(
        config=config,
        grid_spec=grid,
        time_spec=tspec,
        scored=tuple(scored),
        matches=matches,
        candidate_count=len(pair_ids),
        counters=counters,
        removed_cells_1=removed1,
        removed_cells_2=removed2,
        preprocess_seconds=preprocess_seconds,
        score_seconds=score_seconds,
        weight_table=weights,
    )


def evaluate_pairs(
    pairs: Iterable[tuple], truth: GroundTruth
) -> LinkageMetrics:
    """Precision/recall/F1 of returned pairs against the ground truth.

    ``pairs`` may carry scores; only the two account ids count. An empty
    return yields precision 0 rather than undefined so sweeps stay
    comparable.
    """
    if len(truth) == 0:
        raise ValueError("ground truth is empty")
    returned = {(p[0], p[1]) for p in pairs}
    n_correct = len(returned & truth.pairs)
    n_returned = len(returned)
    n_truth = len(truth)
    precision = n_correct / n_returned if n_returned else 0.0
    recall = n_correct / n_truth
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if (precision + recall) > 0
        else 0.0
    )
    return LinkageMetrics(n_correct, n_truth, n_returned, precision, recall, f1)


class AccountLinker(BaseEstimator):
    """Estimator facade over the linkage pipeline.

    Parameters mirror LinkConfig. ``fit`` takes the two datasets and runs
    the pipeline; ``predict`` returns the matched (u1, u2, score) triples;
    ``score`` computes F1 against a GroundTruth.
    """

    def __init__(
        self,
        grid_size: int = 15000,
        periods: int = 2880,
        spatial_bandwidth: float = 60.0,
        temporal_bandwidth: float = 1.0,
        alpha: float = 0.5,
        entropy_order: float = 0.4,
        top_k: int = 1,
        score_threshold: float = 2e-5,
        keep_probability: float = 5e-5,
        cutoff: float | None = None,
        center_score: float = 30.0,
        filter_outliers: bool = True,
        weight_features: bool = True,
        prune_candidates: bool = True,
        n_jobs: int = 1,
    ):
        self.grid_size = grid_size
        self.periods = periods
        self.spatial_bandwidth = spatial_bandwidth
        self.temporal_bandwidth = temporal_bandwidth
        self.alpha = alpha
        self.entropy_order = entropy_order
        self.top_k = top_k
        self.score_threshold = score_threshold
        self.keep_probability = keep_probability
        self.cutoff = cutoff
        self.center_score = center_score
        self.filter_outliers = filter_outliers
        self.weight_features = weight_features
        self.prune_candidates = prune_candidates
        self.n_jobs = n_jobs

    def _config(self) -> LinkConfig:
        return LinkConfig(
            grid_size=self.grid_size,
            periods=self.periods,
            spatial_bandwidth=self.spatial_bandwidth,
            temporal_bandwidth=self.temporal_bandwidth,
            alpha=self.alpha,
            entropy_order=self.entropy_order,
            top_k=self.top_k,
            score_threshold=self.score_threshold,
            keep_probability=self.keep_probability,
            cutoff=self.cutoff,
            center_score=self.center_score,
            filter_outliers=self.filter_outliers,
            weight_features=self.weight_features,
            prune_candidates=self.prune_candidates,
            n_jobs=self.n_jobs,
        )

    def fit(self, X: Dataset, y: Dataset | None = None):
        """Fit on the two platform datasets (second one passed as ``y``)."""
        if y is None:
            raise ValueError("AccountLinker.fit needs both platform datasets")
        self.run_ = link_accounts(X, y, self._config())
        self.matches_ = self.run_.matches
        return self

    def predict(self, X=None) -> tuple[tuple[str, str, float], ...]:
        if not hasattr(self, "run_"):
            raise ValueError("AccountLinker is not fitted yet")
        return self.matches_

    def score(self, X: GroundTruth, y=None) -> float:
        """F1 of the fitted matches against a ground truth."""
        return evaluate_pairs(self.predict(), X).f1
