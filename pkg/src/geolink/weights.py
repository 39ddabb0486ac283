"""Entropy-based discriminativeness weights for grid cells and time periods.

Popular cells and periods are visited by many accounts and therefore carry
little identity signal; private ones carry a lot. Each cell/period gets a
generalized (Renyi) entropy over the visit proportions of every account that
touches it, pooled across both platforms, and the weight exp(-entropy) is
normalized by the family maximum into (0, 1].
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .indexing import GridRepresentation, TimeRepresentation
from .model import Dataset

__all__ = [
    "WeightTable",
    "renyi_entropy",
    "build_weight_table",
    "weight_cache_key",
    "save_weight_table",
    "load_weight_table",
]


@dataclass(frozen=True)
class WeightTable:
    """Normalized weights in (0, 1] for every visited cell and period."""

    grid_weights: dict[int, float]
    period_weights: dict[int, float]
    q: float


def renyi_entropy(proportions: Sequence[float], q: float) -> float:
    """Generalized entropy (1/(1-q)) * log(sum p_i^q) with natural log.

    The proportions are visit shares of the accounts touching one cell or
    period; they need not sum to 1. ``q = 1`` dispatches to the Shannon
    entropy of the renormalized proportions (the two families meet there).
    """
    p = np.asarray(list(proportions), dtype=np.float64)
    if p.size == 0:
        raise ValueError("proportions must be non-empty")
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("proportions must lie in (0, 1]")
    if q <= 0:
        raise ValueError(f"entropy order q must be > 0, got {q}")
    if q == 1.0:
        norm = p / p.sum()
        return float(-(norm * np.log(norm)).sum())
    return float(math.log((p**q).sum()) / (1.0 - q))


def _raw_weight(power_sum: float, q: float) -> float:
    # exp(-H) collapses to (sum p^q)^(1/(q-1)); q = 1 uses the Shannon limit.
    return power_sum ** (1.0 / (q - 1.0))


def build_weight_table(
    grid_reps: Iterable[GridRepresentation],
    time_reps: Iterable[TimeRepresentation],
    q: float,
) -> WeightTable:
    """Weights from all accounts of both platforms (computed before any
    outlier pruning, then frozen).

    For q < 1 every additional visiting account strictly lowers a raw
    weight, which is what penalizes popular, non-discriminative features.
    """
    if q <= 0:
        raise ValueError(f"entropy order q must be > 0, got {q}")
    grid_reps = list(grid_reps)
    time_reps = list(time_reps)
    if not grid_reps or not time_reps:
        raise ValueError("weight table requires at least one account")

    if q == 1.0:
        grid_props: dict[int, list[float]] = {}
        for rep in grid_reps:
            for c, p in zip(rep.cell_ids, rep.cell_probs):
                grid_props.setdefault(int(c), []).append(float(p))
        period_props: dict[int, list[float]] = {}
        for rep in time_reps:
            for t, p in zip(rep.period_ids, rep.period_probs):
                period_props.setdefault(int(t), []).append(float(p))
        gw = {c: math.exp(-renyi_entropy(ps, q)) for c, ps in grid_props.items()}
        tw = {t: math.exp(-renyi_entropy(ps, q)) for t, ps in period_props.items()}
    else:
        grid_sums: dict[int, float] = {}
        for rep in grid_reps:
            powered = rep.cell_probs**q
            for c, s in zip(rep.cell_ids, powered):
                key = int(c)
                grid_sums[key] = grid_sums.get(key, 0.0) + float(s)
        period_sums: dict[int, float] = {}
        for rep in time_reps:
            powered = rep.period_probs**q
            for t, s in zip(rep.period_ids, powered):
                key = int(t)
                period_sums[key] = period_sums.get(key, 0.0) + float(s)
        gw = {c: _raw_weight(s, q) for c, s in grid_sums.items()}
        tw = {t: _raw_weight(s, q) for t, s in period_sums.items()}

    g_max = max(gw.values())
    t_max = max(tw.values())
    return WeightTable(
        {c: w / g_max for c, w in gw.items()},
        {t: w / t_max for t, w in tw.items()},
        q,
    )


def weight_cache_key(ds1: Dataset, ds2: Dataset, d: int, periods: int, q: float) -> str:
    """Stable digest of (dataset contents, d, M, q) for cache lookups."""
    h = hashlib.sha256()
    for ds in (ds1, ds2):
        lines = sorted(
            f"{r.account_id},{r.lat!r},{r.lng!r},{r.timestamp}"
            for r in ds.iter_records()
        )
        for line in lines:
            h.update(line.encode("utf-8"))
        h.update(b"|")
    h.update(f"d={d};M={periods};q={q!r}".encode("utf-8"))
    return h.hexdigest()


def save_weight_table(table: WeightTable, path: str | Path, key: str) -> None:
    payload = {
        "key": key,
        "q": table.q,
        "grid_weights": {str(c): w for c, w in table.grid_weights.items()},
        "period_weights": {str(t): w for t, w in table.period_weights.items()},
    }
    Path(path).write_text(json.dumps(payload))


def load_weight_table(path: str | Path, key: str) -> WeightTable | None:
    """Load a cached table; returns None when absent or keyed differently."""
    p = Path(path)
    if not p.exists():
        return None
    payload = json.loads(p.read_text())
    if payload.get("key") != key:
        return None
    return WeightTable(
        {int(c): float(w) for c, w in payload["grid_weights"].items()},
        {int(t): float(w) for t, w in payload["period_weights"].items()},
        float(payload["q"]),
    )
