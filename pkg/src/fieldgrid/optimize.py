"""Threshold tuning: MCC sweep for the extent mask, Pareto search for the
boundary and distance thresholds."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._flood import surface_rank
from .extract import MaskTriple, ThresholdSet, extract_cutoff, extract_watershed, watershed_surface
from .metrics import segmentation_rates

__all__ = [
    "Candidate",
    "SearchResult",
    "dominates",
    "optimize_extent_threshold",
    "optimize_instance_thresholds",
    "pareto_front",
    "search_thresholds",
    "select_threshold",
    "threshold_grid",
]

logger = logging.getLogger(__name__)

GRID_LOW, GRID_HIGH, GRID_STEP = 0.01, 0.99, 0.01
DEFAULT_BUDGET = 250


def threshold_grid(step: float = GRID_STEP, low: float = GRID_LOW, high: float = GRID_HIGH) -> np.ndarray:
    n = int(round((high - low) / step)) + 1
    return np.round(low + step * np.arange(n), 10)


def optimize_extent_threshold(prob, ref, step: float = GRID_STEP) -> tuple[float, float]:
    """Grid threshold maximising MCC of ``prob >= t`` against ``ref``.

    Ties go to the lowest threshold.
    """
    prob = np.asarray(prob, dtype=np.float64)
    ref = np.asarray(ref).astype(bool)
    if prob.shape != ref.shape:
        raise ValueError(f"shape mismatch {prob.shape} vs {ref.shape}")
    n_pos = int(ref.sum())
    n_neg = ref.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("MCC undefined: reference has a single class")
    grid = threshold_grid(step)
    pos = np.sort(prob[ref])
    neg = np.sort(prob[~ref])
    tp = (pos.size - np.searchsorted(pos, grid, side="left")).astype(np.float64)
    fp = (neg.size - np.searchsorted(neg, grid, side="left")).astype(np.float64)
    fn = n_pos - tp
    tn = n_neg - fp
    denom = np.sqrt((tp + fn) * (tp + fp) * (tn + fp) * (tn + fn))
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(denom > 0, (tp * tn - fp * fn) / denom, 0.0)
    best = int(np.argmax(scores))
    return float(grid[best]), float(scores[best])


@dataclass(frozen=True)
class Candidate:
    thresholds: ThresholdSet
    s_over: float
    s_under: float
    hit_rate: float = float("nan")
    n_fields: int = 0

    def as_dict(self) -> dict:
        return {
            **self.thresholds.as_dict(),
            "s_over": self.s_over,
            "s_under": self.s_under,
            "hit_rate": self.hit_rate,
            "n_fields": self.n_fields,
        }


def dominates(a: Candidate, b: Candidate) -> bool:
    """``a`` is at least as good in both rates and strictly better in one."""
    return (
        a.s_over >= b.s_over
        and a.s_under >= b.s_under
        and (a.s_over > b.s_over or a.s_under > b.s_under)
    )


def pareto_front(cands: list[Candidate]) -> list[Candidate]:
    """Non-dominated candidates (both rates maximised), input order kept."""
    if not cands:
        return []
    pts = np.array([(c.s_over, c.s_under) for c in cands], dtype=np.float64)
    # sweep by s_over descending; a point survives if no point with s_over >= its
    # own has s_under >= its own with one of the two strict
    order = np.lexsort((-pts[:, 1], -pts[:, 0]))
    keep = np.zeros(len(cands), dtype=bool)
    best_under = -np.inf
    k = 0
    while k < order.size:
        # group of identical s_over values
        j = k
        x = pts[order[k], 0]
        while j < order.size and pts[order[j], 0] == x:
            j += 1
        group = order[k:j]
        top = pts[group[0], 1]  # largest s_under in the group
        if top > best_under:
            keep[group[pts[group, 1] == top]] = True
        best_under = max(best_under, top)
        k = j
    return [c for c, kept in zip(cands, keep) if kept]


def select_threshold(front: list[Candidate]) -> Candidate:
    """Candidate closest to the 1:1 line; ties favour the larger rate sum,
    then the earlier candidate."""
    if not front:
        raise ValueError("empty Pareto front")
    best = front[0]
    for c in front[1:]:
        gap, best_gap = abs(c.s_over - c.s_under), abs(best.s_over - best.s_under)
        if gap < best_gap or (gap == best_gap and c.s_over + c.s_under > best.s_over + best.s_under):
            best = c
    return best


@dataclass
class SearchResult:
    method: str
    best: Candidate
    candidates: list[Candidate]
    front: list[Candidate]
    extent_mcc: float | None = None
    params: dict = field(default_factory=dict)


def _candidate_thresholds(method: str, t_extent: float, budget: int, rng_seed: int, step: float) -> list[ThresholdSet]:
    if method == "cutoff":
        return [ThresholdSet(t_extent, tb, 0.0) for tb in threshold_grid(step)]
    if method == "watershed":
        rng = np.random.default_rng(rng_seed)
        draws = rng.uniform(GRID_LOW, GRID_HIGH, size=(budget, 2))
        return [ThresholdSet(t_extent, float(tb), float(td)) for tb, td in draws]
    raise ValueError(f"unknown extraction method {method!r}")


def search_thresholds(
    masks: MaskTriple,
    ref: np.ndarray,
    method: str = "watershed",
    budget: int = DEFAULT_BUDGET,
    rng_seed: int = 0,
    t_extent: float | None = None,
    step: float = GRID_STEP,
    min_size: int = 0,
) -> SearchResult:
    """Evaluate candidate thresholds and pick the balanced Pareto optimum.

    The extent threshold is fixed first (MCC sweep against ``ref > 0``
    unless given). Cutoff then grid-searches the boundary threshold;
    watershed draws ``budget`` random (boundary, distance) pairs uniformly
    in [0.01, 0.99].
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    ref = np.asarray(ref)
    extent_mcc = None
    if t_extent is None:
        t_extent, extent_mcc = optimize_extent_threshold(masks.extent, ref > 0, step)
    thresholds = _candidate_thresholds(method, t_extent, budget, rng_seed, step)

    rank = surface_rank(watershed_surface(masks)) if method == "watershed" else None
    cands: list[Candidate] = []
    for t in thresholds:
        if method == "watershed":
            labels = extract_watershed(masks, t, min_size, rank=rank)
        else:
            labels = extract_cutoff(masks, t, min_size)
        n = int(labels.max(initial=0))
        if n == 0:
            continue
        s_over, s_under, hit = segmentation_rates(labels, ref)
        cands.append(Candidate(t, s_over, s_under, hit, n))
    if not cands:
        raise ValueError("no viable candidate: every threshold set produced zero fields")
    front = pareto_front(cands)
    best = select_threshold(front)
    logger.info(
        "%s search: %d/%d viable, front %d, best %s (over %.4f, under %.4f)",
        method, len(cands), len(thresholds), len(front), best.thresholds, best.s_over, best.s_under,
    )
    return SearchResult(
        method=method,
        best=best,
        candidates=cands,
        front=front,
        extent_mcc=extent_mcc,
        params={"budget": budget, "rng_seed": rng_seed, "step": step, "min_size": min_size},
    )


def optimize_instance_thresholds(
    masks: MaskTriple,
    ref: np.ndarray,
    method: str = "watershed",
    budget: int = DEFAULT_BUDGET,
    rng_seed: int = 0,
    **kwargs,
) -> ThresholdSet:
    return search_thresholds(masks, ref, method, budget, rng_seed, **kwargs).best.thresholds
