"""Pixel and object accuracy metrics plus the paired Wilcoxon signed-rank test.

Object rates are reported in accuracy orientation, 1 meaning perfect:

* over-segmentation accuracy  ``|T ∩ E| / |T|``  (raw rate is ``1 - that``)
* under-segmentation accuracy ``|T ∩ E| / |E|``
* eccentricity factor         ``1 - |ecc(T) - ecc(E)|``

For every reference field the rates of its overlapping extracted fields are
averaged with intersection-area weights. Scene aggregates weight reference
fields by their area; a reference field with no overlap contributes 0 to
both rates, so missed fields are penalised. Shift and eccentricity are
aggregated over matched fields only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .raster import all_region_stats

__all__ = [
    "ConfusionMatrix",
    "ObjectReport",
    "PixelMetrics",
    "WilcoxonResult",
    "confusion_matrix",
    "mcc",
    "object_metrics",
    "pixel_metrics",
    "segmentation_rates",
    "wilcoxon_signed_rank",
]

HIT_OVERLAP = 0.5


# --- pixel metrics --------------------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion_matrix(pred, ref, valid=None) -> ConfusionMatrix:
    pred = np.asarray(pred).astype(bool)
    ref = np.asarray(ref).astype(bool)
    if pred.shape != ref.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {ref.shape}")
    if valid is not None:
        valid = np.asarray(valid, dtype=bool)
        pred, ref = pred[valid], ref[valid]
    tp = int(np.count_nonzero(pred & ref))
    tn = int(np.count_nonzero(~pred & ~ref))
    fp = int(np.count_nonzero(pred & ~ref))
    fn = int(np.count_nonzero(~pred & ref))
    return ConfusionMatrix(tp, tn, fp, fn)


def mcc(cm: ConfusionMatrix) -> tuple[float, bool]:
    """Matthews correlation and whether it was defined (0 if not)."""
    tp, tn, fp, fn = (float(v) for v in (cm.tp, cm.tn, cm.fp, cm.fn))
    denom = (tp + fn) * (tp + fp) * (tn + fp) * (tn + fn)
    if denom == 0.0:
        return 0.0, False
    return (tp * tn - fp * fn) / math.sqrt(denom), True


def _f_score(hits: int, false_pos: int, false_neg: int) -> float:
    denom = 2 * hits + false_pos + false_neg
    return 2 * hits / denom if denom else 0.0


@dataclass(frozen=True)
class PixelMetrics:
    oa: float
    mcc: float
    f_pos: float
    f_neg: float
    mcc_defined: bool
    confusion: ConfusionMatrix

    def as_dict(self) -> dict:
        return asdict(self)


def pixel_metrics(pred, ref, valid=None) -> PixelMetrics:
    """Overall accuracy, MCC and per-class F-scores of a binary map."""
    cm = confusion_matrix(pred, ref, valid)
    if cm.total == 0:
        raise ValueError("no valid pixels")
    value, defined = mcc(cm)
    return PixelMetrics(
        oa=(cm.tp + cm.tn) / cm.total,
        mcc=value,
        f_pos=_f_score(cm.tp, cm.fp, cm.fn),
        f_neg=_f_score(cm.tn, cm.fn, cm.fp),
        mcc_defined=defined,
        confusion=cm,
    )


# --- object metrics -------------------------------------------------------


def _overlap_table(extracted: np.ndarray, reference: np.ndarray):
    """Pairwise intersection areas as (ref ids, ext ids, areas) plus field areas."""
    n_ref = int(reference.max(initial=0))
    n_ext = int(extracted.max(initial=0))
    ref_area = np.bincount(reference.ravel(), minlength=n_ref + 1)
    ext_area = np.bincount(extracted.ravel(), minlength=n_ext + 1)
    both = (reference > 0) & (extracted > 0)
    key = reference[both].astype(np.int64) * (n_ext + 1) + extracted[both]
    counts = np.bincount(key, minlength=(n_ref + 1) * (n_ext + 1))
    nz = np.flatnonzero(counts)
    return nz // (n_ext + 1), nz % (n_ext + 1), counts[nz], ref_area, ext_area


def _check_pair(extracted, reference):
    extracted = np.asarray(extracted)
    reference = np.asarray(reference)
    if extracted.shape != reference.shape:
        raise ValueError(f"label maps differ in shape: {extracted.shape} vs {reference.shape}")
    if not (reference > 0).any():
        raise ValueError("reference label map is empty")
    return extracted, reference


def _per_reference_rates(ri, ei, inter, ref_area, ext_area):
    n = ref_area.size
    inter_f = inter.astype(np.float64)
    w_sum = np.bincount(ri, weights=inter_f, minlength=n)
    over_num = np.bincount(ri, weights=inter_f * inter_f / ref_area[ri], minlength=n)
    under_num = np.bincount(ri, weights=inter_f * inter_f / ext_area[ei], minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        over = np.where(w_sum > 0, over_num / w_sum, 0.0)
        under = np.where(w_sum > 0, under_num / w_sum, 0.0)
    return over, under, w_sum


def segmentation_rates(extracted, reference) -> tuple[float, float, float]:
    """Fast scene-level ``(s_over, s_under, hit_rate)`` for threshold search."""
    extracted, reference = _check_pair(extracted, reference)
    ri, ei, inter, ref_area, ext_area = _overlap_table(extracted, reference)
    over, under, _ = _per_reference_rates(ri, ei, inter, ref_area, ext_area)
    ids = np.flatnonzero(ref_area[1:]) + 1
    weights = ref_area[ids].astype(np.float64)
    best = np.zeros(ref_area.size)
    np.maximum.at(best, ri, inter / ref_area[ri])
    return (
        float(np.sum(weights * over[ids]) / weights.sum()),
        float(np.sum(weights * under[ids]) / weights.sum()),
        float(np.mean(best[ids] >= HIT_OVERLAP)),
    )


@dataclass
class ObjectReport:
    """Per-pair and per-reference object metrics with scene aggregates."""

    pairs: list[dict] = field(default_factory=list)
    fields: list[dict] = field(default_factory=list)
    s_over: float = 0.0
    s_under: float = 0.0
    eccentricity: float = 0.0
    shift: float = 0.0
    hit_rate: float = 0.0
    n_reference: int = 0
    n_extracted: int = 0

    def aggregates(self) -> dict:
        return {
            "hit_rate": self.hit_rate,
            "oversegmentation": self.s_over,
            "undersegmentation": self.s_under,
            "eccentricity": self.eccentricity,
            "shift": self.shift,
            "n_reference": self.n_reference,
            "n_extracted": self.n_extracted,
        }


def object_metrics(extracted, reference) -> ObjectReport:
    """Object-based comparison of an extracted and a reference label map."""
    extracted, reference = _check_pair(extracted, reference)
    ri, ei, inter, ref_area, ext_area = _overlap_table(extracted, reference)
    over, under, w_sum = _per_reference_rates(ri, ei, inter, ref_area, ext_area)
    ref_stats = all_region_stats(reference)
    ext_stats = all_region_stats(extracted)

    report = ObjectReport(n_reference=len(ref_stats), n_extracted=len(ext_stats))
    ecc_num = np.zeros(ref_area.size)
    shift_num = np.zeros(ref_area.size)
    best = np.zeros(ref_area.size)
    for t_id, e_id, area in zip(ri.tolist(), ei.tolist(), inter.tolist()):
        ts, es = ref_stats[t_id], ext_stats[e_id]
        ecc_factor = 1.0 - abs(ts.eccentricity - es.eccentricity)
        shift = math.hypot(ts.centroid[0] - es.centroid[0], ts.centroid[1] - es.centroid[1])
        ecc_num[t_id] += area * ecc_factor
        shift_num[t_id] += area * shift
        best[t_id] = max(best[t_id], area / ts.area)
        report.pairs.append(
            {
                "reference_id": t_id,
                "extracted_id": e_id,
                "intersection": int(area),
                "s_over": area / ts.area,
                "s_under": area / es.area,
                "eccentricity": ecc_factor,
                "shift": shift,
            }
        )

    areas, matched_areas = [], []
    for t_id in sorted(ref_stats):
        matched = w_sum[t_id] > 0
        row = {
            "reference_id": t_id,
            "area": ref_stats[t_id].area,
            "detected": bool(best[t_id] >= HIT_OVERLAP),
            "s_over": float(over[t_id]),
            "s_under": float(under[t_id]),
            "eccentricity": float(ecc_num[t_id] / w_sum[t_id]) if matched else None,
            "shift": float(shift_num[t_id] / w_sum[t_id]) if matched else None,
        }
        report.fields.append(row)
        areas.append(row["area"])
        if matched:
            matched_areas.append(row["area"])

    areas = np.asarray(areas, dtype=np.float64)
    report.s_over = float(np.sum(areas * [f["s_over"] for f in report.fields]) / areas.sum())
    report.s_under = float(np.sum(areas * [f["s_under"] for f in report.fields]) / areas.sum())
    report.hit_rate = float(np.mean([f["detected"] for f in report.fields]))
    matched_rows = [f for f in report.fields if f["shift"] is not None]
    if matched_rows:
        m_areas = np.asarray(matched_areas, dtype=np.float64)
        report.eccentricity = float(np.sum(m_areas * [f["eccentricity"] for f in matched_rows]) / m_areas.sum())
        report.shift = float(np.sum(m_areas * [f["shift"] for f in matched_rows]) / m_areas.sum())
    else:
        report.eccentricity = 0.0
        report.shift = float("nan")
    return report


# --- Wilcoxon signed-rank -------------------------------------------------

EXACT_MAX_N = 25


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # min(W+, W-)
    pvalue: float
    w_plus: float
    w_minus: float
    n: int
    exact: bool
    alternative: str


def _exact_null_pmf(doubled_ranks: np.ndarray) -> np.ndarray:
    """Null probability of every doubled W+ value under random signs."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks.astype(np.int64):
        counts[r:] = counts[r:] + counts[: total + 1 - r].copy()
    return counts / counts.sum()


def wilcoxon_signed_rank(a, b, alternative: str = "two-sided") -> WilcoxonResult:
    """Paired Wilcoxon signed-rank test on ``a - b``.

    Zero differences are dropped. Ties get mid-ranks. With at most 25
    non-zero differences the p-value comes from the exact null distribution
    of the signed-rank sum; beyond that a tie-corrected normal approximation
    is used. ``alternative='greater'`` tests ``a`` shifted above ``b``.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    d = a - b
    d = d[d != 0]
    if d.size == 0:
        raise ValueError("degenerate: all paired differences are zero")
    n = d.size
    if n < 6:
        raise ValueError(f"need at least 6 non-zero differences, got {n}")
    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)

    if n <= EXACT_MAX_N:
        pmf = _exact_null_pmf(np.rint(2 * ranks))
        cdf = np.cumsum(pmf)
        sf = np.cumsum(pmf[::-1])[::-1]  # P(2W+ >= k)
        k_plus = int(round(2 * w_plus))
        k_stat = int(round(2 * stat))
        if alternative == "two-sided":
            p = min(1.0, 2.0 * cdf[k_stat])
        elif alternative == "greater":
            p = float(sf[k_plus])
        else:
            p = float(cdf[k_plus])
        exact = True
    else:
        mean = n * (n + 1) / 4.0
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
        sd = math.sqrt(var)
        if alternative == "two-sided":
            p = min(1.0, 2.0 * special.ndtr((stat - mean) / sd))
        elif alternative == "greater":
            p = float(special.ndtr(-(w_plus - mean) / sd))
        else:
            p = float(special.ndtr((w_plus - mean) / sd))
        exact = False
    return WilcoxonResult(stat, float(p), w_plus, w_minus, n, exact, alternative)


def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    ranks = np.empty(x.size, dtype=np.float64)
    start = 0
    while start < x.size:
        stop = start
        while stop + 1 < x.size and sorted_x[stop + 1] == sorted_x[start]:
            stop += 1
        ranks[order[start : stop + 1]] = 0.5 * (start + stop) + 1.0
        start = stop + 1
    return ranks
