"""Machine-readable report documents and their CSV tables."""

from __future__ import annotations

from . import __version__
from .metrics import ObjectReport, PixelMetrics
from .optimize import SearchResult

TABLE_COLUMNS = ("name", "hit_rate", "oversegmentation", "undersegmentation", "eccentricity", "shift")
FIELD_COLUMNS = ("reference_id", "area", "detected", "s_over", "s_under", "eccentricity", "shift")
CANDIDATE_COLUMNS = ("t_extent", "t_boundary", "t_distance", "s_over", "s_under", "hit_rate", "n_fields", "pareto")


def evaluation_report(objects: ObjectReport, pixels: PixelMetrics | None = None, inputs: dict | None = None) -> dict:
    doc = {
        "kind": "evaluation",
        "version": __version__,
        "inputs": inputs or {},
        "object": objects.aggregates(),
        "fields": objects.fields,
        "pairs": objects.pairs,
        "pixel": None,
    }
    if pixels is not None:
        cm = pixels.confusion
        doc["pixel"] = {
            "oa": pixels.oa,
            "mcc": pixels.mcc,
            "mcc_defined": pixels.mcc_defined,
            "f_pos": pixels.f_pos,
            "f_neg": pixels.f_neg,
            "confusion": {"tp": cm.tp, "tn": cm.tn, "fp": cm.fp, "fn": cm.fn},
        }
    return doc


def optimization_report(result: SearchResult, inputs: dict | None = None) -> dict:
    on_front = {id(c) for c in result.front}
    return {
        "kind": "optimization",
        "version": __version__,
        "inputs": inputs or {},
        "method": result.method,
        "params": result.params,
        "extent_mcc": result.extent_mcc,
        "best": result.best.as_dict(),
        "thresholds": result.best.thresholds.as_dict(),
        "front": [c.as_dict() for c in result.front],
        "candidates": [{**c.as_dict(), "pareto": id(c) in on_front} for c in result.candidates],
    }


def table_row(name: str, doc: dict) -> dict:
    return {"name": name, **{k: doc["object"][k] for k in TABLE_COLUMNS[1:]}}
