"""Tiered probing report: per (dataset, tier, class) best-classifier table."""

from __future__ import annotations

import logging

from ..corpus import SIZE_TIERS, EmbeddingCorpus, subset_by_tier, tier_target_n
from ..errors import FoldInfeasibleError, TierUnsatisfiableError, ValidationError
from .folds import make_folds
from .search import DEFAULT_GRIDS, KIND_ORDER, grid_search_cv, select_best

log = logging.getLogger(__name__)


def probe_report(
    corpora: dict[str, EmbeddingCorpus],
    tiers: list[str],
    classes: list[str],
    seed: int,
    k: int = 15,
    families: tuple[str, ...] = KIND_ORDER,
    grids: dict[str, list[dict]] | None = None,
) -> dict:
    """Run the full probing protocol for one FM's pooled corpora.

    Returns a JSON-ready dict: cells[dataset][tier][class] holds the best
    classifier (argmax median F1 across families), the max IQR across
    family winners, and per-family winning grid points. Tiers the corpus
    cannot populate (or that leave too few positives to stratify) become
    status="unsatisfiable" cells, mirroring missing table entries.
    """
    grids = grids or DEFAULT_GRIDS
    for tier in tiers:
        if tier not in SIZE_TIERS:
            raise ValidationError(f"unknown size tier {tier!r}")
    fm_tags = {c.manifest.fm_tag for c in corpora.values()}
    if len(fm_tags) != 1:
        raise ValidationError(f"probe_report expects a single FM, got {sorted(fm_tags)}")

    cells: dict = {}
    for tag, corpus in corpora.items():
        cells[tag] = {}
        for tier_name in tiers:
            tier = SIZE_TIERS[tier_name]
            cells[tag][tier_name] = {}
            for class_name in classes:
                cells[tag][tier_name][class_name] = _probe_cell(
                    corpus, tier, class_name, seed, k, families, grids
                )
    return {
        "fm_tag": next(iter(fm_tags)),
        "datasets": sorted(corpora),
        "tiers": list(tiers),
        "classes": list(classes),
        "k": k,
        "seed": seed,
        "cells": cells,
    }


def _probe_cell(corpus, tier, class_name, seed, k, families, grids) -> dict:
    try:
        target = tier_target_n(tier, len(corpus))
        subset = subset_by_tier(corpus, tier, target, class_name, seed)
        folds = make_folds(subset.label_vector(class_name), k, seed)
    except (TierUnsatisfiableError, FoldInfeasibleError) as exc:
        log.info("cell (%s, %s, %s) unsatisfiable: %s",
                 corpus.manifest.dataset_tag, tier.name, class_name, exc)
        return {"status": "unsatisfiable", "reason": str(exc)}
    per_family = {
        kind: grid_search_cv(subset, class_name, kind, grids[kind], folds, seed)
        for kind in families
    }
    best = select_best(list(per_family.values()))
    return {
        "status": "ok",
        "n": len(subset),
        "best_kind": best.spec.kind,
        "median_f1": best.median_f1,
        "iqr": best.iqr,
        "per_fold": list(best.per_fold_f1),
        "best": best.to_dict(),
        "max_iqr": max(r.iqr for r in per_family.values()),
        "per_family": {kind: r.to_dict() for kind, r in per_family.items()},
    }


def render_probe_table(report: dict) -> str:
    """Markdown table: one row per (dataset, tier), one column pair per class."""
    classes = report["classes"]
    lines = []
    header = ["dataset", "tier", "n"]
    for c in classes:
        header += [f"{c} F1", f"{c} max IQR"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for tag in report["datasets"]:
        for tier in report["tiers"]:
            row_cells = report["cells"][tag][tier]
            n = next(
                (str(row_cells[c]["n"]) for c in classes if row_cells[c]["status"] == "ok"),
                "--",
            )
            row = [tag, tier, n]
            for c in classes:
                cell = row_cells[c]
                if cell["status"] != "ok":
                    row += ["--", "--"]
                else:
                    row += [
                        f"{cell['best']['median_f1']:.3f} ({cell['best']['kind']})",
                        f"{cell['max_iqr']:.3f}",
                    ]
            lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
