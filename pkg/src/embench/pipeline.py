"""End-to-end benchmark orchestration and the run-report renderer.

Stage order per FM: pool → probe → attribute → geometry → umap. Every
random draw derives from the master seed through labeled keys, so two
runs with the same config produce byte-identical JSON reports. Stage
outputs are individually addressable files written as soon as a stage
finishes, so a failed run retains everything before the failure.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .attribution import (
    FeatureSet,
    overlap_rates,
    shap_kernel,
    shap_linear,
    shap_tree,
    stratified_background,
    top_k_features,
)
from .corpus import (
    POOLING_STATES,
    SIZE_TIERS,
    EmbeddingCorpus,
    balanced_subsample,
    load_corpus,
    pool_corpus,
    subset_by_tier,
    tier_target_n,
    write_corpus,
)
from .errors import StageError, ValidationError
from .geometry import geometry_report
from .probe import (
    KIND_ORDER,
    ClassifierSpec,
    ProbeResult,
    probe_report,
    render_probe_table,
    select_overall_best,
    train,
)
from .seeding import derive_key
from .seeding import rng_for
from .umap import DEFAULT_SWEEP, UmapParams, embed, emit_bars, emit_scatter

STAGES = ("pool", "probe", "attribute", "geometry", "umap")
_TREE_KINDS = {"decision_tree", "random_forest", "gradient_boosted_trees"}

_GEOMETRY_COLUMNS = (
    ("label", "knn10", "↑"),
    ("label", "centroid_sep", "↑"),
    ("label", "ari", "↑"),
    ("dataset", "knn10", "↓"),
    ("dataset", "centroid_sep", "↓"),
    ("dataset", "ari", "↓"),
)


@dataclass(frozen=True)
class RunConfig:
    """Full description of one benchmark run.

    `corpora` maps fm_tag → dataset_tag → corpus directory. Cross-dataset
    stages (overlap, geometry's dataset grouping) need ≥ 2 datasets per FM;
    attribution always trains on the S-tier split, so "S" must be among
    the requested tiers.
    """

    corpora: Mapping[str, Mapping[str, str]]
    classes: tuple[str, ...]
    out_dir: str
    tiers: tuple[str, ...] = ("XS", "S", "M", "L")
    pooling: str = "lst"
    seed: int = 42
    families: tuple[str, ...] = KIND_ORDER
    sweep: tuple[tuple[int, float], ...] = DEFAULT_SWEEP
    k_folds: int = 15
    top_k: int = 50
    background_size: int = 100
    attribution_max_rows: int = 256
    kernel_coalitions: int = 256
    subset_n: int = 1000

    def __post_init__(self) -> None:
        if not self.corpora:
            raise ValidationError("config needs at least one FM")
        for fm, datasets in self.corpora.items():
            if not datasets:
                raise ValidationError(f"FM {fm!r} lists no datasets")
        if not self.classes:
            raise ValidationError("config needs at least one class")
        if self.pooling not in POOLING_STATES or self.pooling == "none":
            raise ValidationError(f"pooling must be 'lst' or 'max', got {self.pooling!r}")
        for tier in self.tiers:
            if tier not in SIZE_TIERS:
                raise ValidationError(f"unknown tier {tier!r}")
        if "S" not in self.tiers:
            raise ValidationError("attribution trains on the S tier; include 'S' in tiers")
        unknown = set(self.families) - set(KIND_ORDER)
        if unknown:
            raise ValidationError(f"unknown classifier families {sorted(unknown)}")
        for pair in self.sweep:
            if len(pair) != 2 or pair[0] < 2 or pair[1] < 0:
                raise ValidationError(f"bad sweep entry {pair!r}")
        for name in ("k_folds", "top_k", "background_size",
                     "attribution_max_rows", "kernel_coalitions", "subset_n"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if not self.out_dir:
            raise ValidationError("config needs an output directory")

    @classmethod
    def from_dict(cls, raw: Mapping, out_dir: str | None = None,
                  seed: int | None = None) -> "RunConfig":
        known = {
            "corpora", "classes", "out_dir", "tiers", "pooling", "seed",
            "families", "sweep", "k_folds", "top_k", "background_size",
            "attribution_max_rows", "kernel_coalitions", "subset_n",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")
        data = dict(raw)
        if out_dir is not None:
            data["out_dir"] = out_dir
        if seed is not None:
            data["seed"] = seed
        if "out_dir" not in data:
            raise ValidationError("config needs an output directory (out_dir or --out)")
        for key in ("classes", "tiers", "families"):
            if key in data:
                data[key] = tuple(data[key])
        if "sweep" in data:
            data["sweep"] = tuple((int(nn), float(md)) for nn, md in data["sweep"])
        if "corpora" in data:
            data["corpora"] = {
                str(fm): {str(tag): str(path) for tag, path in datasets.items()}
                for fm, datasets in data["corpora"].items()
            }
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValidationError(f"bad config: {exc}") from exc

    def to_manifest_dict(self) -> dict:
        """Config echo for reports; out_dir excluded so relocated runs match."""
        return {
            "corpora": {fm: dict(d) for fm, d in sorted(self.corpora.items())},
            "classes": list(self.classes),
            "tiers": list(self.tiers),
            "pooling": self.pooling,
            "seed": self.seed,
            "families": list(self.families),
            "sweep": [[nn, md] for nn, md in self.sweep],
            "k_folds": self.k_folds,
            "top_k": self.top_k,
            "background_size": self.background_size,
            "attribution_max_rows": self.attribution_max_rows,
            "kernel_coalitions": self.kernel_coalitions,
            "subset_n": self.subset_n,
        }


# ---------------------------------------------------------------------------
# serialization helpers


def json_safe(obj):
    """Recursively convert to JSON-serializable values; ±inf/nan to strings."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [json_safe(v) for v in obj.tolist()]
    return obj


def write_json(path: str, obj) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(json_safe(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _seed_record(seed_value: int, *labels) -> dict:
    return {"labels": [str(part) for part in labels], "value": seed_value}


# ---------------------------------------------------------------------------
# stages


def _stage_pool(config: RunConfig, fm: str) -> dict[str, EmbeddingCorpus]:
    pooled = {}
    for tag in sorted(config.corpora[fm]):
        corpus = load_corpus(config.corpora[fm][tag])
        if corpus.manifest.fm_tag != fm:
            raise ValidationError(
                f"corpus at {config.corpora[fm][tag]} has fm_tag "
                f"{corpus.manifest.fm_tag!r}, config says {fm!r}"
            )
        if corpus.manifest.dataset_tag != tag:
            raise ValidationError(
                f"corpus at {config.corpora[fm][tag]} has dataset_tag "
                f"{corpus.manifest.dataset_tag!r}, config says {tag!r}"
            )
        if corpus.is_pooled:
            if corpus.manifest.pooling_state != config.pooling:
                raise ValidationError(
                    f"corpus {fm}/{tag} already pooled as "
                    f"{corpus.manifest.pooling_state!r}; config wants {config.pooling!r}"
                )
            pooled[tag] = corpus
        else:
            pooled[tag] = pool_corpus(corpus, config.pooling)
    return pooled


def _stage_probe(config: RunConfig, fm: str,
                 pooled: dict[str, EmbeddingCorpus], fm_dir: str) -> dict:
    report = probe_report(
        pooled, list(config.tiers), list(config.classes), config.seed,
        k=config.k_folds, families=tuple(config.families),
    )
    write_json(os.path.join(fm_dir, "probe_report.json"), report)
    _write_text(os.path.join(fm_dir, "probe_table.md"), render_probe_table(report))
    return report


def _s_subset(config: RunConfig, corpus: EmbeddingCorpus, class_name: str) -> EmbeddingCorpus:
    tier = SIZE_TIERS["S"]
    target = tier_target_n(tier, len(corpus))
    return subset_by_tier(corpus, tier, target, class_name, config.seed)


def _result_from_cell(cell: dict) -> ProbeResult:
    best = cell["best"]
    spec = ClassifierSpec(kind=best["kind"], params=dict(best["params"]))
    return ProbeResult(spec=spec, per_fold_f1=list(best["per_fold_f1"]),
                       median_f1=best["median_f1"], iqr=best["iqr"])


def _attribute_class(config: RunConfig, fm: str, cls: str,
                     pooled: dict[str, EmbeddingCorpus], probe_rep: dict):
    per_dataset: dict[str, ProbeResult] = {}
    for tag in sorted(pooled):
        cell = probe_rep["cells"][tag]["S"][cls]
        if cell["status"] != "ok":
            raise StageError(
                "attribute",
                f"dataset {tag} has no S-tier result for class {cls}: "
                f"{cell.get('reason', 'unsatisfiable')}",
            )
        per_dataset[tag] = _result_from_cell(cell)
    selection = select_overall_best(per_dataset)
    win_tag = selection.overall_tag
    spec = selection.overall.spec

    train_subset = _s_subset(config, pooled[win_tag], cls)
    fit_seed = derive_key(config.seed, "final-train", fm, cls, spec.kind,
                          spec.canonical(), win_tag)
    model = train(spec, train_subset.features.astype(np.float64),
                  train_subset.label_vector(cls), fit_seed)
    background = stratified_background(train_subset, cls,
                                       config.background_size, config.seed)

    sets: dict[str, FeatureSet] = {}
    dataset_payload: dict[str, dict] = {}
    for tag in sorted(pooled):
        subset = _s_subset(config, pooled[tag], cls)
        X = subset.features.astype(np.float64)
        if len(X) > config.attribution_max_rows:
            perm = rng_for(config.seed, "attr-rows", fm, cls, tag).permutation(len(X))
            X = X[np.sort(perm[: config.attribution_max_rows])]
        if spec.kind == "logistic_regression":
            attr = shap_linear(model, X, background.mean(axis=0))
        elif spec.kind in _TREE_KINDS:
            attr = shap_tree(model, X)
        elif spec.kind == "mlp":
            attr = shap_kernel(model.predict_score, X, background,
                               m_coalitions=config.kernel_coalitions,
                               seed=derive_key(config.seed, "kernel-shap",
                                               fm, cls, tag))
        else:  # pragma: no cover - families are validated at config time
            raise StageError("attribute", f"no attribution route for {spec.kind}")
        fs = top_k_features(attr, config.top_k)
        sets[tag] = fs
        dataset_payload[tag] = {
            "base_value": attr.base_value,
            "notes": list(attr.notes),
            "n_rows": int(X.shape[0]),
            "model": {"kind": spec.kind, "params": spec.params,
                      "trained_on": win_tag},
            "ranked": [
                {"feature": idx, "mean_abs": val}
                for idx, val in zip(fs.indices, fs.mean_abs)
            ],
        }
    overlap = overlap_rates(sets)
    return selection, sets, overlap, dataset_payload


def _stage_attribute(config: RunConfig, fm: str,
                     pooled: dict[str, EmbeddingCorpus], probe_rep: dict,
                     fm_dir: str):
    per_class = {}
    per_dataset_files: dict[str, dict] = {
        tag: {"fm": fm, "dataset": tag, "classes": {}} for tag in pooled
    }
    overlap_payload = {"fm": fm, "k": config.top_k, "classes": {}}
    for cls in config.classes:
        selection, sets, overlap, dataset_payload = _attribute_class(
            config, fm, cls, pooled, probe_rep)
        for tag, payload in dataset_payload.items():
            per_dataset_files[tag]["classes"][cls] = payload
        overlap_payload["classes"][cls] = {
            "winning_dataset": selection.overall_tag,
            "pairwise": dict(overlap.pairwise),
            "global_rate": overlap.global_rate,
        }
        per_class[cls] = {"selection": selection, "sets": sets,
                          "overlap": overlap}
        bar_names = [*sorted(overlap.pairwise), "global"]
        bar_vals = [overlap.pairwise[name] for name in sorted(overlap.pairwise)]
        bar_vals.append(overlap.global_rate)
        emit_bars(bar_names, bar_vals,
                  os.path.join(fm_dir, "figures", f"overlap_{cls}.svg"),
                  title=f"{fm} {cls}: shared top-{config.top_k} feature rates")
    for tag, payload in per_dataset_files.items():
        write_json(os.path.join(fm_dir, tag, "attribution.json"), payload)
    write_json(os.path.join(fm_dir, "overlap_report.json"), overlap_payload)
    return per_class


def _geometry_cloud(config: RunConfig, fm: str, cls: str,
                    pooled: dict[str, EmbeddingCorpus]):
    features, flags, tags, ids = [], [], [], []
    sizes = {}
    for tag in sorted(pooled):
        corpus = pooled[tag]
        y = corpus.label_vector(cls)
        capacity = 2 * min(int(y.sum()), int((y == 0).sum()))
        n_bal = min(config.subset_n, capacity)
        if n_bal < 4:
            raise StageError(
                "geometry",
                f"dataset {tag} cannot supply a balanced subset for {cls} "
                f"(capacity {capacity})",
            )
        subset = balanced_subsample(corpus, n_bal, cls, config.seed)
        features.append(subset.features.astype(np.float64))
        flags.append(subset.label_vector(cls))
        tags.extend([tag] * len(subset))
        ids.extend(subset.ids)
        sizes[tag] = len(subset)
    return (np.vstack(features), np.concatenate(flags),
            np.array(tags), ids, sizes)


def _render_geometry_table(fm_payload: dict) -> str:
    header = ["Class", "Space"]
    header += [f"{grouping} {metric} {direction}"
               for grouping, metric, direction in _GEOMETRY_COLUMNS]
    lines = ["| " + " | ".join(header) + " |",
             "| " + " | ".join(["---"] * len(header)) + " |"]
    for cls in sorted(fm_payload["classes"]):
        for mode in ("full_q", "top50"):
            triples = fm_payload["classes"][cls][mode]
            row = [cls, mode]
            for grouping, metric, _ in _GEOMETRY_COLUMNS:
                value = triples[grouping][metric]
                row.append(value if isinstance(value, str) else f"{value:.3f}")
            lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _stage_geometry(config: RunConfig, fm: str,
                    pooled: dict[str, EmbeddingCorpus], attr_products: dict,
                    fm_dir: str):
    payload = {"fm": fm, "classes": {}}
    clouds = {}
    for cls in config.classes:
        points, flags, tags, ids, sizes = _geometry_cloud(config, fm, cls, pooled)
        selection = attr_products[cls]["selection"]
        feature_set = attr_products[cls]["sets"][selection.overall_tag]
        top_features = list(feature_set.indices)
        points50 = points[:, top_features]
        full_q = geometry_report(
            points, flags, tags,
            seed=derive_key(config.seed, "geometry", fm, cls, "full_q"),
        ).to_dict()
        top50 = geometry_report(
            points50, flags, tags,
            seed=derive_key(config.seed, "geometry", fm, cls, "top50"),
        ).to_dict()
        payload["classes"][cls] = {
            "subset_sizes": sizes,
            "feature_space": {"winning_dataset": selection.overall_tag,
                              "indices": top_features},
            "full_q": full_q,
            "top50": top50,
        }
        clouds[cls] = {"points50": points50, "flags": flags, "tags": tags,
                       "ids": ids}
    write_json(os.path.join(fm_dir, "geometry_report.json"), payload)
    _write_text(os.path.join(fm_dir, "geometry_table.md"),
                _render_geometry_table(json_safe(payload)))
    return payload, clouds


def _stage_umap(config: RunConfig, fm: str, clouds: dict, fm_dir: str) -> dict:
    summary = {}
    for cls in config.classes:
        cloud = clouds[cls]
        label_names = [f"{cls}={int(flag)}" for flag in cloud["flags"]]
        dataset_names = [str(tag) for tag in cloud["tags"]]
        runs = []
        for nn, md in config.sweep:
            seed = derive_key(config.seed, "umap", fm, cls, nn, repr(md))
            params = UmapParams(n_neighbors=nn, min_dist=md, seed=seed)
            layout = embed(cloud["points50"], params)
            combo_dir = os.path.join(fm_dir, "umap", cls, f"nn{nn}_md{md}")
            lines = ["id,x,y,label,dataset_tag"]
            for sid, (x, y), label, tag in zip(cloud["ids"], layout.coordinates,
                                               label_names, dataset_names):
                lines.append(f"{sid},{float(x)!r},{float(y)!r},{label},{tag}")
            _write_text(os.path.join(combo_dir, "umap_layout.csv"),
                        "\n".join(lines) + "\n")
            emit_scatter(layout, label_names,
                         os.path.join(combo_dir, "umap_label.svg"),
                         title=f"{fm} {cls} labels (nn={nn}, min_dist={md})")
            emit_scatter(layout, dataset_names,
                         os.path.join(combo_dir, "umap_dataset.svg"),
                         title=f"{fm} {cls} datasets (nn={nn}, min_dist={md})")
            runs.append({
                "n_neighbors": nn, "min_dist": md,
                "curve_a": layout.a, "curve_b": layout.b,
                "seed": _seed_record(seed, "umap", fm, cls, nn, repr(md)),
            })
        summary[cls] = runs
    return summary


def _run_stage(stage: str, fn, *args):
    try:
        return fn(*args)
    except (ValidationError, StageError):
        raise
    except Exception as exc:  # numerical or programming failure mid-stage
        raise StageError(stage, str(exc)) from exc


def run_all(config: RunConfig, upto: str = "umap",
            write_manifest: bool | None = None) -> str:
    """Execute stages through `upto` for every FM; return the run directory."""
    if upto not in STAGES:
        raise ValidationError(f"unknown stage {upto!r}")
    limit = STAGES.index(upto)
    if write_manifest is None:
        write_manifest = upto == "umap"
    out = config.out_dir
    os.makedirs(out, exist_ok=True)
    manifest = {
        "master_seed": config.seed,
        "config": config.to_manifest_dict(),
        "stages": list(STAGES[: limit + 1]),
        "fms": {},
    }
    for fm in sorted(config.corpora):
        fm_dir = os.path.join(out, fm)
        fm_entry = {"datasets": sorted(config.corpora[fm]),
                    "pooling": config.pooling}
        manifest["fms"][fm] = fm_entry
        pooled = _run_stage("pool", _stage_pool, config, fm)
        if limit < 1:
            continue
        probe_rep = _run_stage("probe", _stage_probe, config, fm, pooled, fm_dir)
        if limit < 2:
            continue
        attr_products = _run_stage("attribute", _stage_attribute,
                                   config, fm, pooled, probe_rep, fm_dir)
        fm_entry["per_class"] = {}
        for cls in config.classes:
            selection = attr_products[cls]["selection"]
            spec = selection.overall.spec
            fm_entry["per_class"][cls] = {
                "per_dataset_best": {
                    tag: {"kind": res.spec.kind, "params": res.spec.params,
                          "median_f1": res.median_f1, "iqr": res.iqr}
                    for tag, res in selection.per_dataset.items()
                },
                "overall_best": {
                    "dataset": selection.overall_tag,
                    "kind": spec.kind,
                    "params": spec.params,
                    "median_f1": selection.overall.median_f1,
                },
                "final_train_seed": _seed_record(
                    derive_key(config.seed, "final-train", fm, cls, spec.kind,
                               spec.canonical(), selection.overall_tag),
                    "final-train", fm, cls, spec.kind, spec.canonical(),
                    selection.overall_tag),
                "background": {"dataset": selection.overall_tag,
                               "size": config.background_size},
                "top_features": {
                    tag: list(fs.indices)
                    for tag, fs in attr_products[cls]["sets"].items()
                },
                "overlap_global_rate":
                    attr_products[cls]["overlap"].global_rate,
            }
        if limit < 3:
            continue
        geometry_payload, clouds = _run_stage(
            "geometry", _stage_geometry, config, fm, pooled, attr_products, fm_dir)
        for cls in config.classes:
            fm_entry["per_class"][cls]["geometry_seeds"] = {
                mode: _seed_record(
                    derive_key(config.seed, "geometry", fm, cls, mode),
                    "geometry", fm, cls, mode)
                for mode in ("full_q", "top50")
            }
        if limit < 4:
            continue
        umap_summary = _run_stage("umap", _stage_umap, config, fm, clouds, fm_dir)
        for cls in config.classes:
            fm_entry["per_class"][cls]["umap_runs"] = umap_summary[cls]
    if write_manifest:
        write_json(os.path.join(out, "run_manifest.json"), manifest)
    return out


def pool_to_disk(config: RunConfig) -> str:
    """`bench pool`: write pooled corpora under out_dir/<fm>/<dataset>."""
    for fm in sorted(config.corpora):
        pooled = _run_stage("pool", _stage_pool, config, fm)
        for tag, corpus in pooled.items():
            write_corpus(corpus, os.path.join(config.out_dir, fm, tag))
    return config.out_dir


# ---------------------------------------------------------------------------
# report rendering


def _probe_rows(fm: str, report: dict) -> list[list[str]]:
    rows = []
    for tag in report["datasets"]:
        for tier in report["tiers"]:
            for cls in report["classes"]:
                cell = report["cells"][tag][tier][cls]
                if cell["status"] == "ok":
                    best = f"{cell['median_f1']:.3f} ({cell['best_kind']})"
                    iqr = f"{cell['max_iqr']:.3f}"
                else:
                    best, iqr = "--", "--"
                rows.append([fm, tag, tier, cls, best, iqr])
    return rows


def report_render(run_dir: str) -> str:
    """Single Markdown summary: 3 tables plus links to every figure."""
    if not os.path.isdir(run_dir):
        raise ValidationError(f"run directory {run_dir} does not exist")
    fm_dirs = sorted(
        name for name in os.listdir(run_dir)
        if os.path.isfile(os.path.join(run_dir, name, "probe_report.json"))
    )
    if not fm_dirs:
        raise ValidationError(
            f"no probe stage outputs under {run_dir}: empty or incomplete run")

    probe_rows, geometry_blocks, overlap_rows, figures = [], [], [], []
    for fm in fm_dirs:
        fm_dir = os.path.join(run_dir, fm)
        with open(os.path.join(fm_dir, "probe_report.json"), encoding="utf-8") as fh:
            probe_rows.extend(_probe_rows(fm, json.load(fh)))
        geo_path = os.path.join(fm_dir, "geometry_report.json")
        if not os.path.isfile(geo_path):
            raise ValidationError(f"missing geometry stage output for FM {fm}")
        with open(geo_path, encoding="utf-8") as fh:
            geometry_blocks.append((fm, json.load(fh)))
        overlap_path = os.path.join(fm_dir, "overlap_report.json")
        if not os.path.isfile(overlap_path):
            raise ValidationError(f"missing attribute stage output for FM {fm}")
        with open(overlap_path, encoding="utf-8") as fh:
            overlap = json.load(fh)
        for cls in sorted(overlap["classes"]):
            entry = overlap["classes"][cls]
            for pair in sorted(entry["pairwise"]):
                overlap_rows.append(
                    [fm, cls, pair, f"{entry['pairwise'][pair]:.3f}"])
            overlap_rows.append([fm, cls, "global", f"{entry['global_rate']:.3f}"])
        for root, _, files in os.walk(fm_dir):
            for name in sorted(files):
                if name.endswith(".svg"):
                    rel = os.path.relpath(os.path.join(root, name), run_dir)
                    figures.append(rel.replace(os.sep, "/"))

    lines = ["# Benchmark run report", ""]
    lines += ["## Probe performance (Table-3 style)", ""]
    header = ["FM", "Dataset", "Tier", "Class", "Best median F1 (family)", "Max IQR"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("| " + " | ".join(["---"] * len(header)) + " |")
    lines += ["| " + " | ".join(row) + " |" for row in probe_rows]

    lines += ["", "## Separability (Table-4 style)", ""]
    header = ["FM", "Class", "Space"] + [
        f"{grouping} {metric} {direction}"
        for grouping, metric, direction in _GEOMETRY_COLUMNS
    ]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("| " + " | ".join(["---"] * len(header)) + " |")
    for fm, payload in geometry_blocks:
        for cls in sorted(payload["classes"]):
            for mode in ("full_q", "top50"):
                triples = payload["classes"][cls][mode]
                row = [fm, cls, mode]
                for grouping, metric, _ in _GEOMETRY_COLUMNS:
                    value = triples[grouping][metric]
                    row.append(value if isinstance(value, str) else f"{value:.3f}")
                lines.append("| " + " | ".join(row) + " |")

    lines += ["", "## Shared top-feature rates (Fig.-3 style)", ""]
    header = ["FM", "Class", "Pair", "Shared rate"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("| " + " | ".join(["---"] * len(header)) + " |")
    lines += ["| " + " | ".join(row) + " |" for row in overlap_rows]

    lines += ["", "## Figures", ""]
    lines += [f"![{fig}]({fig})" for fig in sorted(figures)]

    path = os.path.join(run_dir, "report.md")
    _write_text(path, "\n".join(lines) + "\n")
    return path
