"""Shared fixtures: one small two-FM pipeline run reused across test modules.

The run uses the logistic family only so the probe stage stays fast; the
good FM separates labels (label_sep=8, dataset_sep=0) and the bad FM
separates datasets instead (0, 8), mirroring the construction the
acceptance battery uses at full size.
"""

from __future__ import annotations

import numpy as np
import pytest

from embench.corpus import CorpusManifest, EmbeddingCorpus, write_corpus
from embench.pipeline import RunConfig, run_all
from embench.seeding import rng_for
from embench.synth import BlobSpec, write_synth


@pytest.fixture(scope="session")
def synth_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("pipeline-run")
    corpora: dict[str, dict[str, str]] = {}
    for fm, (label_sep, dataset_sep) in {
        "goodfm": (8.0, 0.0),
        "badfm": (0.0, 8.0),
    }.items():
        spec = BlobSpec(
            q=12, n_per_group=260, datasets=2, classes=2,
            label_sep=label_sep, dataset_sep=dataset_sep,
            noise_sigma=1.0, seed=7, fm_tag=fm,
        )
        write_synth(spec, base / fm)
        corpora[fm] = {tag: str(base / fm / tag) for tag in spec.dataset_tags}

    config_dict = {
        "corpora": corpora,
        "classes": ["K0"],
        "tiers": ["S"],
        "pooling": "lst",
        "seed": 11,
        "families": ["logistic_regression"],
        "sweep": [[15, 0.1]],
        "subset_n": 120,
        "out_dir": str(base / "out"),
    }
    config = RunConfig.from_dict(config_dict)
    run_all(config, write_manifest=True)
    return {"base": base, "config": config, "config_dict": config_dict,
            "out": base / "out", "corpora": corpora}


@pytest.fixture
def make_rare_positive_corpus():
    """Corpus whose 3 positives cannot stratify 15 folds (S tier skips)."""

    def _make(path, fm_tag="rarefm", n=520, q=8, positives=3):
        rng = rng_for(0, "rare-positive-fixture")
        manifest = CorpusManifest(
            fm_tag=fm_tag, dataset_tag="D0", q=q, pooling_state="lst",
            classes=("K0",), n=n,
        )
        labels = np.zeros((n, 1), dtype=np.uint8)
        labels[:positives, 0] = 1
        corpus = EmbeddingCorpus(
            manifest,
            ids=[f"s{i:04d}" for i in range(n)],
            dataset_tags=["D0"] * n,
            labels=labels,
            features=rng.standard_normal((n, q)).astype(np.float32),
        )
        write_corpus(corpus, path)

    return _make
