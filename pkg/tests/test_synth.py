"""Synthetic corpus generator: structure, determinism, separability oracles.

The kNN agreements asserted here are computed by an inline brute-force
helper so they do not depend on the geometry module.
"""

import numpy as np
import pytest

from embench import ValidationError, load_corpus, pool_corpus
from embench.synth import BlobSpec, gen_corpus, group_centroid, write_synth


def brute_knn_agreement(points, groups, k=10):
    """Reference kNN@k agreement: full distance matrix, self excluded."""
    n = points.shape[0]
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    agree = 0.0
    for i in range(n):
        nbrs = np.argsort(d2[i], kind="stable")[:k]
        agree += (groups[nbrs] == groups[i]).mean()
    return agree / n


def spec_with(**kw):
    base = dict(
        q=8, n_per_group=150, datasets=3, classes=2,
        label_sep=8.0, dataset_sep=0.0, noise_sigma=1.0, seed=42,
    )
    base.update(kw)
    return BlobSpec(**base)


def pooled_cloud(spec):
    """lst-pooled features, class index, and dataset index, concatenated."""
    feats, classes, dsets = [], [], []
    for d, (tag, corpus) in enumerate(gen_corpus(spec).items()):
        pooled = pool_corpus(corpus, "lst")
        feats.append(pooled.features)
        classes.append(np.argmax(pooled.labels, axis=1))
        dsets.append(np.full(len(pooled), d))
    return np.concatenate(feats), np.concatenate(classes), np.concatenate(dsets)


def test_validation_q_too_small():
    with pytest.raises(ValidationError, match="orthogonal"):
        spec_with(q=4, classes=2, datasets=3)


def test_validation_counts_and_scales():
    with pytest.raises(ValidationError):
        spec_with(noise_sigma=0.0)
    with pytest.raises(ValidationError):
        spec_with(label_sep=-1.0)
    with pytest.raises(ValidationError):
        spec_with(n_per_group=0)


def test_centroid_pairwise_distances():
    spec = spec_with(label_sep=8.0, dataset_sep=3.0)
    c0 = group_centroid(spec, 0, 0)
    c1 = group_centroid(spec, 1, 0)
    assert np.linalg.norm(c0 - c1) == pytest.approx(8.0)
    d0 = group_centroid(spec, 0, 0)
    d1 = group_centroid(spec, 0, 2)
    assert np.linalg.norm(d0 - d1) == pytest.approx(3.0)


def test_regeneration_bit_identical():
    spec = spec_with(n_per_group=40)
    a, b = gen_corpus(spec), gen_corpus(spec)
    assert list(a) == list(b)
    for tag in a:
        assert a[tag].tokens_flat.tobytes() == b[tag].tokens_flat.tobytes()
        assert np.array_equal(a[tag].offsets, b[tag].offsets)
        assert a[tag].ids == b[tag].ids


def test_group_means_converge():
    spec = spec_with(q=8, n_per_group=300, datasets=2, label_sep=4.0, dataset_sep=2.0)
    bound = 3 * spec.noise_sigma / np.sqrt(spec.n_per_group)
    for d, (tag, corpus) in enumerate(gen_corpus(spec).items()):
        for k in range(spec.classes):
            rows = [
                corpus.tokens(i)
                for i in range(len(corpus))
                if corpus.labels[i, k] == 1
            ]
            mean = np.concatenate(rows).mean(axis=0)
            dev = np.abs(mean - group_centroid(spec, k, d))
            assert dev.max() < bound


def test_labels_one_hot_and_groups_balanced():
    spec = spec_with(n_per_group=30)
    for corpus in gen_corpus(spec).values():
        assert (corpus.labels.sum(axis=1) == 1).all()
        assert corpus.labels[:, 0].sum() == spec.n_per_group


def test_good_fm_knn_oracle():
    # label_sep=8, dataset_sep=0: label kNN@10 >= 0.95, dataset kNN at chance
    X, classes, dsets = pooled_cloud(spec_with(label_sep=8.0, dataset_sep=0.0))
    assert brute_knn_agreement(X, classes) >= 0.95
    assert abs(brute_knn_agreement(X, dsets) - 1 / 3) <= 0.05


def test_unstructured_cloud_knn_at_chance():
    X, classes, dsets = pooled_cloud(spec_with(label_sep=0.0, dataset_sep=0.0))
    assert abs(brute_knn_agreement(X, classes) - 0.5) <= 0.05
    assert abs(brute_knn_agreement(X, dsets) - 1 / 3) <= 0.05


def test_label_knn_monotone_in_label_sep():
    scores = []
    for sep in (0.0, 2.0, 4.0, 8.0):
        X, classes, _ = pooled_cloud(spec_with(label_sep=sep, n_per_group=100, datasets=2))
        scores.append(brute_knn_agreement(X, classes))
    assert all(a <= b + 1e-12 for a, b in zip(scores, scores[1:]))


def test_write_synth_round_trips(tmp_path):
    spec = spec_with(n_per_group=20)
    paths = write_synth(spec, tmp_path)
    assert (tmp_path / "spec.json").exists()
    assert len(paths) == spec.datasets
    fresh = gen_corpus(spec)
    for path in paths:
        back = load_corpus(path)
        src = fresh[back.manifest.dataset_tag]
        assert back.tokens_flat.tobytes() == src.tokens_flat.tobytes()
        assert back.ids == src.ids
