"""Synthetic embedding corpora with controllable label/dataset separability.

Samples are token matrices whose rows are drawn from Gaussian blobs:
class centroids sit on one set of orthogonal coordinate axes, dataset
offsets on a disjoint set, so the two kinds of structure can be dialed
independently. The noise draws do not depend on the separation knobs,
so raising `label_sep` with a fixed seed moves the same point cloud apart
(common random numbers).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusManifest, EmbeddingCorpus, write_corpus
from .errors import ValidationError
from .seeding import rng_for


@dataclass(frozen=True)
class BlobSpec:
    """Geometry of a synthetic benchmark: counts, separations, noise scale.

    Separations are expressed in units of noise_sigma (pairwise centroid
    distance = sep * noise_sigma). Token counts per sample are drawn
    uniformly from [tokens_min, tokens_max].
    """

    q: int
    n_per_group: int
    datasets: int
    classes: int
    label_sep: float
    dataset_sep: float
    noise_sigma: float
    seed: int
    tokens_min: int = 4
    tokens_max: int = 8
    fm_tag: str = "synth"

    def __post_init__(self):
        for name in ("q", "n_per_group", "datasets", "classes"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.label_sep < 0 or self.dataset_sep < 0:
            raise ValidationError("separations must be >= 0")
        if self.noise_sigma <= 0:
            raise ValidationError("noise_sigma must be > 0")
        if self.q < self.classes + self.datasets:
            raise ValidationError(
                f"q={self.q} cannot host {self.classes} class and "
                f"{self.datasets} dataset orthogonal directions"
            )
        if not (1 <= self.tokens_min <= self.tokens_max):
            raise ValidationError("need 1 <= tokens_min <= tokens_max")

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(f"K{i}" for i in range(self.classes))

    @property
    def dataset_tags(self) -> tuple[str, ...]:
        return tuple(f"D{i}" for i in range(self.datasets))


def group_centroid(spec: BlobSpec, class_idx: int, dataset_idx: int) -> np.ndarray:
    """True mean of the (class, dataset) blob.

    Class c sits at s*e_c and dataset d adds t*e_{classes+d}; scaling by
    1/sqrt(2) makes every pairwise centroid distance exactly sep*noise_sigma.
    """
    c = np.zeros(spec.q)
    c[class_idx] = spec.label_sep * spec.noise_sigma / np.sqrt(2.0)
    c[spec.classes + dataset_idx] = spec.dataset_sep * spec.noise_sigma / np.sqrt(2.0)
    return c


def gen_corpus(spec: BlobSpec) -> dict[str, EmbeddingCorpus]:
    """Generate one token corpus per synthetic dataset, keyed by dataset_tag.

    Deterministic per seed; every random stream is derived from
    (seed, purpose, dataset_tag) so streams are independent of the
    separation values and of each other.
    """
    out: dict[str, EmbeddingCorpus] = {}
    n = spec.n_per_group * spec.classes
    for d, tag in enumerate(spec.dataset_tags):
        counts = rng_for(spec.seed, "synth-tokens", tag).integers(
            spec.tokens_min, spec.tokens_max + 1, size=n
        )
        offsets = np.zeros(n + 1, dtype=np.uint64)
        np.cumsum(counts, out=offsets[1:])
        total = int(offsets[-1])
        noise = rng_for(spec.seed, "synth-noise", tag).standard_normal((total, spec.q))
        flat = noise * spec.noise_sigma
        labels = np.zeros((n, spec.classes), dtype=np.uint8)
        for i in range(n):
            k = i // spec.n_per_group
            flat[int(offsets[i]) : int(offsets[i + 1])] += group_centroid(spec, k, d)
            labels[i, k] = 1
        manifest = CorpusManifest(
            fm_tag=spec.fm_tag,
            dataset_tag=tag,
            q=spec.q,
            pooling_state="none",
            classes=spec.class_names,
            n=n,
        )
        corpus = EmbeddingCorpus(
            manifest,
            ids=[f"{tag}-{i:05d}" for i in range(n)],
            dataset_tags=[tag] * n,
            labels=labels,
            tokens_flat=np.ascontiguousarray(flat, dtype=np.float32),
            offsets=offsets,
        )
        perm = rng_for(spec.seed, "synth-shuffle", tag).permutation(n)
        out[tag] = corpus.take(perm)
    return out


def write_synth(spec: BlobSpec, out_dir: str | Path) -> list[Path]:
    """Write each generated corpus to out_dir/<dataset_tag>/ plus spec.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "spec.json", "w", encoding="utf-8") as fh:
        json.dump(asdict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths = []
    for tag, corpus in gen_corpus(spec).items():
        paths.append(write_corpus(corpus, out_dir / tag))
    return paths
