"""Embedding corpus interchange: on-disk format, validation, pooling, subsetting.

A corpus directory holds exactly:
  manifest.json   fm_tag, dataset_tag, q, pooling_state, classes, n, dtype
  embeddings.bin  float32 little-endian payload (sample-major)
  offsets.bin     token corpora only: (n+1) uint64 LE cumulative token counts
  labels.csv      header ``id,dataset_tag,<class1>,...``; flags 0/1

Pooled corpora store one length-q vector per sample; token corpora store a
variable-length [p_i, q] block per sample. Corpora are immutable after load.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import TierUnsatisfiableError, ValidationError
from .seeding import rng_for

log = logging.getLogger(__name__)

POOLING_STATES = ("none", "lst", "max")
MANIFEST_NAME = "manifest.json"
EMBEDDINGS_NAME = "embeddings.bin"
OFFSETS_NAME = "offsets.bin"
LABELS_NAME = "labels.csv"


@dataclass(frozen=True)
class CorpusManifest:
    fm_tag: str
    dataset_tag: str
    q: int
    pooling_state: str
    classes: tuple[str, ...]
    n: int
    dtype: str = "f32"

    def __post_init__(self):
        if self.pooling_state not in POOLING_STATES:
            raise ValidationError(f"unknown pooling_state {self.pooling_state!r}")
        if self.dtype != "f32":
            raise ValidationError(f"unsupported dtype {self.dtype!r}")
        if not self.dataset_tag:
            raise ValidationError("dataset_tag must be non-empty")
        if self.q < 1:
            raise ValidationError("feature dimension q must be >= 1")
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError("duplicate class names in manifest")

    def to_dict(self) -> dict:
        return {
            "fm_tag": self.fm_tag,
            "dataset_tag": self.dataset_tag,
            "q": self.q,
            "pooling_state": self.pooling_state,
            "classes": list(self.classes),
            "n": self.n,
            "dtype": self.dtype,
        }


@dataclass(frozen=True)
class Sample:
    """Read-only view of one corpus row."""

    id: str
    embedding: np.ndarray
    labels: dict[str, int]
    dataset_tag: str
    fm_tag: str


class EmbeddingCorpus:
    """An ordered, validated set of embedded samples plus manifest metadata.

    Pooled corpora expose `features` as an [n, q] float32 matrix. Token
    corpora expose `tokens_flat` ([total_tokens, q]) plus `offsets`
    (n+1 cumulative token counts); `tokens(i)` returns sample i's block.
    """

    def __init__(
        self,
        manifest: CorpusManifest,
        ids: Sequence[str],
        dataset_tags: Sequence[str],
        labels: np.ndarray,
        features: np.ndarray | None = None,
        tokens_flat: np.ndarray | None = None,
        offsets: np.ndarray | None = None,
    ):
        self.manifest = manifest
        self.ids = list(ids)
        self.dataset_tags = list(dataset_tags)
        self.labels = np.ascontiguousarray(labels, dtype=np.uint8)
        self.features = features
        self.tokens_flat = tokens_flat
        self.offsets = offsets
        self._validate()

    def _validate(self) -> None:
        m = self.manifest
        n = m.n
        if len(self.ids) != n or len(self.dataset_tags) != n:
            raise ValidationError("id/dataset_tag row count does not match manifest n")
        if len(set(self.ids)) != n:
            raise ValidationError("duplicate sample ids")
        if self.labels.shape != (n, len(m.classes)):
            raise ValidationError("label matrix shape mismatch")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValidationError("label flags must be 0/1")
        if m.pooling_state == "none":
            if self.tokens_flat is None or self.offsets is None:
                raise ValidationError("token corpus requires tokens_flat and offsets")
            if self.features is not None:
                raise ValidationError("token corpus must not carry pooled features")
            if self.offsets.shape != (n + 1,) or self.offsets[0] != 0:
                raise ValidationError("offsets must hold n+1 cumulative counts starting at 0")
            if np.any(np.diff(self.offsets.astype(np.int64)) < 1):
                raise ValidationError("every sample needs at least one token")
            if self.tokens_flat.shape != (int(self.offsets[-1]), m.q):
                raise ValidationError("token payload shape does not match offsets and q")
            if not np.isfinite(self.tokens_flat).all():
                raise ValidationError("non-finite values in token payload")
        else:
            if self.features is None:
                raise ValidationError("pooled corpus requires a feature matrix")
            if self.tokens_flat is not None or self.offsets is not None:
                raise ValidationError("pooled corpus must not carry token payload")
            if self.features.shape != (n, m.q):
                raise ValidationError(
                    f"feature matrix shape {self.features.shape} != (n={n}, q={m.q})"
                )
            if not np.isfinite(self.features).all():
                raise ValidationError("non-finite values in feature matrix")

    def __len__(self) -> int:
        return self.manifest.n

    @property
    def is_pooled(self) -> bool:
        return self.manifest.pooling_state != "none"

    def tokens(self, i: int) -> np.ndarray:
        if self.is_pooled:
            raise ValidationError("pooled corpus has no per-sample token matrix")
        lo, hi = int(self.offsets[i]), int(self.offsets[i + 1])
        return self.tokens_flat[lo:hi]

    def label_vector(self, class_name: str) -> np.ndarray:
        try:
            j = self.manifest.classes.index(class_name)
        except ValueError:
            raise ValidationError(f"class {class_name!r} not in manifest") from None
        return self.labels[:, j].astype(np.int64)

    def sample(self, i: int) -> Sample:
        emb = self.features[i] if self.is_pooled else self.tokens(i)
        flags = {c: int(self.labels[i, j]) for j, c in enumerate(self.manifest.classes)}
        return Sample(self.ids[i], emb, flags, self.dataset_tags[i], self.manifest.fm_tag)

    @property
    def samples(self) -> Iterator[Sample]:
        return (self.sample(i) for i in range(len(self)))

    def take(self, indices: np.ndarray) -> "EmbeddingCorpus":
        """Row subset in the given order; manifest n is updated."""
        indices = np.asarray(indices, dtype=np.int64)
        m = self.manifest
        manifest = CorpusManifest(
            m.fm_tag, m.dataset_tag, m.q, m.pooling_state, m.classes, int(indices.size), m.dtype
        )
        ids = [self.ids[i] for i in indices]
        tags = [self.dataset_tags[i] for i in indices]
        labels = self.labels[indices]
        if self.is_pooled:
            return EmbeddingCorpus(manifest, ids, tags, labels, features=self.features[indices].copy())
        blocks = [self.tokens(int(i)) for i in indices]
        counts = np.array([b.shape[0] for b in blocks], dtype=np.uint64)
        offsets = np.zeros(indices.size + 1, dtype=np.uint64)
        np.cumsum(counts, out=offsets[1:])
        flat = np.concatenate(blocks, axis=0) if blocks else np.zeros((0, m.q), np.float32)
        return EmbeddingCorpus(manifest, ids, tags, labels, tokens_flat=flat, offsets=offsets)


# ---------------------------------------------------------------------------
# on-disk format


def write_corpus(corpus: EmbeddingCorpus, path: str | Path) -> Path:
    """Write the corpus directory; bit-exact inverse of `load_corpus`."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(corpus.manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if corpus.is_pooled:
        payload = np.ascontiguousarray(corpus.features, dtype="<f4")
    else:
        payload = np.ascontiguousarray(corpus.tokens_flat, dtype="<f4")
        corpus.offsets.astype("<u8").tofile(path / OFFSETS_NAME)
    payload.tofile(path / EMBEDDINGS_NAME)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "dataset_tag", *corpus.manifest.classes])
    for i in range(len(corpus)):
        writer.writerow(
            [corpus.ids[i], corpus.dataset_tags[i], *(str(int(v)) for v in corpus.labels[i])]
        )
    (path / LABELS_NAME).write_text(buf.getvalue(), encoding="utf-8")
    return path


def load_corpus(path: str | Path) -> EmbeddingCorpus:
    """Load and validate a corpus directory.

    Raises ValidationError on missing files, manifest/blob size mismatches,
    non-finite payloads, duplicate ids, or label columns absent from the
    manifest's class list.
    """
    path = Path(path)
    for name in (MANIFEST_NAME, EMBEDDINGS_NAME, LABELS_NAME):
        if not (path / name).exists():
            raise ValidationError(f"missing corpus file {name} in {path}")
    with open(path / MANIFEST_NAME, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        manifest = CorpusManifest(
            fm_tag=raw["fm_tag"],
            dataset_tag=raw["dataset_tag"],
            q=int(raw["q"]),
            pooling_state=raw["pooling_state"],
            classes=tuple(raw["classes"]),
            n=int(raw["n"]),
            dtype=raw.get("dtype", "f32"),
        )
    except KeyError as exc:
        raise ValidationError(f"manifest missing key {exc}") from None

    ids, tags, label_rows = [], [], []
    with open(path / LABELS_NAME, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["id", "dataset_tag"]:
            raise ValidationError("labels.csv must start with id,dataset_tag columns")
        csv_classes = tuple(header[2:])
        extra = set(csv_classes) - set(manifest.classes)
        if extra:
            raise ValidationError(f"label table classes not in manifest: {sorted(extra)}")
        if csv_classes != manifest.classes:
            raise ValidationError("label table class columns must match manifest order")
        for row in reader:
            if len(row) != 2 + len(csv_classes):
                raise ValidationError(f"malformed labels.csv row: {row!r}")
            ids.append(row[0])
            tags.append(row[1])
            try:
                label_rows.append([int(v) for v in row[2:]])
            except ValueError:
                raise ValidationError(f"non-integer label flag in row {row!r}") from None
    if len(ids) != manifest.n:
        raise ValidationError(f"labels.csv has {len(ids)} rows, manifest says n={manifest.n}")
    labels = np.asarray(label_rows, dtype=np.int64).reshape(manifest.n, len(manifest.classes))
    if not np.isin(labels, (0, 1)).all():
        raise ValidationError("label flags must be 0 or 1")

    blob = np.fromfile(path / EMBEDDINGS_NAME, dtype="<f4")
    if manifest.pooling_state == "none":
        if not (path / OFFSETS_NAME).exists():
            raise ValidationError(f"missing corpus file {OFFSETS_NAME} in {path}")
        offsets = np.fromfile(path / OFFSETS_NAME, dtype="<u8")
        if offsets.size != manifest.n + 1:
            raise ValidationError("offsets.bin must hold n+1 entries")
        total = int(offsets[-1])
        if blob.size != total * manifest.q:
            raise ValidationError(
                f"embeddings.bin holds {blob.size} floats, offsets imply {total * manifest.q}"
            )
        tokens_flat = blob.reshape(total, manifest.q)
        return EmbeddingCorpus(manifest, ids, tags, labels, tokens_flat=tokens_flat, offsets=offsets)
    if blob.size != manifest.n * manifest.q:
        raise ValidationError(
            f"embeddings.bin holds {blob.size} floats, expected n*q = {manifest.n * manifest.q}"
        )
    features = blob.reshape(manifest.n, manifest.q)
    return EmbeddingCorpus(manifest, ids, tags, labels, features=features)


# ---------------------------------------------------------------------------
# pooling


def pool(tokens: np.ndarray, mode: str) -> np.ndarray:
    """Collapse a [p, q] token matrix to a length-q vector.

    lst takes the last row; max takes the column-wise maximum.
    """
    tokens = np.asarray(tokens)
    if tokens.ndim != 2 or tokens.shape[0] < 1 or tokens.shape[1] < 1:
        raise ValidationError(f"token matrix must be [p >= 1, q >= 1], got {tokens.shape}")
    if not np.isfinite(tokens).all():
        raise ValidationError("non-finite token values")
    if mode == "lst":
        return tokens[-1].copy()
    if mode == "max":
        return tokens.max(axis=0)
    raise ValidationError(f"unknown pooling mode {mode!r}")


def pool_corpus(corpus: EmbeddingCorpus, mode: str) -> EmbeddingCorpus:
    """Pool every sample of a token corpus; returns a pooled corpus."""
    if mode not in ("lst", "max"):
        raise ValidationError(f"unknown pooling mode {mode!r}")
    if corpus.is_pooled:
        raise ValidationError("corpus is already pooled")
    flat, offsets = corpus.tokens_flat, corpus.offsets.astype(np.int64)
    if mode == "lst":
        features = flat[offsets[1:] - 1].copy()
    else:
        features = np.maximum.reduceat(flat, offsets[:-1], axis=0)
    m = corpus.manifest
    manifest = CorpusManifest(m.fm_tag, m.dataset_tag, m.q, mode, m.classes, m.n, m.dtype)
    return EmbeddingCorpus(
        manifest,
        corpus.ids,
        corpus.dataset_tags,
        corpus.labels,
        features=np.ascontiguousarray(features, dtype=np.float32),
    )


# ---------------------------------------------------------------------------
# label mapping


@dataclass(frozen=True)
class LabelMapping:
    superclass: str
    subclasses: tuple[str, ...]


# Conduction-disturbance umbrella plus atrial fibrillation as its own class.
DEFAULT_LABEL_MAPPINGS = (
    LabelMapping(
        "CD",
        (
            "1DAVB", "2AVB", "3AVB", "CLBBB", "CRBBB", "ILBBB", "IRBBB",
            "IVCD", "LAnFB", "LBBB", "RBBB", "WPW",
        ),
    ),
    LabelMapping("AF", ("AF",)),
)


def map_labels(
    raw_codes: set[str], mappings: Sequence[LabelMapping] = DEFAULT_LABEL_MAPPINGS
) -> tuple[dict[str, int], frozenset[str]]:
    """Fold raw subclass codes into binary superclass flags.

    A superclass flag is 1 iff any of its subclasses is present. Unknown
    codes are ignored and returned for summary counting. Each subclass code
    may appear under at most one superclass.
    """
    seen: dict[str, str] = {}
    for m in mappings:
        for code in m.subclasses:
            if code in seen and seen[code] != m.superclass:
                raise ValidationError(f"subclass {code!r} mapped to two superclasses")
            seen[code] = m.superclass
    flags = {m.superclass: 0 for m in mappings}
    unknown = []
    for code in raw_codes:
        target = seen.get(code)
        if target is None:
            unknown.append(code)
        else:
            flags[target] = 1
    if unknown:
        log.debug("ignored %d unknown label codes", len(unknown))
    return flags, frozenset(unknown)


# ---------------------------------------------------------------------------
# size tiers and subsetting


@dataclass(frozen=True)
class SizeTier:
    name: str
    lower: int
    upper: int | None  # exclusive; None = unbounded

    def contains(self, n: int) -> bool:
        return n >= self.lower and (self.upper is None or n < self.upper)


SIZE_TIERS: Mapping[str, SizeTier] = {
    "XS": SizeTier("XS", 1, 500),
    "S": SizeTier("S", 500, 2500),
    "M": SizeTier("M", 2500, 5000),
    "L": SizeTier("L", 5000, None),
}


def tier_target_n(tier: SizeTier, corpus_n: int) -> int:
    """Largest sample count inside the tier that the corpus can supply."""
    if corpus_n < tier.lower:
        raise TierUnsatisfiableError(
            f"tier {tier.name} needs >= {tier.lower} samples, corpus has {corpus_n}"
        )
    if tier.upper is None:
        return corpus_n
    return min(corpus_n, tier.upper - 1)


def subset_by_tier(
    corpus: EmbeddingCorpus,
    tier: SizeTier,
    target_n: int,
    class_name: str,
    seed: int,
) -> EmbeddingCorpus:
    """Positive-rate-preserving random subset of exactly target_n samples.

    Stratified on the flag of `class_name` (the class under study), so the
    subset's positive count is within one sample of the parent's rate.
    Deterministic for a fixed seed. Raises TierUnsatisfiableError when the
    corpus cannot populate the tier.
    """
    n = len(corpus)
    if not tier.contains(target_n):
        raise ValidationError(f"target_n={target_n} outside tier {tier.name} bounds")
    if target_n > n:
        raise TierUnsatisfiableError(
            f"tier {tier.name}: corpus has {n} samples, {target_n} requested"
        )
    y = corpus.label_vector(class_name)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    # round the stratified positive quota to the nearest integer
    n_pos = int(round(target_n * pos.size / n))
    n_pos = min(max(n_pos, target_n - neg.size), pos.size)
    n_neg = target_n - n_pos
    rng = rng_for(seed, "subset_by_tier", corpus.manifest.dataset_tag, tier.name, class_name)
    take_pos = rng.permutation(pos)[:n_pos]
    take_neg = rng.permutation(neg)[:n_neg]
    indices = np.sort(np.concatenate([take_pos, take_neg]))
    return corpus.take(indices)


def balanced_subsample(
    corpus: EmbeddingCorpus, n_total: int, class_name: str, seed: int
) -> EmbeddingCorpus:
    """Exactly n_total samples at a 1:1 positive:negative ratio (+-1 when odd).

    The odd extra sample goes to the positive side.
    """
    y = corpus.label_vector(class_name)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    n_pos = (n_total + 1) // 2
    n_neg = n_total // 2
    if pos.size < n_pos or neg.size < n_neg:
        raise ValidationError(
            f"balanced subsample of {n_total} needs {n_pos} positives and {n_neg} negatives; "
            f"corpus has {pos.size}/{neg.size}"
        )
    rng = rng_for(seed, "balanced_subsample", corpus.manifest.dataset_tag, class_name)
    take = np.sort(np.concatenate([rng.permutation(pos)[:n_pos], rng.permutation(neg)[:n_neg]]))
    return corpus.take(take)
