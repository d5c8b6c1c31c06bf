"""Interchange-corpus writer.

The on-disk contract: `manifest.json` (corpus metadata), `embeddings.bin`
(row-major float32 little-endian token rows, records concatenated in id
order), `offsets.bin` (n+1 cumulative token counts, uint64 little-endian),
and `labels.csv` (id, dataset_tag, one 0/1 column per class). Token
corpora carry pooling_state "none"; pooling belongs to consumers.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError

MANIFEST_NAME = "manifest.json"
EMBEDDINGS_NAME = "embeddings.bin"
OFFSETS_NAME = "offsets.bin"
LABELS_NAME = "labels.csv"


def write_token_corpus(
    out_dir: str | Path,
    fm_tag: str,
    dataset_tag: str,
    ids: list[str],
    token_blocks: list[np.ndarray],
    classes: tuple[str, ...],
    flags: np.ndarray,
    extra_manifest: dict | None = None,
) -> Path:
    """Write one token-level corpus directory and return its path."""
    n = len(ids)
    if not (n == len(token_blocks) == flags.shape[0]):
        raise ValidationError(
            f"inconsistent record counts: {n} ids, {len(token_blocks)} token "
            f"blocks, {flags.shape[0]} label rows")
    if n == 0:
        raise ValidationError("refusing to write an empty corpus")
    widths = {block.shape[1] for block in token_blocks}
    if len(widths) != 1:
        raise ValidationError(f"token blocks disagree on width: {sorted(widths)}")
    q = widths.pop()

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = {
        "fm_tag": fm_tag,
        "dataset_tag": dataset_tag,
        "q": q,
        "pooling_state": "none",
        "classes": list(classes),
        "n": n,
        "dtype": "f32",
    }
    if extra_manifest:
        overlap = set(extra_manifest) & set(manifest)
        if overlap:
            raise ValidationError(f"extra manifest keys shadow core ones: {sorted(overlap)}")
        manifest.update(extra_manifest)
    with open(out_dir / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    counts = np.array([block.shape[0] for block in token_blocks], dtype=np.uint64)
    offsets = np.zeros(n + 1, dtype=np.uint64)
    np.cumsum(counts, out=offsets[1:])
    offsets.astype("<u8").tofile(out_dir / OFFSETS_NAME)

    flat = np.concatenate(token_blocks, axis=0)
    np.ascontiguousarray(flat, dtype="<f4").tofile(out_dir / EMBEDDINGS_NAME)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "dataset_tag", *classes])
    for i in range(n):
        writer.writerow([ids[i], dataset_tag, *(str(int(v)) for v in flags[i])])
    (out_dir / LABELS_NAME).write_text(buf.getvalue(), encoding="utf-8")
    return out_dir
