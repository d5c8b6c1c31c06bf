"""Prepared-record loading: one .npy waveform per id plus a label table.

A records directory holds `labels.csv` (columns: id, dataset_tag, then
one 0/1 column per class) and `<id>.npy` for every listed id. All rows
must share a single dataset_tag, because an interchange corpus is
single-dataset by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

LABELS_NAME = "labels.csv"


@dataclass(frozen=True)
class RecordSet:
    ids: tuple[str, ...]
    waveforms: tuple[np.ndarray, ...]
    dataset_tag: str
    classes: tuple[str, ...]
    flags: np.ndarray  # [n, len(classes)] uint8


def load_records(records_dir: str | Path) -> RecordSet:
    records_dir = Path(records_dir)
    table = records_dir / LABELS_NAME
    if not table.is_file():
        raise ValidationError(f"records directory {records_dir} has no {LABELS_NAME}")
    with open(table, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 3 or rows[0][:2] != ["id", "dataset_tag"]:
        raise ValidationError(
            f"{LABELS_NAME} must start with header id,dataset_tag,<classes...>")
    classes = tuple(rows[0][2:])
    body = sorted(rows[1:], key=lambda row: row[0])
    if not body:
        raise ValidationError(f"{LABELS_NAME} lists no records")

    ids, waveforms, tags = [], [], set()
    flags = np.zeros((len(body), len(classes)), dtype=np.uint8)
    seen = set()
    for i, row in enumerate(body):
        if len(row) != 2 + len(classes):
            raise ValidationError(f"{LABELS_NAME} row {row[0]!r} has {len(row)} fields, "
                                  f"expected {2 + len(classes)}")
        rid = row[0]
        if rid in seen:
            raise ValidationError(f"duplicate record id {rid!r}")
        seen.add(rid)
        tags.add(row[1])
        for j, field in enumerate(row[2:]):
            if field not in ("0", "1"):
                raise ValidationError(
                    f"record {rid!r}: class flag must be 0 or 1, got {field!r}")
            flags[i, j] = int(field)
        wave_path = records_dir / f"{rid}.npy"
        if not wave_path.is_file():
            raise ValidationError(f"record {rid!r} listed but {wave_path.name} missing")
        waveform = np.load(wave_path)
        if waveform.ndim != 1 or waveform.size == 0:
            raise ValidationError(
                f"record {rid!r}: waveform must be a non-empty 1-D array, "
                f"got shape {waveform.shape}")
        if not np.isfinite(waveform).all():
            raise ValidationError(f"record {rid!r}: waveform has non-finite samples")
        ids.append(rid)
        waveforms.append(np.asarray(waveform, dtype=np.float32))
    if len(tags) != 1:
        raise ValidationError(
            f"records span several dataset_tags {sorted(tags)}; one corpus "
            f"holds one dataset")
    return RecordSet(tuple(ids), tuple(waveforms), tags.pop(), classes, flags)
