"""Frozen-checkpoint extraction: records in, token corpus out.

The encoder never trains here: it is loaded, switched to eval mode, and
driven under no_grad; a parameter hash taken before and after inference
guards the frozen-model contract. Inference runs single-threaded so the
written bytes are identical across reruns.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import torch

from .corpusio import write_token_corpus
from .encoder import MODEL_REGISTRY, PREPROCESSING_VERSION, build_encoder
from .errors import ExtractError, ValidationError
from .records import load_records


@dataclass(frozen=True)
class ExtractionJob:
    """One extraction: which model, which weights, which records, where to."""

    model_id: str
    checkpoint_path: str
    records_dir: str
    out_dir: str
    device: str = "cpu"


def parameter_hash(model: torch.nn.Module) -> str:
    """sha256 over sorted parameter/buffer names and their raw bytes."""
    digest = hashlib.sha256()
    state = model.state_dict()
    for name in sorted(state):
        digest.update(name.encode("utf-8"))
        digest.update(state[name].detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


def _load_model(job: ExtractionJob) -> torch.nn.Module:
    model = build_encoder(job.model_id)
    ckpt = Path(job.checkpoint_path)
    if not ckpt.is_file():
        raise ValidationError(f"checkpoint not found: {ckpt}")
    try:
        state = torch.load(ckpt, map_location=job.device, weights_only=True)
        model.load_state_dict(state, strict=True)
    except (RuntimeError, KeyError, ValueError) as exc:
        raise ValidationError(
            f"checkpoint {ckpt} does not match model {job.model_id!r}: {exc}"
        ) from exc
    return model.to(job.device)


def extract(job: ExtractionJob) -> Path:
    """Run frozen inference over every record and write the corpus dir."""
    model = _load_model(job)
    model.eval()
    hash_before = parameter_hash(model)

    records = load_records(job.records_dir)
    threads_before = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        with torch.no_grad():
            blocks = [
                model(torch.from_numpy(wave).to(job.device))
                .cpu().numpy().astype("float32")
                for wave in records.waveforms
            ]
    finally:
        torch.set_num_threads(threads_before)

    hash_after = parameter_hash(model)
    if hash_after != hash_before:
        raise ExtractError(
            "model parameters changed during extraction; the encoder must stay frozen")

    return write_token_corpus(
        job.out_dir,
        fm_tag=job.model_id,
        dataset_tag=records.dataset_tag,
        ids=list(records.ids),
        token_blocks=blocks,
        classes=records.classes,
        flags=records.flags,
        extra_manifest={
            "preprocessing": PREPROCESSING_VERSION,
            "parameter_hash": hash_before,
        },
    )


__all__ = ["ExtractionJob", "MODEL_REGISTRY", "extract", "parameter_hash"]
