"""embextract: frozen-checkpoint token-embedding extraction.

Loads a registered encoder architecture with published weights, runs
strictly-frozen inference over prepared waveform records, and writes the
token-level interchange corpus (manifest + float32 blob + offsets +
label table) consumed by downstream benchmarking tools.
"""

from .corpusio import write_token_corpus
from .encoder import MODEL_REGISTRY, EncoderSpec, WaveEncoder, build_encoder
from .errors import ExtractError, ValidationError
from .extract import ExtractionJob, extract, parameter_hash
from .records import RecordSet, load_records

__version__ = "0.1.0"

__all__ = [
    "EncoderSpec",
    "ExtractError",
    "ExtractionJob",
    "MODEL_REGISTRY",
    "RecordSet",
    "ValidationError",
    "WaveEncoder",
    "build_encoder",
    "extract",
    "load_records",
    "parameter_hash",
    "write_token_corpus",
]
