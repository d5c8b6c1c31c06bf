"""Exception hierarchy shared across the package."""


class BenchError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BenchError):
    """Bad inputs: malformed corpora, configs, or violated preconditions."""


class TierUnsatisfiableError(ValidationError):
    """The corpus is too small to populate the requested size tier."""


class FoldInfeasibleError(ValidationError):
    """Too few positive (or negative) samples to stratify the requested folds."""


class StageError(BenchError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
