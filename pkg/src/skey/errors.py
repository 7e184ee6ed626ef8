"""Exception types raised across the package.

Every domain failure maps to one of these; the CLI turns any SkeyError
into exit code 1, usage problems into exit code 2.
"""


class SkeyError(Exception):
    """Base class for all domain errors."""


class UnreadableFile(SkeyError):
    """Audio file missing or not decodable at all."""


class UnsupportedCodec(SkeyError):
    """File container recognized but no decoder is available for it."""


class EmptyAudio(SkeyError):
    """Audio shorter than the minimum duration for the requested use."""


class TooShort(SkeyError):
    """Not enough frames/samples for the requested operation."""


class InvalidTransposition(SkeyError):
    """Transposition crop index outside the supported range."""


class ShapeMismatch(SkeyError):
    """Array shape violates a module contract (hard error, never truncated)."""


class NonFiniteActivation(SkeyError):
    """Model forward produced NaN/Inf activations."""


class NonFiniteLoss(SkeyError):
    """Training loss became NaN/Inf; training aborts with a diagnostic dump."""


class EmptyBatch(SkeyError):
    """Batch-level reduction called with no elements."""


class EmptyCorpus(SkeyError):
    """Training manifest contains no usable records."""


class DegenerateCalibration(SkeyError):
    """Calibration probes cannot be told apart; the model has collapsed."""


class UnparsableLabel(SkeyError):
    """Key label string not understood by the parser."""


class MissingPrediction(SkeyError):
    """A manifest record has no matching prediction."""


class MissingReference(SkeyError):
    """A prediction has no matching reference label in the manifest."""


class IoError(SkeyError):
    """Filesystem problem while writing corpus/cache/report artifacts."""
