"""Exception types raised across the package.

File-system failures use the builtin ``FileNotFoundError`` / ``OSError``;
everything domain-specific lives here so callers can distinguish error
classes without string matching.
"""


class ArtRestoreError(Exception):
    """Base class for all package-specific errors."""


# --- image I/O and geometry ---------------------------------------------

class UnsupportedFormatError(ArtRestoreError):
    """Raster file is not in a supported format (8-bit PNG and friends)."""


class CorruptDataError(ArtRestoreError):
    """File was recognised but its pixel data could not be decoded."""


class InvalidDimensionsError(ArtRestoreError, ValueError):
    """Requested output dimensions are not positive."""


class OutOfBoundsError(ArtRestoreError, ValueError):
    """Crop window falls outside the source image."""


class InvalidModeError(ArtRestoreError, ValueError):
    """Augmentation mode outside 0..7."""


# --- degradation / dataset ----------------------------------------------

class InvalidSpecError(ArtRestoreError, ValueError):
    """Distortion spec has an invalid level, seed, or parameter set."""


class EmptyInputError(ArtRestoreError):
    """Input directory contains no loadable images."""


class ManifestParseError(ArtRestoreError):
    """Manifest line could not be parsed; message names the line number."""


# --- tensor engine --------------------------------------------------------

class ShapeMismatchError(ArtRestoreError, ValueError):
    """Operand shapes are inconsistent with the operation's contract."""


class NonFiniteError(ArtRestoreError, ValueError):
    """NaN or Inf encountered in an input that must be finite."""


class DegenerateBatchError(ArtRestoreError, ValueError):
    """Batch statistics requested over fewer than two samples."""


class InvalidShapeError(ArtRestoreError, ValueError):
    """Weight shape cannot be initialized as requested."""


# --- denoiser model -------------------------------------------------------

class OddDimensionsError(ArtRestoreError, ValueError):
    """Pixel-shuffle downsampling needs even height and width."""


class BadChannelCountError(ArtRestoreError, ValueError):
    """Channel count is not divisible by four."""


class AlreadyFoldedError(ArtRestoreError):
    """Normalization layers were already folded into the convolutions."""


class UnpopulatedStatsError(ArtRestoreError):
    """Running statistics were never updated; folding would be meaningless."""


class CheckpointError(ArtRestoreError):
    """Checkpoint file is structurally invalid."""


class ChecksumError(CheckpointError):
    """Checkpoint is truncated or its CRC-32 trailer does not match."""


class FormatVersionError(CheckpointError):
    """Checkpoint was written by a newer format version."""


# --- training -------------------------------------------------------------

class EmptyTrainSetError(ArtRestoreError):
    """No training (or validation) pairs available for the requested type."""


class DivergenceError(ArtRestoreError):
    """Training loss became non-finite or exploded for several epochs."""


# --- dispatch -------------------------------------------------------------

class NoSpecialistError(ArtRestoreError):
    """No denoiser registered for the requested distortion type."""

    def __init__(self, dtype):
        self.dtype = dtype
        super().__init__(f"no specialist registered for {dtype.name.lower()}")


class TagMismatchError(ArtRestoreError):
    """Checkpoint's specialization tag differs from the registry key."""


# --- metrics --------------------------------------------------------------

class ImageTooSmallError(ArtRestoreError, ValueError):
    """Image is smaller than the metric's sliding window."""


class MissingRestoredFileError(ArtRestoreError):
    """A manifest record has no restored counterpart on disk."""


class EmptyScoresError(ArtRestoreError):
    """Report requested over an empty score list."""
