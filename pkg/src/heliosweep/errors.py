"""Exception hierarchy shared by all heliosweep modules."""


class HeliosweepError(Exception):
    """Base class for all errors raised by this package."""


# --- container / image I/O ---------------------------------------------------

class BadMagic(HeliosweepError):
    """File does not start with the SOLC magic bytes."""


class UnsupportedVersion(HeliosweepError):
    """Container version byte is not one this build understands."""


class TruncatedPayload(HeliosweepError):
    """Container payload is shorter (or longer) than the header promises."""


class NonFiniteValue(HeliosweepError):
    """Decoded payload contains NaN or infinity."""


class IoFailure(HeliosweepError):
    """Underlying OS-level read/write failed."""


class InvariantViolation(HeliosweepError):
    """An image or mask violates its declared value-range invariants."""


class UnsupportedBitDepth(HeliosweepError):
    """PNG import requires 16-bit samples."""


class UnsupportedColorType(HeliosweepError):
    """PNG import requires a single grayscale channel."""


# --- preprocessing ------------------------------------------------------------

class NoDiskFound(HeliosweepError):
    """Too few bright pixels to locate a solar disk."""


class DegenerateGeometry(HeliosweepError):
    """Detected disk is too small to resample meaningfully."""


# --- cloud synthesis ----------------------------------------------------------

class RecipeTextureMismatch(HeliosweepError):
    """Base texture is smaller than the crop the recipe requires."""


# --- coverage -----------------------------------------------------------------

class EmptyDisk(HeliosweepError):
    """Image has no in-disk pixels to score."""


# --- classical cleaners -------------------------------------------------------

class NeighbourUnavailable(HeliosweepError):
    """No cloud-free temporal neighbour was supplied for this image."""


class MisalignedDisks(HeliosweepError):
    """Two images that must share disk geometry do not."""


class KernelTooLarge(HeliosweepError):
    """Median window exceeds the disk diameter."""


# --- sparse cleaner -----------------------------------------------------------

class TooFewPatches(HeliosweepError):
    """Not enough in-disk patches to train the requested dictionary."""


# --- mask application ---------------------------------------------------------

class ZeroMaskPixel(HeliosweepError):
    """Ratio mask contains a zero inside the disk."""


class KindMismatch(HeliosweepError):
    """Mask kind does not match the operation."""


class MisalignedPair(HeliosweepError):
    """Image pair differs in shape or disk geometry."""


# --- metrics ------------------------------------------------------------------

class ShapeMismatch(HeliosweepError):
    """Arrays being compared differ in shape or geometry."""


# --- dataset ------------------------------------------------------------------

class EmptyInput(HeliosweepError):
    """No usable clean images were found."""


class MissingFile(HeliosweepError):
    """A file referenced by the manifest does not exist."""


class CorruptEntry(HeliosweepError):
    """A manifest entry fails its checksum."""


# --- harness ------------------------------------------------------------------

class UnknownMethod(HeliosweepError):
    """Benchmark method name was not recognized."""


class MissingMaskRun(HeliosweepError):
    """A mask-based method is missing its run directory or a mask file."""
