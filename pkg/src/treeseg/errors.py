"""Exception taxonomy for the treeseg package.

Every operation that can fail in a contract-relevant way raises one of
these instead of a bare ValueError, so callers (and the CLI) can map
failures to exit codes without string matching.
"""


class TreesegError(Exception):
    """Base class for all treeseg errors."""


# --- dataset generation / persistence ---------------------------------


class InvalidSpec(TreesegError):
    """A scene spec violates its invariants."""


class CorruptManifest(TreesegError):
    """Dataset manifest is missing, unreadable, or inconsistent."""


class MissingFile(TreesegError):
    """A file listed in a manifest does not exist."""


class EmptyDataset(TreesegError):
    """An operation requiring samples received none."""


# --- model -------------------------------------------------------------


class InputTooSmall(TreesegError):
    """Image smaller than the model's declared minimum input size."""


class UnknownLayer(TreesegError):
    """Requested activation layer is not registered on the model."""


class NonScalarSelector(TreesegError):
    """A gradient-query selector did not reduce outputs to a scalar."""


class DivergedLoss(TreesegError):
    """Training loss became non-finite."""


# --- hierarchy ---------------------------------------------------------


class InsufficientClasses(TreesegError):
    """Hierarchy induction needs at least two classes."""


class DegenerateWeights(TreesegError):
    """A class weight row is zero or non-finite."""


class SchemaMismatch(TreesegError):
    """A persisted hierarchy file fails schema validation."""


# --- tree inference ----------------------------------------------------


class LeafHasNoChildren(TreesegError):
    """A leaf node was used where an inner node is required."""


class HierarchyDimensionMismatch(TreesegError):
    """Hierarchy feature dimension differs from the model's."""


class AllPixelsIgnored(TreesegError):
    """A loss or metric had no valid (non-ignore) pixels."""


# --- minimum required context -----------------------------------------


class CenterOutOfBounds(TreesegError):
    """Crop center lies outside the image."""


class IgnorePixel(TreesegError):
    """Per-pixel context query on an ignore-masked pixel."""


class EmptyInput(TreesegError):
    """Aggregate statistics requested over no data."""


# --- saliency ----------------------------------------------------------


class UnknownClass(TreesegError):
    """Class index out of range for the model."""


class OutOfBounds(TreesegError):
    """Pixel coordinate outside the image."""


class EmptySet(TreesegError):
    """A pixel-set operation received an empty set."""


class NoPixelsOfClass(TreesegError):
    """No pixels carry the requested class in the given map."""


# --- decision rules ----------------------------------------------------


class ResolutionMismatch(TreesegError):
    """Saliency and label grids cannot be aligned."""


class NoRoutedPixels(TreesegError):
    """No pixel's decision path passes through the requested node."""


# --- semantic input removal -------------------------------------------


class EmptyMask(TreesegError):
    """Part-removal mask contains no pixels."""


class PartAbsent(TreesegError):
    """Requested part id appears in no sample."""


class InsufficientParts(TreesegError):
    """Part ranking needs at least two distinct parts."""


# --- CLI ---------------------------------------------------------------


class ConfigInvalid(TreesegError):
    """Run configuration failed validation (CLI exit code 1)."""
