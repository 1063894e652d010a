"""Exception types shared by every pipeline stage.

Each error carries the process exit code the CLI maps it to:
1 usage, 2 data, 3 numeric divergence.
"""


class VizpipeError(Exception):
    exit_code = 2


class UsageError(VizpipeError):
    exit_code = 1


class SchemaError(VizpipeError):
    """Invalid schema config (duplicate names, unknown kinds, ...)."""


class ArityError(VizpipeError):
    """A CSV row's cell count does not match the schema."""


class LabelError(VizpipeError):
    """A label cell is outside the declared class labels."""


class UnlabeledError(VizpipeError):
    """An operation requiring labels met an unlabeled record."""


class EmptyAfterCleaningError(VizpipeError):
    """Cleaning dropped every record or every attribute."""


class SchemaMismatchError(VizpipeError):
    """A fitted model was applied to data with a different schema."""


class LengthMismatchError(VizpipeError):
    """Paired sequences have different lengths."""


class LabelRangeError(VizpipeError):
    """A class index is outside [0, num_classes)."""


class PermutationError(VizpipeError):
    """An attribute order is not a bijection."""


class GeometryError(VizpipeError):
    """Inconsistent layer geometry (dims < 1, window too large, ...)."""


class DivergenceError(VizpipeError):
    """Training loss became non-finite."""

    exit_code = 3


class SidecarError(VizpipeError):
    """Corrupt or internally inconsistent sidecar file."""


class ArchiveError(VizpipeError):
    """Corrupt tensor archive or checkpoint file."""


class SynthSpecError(VizpipeError):
    """Invalid synthetic dataset specification."""
