"""Exception types raised across the package.

All of them subclass ``ValueError`` (or ``OSError`` for IO) so callers that
only care about "bad input" can catch the builtin.
"""


class DimensionError(ValueError):
    """Operand shapes do not line up."""


class DegenerateInputError(ValueError):
    """Input is well-shaped but numerically unusable (zero norm, all masked...)."""


class StateError(ValueError):
    """Operation applied to an object in the wrong state (e.g. scaled twice)."""


class OrderingError(ValueError):
    """Memory frames appended out of order."""


class EmptyMemoryError(ValueError):
    """A readout was requested against an empty memory bank."""


class AlignmentError(ValueError):
    """Memory node ids are inconsistent across a sequence of affinities."""


class FormatError(ValueError):
    """A tensor file does not follow the STF1 layout."""
