"""Exception types shared across the package.

Each class maps to one failure category so callers (and the CLI) can
translate problems into stable machine-readable codes.
"""


class ShapeError(ValueError):
    """Operands have incompatible or invalid dimensions."""

    code = "ESHAPE"


class DomainError(ValueError):
    """A value is outside the mathematical domain of the operation."""

    code = "EDOMAIN"


class SizeError(ValueError):
    """Input exceeds a documented size cap."""

    code = "ESIZE"


class FormatError(ValueError):
    """A file or stream does not match its documented layout."""

    code = "EFORMAT"


class DegenerateGraphError(ValueError):
    """The graph has no usable structure (edgeless, too few vertices)."""

    code = "EDEGENERATE"


class ConfigError(ValueError):
    """Experiment configuration failed validation.

    The message lists every violated field, semicolon separated.
    """

    code = "ECONFIG"
