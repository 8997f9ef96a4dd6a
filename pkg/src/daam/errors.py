"""Exception types shared across the package.

Every error class carries a short machine-readable ``code`` so the CLI can
map failures to stable exit codes and emit parseable diagnostics.
"""


class DaamError(Exception):
    """Base class for all package errors."""

    code = "error"


class ModelParseError(DaamError):
    """A model file could not be parsed; message carries line/field location."""

    code = "parse_error"


class ModelValidationError(DaamError):
    """A model document parsed but violates a structural invariant."""

    code = "validation_error"


class SingularDaamError(DaamError):
    """The authority matrix is numerically singular where it must not be."""

    code = "singular_daam"


class InfeasibleDemandError(DaamError):
    """The requested generalized force has no feasible actuator state."""

    code = "infeasible_demand"


class AllSingularError(DaamError):
    """Every feasible point of the fiber is authority-deficient."""

    code = "all_singular"


class SliceSpecError(DaamError):
    """A landscape slice specification is malformed or inconsistent."""

    code = "slice_error"
