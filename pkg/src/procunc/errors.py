"""Exception hierarchy shared by all procunc modules."""


class ProcuncError(Exception):
    """Base class for library errors."""


class DimensionError(ProcuncError, ValueError):
    """Operator or vector shapes do not match the declared subsystem dims."""


class NotPSDError(ProcuncError, ValueError):
    """An operator required to be positive semidefinite has a negative eigenvalue."""


class ValidationError(ProcuncError, ValueError):
    """An object fails its invariants (trace preservation, completeness, ...)."""


class InconsistencyError(ProcuncError, RuntimeError):
    """A derived quantity breaks an invariant that valid inputs guarantee."""


class EnumerationCapError(ProcuncError, ValueError):
    """Subset enumeration would exceed the configured cap."""


class SolverError(ProcuncError, RuntimeError):
    """The SDP backend failed to produce a certified solution."""

    def __init__(self, message, subset=None):
        super().__init__(message)
        self.subset = subset


class InputError(ProcuncError, ValueError):
    """Unreadable, malformed, or unresolvable input document."""
