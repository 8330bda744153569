"""Exception hierarchy shared by every module of the package."""


class EwensTreeError(Exception):
    """Base class for all domain errors raised by this package."""


class EmptyDomainError(EwensTreeError, ValueError):
    """An operation was asked to work on an empty sample or region."""


class ConstraintError(EwensTreeError, ValueError):
    """A value violates the invariant of its type."""


class ResourceBoundError(EwensTreeError):
    """An exhaustive enumeration would exceed its configured budget."""


class DuplicateVertexError(EwensTreeError, ValueError):
    pass


class DetachedVertexError(EwensTreeError, ValueError):
    pass


class MissingSpinError(EwensTreeError, KeyError):
    pass


class MissingFieldError(EwensTreeError, KeyError):
    pass


class StructuralError(EwensTreeError, ValueError):
    """A growth step and a configuration do not fit together."""
