"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation errors exit with 2,
resource-cap violations with 3 and impossible postselections with 4.
"""


class EpeError(Exception):
    """Base class for all package errors."""


class ValidationError(EpeError, ValueError):
    """Input failed a structural or numerical validation check."""


class DimensionError(ValidationError):
    """Operand sizes or register widths do not match."""


class HermiticityError(ValidationError):
    """An operator that must be Hermitian is not, within tolerance."""


class NormalizationError(ValidationError):
    """A state vector is not normalized within tolerance."""


class SchemaError(ValidationError):
    """A JSON document does not conform to its schema."""


class PreconditionError(ValidationError):
    """A register is not in the state an operation requires."""


class ResourceError(EpeError):
    """A qubit or dimension cap would be exceeded."""


class PostselectionError(EpeError):
    """Postselection onto an outcome of zero probability."""
