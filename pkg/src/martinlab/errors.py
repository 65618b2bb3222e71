"""Exception taxonomy shared by all modules.

Exit-code mapping used by the CLI: input/contract violations exit 1,
resource/precision failures exit 2.
"""


class MartinLabError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class SchemaError(MartinLabError):
    """Malformed input document (kernel or walk schema)."""


class DomainError(MartinLabError):
    """Argument outside the mathematical domain of the operation."""


class PreconditionError(MartinLabError):
    """A documented precondition of the operation does not hold."""


class RangeError(MartinLabError):
    """Index or prefix size out of range."""


class ClassError(MartinLabError):
    """Kernel mass class (markov / sub-markov) unsuitable for the operation."""


class PrimitivityError(MartinLabError):
    """Matrix is not primitive: no positive power, or dominant pair tied/complex."""


class LevelError(MartinLabError):
    """Tilt point is not on the unit level set of the dominant eigenvalue."""


class AssumptionError(MartinLabError):
    """Compactness / below-one-minimum assumptions fail for this kernel."""


class RecurrenceError(MartinLabError):
    """Green-function ratio requested for a chain whose series diverges."""


class ContradictionError(MartinLabError):
    """Internal consistency violated (indicates a solver failure upstream)."""


class ResourceError(MartinLabError):
    """Computation exceeds the configured memory/size budget."""

    exit_code = 2


class ToleranceError(MartinLabError):
    """Iterative bracketing did not reach the requested tolerance."""

    exit_code = 2


class NumericalError(MartinLabError):
    """Iteration failed to converge within its budget."""

    exit_code = 2


class StatisticalError(MartinLabError):
    """Monte Carlo budget too small for the requested precision."""

    exit_code = 2
