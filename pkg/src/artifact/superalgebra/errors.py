class SuperAlgebraError(ValueError):
    """Base class for superalgebra failures."""


class GeneratorCountMismatch(SuperAlgebraError):
    pass


class ZeroBody(SuperAlgebraError):
    """Raised when inverting a Grassmann number whose body vanishes."""


class SingularBlock(SuperAlgebraError):
    """det(A)_body * det(B)_body == 0 where a superdeterminant is requested."""


class SingularBody(SuperAlgebraError):
    """A matrix whose body is not invertible was asked to be inverted."""


class ParityError(SuperAlgebraError):
    """Mixed or inconsistent Z2 grading."""


class SymmetryViolation(SuperAlgebraError):
    """Input lacks the (anti)symmetry a canonical form requires."""
