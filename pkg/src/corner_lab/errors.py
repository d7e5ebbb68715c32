"""Exception types raised across corner_lab."""


class CornerLabError(Exception):
    pass


class DependentBasis(CornerLabError, ValueError):
    pass


class DegenerateCharacter(CornerLabError, ValueError):
    pass


class MismatchedLinearParts(CornerLabError, ValueError):
    pass


class NotContained(CornerLabError, ValueError):
    pass


class DimensionTooLarge(CornerLabError, ValueError):
    pass


class EmptyLattice(CornerLabError, ValueError):
    pass


class ZeroDensity(CornerLabError, ValueError):
    pass


class EmptySet(CornerLabError, ValueError):
    pass


class OutOfRange(CornerLabError, ValueError):
    pass


class PreconditionNotMet(CornerLabError):
    pass


class AlreadyUniform(CornerLabError):
    pass


class TooLarge(CornerLabError, ValueError):
    pass


class PropertyViolation(CornerLabError):
    """A lemma's conclusion failed an exact recount at the configured constants."""


class NoIncrementFound(PropertyViolation):
    pass


class NoGoodCell(PropertyViolation):
    pass


class ParseError(CornerLabError, ValueError):
    pass


class ValidationError(CornerLabError, ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DimensionExhausted(CornerLabError):
    """A refinement would have to split a cell below the minimum dimension."""
