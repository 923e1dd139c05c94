"""Exception hierarchy shared by every stage of the pipeline."""


class PosContractError(Exception):
    """Base class for all errors raised by :mod:`poscontract`."""


class NonConvergence(PosContractError):
    """The dense eigensolver failed to converge."""


class NotHermitian(PosContractError, ValueError):
    """An operand expected to be Hermitian is not, beyond tolerance."""


class NotPSD(PosContractError, ValueError):
    """An operand expected to be positive semidefinite has a negative eigenvalue."""


class SingularOperand(PosContractError):
    """An operand that must be positive definite is numerically singular."""


class DomainError(PosContractError, ValueError):
    """A scalar argument lies outside its admissible range."""


class CharacterizationError(PosContractError):
    """The input violates a necessary condition for being a product of two
    positive contractions.

    ``condition`` names the violated condition in a form suitable for reports.
    """

    condition = "characterization"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class NotAContraction(CharacterizationError):
    condition = "contraction"


class ComplexOrNegativeSpectrum(CharacterizationError):
    condition = "spectrum in [0, 1]"


class NotDiagonalizable(CharacterizationError):
    condition = "diagonalizable"


class ResidualTooLarge(CharacterizationError):
    condition = "canonical zero blocks"


class DefectiveBlock(PosContractError):
    """An eigenspace has the wrong dimension for its cluster multiplicity."""


class GammaNotPD(PosContractError):
    """The block-diagonal solution is numerically singular."""


class CertificationFailure(PosContractError):
    """Constructed factors fail the PSD, contraction or product checks.

    The offending :class:`~poscontract.factors.Decomposition` is attached as
    ``decomposition`` so callers can report the measured residuals.
    """

    def __init__(self, message, decomposition=None, violations=()):
        super().__init__(message)
        self.decomposition = decomposition
        self.violations = list(violations)


class NotTwoPointSpectrum(PosContractError, ValueError):
    """``(B - aI)(B - bI)`` does not vanish."""


class ConditionCViolated(PosContractError):
    """The contraction passed to the dilation builder does not satisfy the
    intertwining relation or the matrix inequality it is required to."""


class ParseError(PosContractError, ValueError):
    """A matrix file could not be parsed."""


class DimensionMismatch(PosContractError, ValueError):
    """Matrix dimensions are inconsistent."""
