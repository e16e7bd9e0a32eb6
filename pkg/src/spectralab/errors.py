"""Exception taxonomy shared by all modules.

Validation errors (bad inputs, unmet preconditions) carry exit code 2;
numerical failures (quadrature, conditioning) carry exit code 3.
"""


class SpectralabError(Exception):
    exit_code = 2


class ValidationError(SpectralabError):
    exit_code = 2


class NumericalError(SpectralabError):
    exit_code = 3


class NonPositiveOperator(ValidationError):
    """Spectrum has an eigenvalue <= 0 where positivity is required."""


class NonPositiveShiftedOperator(ValidationError):
    """lambda_shift is not strictly below the bottom of the spectrum."""


class CutoffTooSmall(ValidationError):
    """Requested enumeration cannot be completed below the cutoff."""


class AboveCutoff(ValidationError):
    """Query point lies above the enumerated part of the spectrum."""


class UnsupportedModel(ValidationError):
    """Operation has no implementation for this model family."""


class BoseDivergence(ValidationError):
    """Bose occupation diverges: mu >= sqrt(lambda_min)."""


class InsufficientOrder(ValidationError):
    """Asymptotic subtraction order too low for the requested exponent."""


class PoleOfZeta(ValidationError):
    """Continued zeta function has a genuine pole at the requested point."""


class WrongAlgebraicStructure(ValidationError):
    """Matrix data does not satisfy the algebra assumed by the formula."""


class NotElliptic(ValidationError):
    """Ellipticity certificate failed on the direction mesh."""


class SpectralSymmetryRequired(ValidationError):
    """Operation needs a +/- symmetric eigenvalue set (twist 0 or 1/2)."""


class NonCommutingPair(ValidationError):
    """Pair members do not share a mode basis / lattice."""


class NonIntegrableDiagonal(ValidationError):
    """Kernel diagonal is translation invariant; use per-volume mode."""


class CurvedScopeUnsupported(ValidationError):
    """Curved-space input outside the flat implementation scope."""


class TailTooLarge(NumericalError):
    """Truncation tail bound exceeds the requested tolerance."""


class QuadratureFailure(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class IllConditioned(NumericalError):
    """Fit design matrix condition number above 1e12."""


class RankDeficient(NumericalError):
    """Fit design matrix is rank deficient."""


class ContourTooShort(NumericalError):
    """Truncated contour tail bound exceeds the requested tolerance."""


class ContourWinding(NumericalError):
    """log det developed nonzero winding along the contour."""


class BudgetExceeded(ValidationError):
    """Estimated operation count exceeds the caller-supplied budget."""


class PositivityCertificateFailed(ValidationError):
    """A required positive-definiteness certificate could not be established."""


class SingularD(NumericalError):
    """The combined width matrix of a kernel pair is numerically singular."""
