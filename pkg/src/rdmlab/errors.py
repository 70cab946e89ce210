"""Exception hierarchy.

Three base classes map onto the CLI / service error kinds:

* ``ValidationError``  -- malformed or out-of-contract input (exit code 2),
* ``SolverStall``      -- an iterative solver missed its certificate (exit 3),
* ``InfeasibleError``  -- a well-formed but infeasible / out-of-domain
  request (exit 4).
"""


class RdmLabError(Exception):
    """Base class for all package errors."""


class ValidationError(RdmLabError):
    """Input violates a documented precondition or invariant."""


class InfeasibleError(RdmLabError):
    """Input is well-formed but the requested object does not exist."""


class SolverStall(RdmLabError):
    """An iterative solver did not reach its certified tolerance.

    Carries the best report achieved so callers can inspect how close the
    run got.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# -- fock ------------------------------------------------------------------

class NonIncreasingOrbitals(ValidationError):
    pass


class OrbitalOutOfRange(ValidationError):
    pass


class LinearlyDependentOrbitals(ValidationError):
    pass


class DimensionTooLarge(ValidationError):
    pass


class NonHermitianInput(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


# -- rdm -------------------------------------------------------------------

class WrongSectorDimension(ValidationError):
    pass


class InfeasibleSpectrum(InfeasibleError):
    pass


class NotRepresentable(InfeasibleError):
    pass


class DimensionTooSmallForTelescope(ValidationError):
    def __init__(self, d, minimal):
        super().__init__(
            f"telescope construction needs d >= {minimal} basis vectors, got d={d}"
        )
        self.minimal = minimal


# -- xspace ----------------------------------------------------------------

class ShapeMismatch(ValidationError):
    pass


class NonPositiveT(ValidationError):
    pass


class NonHermitianReconstruction(ValidationError):
    pass


class InfeasibleOffset(InfeasibleError):
    def __init__(self, message, kernel_requirement=None):
        super().__init__(message)
        self.kernel_requirement = kernel_requirement


class NotUnitVector(ValidationError):
    pass


# -- optim -----------------------------------------------------------------

class BracketInfeasible(InfeasibleError):
    pass


# -- density ---------------------------------------------------------------

class InvalidPVM(ValidationError):
    pass


class UnfaithfulPVM(ValidationError):
    pass


class NegativeDensity(ValidationError):
    pass


class OutOfDomain(InfeasibleError):
    pass


# -- bundle / cli ----------------------------------------------------------

class BundleFormatError(ValidationError):
    pass


class SpinRequiredForU(ValidationError):
    pass
