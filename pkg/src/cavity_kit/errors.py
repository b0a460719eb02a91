"""Exception hierarchy shared by all cavity_kit modules."""


class CavityKitError(Exception):
    """Base class for domain errors raised by cavity_kit."""


class InvalidParameters(CavityKitError, ValueError):
    pass


class SingularKernel(CavityKitError, ArithmeticError):
    pass


class DivergentIntegral(CavityKitError, ArithmeticError):
    pass


class QuadratureNotConverged(CavityKitError, ArithmeticError):
    pass


class NotConverged(CavityKitError, ArithmeticError):
    pass


class NoThreshold(CavityKitError):
    """Raised when the photon-mediated interaction is not attractive."""


class ModelEvaluationFailed(CavityKitError):
    pass


class MaxIterations(CavityKitError):
    pass


class SingularJacobian(CavityKitError):
    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class FitDegenerate(CavityKitError):
    pass


class NoPeak(CavityKitError):
    pass


class GridTooCoarse(CavityKitError, ValueError):
    pass


class NegativeRadicand(CavityKitError, ValueError):
    pass


class PerturbationInvalid(CavityKitError):
    pass


class StepSizeUnderflow(CavityKitError):
    pass


class NoOnset(CavityKitError):
    pass
