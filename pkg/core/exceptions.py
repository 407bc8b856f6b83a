'''
Errors raised by the precoding library. Input problems subclass ValueError,
numerical failures subclass RuntimeError.
'''


class CiblpError(Exception):
    pass


class DimensionError(CiblpError, ValueError):
    pass


class DomainError(CiblpError, ValueError):
    pass


class ConfigError(CiblpError, ValueError):
    pass


class SingularBasisError(CiblpError, ValueError):
    pass


class GeometryError(CiblpError, RuntimeError):
    pass


class QpAssemblyError(CiblpError, RuntimeError):
    pass


class FactorizationError(CiblpError, RuntimeError):
    pass


class DegenerateSolutionError(CiblpError, RuntimeError):
    pass


class PrecoderError(CiblpError, RuntimeError):
    pass


class OracleConvergenceError(CiblpError, RuntimeError):
    '''
    Raised when the projected-gradient oracle hits its iteration cap.

    Params:
        best_iterate (array): feasible point with the smallest gradient
            mapping norm seen
        gradient_norm (float): gradient mapping norm at best_iterate
    '''

    def __init__(self, message, best_iterate, gradient_norm):
        super().__init__(message)
        self.best_iterate = best_iterate
        self.gradient_norm = gradient_norm
