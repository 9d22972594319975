from typing import Optional


class EigenCertError(Exception):
    pass


class InvalidArgumentError(EigenCertError, ValueError):
    pass


class MeshParseError(EigenCertError, ValueError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f'line {line_number}: {message}')
        self.line_number = line_number


class MeshValidationError(EigenCertError, ValueError):
    pass


class EmptySystemError(EigenCertError, ValueError):
    pass


class MissingConstantError(EigenCertError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ''


class NumericalError(EigenCertError, ArithmeticError):
    pass


class IllConditionedBasisError(NumericalError):
    pass


class ConditionViolatedError(NumericalError):
    pass


class ClusterGapViolatedError(EigenCertError):
    pass


class SeparationViolatedError(EigenCertError):
    pass


class TauWindowError(EigenCertError):
    def __init__(self, message: str, argmax_index: int):
        super().__init__(message)
        self.argmax_index = argmax_index


class OrderingError(EigenCertError):
    pass


class ConfigurationError(EigenCertError, ValueError):
    pass


class InsufficientDataError(EigenCertError, ValueError):
    pass


class PipelineError(EigenCertError):
    """Module error re-raised with the (level, cluster) coordinates of the failing step."""

    def __init__(self, cause: Exception, level: int, cluster: Optional[int] = None):
        where = f'level {level}' if cluster is None else f'level {level}, cluster {cluster}'
        super().__init__(f'{where}: {type(cause).__name__}: {cause}')
        self.cause = cause
        self.level = level
        self.cluster = cluster


# failures that a report records as a marker instead of aborting the run
GAP_ERRORS = (ClusterGapViolatedError, SeparationViolatedError)
