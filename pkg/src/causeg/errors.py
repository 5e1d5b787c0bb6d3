"""Exception hierarchy shared by every module.

Each family maps to a CLI exit code: configuration problems exit with 2,
validation problems with 3, numerical or convergence failures with 4.
"""


class CausegError(Exception):
    exit_code = 1


class ConfigError(CausegError):
    exit_code = 2

    def __init__(self, message, key=None):
        self.key = key
        if key is not None and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)


class ValidationError(CausegError, ValueError):
    exit_code = 3


class SchemaError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class NumericalError(CausegError, ArithmeticError):
    exit_code = 4


class ConvergenceError(NumericalError):
    def __init__(self, message, grad_norm=None):
        self.grad_norm = grad_norm
        if grad_norm is not None:
            message = f"{message} (last gradient norm {grad_norm:.3e})"
        super().__init__(message)
