from __future__ import annotations


__all__ = [
    "ConfigError",
    "NumericalError",
    "GuardError",
    "DivergenceError",
    "ConvergenceError",
    "DefectiveMatrixError",
    "OutputError",
    "PhaseConditionWarning",
    "exit_code",
]


class ConfigError(ValueError):
    """
    Raised when a run configuration cannot be accepted: malformed JSON,
    schema violations, unknown presets or bad command line overrides.
    """


class NumericalError(Exception):
    """
    Base class of every failure detected while computing: tripped guards,
    divergence, non converging iterations and ill conditioned
    eigenproblems.
    """


class GuardError(NumericalError, ValueError):
    """
    Raised when a requested computation would violate an accuracy, step
    size, causal padding or resource guard.
    """


class DivergenceError(NumericalError, FloatingPointError):
    """Raised when non-finite values show up in a solution."""


class ConvergenceError(NumericalError, RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""


class DefectiveMatrixError(NumericalError, RuntimeError):
    """
    Raised when the eigenvector matrix of a non-Hermitian Hamiltonian is
    too ill conditioned to be trusted for spectral synthesis.
    """


class OutputError(OSError):
    """Raised when results cannot be written to the output directory."""


class PhaseConditionWarning(UserWarning):
    """
    Emitted when the round trip phase between the two atomic sites is not
    an odd multiple of pi, i.e. the reflected field adds constructively.
    """


def exit_code(exc: BaseException) -> int:
    """
    Map an exception raised while running a configuration to the command
    line exit code.

    :param exc: The exception to classify.
    :return: 3 for numerical failures, 4 for I/O failures, 2 for
             configuration and parameter errors, 1 otherwise.
    """
    if isinstance(exc, NumericalError):
        return 3
    if isinstance(exc, OSError):
        return 4
    if isinstance(exc, (ConfigError, ValueError)):
        return 2
    return 1
