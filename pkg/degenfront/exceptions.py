"""
Error types raised by the degenfront services.

Every error carries a human-readable ``detail`` and the process ``exit_code``
the CLI should return when it escapes a subcommand.
"""
from typing import Any, Dict, Optional

from degenfront.constants.defaults import ExitCode


class DegenfrontError(Exception):
    exit_code: int = ExitCode.NUMERICAL_FAILURE

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context: Dict[str, Any] = context

    def __str__(self) -> str:
        if not self.context:
            return self.detail
        extras = ", ".join(f"{key}={value}" for key, value in self.context.items())
        return f"{self.detail} ({extras})"


class ConfigError(DegenfrontError):
    exit_code = ExitCode.CONFIG_ERROR

    def __init__(self, detail: str, key: Optional[str] = None, **context: Any):
        super().__init__(detail, **context)
        self.key = key

    def __str__(self) -> str:
        base = super().__str__()
        return f"{self.key}: {base}" if self.key else base


class NumericalError(DegenfrontError):
    exit_code = ExitCode.NUMERICAL_FAILURE


class QuadratureError(NumericalError):
    pass


class BalanceError(NumericalError):
    pass


class ProfileError(NumericalError):
    pass


class DiscretizationError(NumericalError):
    pass


class SpectrumError(NumericalError):
    pass


class ProjectionError(NumericalError):
    pass


class ResolventError(NumericalError):
    pass


class EvolutionError(NumericalError):
    pass


class DecayFitError(NumericalError):
    pass


class ArtifactError(DegenfrontError):
    exit_code = ExitCode.NUMERICAL_FAILURE

    def __init__(self, detail: str, path: Optional[str] = None, line: Optional[int] = None, **context: Any):
        super().__init__(detail, **context)
        self.path = path
        self.line = line

    def __str__(self) -> str:
        where = self.path or "<artifact>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        return f"{where}: {super().__str__()}"
