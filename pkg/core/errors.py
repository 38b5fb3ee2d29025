"""Custom exceptions for the single-index checking engine."""


class SimCheckError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SimCheckError, ValueError):
    """An input lies outside the domain of an operation (NaN, inf, bad ranks)."""


class DimensionError(SimCheckError, ValueError):
    """Array shapes do not line up."""


class DegenerateDirectionError(SimCheckError, ValueError):
    """A candidate direction has zero (or non-finite) norm."""


class IdentificationError(SimCheckError, ValueError):
    """A direction has a zero first component and cannot be sign-identified."""

    def __init__(self, beta):
        self.beta = tuple(float(b) for b in beta)
        super().__init__(
            f"Direction {self.beta} has first component 0; "
            "the first component must be nonzero to fix the sign"
        )


class DegenerateCovariateError(SimCheckError, ValueError):
    """A covariate column has zero sample variance."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"Covariate column {column} has zero variance")


class DegenerateStatisticError(SimCheckError):
    """The variance estimate v_n vanished, so T_n is undefined."""

    def __init__(self, i_n: float, message: str = ""):
        self.i_n = i_n
        super().__init__(
            message or f"Degenerate statistic: v_n = 0 (I_n = {i_n!r}); "
            "are all responses equal?"
        )


class EstimationError(SimCheckError):
    """Every optimizer start failed to produce a usable index estimate."""

    def __init__(self, estimator: str, diagnostics: list[str]):
        self.estimator = estimator
        self.diagnostics = diagnostics
        super().__init__(
            f"Estimator '{estimator}' failed on all starts: " + "; ".join(diagnostics)
        )


class SpecError(SimCheckError):
    """An error-severity diagnostic check failed and the run cannot proceed."""

    def __init__(self, rule_id: str, message: str, suggested_fix: str = ""):
        self.rule_id = rule_id
        self.message = message
        self.suggested_fix = suggested_fix
        super().__init__(f"Spec '{rule_id}' failed: {message}")


class ConfigError(SimCheckError):
    """Invalid or missing run configuration."""


class DataFileError(SimCheckError):
    """A dataset file could not be parsed."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
