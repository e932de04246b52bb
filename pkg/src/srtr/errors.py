"""Exception hierarchy shared across the toolkit.

Every error carries a short machine-readable ``kind`` used by the CLI to
print single-line diagnostics (``error: <kind>: <detail>``).
"""


class SrtrError(Exception):
    kind = "error"


# --- DSL front-end ---

class RsmSyntaxError(SrtrError):
    kind = "SyntaxError"

    def __init__(self, message: str, line: int = 0, col: int = 0, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = expected
        where = f" at {line}:{col}" if line else ""
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{message}{where}{hint}")


class RsmTypeError(SrtrError):
    kind = "TypeError"


class UnboundIdentifierError(SrtrError):
    kind = "UnboundIdentifier"


class MissingReturnError(SrtrError):
    kind = "MissingReturn"


class SchemaError(SrtrError):
    kind = "SchemaError"


class SignatureMismatchError(SrtrError):
    kind = "SignatureMismatch"


# --- evaluation ---

class EvalError(SrtrError):
    kind = "EvalError"


class DivisionByZeroError(EvalError):
    kind = "DivisionByZero"


class DomainError(EvalError):
    kind = "DomainError"


class StepError(SrtrError):
    """Wraps an evaluation failure with the timestep it occurred at."""

    kind = "StepError"

    def __init__(self, t: int, cause: Exception):
        self.t = t
        self.cause = cause
        super().__init__(f"step {t}: {cause}")


# --- repair / solving ---

class UnknownStateError(SrtrError):
    kind = "UnknownState"


class NonAffineError(SrtrError):
    kind = "NonAffine"


class SolverError(SrtrError):
    kind = "SolverError"


class NumericalFailure(SolverError):
    kind = "NumericalFailure"


class SmtParseError(SrtrError):
    kind = "ParseError"


class UnsatError(SrtrError):
    kind = "UnsatError"


# --- simulation / CLI ---

class GridTooLargeError(SrtrError):
    kind = "GridTooLarge"


class EmptyScenarioSetError(SrtrError):
    kind = "EmptyScenarioSet"
