class LearningCurveError(Exception):
    """Base class for every error raised by lcurve."""
    exit_code = 3


# ─── Numeric failures (exit code 3) ───────────────────────────

class NotPositiveDefinite(LearningCurveError):
    pass


class SingularCovariance(LearningCurveError):
    pass


class DegenerateData(LearningCurveError):
    pass


class DomainError(LearningCurveError):
    pass


class DimensionMismatch(LearningCurveError):
    pass


class OneClassOnly(LearningCurveError):
    def __init__(self, message: str, label: int):
        super().__init__(message)
        self.label = label


class EmptyStratum(LearningCurveError):
    pass


class InsufficientPoints(LearningCurveError):
    pass


class OutOfRange(LearningCurveError):
    pass


class StudyFailure(LearningCurveError):
    def __init__(self, failures: list[tuple[int, str]]):
        self.failures = failures
        listed = "; ".join(f"replicate {idx}: {msg}" for idx, msg in failures[:5])
        more = f" (+{len(failures)-5} more)" if len(failures) > 5 else ""
        super().__init__(f"{len(failures)} replicate(s) failed: {listed}{more}")


# ─── Input failures (exit code 2) ─────────────────────────────

class ConfigError(LearningCurveError):
    exit_code = 2

    def __init__(self, message: str, line: int=None, field: str=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(f"{prefix}{message}")


class DataError(LearningCurveError):
    exit_code = 2
