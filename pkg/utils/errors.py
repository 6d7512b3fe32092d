from typing import List, Optional, Sequence


class ConfigError(ValueError):
    """Invalid run configuration. All problems are collected before raising."""

    def __init__(self, messages: Sequence[str]):
        self.messages: List[str] = list(messages)
        super().__init__("Invalid configuration:\n" + "\n".join(f"  - {m}" for m in self.messages))


class DatasetSchemaError(ValueError):
    """An observation file does not match the expected schema."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class RankDeficiencyError(ValueError):
    """The fixed-effect design matrix does not have full column rank."""

    def __init__(self, columns: Sequence[str]):
        self.columns: List[str] = list(columns)
        super().__init__(f"Fixed-effect design is rank deficient; collinear columns: {', '.join(self.columns)}")


class SingularSystemError(ValueError):
    """X' V*^-1 X could not be factorized at the requested variance ratios."""
