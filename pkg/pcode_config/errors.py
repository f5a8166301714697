"""
Error hierarchy shared by every pcode package.

Each error carries the process exit code the CLI uses when it escapes a command.
"""
from typing import Iterable, List, Tuple


class PcodeError(Exception):
    """Base class for all expected failures"""

    exit_code: int = 1


class ConfigError(PcodeError, ValueError):
    """Invalid configuration, layout, vocabulary or mode"""

    exit_code = 2


class InputTooLongError(ConfigError):
    """Sequence exceeds the model's maximum length"""

    def __init__(self, length: int, limit: int):
        self.length = length
        self.limit = limit
        super().__init__(f"Input of length {length} exceeds max_seq_len={limit}")


class LayoutMismatchError(ConfigError):
    """Template layout does not match the number of input segments"""


class DataError(PcodeError):
    """Invalid or insufficient data"""

    exit_code = 3


class RecordValidationError(DataError):
    """One or more records failed schema validation"""

    def __init__(self, path: str, problems: Iterable[Tuple[int, str, str]]):
        self.path = path
        self.problems: List[Tuple[int, str, str]] = list(problems)
        lines = [f"  line {line}: {field}: {message}" for line, field, message in self.problems]
        super().__init__(f"{len(self.problems)} invalid record(s) in {path}:\n" + "\n".join(lines))


class EmptyTargetError(DataError):
    """Target sequence has no non-PAD token"""


class IncompatibleCheckpointError(DataError):
    """Checkpoint does not match the model it is loaded into"""

    def __init__(self, offending: Iterable[str]):
        self.offending = sorted(offending)
        super().__init__("Incompatible checkpoint: " + ", ".join(self.offending))


class NumericError(PcodeError, ArithmeticError):
    """Non-finite logits or loss"""

    exit_code = 4
