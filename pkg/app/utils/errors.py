# app/utils/errors.py
from typing import List, Optional


class AnalyzerError(Exception):
    """Base class for every error raised by the analyzer"""


class ContractSyntaxError(AnalyzerError):
    """Lexical or syntax error in contract or objective text"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{location}{message}")
        self.message = message


class DuplicateDeclarationError(ContractSyntaxError):
    pass


class ContractValidationError(AnalyzerError):
    """Raised when a contract fails validation; carries every diagnostic"""

    def __init__(self, diagnostics: List["Diagnostic"]):  # noqa: F821
        self.diagnostics = diagnostics
        summary = "; ".join(d.message for d in diagnostics[:3])
        super().__init__(f"{len(diagnostics)} validation error(s): {summary}")


class ObjectiveError(AnalyzerError):
    pass


class SemanticsError(AnalyzerError):
    """Undefined behaviour during execution, e.g. division by zero"""


class GameStructureError(AnalyzerError):
    """Malformed game: cycles where acyclic form is required, bad interchange text"""


class PartitionError(AnalyzerError):
    pass


class ResourceLimitError(AnalyzerError):
    def __init__(self, message: str, limit: int):
        self.limit = limit
        super().__init__(message)


class CorpusError(AnalyzerError):
    pass


class ConfigError(AnalyzerError):
    pass
