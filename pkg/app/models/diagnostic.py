from pydantic import BaseModel, ConfigDict, Field
from typing import Optional
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class Diagnostic(BaseModel):
    model_config = ConfigDict(use_enum_values=True)

    message: str = Field(..., min_length=1)
    rule: str
    declaration: Optional[str] = None
    line: int = 0
    column: int = 0
    severity: Severity = Severity.ERROR

    @property
    def is_error(self) -> bool:
        return self.severity == Severity.ERROR

    def render(self, path: str = "<contract>") -> str:
        """file:line:col: message"""
        prefix = "" if self.is_error else "warning: "
        return f"{path}:{self.line}:{self.column}: {prefix}{self.message}"
