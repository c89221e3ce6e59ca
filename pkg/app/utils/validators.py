from fastapi import HTTPException
from fractions import Fraction
from typing import Dict, Iterable, Optional, Tuple
import re
from pathlib import Path

from app.utils.errors import ConfigError

OVERRIDE_PATTERN = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$')


class Validators:
    """Request and command-line validation utilities"""

    @staticmethod
    def validate_contract_path(path: str) -> tuple[bool, Optional[str]]:
        """
        Validate a contract source path
        Returns: (is_valid, error_message)
        """
        if not path:
            return False, "No contract file given"
        file = Path(path)
        if not file.is_file():
            return False, f"Contract file not found: {path}"
        if file.suffix.lower() != ".qsc":
            return False, f"Contract files use the .qsc extension, got '{file.suffix or path}'"
        return True, None

    @staticmethod
    def validate_party_count(k: int, literals: Iterable[str], party: str) -> tuple[bool, Optional[str]]:
        """The bound k must leave room for every party literal plus the analyzed party"""
        named = {name for name in literals if name != party}
        if k < 1:
            return False, "the number of parties must be at least 1"
        if k < len(named) + 1:
            return False, f"k={k} is smaller than the {len(named) + 1} parties named by the contract"
        return True, None

    @staticmethod
    def validate_gap(text: str) -> tuple[bool, Optional[str]]:
        """Target gap: a non-negative rational such as 0, 1/2 or 0.25"""
        try:
            gap = Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            return False, f"not a rational number: {text!r}"
        if gap < 0:
            return False, "the target gap must be non-negative"
        return True, None

    @staticmethod
    def parse_override(text: str) -> Tuple[str, Tuple[int, int]]:
        """Parse NAME=LO..HI"""
        match = OVERRIDE_PATTERN.match(text)
        if not match:
            raise ConfigError(f"override must look like NAME=LO..HI, got {text!r}")
        name, lo, hi = match.group(1), int(match.group(2)), int(match.group(3))
        if lo > hi:
            raise ConfigError(f"override {name}={lo}..{hi} is an empty range")
        return name, (lo, hi)

    @staticmethod
    def parse_overrides(items: Iterable[str]) -> Dict[str, Tuple[int, int]]:
        overrides: Dict[str, Tuple[int, int]] = {}
        for item in items:
            name, bounds = Validators.parse_override(item)
            if name in overrides:
                raise ConfigError(f"override for '{name}' given twice")
            overrides[name] = bounds
        return overrides

    @staticmethod
    def validate_objective(text: str, max_length: int = 500) -> bool:
        if not text:
            return False
        return 0 < len(text.strip()) <= max_length


# Convenience function for raising validation errors
def raise_validation_error(message: str, field: Optional[str] = None):
    """Raise HTTPException with validation error"""
    detail = {"message": message}
    if field:
        detail["field"] = field
    raise HTTPException(status_code=422, detail=detail)


def to_http_exception(error: Exception) -> HTTPException:
    """HTTP status for an analyzer error"""
    from app.utils.errors import (
        ContractSyntaxError, ContractValidationError, CorpusError, ResourceLimitError,
    )
    if isinstance(error, ContractSyntaxError):
        return HTTPException(status_code=400, detail={
            "message": error.message, "line": error.line, "column": error.column,
        })
    if isinstance(error, ContractValidationError):
        return HTTPException(status_code=400, detail={
            "message": str(error),
            "diagnostics": [d.model_dump() for d in error.diagnostics],
        })
    if isinstance(error, CorpusError):
        return HTTPException(status_code=404, detail={"message": str(error)})
    if isinstance(error, ResourceLimitError):
        return HTTPException(status_code=413, detail={"message": str(error), "limit": error.limit})
    return HTTPException(status_code=400, detail={"message": str(error)})
