"""
Helper utilities for the contract analyzer
"""

import time
from contextlib import contextmanager
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Union

from app.models.diagnostic import Diagnostic

Number = Union[int, Fraction, float]


class Helpers:
    """Utility helper class"""

    @staticmethod
    def format_rational(value: Optional[Number], digits: int = 4) -> str:
        """Exact form plus a decimal approximation when the value is not an integer"""
        if value is None:
            return "-"
        if isinstance(value, float):
            return f"{value:.{digits}f}"
        value = Fraction(value)
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value} (~{float(value):.{digits}f})"

    @staticmethod
    def format_bounds(lower: Number, upper: Number) -> str:
        return f"[{Helpers.format_rational(lower)}, {Helpers.format_rational(upper)}]"

    @staticmethod
    def format_elapsed(seconds: float) -> str:
        if seconds < 1:
            return f"{seconds * 1000:.0f}ms"
        if seconds < 60:
            return f"{seconds:.2f}s"
        minutes, rest = divmod(seconds, 60)
        return f"{int(minutes)}m{rest:.0f}s"

    @staticmethod
    @contextmanager
    def timer() -> Iterator[List[float]]:
        """Yields a one-element list that holds the elapsed seconds on exit"""
        elapsed = [0.0]
        started = time.perf_counter()
        try:
            yield elapsed
        finally:
            elapsed[0] = time.perf_counter() - started

    @staticmethod
    def render_diagnostics(diagnostics: Sequence[Diagnostic], path: str = "<input>") -> str:
        return "\n".join(d.render(path) for d in diagnostics)

    @staticmethod
    def truncate_text(text: str, max_length: int = 100) -> str:
        """Truncate text with ellipsis"""
        if len(text) <= max_length:
            return text
        return text[:max_length - 3] + "..."


# Export singleton instance
helpers = Helpers()
