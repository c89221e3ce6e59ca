# app/models/analysis.py
from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator, WithJsonSchema, field_validator, model_validator
from typing import Annotated, Any, Dict, List, Optional, Tuple
from fractions import Fraction
from enum import Enum

from app.config import settings


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("expected a rational number")
    if isinstance(value, (int, str)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a rational number: {value!r}") from e
    if isinstance(value, float):
        return Fraction(str(value))
    raise ValueError(f"not a rational number: {value!r}")


# Exact rationals travel as strings such as "10/3"
Rational = Annotated[
    Fraction,
    PlainValidator(_to_fraction),
    PlainSerializer(str, return_type=str),
    WithJsonSchema({"type": "string", "examples": ["10/3", "-1", "0"]}),
]


class Verdict(str, Enum):
    CONVERGED = "converged"
    GAP_REACHED = "gap-reached"
    CAPPED = "capped"


class ValueBounds(BaseModel):
    """Bounds on the contract value after one abstraction pass"""
    iteration: int = Field(..., ge=0)
    states: int = Field(..., ge=0)
    lower: Rational
    upper: Rational
    elapsed: float = Field(0.0, ge=0)
    refined_label: Optional[int] = None

    @model_validator(mode="after")
    def check_order(self):
        if self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
        return self

    @property
    def gap(self) -> Fraction:
        return self.upper - self.lower


class AnalysisConfig(BaseModel):
    """One analysis request; either a contract file or inline source"""
    contract_path: Optional[str] = None
    source: Optional[str] = None
    party: str = Field(..., min_length=1)
    objective: str = Field(..., min_length=1)
    parties: int = Field(default_factory=lambda: settings.DEFAULT_PARTIES, ge=1)
    granularity: int = Field(default_factory=lambda: settings.DEFAULT_GRANULARITY, ge=1)
    max_iters: int = Field(default_factory=lambda: settings.DEFAULT_MAX_ITERS, ge=1)
    refine_parts: int = Field(default_factory=lambda: settings.REFINE_PARTS, ge=2)
    target_gap: Rational = Field(default_factory=lambda: Fraction(settings.DEFAULT_TARGET_GAP))
    overrides: Dict[str, Tuple[int, int]] = {}
    exact: bool = False  # also solve the concrete game
    report_path: Optional[str] = None
    report_format: str = "json"

    @field_validator("target_gap")
    @classmethod
    def validate_gap(cls, v):
        if v < 0:
            raise ValueError("target_gap must be non-negative")
        return v

    @field_validator("report_format")
    @classmethod
    def validate_format(cls, v):
        if v not in ["json", "text"]:
            raise ValueError('report_format must be either "json" or "text"')
        return v

    @field_validator("overrides")
    @classmethod
    def validate_overrides(cls, v):
        for name, (lo, hi) in v.items():
            if lo > hi:
                raise ValueError(f"override {name}={lo}..{hi} is an empty range")
        return v

    @model_validator(mode="after")
    def check_contract(self):
        if (self.contract_path is None) == (self.source is None):
            raise ValueError("exactly one of contract_path and source is required")
        return self


class AnalysisReport(BaseModel):
    model_config = ConfigDict(use_enum_values=True)

    contract: str
    config: AnalysisConfig
    iterations: List[ValueBounds] = []
    verdict: Verdict
    exact: Optional[Rational] = None
    warnings: List[str] = []

    @property
    def lower(self) -> Optional[Fraction]:
        return self.iterations[-1].lower if self.iterations else None

    @property
    def upper(self) -> Optional[Fraction]:
        return self.iterations[-1].upper if self.iterations else None


# ===== HTTP REQUESTS / RESPONSES =====

class ContractRequest(BaseModel):
    source: str = Field(..., min_length=1)
    overrides: Dict[str, Tuple[int, int]] = {}


class CfgRequest(ContractRequest):
    function: Optional[str] = None
    format: str = "edgelist"

    @field_validator("format")
    @classmethod
    def validate_format(cls, v):
        if v not in ["edgelist", "graphml"]:
            raise ValueError('format must be either "edgelist" or "graphml"')
        return v


class ParseResponse(BaseModel):
    name: str
    functions: List[str]
    numerics: List[str]
    maps: List[str]
    ids: List[str]
    pretty: str


class CfgResponse(BaseModel):
    function: str
    format: str
    graph: str
    unreachable: List[int] = []


class CorpusRunRequest(BaseModel):
    overrides: Dict[str, Tuple[int, int]] = {}
    granularity: Optional[int] = Field(None, ge=1)
    max_iters: int = Field(default_factory=lambda: settings.DEFAULT_MAX_ITERS, ge=1)
    refine_parts: Optional[int] = Field(None, ge=2)
    target_gap: Rational = Field(default_factory=lambda: Fraction(settings.DEFAULT_TARGET_GAP))
    exact: bool = False
