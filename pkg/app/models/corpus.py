# app/models/corpus.py
from pydantic import BaseModel, Field, field_validator
from typing import Dict, List, Optional, Tuple

from app.models.analysis import Rational


class CorpusEntry(BaseModel):
    """One bundled contract together with its documented desk-scale analysis"""
    name: str = Field(..., min_length=1)
    file: str
    description: str = ""
    party: str
    objective: str
    parties: int = Field(..., ge=1)
    overrides: Dict[str, Tuple[int, int]] = {}
    granularity: int = Field(1, ge=1)
    expected: Optional[Rational] = None  # exact value at the listed overrides
    cap: Optional[Rational] = None  # what a bug-free version can reach at most
    pair: Optional[str] = None  # the buggy (or fixed) counterpart
    refine_parts: Optional[int] = Field(None, ge=2)  # overrides the configured cut count

    @field_validator("file")
    @classmethod
    def validate_file(cls, v):
        if not v.endswith(".qsc"):
            raise ValueError("corpus contracts use the .qsc extension")
        return v


class CorpusIndex(BaseModel):
    contracts: List[CorpusEntry] = []
