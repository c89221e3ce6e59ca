# app/config.py
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import List

class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="allow")

    # App
    APP_NAME: str = "Contract Game Analyzer"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = True
    LOG_LEVEL: str = "INFO"

    # Analysis defaults
    DEFAULT_PARTIES: int = 2
    DEFAULT_GRANULARITY: int = 1
    DEFAULT_MAX_ITERS: int = 8
    DEFAULT_TARGET_GAP: str = "0"  # rational, e.g. "1/2"
    REFINE_PARTS: int = 2  # pieces each refined interval is cut into

    # Engine limits
    ENUMERATION_LIMIT: int = 4096  # E: boxes larger than this use interval propagation
    MAX_ABSTRACT_STATES: int = 500_000
    MAX_CONCRETE_STATES: int = 2_000_000

    # Solver
    EXACT_LP_MAX_DIM: int = 16  # larger matrices are solved in floating point
    LP_TOLERANCE: float = 1e-9

    # Corpus
    CORPUS_DIR: str = ""  # empty means the corpus bundled with the package

    # CORS
    cors_origins: List[str] = [
        "http://localhost:3000",
        "http://localhost:8000",
        "*"  # Remove in production
    ]

settings = Settings()
