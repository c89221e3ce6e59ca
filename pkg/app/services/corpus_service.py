# app/services/corpus_service.py
import logging
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import ValidationError

from app.config import settings
from app.models.corpus import CorpusEntry, CorpusIndex
from app.utils.errors import CorpusError

logger = logging.getLogger(__name__)

BUNDLED_CORPUS = Path(__file__).resolve().parent.parent / "corpus"


class CorpusService:
    """Bundled example contracts and their desk-scale analysis settings"""

    def __init__(self, directory: Optional[str] = None):
        self.directory = Path(directory or settings.CORPUS_DIR or BUNDLED_CORPUS)
        self._entries: Optional[Dict[str, CorpusEntry]] = None

    def _load(self) -> Dict[str, CorpusEntry]:
        if self._entries is None:
            index_path = self.directory / "corpus.json"
            try:
                index = CorpusIndex.model_validate_json(index_path.read_text(encoding="utf-8"))
            except FileNotFoundError:
                raise CorpusError(f"corpus index not found: {index_path}")
            except ValidationError as e:
                raise CorpusError(f"invalid corpus index {index_path}: {e}")
            self._entries = {entry.name: entry for entry in index.contracts}
            logger.info(f"📚 Loaded {len(self._entries)} corpus contracts from {self.directory}")
        return self._entries

    def list_entries(self) -> List[CorpusEntry]:
        return list(self._load().values())

    def get(self, name: str) -> CorpusEntry:
        entries = self._load()
        if name not in entries:
            raise CorpusError(f"unknown corpus contract '{name}' (known: {', '.join(sorted(entries))})")
        return entries[name]

    def path_of(self, name: str) -> Path:
        return self.directory / self.get(name).file

    def source(self, name: str) -> str:
        path = self.path_of(name)
        try:
            return path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise CorpusError(f"corpus file missing: {path}")


# Singleton instance
corpus_service = CorpusService()
