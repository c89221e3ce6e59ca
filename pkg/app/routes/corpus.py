# app/routes/corpus.py
from fastapi import APIRouter
from typing import List
import logging

from app.models.analysis import AnalysisReport, CorpusRunRequest
from app.models.corpus import CorpusEntry
from app.services.analysis_service import analysis_service
from app.services.corpus_service import corpus_service
from app.utils.errors import AnalyzerError
from app.utils.validators import to_http_exception

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/corpus", tags=["Corpus"])


@router.get("", response_model=List[CorpusEntry])
async def list_corpus():
    """Bundled contracts with their documented settings"""
    try:
        return corpus_service.list_entries()
    except AnalyzerError as e:
        raise to_http_exception(e)


@router.get("/{name}/source")
async def corpus_source(name: str):
    try:
        return {"name": name, "source": corpus_service.source(name)}
    except AnalyzerError as e:
        raise to_http_exception(e)


@router.post("/{name}/run", response_model=AnalysisReport)
def run_corpus(name: str, request: CorpusRunRequest = CorpusRunRequest()):
    """Analyze a bundled contract; request overrides are merged over the bundled ones"""
    options = dict(max_iters=request.max_iters, target_gap=request.target_gap, exact=request.exact)
    if request.refine_parts is not None:
        options["refine_parts"] = request.refine_parts
    if request.granularity is not None:
        options["granularity"] = request.granularity
    try:
        logger.info(f"📝 Corpus run for {name}")
        return analysis_service.corpus_run(name, request.overrides, **options)
    except AnalyzerError as e:
        raise to_http_exception(e)
