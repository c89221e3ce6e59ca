# app/routes/analysis.py
from fastapi import APIRouter
import logging

from app.models.analysis import AnalysisConfig, AnalysisReport
from app.services.analysis_service import analysis_service
from app.utils.errors import AnalyzerError
from app.utils.validators import raise_validation_error, to_http_exception

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/analysis", tags=["Analysis"])


@router.post("/run", response_model=AnalysisReport)
def run_analysis(config: AnalysisConfig):
    """Bound the value of an inline contract; runs in the worker thread pool"""
    if config.source is None:
        raise_validation_error("the HTTP API analyzes inline source only", "source")
    if config.report_path is not None:
        raise_validation_error("reports are returned, not written, over HTTP", "report_path")
    try:
        logger.info(f"📝 Analysis request for party {config.party}")
        return analysis_service.run(config)
    except AnalyzerError as e:
        logger.info(f"⚠️ Analysis rejected: {e}")
        raise to_http_exception(e)
