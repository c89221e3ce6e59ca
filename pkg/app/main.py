from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from contextlib import asynccontextmanager
import logging

from app.config import settings
from app.routes import analysis, contracts, corpus
from app.services.corpus_service import corpus_service
from app.services.frontend_service import contract_frontend
from app.utils.errors import AnalyzerError

# Logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO) if settings.DEBUG else logging.WARNING,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    # ---------------- STARTUP ----------------
    logger.info(f"🚀 Starting {settings.APP_NAME} v{settings.APP_VERSION}")
    logger.info(
        f"⚙️ Limits: E={settings.ENUMERATION_LIMIT}, abstract states={settings.MAX_ABSTRACT_STATES}, "
        f"exact LP up to {settings.EXACT_LP_MAX_DIM}x{settings.EXACT_LP_MAX_DIM}"
    )

    # Parse every bundled contract once (a broken corpus only disables the corpus endpoints)
    try:
        entries = corpus_service.list_entries()
        broken = []
        for entry in entries:
            try:
                contract_frontend.parse(corpus_service.source(entry.name))
            except AnalyzerError as e:
                broken.append(entry.name)
                logger.error(f"❌ Corpus contract {entry.name} does not parse: {e}")
        logger.info(f"✅ Corpus ready: {len(entries) - len(broken)}/{len(entries)} contracts parse")
    except AnalyzerError as e:
        logger.error(f"❌ Corpus unavailable: {e}")

    yield

    # ---------------- SHUTDOWN ----------------
    logger.info("🛑 Shutting down application")


app = FastAPI(
    title=settings.APP_NAME,
    version=settings.APP_VERSION,
    description="Game-theoretic bounds on what a party can secure from a contract",
    lifespan=lifespan,
)

# CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.cors_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Routers
app.include_router(contracts.router, prefix="/api/v1")
app.include_router(analysis.router, prefix="/api/v1")
app.include_router(corpus.router, prefix="/api/v1")


@app.get("/")
async def root():
    return {
        "name": settings.APP_NAME,
        "version": settings.APP_VERSION,
        "status": "running",
        "docs": "/docs",
    }


@app.get("/health")
async def health_check():
    try:
        count = len(corpus_service.list_entries())
    except AnalyzerError as e:
        return JSONResponse(
            status_code=503,
            content={"status": "unhealthy", "error": str(e)},
        )
    return {
        "status": "healthy",
        "corpus": count,
        "version": settings.APP_VERSION,
        "limits": {
            "enumeration": settings.ENUMERATION_LIMIT,
            "abstract_states": settings.MAX_ABSTRACT_STATES,
            "concrete_states": settings.MAX_CONCRETE_STATES,
            "exact_lp_dim": settings.EXACT_LP_MAX_DIM,
        },
    }


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    logger.error(f"Unhandled exception: {exc}", exc_info=True)
    return JSONResponse(
        status_code=500,
        content={
            "detail": "Internal server error",
            "error": str(exc) if settings.DEBUG else "Unexpected error",
        },
    )


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=8000,
        reload=settings.DEBUG,
    )
