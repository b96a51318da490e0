import logging
import os
from contextlib import asynccontextmanager
from typing import AsyncGenerator

from fastapi import FastAPI
import uvicorn

from trust_aware_sfc import __version__
from trust_aware_sfc.presentation.api.embedding import router as embedding_router
from trust_aware_sfc.presentation.dependencies import DependencyContainer
from trust_aware_sfc.presentation.schemas import SCHEMA_VERSION

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI) -> AsyncGenerator[None, None]:
    """Application lifespan manager - startup and shutdown logic"""
    budget = app.state.container.budget
    logger.info(
        "Starting Trust-Aware SFC Embedding service (time limit %.1fs, node limit %d)",
        budget.time_limit,
        budget.node_limit,
    )
    yield
    logger.info("Shutting down Trust-Aware SFC Embedding service")


def create_app(container: DependencyContainer | None = None) -> FastAPI:
    """Factory function to create and configure FastAPI application"""

    app = FastAPI(
        title="Trust-Aware SFC Embedding",
        description="Trust-aware service function chain embedding on a shared substrate",
        version=__version__,
        docs_url="/docs",
        redoc_url="/redoc",
        lifespan=lifespan
    )

    app.state.container = container or DependencyContainer()

    app.include_router(embedding_router, tags=["Embedding"])

    @app.get("/", tags=["Health"])
    async def health_check():
        """Health check endpoint"""
        return {
            "status": "healthy",
            "service": "Trust-Aware SFC Embedding",
            "version": __version__
        }

    @app.get("/health", tags=["Health"])
    async def detailed_health():
        """Detailed health check with solver configuration"""
        budget = app.state.container.budget
        return {
            "status": "healthy",
            "schema_version": SCHEMA_VERSION,
            "solver": {"time_limit": budget.time_limit, "node_limit": budget.node_limit},
        }

    return app


# Create application instance
app = create_app()


if __name__ == "__main__":
    logging.basicConfig(
        level=os.getenv("TASFC_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    uvicorn.run(
        "trust_aware_sfc.main:app",
        host="0.0.0.0",
        port=int(os.getenv("PORT", "8000")),
        reload=False,
        log_level="info"
    )
