"""
Gauss-Distill HTTP service

Serves the entanglement-distribution protocol over HTTP:
- Single-point protocol reports (steps 1-3, optional homodyne on C)
- Noise-threshold fits for the ancilla separability
- Robustness scans under isotropic noise
"""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from api.middleware import RequestLoggingMiddleware
from api.routes import router
from config import resolve_workers, settings
from core.errors import GaussianToolkitError

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S"
)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan handler for startup/shutdown."""
    logger.info("Gauss-Distill service starting up")
    logger.info(f"Log Level: {settings.LOG_LEVEL}")
    logger.info(f"Workers: {resolve_workers()}")
    yield
    logger.info("Gauss-Distill service shutting down")


app = FastAPI(
    title="Gauss-Distill",
    description="""
    Gaussian covariance-matrix toolkit for distributing entanglement
    between two modes through a separable ancilla.

    ## Endpoints
    - `POST /protocol`: full report at one parameter point
    - `POST /threshold`: Sigma(x) = x (u x + v) fit and x_th
    - `POST /robustness`: steps 2-3 on gamma1 + epsilon * identity
    """,
    version="1.0.0",
    lifespan=lifespan
)


@app.exception_handler(GaussianToolkitError)
async def toolkit_exception_handler(request: Request, exc: GaussianToolkitError):
    """Invalid parameters and failed consistency checks become 422s."""
    logger.error(f"{type(exc).__name__} for {request.method} {request.url.path}: {exc}")
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)}
    )


app.add_middleware(RequestLoggingMiddleware)

app.include_router(router)


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "main:app",
        host=settings.API_HOST,
        port=settings.API_PORT,
        log_level=settings.LOG_LEVEL.lower()
    )
