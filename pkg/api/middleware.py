"""
Request timing for the numerics endpoints.
"""
import logging
import time

from fastapi import Request
from starlette.middleware.base import BaseHTTPMiddleware

logger = logging.getLogger(__name__)

# Protocol reports take milliseconds; anything slower is worth a warning
SLOW_REQUEST_SECONDS = 2.0


class RequestLoggingMiddleware(BaseHTTPMiddleware):
    """Logs each request and sets X-Process-Time on the response."""

    def __init__(self, app, slow_after: float = SLOW_REQUEST_SECONDS):
        super().__init__(app)
        self.slow_after = slow_after

    async def dispatch(self, request: Request, call_next):
        started = time.perf_counter()
        try:
            response = await call_next(request)
        except Exception:
            logger.exception(f"Unhandled error on {request.method} {request.url.path}")
            raise

        elapsed = time.perf_counter() - started
        message = (
            f"{request.method} {request.url.path} -> {response.status_code} in {elapsed:.3f}s"
        )
        if elapsed > self.slow_after:
            logger.warning(f"Slow request: {message}")
        else:
            logger.info(message)

        response.headers["X-Process-Time"] = f"{elapsed:.3f}"
        return response
