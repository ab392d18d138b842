"""
API routes: HTTP mirror of the protocol, threshold and robustness commands.
"""
import logging
from typing import List

from fastapi import APIRouter

from api.models import (
    HealthResponse,
    ProtocolReportModel,
    ProtocolRequest,
    RobustnessRequest,
    RobustnessRowModel,
    ThresholdModel,
    ThresholdRequest,
)
from core.protocol import compute_x_sep, find_x_threshold, run_protocol
from core.sweep import run_robustness

logger = logging.getLogger(__name__)

router = APIRouter()


@router.get("/", response_model=HealthResponse)
async def root():
    """Root endpoint - basic health check."""
    return HealthResponse()


@router.get("/health", response_model=HealthResponse)
async def health_check():
    """Health check endpoint."""
    return HealthResponse()


# Handlers are sync so FastAPI runs the numerics in its threadpool.
@router.post("/protocol", response_model=ProtocolReportModel)
def protocol(request: ProtocolRequest) -> ProtocolReportModel:
    """Run steps 1-3 at one parameter point, optionally with homodyne on C."""
    params = request.to_params()
    report = run_protocol(params, with_measurement=request.measure)
    return ProtocolReportModel.from_report(report)


@router.post("/threshold", response_model=ThresholdModel)
def threshold(request: ThresholdRequest) -> ThresholdModel:
    fit = find_x_threshold(request.d, request.r, request.step)
    return ThresholdModel.from_fit(fit, request.d, request.r, compute_x_sep(request.d, request.r))


@router.post("/robustness", response_model=List[RobustnessRowModel])
def robustness(request: RobustnessRequest) -> List[RobustnessRowModel]:
    rows = run_robustness(request.to_params(), request.epsilons)
    logger.info(f"Robustness scan over {len(rows)} noise levels")
    return [RobustnessRowModel.from_row(row) for row in rows]
