"""
Pydantic models for reports and API request/response validation.
"""
import math
from typing import Any, List, Optional

from pydantic import BaseModel, Field, model_validator

from core.montecarlo import CmEstimate
from core.protocol import (
    FLAGSHIP_X,
    ProtocolParams,
    ProtocolReport,
    SeparabilityVerdict,
    ThresholdFit,
)
from core.sweep import RobustnessRow, SweepRecord

Matrix = List[List[float]]


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class ParamsModel(BaseModel):
    """Protocol parameters with their derived quantities."""
    d: float
    r: float
    x: float
    vA: float
    vB: float
    phi: float
    delta: float
    a: float
    c: float
    x_sep: float

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "ParamsModel":
        return cls(
            d=params.d, r=params.r, x=params.x,
            vA=params.v_a, vB=params.v_b,
            phi=params.phi, delta=params.delta,
            a=params.a, c=params.c,
            x_sep=params.x_sep,
        )


class VerdictModel(BaseModel):
    """One separability verdict."""
    step: int
    partition: str
    criterion: str
    statistic: float
    separable: str
    note: str = ""

    @classmethod
    def from_verdict(cls, verdict: SeparabilityVerdict) -> "VerdictModel":
        return cls(
            step=verdict.step,
            partition=verdict.partition.label,
            criterion=verdict.criterion.value,
            statistic=verdict.statistic,
            separable=verdict.separable.value,
            note=verdict.note,
        )


class LocalStatesModel(BaseModel):
    """Pure single-mode states of the LOCC preparation."""
    alpha: float
    beta: float
    tau: float
    s: float
    theta: float
    theta_degrees: float
    squeezing_factor: float = Field(description="e^{-2s}")
    gamma_A: Matrix
    gamma_B: Matrix
    gamma_C: Matrix


class WitnessModel(BaseModel):
    """Full-separability witness Q(x)."""
    psd: str
    eigenvalues: List[float]
    rotated_eigenvalues: List[float]
    Q: Matrix


class ProtocolReportModel(BaseModel):
    """Machine-readable protocol report."""
    params: ParamsModel
    gamma1: Matrix
    gamma2: Matrix
    gamma3: Matrix
    verdicts: List[VerdictModel]
    nu: float
    nu_m: Optional[float] = None
    log_negativity: Optional[float] = None
    log_negativity_m: Optional[float] = None
    x_th: Optional[float] = None
    sigma_step2: float
    sigma_step3: float
    local_states: LocalStatesModel
    witness: WitnessModel
    flags: List[str] = Field(default_factory=list)

    @classmethod
    def from_report(cls, report: ProtocolReport) -> "ProtocolReportModel":
        local = report.local_states
        return cls(
            params=ParamsModel.from_params(report.params),
            gamma1=report.gamma1.tolist(),
            gamma2=report.gamma2.tolist(),
            gamma3=report.gamma3.tolist(),
            verdicts=[VerdictModel.from_verdict(v) for v in report.verdicts],
            nu=report.nu,
            nu_m=report.nu_m,
            log_negativity=_finite_or_none(report.log_negativity),
            log_negativity_m=_finite_or_none(report.log_negativity_m),
            x_th=report.x_th,
            sigma_step2=report.sigma_step2,
            sigma_step3=report.sigma_step3,
            local_states=LocalStatesModel(
                alpha=local.alpha, beta=local.beta, tau=local.tau,
                s=local.s, theta=local.theta, theta_degrees=local.theta_degrees,
                squeezing_factor=math.exp(-2 * local.s),
                gamma_A=local.gamma_a.tolist(),
                gamma_B=local.gamma_b.tolist(),
                gamma_C=local.gamma_c.tolist(),
            ),
            witness=WitnessModel(
                psd=report.witness.psd.value,
                eigenvalues=report.witness.eigenvalues.tolist(),
                rotated_eigenvalues=report.witness.rotated_eigenvalues.tolist(),
                Q=report.witness.q.tolist(),
            ),
            flags=list(report.flags),
        )


class ThresholdModel(BaseModel):
    """Sigma(x) = x (u x + v) fit for one step."""
    step: int
    d: float
    r: float
    u: float
    v: float
    x_th: Optional[float] = None
    x_sep: float
    nonnegative_interval: Optional[List[float]] = None

    @classmethod
    def from_fit(cls, fit: ThresholdFit, d: float, r: float, x_sep: float) -> "ThresholdModel":
        return cls(
            step=fit.step_index, d=d, r=r, u=fit.u, v=fit.v, x_th=fit.x_th, x_sep=x_sep,
            nonnegative_interval=list(fit.nonnegative_interval) if fit.nonnegative_interval else None,
        )


class SweepRecordModel(BaseModel):
    vA: float
    vB: float
    d: Optional[float] = None
    r: Optional[float] = None
    x_sep: Optional[float] = None
    x_th: Optional[float] = None
    x_used: Optional[float] = None
    nu: Optional[float] = None
    sigma_step2: Optional[float] = None
    sigma_step3: Optional[float] = None
    status: str
    note: str = ""

    @classmethod
    def from_record(cls, record: SweepRecord) -> "SweepRecordModel":
        return cls(
            vA=record.vA, vB=record.vB, d=record.d, r=record.r,
            x_sep=record.x_sep, x_th=record.x_th, x_used=record.x_used,
            nu=record.nu, sigma_step2=record.sigma_step2, sigma_step3=record.sigma_step3,
            status=record.status.value,
            note=record.note,
        )


class RobustnessRowModel(BaseModel):
    epsilon: float
    nu: float
    sigma_step2: float
    sigma_step3: float
    status: str
    note: str = ""

    @classmethod
    def from_row(cls, row: RobustnessRow) -> "RobustnessRowModel":
        return cls(
            epsilon=row.epsilon, nu=row.nu,
            sigma_step2=row.sigma_step2, sigma_step3=row.sigma_step3,
            status=row.status.value,
            note=row.note,
        )


class SampleReportModel(BaseModel):
    """Monte Carlo preparation estimate compared with the analytic gamma1."""
    params: ParamsModel
    n: int
    seed: int
    block_size: int = Field(description="samples per RNG stream; part of the reproducibility key")
    mean_vector: List[float]
    estimate: Matrix
    analytic: Matrix
    max_deviation: float
    stderr_scale: float
    deviation_in_stderr: float
    estimated_nu: float
    simon: VerdictModel
    flags: List[str] = Field(default_factory=list)

    @classmethod
    def build(cls, params: ProtocolParams, seed: int, estimate: CmEstimate,
              analytic: Matrix, simon: SeparabilityVerdict) -> "SampleReportModel":
        deviation = max(
            abs(e - a)
            for row_e, row_a in zip(estimate.cm.tolist(), analytic)
            for e, a in zip(row_e, row_a)
        )
        flags = list(estimate.flags)
        if simon.note:
            flags.append(simon.note)
        return cls(
            params=ParamsModel.from_params(params),
            n=estimate.n,
            seed=seed,
            block_size=estimate.block_size,
            mean_vector=estimate.mean_vector.tolist(),
            estimate=estimate.cm.tolist(),
            analytic=analytic,
            max_deviation=deviation,
            stderr_scale=estimate.stderr_scale,
            deviation_in_stderr=deviation / estimate.stderr_scale if estimate.stderr_scale > 0 else 0.0,
            estimated_nu=simon.statistic,
            simon=VerdictModel.from_verdict(simon),
            flags=flags,
        )


class ProtocolRequest(BaseModel):
    """
    Protocol run request.

    Accepts either squeezing exponents (d, r) or input variances (vA, vB).
    """
    d: Optional[float] = None
    r: Optional[float] = None
    vA: Optional[float] = Field(default=None, alias="va")
    vB: Optional[float] = Field(default=None, alias="vb")
    x: float = FLAGSHIP_X
    measure: bool = False

    model_config = {"populate_by_name": True}

    @model_validator(mode="before")
    @classmethod
    def check_parameter_form(cls, data: Any) -> Any:
        """Exactly one of (d, r) or (vA, vB) must be given."""
        if isinstance(data, dict):
            has_dr = data.get("d") is not None or data.get("r") is not None
            has_v = any(data.get(k) is not None for k in ("vA", "vB", "va", "vb"))
            if has_dr == has_v:
                raise ValueError("Give exactly one of (d, r) or (vA, vB)")
            if has_dr and (data.get("d") is None or data.get("r") is None):
                raise ValueError("Both d and r are required")
            if has_v and (data.get("vA", data.get("va")) is None or data.get("vB", data.get("vb")) is None):
                raise ValueError("Both vA and vB are required")
        return data

    def to_params(self) -> ProtocolParams:
        if self.d is not None:
            return ProtocolParams(d=self.d, r=self.r, x=self.x)
        return ProtocolParams.from_variances(self.vA, self.vB, self.x)


class ThresholdRequest(BaseModel):
    d: float
    r: float
    step: int = Field(default=2, ge=2, le=3)


class RobustnessRequest(ProtocolRequest):
    epsilons: List[float] = Field(default_factory=lambda: [0.0, 0.005, 0.01, 0.02])


class HealthResponse(BaseModel):
    """Health check response."""
    status: str = "healthy"
    version: str = "1.0.0"


class ErrorResponse(BaseModel):
    """Error response model."""
    error: str
    detail: Optional[str] = None
