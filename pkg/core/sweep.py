"""
Parameter sweeps over the input variances and robustness scans.

Each grid point is evaluated independently; results are gathered in grid
order (row-major over vA, then vB) whatever the worker count.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import resolve_workers, settings
from core.errors import NumericalConsistencyError, ParameterError
from core.protocol import (
    A_VS_BC,
    BOUNDARY_TOLERANCE,
    FLAG_NOT_CERTIFIED,
    MODE_A,
    MODE_B,
    MODE_C,
    ProtocolParams,
    compute_x_sep,
    find_x_threshold,
    make_gamma1,
    nu_ab,
    run_step2,
    run_step3,
)
from core.symplectic import CovarianceMatrix, ppt_lowest_nu, serafini_sigma

logger = logging.getLogger(__name__)

NOTE_CHECK_FAILED = "numerical consistency check failed"

DEFAULT_VA_RANGE = (1.0, 3.0)
DEFAULT_VB_RANGE = (1.0, 4.0)
DEFAULT_STEPS = 81


class SweepStatus(str, Enum):
    OK = "ok"
    NO_THRESHOLD = "no-threshold"
    ENTANGLED_ANCILLA = "entangled-ancilla"
    NOT_ENTANGLED = "not-entangled"
    INVALID_POINT = "invalid-point"


class XPolicyKind(str, Enum):
    FIXED = "fixed"
    THRESHOLD_MARGIN = "threshold_margin"


@dataclass(frozen=True)
class XPolicy:
    """How the noise strength x is chosen at each grid point."""
    kind: XPolicyKind
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ParameterError(f"x policy value must be >= 0, got {self.value}")

    @classmethod
    def fixed(cls, x: float) -> "XPolicy":
        return cls(XPolicyKind.FIXED, x)

    @classmethod
    def threshold_margin(cls, epsilon: Optional[float] = None) -> "XPolicy":
        return cls(XPolicyKind.THRESHOLD_MARGIN,
                   settings.SWEEP_THRESHOLD_MARGIN if epsilon is None else epsilon)


@dataclass(frozen=True)
class SweepSpec:
    """Rectangular grid over vA = e^2(d-r) and vB = e^2(d+r)."""
    va_range: Tuple[float, float] = DEFAULT_VA_RANGE
    vb_range: Tuple[float, float] = DEFAULT_VB_RANGE
    va_steps: int = DEFAULT_STEPS
    vb_steps: int = DEFAULT_STEPS
    x_policy: XPolicy = field(default_factory=XPolicy.threshold_margin)

    def __post_init__(self):
        for name, (low, high) in (("vA", self.va_range), ("vB", self.vb_range)):
            if not (0 < low < high):
                raise ParameterError(f"{name} range must satisfy 0 < min < max, got [{low}, {high}]")
        if self.va_steps < 2 or self.vb_steps < 2:
            raise ParameterError("A sweep needs at least 2 steps per axis")

    def grid(self) -> List[Tuple[float, float]]:
        va_values = np.linspace(*self.va_range, self.va_steps)
        vb_values = np.linspace(*self.vb_range, self.vb_steps)
        return [(float(va), float(vb)) for va in va_values for vb in vb_values]


@dataclass(frozen=True)
class SweepRecord:
    """Protocol outcome at one (vA, vB) grid point."""
    vA: float
    vB: float
    d: Optional[float]
    r: Optional[float]
    x_sep: Optional[float]
    x_th: Optional[float]
    x_used: Optional[float]
    nu: Optional[float]
    sigma_step2: Optional[float]
    sigma_step3: Optional[float]
    status: SweepStatus
    note: str = ""


@dataclass(frozen=True)
class StepStatistics:
    """Separability statistics of the step-2/step-3 states for one gamma1."""
    nu: float
    sigma_step2: float
    sigma_step3: float
    sigma_b_step2: float
    nu_a_step2: float

    def status(self, certified: bool = True) -> SweepStatus:
        """
        An uncertified preparation fails the step-1 full-separability witness,
        which is a claim about the ancilla, so it counts as entangled-ancilla.
        """
        if not certified:
            return SweepStatus.ENTANGLED_ANCILLA
        if min(self.sigma_step2, self.sigma_step3, self.sigma_b_step2) < -BOUNDARY_TOLERANCE:
            return SweepStatus.ENTANGLED_ANCILLA
        if self.nu >= 1.0 or self.nu_a_step2 >= 1.0:
            return SweepStatus.NOT_ENTANGLED
        return SweepStatus.OK


@dataclass(frozen=True)
class RobustnessRow:
    """Steps 2-3 applied to gamma1 + epsilon * identity."""
    epsilon: float
    nu: float
    sigma_step2: float
    sigma_step3: float
    status: SweepStatus
    note: str = ""


def step_statistics(gamma1: CovarianceMatrix) -> StepStatistics:
    gamma2 = run_step2(gamma1)
    gamma3 = run_step3(gamma2)
    return StepStatistics(
        nu=nu_ab(gamma3.reduced([MODE_A, MODE_B])),
        sigma_step2=serafini_sigma(gamma2, MODE_C),
        sigma_step3=serafini_sigma(gamma3, MODE_C),
        sigma_b_step2=serafini_sigma(gamma2, MODE_B),
        nu_a_step2=ppt_lowest_nu(gamma2, A_VS_BC),
    )


def variances_to_squeezing(v_a: float, v_b: float) -> Tuple[float, float]:
    return (math.log(v_a) + math.log(v_b)) / 4.0, (math.log(v_b) - math.log(v_a)) / 4.0


def evaluate_point(v_a: float, v_b: float, policy: XPolicy) -> SweepRecord:
    """Evaluate the protocol at one grid point."""
    d, r = variances_to_squeezing(v_a, v_b)
    empty = dict(x_sep=None, x_th=None, x_used=None, nu=None, sigma_step2=None, sigma_step3=None)
    if not (v_b > v_a >= 1.0):
        return SweepRecord(vA=v_a, vB=v_b, d=d, r=r, status=SweepStatus.INVALID_POINT, **empty)

    x_sep = compute_x_sep(d, r)
    try:
        x_th = find_x_threshold(d, r, 2).x_th
    except NumericalConsistencyError as e:
        logger.warning(f"Threshold fit failed at vA={v_a:.6g}, vB={v_b:.6g}: {e}")
        x_th = None

    if policy.kind == XPolicyKind.FIXED:
        x_used = policy.value
    elif x_th is None:
        empty.update(x_sep=x_sep)
        return SweepRecord(vA=v_a, vB=v_b, d=d, r=r, status=SweepStatus.NO_THRESHOLD, **empty)
    else:
        x_used = (1.0 + policy.value) * max(x_th, x_sep)

    try:
        stats = step_statistics(make_gamma1(d, r, x_used))
    except NumericalConsistencyError as e:
        logger.warning(f"Step statistics failed at vA={v_a:.6g}, vB={v_b:.6g}, x={x_used:.6g}: {e}")
        empty.update(x_sep=x_sep, x_th=x_th, x_used=x_used)
        return SweepRecord(vA=v_a, vB=v_b, d=d, r=r, status=SweepStatus.NO_THRESHOLD,
                           note=f"{NOTE_CHECK_FAILED}: {e}", **empty)

    certified = x_used >= x_sep
    return SweepRecord(
        vA=v_a, vB=v_b, d=d, r=r,
        x_sep=x_sep, x_th=x_th, x_used=x_used,
        nu=stats.nu,
        sigma_step2=stats.sigma_step2,
        sigma_step3=stats.sigma_step3,
        status=stats.status(certified=certified),
        note="" if certified else FLAG_NOT_CERTIFIED,
    )


def run_sweep(spec: SweepSpec, workers: int = 0) -> List[SweepRecord]:
    """Evaluate every grid point; output order is the grid order."""
    points = spec.grid()
    workers = resolve_workers(workers)
    started = time.perf_counter()

    if workers <= 1:
        records = [evaluate_point(va, vb, spec.x_policy) for va, vb in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda p: evaluate_point(p[0], p[1], spec.x_policy), points))

    counts = {}
    for record in records:
        counts[record.status.value] = counts.get(record.status.value, 0) + 1
    logger.info(
        f"Sweep of {len(points)} points on {workers} workers in "
        f"{time.perf_counter() - started:.2f}s: {counts}"
    )
    return records


def nearest_record(records: Sequence[SweepRecord], v_a: float, v_b: float) -> SweepRecord:
    return min(records, key=lambda rec: (rec.vA - v_a) ** 2 + (rec.vB - v_b) ** 2)


def run_robustness(params: ProtocolParams, epsilons: Iterable[float]) -> List[RobustnessRow]:
    """Steps 2-3 on gamma1 + epsilon * identity for each epsilon."""
    gamma1 = make_gamma1(params.d, params.r, params.x)
    certified = params.x >= params.x_sep
    rows = []
    for epsilon in epsilons:
        if not math.isfinite(epsilon) or epsilon < 0:
            raise ParameterError(f"Noise epsilon must be >= 0, got {epsilon}")
        stats = step_statistics(gamma1.with_isotropic_noise(epsilon))
        rows.append(RobustnessRow(
            epsilon=float(epsilon),
            nu=stats.nu,
            sigma_step2=stats.sigma_step2,
            sigma_step3=stats.sigma_step3,
            status=stats.status(certified=certified),
            note="" if certified else FLAG_NOT_CERTIFIED,
        ))
        logger.info(f"Robustness eps={epsilon:g}: nu={stats.nu:.6f}")
    return rows
