"""
Entanglement distribution by a separable ancilla.

Three modes A, B, C (indices 0, 1, 2):
- step 1: LOCC preparation of the fully separable state gamma1(x)
- step 2: balanced beam splitter on A and C (Alice)
- step 3: balanced beam splitter on B and C (Bob)

Mode C stays separable from (AB) throughout while A and B end up entangled.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from core.errors import DimensionError, NumericalConsistencyError, ParameterError
from core.symplectic import (
    CovarianceMatrix,
    ModePartition,
    SymplecticTransform,
    apply_transform,
    balanced_beamsplitter,
    is_physical,
    local_gaussian,
    log_negativity,
    ppt_lowest_nu,
    serafini_sigma,
)

logger = logging.getLogger(__name__)

MODE_A, MODE_B, MODE_C = 0, 1, 2

BOUNDARY_TOLERANCE = 1e-7
PSD_TOLERANCE = 1e-9
PURITY_TOLERANCE = 1e-8
RADICAND_TOLERANCE = 1e-12
THRESHOLD_FIT_TOLERANCE = 1e-7

# Sample points for the Sigma(x) = x (u x + v) fit; the third one checks the model
THRESHOLD_FIT_POINTS = (0.5, 1.5, 2.5)

FLAGSHIP_D = math.log(3.0) / 4.0
FLAGSHIP_R = math.log(4.0 / 3.0) / 4.0
FLAGSHIP_X = 1.041

# Bipartitions named in reports
A_VS_BC = ModePartition.split(3, [MODE_B, MODE_C])
B_VS_AC = ModePartition.split(3, [MODE_A, MODE_C])
C_VS_AB = ModePartition.split(3, [MODE_A, MODE_B])
A_VS_B = ModePartition.split(2, [1])

FLAG_NOT_CERTIFIED = "preparation not certified fully separable"
FLAG_DEGENERATE = "degenerate: noiseless input (x = 0), ancilla cannot stay separable"


class Separability(str, Enum):
    """Tri-state separability verdict."""
    YES = "yes"
    NO = "no"
    BOUNDARY = "boundary"


class Criterion(str, Enum):
    PSD_WITNESS = "psd-witness"
    SERAFINI = "serafini"
    PPT = "ppt"


def _check_squeezing(d: float, r: float) -> None:
    if not (math.isfinite(d) and math.isfinite(r)):
        raise ParameterError("d and r must be finite")
    if r <= 0:
        raise ParameterError(f"Protocol requires r > 0, got r={r}")
    if d < r:
        raise ParameterError(f"Protocol requires d >= r, got d={d}, r={r}")


def _check_noise(x: float) -> None:
    if not math.isfinite(x) or x < 0:
        raise ParameterError(f"Noise strength x must be >= 0, got {x}")


def mixing_angle(d: float, r: float) -> float:
    """phi with tan phi = e^-2r sinh 2d + sqrt(1 + e^-4r sinh^2 2d), in (0, pi/2)."""
    t = math.exp(-2 * r) * math.sinh(2 * d)
    return math.atan(t + math.sqrt(1.0 + t * t))


def delta_parameter(d: float, r: float) -> float:
    """delta = e^2d sin^2 phi + e^-2d cos^2 phi."""
    phi = mixing_angle(d, r)
    return math.exp(2 * d) * math.sin(phi) ** 2 + math.exp(-2 * d) * math.cos(phi) ** 2


@dataclass(frozen=True)
class ProtocolParams:
    """Squeezing exponents d, r and noise strength x of the protocol."""
    d: float
    r: float
    x: float

    def __post_init__(self):
        _check_squeezing(self.d, self.r)
        _check_noise(self.x)

    @classmethod
    def from_variances(cls, v_a: float, v_b: float, x: float) -> "ProtocolParams":
        """From the input variances vA = e^2(d-r), vB = e^2(d+r)."""
        if not (v_b > v_a >= 1.0):
            raise ParameterError(f"Protocol requires vB > vA >= 1, got vA={v_a}, vB={v_b}")
        d = (math.log(v_a) + math.log(v_b)) / 4.0
        r = (math.log(v_b) - math.log(v_a)) / 4.0
        return cls(d=d, r=r, x=x)

    @classmethod
    def flagship(cls, x: float = FLAGSHIP_X) -> "ProtocolParams":
        return cls(d=FLAGSHIP_D, r=FLAGSHIP_R, x=x)

    def with_x(self, x: float) -> "ProtocolParams":
        return ProtocolParams(d=self.d, r=self.r, x=x)

    @property
    def v_a(self) -> float:
        return math.exp(2 * (self.d - self.r))

    @property
    def v_b(self) -> float:
        return math.exp(2 * (self.d + self.r))

    @property
    def a(self) -> float:
        return math.cosh(2 * self.r)

    @property
    def c(self) -> float:
        return math.sinh(2 * self.r)

    @property
    def phi(self) -> float:
        return mixing_angle(self.d, self.r)

    @property
    def delta(self) -> float:
        return delta_parameter(self.d, self.r)

    @property
    def x_sep(self) -> float:
        return compute_x_sep(self.d, self.r)


@dataclass(frozen=True)
class LocalStateSet:
    """Pure single-mode states Alice and Bob prepare before the correlated displacements."""
    gamma_a: CovarianceMatrix
    gamma_b: CovarianceMatrix
    gamma_c: CovarianceMatrix
    alpha: float
    beta: float
    tau: float
    s: float
    theta: float

    @property
    def product(self) -> CovarianceMatrix:
        """gamma_A + gamma_B + gamma_C as a three-mode direct sum."""
        return self.gamma_a.direct_sum(self.gamma_b, self.gamma_c)

    @property
    def theta_degrees(self) -> float:
        return math.degrees(self.theta)

    def preparation_transforms(self) -> Tuple[SymplecticTransform, SymplecticTransform]:
        """Squeeze-then-rotate transforms taking vacuum to gamma_A and gamma_B."""
        return (
            local_gaussian(1, 0, self.s, self.theta),
            local_gaussian(1, 0, self.s, -self.theta),
        )


@dataclass(frozen=True, eq=False)
class SeparabilityWitness:
    """Q(x) = gamma1(x) - (gamma_A (+) gamma_B (+) gamma_C) and its spectrum."""
    q: np.ndarray
    p: np.ndarray
    eigenvalues: np.ndarray
    rotated: np.ndarray
    rotated_eigenvalues: np.ndarray
    psd: Separability

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class ThresholdFit:
    """Sigma(x) = x (u x + v) fitted for one protocol step."""
    step_index: int
    u: float
    v: float
    x_th: Optional[float]
    nonnegative_interval: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class SeparabilityVerdict:
    """One separability claim: criterion, statistic, tri-state outcome."""
    partition: ModePartition
    criterion: Criterion
    statistic: float
    separable: Separability
    step: int = 0
    note: str = ""

    @property
    def label(self) -> str:
        return f"step{self.step}:{self.partition.label}:{self.criterion.value}"


@dataclass
class ProtocolReport:
    """Everything one protocol run produces."""
    params: ProtocolParams
    gamma1: CovarianceMatrix
    gamma2: CovarianceMatrix
    gamma3: CovarianceMatrix
    verdicts: List[SeparabilityVerdict]
    nu: float
    x_th: Optional[float]
    sigma_step2: float
    sigma_step3: float
    log_negativity: float
    local_states: LocalStateSet
    witness: SeparabilityWitness
    nu_m: Optional[float] = None
    log_negativity_m: Optional[float] = None
    flags: List[str] = field(default_factory=list)

    def verdict(self, step: int, partition: ModePartition,
                criterion: Optional[Criterion] = None) -> SeparabilityVerdict:
        for item in self.verdicts:
            if item.step == step and item.partition == partition and (
                criterion is None or item.criterion == criterion
            ):
                return item
        raise KeyError(f"No verdict for step {step}, partition {partition.label}")

    @property
    def gamma3_ab(self) -> CovarianceMatrix:
        return self.gamma3.reduced([MODE_A, MODE_B])

    @property
    def ancilla_always_separable(self) -> bool:
        """C separable from (AB) at every step (boundary counts as separable)."""
        return all(
            v.separable != Separability.NO
            for v in self.verdicts
            if v.partition == C_VS_AB
        )

    @property
    def distributes_entanglement(self) -> bool:
        return self.ancilla_always_separable and self.nu < 1.0


def classify(statistic: float, threshold: float) -> Separability:
    """statistic >= threshold means separable; a 1e-7 band around it is boundary."""
    if abs(statistic - threshold) < BOUNDARY_TOLERANCE:
        return Separability.BOUNDARY
    return Separability.YES if statistic > threshold else Separability.NO


def serafini_verdict(gamma: CovarianceMatrix, mode: int, step: int) -> SeparabilityVerdict:
    sigma = serafini_sigma(gamma, mode)
    return SeparabilityVerdict(
        partition=ModePartition.split(3, [m for m in range(3) if m != mode]),
        criterion=Criterion.SERAFINI,
        statistic=sigma,
        separable=classify(sigma, 0.0),
        step=step,
    )


def ppt_verdict(gamma: CovarianceMatrix, partition: ModePartition, step: int) -> SeparabilityVerdict:
    nu = ppt_lowest_nu(gamma, partition)
    return SeparabilityVerdict(
        partition=partition,
        criterion=Criterion.PPT,
        statistic=nu,
        separable=classify(nu, 1.0),
        step=step,
    )


def make_gamma_ab(d: float, r: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum with extra local squeezing d on both modes."""
    _check_squeezing(d, r)
    a, c = math.cosh(2 * r), math.sinh(2 * r)
    up, down = math.exp(2 * d), math.exp(-2 * d)
    return CovarianceMatrix(np.array([
        [up * a, 0.0, -up * c, 0.0],
        [0.0, down * a, 0.0, down * c],
        [-up * c, 0.0, up * a, 0.0],
        [0.0, down * c, 0.0, down * a],
    ]))


def prepare_gamma_ab_by_beamsplitter(d: float, r: float) -> CovarianceMatrix:
    """
    gamma_AB from two momentum-squeezed vacua with x variances e^2(d-r), e^2(d+r)
    mixed on a balanced beam splitter (the non-LOCC route).
    """
    _check_squeezing(d, r)
    inputs = CovarianceMatrix(np.diag([
        math.exp(2 * (d - r)), math.exp(-2 * (d - r)),
        math.exp(2 * (d + r)), math.exp(-2 * (d + r)),
    ]))
    return apply_transform(balanced_beamsplitter(2, 0, 1), inputs)


def make_noise_vectors(d: float, r: float) -> Tuple[np.ndarray, np.ndarray, float]:
    """q1, q2 spanning the correlated noise, and the angle phi."""
    _check_squeezing(d, r)
    phi = mixing_angle(d, r)
    s, c, root2 = math.sin(phi), math.cos(phi), math.sqrt(2.0)
    q1 = np.array([0.0, s, 0.0, -s, root2, root2])
    q2 = np.array([c, 0.0, c, 0.0, root2, root2])
    return q1, q2, phi


def noise_matrix(d: float, r: float) -> np.ndarray:
    """P = q1 q1^T + q2 q2^T."""
    q1, q2, _ = make_noise_vectors(d, r)
    return np.outer(q1, q1) + np.outer(q2, q2)


def make_gamma1(d: float, r: float, x: float) -> CovarianceMatrix:
    """gamma1(x) = gamma_AB + 1_C + x P."""
    _check_squeezing(d, r)
    _check_noise(x)
    base = linalg.block_diag(make_gamma_ab(d, r).entries, np.eye(2))
    return CovarianceMatrix(base + x * noise_matrix(d, r))


def compute_x_sep(d: float, r: float) -> float:
    """x_sep = 2 sinh(2r) / delta."""
    _check_squeezing(d, r)
    return 2.0 * math.sinh(2 * r) / delta_parameter(d, r)


def make_local_cms(d: float, r: float) -> LocalStateSet:
    """Single-mode states whose direct sum sits below gamma1(x) for x >= x_sep."""
    _check_squeezing(d, r)
    phi = mixing_angle(d, r)
    delta = delta_parameter(d, r)
    pre = math.exp(-2 * r) / (2 * delta)
    cos2, sin2 = math.cos(2 * phi), math.sin(2 * phi)

    alpha = pre * (math.exp(4 * r) + math.cosh(4 * d) - math.sinh(4 * d) * cos2)
    beta = pre * ((math.exp(4 * r) - math.cosh(4 * d)) * cos2 + math.sinh(4 * d))
    tau = math.sinh(2 * r) * sin2 / delta

    purity_defect = alpha ** 2 - (beta ** 2 + tau ** 2 + 1.0)
    if abs(purity_defect) > PURITY_TOLERANCE * alpha ** 2:
        raise NumericalConsistencyError(
            f"Local states are not pure (alpha^2 - beta^2 - tau^2 - 1 = {purity_defect:.3e})"
        )

    root = math.sqrt(max(alpha ** 2 - 1.0, 0.0))
    s = 0.5 * math.log(alpha + root)
    theta = math.atan(math.sqrt((root - beta) / (root + beta))) if root > 0 else 0.0

    gamma_a = CovarianceMatrix(np.array([[alpha + beta, -tau], [-tau, alpha - beta]]))
    gamma_b = CovarianceMatrix(np.array([[alpha + beta, tau], [tau, alpha - beta]]))
    return LocalStateSet(
        gamma_a=gamma_a,
        gamma_b=gamma_b,
        gamma_c=CovarianceMatrix.vacuum(1),
        alpha=alpha,
        beta=beta,
        tau=tau,
        s=s,
        theta=theta,
    )


def make_q_matrix(d: float, r: float, x: float) -> SeparabilityWitness:
    """
    Full-separability witness Q(x) = gamma1(x) - (gamma_A (+) gamma_B (+) gamma_C).

    PSD (within -1e-9 ||Q||) certifies the LOCC preparation. The matrix is also
    returned rotated by the A-B beam splitter, where its spectrum has closed form.
    """
    gamma1 = make_gamma1(d, r, x)
    local = make_local_cms(d, r)
    q = gamma1.entries - local.product.entries
    q = 0.5 * (q + q.T)
    eigenvalues = linalg.eigvalsh(q)

    u_ab = balanced_beamsplitter(3, MODE_A, MODE_B).entries
    rotated = u_ab @ q @ u_ab.T
    rotated = 0.5 * (rotated + rotated.T)

    scale = max(float(np.max(np.abs(q))), 1e-300)
    psd = Separability.YES if eigenvalues[0] >= -PSD_TOLERANCE * scale else Separability.NO
    return SeparabilityWitness(
        q=q,
        p=noise_matrix(d, r),
        eigenvalues=eigenvalues,
        rotated=rotated,
        rotated_eigenvalues=linalg.eigvalsh(rotated),
        psd=psd,
    )


def _check_three_modes(gamma: CovarianceMatrix) -> None:
    if gamma.n_modes != 3:
        raise DimensionError(f"Protocol steps act on three modes, got {gamma.n_modes}")


def step2_transform() -> SymplecticTransform:
    """Alice's beam splitter: A' = (A + C)/sqrt2, C' = (C - A)/sqrt2."""
    return balanced_beamsplitter(3, MODE_C, MODE_A)


def step3_transform() -> SymplecticTransform:
    """Bob's beam splitter: B' = (B - C)/sqrt2, C' = (B + C)/sqrt2."""
    return balanced_beamsplitter(3, MODE_B, MODE_C)


def run_step2(gamma1: CovarianceMatrix) -> CovarianceMatrix:
    _check_three_modes(gamma1)
    return apply_transform(step2_transform(), gamma1)


def run_step3(gamma2: CovarianceMatrix) -> CovarianceMatrix:
    _check_three_modes(gamma2)
    return apply_transform(step3_transform(), gamma2)


def closed_form_reduced_ab(d: float, r: float, x: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Closed-form blocks (A, B, C) of the reduced A-B state after step 3.

    Independent of the numeric pipeline; used as its oracle.
    """
    _check_squeezing(d, r)
    _check_noise(x)
    phi = mixing_angle(d, r)
    a, c = math.cosh(2 * r), math.sinh(2 * r)
    root2 = math.sqrt(2.0)
    up, down = math.exp(2 * d), math.exp(-2 * d)

    a_plus, a_minus = (up * a + 1) / 2, (down * a + 1) / 2
    b_plus = (up * (3 * a - 2 * root2 * c) + 1) / 4
    b_minus = (down * (3 * a + 2 * root2 * c) + 1) / 4
    c_plus = (up * (a - root2 * c) - 1) / (2 * root2)
    c_minus = (down * (a + root2 * c) - 1) / (2 * root2)

    g = [1 + math.sin(phi + j * math.pi / 2) / root2 for j in (0, 1)]
    h = [
        (root2 - (-1) ** j) * math.sin(phi + j * math.pi / 2) / 2 + (-1) ** j / root2
        for j in (0, 1)
    ]

    block_a = np.array([
        [a_plus + (g[1] ** 2 + 1) * x, (g[0] + g[1]) * x],
        [(g[0] + g[1]) * x, a_minus + (g[0] ** 2 + 1) * x],
    ])
    block_b = np.array([
        [b_plus + (h[1] ** 2 + 0.5) * x, (h[0] - h[1]) / root2 * x],
        [(h[0] - h[1]) / root2 * x, b_minus + (h[0] ** 2 + 0.5) * x],
    ])
    block_c = np.array([
        [c_plus + (g[1] * h[1] - 1 / root2) * x, -(h[0] + g[1] / root2) * x],
        [(h[1] - g[0] / root2) * x, c_minus - (g[0] * h[0] + 1 / root2) * x],
    ])
    return block_a, block_b, block_c


def nu_ab(gamma_ab: CovarianceMatrix) -> float:
    """
    Lower PT symplectic eigenvalue of a two-mode state from its 2x2 blocks:
    nu = sqrt((kappa - sqrt(kappa^2 - 4 det gamma)) / 2),
    kappa = det A + det B - 2 det C.
    """
    g = np.asarray(gamma_ab, dtype=float)
    if g.shape != (4, 4):
        raise DimensionError(f"nu_ab needs a two-mode covariance matrix, got shape {g.shape}")
    det_a = np.linalg.det(g[:2, :2])
    det_b = np.linalg.det(g[2:, 2:])
    det_c = np.linalg.det(g[:2, 2:])
    kappa = det_a + det_b - 2 * det_c
    radicand = kappa ** 2 - 4 * np.linalg.det(g)
    scale = max(kappa ** 2, 1.0)
    if radicand < -RADICAND_TOLERANCE * scale:
        raise NumericalConsistencyError(f"Negative radicand {radicand:.3e}: input is not physical")
    inner = (kappa - math.sqrt(max(radicand, 0.0))) / 2
    if inner < -RADICAND_TOLERANCE * scale:
        raise NumericalConsistencyError(f"Negative nu^2 {inner:.3e}: input is not physical")
    return math.sqrt(max(inner, 0.0))


def sigma_at(d: float, r: float, x: float, step_index: int) -> float:
    """Serafini Sigma for mode C after step 2 or step 3."""
    gamma = run_step2(make_gamma1(d, r, x))
    if step_index == 3:
        gamma = run_step3(gamma)
    elif step_index != 2:
        raise ParameterError(f"step_index must be 2 or 3, got {step_index}")
    return serafini_sigma(gamma, MODE_C)


def find_x_threshold(d: float, r: float, step_index: int = 2) -> ThresholdFit:
    """
    Fit Sigma(x) = x (u x + v) for mode C after the given step.

    Two points fix (u, v) exactly, a third one checks the quadratic model.
    x_th = -v/u when the parabola opens upwards with a positive root.
    """
    _check_squeezing(d, r)
    if step_index not in (2, 3):
        raise ParameterError(f"step_index must be 2 or 3, got {step_index}")

    x1, x2, x3 = THRESHOLD_FIT_POINTS
    f1 = sigma_at(d, r, x1, step_index) / x1
    f2 = sigma_at(d, r, x2, step_index) / x2
    u = (f2 - f1) / (x2 - x1)
    v = f1 - u * x1

    f3 = sigma_at(d, r, x3, step_index) / x3
    predicted = u * x3 + v
    scale = max(abs(f3), abs(u) * x3, abs(v), 1e-300)
    if abs(predicted - f3) > THRESHOLD_FIT_TOLERANCE * scale:
        raise NumericalConsistencyError(
            f"Sigma(x)/x is not affine at d={d}, r={r}, step {step_index}: "
            f"predicted {predicted:.12g}, got {f3:.12g}"
        )

    x_th = None
    interval = None
    if u > 0 and v < 0:
        x_th = -v / u
    elif u < 0 and v > 0:
        interval = (0.0, -v / u)
    logger.debug(f"Threshold fit step {step_index}: u={u:.6g}, v={v:.6g}, x_th={x_th}")
    return ThresholdFit(step_index=step_index, u=u, v=v, x_th=x_th, nonnegative_interval=interval)


def homodyne_condition(gamma: CovarianceMatrix, mode: int, angle: float) -> CovarianceMatrix:
    """
    Conditional covariance matrix of the other modes after homodyning
    cos(angle) x + sin(angle) p on one mode:
        Gamma - sigma (Pi Gamma_m Pi)^+ sigma^T,  Pi = n n^T.
    """
    g = gamma.entries
    n_modes = gamma.n_modes
    if not 0 <= mode < n_modes:
        raise DimensionError(f"Mode index {mode} out of range for {n_modes} modes")
    if n_modes < 2:
        raise DimensionError("Homodyne conditioning needs at least two modes")

    measured = [2 * mode, 2 * mode + 1]
    kept = [i for i in range(2 * n_modes) if i not in measured]
    block_kept = g[np.ix_(kept, kept)]
    cross = g[np.ix_(kept, measured)]
    block_measured = g[np.ix_(measured, measured)]

    n = np.array([math.cos(angle), math.sin(angle)])
    variance = float(n @ block_measured @ n)
    if variance <= PSD_TOLERANCE * max(float(np.max(np.abs(block_measured))), 1.0):
        raise NumericalConsistencyError(
            f"Measured quadrature has vanishing variance {variance:.3e}"
        )
    gain = cross @ n
    return CovarianceMatrix.symmetrized(block_kept - np.outer(gain, gain) / variance)


def run_protocol(params: ProtocolParams, with_measurement: bool = False,
                 measurement_angle: float = math.pi / 4) -> ProtocolReport:
    """Run steps 1-3 and collect every separability verdict."""
    d, r, x = params.d, params.r, params.x
    flags: List[str] = []

    gamma1 = make_gamma1(d, r, x)
    local = make_local_cms(d, r)
    witness = make_q_matrix(d, r, x)
    x_sep = compute_x_sep(d, r)

    if x == 0:
        flags.append(FLAG_DEGENERATE)
        logger.warning(f"Degenerate protocol input at d={d:.6g}, r={r:.6g}: x = 0")
    if x < x_sep or witness.psd != Separability.YES:
        flags.append(FLAG_NOT_CERTIFIED)
        logger.warning(f"x={x:.6g} below x_sep={x_sep:.6g}: {FLAG_NOT_CERTIFIED}")

    verdicts: List[SeparabilityVerdict] = [
        SeparabilityVerdict(
            partition=C_VS_AB,
            criterion=Criterion.PSD_WITNESS,
            statistic=witness.min_eigenvalue,
            separable=witness.psd,
            step=1,
            note="full separability of A, B, C",
        ),
        ppt_verdict(gamma1, A_VS_BC, step=1),
        ppt_verdict(gamma1, B_VS_AC, step=1),
        ppt_verdict(gamma1, C_VS_AB, step=1),
    ]

    gamma2 = run_step2(gamma1)
    sigma_c2 = serafini_verdict(gamma2, MODE_C, step=2)
    verdicts.extend([
        sigma_c2,
        serafini_verdict(gamma2, MODE_B, step=2),
        ppt_verdict(gamma2, C_VS_AB, step=2),
        ppt_verdict(gamma2, A_VS_BC, step=2),
    ])

    gamma3 = run_step3(gamma2)
    gamma3_ab = gamma3.reduced([MODE_A, MODE_B])
    nu = nu_ab(gamma3_ab)
    sigma_c3 = serafini_verdict(gamma3, MODE_C, step=3)
    verdicts.extend([
        SeparabilityVerdict(
            partition=A_VS_B,
            criterion=Criterion.PPT,
            statistic=nu,
            separable=classify(nu, 1.0),
            step=3,
        ),
        sigma_c3,
        ppt_verdict(gamma3, C_VS_AB, step=3),
    ])

    for item in verdicts:
        if item.separable == Separability.BOUNDARY:
            logger.warning(f"Boundary verdict {item.label}: statistic={item.statistic:.3e}")

    try:
        x_th = find_x_threshold(d, r, 2).x_th
    except NumericalConsistencyError as e:
        logger.warning(f"Threshold fit failed: {e}")
        x_th = None

    nu_m = None
    log_neg_m = None
    if with_measurement:
        conditioned = homodyne_condition(gamma3, MODE_C, measurement_angle)
        nu_m = nu_ab(conditioned)
        log_neg_m = log_negativity(nu_m) if nu_m > 0 else None

    for label, gamma in (("gamma2", gamma2), ("gamma3", gamma3)):
        if not is_physical(gamma):
            flags.append(f"{label} failed the physicality check")

    report = ProtocolReport(
        params=params,
        gamma1=gamma1,
        gamma2=gamma2,
        gamma3=gamma3,
        verdicts=verdicts,
        nu=nu,
        x_th=x_th,
        sigma_step2=sigma_c2.statistic,
        sigma_step3=sigma_c3.statistic,
        log_negativity=log_negativity(nu) if nu > 0 else float("inf"),
        local_states=local,
        witness=witness,
        nu_m=nu_m,
        log_negativity_m=log_neg_m,
        flags=flags,
    )
    logger.info(
        f"Protocol d={d:.6g} r={r:.6g} x={x:.6g}: nu={nu:.6f}, "
        f"sigma2={report.sigma_step2:.6f}, sigma3={report.sigma_step3:.6f}"
        + (f", nu_m={nu_m:.6f}" if nu_m is not None else "")
    )
    return report
