"""
Covariance-matrix algebra for Gaussian states.

Conventions:
- quadrature ordering (x1, p1, x2, p2, ...)
- vacuum covariance matrix is the identity
- symplectic form is the direct sum of J = [[0, 1], [-1, 0]]
"""
import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from core.errors import DimensionError, NumericalConsistencyError, ParameterError

logger = logging.getLogger(__name__)

# Tolerances
SYMMETRY_TOLERANCE = 1e-12
SYMPLECTIC_TOLERANCE = 1e-12
PHYSICALITY_TOLERANCE = 1e-9
PAIRING_TOLERANCE = 1e-8
ODD_COEFFICIENT_TOLERANCE = 1e-9

MODE_LABELS = "ABC"

ArrayLike = Union[np.ndarray, Sequence[Sequence[float]]]


def mode_label(mode: int) -> str:
    """Letter used in reports for a mode index (0 -> A)."""
    if 0 <= mode < len(MODE_LABELS):
        return MODE_LABELS[mode]
    return str(mode)


def _quadrature_indices(modes: Iterable[int]) -> List[int]:
    indices = []
    for mode in sorted(modes):
        indices.extend((2 * mode, 2 * mode + 1))
    return indices


def _check_square_even(matrix: np.ndarray, what: str) -> int:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {matrix.shape}")
    if matrix.shape[0] == 0 or matrix.shape[0] % 2:
        raise DimensionError(f"{what} must be 2n x 2n with n >= 1, got shape {matrix.shape}")
    return matrix.shape[0] // 2


def _check_mode(n_modes: int, mode: int) -> None:
    if not 0 <= mode < n_modes:
        raise DimensionError(f"Mode index {mode} out of range for {n_modes} modes")


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix = np.array(matrix, dtype=float)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Real symmetric 2n x 2n covariance matrix of an n-mode Gaussian state."""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        _check_square_even(entries, "Covariance matrix")
        scale = max(float(np.max(np.abs(entries))), 1.0)
        if np.max(np.abs(entries - entries.T)) > SYMMETRY_TOLERANCE * scale:
            raise ParameterError("Covariance matrix is not symmetric")
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0] // 2

    @classmethod
    def vacuum(cls, n_modes: int) -> "CovarianceMatrix":
        if n_modes < 1:
            raise ParameterError("n_modes must be >= 1")
        return cls(np.eye(2 * n_modes))

    @classmethod
    def symmetrized(cls, matrix: ArrayLike) -> "CovarianceMatrix":
        """Build from a matrix that is symmetric up to rounding."""
        matrix = np.asarray(matrix, dtype=float)
        return cls(0.5 * (matrix + matrix.T))

    def reduced(self, modes: Iterable[int]) -> "CovarianceMatrix":
        """Covariance matrix of the listed modes (partial trace over the rest)."""
        modes = sorted(set(modes))
        if not modes:
            raise DimensionError("Reduction needs at least one mode")
        for mode in modes:
            _check_mode(self.n_modes, mode)
        idx = _quadrature_indices(modes)
        return CovarianceMatrix(self.entries[np.ix_(idx, idx)])

    def block(self, row_mode: int, col_mode: int) -> np.ndarray:
        """2x2 block coupling two modes."""
        _check_mode(self.n_modes, row_mode)
        _check_mode(self.n_modes, col_mode)
        return np.array(self.entries[2 * row_mode:2 * row_mode + 2, 2 * col_mode:2 * col_mode + 2])

    def direct_sum(self, *others: "CovarianceMatrix") -> "CovarianceMatrix":
        return CovarianceMatrix(linalg.block_diag(self.entries, *(o.entries for o in others)))

    def with_isotropic_noise(self, epsilon: float) -> "CovarianceMatrix":
        """gamma + epsilon * identity."""
        return CovarianceMatrix(self.entries + epsilon * np.eye(self.entries.shape[0]))

    def det(self) -> float:
        return float(np.linalg.det(self.entries))

    def tolist(self) -> List[List[float]]:
        return self.entries.tolist()

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class SymplecticTransform:
    """Real 2n x 2n matrix S with S Omega S^T = Omega."""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        n_modes = _check_square_even(entries, "Symplectic transform")
        omega = symplectic_form(n_modes)
        scale = max(float(np.max(np.abs(entries))) ** 2, 1.0)
        defect = np.max(np.abs(entries @ omega @ entries.T - omega))
        if defect > SYMPLECTIC_TOLERANCE * scale:
            raise NumericalConsistencyError(
                f"Matrix is not symplectic (max defect {defect:.3e})"
            )
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0] // 2

    def compose(self, other: "SymplecticTransform") -> "SymplecticTransform":
        """self after other."""
        if other.n_modes != self.n_modes:
            raise DimensionError("Cannot compose transforms on different mode counts")
        return SymplecticTransform(self.entries @ other.entries)


@dataclass(frozen=True)
class ModePartition:
    """Bipartition of the modes into two disjoint, complementary sets."""
    left: FrozenSet[int]
    right: FrozenSet[int]

    def __post_init__(self):
        left, right = frozenset(self.left), frozenset(self.right)
        if not left or not right:
            raise ParameterError("Both sides of a partition must be nonempty")
        if left & right:
            raise ParameterError(f"Partition sides overlap: {sorted(left & right)}")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def split(cls, n_modes: int, right: Iterable[int]) -> "ModePartition":
        """Partition with the given modes on the right and the rest on the left."""
        right = frozenset(right)
        for mode in right:
            _check_mode(n_modes, mode)
        return cls(frozenset(range(n_modes)) - right, right)

    @property
    def n_modes(self) -> int:
        return len(self.left) + len(self.right)

    def validate(self, n_modes: int) -> None:
        if self.left | self.right != frozenset(range(n_modes)):
            raise DimensionError(f"Partition {self.label} does not cover {n_modes} modes")

    @property
    def label(self) -> str:
        left = "".join(mode_label(m) for m in sorted(self.left))
        right = "".join(mode_label(m) for m in sorted(self.right))
        return f"{left}|{right}"


@dataclass(frozen=True)
class InvariantTriple:
    """Even coefficients of det(Omega M - y 1) = y^6 + I1 y^4 + I2 y^2 + I3."""
    I1: float
    I2: float
    I3: float
    odd_coefficients: Tuple[float, ...] = field(default=(), compare=False)

    @property
    def sigma(self) -> float:
        return self.I1 - self.I2 + self.I3 - 1.0


def _as_matrix(value: Union[CovarianceMatrix, ArrayLike]) -> np.ndarray:
    if isinstance(value, (CovarianceMatrix, SymplecticTransform)):
        return np.array(value.entries)
    return np.asarray(value, dtype=float)


def symplectic_form(n_modes: int) -> np.ndarray:
    """Omega for n modes: block diagonal copies of [[0, 1], [-1, 0]]."""
    if n_modes < 1:
        raise ParameterError("n_modes must be >= 1")
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def balanced_beamsplitter(n_modes: int, mode_i: int, mode_j: int) -> SymplecticTransform:
    """
    50:50 beam splitter between two modes.

    Acts on both quadratures as
        x_i' = (x_i - x_j) / sqrt(2)
        x_j' = (x_i + x_j) / sqrt(2)
    and as the identity on every other mode.
    """
    _check_mode(n_modes, mode_i)
    _check_mode(n_modes, mode_j)
    if mode_i == mode_j:
        raise DimensionError("Beam splitter needs two distinct modes")

    h = 1.0 / np.sqrt(2.0)
    eye = np.eye(2)
    matrix = np.eye(2 * n_modes)
    i, j = 2 * mode_i, 2 * mode_j
    matrix[i:i + 2, i:i + 2] = h * eye
    matrix[i:i + 2, j:j + 2] = -h * eye
    matrix[j:j + 2, i:i + 2] = h * eye
    matrix[j:j + 2, j:j + 2] = h * eye
    return SymplecticTransform(matrix)


def rotation_block(angle: float) -> np.ndarray:
    """R(theta) = [[cos, sin], [-sin, cos]]; positive angles turn phase space clockwise."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


def local_gaussian(
    n_modes: int,
    mode: int,
    squeeze: float,
    rotation_angle: float = 0.0,
) -> SymplecticTransform:
    """Single-mode R(theta) diag(e^s, e^-s) embedded at one mode."""
    _check_mode(n_modes, mode)
    block = rotation_block(rotation_angle) @ np.diag([np.exp(squeeze), np.exp(-squeeze)])
    matrix = np.eye(2 * n_modes)
    matrix[2 * mode:2 * mode + 2, 2 * mode:2 * mode + 2] = block
    return SymplecticTransform(matrix)


def apply_transform(transform: SymplecticTransform, gamma: CovarianceMatrix) -> CovarianceMatrix:
    """S gamma S^T."""
    s = _as_matrix(transform)
    g = _as_matrix(gamma)
    if s.shape != g.shape:
        raise DimensionError(f"Transform {s.shape} does not match covariance matrix {g.shape}")
    return CovarianceMatrix.symmetrized(s @ g @ s.T)


def partial_transpose(gamma: Union[CovarianceMatrix, ArrayLike], modes: Iterable[int]) -> np.ndarray:
    """Lambda gamma Lambda with Lambda flipping the momentum of each listed mode."""
    g = _as_matrix(gamma)
    n_modes = _check_square_even(g, "Matrix")
    modes = set(modes)
    if not modes:
        raise DimensionError("Partial transpose needs at least one mode")
    signs = np.ones(2 * n_modes)
    for mode in modes:
        _check_mode(n_modes, mode)
        signs[2 * mode + 1] = -1.0
    return g * np.outer(signs, signs)


def symplectic_eigenvalues(matrix: Union[CovarianceMatrix, ArrayLike]) -> np.ndarray:
    """
    Sorted symplectic eigenvalues nu_k (spectrum of Omega M is {+-i nu_k}).

    The squares nu_k^2 are the eigenvalues of -(Omega M)^2, each appearing
    twice. For positive definite M the same spectrum is read off the
    symmetric matrix K^T K with K = M^1/2 Omega M^1/2, which keeps the
    computation real and well conditioned.
    """
    m = _as_matrix(matrix)
    n_modes = _check_square_even(m, "Matrix")
    scale = max(float(np.max(np.abs(m))), 1.0)
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOLERANCE * scale:
        raise NumericalConsistencyError("Symplectic eigenvalues need a symmetric matrix")
    m = 0.5 * (m + m.T)
    omega = symplectic_form(n_modes)

    w, v = linalg.eigh(m)
    if w[0] > 0:
        root = (v * np.sqrt(w)) @ v.T
        k = root @ omega @ root
        squares = linalg.eigvalsh(k.T @ k)
    else:
        a = omega @ m
        raw = np.linalg.eigvals(-(a @ a))
        if np.max(np.abs(raw.imag)) > PAIRING_TOLERANCE * max(np.max(np.abs(raw.real)), 1.0):
            raise NumericalConsistencyError("Symplectic spectrum is not real")
        squares = np.sort(raw.real)

    squares = np.sort(squares)
    pairs = squares.reshape(n_modes, 2)
    top = max(float(np.max(np.abs(squares))), 1.0)
    mismatch = np.max(np.abs(pairs[:, 1] - pairs[:, 0]))
    if mismatch > PAIRING_TOLERANCE * top:
        raise NumericalConsistencyError(
            f"Symplectic eigenvalue pairing failed (mismatch {mismatch:.3e})"
        )
    if pairs.min() < -PAIRING_TOLERANCE * top:
        raise NumericalConsistencyError("Negative squared symplectic eigenvalue")
    return np.sqrt(np.clip(pairs.mean(axis=1), 0.0, None))


def characteristic_coefficients(matrix: ArrayLike) -> np.ndarray:
    """
    Coefficients [1, c_{n-1}, ..., c_0] of det(y 1 - A), highest power first.

    Faddeev-LeVerrier trace recursion: no eigendecomposition involved.
    """
    a = np.asarray(matrix, dtype=float)
    size = a.shape[0]
    coefficients = np.zeros(size + 1)
    coefficients[0] = 1.0
    eye = np.eye(size)
    m = np.zeros_like(a)
    for k in range(1, size + 1):
        m = a @ m + coefficients[k - 1] * eye
        coefficients[k] = -np.trace(a @ m) / k
    return coefficients


def characteristic_invariants(matrix: Union[CovarianceMatrix, ArrayLike]) -> InvariantTriple:
    """I1, I2, I3 of det(Omega M - y 1) for a three-mode (6 x 6) matrix."""
    m = _as_matrix(matrix)
    n_modes = _check_square_even(m, "Matrix")
    if n_modes != 3:
        raise DimensionError(f"Characteristic invariants are defined for 3 modes, got {n_modes}")

    # Power-of-two scale s >= max|A|: the recursion runs on A/s and c_k = s^k c'_k exactly
    a = symplectic_form(3) @ m
    peak = float(np.max(np.abs(a)))
    scale = 2.0 ** np.frexp(peak)[1] if peak > 0 else 1.0
    scaled = characteristic_coefficients(a / scale)
    c = scaled * scale ** np.arange(7)

    # even dimension: det(A - y) = det(y - A)
    odd = (float(c[1]), float(c[3]), float(c[5]))
    bound = ODD_COEFFICIENT_TOLERANCE * max(float(np.max(np.abs(scaled[[2, 4, 6]]))), 1.0)
    if np.max(np.abs(scaled[[1, 3, 5]])) > bound:
        raise NumericalConsistencyError(
            f"Odd characteristic coefficients {odd} are not negligible (scale {scale:g})"
        )
    return InvariantTriple(I1=float(c[2]), I2=float(c[4]), I3=float(c[6]), odd_coefficients=odd)


def serafini_sigma(gamma: CovarianceMatrix, single_mode: int) -> float:
    """
    I1 - I2 + I3 - 1 for the matrix partially transposed on one mode.

    Nonnegative values mean the mode is separable from the other two.
    """
    g = _as_matrix(gamma)
    n_modes = _check_square_even(g, "Covariance matrix")
    if n_modes != 3:
        raise DimensionError("Serafini criterion needs a three-mode covariance matrix")
    _check_mode(n_modes, single_mode)
    return characteristic_invariants(partial_transpose(g, [single_mode])).sigma


def is_physical(gamma: Union[CovarianceMatrix, ArrayLike]) -> bool:
    """Bona fide check: every symplectic eigenvalue >= 1 (up to tolerance)."""
    g = _as_matrix(gamma)
    if np.min(linalg.eigvalsh(0.5 * (g + g.T))) <= 0:
        return False
    return bool(symplectic_eigenvalues(g)[0] >= 1.0 - PHYSICALITY_TOLERANCE)


def ppt_lowest_nu(gamma: CovarianceMatrix, partition: ModePartition) -> float:
    """Lowest symplectic eigenvalue of the partial transpose across a bipartition."""
    g = _as_matrix(gamma)
    n_modes = _check_square_even(g, "Covariance matrix")
    partition.validate(n_modes)
    return float(symplectic_eigenvalues(partial_transpose(g, partition.right))[0])


def log_negativity(nu: float) -> float:
    """max(0, -ln nu)."""
    if nu <= 0:
        raise ParameterError(f"Logarithmic negativity needs nu > 0, got {nu}")
    return max(0.0, -float(np.log(nu)))


def random_symplectic(n_modes: int, rng: np.random.Generator, layers: int = 3,
                      max_squeeze: float = 0.8) -> SymplecticTransform:
    """Random symplectic built from local squeezers/rotations and beam splitters."""
    transform = SymplecticTransform(np.eye(2 * n_modes))
    for _ in range(layers):
        for mode in range(n_modes):
            local = local_gaussian(
                n_modes, mode,
                squeeze=rng.uniform(-max_squeeze, max_squeeze),
                rotation_angle=rng.uniform(0, 2 * np.pi),
            )
            transform = local.compose(transform)
        if n_modes > 1:
            i, j = rng.choice(n_modes, size=2, replace=False)
            transform = balanced_beamsplitter(n_modes, int(i), int(j)).compose(transform)
    return transform
