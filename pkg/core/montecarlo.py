"""
Monte Carlo simulation of the LOCC preparation.

Alice and Bob start from the pure product state gamma_A + gamma_B + gamma_C and
displace their modes by random correlated Gaussian displacements. Averaged over
the displacements the state has covariance matrix gamma1(x).

Normalization: with vacuum = identity, a displacement with probability
covariance M adds 2M to the covariance matrix, so displacements are drawn with
covariance correlation / 2.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from config import resolve_workers, settings
from core.errors import NumericalConsistencyError, ParameterError
from core.protocol import (
    A_VS_B,
    MODE_A,
    MODE_B,
    Criterion,
    ProtocolParams,
    SeparabilityVerdict,
    classify,
    make_local_cms,
    make_q_matrix,
    nu_ab,
    run_step2,
    run_step3,
)
from core.symplectic import CovarianceMatrix, ppt_lowest_nu, symplectic_eigenvalues

logger = logging.getLogger(__name__)

PSD_CLIP_TOLERANCE = 1e-9
UNPHYSICAL_STDERR_FACTOR = 3.0

FLAG_UNRELIABLE = "estimate statistically unreliable"
FLAG_UNPHYSICAL = "estimate marginally unphysical"


@dataclass(frozen=True, eq=False)
class DisplacementEnsemble:
    """Displacement vectors (one row per sample) and the CM increment they target."""
    samples: np.ndarray
    seed: int
    block_size: int
    target_correlation: np.ndarray

    @property
    def n(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class CmEstimate:
    """Ensemble-averaged covariance matrix with its error scale."""
    mean_vector: np.ndarray
    cm: CovarianceMatrix
    n: int
    stderr_scale: float
    block_size: int
    flags: List[str] = field(default_factory=list)

    @property
    def reliable(self) -> bool:
        return FLAG_UNRELIABLE not in self.flags


def displacement_root(correlation: np.ndarray) -> np.ndarray:
    """
    Symmetric square root of correlation / 2, clipping eigenvalues within
    -1e-9 ||correlation|| of zero (rank-deficient correlations are allowed).
    """
    corr = np.asarray(correlation, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ParameterError(f"Correlation must be square, got shape {corr.shape}")
    corr = 0.5 * (corr + corr.T)
    w, v = linalg.eigh(corr)
    scale = max(float(np.max(np.abs(w))), 1.0) if w.size else 1.0
    if w.size and w[0] < -PSD_CLIP_TOLERANCE * scale:
        raise NumericalConsistencyError(
            f"Correlation matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})"
        )
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w / 2.0)) @ v.T


def _block_layout(n: int, block_size: int) -> List[Tuple[int, int]]:
    return [(start, min(start + block_size, n)) for start in range(0, n, block_size)]


def _block_generator(seed: int, block_index: int) -> np.random.Generator:
    """Counter-based stream for one block, keyed by (seed, block index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block_index])))


def _draw_block(seed: int, block_index: int, size: int, root: np.ndarray) -> np.ndarray:
    z = _block_generator(seed, block_index).standard_normal((size, root.shape[0]))
    return z @ root


def sample_displacements(
    correlation: np.ndarray,
    n: int,
    seed: int,
    workers: int = 0,
    block_size: Optional[int] = None,
) -> DisplacementEnsemble:
    """
    Draw n zero-mean Gaussian displacements whose CM increment is `correlation`.

    Samples are generated in fixed-size blocks with independent Philox
    streams keyed by (seed, block index). The ensemble depends on
    (correlation, n, seed, block_size) and not on the worker count.
    """
    if n < 1:
        raise ParameterError(f"Sample count must be >= 1, got {n}")
    if seed < 0:
        raise ParameterError(f"Seed must be a nonnegative integer, got {seed}")
    block_size = settings.MC_BLOCK_SIZE if block_size is None else block_size
    if block_size < 1:
        raise ParameterError(f"Block size must be >= 1, got {block_size}")
    root = displacement_root(correlation)
    layout = _block_layout(n, block_size)
    workers = min(resolve_workers(workers), len(layout))

    logger.debug(f"Sampling {n} displacements in {len(layout)} blocks on {workers} workers")
    if workers <= 1:
        blocks = [_draw_block(seed, i, stop - start, root) for i, (start, stop) in enumerate(layout)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(
                lambda item: _draw_block(seed, item[0], item[1][1] - item[1][0], root),
                enumerate(layout),
            ))

    samples = np.concatenate(blocks, axis=0)
    samples.setflags(write=False)
    target = np.asarray(correlation, dtype=float)
    return DisplacementEnsemble(samples=samples, seed=seed, block_size=block_size,
                                target_correlation=target)


def estimate_cm(
    base: CovarianceMatrix,
    ensemble: DisplacementEnsemble,
    block_size: Optional[int] = None,
) -> CmEstimate:
    """
    Covariance matrix of the displaced ensemble: base + 2 * sample covariance.

    Block sums are combined with numpy's pairwise summation, so the result
    does not depend on how the blocks were produced.
    """
    n = ensemble.n
    if n < 2:
        raise ParameterError("A covariance estimate needs at least 2 samples")
    block_size = ensemble.block_size if block_size is None else block_size
    if block_size < 1:
        raise ParameterError(f"Block size must be >= 1, got {block_size}")
    samples = ensemble.samples

    layout = _block_layout(n, block_size)
    first = np.stack([samples[a:b].sum(axis=0) for a, b in layout]).sum(axis=0)
    second = np.stack([samples[a:b].T @ samples[a:b] for a, b in layout]).sum(axis=0)

    mean = first / n
    covariance = (second - n * np.outer(mean, mean)) / (n - 1)
    cm = CovarianceMatrix.symmetrized(base.entries + 2.0 * covariance)

    target = np.asarray(ensemble.target_correlation, dtype=float)
    stderr_scale = float(np.max(np.abs(target))) * math.sqrt(2.0 / n)

    flags = []
    if n < settings.MC_MIN_RELIABLE_SAMPLES:
        flags.append(FLAG_UNRELIABLE)
        logger.warning(f"Only {n} samples: {FLAG_UNRELIABLE}")
    return CmEstimate(mean_vector=mean, cm=cm, n=n, stderr_scale=stderr_scale,
                      block_size=ensemble.block_size, flags=flags)


def simulate_preparation(params: ProtocolParams, n: int, seed: int, workers: int = 0) -> CmEstimate:
    """Estimate gamma1(x) by displacing the pure local states with Q(x)-correlated noise."""
    if n < 2:
        raise ParameterError(f"Preparation needs n >= 2 samples, got {n}")
    local = make_local_cms(params.d, params.r)
    witness = make_q_matrix(params.d, params.r, params.x)
    ensemble = sample_displacements(witness.q, n, seed, workers=workers)
    estimate = estimate_cm(local.product, ensemble)
    logger.info(
        f"Simulated preparation: n={n}, seed={seed}, stderr_scale={estimate.stderr_scale:.3e}"
    )
    return estimate


def simulate_protocol(params: ProtocolParams, n: int, seed: int,
                      workers: int = 0) -> Tuple[CmEstimate, CovarianceMatrix]:
    """Estimated gamma1 and the reduced A-B state after steps 2 and 3 applied to it."""
    estimate = simulate_preparation(params, n, seed, workers=workers)
    gamma3 = run_step3(run_step2(estimate.cm))
    return estimate, gamma3.reduced([MODE_A, MODE_B])


def verify_simon(gamma_ab: CovarianceMatrix, stderr_scale: Optional[float] = None) -> SeparabilityVerdict:
    """
    Simon criterion (two-mode PPT) on a possibly estimated A-B covariance matrix.

    Estimates are symmetrized first; a marginally unphysical estimate is flagged
    in the verdict note instead of rejected.
    """
    g = np.asarray(gamma_ab, dtype=float)
    gamma = CovarianceMatrix.symmetrized(g)
    notes = []
    if stderr_scale is not None:
        lowest = float(symplectic_eigenvalues(gamma)[0])
        if lowest < 1.0 - UNPHYSICAL_STDERR_FACTOR * stderr_scale:
            notes.append(FLAG_UNPHYSICAL)
            logger.warning(f"{FLAG_UNPHYSICAL}: lowest symplectic eigenvalue {lowest:.6f}")
    try:
        nu = nu_ab(gamma)
    except NumericalConsistencyError as e:
        # closed form breaks down off the physical set; fall back to the spectrum
        nu = ppt_lowest_nu(gamma, A_VS_B)
        notes.append(f"closed-form nu unavailable ({e})")
    return SeparabilityVerdict(
        partition=A_VS_B,
        criterion=Criterion.PPT,
        statistic=nu,
        separable=classify(nu, 1.0),
        step=3,
        note="; ".join(notes),
    )
