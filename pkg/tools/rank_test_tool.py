"""
Complex-rank sufficient condition for identifiability of a linear delay model

    rank [B(z) | A(z)B(z) | ... | A(z)^(n-1) B(z)] = n  for some complex z

with A(z) = A_0 + sum_i A_i z^tau_i and B(z) = B_0 + sum_j B_j z^nu_j on the
principal branch of z^tau.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from config import RankConfig

from .errors import BranchCutError
from .linearization_tool import LinearDelayModel

logger = logging.getLogger(__name__)

DEFAULT_WITNESSES = (2 + 0j, 1 + 1j)


def _on_branch_cut(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0


def delay_poly(
    matrices: Sequence[np.ndarray], tags: Sequence[float], z: complex
) -> np.ndarray:
    """sum M_i z^tag_i; a zero tag contributes M_i exactly

    Raises BranchCutError when a nonzero tag needs z^tau for z on the closed
    negative real axis.
    """
    z = complex(z)
    out = np.zeros(np.shape(matrices[0]), dtype=complex)
    for M, tag in zip(matrices, tags):
        if tag == 0.0:
            out += M
            continue
        if _on_branch_cut(z):
            raise BranchCutError(f"z={z} lies on the branch cut of z^{tag}")
        out += M * cmath.exp(tag * cmath.log(z))
    return out


def kalman_block(model: LinearDelayModel, z: complex) -> np.ndarray:
    """n x n*k matrix [B(z) | A(z)B(z) | ... | A(z)^(n-1)B(z)]"""
    A = delay_poly(model.A, model.a_tags, z)
    B = delay_poly(model.B, model.b_tags, z)
    blocks = [B]
    for _ in range(model.n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def numerical_rank(M: np.ndarray, rel_tol: float = 1e-10) -> Tuple[int, np.ndarray, float]:
    """(rank, singular values descending, threshold)

    threshold = rel_tol * max(rows, cols) * sigma_max; an all-zero or empty
    matrix has rank 0.
    """
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0, np.zeros(0), 0.0
    sigma = linalg.svd(M, compute_uv=False)
    sigma_max = float(sigma[0]) if sigma.size else 0.0
    if sigma_max == 0.0:
        return 0, sigma, 0.0
    threshold = rel_tol * max(M.shape) * sigma_max
    return int(np.sum(sigma > threshold)), sigma, threshold


def controllability_rank(
    A: np.ndarray, B: np.ndarray, rel_tol: float = 1e-10
) -> int:
    """Classical Kalman rank of (A, B) for a delay-free system"""
    blocks = [np.asarray(B, dtype=float)]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return numerical_rank(np.hstack(blocks), rel_tol)[0]


@dataclass(frozen=True)
class RankSample:
    z: complex
    rank: int
    singular_values: Tuple[float, ...]
    threshold: float

    def to_dict(self) -> Dict:
        return {
            "z": [self.z.real, self.z.imag],
            "rank": self.rank,
            "singular_values": list(self.singular_values),
            "threshold": self.threshold,
        }


@dataclass
class RankVerdict:
    n: int
    per_z: List[RankSample] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    rel_tol: float = 1e-10

    @property
    def identifiable(self) -> bool:
        return any(sample.rank == self.n for sample in self.per_z)

    @property
    def z_witness(self) -> Optional[complex]:
        for sample in self.per_z:
            if sample.rank == self.n:
                return sample.z
        return None

    def to_dict(self) -> Dict:
        witness = self.z_witness
        return {
            "identifiable": self.identifiable,
            "z_witness": None if witness is None else [witness.real, witness.imag],
            "rel_tol": self.rel_tol,
            "per_z": [sample.to_dict() for sample in self.per_z],
            "notes": list(self.notes),
        }


def sweep_rank(
    model: LinearDelayModel, z_samples: Sequence[complex], rel_tol: float = 1e-10
) -> RankVerdict:
    """Evaluate the Kalman block rank at every sample; branch-cut samples are noted and skipped"""
    if not z_samples:
        raise ValueError("sweep_rank needs at least one z sample")
    verdict = RankVerdict(n=model.n, rel_tol=rel_tol)
    for z in z_samples:
        try:
            block = kalman_block(model, z)
        except BranchCutError as exc:
            verdict.notes.append(f"skipped: {exc}")
            continue
        rank, sigma, threshold = numerical_rank(block, rel_tol)
        verdict.per_z.append(
            RankSample(complex(z), rank, tuple(float(s) for s in sigma), threshold)
        )
        logger.debug("z=%s rank %d/%d", z, rank, model.n)

    if not verdict.identifiable:
        verdict.notes.append(
            "rank condition not met at any sampled z; the condition is sufficient only"
        )
    return verdict


def default_z_samples(
    count: int = 14,
    seed: int = 0,
    extra: Sequence[complex] = (),
    radius: Tuple[float, float] = (0.5, 3.0),
    arg_margin: float = 0.1,
) -> List[complex]:
    """2, 1+i, user values, then ``count`` seeded points off the branch cut"""
    samples = list(DEFAULT_WITNESSES) + [complex(z) for z in extra]
    rng = np.random.default_rng(seed)
    arg_max = math.pi - arg_margin
    for _ in range(count):
        modulus = rng.uniform(*radius)
        angle = rng.uniform(-arg_max, arg_max)
        samples.append(complex(cmath.rect(modulus, angle)))
    return samples


def z_samples_for(cfg: RankConfig) -> List[complex]:
    return default_z_samples(cfg.n_random, cfg.seed, cfg.extra_z, cfg.radius, cfg.arg_margin)
