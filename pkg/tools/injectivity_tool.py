"""
Local injectivity of the parameter-to-coefficient map

    P_s -> (vec A_0, ..., vec A_l, vec B_0, ..., vec B_r)

A full column rank Jacobian at a probe point means equal coefficient
matrices force equal parameters near that point. The result is local only.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from config import InjectivityConfig, SolverConfig

from .equilibrium_tool import newton_solve
from .errors import DomainError
from .linearization_tool import LinearDelayModel, linearize
from .model_ir_tool import EquilibriumPoint, ModelSpec, ParameterPoint
from .rank_test_tool import numerical_rank

logger = logging.getLogger(__name__)

# null-space weight above which a parameter counts as entangled
ENTANGLED_WEIGHT = 1e-6


def coefficient_labels(spec: ModelSpec) -> List[str]:
    """Names of the vectorized coefficient entries, row-major per matrix"""
    labels = []
    for d in range(spec.l + 1):
        labels += [f"A{d}[{i + 1},{j + 1}]" for i in range(spec.n) for j in range(spec.n)]
    for d in range(spec.r + 1):
        labels += [f"B{d}[{i + 1},{j + 1}]" for i in range(spec.n) for j in range(spec.k)]
    return labels


def coefficient_vector(model: LinearDelayModel) -> np.ndarray:
    parts = [M.ravel() for M in model.A] + [M.ravel() for M in model.B]
    return np.concatenate(parts) if parts else np.zeros(0)


@dataclass
class CoeffMapJacobian:
    matrix: np.ndarray
    # parameter name -> why its column could not be computed
    failures: Dict[str, str] = field(default_factory=dict)


def _coefficients_at(
    spec: ModelSpec, point: ParameterPoint, x_start: Sequence[float], solver: SolverConfig
) -> Tuple[Optional[np.ndarray], Optional[str]]:
    attempt = newton_solve(spec, point, x_start, solver)
    if not attempt.converged:
        return None, f"equilibrium tracking failed: {attempt.reason}"
    eq = EquilibriumPoint(attempt.x, attempt.residual_norm, True)
    try:
        return coefficient_vector(linearize(spec, point, eq)), None
    except DomainError as exc:
        return None, f"linearization failed: {exc}"


def coeff_map_jacobian(
    spec: ModelSpec,
    point: ParameterPoint,
    eq: EquilibriumPoint,
    cfg: Optional[InjectivityConfig] = None,
    solver: Optional[SolverConfig] = None,
) -> CoeffMapJacobian:
    """Central differences of the coefficient vector in each parameter

    The equilibrium is re-solved from x_e for every perturbed point, so a
    parameter-dependent x_e is differentiated through as well.
    """
    if not eq.converged:
        raise ValueError("coefficient map needs a converged equilibrium")
    cfg = cfg or InjectivityConfig()
    solver = solver or SolverConfig()
    rows = (spec.l + 1) * spec.n * spec.n + (spec.r + 1) * spec.n * spec.k
    J = np.zeros((rows, spec.p))
    failures: Dict[str, str] = {}

    h = cfg.fd_step
    for index, name in enumerate(spec.param_names):
        value = point.p_s[index]
        plus, why_plus = _coefficients_at(
            spec, point.with_param(index, value + h), eq.x_e, solver
        )
        minus, why_minus = _coefficients_at(
            spec, point.with_param(index, value - h), eq.x_e, solver
        )
        if plus is None or minus is None:
            failures[name] = why_plus or why_minus
            logger.warning("column %s skipped: %s", name, failures[name])
            continue
        J[:, index] = (plus - minus) / (2.0 * h)

    return CoeffMapJacobian(J, failures)


@dataclass
class CoeffMapReport:
    map_dim: Tuple[int, int]
    jacobian_rank: int
    singular_values: Tuple[float, ...]
    threshold: float
    sensitive_coeffs: Dict[str, List[str]]
    entangled: List[str]
    tracking_failures: Dict[str, str]
    probe_points: List[ParameterPoint]

    @property
    def locally_injective(self) -> bool:
        return self.jacobian_rank == self.map_dim[1] and not self.tracking_failures

    def to_dict(self) -> Dict:
        return {
            "map_dim": list(self.map_dim),
            "jacobian_rank": self.jacobian_rank,
            "locally_injective": self.locally_injective,
            "singular_values": list(self.singular_values),
            "threshold": self.threshold,
            "sensitive_coeffs": {k: list(v) for k, v in self.sensitive_coeffs.items()},
            "entangled": list(self.entangled),
            "tracking_failures": dict(self.tracking_failures),
            "probe_points": [p.to_dict() for p in self.probe_points],
        }


def _entangled(J: np.ndarray, rank: int, names: Sequence[str]) -> List[str]:
    if rank >= J.shape[1]:
        return []
    _, _, vh = linalg.svd(J, full_matrices=True)
    null = vh[rank:, :]
    weight = np.max(np.abs(null), axis=0)
    return [name for name, w in zip(names, weight) if w > ENTANGLED_WEIGHT]


def injectivity_verdict(
    jac,
    rel_tol: float = 1e-6,
    param_names: Optional[Sequence[str]] = None,
    labels: Optional[Sequence[str]] = None,
    probe: Optional[ParameterPoint] = None,
) -> CoeffMapReport:
    """Column rank of the coefficient-map Jacobian compared with p

    ``jac`` may be a CoeffMapJacobian or a bare matrix.
    """
    if isinstance(jac, CoeffMapJacobian):
        J, failures = jac.matrix, dict(jac.failures)
    else:
        J, failures = np.asarray(jac, dtype=float), {}
    rows, cols = J.shape
    names = list(param_names) if param_names is not None else [f"p{i + 1}" for i in range(cols)]
    labels = list(labels) if labels is not None else [f"c{i + 1}" for i in range(rows)]

    rank, sigma, threshold = numerical_rank(J, rel_tol) if cols else (0, np.zeros(0), 0.0)
    sensitive = {
        name: [labels[e] for e in range(rows) if threshold > 0 and abs(J[e, c]) > threshold]
        for c, name in enumerate(names)
    }
    return CoeffMapReport(
        map_dim=(rows, cols),
        jacobian_rank=rank,
        singular_values=tuple(float(s) for s in sigma),
        threshold=threshold,
        sensitive_coeffs=sensitive,
        entangled=_entangled(J, rank, names) if cols else [],
        tracking_failures=failures,
        probe_points=[probe] if probe is not None else [],
    )
