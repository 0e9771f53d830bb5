"""
Equilibrium search: 0 = f(x_e, ..., x_e, u_bar, ..., u_bar, P_s)

Damped Newton on the collapsed map x -> f(x, ..., x, u_bar, ..., u_bar, P_s)
from several starts. Convergence is declared on the residual max-norm.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import SolverConfig

from .autodiff_tool import collapsed_jacobian
from .errors import DomainError
from .model_ir_tool import EquilibriumPoint, ModelSpec, ParameterPoint, rhs_at_equilibrium

logger = logging.getLogger(__name__)

# Jacobians worse conditioned than this are treated as singular
SINGULAR_COND = 1e14


@dataclass
class SolveAttempt:
    """What happened to a single Newton start"""

    start: Tuple[float, ...]
    x: Tuple[float, ...]
    residual_norm: float
    iterations: int = 0
    gradient_steps: int = 0
    converged: bool = False
    reason: Optional[str] = None

    def to_dict(self) -> Dict:
        return {
            "start": list(self.start),
            "x": list(self.x),
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "gradient_steps": self.gradient_steps,
            "converged": self.converged,
            "reason": self.reason,
        }


@dataclass
class EquilibriumSearch:
    equilibria: List[EquilibriumPoint] = field(default_factory=list)
    attempts: List[SolveAttempt] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return bool(self.equilibria)

    @property
    def gradient_fallbacks(self) -> int:
        return sum(a.gradient_steps for a in self.attempts)


def _residual(spec: ModelSpec, point: ParameterPoint, x: np.ndarray) -> Optional[np.ndarray]:
    try:
        f = rhs_at_equilibrium(spec, point, x)
    except DomainError:
        return None
    return f if np.all(np.isfinite(f)) else None


def _newton_direction(J: np.ndarray, f: np.ndarray) -> Optional[np.ndarray]:
    if not np.all(np.isfinite(J)) or not np.linalg.cond(J) < SINGULAR_COND:
        return None
    try:
        step = np.linalg.solve(J, -f)
    except np.linalg.LinAlgError:
        return None
    return step if np.all(np.isfinite(step)) else None


def _line_search(
    spec: ModelSpec,
    point: ParameterPoint,
    x: np.ndarray,
    f: np.ndarray,
    step: np.ndarray,
    cfg: SolverConfig,
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Backtrack until 0.5*|f|^2 decreases"""
    merit = 0.5 * float(f @ f)
    t = 1.0
    for _ in range(cfg.max_backtracks):
        candidate = x + t * step
        f_new = _residual(spec, point, candidate)
        if f_new is not None and 0.5 * float(f_new @ f_new) < (1.0 - 1e-4 * t) * merit:
            return candidate, f_new
        t *= cfg.damping
    return None


def newton_solve(
    spec: ModelSpec,
    point: ParameterPoint,
    x0: Sequence[float],
    cfg: Optional[SolverConfig] = None,
) -> SolveAttempt:
    """Single-start damped Newton with a gradient fallback on singular steps"""
    cfg = cfg or SolverConfig()
    x = np.array(x0, dtype=float)
    start = tuple(float(v) for v in x)
    attempt = SolveAttempt(start=start, x=start, residual_norm=float("inf"))

    for iteration in range(cfg.max_iters + 1):
        try:
            f, J = collapsed_jacobian(spec, point, x)
        except DomainError as exc:
            attempt.reason = f"domain error: {exc.reason}"
            break
        if not np.all(np.isfinite(f)):
            attempt.reason = "non-finite residual"
            break

        attempt.x = tuple(float(v) for v in x)
        attempt.residual_norm = float(np.max(np.abs(f))) if f.size else 0.0
        attempt.iterations = iteration
        if attempt.residual_norm <= cfg.tol_residual:
            attempt.converged = True
            break
        if iteration == cfg.max_iters:
            attempt.reason = "iteration limit reached"
            break

        accepted = None
        step = _newton_direction(J, f)
        if step is not None:
            accepted = _line_search(spec, point, x, f, step, cfg)
        if accepted is None:
            # steepest descent on 0.5*|f|^2
            attempt.gradient_steps += 1
            accepted = _line_search(spec, point, x, f, -J.T @ f, cfg)
        if accepted is None:
            attempt.reason = "line search failed"
            break
        x, _ = accepted
        logger.debug("newton iter %d residual %.3e", iteration, attempt.residual_norm)

    return attempt


def starting_points(spec: ModelSpec, cfg: SolverConfig) -> List[np.ndarray]:
    """Box center first, then n_starts - 1 uniform draws from the seeded generator"""
    box = np.array(cfg.box_for(spec.n), dtype=float).reshape(spec.n, 2)
    lo, hi = box[:, 0], box[:, 1]
    rng = np.random.default_rng(cfg.seed)
    starts = [0.5 * (lo + hi)]
    starts.extend(rng.uniform(lo, hi) for _ in range(cfg.n_starts - 1))
    return starts


def _distinct(points: List[EquilibriumPoint], tol: float) -> List[EquilibriumPoint]:
    kept: List[EquilibriumPoint] = []
    for eq in sorted(points, key=lambda e: e.x_e):
        if all(np.max(np.abs(np.subtract(eq.x_e, k.x_e)), initial=0.0) > tol for k in kept):
            kept.append(eq)
    return kept


def search_equilibria(
    spec: ModelSpec, point: ParameterPoint, cfg: Optional[SolverConfig] = None
) -> EquilibriumSearch:
    """All distinct equilibria reached from the configured starts, with attempt records"""
    cfg = cfg or SolverConfig()
    search = EquilibriumSearch()
    converged = []
    for start in starting_points(spec, cfg):
        attempt = newton_solve(spec, point, start, cfg)
        search.attempts.append(attempt)
        if attempt.converged:
            converged.append(EquilibriumPoint(attempt.x, attempt.residual_norm, True))
        else:
            logger.debug("start %s failed: %s", attempt.start, attempt.reason)

    search.equilibria = _distinct(converged, cfg.distinct_tol)
    logger.info(
        "%d equilibria from %d starts (%d gradient fallbacks)",
        len(search.equilibria),
        len(search.attempts),
        search.gradient_fallbacks,
    )
    return search


def find_equilibria(
    spec: ModelSpec, point: ParameterPoint, cfg: Optional[SolverConfig] = None
) -> List[EquilibriumPoint]:
    return search_equilibria(spec, point, cfg).equilibria
