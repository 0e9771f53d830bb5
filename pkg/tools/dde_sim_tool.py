"""
Method-of-steps simulation of delay systems

Fixed-step classical RK4 on the grid t_i = i*h. Delayed states are read from
a cubic Hermite interpolant of the already computed solution (or from the
history function for t <= 0); delayed inputs are evaluated exactly from the
piecewise-constant InputSignal. Input switches are snapped onto the grid, a
step containing a jump of some delayed input u(t - nu) is split at the jump,
and every substep uses one-sided input values, so no substep straddles a
discontinuity.
"""

import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import stats
from scipy.integrate import trapezoid

from config import SolverConfig

from .equilibrium_tool import find_equilibria, newton_solve
from .errors import DomainError, GridError, SimulationError
from .linearization_tool import LinearDelayModel
from .model_ir_tool import EquilibriumPoint, ModelSpec, ParameterPoint, evaluate_equations
from .signals_tool import InputSignal

logger = logging.getLogger(__name__)

History = Callable[[float], np.ndarray]
# (state slots z_0..z_l, input slots w_0..w_r) -> dx/dt
SlotRhs = Callable[[List[np.ndarray], List[np.ndarray]], np.ndarray]


def constant_history(x: Sequence[float]) -> History:
    value = np.array(x, dtype=float)
    return lambda s: value


def _as_history(phi: Union[History, Sequence[float]]) -> History:
    return phi if callable(phi) else constant_history(phi)


@dataclass
class Trajectory:
    """Grid solution plus everything needed for dense evaluation"""

    t: np.ndarray
    x: np.ndarray
    dx_right: np.ndarray
    dx_left: np.ndarray
    h: float
    history: History
    input: InputSignal
    tau_m: float = 0.0
    point: Optional[ParameterPoint] = None
    truncated: bool = False
    diagnostic: Optional[str] = None

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def sample(self, s: float) -> np.ndarray:
        """x(s) for s in [-tau_m, T] from the history or the Hermite interpolant"""
        if s <= 0.0:
            return np.asarray(self.history(s), dtype=float)
        last = len(self.t) - 1
        if last == 0:
            return self.x[0].copy()
        k = min(int(s // self.h), last - 1)
        return _hermite(self, k, s)

    def outputs(self, C: np.ndarray) -> np.ndarray:
        return self.x @ np.asarray(C, dtype=float).T

    def to_frame(self) -> pd.DataFrame:
        columns = {"t": self.t}
        for i in range(self.n):
            columns[f"x{i + 1}"] = self.x[:, i]
        inputs = np.array([self.input.value(float(t)) for t in self.t]).reshape(len(self.t), -1)
        for j in range(inputs.shape[1]):
            columns[f"u{j + 1}"] = inputs[:, j]
        return pd.DataFrame(columns)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)

    def to_dict(self) -> Dict:
        return {
            "T": self.T,
            "h": self.h,
            "steps": len(self.t) - 1,
            "truncated": self.truncated,
            "diagnostic": self.diagnostic,
            "final_state": [float(v) for v in self.x[-1]],
            "input": self.input.to_dict(),
        }


def _hermite(traj: Trajectory, k: int, s: float) -> np.ndarray:
    h = traj.h
    theta = (s - traj.t[k]) / h
    t2, t3 = theta * theta, theta * theta * theta
    return (
        (2 * t3 - 3 * t2 + 1) * traj.x[k]
        + (t3 - 2 * t2 + theta) * h * traj.dx_right[k]
        + (-2 * t3 + 3 * t2) * traj.x[k + 1]
        + (t3 - t2) * h * traj.dx_left[k + 1]
    )


def _integrate(
    rhs: SlotRhs,
    n: int,
    tau: Sequence[float],
    nu: Sequence[float],
    u: InputSignal,
    phi: History,
    T: float,
    h: float,
    point: Optional[ParameterPoint] = None,
) -> Trajectory:
    if h <= 0 or T <= 0:
        raise GridError(f"need h > 0 and T > 0, got h={h}, T={T}")
    steps = int(round(T / h))
    if steps < 1:
        raise GridError(f"horizon T={T} shorter than one step h={h}")
    if tau and min(tau) < h * (1 - 1e-9):
        raise GridError(f"state delay {min(tau)} smaller than step h={h}")

    u = u.snapped(h)
    t = np.arange(steps + 1) * h
    x = np.zeros((steps + 1, n))
    dxr = np.zeros((steps + 1, n))
    dxl = np.zeros((steps + 1, n))
    traj = Trajectory(t, x, dxr, dxl, h, phi, u, max(tau, default=0.0), point)

    def state_at(s: float, done: int) -> np.ndarray:
        if s <= 0.0:
            return np.asarray(phi(s), dtype=float)
        if done == 0:
            return x[0]
        return _hermite(traj, min(int(s // h), done - 1), s)

    def lagged(s: float, done: int) -> List[np.ndarray]:
        return [state_at(s - d, done) for d in tau]

    def inputs(s: float, left: bool) -> List[np.ndarray]:
        return [u.value(s, left)] + [u.value(s - d, left) for d in nu]

    def stop(i: int, reason: str) -> Trajectory:
        logger.warning("simulation truncated at t=%.6g: %s", t[i], reason)
        traj.t, traj.x = t[: i + 1], x[: i + 1]
        traj.dx_right, traj.dx_left = dxr[: i + 1], dxl[: i + 1]
        traj.truncated, traj.diagnostic = True, f"{reason} at t={t[i]:.6g}"
        return traj

    # u(t - nu_l) jumps at s + nu_l; these fall between grid points in general
    breaks = sorted({s + d for s in u.jump_times() for d in nu if s + d > 0.0})
    tol = 1e-9 * h

    def rk4(a: float, b: float, xa: np.ndarray, i: int):
        # inputs are constant on the open substep; read them at its midpoint
        g = b - a
        mid = a + 0.5 * g
        w = inputs(mid, False)
        lag_mid = lagged(mid, i)
        lag_end = lagged(b, i)
        k1 = rhs([xa] + lagged(a, i), w)
        k2 = rhs([xa + 0.5 * g * k1] + lag_mid, w)
        k3 = rhs([xa + 0.5 * g * k2] + lag_mid, w)
        k4 = rhs([xa + g * k3] + lag_end, w)
        return xa + (g / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), k1, w, lag_end

    x[0] = np.asarray(phi(0.0), dtype=float)

    for i in range(steps):
        tn = t[i + 1]
        lo = bisect_right(breaks, t[i] + tol)
        hi = bisect_left(breaks, tn - tol)
        nodes = [t[i]] + breaks[lo:hi] + [tn]
        try:
            x_next = x[i]
            for a, b in zip(nodes, nodes[1:]):
                x_next, k1, w_end, lag_end = rk4(a, b, x_next, i)
                if a == t[i]:
                    dxr[i] = k1
            if not np.all(np.isfinite(x_next)):
                return stop(i, "non-finite state")
            x[i + 1] = x_next
            dxl[i + 1] = rhs([x_next] + lag_end, w_end)
        except DomainError as exc:
            return stop(i, f"domain error: {exc}")
        if not (np.all(np.isfinite(dxl[i + 1])) and np.all(np.isfinite(dxr[i]))):
            return stop(i, "non-finite derivative")

    try:
        dxr[steps] = rhs([x[steps]] + lagged(t[steps], steps), inputs(t[steps], False))
    except DomainError:
        dxr[steps] = dxl[steps]
    return traj


def simulate_nonlinear(
    spec: ModelSpec,
    point: ParameterPoint,
    phi: Union[History, Sequence[float]],
    u: InputSignal,
    T: float,
    h: float,
) -> Trajectory:
    """Integrate dx/dt = f(x(t), x(t - tau_i), u(t), u(t - nu_j), P_s)"""
    if u.k != spec.k:
        raise ValueError(f"input has {u.k} channels, model has {spec.k} inputs")
    p = list(point.p_s)

    def rhs(z, w):
        values = evaluate_equations(spec, [list(s) for s in z], [list(s) for s in w], p)
        return np.array(values, dtype=float)

    return _integrate(rhs, spec.n, point.tau, point.nu, u, _as_history(phi), T, h, point)


def simulate_linear(model: LinearDelayModel, nu: InputSignal, T: float, h: float) -> Trajectory:
    """Integrate the linearization from the zero initial function"""
    if nu.k != model.k:
        raise ValueError(f"input has {nu.k} channels, model has {model.k} inputs")

    def rhs(z, w):
        out = np.zeros(model.n)
        for A, zi in zip(model.A, z):
            out = out + A @ zi
        for B, wj in zip(model.B, w):
            out = out + B @ wj
        return out

    return _integrate(
        rhs,
        model.n,
        model.a_tags[1:],
        model.b_tags[1:],
        nu,
        constant_history(np.zeros(model.n)),
        T,
        h,
    )


# experiments


@dataclass
class ScalingReport:
    """Growth of the deviation and of the linearization remainder with the input size"""

    eps: List[float] = field(default_factory=list)
    max_deviation: List[float] = field(default_factory=list)
    max_remainder: List[float] = field(default_factory=list)
    slope_deviation: Optional[float] = None
    slope_remainder: Optional[float] = None
    dropped: Dict[float, str] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    nu_norm: float = 0.0
    T: float = 0.0
    h: float = 0.0

    def to_dict(self) -> Dict:
        return {
            "eps": list(self.eps),
            "max_deviation": list(self.max_deviation),
            "max_remainder": list(self.max_remainder),
            "slope_deviation": self.slope_deviation,
            "slope_remainder": self.slope_remainder,
            "dropped": {repr(k): v for k, v in self.dropped.items()},
            "notes": list(self.notes),
            "nu_norm": self.nu_norm,
            "T": self.T,
            "h": self.h,
        }


def _loglog_slope(eps: Sequence[float], values: Sequence[float]) -> Optional[float]:
    if any(v <= 0.0 for v in values):
        return None
    return float(stats.linregress(np.log(eps), np.log(values)).slope)


def scaling_experiment(
    spec: ModelSpec,
    point: ParameterPoint,
    eq: EquilibriumPoint,
    model: LinearDelayModel,
    nu_bar: InputSignal,
    eps_list: Sequence[float],
    T: float,
    h: float,
) -> ScalingReport:
    """Simulate at u_bar + eps*nu_bar/|nu_bar| and fit the log-log slopes of

    m1(eps) = max |x - x_e| and m2(eps) = max |x - x_e - xi|.
    """
    if len(eps_list) < 3 or any(e <= 0 for e in eps_list):
        raise ValueError("eps_list needs at least 3 positive values")
    norm = nu_bar.l2_norm(T)
    if norm == 0.0:
        raise SimulationError("perturbation signal has zero L2 norm")

    report = ScalingReport(nu_norm=norm, T=T, h=h)
    x_e = np.array(eq.x_e)
    for eps in eps_list:
        nu = nu_bar.scaled(eps / norm)
        full = simulate_nonlinear(spec, point, x_e, nu.offset(point.u_bar), T, h)
        linear = simulate_linear(model, nu, T, h)
        if full.truncated or linear.truncated:
            reason = full.diagnostic or linear.diagnostic
            report.dropped[eps] = reason
            logger.debug("dropped eps=%g: %s", eps, reason)
            continue
        deviation = full.x - x_e
        report.eps.append(float(eps))
        report.max_deviation.append(float(np.max(np.abs(deviation))))
        report.max_remainder.append(float(np.max(np.abs(deviation - linear.x))))

    if len(report.eps) < 3:
        raise SimulationError(
            f"only {len(report.eps)} eps values survived; at least 3 are needed"
        )
    report.slope_deviation = _loglog_slope(report.eps, report.max_deviation)
    report.slope_remainder = _loglog_slope(report.eps, report.max_remainder)
    if report.slope_remainder is None:
        report.notes.append("linearization remainder vanished; model is linear in the slots")
    return report


@dataclass
class SeparationReport:
    l2_gap: float
    max_gap: float
    equilibrium_gap: float
    T: float
    h: float
    truncated: bool = False

    def to_dict(self) -> Dict:
        return {
            "l2_gap": self.l2_gap,
            "max_gap": self.max_gap,
            "equilibrium_gap": self.equilibrium_gap,
            "T": self.T,
            "h": self.h,
            "truncated": self.truncated,
        }


def _equilibrium_for(
    spec: ModelSpec,
    point: ParameterPoint,
    solver: SolverConfig,
    near: Optional[Sequence[float]] = None,
) -> EquilibriumPoint:
    if near is not None:
        attempt = newton_solve(spec, point, near, solver)
        if attempt.converged:
            return EquilibriumPoint(attempt.x, attempt.residual_norm, True)
    found = find_equilibria(spec, point, solver)
    if not found:
        raise SimulationError("no equilibrium to start the simulation from")
    return found[0]


def distinguishability_experiment(
    spec: ModelSpec,
    point: ParameterPoint,
    point_perturbed: ParameterPoint,
    u: InputSignal,
    T: float,
    h: float,
    solver: Optional[SolverConfig] = None,
) -> SeparationReport:
    """Output gap between two parameter points driven by the same input

    Both runs start from their own equilibrium; the perturbed one is tracked
    from the nominal x_e. A near-zero gap is evidence, never proof.
    """
    solver = solver or SolverConfig()
    eq = _equilibrium_for(spec, point, solver)
    eq_tilde = _equilibrium_for(spec, point_perturbed, solver, near=eq.x_e)

    first = simulate_nonlinear(spec, point, eq.x_e, u, T, h)
    second = simulate_nonlinear(spec, point_perturbed, eq_tilde.x_e, u, T, h)
    steps = min(len(first.t), len(second.t))
    C = spec.output_matrix
    gap = first.outputs(C)[:steps] - second.outputs(C)[:steps]
    squared = np.sum(gap * gap, axis=1)

    return SeparationReport(
        l2_gap=float(np.sqrt(trapezoid(squared, first.t[:steps]))) if steps > 1 else 0.0,
        max_gap=float(np.max(np.abs(gap))) if gap.size else 0.0,
        equilibrium_gap=float(np.max(np.abs(eq.y_e(spec) - eq_tilde.y_e(spec)), initial=0.0)),
        T=T,
        h=h,
        truncated=first.truncated or second.truncated,
    )
