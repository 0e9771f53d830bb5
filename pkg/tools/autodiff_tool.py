"""
Slot and parameter Jacobians by forward-mode dual numbers

A_i = grad_{z_i} f(E), B_j = grad_{w_j} f(E) at E = (x_e,...,x_e, u_bar,...,u_bar, P_s).
One derivative direction is seeded per scalar slot; batched seeding evaluates
all of them in a single pass, column seeding evaluates them one at a time.
Both give bit-identical results because dual arithmetic is elementwise.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from .dual_numbers import Dual
from .errors import DomainError
from .model_ir_tool import EquilibriumPoint, ModelSpec, ParameterPoint, evaluate_equations

logger = logging.getLogger(__name__)


def _slot_label(spec: ModelSpec, direction: int) -> str:
    state_dirs = (spec.l + 1) * spec.n
    if direction < state_dirs:
        d, i = divmod(direction, spec.n)
        return f"z{d}[{i + 1}]"
    d, j = divmod(direction - state_dirs, spec.k)
    return f"w{d}[{j + 1}]"


def _derivative_rows(values: Sequence, n_dirs: int) -> np.ndarray:
    rows = []
    for value in values:
        if isinstance(value, Dual):
            rows.append(value.d)
        else:
            rows.append(np.zeros(n_dirs))
    return np.array(rows, dtype=float).reshape(len(values), n_dirs)


def _slot_pass(
    spec: ModelSpec, x_e: Sequence[float], point: ParameterPoint, directions: Sequence[int]
) -> np.ndarray:
    """Evaluate f with the given slot directions seeded; returns n x len(directions)"""
    n_dirs = len(directions)
    position = {direction: col for col, direction in enumerate(directions)}
    state_dirs = (spec.l + 1) * spec.n

    def entry(value: float, direction: int):
        col = position.get(direction)
        if col is None:
            return Dual.constant(value, n_dirs)
        return Dual.seeded(value, n_dirs, col)

    z = [[entry(x_e[i], d * spec.n + i) for i in range(spec.n)] for d in range(spec.l + 1)]
    w = [
        [entry(point.u_bar[j], state_dirs + d * spec.k + j) for j in range(spec.k)]
        for d in range(spec.r + 1)
    ]
    values = evaluate_equations(spec, z, w, list(point.p_s))
    return _derivative_rows(values, n_dirs)


def jacobian_slots(
    spec: ModelSpec,
    eq_point: EquilibriumPoint,
    point: ParameterPoint,
    batch: bool = True,
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """A_0..A_l (n x n) and B_0..B_r (n x k) at the equilibrium tuple E

    Raises DomainError tagged with the equation when f is undefined at E,
    and with every slot whose seeding fails when f is not differentiable there.
    """
    if not eq_point.converged:
        raise ValueError("slot Jacobians need a converged equilibrium")

    x_e = list(eq_point.x_e)
    total = (spec.l + 1) * spec.n + (spec.r + 1) * spec.k

    if batch:
        try:
            J = _slot_pass(spec, x_e, point, list(range(total)))
        except DomainError:
            J = _column_by_column(spec, x_e, point, total)
    else:
        J = _column_by_column(spec, x_e, point, total)

    n, k = spec.n, spec.k
    A = [J[:, d * n:(d + 1) * n].copy() for d in range(spec.l + 1)]
    offset = (spec.l + 1) * n
    B = [J[:, offset + d * k:offset + (d + 1) * k].copy() for d in range(spec.r + 1)]
    return A, B


def _column_by_column(
    spec: ModelSpec, x_e: Sequence[float], point: ParameterPoint, total: int
) -> np.ndarray:
    # undefined at E itself: raised untagged, no slot is to blame
    evaluate_equations(
        spec, [x_e] * (spec.l + 1), [list(point.u_bar)] * (spec.r + 1), list(point.p_s)
    )
    columns = []
    failed: List[str] = []
    first = None
    for direction in range(total):
        try:
            columns.append(_slot_pass(spec, x_e, point, [direction])[:, 0])
        except DomainError as exc:
            failed.append(_slot_label(spec, direction))
            first = first or exc
    if first is not None:
        raise first.at(slot=", ".join(failed)) from None
    return np.array(columns, dtype=float).T.reshape(spec.n, total)


def jacobian_params(
    spec: ModelSpec, eq_point: EquilibriumPoint, point: ParameterPoint
) -> np.ndarray:
    """grad_{P_s} f(E), an n x p matrix (n x 0 when the model has no parameters)"""
    if spec.p == 0:
        return np.zeros((spec.n, 0))
    x_e = list(eq_point.x_e)
    z = [x_e] * (spec.l + 1)
    w = [list(point.u_bar)] * (spec.r + 1)
    p = [Dual.seeded(value, spec.p, index) for index, value in enumerate(point.p_s)]
    try:
        values = evaluate_equations(spec, z, w, p)
    except DomainError as exc:
        raise exc.at(slot="P_s") from None
    return _derivative_rows(values, spec.p)


def collapsed_jacobian(
    spec: ModelSpec, point: ParameterPoint, x: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray]:
    """f and d/dx f(x, ..., x, u_bar, ..., u_bar, P_s)

    Every delayed state slot carries the same seeded direction, so the
    derivative is the sum of the slot Jacobians A_0 + ... + A_l.
    """
    n = spec.n
    tied = [Dual.seeded(float(x[i]), n, i) for i in range(n)]
    z = [tied] * (spec.l + 1)
    w = [[Dual.constant(u, n) for u in point.u_bar]] * (spec.r + 1)
    values = evaluate_equations(spec, z, w, list(point.p_s))
    f = np.array([v.re if isinstance(v, Dual) else float(v) for v in values])
    return f, _derivative_rows(values, n)
