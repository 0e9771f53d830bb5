"""
Model IR - in-memory form of a nonlinear delayed-differential model

    dx/dt = f(x(t), x(t-tau_1), ..., x(t-tau_l), u(t), u(t-nu_1), ..., u(t-nu_r), P_s)
    y = C x

Slot convention: z_0 / w_0 are the undelayed state / input, z_i / w_j the
values delayed by tau_i / nu_j. Delay values are not part of the model; they
live in ParameterPoint together with P_s and the constant input u_bar.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, UnsupportedModelError
from .expression_tool import Expr, InputRef, ParamRef, StateRef, compile_expr, walk

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelSpec:
    """Parsed model structure, independent of any numeric parameter values"""

    state_names: Tuple[str, ...]
    input_names: Tuple[str, ...]
    param_names: Tuple[str, ...]
    tau_names: Tuple[str, ...]
    nu_names: Tuple[str, ...]
    equations: Tuple[Expr, ...]
    output_map: Tuple[Tuple[float, ...], ...]
    source_digest: str = field(default="", compare=False)

    @property
    def n(self) -> int:
        return len(self.state_names)

    @property
    def k(self) -> int:
        return len(self.input_names)

    @property
    def p(self) -> int:
        return len(self.param_names)

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.tau_names)

    @property
    def r(self) -> int:
        return len(self.nu_names)

    @property
    def delay_names(self) -> Tuple[str, ...]:
        return self.tau_names + self.nu_names

    @property
    def output_matrix(self) -> np.ndarray:
        return np.array(self.output_map, dtype=float).reshape(len(self.output_map), self.n)

    @property
    def has_identity_output(self) -> bool:
        C = self.output_matrix
        return C.shape == (self.n, self.n) and np.array_equal(C, np.eye(self.n))

    @cached_property
    def compiled(self):
        return tuple(compile_expr(eq) for eq in self.equations)

    def dimensions(self) -> Dict[str, int]:
        return {"n": self.n, "k": self.k, "p": self.p, "l": self.l, "r": self.r}


@dataclass(frozen=True)
class ParameterPoint:
    """P = (p_1..p_p, tau_1..tau_l, nu_1..nu_r) plus the constant input u_bar"""

    p_s: Tuple[float, ...] = ()
    tau: Tuple[float, ...] = ()
    nu: Tuple[float, ...] = ()
    u_bar: Tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("p_s", "tau", "nu", "u_bar"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @property
    def tau_m(self) -> float:
        return max(self.tau, default=0.0)

    @property
    def nu_m(self) -> float:
        return max(self.nu, default=0.0)

    def with_param(self, index: int, value: float) -> "ParameterPoint":
        values = list(self.p_s)
        values[index] = value
        return replace(self, p_s=tuple(values))

    def to_dict(self) -> Dict[str, List[float]]:
        return {
            "p_s": list(self.p_s),
            "tau": list(self.tau),
            "nu": list(self.nu),
            "u_bar": list(self.u_bar),
        }


@dataclass(frozen=True)
class EquilibriumPoint:
    x_e: Tuple[float, ...]
    residual_norm: float
    converged: bool

    def __post_init__(self):
        object.__setattr__(self, "x_e", tuple(float(v) for v in self.x_e))

    def y_e(self, spec: ModelSpec) -> np.ndarray:
        return spec.output_matrix @ np.array(self.x_e)

    def to_dict(self) -> Dict:
        return {
            "x_e": list(self.x_e),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ModelFile:
    """A parsed model document: structure, nominal point and sampling boxes"""

    spec: ModelSpec
    nominal: ParameterPoint
    boxes: Dict[str, Tuple[float, float]] = field(default_factory=dict, compare=False)
    source: str = field(default="", compare=False, repr=False)


def validate(spec: ModelSpec, point: ParameterPoint) -> List[Violation]:
    """Collect every reason the (model, point) pair cannot be analyzed

    An empty list means analyzable. Nothing here raises.
    """
    violations: List[Violation] = []

    if len(spec.equations) != spec.n:
        violations.append(
            Violation("dimension", f"expected {spec.n} equations, found {len(spec.equations)}")
        )

    labels = spec.state_names + spec.input_names + spec.param_names + spec.delay_names
    duplicates = sorted({name for name in labels if labels.count(name) > 1})
    if duplicates:
        violations.append(Violation("labels", f"duplicate names: {', '.join(duplicates)}"))

    for index, eq in enumerate(spec.equations):
        for node in walk(eq):
            problem = _slot_problem(spec, node)
            if problem:
                violations.append(Violation("slot-bounds", f"equation {index + 1}: {problem}"))

    expected = {"p_s": spec.p, "tau": spec.l, "nu": spec.r, "u_bar": spec.k}
    for name, size in expected.items():
        got = len(getattr(point, name))
        if got != size:
            violations.append(Violation("dimension", f"{name} has length {got}, expected {size}"))

    values = point.p_s + point.tau + point.nu + point.u_bar
    if not all(math.isfinite(v) for v in values):
        violations.append(Violation("nonfinite", "parameter point has non-finite entries"))

    for name, delays in (("tau", point.tau), ("nu", point.nu)):
        if any(d <= 0 for d in delays):
            violations.append(Violation("delay-sign", f"{name} delays must be positive"))
        if any(b <= a for a, b in zip(delays, delays[1:])):
            violations.append(
                Violation("delay-order", f"{name} delays not strictly increasing")
            )

    if not spec.has_identity_output:
        violations.append(Violation("output-map", "non-identity output map unsupported"))

    return violations


def _slot_problem(spec: ModelSpec, node) -> Optional[str]:
    if isinstance(node, StateRef):
        if not 0 <= node.index < spec.n:
            return f"state index {node.index} out of range"
        if not 0 <= node.delay <= spec.l:
            return f"state delay slot {node.delay} out of range"
    elif isinstance(node, InputRef):
        if not 0 <= node.index < spec.k:
            return f"input index {node.index} out of range"
        if not 0 <= node.delay <= spec.r:
            return f"input delay slot {node.delay} out of range"
    elif isinstance(node, ParamRef):
        if not 0 <= node.index < spec.p:
            return f"parameter index {node.index} out of range"
    return None


def require_analyzable(spec: ModelSpec, point: ParameterPoint) -> None:
    """Raise UnsupportedModelError when validate() reports anything"""
    violations = validate(spec, point)
    if violations:
        raise UnsupportedModelError("; ".join(v.message for v in violations))


def evaluate_equations(spec: ModelSpec, z: Sequence, w: Sequence, p: Sequence) -> list:
    """f over any numeric type; z[d][i], w[d][j], p[k]. DomainErrors get the equation index"""
    out = []
    for index, fn in enumerate(spec.compiled):
        try:
            out.append(fn(z, w, p))
        except DomainError as exc:
            raise exc.at(equation=index) from None
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(str(exc), equation=index) from None
    return out


def eval_rhs(
    spec: ModelSpec,
    z_slots: Sequence[Sequence[float]],
    w_slots: Sequence[Sequence[float]],
    p_s: Sequence[float],
) -> np.ndarray:
    """f(z_0..z_l, w_0..w_r, P_s) as a real n-vector"""
    if len(z_slots) != spec.l + 1 or len(w_slots) != spec.r + 1:
        raise ValueError(
            f"expected {spec.l + 1} state slots and {spec.r + 1} input slots, "
            f"got {len(z_slots)} and {len(w_slots)}"
        )
    if any(len(z) != spec.n for z in z_slots) or any(len(w) != spec.k for w in w_slots):
        raise ValueError("slot vector has the wrong length")
    if len(p_s) != spec.p:
        raise ValueError(f"expected {spec.p} parameters, got {len(p_s)}")

    z = [[float(v) for v in slot] for slot in z_slots]
    w = [[float(v) for v in slot] for slot in w_slots]
    p = [float(v) for v in p_s]
    return np.array(evaluate_equations(spec, z, w, p), dtype=float)


def rhs_at_equilibrium(spec: ModelSpec, point: ParameterPoint, x: Sequence[float]) -> np.ndarray:
    """f(x, ..., x, u_bar, ..., u_bar, P_s)"""
    x = [float(v) for v in x]
    u = list(point.u_bar)
    return eval_rhs(spec, [x] * (spec.l + 1), [u] * (spec.r + 1), point.p_s)


def sample_point(
    model: ModelFile, rng: np.random.Generator, max_attempts: int = 100
) -> ParameterPoint:
    """Draw a point uniformly from the model's declared boxes

    Quantities without a box keep their nominal value. Draws that break delay
    ordering are rejected and redrawn.
    """
    spec, nominal = model.spec, model.nominal

    def draw(names, values):
        out = []
        for name, value in zip(names, values):
            box = model.boxes.get(name)
            out.append(float(rng.uniform(*box)) if box else value)
        return tuple(out)

    for attempt in range(max_attempts):
        candidate = ParameterPoint(
            p_s=draw(spec.param_names, nominal.p_s),
            tau=draw(spec.tau_names, nominal.tau),
            nu=draw(spec.nu_names, nominal.nu),
            u_bar=draw(spec.input_names, nominal.u_bar),
        )
        ordering = [v for v in validate(spec, candidate) if v.code.startswith("delay-")]
        if not ordering:
            return candidate
        logger.debug("Rejected sample %d (delay ordering)", attempt)

    raise UnsupportedModelError(
        f"no valid parameter point in the declared boxes after {max_attempts} draws"
    )
