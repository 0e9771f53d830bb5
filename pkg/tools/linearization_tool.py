"""
Linearization about an equilibrium

    xi'(t) = sum_i A_i xi(t - tau_i) + sum_j B_j nu(t - nu_j),   tau_0 = nu_0 = 0
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .autodiff_tool import jacobian_slots
from .model_ir_tool import EquilibriumPoint, ModelSpec, ParameterPoint


@dataclass(frozen=True)
class LinearDelayModel:
    """Tagged coefficient matrices plus the equilibrium they were taken at"""

    A: Tuple[np.ndarray, ...]
    a_tags: Tuple[float, ...]
    B: Tuple[np.ndarray, ...]
    b_tags: Tuple[float, ...]
    equilibrium: EquilibriumPoint
    u_bar: Tuple[float, ...]

    def __post_init__(self):
        if len(self.A) != len(self.a_tags) or len(self.B) != len(self.b_tags):
            raise ValueError("every coefficient matrix needs exactly one delay tag")
        for tags in (self.a_tags, self.b_tags):
            if not tags or tags[0] != 0.0:
                raise ValueError("first delay tag must be 0")
            if any(b <= a for a, b in zip(tags, tags[1:])):
                raise ValueError("delay tags must be strictly increasing")
        n = self.n
        if any(M.shape != (n, n) for M in self.A):
            raise ValueError("A matrices must be n x n")
        if any(M.shape != (n, self.k) for M in self.B):
            raise ValueError("B matrices must be n x k")

    @property
    def n(self) -> int:
        return self.A[0].shape[0]

    @property
    def k(self) -> int:
        return self.B[0].shape[1]

    @property
    def tau_m(self) -> float:
        return self.a_tags[-1]

    @property
    def nu_m(self) -> float:
        return self.b_tags[-1]

    def to_dict(self) -> Dict:
        def rows(M: np.ndarray) -> List[List[float]]:
            return [[float(v) for v in row] for row in M]

        return {
            "A": [{"tag": tag, "matrix": rows(M)} for tag, M in zip(self.a_tags, self.A)],
            "B": [{"tag": tag, "matrix": rows(M)} for tag, M in zip(self.b_tags, self.B)],
            "equilibrium": self.equilibrium.to_dict(),
            "u_bar": list(self.u_bar),
        }


def linearize(spec: ModelSpec, point: ParameterPoint, eq: EquilibriumPoint) -> LinearDelayModel:
    """Slot Jacobians at E, tagged with the delays of ``point``"""
    A, B = jacobian_slots(spec, eq, point)
    return LinearDelayModel(
        A=tuple(A),
        a_tags=(0.0,) + tuple(point.tau),
        B=tuple(B),
        b_tags=(0.0,) + tuple(point.nu),
        equilibrium=eq,
        u_bar=tuple(point.u_bar),
    )
