"""
Piecewise-constant input signals

Every channel is right-continuous with strictly increasing switch times on
(0, inf) and a constant pre-history value for t < 0.
"""

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


@dataclass(frozen=True)
class Channel:
    switches: Tuple[float, ...]
    levels: Tuple[float, ...]
    history: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "switches", tuple(float(s) for s in self.switches))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        if len(self.levels) != len(self.switches) + 1:
            raise ValueError("a channel needs one more level than switch times")
        if any(b <= a for a, b in zip(self.switches, self.switches[1:])):
            raise ValueError("switch times must be strictly increasing")
        if self.switches and self.switches[0] <= 0.0:
            raise ValueError("switch times must be positive")

    def value(self, t: float, left: bool = False) -> float:
        if t < 0.0 or (left and t <= 0.0):
            return self.history
        index = bisect_left(self.switches, t) if left else bisect_right(self.switches, t)
        return self.levels[index]


@dataclass(frozen=True)
class InputSignal:
    kind: str
    channels: Tuple[Channel, ...]
    snap_shift: float = 0.0

    @property
    def k(self) -> int:
        return len(self.channels)

    @classmethod
    def constant(cls, values: Sequence[float]) -> "InputSignal":
        return cls("constant", tuple(Channel((), (v,), v) for v in values))

    @classmethod
    def table(
        cls,
        switches: Sequence[Sequence[float]],
        levels: Sequence[Sequence[float]],
        history: Sequence[float] = (),
    ) -> "InputSignal":
        """Per-channel switch times and levels (levels[c] has len(switches[c]) + 1 entries)"""
        history = list(history) or [0.0] * len(levels)
        return cls(
            "table",
            tuple(Channel(s, v, h) for s, v, h in zip(switches, levels, history)),
        )

    def value(self, t: float, left: bool = False) -> np.ndarray:
        """u(t); ``left`` gives the left limit u(t-)"""
        return np.array([c.value(t, left) for c in self.channels])

    def switch_times(self) -> List[float]:
        return sorted({s for c in self.channels for s in c.switches})

    def jump_times(self) -> List[float]:
        """Switch times plus t = 0 when some channel's history differs from its first level"""
        times = set(self.switch_times())
        if any(c.history != c.levels[0] for c in self.channels):
            times.add(0.0)
        return sorted(times)

    def scaled(self, factor: float) -> "InputSignal":
        return InputSignal(
            self.kind,
            tuple(
                Channel(c.switches, tuple(factor * v for v in c.levels), factor * c.history)
                for c in self.channels
            ),
            self.snap_shift,
        )

    def offset(self, values: Sequence[float]) -> "InputSignal":
        if len(values) != self.k:
            raise ValueError(f"offset has {len(values)} entries, signal has {self.k} channels")
        return InputSignal(
            self.kind,
            tuple(
                Channel(c.switches, tuple(v + u for v in c.levels), c.history + u)
                for c, u in zip(self.channels, values)
            ),
            self.snap_shift,
        )

    def __add__(self, other: "InputSignal") -> "InputSignal":
        if other.k != self.k:
            raise ValueError("signals have different channel counts")
        channels = []
        for a, b in zip(self.channels, other.channels):
            switches = sorted(set(a.switches) | set(b.switches))
            starts = [0.0] + switches
            levels = [a.value(s) + b.value(s) for s in starts]
            channels.append(Channel(switches, levels, a.history + b.history))
        return InputSignal("table", tuple(channels), max(self.snap_shift, other.snap_shift))

    def snapped(self, h: float) -> "InputSignal":
        """Move every switch onto the grid h*Z; switches that collide keep the later level"""
        channels = []
        shift = self.snap_shift
        for c in self.channels:
            merged = {}
            for s, level in zip(c.switches, c.levels[1:]):
                target = round(s / h) * h
                shift = max(shift, abs(target - s))
                if target <= 0.0:
                    merged[0.0] = level
                else:
                    merged[target] = level
            first = merged.pop(0.0, c.levels[0])
            switches = sorted(merged)
            channels.append(Channel(switches, [first] + [merged[s] for s in switches], c.history))
        return InputSignal(self.kind, tuple(channels), shift)

    def l2_norm(self, T: float) -> float:
        """Exact L2(0, T) norm over all channels"""
        total = 0.0
        for c in self.channels:
            edges = [0.0] + [s for s in c.switches if s < T] + [T]
            for index, (a, b) in enumerate(zip(edges, edges[1:])):
                total += c.levels[index] ** 2 * (b - a)
        return math.sqrt(total)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "snap_shift": self.snap_shift,
            "channels": [
                {"switches": list(c.switches), "levels": list(c.levels), "history": c.history}
                for c in self.channels
            ],
        }


def make_square_pulse(k: int, T: float, amplitude: float = 1.0) -> InputSignal:
    """Channel c switches at multiples of sqrt(prime_c) inside (0, T), levels +a, -a, +a, ..."""
    if T <= 0:
        raise ValueError("T must be positive")
    if k > len(_PRIMES):
        raise ValueError(f"at most {len(_PRIMES)} channels supported")
    channels = []
    for c in range(k):
        period = math.sqrt(_PRIMES[c])
        switches = []
        m = 1
        while m * period < T:
            switches.append(m * period)
            m += 1
        levels = [amplitude if i % 2 == 0 else -amplitude for i in range(len(switches) + 1)]
        channels.append(Channel(switches, levels, 0.0))
    return InputSignal("square", tuple(channels))
