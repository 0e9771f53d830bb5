"""
Exception types shared by the analysis tools
"""

from dataclasses import dataclass
from typing import List, Optional


@dataclass(frozen=True)
class SourceSpan:
    """Offsets [begin, end) into the model source, for diagnostics"""

    begin: int
    end: int

    def __post_init__(self):
        if self.begin < 0 or self.end < self.begin:
            raise ValueError(f"invalid span [{self.begin}, {self.end})")

    def shifted(self, offset: int) -> "SourceSpan":
        return SourceSpan(self.begin + offset, self.end + offset)

    def line_col(self, source: str) -> tuple:
        """1-based (line, column) of the span start"""
        line = source.count("\n", 0, self.begin) + 1
        col = self.begin - (source.rfind("\n", 0, self.begin) + 1) + 1
        return line, col


@dataclass(frozen=True)
class Diagnostic:
    """A single parse problem"""

    kind: str  # lexical | syntax | unknown-identifier | arity | structure
    message: str
    span: SourceSpan

    def render(self, source: Optional[str] = None) -> str:
        if source is None:
            return f"{self.kind} error at {self.span.begin}: {self.message}"
        line, col = self.span.line_col(source)
        return f"{self.kind} error at line {line}, column {col}: {self.message}"


class DelayIdentError(Exception):
    """Base class for all errors raised by the toolkit"""


class ModelParseError(DelayIdentError):
    """The model source did not parse; carries every diagnostic found"""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)
        summary = "; ".join(d.render() for d in self.diagnostics[:3])
        super().__init__(f"{len(self.diagnostics)} diagnostic(s): {summary}")


class DomainError(DelayIdentError):
    """An expression hit an undefined or nondifferentiable operation"""

    def __init__(
        self,
        message: str,
        span: Optional[SourceSpan] = None,
        equation: Optional[int] = None,
        slot: Optional[str] = None,
    ):
        self.reason = message
        self.span = span
        self.equation = equation
        self.slot = slot
        super().__init__(self._describe())

    def _describe(self) -> str:
        parts = [self.reason]
        if self.equation is not None:
            parts.append(f"equation {self.equation + 1}")
        if self.slot is not None:
            parts.append(f"slot {self.slot}")
        if self.span is not None:
            parts.append(f"at offset {self.span.begin}")
        return ", ".join(parts)

    def at(self, equation: Optional[int] = None, slot: Optional[str] = None) -> "DomainError":
        """Copy of this error tagged with equation/slot context"""
        return DomainError(
            self.reason,
            span=self.span,
            equation=self.equation if equation is None else equation,
            slot=self.slot if slot is None else slot,
        )


class BranchCutError(DelayIdentError):
    """z lies outside the principal-branch domain of z**tau"""


class UnsupportedModelError(DelayIdentError):
    """The model is well formed but outside what the analyzer handles"""


class GridError(DelayIdentError):
    """The simulation grid cannot resolve the model's delays"""


class SimulationError(DelayIdentError):
    """A simulation-based experiment could not produce a result"""


class ConfigError(DelayIdentError):
    """Configuration file or values are invalid"""
