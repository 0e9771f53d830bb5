"""
Expression trees for model right-hand sides

Trees are immutable and compile to closures that evaluate over plain floats
or Dual numbers. Every partial operation checks its domain and raises
DomainError carrying the offending node's span.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

from .dual_numbers import UNARY_FUNCTIONS, Dual, exp, int_power, log, real_part
from .errors import DomainError, SourceSpan

UNARY_OPS = ("neg", "sin", "cos", "exp", "log", "sqrt", "abs")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")

# Larger integer exponents go through exp/log and need a positive base
MAX_INT_EXPONENT = 1024


@dataclass(frozen=True)
class Const:
    value: float
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class StateRef:
    """State component ``index`` read through delay slot ``delay`` (0 = undelayed)"""

    index: int
    delay: int = 0
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class InputRef:
    """Input component ``index`` read through input-delay slot ``delay``"""

    index: int
    delay: int = 0
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ParamRef:
    index: int
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary op {self.op!r}")


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")


Expr = Union[Const, StateRef, InputRef, ParamRef, Unary, Binary]

# z[d][i], w[d][j], p[k] -> value
Compiled = Callable[[Sequence, Sequence, Sequence], object]


@dataclass(frozen=True)
class Binding:
    """Values for every slot an expression may reference"""

    z: Sequence[Sequence]
    w: Sequence[Sequence] = ()
    p: Sequence = ()


def walk(e: Expr):
    """Yield every node of the tree, parents first"""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Unary):
            stack.append(node.arg)
        elif isinstance(node, Binary):
            stack.append(node.right)
            stack.append(node.left)


# compilation


def compile_expr(e: Expr) -> Compiled:
    """Turn a tree into a closure ``f(z, w, p)`` over any supported numeric type"""
    if isinstance(e, Const):
        value = float(e.value)
        return lambda z, w, p: value
    if isinstance(e, StateRef):
        i, d = e.index, e.delay
        return lambda z, w, p: z[d][i]
    if isinstance(e, InputRef):
        j, d = e.index, e.delay
        return lambda z, w, p: w[d][j]
    if isinstance(e, ParamRef):
        k = e.index
        return lambda z, w, p: p[k]
    if isinstance(e, Unary):
        return _compile_unary(e)
    if isinstance(e, Binary):
        return _compile_binary(e)
    raise TypeError(f"not an expression node: {e!r}")


def _compile_unary(e: Unary) -> Compiled:
    arg = compile_expr(e.arg)
    span = e.span

    if e.op == "neg":
        return lambda z, w, p: -arg(z, w, p)

    if e.op == "log":

        def _log(z, w, p):
            x = arg(z, w, p)
            if real_part(x) <= 0.0:
                raise DomainError("log of nonpositive value", span)
            return log(x)

        return _log

    if e.op == "sqrt":

        def _sqrt(z, w, p):
            x = arg(z, w, p)
            v = real_part(x)
            if v < 0.0:
                raise DomainError("sqrt of negative value", span)
            if v == 0.0 and isinstance(x, Dual):
                if x.d.any():
                    raise DomainError("sqrt is not differentiable at 0", span)
                return Dual(0.0, x.d)
            return UNARY_FUNCTIONS["sqrt"](x)

        return _sqrt

    if e.op == "abs":

        def _abs(z, w, p):
            x = arg(z, w, p)
            if isinstance(x, Dual) and x.re == 0.0 and x.d.any():
                raise DomainError("abs is not differentiable at 0", span)
            return abs(x)

        return _abs

    if e.op == "exp":

        def _exp(z, w, p):
            try:
                return exp(arg(z, w, p))
            except OverflowError:
                raise DomainError("exp overflow", span) from None

        return _exp

    fn = UNARY_FUNCTIONS[e.op]
    return lambda z, w, p: fn(arg(z, w, p))


def _compile_binary(e: Binary) -> Compiled:
    left = compile_expr(e.left)
    right = compile_expr(e.right)
    span = e.span

    if e.op == "add":
        return lambda z, w, p: left(z, w, p) + right(z, w, p)
    if e.op == "sub":
        return lambda z, w, p: left(z, w, p) - right(z, w, p)
    if e.op == "mul":
        return lambda z, w, p: left(z, w, p) * right(z, w, p)

    if e.op == "div":

        def _div(z, w, p):
            num = left(z, w, p)
            den = right(z, w, p)
            if real_part(den) == 0.0:
                raise DomainError("division by zero", span)
            return num / den

        return _div

    def _pow(z, w, p):
        base = left(z, w, p)
        expo = right(z, w, p)
        k = _integer_exponent(expo)
        if k is not None:
            if k < 0 and real_part(base) == 0.0:
                raise DomainError("zero raised to a negative power", span)
            return int_power(base, k)
        if real_part(base) <= 0.0:
            raise DomainError("non-integer power of a nonpositive base", span)
        try:
            return exp(expo * log(base))
        except OverflowError:
            raise DomainError("power overflow", span) from None

    return _pow


def _integer_exponent(expo) -> Optional[int]:
    if isinstance(expo, Dual):
        if expo.d.any():
            return None
        value = expo.re
    else:
        value = float(expo)
    if value.is_integer() and abs(value) <= MAX_INT_EXPONENT:
        return int(value)
    return None


def eval_expr(e: Expr, env: Binding):
    """Evaluate a tree against a slot/parameter binding"""
    return compile_expr(e)(env.z, env.w, env.p)


# pretty printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_ATOM = 5
_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def _precedence(e: Expr) -> int:
    if isinstance(e, Unary):
        return _PREC["neg"] if e.op == "neg" else _ATOM
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Const) and e.value < 0:
        return 0
    return _ATOM


def format_expr(e: Expr, names) -> str:
    """Render a tree in the model language with minimal parentheses

    ``names`` needs ``state_names``, ``input_names``, ``param_names``,
    ``tau_names`` and ``nu_names`` (a ModelSpec has all of them).
    """
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, StateRef):
        name = names.state_names[e.index]
        return name if e.delay == 0 else f"delay({name}, {names.tau_names[e.delay - 1]})"
    if isinstance(e, InputRef):
        name = names.input_names[e.index]
        return name if e.delay == 0 else f"delay({name}, {names.nu_names[e.delay - 1]})"
    if isinstance(e, ParamRef):
        return names.param_names[e.index]
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.arg, names, _precedence(e.arg) >= _PREC["neg"])
        return f"{e.op}({format_expr(e.arg, names)})"

    prec = _PREC[e.op]
    if e.op == "pow":
        lhs = _wrap(e.left, names, _precedence(e.left) == _ATOM)
        rhs = _wrap(e.right, names, _precedence(e.right) >= _PREC["neg"])
    else:
        lhs = _wrap(e.left, names, _precedence(e.left) >= prec)
        rhs = _wrap(e.right, names, _precedence(e.right) > prec)
    sep = "^" if e.op == "pow" else f" {_SYMBOL[e.op]} "
    return f"{lhs}{sep}{rhs}"


def _wrap(e: Expr, names, bare: bool) -> str:
    text = format_expr(e, names)
    return text if bare else f"({text})"
