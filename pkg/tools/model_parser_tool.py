"""
Model language parser

A model file is a sectioned text document:

    [states]      names, comma or whitespace separated
    [inputs]      name [= value [in [lo, hi]]]        (value is u_bar, default 0)
    [params]      name = value [in [lo, hi]]
    [delays]      state|input name = value [in [lo, hi]]
    [equations]   d<state> = <expr>, one per line
    [output]      identity, or one row of C per line

Expressions are parsed with a lark LALR grammar; see MODEL_FORMAT.md.
All problems are collected as Diagnostics before raising ModelParseError.
"""

import hashlib
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from .dual_numbers import UNARY_FUNCTIONS
from .errors import Diagnostic, ModelParseError, SourceSpan
from .expression_tool import Binary, Const, Expr, InputRef, ParamRef, StateRef, Unary, walk
from .model_ir_tool import ModelFile, ModelSpec, ParameterPoint

logger = logging.getLogger(__name__)

EXPR_GRAMMAR = r"""
    ?start: sum

    ?sum: product
        | sum "+" product       -> add
        | sum "-" product       -> sub

    ?product: unary
        | product "*" unary     -> mul
        | product "/" unary     -> div

    ?unary: power
        | "-" unary             -> neg

    ?power: atom
        | atom "^" unary        -> pow

    ?atom: NUMBER               -> number
        | NAME                  -> var
        | NAME "(" ")"          -> call
        | NAME "(" sum ("," sum)* ")" -> call
        | "(" sum ")"

    NAME: /[A-Za-z_][A-Za-z0-9_]*/

    %import common.NUMBER
    %import common.WS_INLINE
    %ignore WS_INLINE
"""

_EXPR_PARSER = Lark(EXPR_GRAMMAR, parser="lalr", propagate_positions=True)

KNOWN_SECTIONS = ("states", "inputs", "params", "delays", "equations", "output")

_SECTION_RE = re.compile(r"^\s*\[\s*([A-Za-z_]+)\s*\]\s*$")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_DECL_RE = re.compile(
    rf"^\s*(?:(state|input)\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*"
    rf"(?:=\s*({_NUM})\s*(?:in\s*\[\s*({_NUM})\s*,\s*({_NUM})\s*\])?)?\s*$"
)
_EQUATION_RE = re.compile(r"^\s*d([A-Za-z_][A-Za-z0-9_]*)\s*=(.*)$")


# section reader (shared with the config file loader)


@dataclass
class SourceLine:
    text: str
    offset: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.offset, self.offset + len(self.text))


@dataclass
class Section:
    name: str
    span: SourceSpan
    lines: List[SourceLine] = field(default_factory=list)


def read_sections(source: str, diagnostics: List[Diagnostic]) -> List[Section]:
    """Split a sectioned document into sections of non-blank, comment-free lines"""
    sections: List[Section] = []
    offset = 0
    for raw in source.splitlines(keepends=True):
        line = raw.rstrip("\r\n")
        hash_at = line.find("#")
        content = line if hash_at < 0 else line[:hash_at]
        start = offset
        offset += len(raw)
        if not content.strip():
            continue
        header = _SECTION_RE.match(content)
        if header:
            sections.append(
                Section(header.group(1).lower(), SourceSpan(start, start + len(content)))
            )
            continue
        if not sections:
            diagnostics.append(
                Diagnostic(
                    "structure",
                    "content before the first [section] header",
                    SourceSpan(start, start + len(content)),
                )
            )
            continue
        sections[-1].lines.append(SourceLine(content.rstrip(), start))
    return sections


# expression transformer


@dataclass(frozen=True)
class _DelayLabel:
    """Placeholder for a delay name; only legal as delay()'s second argument"""

    name: str
    span: SourceSpan


@dataclass
class _Header:
    state_names: Tuple[str, ...]
    input_names: Tuple[str, ...]
    param_names: Tuple[str, ...]
    tau_names: Tuple[str, ...]
    nu_names: Tuple[str, ...]


def _span(meta, offset: int) -> SourceSpan:
    if getattr(meta, "empty", False):
        return SourceSpan(offset, offset)
    return SourceSpan(meta.start_pos + offset, meta.end_pos + offset)


def _binary_rule(op: str):
    def build(self, meta, children):
        return Binary(op, children[0], children[1], _span(meta, self.offset))

    return build


@v_args(meta=True)
class _ToExpr(Transformer):
    def __init__(self, header: _Header, offset: int, diagnostics: List[Diagnostic]):
        super().__init__()
        self.header = header
        self.offset = offset
        self.diagnostics = diagnostics

    def _error(self, kind: str, message: str, span: SourceSpan) -> Const:
        self.diagnostics.append(Diagnostic(kind, message, span))
        return Const(math.nan, span)

    def number(self, meta, children):
        return Const(float(children[0]), _span(meta, self.offset))

    def var(self, meta, children):
        name = str(children[0])
        span = _span(meta, self.offset)
        h = self.header
        if name in h.state_names:
            return StateRef(h.state_names.index(name), 0, span)
        if name in h.input_names:
            return InputRef(h.input_names.index(name), 0, span)
        if name in h.param_names:
            return ParamRef(h.param_names.index(name), span)
        if name in h.tau_names or name in h.nu_names:
            return _DelayLabel(name, span)
        return self._error("unknown-identifier", f"unknown identifier '{name}'", span)

    def neg(self, meta, children):
        return Unary("neg", children[0], _span(meta, self.offset))

    add = _binary_rule("add")
    sub = _binary_rule("sub")
    mul = _binary_rule("mul")
    div = _binary_rule("div")
    pow = _binary_rule("pow")

    def call(self, meta, children):
        name_token, args = children[0], children[1:]
        name = str(name_token)
        span = _span(meta, self.offset)
        if name == "delay":
            return self._delay(args, span)
        if name not in UNARY_FUNCTIONS:
            return self._error("unknown-identifier", f"unknown function '{name}'", span)
        if len(args) != 1:
            return self._error("arity", f"{name}() takes 1 argument, got {len(args)}", span)
        return Unary(name, args[0], span)

    def _delay(self, args, span: SourceSpan):
        if len(args) != 2:
            return self._error("arity", f"delay() takes 2 arguments, got {len(args)}", span)
        target, label = args
        if not isinstance(label, _DelayLabel):
            return self._error("syntax", "second argument of delay() must be a delay name", span)
        if isinstance(target, StateRef) and target.delay == 0:
            if label.name not in self.header.tau_names:
                return self._error(
                    "syntax", f"'{label.name}' is not a state delay", label.span
                )
            return StateRef(target.index, self.header.tau_names.index(label.name) + 1, span)
        if isinstance(target, InputRef) and target.delay == 0:
            if label.name not in self.header.nu_names:
                return self._error(
                    "syntax", f"'{label.name}' is not an input delay", label.span
                )
            return InputRef(target.index, self.header.nu_names.index(label.name) + 1, span)
        return self._error(
            "syntax", "first argument of delay() must be a state or input name", span
        )


def _parse_expr_text(
    text: str, header: _Header, offset: int, diagnostics: List[Diagnostic]
) -> Optional[Expr]:
    try:
        tree = _EXPR_PARSER.parse(text)
    except UnexpectedInput as exc:
        diagnostics.append(_lark_diagnostic(exc, text, offset))
        return None

    local: List[Diagnostic] = []
    expr = _ToExpr(header, offset, local).transform(tree)
    for node in walk(expr):
        if isinstance(node, _DelayLabel):
            local.append(
                Diagnostic(
                    "syntax",
                    f"delay name '{node.name}' can only appear inside delay()",
                    node.span,
                )
            )
    diagnostics.extend(local)
    return None if local else expr


def _lark_diagnostic(exc: UnexpectedInput, text: str, offset: int) -> Diagnostic:
    if isinstance(exc, UnexpectedCharacters):
        pos = exc.pos_in_stream
        return Diagnostic(
            "lexical",
            f"unexpected character {text[pos]!r}",
            SourceSpan(offset + pos, offset + pos + 1),
        )
    if isinstance(exc, UnexpectedEOF) or (
        isinstance(exc, UnexpectedToken) and exc.token.type == "$END"
    ):
        end = offset + len(text.rstrip())
        return Diagnostic("syntax", "unexpected end of expression", SourceSpan(end, end))
    token = exc.token
    start = offset + token.start_pos
    return Diagnostic(
        "syntax", f"unexpected '{token}'", SourceSpan(start, start + max(len(token), 1))
    )


def parse_expression(text: str, names, offset: int = 0) -> Expr:
    """Parse one right-hand side against a declared header (e.g. a ModelSpec)"""
    header = _Header(
        tuple(names.state_names),
        tuple(names.input_names),
        tuple(names.param_names),
        tuple(names.tau_names),
        tuple(names.nu_names),
    )
    diagnostics: List[Diagnostic] = []
    expr = _parse_expr_text(text, header, offset, diagnostics)
    if diagnostics:
        raise ModelParseError(diagnostics)
    return expr


# whole-document parsing


def parse_model_file(source: str) -> ModelFile:
    """Parse a model document into its spec, nominal point and sampling boxes"""
    diagnostics: List[Diagnostic] = []
    sections = read_sections(source, diagnostics)

    by_name: Dict[str, Section] = {}
    for section in sections:
        if section.name not in KNOWN_SECTIONS:
            diagnostics.append(
                Diagnostic("structure", f"unknown section [{section.name}]", section.span)
            )
        elif section.name in by_name:
            diagnostics.append(
                Diagnostic("structure", f"duplicate section [{section.name}]", section.span)
            )
        else:
            by_name[section.name] = section

    boxes: Dict[str, Tuple[float, float]] = {}
    state_names = _parse_state_names(by_name.get("states"), diagnostics)
    inputs = _parse_declarations(by_name.get("inputs"), diagnostics, boxes, default=0.0)
    params = _parse_declarations(by_name.get("params"), diagnostics, boxes)
    taus, nus = _parse_delays(by_name.get("delays"), diagnostics, boxes)

    header = _Header(
        state_names,
        tuple(name for name, _ in inputs),
        tuple(name for name, _ in params),
        tuple(name for name, _ in taus),
        tuple(name for name, _ in nus),
    )
    _check_names(header, sections, diagnostics)

    equations = _parse_equations(by_name.get("equations"), header, diagnostics)
    output_map = _parse_output(by_name.get("output"), len(state_names), diagnostics)

    if diagnostics:
        diagnostics.sort(key=lambda d: (d.span.begin, d.span.end))
        raise ModelParseError(diagnostics)

    spec = ModelSpec(
        state_names=header.state_names,
        input_names=header.input_names,
        param_names=header.param_names,
        tau_names=header.tau_names,
        nu_names=header.nu_names,
        equations=equations,
        output_map=output_map,
        source_digest=hashlib.sha256(source.encode("utf-8")).hexdigest(),
    )
    nominal = ParameterPoint(
        p_s=[v for _, v in params],
        tau=[v for _, v in taus],
        nu=[v for _, v in nus],
        u_bar=[v for _, v in inputs],
    )
    logger.debug("Parsed model %s: %s", spec.source_digest[:12], spec.dimensions())
    return ModelFile(spec=spec, nominal=nominal, boxes=boxes, source=source)


def parse_model(source: str) -> ModelSpec:
    """Parse model text; raises ModelParseError with every diagnostic on failure"""
    return parse_model_file(source).spec


def _parse_state_names(section: Optional[Section], diagnostics) -> Tuple[str, ...]:
    if section is None:
        diagnostics.append(Diagnostic("structure", "missing [states] section", SourceSpan(0, 0)))
        return ()
    names = []
    for line in section.lines:
        for match in re.finditer(r"[^,\s]+", line.text):
            token = match.group(0)
            span = SourceSpan(line.offset + match.start(), line.offset + match.end())
            if _NAME_RE.match(token):
                names.append(token)
            else:
                diagnostics.append(Diagnostic("lexical", f"invalid state name '{token}'", span))
    if not names:
        diagnostics.append(Diagnostic("structure", "no states declared", section.span))
    return tuple(names)


def _parse_declarations(
    section: Optional[Section], diagnostics, boxes, default: Optional[float] = None
) -> List[Tuple[str, float]]:
    if section is None:
        return []
    declared = []
    for line in section.lines:
        match = _DECL_RE.match(line.text)
        if not match or match.group(1):
            diagnostics.append(
                Diagnostic("syntax", f"malformed [{section.name}] entry", line.span)
            )
            continue
        name, value = match.group(2), match.group(3)
        if value is None and default is None:
            diagnostics.append(Diagnostic("syntax", f"'{name}' needs a value", line.span))
            continue
        declared.append((name, float(value) if value is not None else default))
        _record_box(match, name, line, boxes, diagnostics)
    return declared


def _parse_delays(section: Optional[Section], diagnostics, boxes):
    taus, nus = [], []
    if section is None:
        return taus, nus
    for line in section.lines:
        match = _DECL_RE.match(line.text)
        if not match or not match.group(1) or match.group(3) is None:
            diagnostics.append(
                Diagnostic(
                    "syntax", "delay entries read 'state|input <name> = <value>'", line.span
                )
            )
            continue
        target = taus if match.group(1) == "state" else nus
        target.append((match.group(2), float(match.group(3))))
        _record_box(match, match.group(2), line, boxes, diagnostics)
    return taus, nus


def _record_box(match, name, line: SourceLine, boxes, diagnostics) -> None:
    if match.group(4) is None:
        return
    lo, hi = float(match.group(4)), float(match.group(5))
    if not lo <= hi:
        diagnostics.append(Diagnostic("syntax", f"empty box for '{name}'", line.span))
        return
    boxes[name] = (lo, hi)


def _check_names(header: _Header, sections, diagnostics) -> None:
    seen = set()
    reserved = set(UNARY_FUNCTIONS) | {"delay"}
    span = sections[0].span if sections else SourceSpan(0, 0)
    for name in (
        header.state_names
        + header.input_names
        + header.param_names
        + header.tau_names
        + header.nu_names
    ):
        if name in seen:
            diagnostics.append(Diagnostic("structure", f"'{name}' declared twice", span))
        if name in reserved:
            diagnostics.append(Diagnostic("structure", f"'{name}' is a reserved name", span))
        seen.add(name)


def _parse_equations(
    section: Optional[Section], header: _Header, diagnostics
) -> Tuple[Expr, ...]:
    if section is None:
        diagnostics.append(
            Diagnostic("structure", "missing [equations] section", SourceSpan(0, 0))
        )
        return ()
    found: Dict[int, Expr] = {}
    attempted = set()
    for line in section.lines:
        match = _EQUATION_RE.match(line.text)
        if not match:
            diagnostics.append(
                Diagnostic("syntax", "equations read 'd<state> = <expression>'", line.span)
            )
            continue
        name = match.group(1)
        name_span = SourceSpan(line.offset + match.start(1) - 1, line.offset + match.end(1))
        if name not in header.state_names:
            diagnostics.append(
                Diagnostic("unknown-identifier", f"'d{name}': no state named '{name}'", name_span)
            )
            continue
        index = header.state_names.index(name)
        if index in attempted:
            diagnostics.append(
                Diagnostic("structure", f"second equation for '{name}'", name_span)
            )
            continue
        attempted.add(index)
        expr = _parse_expr_text(match.group(2), header, line.offset + match.start(2), diagnostics)
        if expr is not None:
            found[index] = expr
    for index, name in enumerate(header.state_names):
        if index not in attempted:
            diagnostics.append(
                Diagnostic("structure", f"no equation for state '{name}'", section.span)
            )
    return tuple(found[i] for i in sorted(found))


def _parse_output(
    section: Optional[Section], n: int, diagnostics
) -> Tuple[Tuple[float, ...], ...]:
    identity = tuple(tuple(1.0 if i == j else 0.0 for j in range(n)) for i in range(n))
    if section is None:
        return identity
    if not section.lines:
        diagnostics.append(
            Diagnostic(
                "structure",
                "empty [output] section; write 'identity' or one row of C per line",
                section.span,
            )
        )
        return identity
    if len(section.lines) == 1 and section.lines[0].text.strip().lower() == "identity":
        return identity
    rows = []
    for line in section.lines:
        try:
            row = tuple(float(v) for v in re.split(r"[,\s]+", line.text.strip()) if v)
        except ValueError:
            diagnostics.append(Diagnostic("syntax", "output rows are numbers", line.span))
            continue
        if len(row) != n:
            diagnostics.append(
                Diagnostic(
                    "structure", f"output row has {len(row)} entries, expected {n}", line.span
                )
            )
            continue
        rows.append(row)
    return tuple(rows)
