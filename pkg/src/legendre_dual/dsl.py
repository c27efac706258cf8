"""Expression mini-language for scenario inputs.

Scenario files describe every scalar ingredient (Lagrangians, anchors,
connection coefficients, ...) as plain-text expressions over named
coordinates.  This module provides the full round trip:

* :func:`parse` — text to AST with byte-offset diagnostics,
* :func:`pretty` — AST back to text with minimal parentheses such that
  ``parse(pretty(ast)) == ast`` exactly,
* :func:`evaluate` — AST to a :class:`~legendre_dual.jets.Jet2` given an
  environment of coordinate jets (exact derivatives, no finite differences),
* :func:`eval_jet2` — convenience entry: value/gradient/Hessian of an
  expression at a point with respect to a chosen coordinate tuple.

Grammar (precedence climbing)::

    expr  := term (('+' | '-') term)*          left-associative
    term  := unary (('*' | '/') unary)*        left-associative
    unary := '-' unary | power
    power := atom ('^' unary)?                 right-associative
    atom  := NUMBER | IDENT | IDENT '(' args ')' | '(' expr ')'

so ``^`` binds tighter than unary minus (``-x^2`` is ``-(x^2)``) and
exponents re-enter at unary level (``2^-3`` works).  Functions: ``exp``,
``log``, ``sin``, ``cos``, ``sqrt`` (one argument) and ``pow`` (two).
Numbers are decimal literals with optional fraction and exponent; identifiers
are ``[A-Za-z_][A-Za-z0-9_]*``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .jets import UNIVARIATE, Jet2, jet_pow

__all__ = [
    "Ast",
    "Num",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Call",
    "ParseError",
    "EvalError",
    "ScalarField",
    "parse",
    "pretty",
    "evaluate",
    "eval_jet2",
    "free_symbols",
]


class ParseError(ValueError):
    """Syntax error with the byte offset of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EvalError(ValueError):
    """Evaluation failed (unbound symbol, bad arity at runtime, ...)."""


# ---------------------------------------------------------------------- #
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Ast"


@dataclass(frozen=True)
class Add:
    left: "Ast"
    right: "Ast"


@dataclass(frozen=True)
class Sub:
    left: "Ast"
    right: "Ast"


@dataclass(frozen=True)
class Mul:
    left: "Ast"
    right: "Ast"


@dataclass(frozen=True)
class Div:
    left: "Ast"
    right: "Ast"


@dataclass(frozen=True)
class Pow:
    base: "Ast"
    exponent: "Ast"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Ast", ...]


Ast = Union[Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call]

#: function name -> arity
FUNCTIONS: dict[str, int] = {
    "exp": 1,
    "log": 1,
    "sin": 1,
    "cos": 1,
    "sqrt": 1,
    "pow": 2,
}


# ---------------------------------------------------------------------- #
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | "op" | "end"
    text: str
    offset: int  # byte offset in the source


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise ParseError(
                f"unexpected character {source[pos]!r}",
                len(source[:pos].encode("utf-8")),
            )
        kind = match.lastgroup or ""
        if kind != "ws":
            tokens.append(
                _Token(kind, match.group(), len(source[: match.start()].encode("utf-8")))
            )
        pos = match.end()
    tokens.append(_Token("end", "", len(source.encode("utf-8"))))
    return tokens


# ---------------------------------------------------------------------- #
# parser


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect_op(self, op: str) -> None:
        token = self.peek()
        if token.kind != "op" or token.text != op:
            raise ParseError(f"expected {op!r}", token.offset)
        self.advance()

    def parse_expr(self) -> Ast:
        node = self.parse_term()
        while True:
            token = self.peek()
            if token.kind == "op" and token.text in "+-":
                self.advance()
                right = self.parse_term()
                node = Add(node, right) if token.text == "+" else Sub(node, right)
            else:
                return node

    def parse_term(self) -> Ast:
        node = self.parse_unary()
        while True:
            token = self.peek()
            if token.kind == "op" and token.text in "*/":
                self.advance()
                right = self.parse_unary()
                node = Mul(node, right) if token.text == "*" else Div(node, right)
            else:
                return node

    def parse_unary(self) -> Ast:
        token = self.peek()
        if token.kind == "op" and token.text == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Ast:
        base = self.parse_atom()
        token = self.peek()
        if token.kind == "op" and token.text == "^":
            self.advance()
            return Pow(base, self.parse_unary())
        return base

    def parse_atom(self) -> Ast:
        token = self.peek()
        if token.kind == "number":
            self.advance()
            return Num(float(token.text))
        if token.kind == "ident":
            self.advance()
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if token.text not in FUNCTIONS:
                    raise ParseError(
                        f"unknown function {token.text!r}", token.offset
                    )
                self.advance()
                args = [self.parse_expr()]
                while self.peek().kind == "op" and self.peek().text == ",":
                    self.advance()
                    args.append(self.parse_expr())
                self.expect_op(")")
                arity = FUNCTIONS[token.text]
                if len(args) != arity:
                    raise ParseError(
                        f"{token.text} expects {arity} argument(s), got {len(args)}",
                        token.offset,
                    )
                return Call(token.text, tuple(args))
            return Var(token.text)
        if token.kind == "op" and token.text == "(":
            self.advance()
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ParseError(
            f"expected a value, got {token.text!r}" if token.text else "unexpected end of input",
            token.offset,
        )


def parse(source: str) -> Ast:
    """Parse an expression; raises :class:`ParseError` with a byte offset."""
    parser = _Parser(_tokenize(source))
    node = parser.parse_expr()
    trailing = parser.peek()
    if trailing.kind != "end":
        raise ParseError(f"unexpected {trailing.text!r}", trailing.offset)
    return node


# ---------------------------------------------------------------------- #
# pretty printer

# precedence strata used for minimal parenthesization
_PREC_ADD = 1
_PREC_MUL = 2
_PREC_UNARY = 3
_PREC_POW = 4
_PREC_ATOM = 6


def _prec(node: Ast) -> int:
    if isinstance(node, (Add, Sub)):
        return _PREC_ADD
    if isinstance(node, (Mul, Div)):
        return _PREC_MUL
    if isinstance(node, Neg):
        return _PREC_UNARY
    if isinstance(node, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _render(node: Ast, context: int) -> str:
    if isinstance(node, Num):
        text = repr(node.value)
    elif isinstance(node, Var):
        text = node.name
    elif isinstance(node, Call):
        text = f"{node.func}({', '.join(_render(a, 0) for a in node.args)})"
    elif isinstance(node, Neg):
        text = "-" + _render(node.operand, _PREC_UNARY)
    elif isinstance(node, Add):
        text = f"{_render(node.left, _PREC_ADD)} + {_render(node.right, _PREC_ADD + 1)}"
    elif isinstance(node, Sub):
        text = f"{_render(node.left, _PREC_ADD)} - {_render(node.right, _PREC_ADD + 1)}"
    elif isinstance(node, Mul):
        text = f"{_render(node.left, _PREC_MUL)}*{_render(node.right, _PREC_MUL + 1)}"
    elif isinstance(node, Div):
        text = f"{_render(node.left, _PREC_MUL)}/{_render(node.right, _PREC_MUL + 1)}"
    elif isinstance(node, Pow):
        text = f"{_render(node.base, _PREC_ATOM)}^{_render(node.exponent, _PREC_UNARY)}"
    else:  # pragma: no cover - exhaustive
        raise TypeError(f"not an AST node: {node!r}")
    if _prec(node) < context:
        return f"({text})"
    return text


def pretty(node: Ast) -> str:
    """Render an AST to text; ``parse(pretty(ast))`` reproduces ``ast``."""
    return _render(node, 0)


# ---------------------------------------------------------------------- #
# evaluation


def free_symbols(node: Ast) -> frozenset[str]:
    """All coordinate names occurring in the expression."""
    out: set[str] = set()

    def walk(n: Ast) -> None:
        if isinstance(n, Var):
            out.add(n.name)
        elif isinstance(n, Neg):
            walk(n.operand)
        elif isinstance(n, (Add, Sub, Mul, Div)):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, Pow):
            walk(n.base)
            walk(n.exponent)
        elif isinstance(n, Call):
            for a in n.args:
                walk(a)

    walk(node)
    return frozenset(out)


def evaluate(node: Ast, env: Mapping[str, Jet2]) -> Jet2:
    """Evaluate an AST over an environment of coordinate jets.

    All jets in ``env`` must share the same active-coordinate dimension;
    numeric literals become constants of that dimension.  The result order
    is the minimum order among the jets actually used (constants adapt).
    """
    if not env:
        raise EvalError("empty evaluation environment")
    probe = next(iter(env.values()))
    dim = probe.dim
    order = max(j.order for j in env.values())

    def walk(n: Ast) -> Jet2:
        # Numeric-literal operands stay plain floats (the jet operators
        # coerce them), sparing a constant-jet construction per node.
        if isinstance(n, Num):
            return Jet2.constant(n.value, dim, order)
        if isinstance(n, Var):
            try:
                return env[n.name]
            except KeyError:
                raise EvalError(f"unbound symbol {n.name!r}") from None
        if isinstance(n, Neg):
            return -walk(n.operand)
        if isinstance(n, Add):
            if isinstance(n.right, Num):
                return walk(n.left) + n.right.value
            if isinstance(n.left, Num):
                return n.left.value + walk(n.right)
            return walk(n.left) + walk(n.right)
        if isinstance(n, Sub):
            if isinstance(n.right, Num):
                return walk(n.left) - n.right.value
            if isinstance(n.left, Num):
                return n.left.value - walk(n.right)
            return walk(n.left) - walk(n.right)
        if isinstance(n, Mul):
            if isinstance(n.right, Num):
                return walk(n.left) * n.right.value
            if isinstance(n.left, Num):
                return n.left.value * walk(n.right)
            return walk(n.left) * walk(n.right)
        if isinstance(n, Div):
            if isinstance(n.right, Num) and n.right.value != 0.0:
                return walk(n.left) / n.right.value
            if isinstance(n.left, Num):
                return n.left.value / walk(n.right)
            return walk(n.left) / walk(n.right)
        if isinstance(n, Pow):
            if isinstance(n.exponent, Num):
                return jet_pow(walk(n.base), n.exponent.value)
            return jet_pow(walk(n.base), walk(n.exponent))
        if isinstance(n, Call):
            if n.func == "pow":
                if isinstance(n.args[1], Num):
                    return jet_pow(walk(n.args[0]), n.args[1].value)
                return jet_pow(walk(n.args[0]), walk(n.args[1]))
            return UNIVARIATE[n.func](walk(n.args[0]))
        raise TypeError(f"not an AST node: {n!r}")  # pragma: no cover

    return walk(node)


@dataclass(frozen=True)
class ScalarField:
    """An expression together with its declared coordinate namespace."""

    ast: Ast
    coords: tuple[str, ...]

    def __post_init__(self) -> None:
        extra = free_symbols(self.ast) - set(self.coords)
        if extra:
            raise EvalError(
                f"expression uses symbols outside its namespace: {sorted(extra)}"
            )

    @property
    def free_symbols(self) -> frozenset[str]:
        return free_symbols(self.ast)

    @staticmethod
    def from_text(source: str, coords: Sequence[str]) -> "ScalarField":
        return ScalarField(parse(source), tuple(coords))


def eval_jet2(
    field: Union[ScalarField, Ast, str],
    at: Mapping[str, float],
    wrt: Sequence[str],
    order: int = 2,
) -> Jet2:
    """Value/gradient/Hessian of an expression at a point.

    ``wrt`` fixes the active-coordinate tuple (gradient entry ``k``
    differentiates with respect to ``wrt[k]``); names in ``at`` but not in
    ``wrt`` are held constant.
    """
    if isinstance(field, str):
        node = parse(field)
    elif isinstance(field, ScalarField):
        node = field.ast
    else:
        node = field
    names = list(wrt)
    dim = len(names)
    env: dict[str, Jet2] = {}
    for name, value in at.items():
        if name in names:
            env[name] = Jet2.variable(float(value), names.index(name), dim, order)
        else:
            env[name] = Jet2.constant(float(value), dim, order)
    missing = free_symbols(node) - set(env)
    if missing:
        raise EvalError(f"unbound symbols: {sorted(missing)}")
    if not env:
        env["_"] = Jet2.constant(0.0, dim if dim else 1, order)
    return evaluate(node, env)


def validate_namespace(
    node: Ast, allowed: Iterable[str], label: str
) -> list[str]:
    """Diagnostics (possibly empty) for symbols outside ``allowed``."""
    extra = sorted(free_symbols(node) - set(allowed))
    if not extra:
        return []
    return [
        f"{label}: symbol {name!r} is not a legal coordinate here "
        f"(allowed: {', '.join(sorted(set(allowed)))})"
        for name in extra
    ]
