"""Expression language for profile functions psi(r, s) and radial functions k(r).

Grammar (``^`` binds tighter than unary minus, which binds tighter than ``*``)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' exponent)?          (a second '^' is an error)
    exponent:= ['-'] INTEGER | '(' ['-'] INTEGER ')'
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := sqrt | exp | log

Names are the declared variables (``r``, ``s`` by default) or parameter
keys; parameters are substituted as constants at parse time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

from . import jets
from .errors import JetError, ParseError

FUNCTIONS = ("sqrt", "exp", "log")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str
    value: float


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Const, Var, Param, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text, params, variables):
        self.tokens = _tokenize(text)
        self.i = 0
        self.params = params
        self.variables = variables

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, op):
        kind, val, pos = self.tok
        if kind != "op" or val != op:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {op!r}, found {found}", pos)
        self.advance()

    def parse(self):
        if self.tok[0] == "end":
            raise ParseError("empty expression", 0)
        node = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            node = Pow(base, self.exponent())
            kind, val, pos = self.tok
            if kind == "op" and val == "^":
                raise ParseError("chained exponent: parenthesize, e.g. (a^2)^3", pos)
            return node
        return base

    def exponent(self):
        paren = self.tok[0] == "op" and self.tok[1] == "("
        if paren:
            self.advance()
        sign = 1
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            sign = -1
        kind, val, pos = self.tok
        if kind != "num" or not re.fullmatch(r"\d+", val):
            shown = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"non-integer exponent: expected an integer literal, found {shown}", pos)
        self.advance()
        if paren:
            self.expect(")")
        return sign * int(val)

    def atom(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in self.variables:
                return Var(val)
            if val in self.params:
                return Param(val, float(self.params[val]))
            raise ParseError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", pos)


def parse(text: str, params: Mapping[str, float] | None = None,
          variables: tuple[str, ...] = ("r", "s")) -> Node:
    """Parse ``text`` into an AST; raises :class:`ParseError` with a position."""
    if text is None or not str(text).strip():
        raise ParseError("empty expression", 0)
    params = dict(params or {})
    clash = set(params) & (set(variables) | set(FUNCTIONS))
    if clash:
        raise ParseError(f"parameter names shadow reserved names: {sorted(clash)}")
    return _Parser(str(text), params, variables).parse()


_FN = {"sqrt": jets.sqrt, "exp": jets.exp, "log": jets.log}


def evaluate(node: Node, env: Mapping[str, object]):
    """Evaluate on floats or jets; ``env`` maps variable names to values."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Param):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, BinOp):
        a = evaluate(node.left, env)
        b = evaluate(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if not isinstance(b, jets.Jet) and b == 0:
            raise JetError("jet division singular")
        return a / b
    if isinstance(node, Pow):
        base = evaluate(node.base, env)
        if isinstance(base, jets.Jet):
            return base ** node.exponent
        if base == 0 and node.exponent < 0:
            raise JetError("jet division singular")
        return float(base) ** node.exponent
    if isinstance(node, Call):
        return _FN[node.fn](evaluate(node.arg, env))
    raise TypeError(f"not an expression node: {node!r}")


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_text(node: Node, parent: int = 0) -> str:
    """Render an AST back to grammar text (re-parses to an equal tree)."""
    if isinstance(node, Const):
        return repr(node.value) if node.value >= 0 else f"({node.value!r})"
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Neg):
        inner = f"-{to_text(node.operand, 3)}"
        return f"({inner})" if parent >= 2 else inner
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        right_p = p + 1 if node.op in "-/" else p
        s = f"{to_text(node.left, p)} {node.op} {to_text(node.right, right_p)}"
        return f"({s})" if p < parent else s
    if isinstance(node, Pow):
        e = node.exponent
        base = to_text(node.base, 4)
        if isinstance(node.base, Pow):
            base = f"({base})"
        return f"{base}^{e if e >= 0 else f'({e})'}"
    if isinstance(node, Call):
        return f"{node.fn}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def substitute(node: Node, mapping: Mapping[str, Node]) -> Node:
    """Replace variables by sub-trees."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, mapping), node.exponent)
    if isinstance(node, Call):
        return Call(node.fn, substitute(node.arg, mapping))
    return node


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, (Pow, Call)):
        return free_variables(node.base if isinstance(node, Pow) else node.arg)
    return set()


class RadialFunction:
    """A parsed expression in ``r`` alone, e.g. the k(r) of a rigidity family."""

    def __init__(self, text: str, params: Mapping[str, float] | None = None):
        self.text = text
        self.params = dict(params or {})
        self.ast = parse(text, self.params, variables=("r",))

    def __call__(self, r):
        return evaluate(self.ast, {"r": r})

    def __repr__(self):
        return f"RadialFunction({self.text!r})"
