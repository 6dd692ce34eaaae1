"""Small expression language for right-hand sides, initial data and test families.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := power (('*' | '/') power)*
    power   := unary (('^' | '**') power)?        # right-associative
    unary   := ('-' | '+') unary | primary
    primary := NUMBER | NAME | NAME '(' expr (',' expr)* ')'
             | 'x' '[' INT ']' '(' 't' [('-' | '+') NUMBER] ')'
             | '(' expr ')'

Unary minus binds tighter than ``^``, so ``-2^2`` is ``(-2)^2``.  Delays in
``x[i](t - d)`` are literal constants so the set of delayed references is
known statically.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DelayOutOfRange, EvalError, ParseError

__all__ = [
    "Binary",
    "Call",
    "Delayed",
    "Num",
    "Param",
    "Unary",
    "Var",
    "compile_scalar",
    "delayed_refs",
    "evaluate",
    "free_names",
    "parse",
    "parse_many",
    "to_source",
]

CONSTANTS = {"pi": math.pi, "e": math.e}

FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "tan": (1, np.tan),
    "exp": (1, np.exp),
    "log": (1, None),
    "sqrt": (1, None),
    "abs": (1, np.abs),
    "tanh": (1, np.tanh),
    "asin": (1, None),
    "acos": (1, None),
    "atan": (1, np.arctan),
    "pow": (2, None),
    "mod": (2, np.mod),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
}

TINY = 1e-300


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str
    value: float


@dataclass(frozen=True)
class Delayed:
    """Reference ``x[index](t - delay)``; ``index`` is 1-based."""

    index: int
    delay: float


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


# --------------------------------------------------------------------------
# tokenizer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),\[\];])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(source):
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            toks.append(_Tok("sep", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "op" and m.group() == ";":
            toks.append(_Tok("sep", ";", line, col))
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, col))
        pos = m.end()
    toks.append(_Tok("end", "", line, len(source) - line_start + 1))
    return toks


# --------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, source, variables, params, n_dim, r):
        self.toks = _tokenize(source)
        self.i = 0
        self.variables = set(variables)
        self.params = dict(params or {})
        self.n_dim = n_dim
        self.r = r

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def expect(self, text):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def skip_separators(self):
        while self.tok.kind == "sep":
            self.advance()

    def parse_list(self):
        out = []
        self.skip_separators()
        while self.tok.kind != "end":
            out.append(self.expr())
            if self.tok.kind not in ("sep", "end"):
                raise self.error(f"unexpected {self.tok.text!r}")
            self.skip_separators()
        if not out:
            raise self.error("empty expression")
        return out

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.power()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            node = Binary(op, node, self.power())
        return node

    def power(self):
        node = self.unary()
        if self.tok.text in ("^", "**"):
            self.advance()
            node = Binary("^", node, self.power())
        return node

    def unary(self):
        if self.tok.text == "-":
            self.advance()
            return Unary("-", self.unary())
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.primary()

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            self.advance()
            name = tok.text
            if name == "x" and self.n_dim is not None and "x" not in self.variables:
                return self.delayed(tok)
            if self.tok.text == "(":
                return self.call(name, tok)
            if name in self.variables:
                return Var(name)
            if name in self.params:
                return Param(name, float(self.params[name]))
            if name in CONSTANTS:
                return Num(CONSTANTS[name])
            if name in FUNCTIONS:
                raise self.error(f"function {name!r} needs arguments", tok)
            raise self.error(f"unknown identifier {name!r}", tok)
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")

    def call(self, name, tok):
        if name not in FUNCTIONS:
            raise self.error(f"unknown function {name!r}", tok)
        self.expect("(")
        args = [self.expr()]
        while self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name][0]
        if len(args) != arity:
            raise self.error(f"{name} takes {arity} argument(s), got {len(args)}", tok)
        return Call(name, tuple(args))

    def delayed(self, tok):
        index = 1
        if self.tok.text == "[":
            self.advance()
            itok = self.tok
            if itok.kind != "num" or not itok.text.isdigit():
                raise self.error("component index must be a positive integer")
            self.advance()
            index = int(itok.text)
            self.expect("]")
            if not 1 <= index <= self.n_dim:
                raise self.error(f"component index {index} outside 1..{self.n_dim}", itok)
        elif self.n_dim != 1:
            raise self.error("x needs a component index x[i] when N > 1", tok)
        self.expect("(")
        ttok = self.tok
        if ttok.text != "t":
            raise self.error("delayed reference must have the form x[i](t - d)")
        self.advance()
        delay = 0.0
        dtok = self.tok
        if self.tok.text in ("-", "+"):
            sign = self.advance().text
            dtok = self.tok
            if dtok.kind != "num":
                raise self.error("delay must be a numeric literal")
            self.advance()
            delay = float(dtok.text)
            if sign == "+":
                if delay != 0.0:
                    raise DelayOutOfRange(-delay, self.r, dtok.line, dtok.col)
                delay = 0.0
        self.expect(")")
        if self.r is not None and not (0.0 <= delay <= self.r * (1 + 1e-12)):
            raise DelayOutOfRange(delay, self.r, dtok.line, dtok.col)
        return Delayed(index, delay)


def parse_many(source, variables=(), params=None, n_dim=None, r=None):
    """Parse ``;``/newline separated expressions.

    With ``n_dim`` set, ``x[i](t - d)`` references are recognised and their
    delays are validated against ``[0, r]``.
    """
    if not isinstance(source, str) or not source.strip():
        raise ParseError("empty expression")
    return _Parser(source, variables, params, n_dim, r).parse_list()


def parse(source, variables=(), params=None, n_dim=None, r=None):
    nodes = parse_many(source, variables, params, n_dim, r)
    if len(nodes) != 1:
        raise ParseError(f"expected a single expression, got {len(nodes)}")
    return nodes[0]


# --------------------------------------------------------------------------
# printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
_UNARY_PREC = 4
_ATOM = 5


def _prec(node):
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary):
        return _UNARY_PREC
    if isinstance(node, Num) and node.value < 0:
        return 0
    return _ATOM


def _fmt_num(v):
    return repr(float(v))


def to_source(node):
    """Render a tree so that parsing the text gives back the same tree."""
    if isinstance(node, Num):
        s = _fmt_num(node.value)
        return f"({s})" if node.value < 0 else s
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Delayed):
        d = _fmt_num(node.delay)
        return f"x[{node.index}](t - {d})"
    if isinstance(node, Unary):
        inner = to_source(node.operand)
        if _prec(node.operand) < _UNARY_PREC:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Binary):
        p = _PREC[node.op]
        left, right = to_source(node.left), to_source(node.right)
        if node.op == "^":
            if _prec(node.left) <= p:
                left = f"({left})"
            if _prec(node.right) < p:
                right = f"({right})"
            return f"{left}^{right}"
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# evaluation


def _fail(msg, x):
    if np.ndim(x) == 0:
        raise EvalError(f"{msg} (argument {float(x)!r})")
    raise EvalError(msg)


def evaluate(node, env, refs=None):
    """Evaluate a tree with numpy broadcasting.

    ``env`` maps variable names to scalars/arrays; ``refs`` maps
    ``(index, delay)`` to the delayed state values.
    """
    with np.errstate(all="ignore"):
        out = _eval(node, env, refs)
    return out


def _eval(node, env, refs):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Param):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise EvalError(f"unbound variable {node.name!r}") from None
    if isinstance(node, Delayed):
        try:
            return refs[(node.index, node.delay)]
        except (KeyError, TypeError):
            raise EvalError(f"no state value for x[{node.index}](t - {node.delay})") from None
    if isinstance(node, Unary):
        return -_eval(node.operand, env, refs)
    if isinstance(node, Binary):
        a = _eval(node.left, env, refs)
        b = _eval(node.right, env, refs)
        if node.op == "+":
            out = np.add(a, b)
        elif node.op == "-":
            out = np.subtract(a, b)
        elif node.op == "*":
            out = np.multiply(a, b)
        elif node.op == "/":
            if np.any(np.abs(b) < TINY):
                _fail("division by zero", b)
            out = np.divide(a, b)
        else:
            out = np.power(np.asarray(a, dtype=float), b)
        return _finite(out, node.op)
    if isinstance(node, Call):
        args = [_eval(a, env, refs) for a in node.args]
        name = node.name
        if name == "log":
            if np.any(np.asarray(args[0]) <= 0):
                _fail("log of non-positive value", args[0])
            out = np.log(args[0])
        elif name == "sqrt":
            if np.any(np.asarray(args[0]) < 0):
                _fail("sqrt of negative value", args[0])
            out = np.sqrt(args[0])
        elif name in ("asin", "acos"):
            if np.any(np.abs(args[0]) > 1):
                _fail(f"{name} argument outside [-1, 1]", args[0])
            out = (np.arcsin if name == "asin" else np.arccos)(args[0])
        elif name == "pow":
            out = np.power(np.asarray(args[0], dtype=float), args[1])
        else:
            out = FUNCTIONS[name][1](*args)
        return _finite(out, name)
    raise TypeError(f"not an expression node: {node!r}")


def _finite(out, what):
    if not np.all(np.isfinite(out)):
        raise EvalError(f"non-finite result in {what!r}")
    return out


def _walk(node):
    yield node
    if isinstance(node, Unary):
        yield from _walk(node.operand)
    elif isinstance(node, Binary):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, Call):
        for a in node.args:
            yield from _walk(a)


def delayed_refs(node):
    return {(n.index, n.delay) for n in _walk(node) if isinstance(n, Delayed)}


def free_names(node):
    return {n.name for n in _walk(node) if isinstance(n, Var)}


def compile_scalar(source, variables=("x",), params=None):
    """Parse a scalar expression and return a vectorized Python callable.

    >>> f = compile_scalar("x^2 + 1")
    >>> float(f(2.0))
    5.0
    """
    variables = tuple(variables)
    node = parse(source, variables=variables, params=params)

    def fn(*args):
        env = dict(zip(variables, args))
        out = np.asarray(evaluate(node, env), dtype=float)
        shape = np.broadcast_shapes(*[np.shape(a) for a in args]) if args else ()
        if shape == ():
            return float(out)
        return np.broadcast_to(out, shape).copy()

    fn.node = node
    fn.source = source
    return fn
