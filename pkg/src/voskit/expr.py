"""Arithmetic expression ASTs for reaction kinetics and initial data.

The grammar is deliberately small: constants, identifiers, unary negation,
the four binary operators, integer powers, and a fixed set of one-argument
functions (pos, exp, sin, cos).  Precedence from loosest to tightest is
``+ -`` < ``* /`` < unary ``-`` < ``^``; binary operators associate to the
left.  Power exponents are nonnegative integer literals, which keeps every
expression well defined on negative intermediate values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Union

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Ident",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "ParseError",
    "EvalError",
    "parse_expr",
    "render_expr",
    "eval_expr",
    "compile_expr",
    "eval_compiled",
    "free_identifiers",
    "FUNCTIONS",
]

FUNCTIONS = ("pos", "exp", "sin", "cos")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int  # >= 0


@dataclass(frozen=True)
class Call:
    func: str  # one of FUNCTIONS
    arg: "Expr"


Expr = Union[Const, Ident, Neg, BinOp, Pow, Call]


class ParseError(Exception):
    """Syntax error with 1-based position and the token set that was legal."""

    def __init__(self, message, line, col, expected=(), found=""):
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        self.found = found
        detail = f"line {line}, col {col}: {message}"
        if expected:
            detail += " (expected " + " or ".join(sorted(self.expected)) + ")"
        super().__init__(detail)


class EvalError(Exception):
    """Runtime evaluation failure, carrying the offending expression text."""

    def __init__(self, message, expr_text, where=None):
        self.expr_text = expr_text
        self.where = where
        detail = f"{message} in '{expr_text}'"
        if where is not None:
            detail += f" at {where}"
        super().__init__(detail)


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
  | (?P<ws>[ \t]+)
    """,
    re.VERBOSE,
)


def _tokenize(text, line=1, col0=1):
    """Return [(kind, value, col)] with 'end' appended; raise on junk."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}", line, col0 + pos, found=text[pos]
            )
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), col0 + pos))
        pos = m.end()
    tokens.append(("end", "", col0 + pos))
    return tokens


class _Parser:
    def __init__(self, tokens, line):
        self.tokens = tokens
        self.line = line
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        kind, value, col = self.peek()
        found = value if kind != "end" else "end of expression"
        raise ParseError(
            f"unexpected {found!r}", self.line, col, expected=expected, found=found
        )

    # expr := term (('+'|'-') term)*
    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    # term := factor (('*'|'/') factor)*
    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    # factor := '-' factor | power
    def factor(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    # power := atom ('^' INT)*
    def power(self):
        node = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            kind, value, col = self.peek()
            if kind != "num" or not re.fullmatch(r"\d+", value):
                self.fail(("nonnegative integer exponent",))
            self.advance()
            node = Pow(node, int(value))
        return node

    # atom := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
    def atom(self):
        kind, value, col = self.peek()
        if kind == "num":
            self.advance()
            x = float(value)
            if not math.isfinite(x):
                raise ParseError(f"numeric literal overflows: {value}", self.line, col)
            return Const(x)
        if kind == "ident":
            self.advance()
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if value not in FUNCTIONS:
                    raise ParseError(
                        f"unknown function {value!r}",
                        self.line,
                        col,
                        expected=FUNCTIONS,
                        found=value,
                    )
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            return Ident(value)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail(("number", "identifier", "'('", "'-'"))

    def expect(self, op):
        kind, value, col = self.peek()
        if kind == "op" and value == op:
            self.advance()
            return
        self.fail((f"'{op}'",))


def parse_expr(text, line=1, col0=1):
    """Parse one expression; line/col0 offset error positions for file use."""
    p = _Parser(_tokenize(text, line, col0), line)
    node = p.expr()
    if p.peek()[0] != "end":
        p.fail(("operator", "end of expression"))
    return node


# ---------------------------------------------------------------------------
# rendering (canonical printer; parse(render(e)) is structurally e)

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC_ADD if node.op in "+-" else _PREC_MUL
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _fmt_const(value):
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _render(node, min_prec):
    text = None
    if isinstance(node, Const):
        text = _fmt_const(node.value)
    elif isinstance(node, Ident):
        text = node.name
    elif isinstance(node, Neg):
        text = "-" + _render(node.arg, _PREC_NEG)
    elif isinstance(node, BinOp):
        prec = _prec(node)
        # left-associative: right operand needs strictly higher precedence
        text = (
            _render(node.left, prec)
            + node.op
            + _render(node.right, prec + 1)
        )
    elif isinstance(node, Pow):
        text = _render(node.base, _PREC_POW) + "^" + str(node.exponent)
    elif isinstance(node, Call):
        return node.func + "(" + _render(node.arg, 0) + ")"
    else:
        raise TypeError(f"not an Expr node: {node!r}")
    if _prec(node) < min_prec:
        return "(" + text + ")"
    return text


def render_expr(node):
    """Canonical text form, minimally parenthesized."""
    return _render(node, 0)


# ---------------------------------------------------------------------------
# evaluation (scalars or numpy arrays; pure and reentrant)


def eval_expr(node, env: Mapping[str, object]):
    """Evaluate over an environment of scalars and/or broadcastable arrays.

    Division by zero raises EvalError naming the offending subexpression and,
    for array arguments, the first flat index where it occurs.
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Ident):
        try:
            return env[node.name]
        except KeyError:
            raise EvalError(f"unknown identifier '{node.name}'", render_expr(node)) from None
    if isinstance(node, Neg):
        return -eval_expr(node.arg, env)
    if isinstance(node, BinOp):
        a = eval_expr(node.left, env)
        b = eval_expr(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        # division: refuse zero denominators loudly
        if isinstance(b, np.ndarray):
            zero = b == 0
            if zero.any():
                idx = int(np.flatnonzero(zero.ravel())[0])
                raise EvalError("division by zero", render_expr(node), where=f"index {idx}")
        elif b == 0:
            raise EvalError("division by zero", render_expr(node))
        return a / b
    if isinstance(node, Pow):
        base = eval_expr(node.base, env)
        return base ** node.exponent
    if isinstance(node, Call):
        arg = eval_expr(node.arg, env)
        if node.func == "pos":
            return np.maximum(arg, 0.0)
        if node.func == "exp":
            return np.exp(arg)
        if node.func == "sin":
            return np.sin(arg)
        if node.func == "cos":
            return np.cos(arg)
        raise EvalError(f"unknown function '{node.func}'", render_expr(node))
    raise TypeError(f"not an Expr node: {node!r}")


def _pycode(node):
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Ident):
        return f"env[{node.name!r}]"
    if isinstance(node, Neg):
        return f"(-{_pycode(node.arg)})"
    if isinstance(node, BinOp):
        return f"({_pycode(node.left)} {node.op} {_pycode(node.right)})"
    if isinstance(node, Pow):
        return f"({_pycode(node.base)} ** {node.exponent})"
    if isinstance(node, Call):
        fn = {"pos": "_pos", "exp": "np.exp", "sin": "np.sin", "cos": "np.cos"}[node.func]
        return f"{fn}({_pycode(node.arg)})"
    raise TypeError(f"not an Expr node: {node!r}")


@lru_cache(maxsize=None)
def compile_expr(node):
    """Compile to a fast ``f(env) -> value`` with no per-node dispatch.

    The compiled form performs no division checks; evaluate under
    ``np.errstate(divide='raise', invalid='raise')`` and fall back to
    eval_expr to locate the offending subexpression on failure, or use
    eval_compiled which does both.
    """
    namespace = {"np": np, "_pos": lambda x: np.maximum(x, 0.0)}
    return eval("lambda env: " + _pycode(node), namespace)


def eval_compiled(node, env, where=None):
    """Fast evaluation with the same division-by-zero contract as eval_expr.

    Runs the compiled form; on a floating failure re-runs the checked
    interpreter to name the offending subexpression, annotated with
    ``where``.  Overflow to inf passes through (callers monitor finiteness).
    """
    fast = compile_expr(node)
    try:
        with np.errstate(divide="raise", invalid="raise", over="ignore", under="ignore"):
            return fast(env)
    except (FloatingPointError, ZeroDivisionError):
        try:
            eval_expr(node, env)
        except EvalError as err:
            raise EvalError(str(err), err.expr_text, where=where) from None
        with np.errstate(all="ignore"):
            return fast(env)


def free_identifiers(node):
    """Set of identifier names appearing in the expression."""
    if isinstance(node, Const):
        return set()
    if isinstance(node, Ident):
        return {node.name}
    if isinstance(node, Neg):
        return free_identifiers(node.arg)
    if isinstance(node, BinOp):
        return free_identifiers(node.left) | free_identifiers(node.right)
    if isinstance(node, Pow):
        return free_identifiers(node.base)
    if isinstance(node, Call):
        return free_identifiers(node.arg)
    raise TypeError(f"not an Expr node: {node!r}")
