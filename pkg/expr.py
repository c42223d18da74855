# expr.py
"""
Coefficient expression language
───────────────────────────────
• parse(source)             → Expression (immutable AST)
• evaluate(e, env)          → float, IEEE double evaluation of the tree
• compile_expression(e)     → CompiledExpression, a closure chain that also
                              accepts numpy arrays (whole grid levels at once)
• pretty(e)                 → canonical source text, reparses to the same tree
• substitute(e, mapping)    → tree with variables replaced by sub-trees

Grammar (tightest first): ^ (right-assoc), unary -, * /, + -.
Variables: t x u v w r.  Functions: sin cos exp log sqrt abs tanh.
The named constant `pi` is accepted as a literal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Union

import numpy as np

from errors import (
    ExprDomainError,
    ExprSyntaxError,
    UnboundVariableError,
    UnknownIdentifierError,
)

VARIABLES: FrozenSet[str] = frozenset({"t", "x", "u", "v", "w", "r"})
FUNCTIONS: Dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
}
CONSTANTS: Dict[str, float] = {"pi": math.pi}

Number = Union[float, np.ndarray]


# ───────────────────────────── AST ──────────────────────────────
@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Union[Num, Const, Var, Neg, BinOp, Call]


def variables_of(e: Expression) -> FrozenSet[str]:
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, Neg):
        return variables_of(e.operand)
    if isinstance(e, BinOp):
        return variables_of(e.left) | variables_of(e.right)
    if isinstance(e, Call):
        return variables_of(e.arg)
    return frozenset()


# ─────────────────────────── tokenizer ──────────────────────────
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str          # num | ident | op | end
    text: str
    offset: int        # byte offset into the UTF-8 source


def _tokenize(source: str) -> List[_Token]:
    tokens: List[_Token] = []
    pos = 0
    byte_pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(byte_pos, "operand or operator", source)
        text = m.group()
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, text, byte_pos))
        pos = m.end()
        byte_pos += len(text.encode("utf-8"))
    tokens.append(_Token("end", "", byte_pos))
    return tokens


# ──────────────────────────── parser ────────────────────────────
class _Parser:
    """Recursive descent, one method per precedence level."""

    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, expected: str) -> None:
        raise ExprSyntaxError(self.tok.offset, expected, self.source)

    def expect(self, text: str) -> None:
        if self.tok.text != text:
            self.fail(f"'{text}'")
        self.advance()

    def parse(self) -> Expression:
        e = self.sum()
        if self.tok.kind != "end":
            self.fail("operator or end of input")
        return e

    def sum(self) -> Expression:
        left = self.product()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance().text
            left = BinOp(op, left, self.product())
        return left

    def product(self) -> Expression:
        left = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expression:
        if self.tok.text == "-" and self.tok.kind == "op":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.tok.text == "^" and self.tok.kind == "op":
            self.advance()
            # exponent may carry its own unary minus: 2^-1
            return BinOp("^", base, self.unary_exponent())
        return base

    def unary_exponent(self) -> Expression:
        if self.tok.text == "-" and self.tok.kind == "op":
            self.advance()
            return Neg(self.unary_exponent())
        return self.power()

    def atom(self) -> Expression:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(tok.offset, "finite number", self.source)
            return Num(value)
        if tok.kind == "ident":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text in VARIABLES:
                return Var(tok.text)
            if tok.text in CONSTANTS:
                return Const(tok.text)
            raise UnknownIdentifierError(tok.text, tok.offset)
        if tok.text == "(":
            self.advance()
            e = self.sum()
            self.expect(")")
            return e
        self.fail("operand")
        raise AssertionError("unreachable")


def parse(source: str) -> Expression:
    """Parse `source` into an immutable Expression tree."""
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ExprSyntaxError(exc.start, "UTF-8 text") from None
    return _Parser(source).parse()


# ─────────────────────────── printing ───────────────────────────
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(e: Expression) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def _wrap(e: Expression, needed: bool) -> str:
    s = pretty(e)
    return f"({s})" if needed else s


def pretty(e: Expression) -> str:
    if isinstance(e, Num):
        s = repr(float(e.value))
        return f"({s})" if e.value < 0 else s
    if isinstance(e, (Const, Var)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({pretty(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, _prec(e.operand) < _PREC["neg"])
    if e.op == "^":
        left = _wrap(e.left, _prec(e.left) < _PREC["atom"])
        right = _wrap(e.right, _prec(e.right) < _PREC["^"])
        return f"{left}^{right}"
    p = _PREC[e.op]
    left = _wrap(e.left, _prec(e.left) < p)
    right = _wrap(e.right, _prec(e.right) <= p)
    return f"{left} {e.op} {right}"


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by sub-trees (simultaneously)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, mapping))
    return e


# ───────────────────── compiled closure chain ───────────────────
Env = Mapping[str, Number]
_Fn = Callable[[Env], Number]


def _domain_check(bad, message: str) -> None:
    if np.any(bad):
        raise ExprDomainError(message)


def _compile(e: Expression) -> _Fn:
    if isinstance(e, Num):
        value = np.float64(e.value)
        return lambda env: value
    if isinstance(e, Const):
        value = np.float64(CONSTANTS[e.name])
        return lambda env: value
    if isinstance(e, Var):
        name = e.name

        def var(env: Env) -> Number:
            try:
                return env[name]
            except KeyError:
                raise UnboundVariableError(name) from None
        return var
    if isinstance(e, Neg):
        inner = _compile(e.operand)
        return lambda env: -inner(env)
    if isinstance(e, Call):
        arg = _compile(e.arg)
        fn = FUNCTIONS[e.func]
        if e.func == "log":
            def log(env: Env) -> Number:
                a = arg(env)
                _domain_check(np.asarray(a) <= 0, "log of non-positive value")
                return np.log(a)
            return log
        if e.func == "sqrt":
            def sqrt(env: Env) -> Number:
                a = arg(env)
                _domain_check(np.asarray(a) < 0, "sqrt of negative value")
                return np.sqrt(a)
            return sqrt
        return lambda env: fn(arg(env))

    left, right = _compile(e.left), _compile(e.right)
    if e.op == "+":
        return lambda env: left(env) + right(env)
    if e.op == "-":
        return lambda env: left(env) - right(env)
    if e.op == "*":
        return lambda env: left(env) * right(env)
    if e.op == "/":
        def div(env: Env) -> Number:
            a, b = left(env), right(env)
            _domain_check(np.asarray(b) == 0, "division by zero")
            return np.true_divide(a, b)
        return div

    def power(env: Env) -> Number:
        a, b = left(env), right(env)
        with np.errstate(all="ignore"):
            out = np.float_power(a, b)
        _domain_check(
            ~np.isfinite(out) & np.isfinite(a) & np.isfinite(b),
            "power outside its real domain",
        )
        return out
    return power


class CompiledExpression:
    """Immutable closure chain for one Expression; safe to share across workers."""

    __slots__ = ("tree", "source", "variables", "_fn")

    def __init__(self, tree: Expression, source: Optional[str] = None):
        self.tree = tree
        self.source = source if source is not None else pretty(tree)
        self.variables = variables_of(tree)
        self._fn = _compile(tree)

    def __call__(self, env: Optional[Env] = None, **kwargs: Number) -> Number:
        if env is None:
            env = kwargs
        elif kwargs:
            env = {**env, **kwargs}
        return self._fn(env)

    def is_constant(self) -> bool:
        return not self.variables

    def __repr__(self) -> str:
        return f"CompiledExpression({self.source!r})"


def compile_expression(e: Union[Expression, str]) -> CompiledExpression:
    if isinstance(e, str):
        return CompiledExpression(parse(e), e)
    return CompiledExpression(e)


def evaluate(e: Union[Expression, CompiledExpression], env: Env) -> float:
    """Evaluate `e` at one point; every variable of `e` must be bound."""
    compiled = e if isinstance(e, CompiledExpression) else CompiledExpression(e)
    missing = sorted(compiled.variables - set(env))
    if missing:
        raise UnboundVariableError(missing[0])
    return float(compiled(env))

