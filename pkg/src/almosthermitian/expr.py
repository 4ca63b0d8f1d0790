"""
A small arithmetic expression language for chart data.

Grammar (highest precedence first)::

    atom     := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    power    := atom [ '^' INT ]          # INT optionally signed / parenthesized
    unary    := '-' unary | power
    term     := unary { ('*' | '/') unary }
    expr     := term { ('+' | '-') term }

Supported functions are ``exp``, ``sin``, ``cos`` and ``sqrt``.  Expressions
evaluate on plain floats or on :class:`~almosthermitian.jets.Jet` values
with the same code path, so the constant term of a jet evaluation is the
float evaluation.
"""

import math
import re
from dataclasses import dataclass

from .jets import Jet

__all__ = [
    "ParseError",
    "Expression",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "parse_expression",
    "FUNCTIONS",
]

FUNCTIONS = ("exp", "sin", "cos", "sqrt")

_MATH = {"exp": math.exp, "sin": math.sin, "cos": math.cos, "sqrt": math.sqrt}


class ParseError(ValueError):
    """Malformed expression text; ``position`` is a 0-based column."""

    def __init__(self, message, position, text=""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}" + (f" in {text!r}" if text else ""))


class Expression:
    """Base class of AST nodes."""

    def evaluate(self, env):
        raise NotImplementedError

    def variables(self):
        return set()

    def __call__(self, **env):
        return self.evaluate(env)


@dataclass(frozen=True)
class Num(Expression):
    value: float

    def evaluate(self, env):
        return self.value

    def __str__(self):
        text = repr(float(self.value))
        return f"({text})" if self.value < 0 else text


@dataclass(frozen=True)
class Var(Expression):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def variables(self):
        return {self.name}

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def variables(self):
        return self.arg.variables()

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if isinstance(b, Jet):
            return b.reciprocal() * a
        return a / b

    def variables(self):
        return self.left.variables() | self.right.variables()

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def evaluate(self, env):
        b = self.base.evaluate(env)
        if isinstance(b, Jet):
            return b ** self.exponent
        return float(b) ** self.exponent

    def variables(self):
        return self.base.variables()

    def __str__(self):
        return f"({self.base}^({self.exponent}))"


@dataclass(frozen=True)
class Call(Expression):
    func: str
    arg: Expression

    def evaluate(self, env):
        x = self.arg.evaluate(env)
        if isinstance(x, Jet):
            return getattr(x, self.func)()
        return _MATH[self.func](x)

    def variables(self):
        return self.arg.variables()

    def __str__(self):
        return f"{self.func}({self.arg})"


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[col]!r}", col, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.k = 0
        self.variables = None if variables is None else set(variables)

    def peek(self):
        return self.tokens[self.k]

    def take(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            what = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {what}", pos, self.text)

    def error(self, message, pos):
        return ParseError(message, pos, self.text)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            if text == ")":
                raise self.error("unbalanced ')'", pos)
            raise self.error(f"unexpected token {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self):
        kind, text, pos = self.peek()
        if kind == "op" and text == "(":
            self.take()
            k = self.exponent()
            self.expect(")")
            return k
        sign = 1
        if kind == "op" and text == "-":
            self.take()
            sign = -1
            kind, text, pos = self.peek()
        if kind != "num":
            raise self.error("exponent must be an integer literal", pos)
        self.take()
        value = float(text)
        if not value.is_integer():
            raise self.error(f"non-integer exponent {text!r}", pos)
        return sign * int(value)

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in FUNCTIONS:
                    raise self.error(f"unknown function {text!r}", pos)
                self.take()
                arg = self.expr()
                kind2, text2, pos2 = self.peek()
                if text2 != ")":
                    raise self.error("unbalanced '('", pos2)
                self.take()
                return Call(text, arg)
            if text in FUNCTIONS:
                raise self.error(f"function {text!r} needs an argument", pos)
            if self.variables is not None and text not in self.variables:
                raise self.error(f"unknown identifier {text!r}", pos)
            return Var(text)
        if kind == "op" and text == "(":
            node = self.expr()
            kind2, text2, pos2 = self.peek()
            if text2 != ")":
                raise self.error("unbalanced '('", pos2)
            self.take()
            return node
        if kind == "end":
            raise self.error("unexpected end of input", pos)
        raise self.error(f"unexpected token {text!r}", pos)


def parse_expression(text, variables=None):
    """Parse ``text`` into an :class:`Expression`.

    Parameters
    ----------
    text : str
        Expression source.
    variables : iterable of str, optional
        Allowed identifiers.  When given, any other identifier is a
        :class:`ParseError`.
    """
    if isinstance(text, (int, float)):
        text = repr(float(text))
    return _Parser(str(text), variables).parse()
