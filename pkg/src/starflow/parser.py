"""Recursive-descent parser for the observable grammar.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary | '/' unary)*
    unary  := '-' unary | factor
    factor := base ('^' nat)?
    base   := number | 'i' | 'hbar' | variable | '(' expr ')'

A rational literal ``a/b`` is ordinary division by a constant. Division is
only allowed by non-zero constants. Variables of any frame may be mixed;
they are rewritten in the requested target frame.
"""

from __future__ import annotations

import re
from fractions import Fraction

from . import scalars
from .frames import DARBOUX, VARIABLE_FRAME, CoordinateFrame, Parameters, get_frame
from .scalars import EXACT, FLOAT
from .series import DEFAULT_ORDER, FormalSeries

MAX_EXPONENT = 64

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


class ParseError(ValueError):
    """Syntax or semantic error; ``pos`` is the 0-based character offset."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, frame, params, order, backend):
        self.tokens = _tokenize(text)
        self.i = 0
        self.frame = frame
        self.params = params
        self.order = order
        self.backend = backend
        self._vars = {}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {value!r}, found {found}", tok[2])
        return tok

    def parse(self) -> FormalSeries:
        result = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return result

    def expr(self):
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.term()
            left = left + right if op == "+" else left - right
        return left

    def term(self):
        left = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            right = self.unary()
            if op == "*":
                left = left * right
            else:
                if not right.is_constant() or right.min_hbar_power() != 0 \
                        or not right.constant_values()[0]:
                    raise ParseError("division is only allowed by non-zero constants", pos)
                left = left.scale(1 / right.constant_values()[0])
        return left

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.factor()

    def factor(self):
        base = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                raise ParseError("exponent must be a non-negative integer", tok[2])
            n = int(tok[1])
            if n > MAX_EXPONENT:
                raise ParseError(f"exponent {n} exceeds the maximum {MAX_EXPONENT}", tok[2])
            base = base ** n
        return base

    def base(self):
        kind, value, pos = self.take()
        if kind == "num":
            if self.backend == EXACT:
                c = Fraction(value)
            else:
                c = float(value)
            return FormalSeries.constant(c, self.frame, self.order, self.backend)
        if kind == "name":
            if value == "i":
                return FormalSeries.constant(scalars.to_scalar(1j, self.backend), self.frame,
                                             self.order, self.backend)
            if value == "hbar":
                return FormalSeries.hbar(self.frame, self.order, self.backend)
            return self.variable(value, pos)
        if kind == "op" and value == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {found}", pos)

    def variable(self, name, pos):
        if name not in VARIABLE_FRAME:
            raise ParseError(f"unknown variable {name!r}", pos)
        if name in self._vars:
            return self._vars[name]
        home_name = VARIABLE_FRAME[name]
        if home_name == self.frame.name:
            home = self.frame
        elif home_name == "darboux":
            home = DARBOUX
        else:
            if self.params is None:
                raise ParseError(f"variable {name!r} needs model parameters", pos)
            try:
                home = get_frame(home_name, self.params)
            except ValueError as exc:
                raise ParseError(str(exc), pos) from None
        var = FormalSeries.variable(name, home, self.order, self.backend)
        if home != self.frame:
            var = var.to_frame(self.frame)
        self._vars[name] = var
        return var


def parse_expression(text: str, frame: CoordinateFrame | str = DARBOUX,
                     params: Parameters | None = None, order: int = DEFAULT_ORDER,
                     backend: str | None = None) -> FormalSeries:
    """Parse an observable expression into a series in ``frame``.

    Args:
        text: expression such as ``"qS^2 + (1/2)*hbar*pB"``.
        frame: target frame (object or name).
        params: model parameters, needed for non-Darboux variables or frames.
        order: truncation order of the result.
        backend: scalar backend; defaults to the frame's parameter backend,
            or ``"exact"`` for the Darboux frame without parameters.

    Raises:
        ParseError: on syntax errors, unknown variables or exponents above 64.
    """
    if isinstance(frame, str):
        frame = get_frame(frame, params)
    if params is None:
        params = frame.params
    if backend is None:
        if params is not None:
            backend = params.backend
        else:
            backend = EXACT
    if backend not in (EXACT, FLOAT):
        raise ValueError(f"unknown scalar backend {backend!r}")
    return _Parser(text, frame, params, order, backend).parse()
