"""
Pratt (precedence-climbing) parser for coefficient expressions.

Grammar, loosest binding first:
    + -        left associative
    * /        left associative
    unary -    binds looser than ^, so -x^2 == -(x^2)
    ^          right associative
    f(a, ...)  calls from FUNCTIONS
Variables are x0..x{n-1} (slow) and y0..y{m-1} (fast); a bare `x` or `y`
names the only component when that dimension is 1. Named parameters are
substituted by their value while parsing.
"""
import re
from dataclasses import dataclass

from .evaluate import fold_constant
from .exceptions import ArityError, ExprSyntaxError, UnknownIdentifierError
from .nodes import FUNCTIONS, Binary, Call, Num, Unary, Var

_NUMBER = re.compile(r'(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?')
_NAME = re.compile(r'[A-Za-z_][A-Za-z0-9_]*')
_VARIABLE = re.compile(r'([xy])(\d+)$')

# operator -> (left binding power, right binding power)
_INFIX = {
    '+': (10, 11),
    '-': (10, 11),
    '*': (20, 21),
    '/': (20, 21),
    '^': (41, 40),
}
_PREFIX_MINUS = 30


@dataclass(frozen=True)
class Token:
    kind: str     # number, name, op, lparen, rparen, comma, end
    text: str
    offset: int   # byte offset into the source


def tokenize(source: str) -> list:
    tokens = []
    idx = 0
    # byte offsets differ from character offsets only past non-ASCII text
    byte_at = lambda i: len(source[:i].encode('utf-8'))
    while idx < len(source):
        c = source[idx]
        if c.isspace():
            idx += 1
            continue
        match = _NUMBER.match(source, idx)
        if match:
            tokens.append(Token('number', match.group(), byte_at(idx)))
            idx = match.end()
            continue
        match = _NAME.match(source, idx)
        if match:
            tokens.append(Token('name', match.group(), byte_at(idx)))
            idx = match.end()
            continue
        if c in _INFIX:
            tokens.append(Token('op', c, byte_at(idx)))
        elif c == '(':
            tokens.append(Token('lparen', c, byte_at(idx)))
        elif c == ')':
            tokens.append(Token('rparen', c, byte_at(idx)))
        elif c == ',':
            tokens.append(Token('comma', c, byte_at(idx)))
        else:
            raise ExprSyntaxError(f"unexpected character {c!r}", byte_at(idx))
        idx += 1
    tokens.append(Token('end', '', byte_at(len(source))))
    return tokens


class Parser:
    def __init__(self, source, dims, params=None):
        self.tokens = tokenize(source)
        self.pos = 0
        self.n, self.m = dims
        self.params = dict(params or {})

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, kind, what):
        token = self.advance()
        if token.kind != kind:
            found = 'end of input' if token.kind == 'end' else repr(token.text)
            raise ExprSyntaxError(f"expected {what}, found {found}", token.offset)
        return token

    def parse(self):
        node = self.expression(0)
        token = self.peek()
        if token.kind != 'end':
            raise ExprSyntaxError(f"unexpected {token.text!r}", token.offset)
        return node

    def expression(self, min_bp):
        lhs = self.prefix()
        while True:
            token = self.peek()
            if token.kind != 'op':
                return lhs
            left_bp, right_bp = _INFIX[token.text]
            if left_bp < min_bp:
                return lhs
            self.advance()
            rhs = self.expression(right_bp)
            lhs = fold_constant(Binary(token.text, lhs, rhs))

    def prefix(self):
        token = self.advance()
        if token.kind == 'number':
            return Num(float(token.text))
        if token.kind == 'op' and token.text == '-':
            return fold_constant(Unary('-', self.expression(_PREFIX_MINUS)))
        if token.kind == 'lparen':
            node = self.expression(0)
            self.expect('rparen', "')'")
            return node
        if token.kind == 'name':
            if self.peek().kind == 'lparen':
                return self.call(token)
            return self.identifier(token)
        if token.kind == 'end':
            raise ExprSyntaxError("unexpected end of input", token.offset)
        raise ExprSyntaxError(f"unexpected {token.text!r}", token.offset)

    def call(self, name_token):
        name = name_token.text
        if name not in FUNCTIONS:
            raise UnknownIdentifierError(f"unknown function {name!r}", name_token.offset)
        self.advance()  # '('
        args = []
        if self.peek().kind != 'rparen':
            args.append(self.expression(0))
            while self.peek().kind == 'comma':
                self.advance()
                args.append(self.expression(0))
        self.expect('rparen', "')'")
        if len(args) != FUNCTIONS[name]:
            raise ArityError(
                f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}",
                name_token.offset,
            )
        return fold_constant(Call(name, tuple(args)))

    def identifier(self, token):
        name = token.text
        if name in self.params:
            return Num(float(self.params[name]))
        if name == 'x' and self.n == 1:
            return Var('x', 0)
        if name == 'y' and self.m == 1:
            return Var('y', 0)
        match = _VARIABLE.match(name)
        if match:
            kind, index = match.group(1), int(match.group(2))
            dim = self.n if kind == 'x' else self.m
            if index < dim:
                return Var(kind, index)
            raise UnknownIdentifierError(
                f"{name} exceeds declared dimension {kind}:{dim}", token.offset
            )
        raise UnknownIdentifierError(f"unknown identifier {name!r}", token.offset)


def parse(source: str, dims, params=None):
    """
    Parse `source` into an expression tree for variables of dimensions
    dims = (n, m). Raises ExprSyntaxError / UnknownIdentifierError /
    ArityError with the byte offset of the offending token.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    return Parser(source, dims, params).parse()
