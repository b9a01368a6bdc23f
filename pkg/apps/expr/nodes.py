"""
Expression tree for coefficient maps.

Nodes are immutable. Parameters never appear in a tree: the parser
substitutes them as number literals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


# function name -> arity
FUNCTIONS = {
    'sin': 1,
    'cos': 1,
    'exp': 1,
    'log': 1,
    'sqrt': 1,
    'abs': 1,
    'tanh': 1,
    'min': 2,
    'max': 2,
    'pow': 2,
}

BINARY_OPS = ('+', '-', '*', '/', '^')

# printing precedence, higher binds tighter
_PREC = {'+': 1, '-': 1, '*': 2, '/': 2, 'neg': 3, '^': 4, 'atom': 5}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str   # 'x' (slow) or 'y' (fast)
    index: int


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


def _prec(node):
    if isinstance(node, Num):
        negative = node.value < 0 or math.copysign(1.0, node.value) < 0
        return _PREC['neg'] if negative else _PREC['atom']
    if isinstance(node, Unary):
        return _PREC['neg']
    if isinstance(node, Binary):
        return _PREC[node.op]
    return _PREC['atom']


def _wrap(text, needed):
    return f"({text})" if needed else text


def to_source(node) -> str:
    """Pretty-print with the minimal parentheses the grammar needs."""
    if isinstance(node, Num):
        # a negative literal prints like a negation; callers wrap it
        return repr(float(node.value))
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, Unary):
        inner = to_source(node.operand)
        return '-' + _wrap(inner, _prec(node.operand) < _PREC['neg'])
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"

    prec = _PREC[node.op]
    left, right = to_source(node.left), to_source(node.right)
    if node.op == '^':
        left = _wrap(left, _prec(node.left) <= prec)
        right = _wrap(right, _prec(node.right) < _PREC['neg'])
    else:
        left = _wrap(left, _prec(node.left) < prec)
        right = _wrap(right, _prec(node.right) <= prec)
    return f"{left} {node.op} {right}"


def variables(node) -> set:
    """All (kind, index) pairs referenced by the tree."""
    if isinstance(node, Var):
        return {(node.kind, node.index)}
    if isinstance(node, Unary):
        return variables(node.operand)
    if isinstance(node, Binary):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        found = set()
        for arg in node.args:
            found |= variables(arg)
        return found
    return set()
