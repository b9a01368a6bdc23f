"""
Vectorised evaluation of expression trees.

A tree is compiled once into nested closures over numpy ufuncs. The
closures accept x with shape (n, *batch) and y with shape (m, *batch),
so one call evaluates an entry for a whole block of sample paths.
"""
import numpy as np

from .exceptions import ExprDomainError
from .nodes import Binary, Call, Num, Unary, Var


def _check_power(base, exponent):
    base = np.asarray(base, dtype=float)
    exponent = np.asarray(exponent, dtype=float)
    base, exponent = np.broadcast_arrays(base, exponent)
    fractional = exponent != np.floor(exponent)
    if np.any((base < 0) & fractional):
        raise ExprDomainError("negative base with non-integer exponent")
    if np.any((base == 0) & (exponent < 0)):
        raise ExprDomainError("zero raised to a negative power")


def _divide(a, b):
    if np.any(np.asarray(b) == 0):
        raise ExprDomainError("division by zero")
    return np.divide(a, b)


def _power(a, b):
    _check_power(a, b)
    with np.errstate(over='ignore'):
        return np.power(np.asarray(a, dtype=float), b)


def _log(a):
    if np.any(np.asarray(a) <= 0):
        raise ExprDomainError("log argument must be positive")
    return np.log(a)


def _sqrt(a):
    if np.any(np.asarray(a) < 0):
        raise ExprDomainError("sqrt argument must be nonnegative")
    return np.sqrt(a)


def _exp(a):
    with np.errstate(over='ignore'):
        return np.exp(a)


BINARY = {
    '+': np.add,
    '-': np.subtract,
    '*': np.multiply,
    '/': _divide,
    '^': _power,
}

CALLS = {
    'sin': np.sin,
    'cos': np.cos,
    'exp': _exp,
    'log': _log,
    'sqrt': _sqrt,
    'abs': np.abs,
    'tanh': np.tanh,
    'min': np.minimum,
    'max': np.maximum,
    'pow': _power,
}


def compile_node(node):
    """Return a closure f(x, y) evaluating `node`."""
    if isinstance(node, Num):
        value = float(node.value)
        return lambda x, y: value
    if isinstance(node, Var):
        index = node.index
        if node.kind == 'x':
            return lambda x, y: x[index]
        return lambda x, y: y[index]
    if isinstance(node, Unary):
        inner = compile_node(node.operand)
        return lambda x, y: np.negative(inner(x, y))
    if isinstance(node, Binary):
        op = BINARY[node.op]
        left, right = compile_node(node.left), compile_node(node.right)
        return lambda x, y: op(left(x, y), right(x, y))
    if isinstance(node, Call):
        fn = CALLS[node.name]
        args = [compile_node(a) for a in node.args]
        if len(args) == 1:
            (arg,) = args
            return lambda x, y: fn(arg(x, y))
        first, second = args
        return lambda x, y: fn(first(x, y), second(x, y))
    raise TypeError(f"not an expression node: {node!r}")


def fold_constant(node):
    """
    Replace a node whose children are all literals by its value.
    Nodes that would raise or overflow are kept, so evaluation reports them.
    """
    children = ()
    if isinstance(node, Unary):
        children = (node.operand,)
    elif isinstance(node, Binary):
        children = (node.left, node.right)
    elif isinstance(node, Call):
        children = node.args
    if not children or not all(isinstance(c, Num) for c in children):
        return node
    try:
        value = float(compile_node(node)(None, None))
    except ExprDomainError:
        return node
    if not np.isfinite(value):
        return node
    return Num(value)
