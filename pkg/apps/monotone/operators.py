"""
Maximal monotone operators
1. Zero // A = {0}, D(A) = R^n
2. NormalConeBox // normal cone of [lower, upper]
3. NormalConeBall // normal cone of a closed ball
4. SubdiffAbs // subdifferential of w*|x|, componentwise
5. SubdiffQuadratic // {Qx}, Q symmetric positive semidefinite

States are arrays of shape (n,) or (n, *batch); the leading axis is the
coordinate axis, matching apps.expr.
"""
import logging
from functools import lru_cache

import numpy as np
from django.conf import settings
from django.db import models

from .exceptions import InteriorOriginError, OutsideDomainError, UnsupportedOperatorError
from .extended import NEG_INF, POS_INF, ZERO, ExtendedReal

logger = logging.getLogger(__name__)


def domain_tol():
    return settings.MVLDP['DOMAIN_TOL']


class OperatorKind(models.TextChoices):
    ZERO = 'zero', 'Zero'
    BOX = 'box', 'Normal cone of a box'
    BALL = 'ball', 'Normal cone of a ball'
    ABS = 'abs', 'Subdifferential of w|x|'
    QUADRATIC = 'quadratic', 'Subdifferential of x^T Q x / 2'


def _column(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[:1] != (n,):
        raise ValueError(f"expected leading dimension {n}, got shape {x.shape}")
    return x


def _bcast(vec, like):
    """Broadcast a length-n vector against an (n, *batch) array."""
    return np.asarray(vec, dtype=float).reshape((-1,) + (1,) * (like.ndim - 1))


class MonotoneOp:
    kind = None

    def __init__(self, n):
        self.n = int(n)

    # -- domain ---------------------------------------------------------
    def project(self, z):
        """Euclidean projection onto the closure of D(A)."""
        return _column(z, self.n).copy()

    def distance(self, x):
        x = _column(x, self.n)
        return np.linalg.norm(x - self.project(x), axis=0)

    def contains(self, x, tol=None):
        tol = domain_tol() if tol is None else tol
        return bool(np.all(self.distance(x) <= tol))

    def check_domain(self, x, tol=None):
        tol = domain_tol() if tol is None else tol
        dist = float(np.max(self.distance(x)))
        if dist > tol:
            raise OutsideDomainError(np.asarray(x).tolist(), dist, tol)

    def interior_margin(self, a):
        """Distance from `a` to the boundary of D(A); +inf for full domains."""
        return np.inf

    @property
    def full_domain(self):
        return True

    # -- dynamics -------------------------------------------------------
    def resolvent(self, lam, z):
        """J_lam(z) = (I + lam*A)^{-1} z."""
        if lam <= 0:
            raise ValueError("resolvent step must be positive")
        return _column(z, self.n).copy()

    def graph_sample(self, seed, count):
        raise NotImplementedError

    # -- viscosity boundary evaluations ---------------------------------
    def active_normals(self, x, tol=None):
        """Outward unit normals of the constraints active at a single point x."""
        return []

    def a_lower(self, x, v):
        """A_*(x, v): liminf of <zeta, w> over zeta in A(x'), (x', w) -> (x, v)."""
        x, v = self._point(x), self._point(v)
        self.check_domain(x)
        normals = self.active_normals(x)
        if any(float(nrm @ v) <= 0 for nrm in normals):
            return NEG_INF
        return ZERO

    def a_upper(self, x, v):
        """A^*(x, v): the limsup counterpart of a_lower."""
        x, v = self._point(x), self._point(v)
        self.check_domain(x)
        normals = self.active_normals(x)
        if any(float(nrm @ v) >= 0 for nrm in normals):
            return POS_INF
        return ZERO

    def _point(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.n,):
            raise ValueError(f"expected a point of dimension {self.n}, got shape {x.shape}")
        return x

    def _rng(self, seed):
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))

    def to_descriptor(self):
        return {'kind': self.kind.value}

    def __repr__(self):
        return f"<{type(self).__name__} {self.to_descriptor()}>"


class Zero(MonotoneOp):
    kind = OperatorKind.ZERO

    def graph_sample(self, seed, count):
        rng = self._rng(seed)
        return [(3.0 * rng.standard_normal(self.n), np.zeros(self.n)) for _ in range(count)]

    def a_lower(self, x, v):
        self._point(x)
        self._point(v)
        return ZERO

    a_upper = a_lower

    def to_descriptor(self):
        return {'kind': self.kind.value, 'n': self.n}


class NormalConeBox(MonotoneOp):
    kind = OperatorKind.BOX

    def __init__(self, lower, upper):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("box bounds must be vectors of equal length")
        if np.any(self.lower >= self.upper):
            raise UnsupportedOperatorError("box must have nonempty interior (lower < upper)")
        super().__init__(self.lower.size)

    @property
    def full_domain(self):
        return False

    def project(self, z):
        z = _column(z, self.n)
        return np.clip(z, _bcast(self.lower, z), _bcast(self.upper, z))

    def resolvent(self, lam, z):
        if lam <= 0:
            raise ValueError("resolvent step must be positive")
        return self.project(z)

    def interior_margin(self, a):
        a = self._point(a)
        return float(np.min(np.minimum(a - self.lower, self.upper - a)))

    def active_normals(self, x, tol=None):
        tol = domain_tol() if tol is None else tol
        normals = []
        for i in range(self.n):
            if x[i] >= self.upper[i] - tol:
                nrm = np.zeros(self.n)
                nrm[i] = 1.0
                normals.append(nrm)
            if x[i] <= self.lower[i] + tol:
                nrm = np.zeros(self.n)
                nrm[i] = -1.0
                normals.append(nrm)
        return normals

    def graph_sample(self, seed, count):
        rng = self._rng(seed)
        pairs = []
        for _ in range(count):
            x = rng.uniform(self.lower, self.upper)
            y = np.zeros(self.n)
            if rng.random() < 0.5:
                # pin a random nonempty set of coordinates to a face
                pinned = rng.random(self.n) < 0.5
                pinned[rng.integers(self.n)] = True
                for i in np.flatnonzero(pinned):
                    side = 1.0 if rng.random() < 0.5 else -1.0
                    x[i] = self.upper[i] if side > 0 else self.lower[i]
                    y[i] = side * rng.exponential()
            pairs.append((x, y))
        return pairs

    def to_descriptor(self):
        return {'kind': self.kind.value, 'lower': self.lower.tolist(), 'upper': self.upper.tolist()}


class NormalConeBall(MonotoneOp):
    kind = OperatorKind.BALL

    def __init__(self, center, radius):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)
        if self.center.ndim != 1:
            raise ValueError("ball center must be a vector")
        if not self.radius > 0:
            raise UnsupportedOperatorError("ball radius must be positive")
        super().__init__(self.center.size)

    @property
    def full_domain(self):
        return False

    def project(self, z):
        z = _column(z, self.n)
        offset = z - _bcast(self.center, z)
        norm = np.linalg.norm(offset, axis=0)
        scale = np.where(norm > self.radius, self.radius / np.maximum(norm, self.radius), 1.0)
        return _bcast(self.center, z) + offset * scale

    def resolvent(self, lam, z):
        if lam <= 0:
            raise ValueError("resolvent step must be positive")
        return self.project(z)

    def interior_margin(self, a):
        a = self._point(a)
        return float(self.radius - np.linalg.norm(a - self.center))

    def active_normals(self, x, tol=None):
        tol = domain_tol() if tol is None else tol
        offset = x - self.center
        norm = float(np.linalg.norm(offset))
        if norm >= self.radius - tol:
            return [offset / norm]
        return []

    def graph_sample(self, seed, count):
        rng = self._rng(seed)
        pairs = []
        for _ in range(count):
            direction = rng.standard_normal(self.n)
            direction /= np.linalg.norm(direction)
            if rng.random() < 0.5:
                x = self.center + self.radius * rng.random() ** (1.0 / self.n) * direction
                y = np.zeros(self.n)
            else:
                x = self.center + self.radius * direction
                y = rng.exponential() * direction
            pairs.append((x, y))
        return pairs

    def to_descriptor(self):
        return {'kind': self.kind.value, 'center': self.center.tolist(), 'radius': self.radius}


class SubdiffAbs(MonotoneOp):
    """A = d(w*|x|_1); single-valued away from the coordinate hyperplanes."""

    kind = OperatorKind.ABS

    def __init__(self, weight, n=1):
        self.weight = float(weight)
        if not self.weight > 0:
            raise UnsupportedOperatorError("abs weight must be positive")
        super().__init__(n)

    def resolvent(self, lam, z):
        if lam <= 0:
            raise ValueError("resolvent step must be positive")
        z = _column(z, self.n)
        shrink = lam * self.weight
        return np.sign(z) * np.maximum(np.abs(z) - shrink, 0.0)

    def _bounds(self, x, v):
        """Componentwise inf and sup of zeta_i * v_i over the subdifferential."""
        tol = domain_tol()
        at_kink = np.abs(x) <= tol
        smooth = self.weight * np.sign(x) * v
        low = np.where(at_kink, -self.weight * np.abs(v), smooth)
        high = np.where(at_kink, self.weight * np.abs(v), smooth)
        return float(low.sum()), float(high.sum())

    def a_lower(self, x, v):
        low, _ = self._bounds(self._point(x), self._point(v))
        return ExtendedReal(low)

    def a_upper(self, x, v):
        _, high = self._bounds(self._point(x), self._point(v))
        return ExtendedReal(high)

    def graph_sample(self, seed, count):
        rng = self._rng(seed)
        pairs = []
        for _ in range(count):
            x = 2.0 * rng.standard_normal(self.n)
            at_kink = rng.random(self.n) < 0.3
            x[at_kink] = 0.0
            y = self.weight * np.sign(x)
            y[at_kink] = rng.uniform(-self.weight, self.weight, size=int(at_kink.sum()))
            pairs.append((x, y))
        return pairs

    def to_descriptor(self):
        return {'kind': self.kind.value, 'weight': self.weight, 'n': self.n}


class SubdiffQuadratic(MonotoneOp):
    kind = OperatorKind.QUADRATIC

    def __init__(self, Q):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be a square matrix")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise UnsupportedOperatorError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-12:
            raise UnsupportedOperatorError("Q must be positive semidefinite")
        self.Q = Q
        super().__init__(Q.shape[0])
        self._inverse = lru_cache(maxsize=32)(self._invert)

    def resolvent(self, lam, z):
        if lam <= 0:
            raise ValueError("resolvent step must be positive")
        z = _column(z, self.n)
        return np.tensordot(self._inverse(float(lam)), z, axes=1)

    def _invert(self, lam):
        return np.linalg.inv(np.eye(self.n) + lam * self.Q)

    def a_lower(self, x, v):
        x, v = self._point(x), self._point(v)
        return ExtendedReal(float((self.Q @ x) @ v))

    a_upper = a_lower

    def graph_sample(self, seed, count):
        rng = self._rng(seed)
        pairs = []
        for _ in range(count):
            x = 2.0 * rng.standard_normal(self.n)
            pairs.append((x, self.Q @ x))
        return pairs

    def to_descriptor(self):
        return {'kind': self.kind.value, 'Q': self.Q.tolist()}


def check_operator_assumption(op: MonotoneOp):
    """0 must be an interior point of D(A)."""
    origin = np.zeros(op.n)
    margin = op.interior_margin(origin)
    report = {'interior_origin': bool(margin > 0), 'margin': float(margin)}
    if not report['interior_origin']:
        logger.warning("origin not interior op=%r margin=%s", op, margin)
    return report


def from_descriptor(descriptor: dict, n=None, simulation=False) -> MonotoneOp:
    """
    Build an operator from its config descriptor, e.g.
    {"kind": "box", "lower": [-1], "upper": [1]}.
    With simulation=True the origin must lie strictly inside D(A).
    """
    kind = descriptor.get('kind')
    if kind == OperatorKind.ZERO:
        if descriptor.get('n', n) is None:
            raise UnsupportedOperatorError("zero operator needs a dimension n")
        op = Zero(descriptor.get('n', n))
    elif kind == OperatorKind.BOX:
        op = NormalConeBox(descriptor['lower'], descriptor['upper'])
    elif kind == OperatorKind.BALL:
        op = NormalConeBall(descriptor['center'], descriptor['radius'])
    elif kind == OperatorKind.ABS:
        op = SubdiffAbs(descriptor['weight'], descriptor.get('n', n or 1))
    elif kind == OperatorKind.QUADRATIC:
        op = SubdiffQuadratic(descriptor['Q'])
    else:
        raise UnsupportedOperatorError(f"unknown operator kind {kind!r}")
    if n is not None and op.n != n:
        raise UnsupportedOperatorError(f"operator acts on dimension {op.n}, system has n={n}")
    if simulation and not check_operator_assumption(op)['interior_origin']:
        raise InteriorOriginError(f"0 is not an interior point of D(A) for {op!r}")
    return op


# module-level entry points mirroring the operator methods

def project(op, z):
    return op.project(z)


def resolvent(op, lam, z):
    return op.resolvent(lam, z)


def graph_sample(op, seed, count):
    if count < 1:
        raise ValueError("count must be at least 1")
    return op.graph_sample(seed, count)


def a_lower(op, x, v):
    return op.a_lower(x, v)


def a_upper(op, x, v):
    return op.a_upper(x, v)
