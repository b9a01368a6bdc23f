from functools import total_ordering
import math


@total_ordering
class ExtendedReal:
    """
    A value in [-inf, +inf] that supports comparison only.
    Arithmetic is deliberately left undefined.
    """

    __slots__ = ('_value',)

    def __init__(self, value):
        value = float(value)
        if math.isnan(value):
            raise ValueError("ExtendedReal cannot be NaN")
        self._value = value

    @classmethod
    def finite(cls, value):
        if not math.isfinite(value):
            raise ValueError(f"{value} is not finite")
        return cls(value)

    @property
    def is_finite(self):
        return math.isfinite(self._value)

    @property
    def value(self):
        """The finite value; raises for the infinite sentinels."""
        if not self.is_finite:
            raise ValueError(f"{self} has no finite value")
        return self._value

    def __eq__(self, other):
        if isinstance(other, ExtendedReal):
            return self._value == other._value
        if isinstance(other, (int, float)):
            return self._value == other
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, ExtendedReal):
            return self._value < other._value
        if isinstance(other, (int, float)):
            return self._value < other
        return NotImplemented

    def __hash__(self):
        return hash(self._value)

    def __repr__(self):
        if self._value == math.inf:
            return 'ExtendedReal(+inf)'
        if self._value == -math.inf:
            return 'ExtendedReal(-inf)'
        return f'ExtendedReal({self._value!r})'

    def to_json(self):
        if self._value == math.inf:
            return '+inf'
        if self._value == -math.inf:
            return '-inf'
        return self._value


POS_INF = ExtendedReal(math.inf)
NEG_INF = ExtendedReal(-math.inf)
ZERO = ExtendedReal(0.0)
