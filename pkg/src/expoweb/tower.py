"""Overflow-safe bookkeeping for iterated exponential magnitudes.

A TowerValue denotes exp^level(base): level 0 is an ordinary float, level
k >= 1 means the float ``base`` exponentiated k times.  The canonical form
keeps ``base`` in (ln CUTOFF, CUTOFF] for every level above zero, so the pair
(level, base) orders lexicographically exactly like the reals it denotes.

At level >= 1 the map t -> e^t - 1 is stored as a plain exponentiation: the
dropped "-1" moves the base by roughly exp(-1e300) relative, far below one ulp.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

CUTOFF = 1e300
LOG_CUTOFF = math.log(CUTOFF)
# largest argument with a finite float exponential
LOG_MAX = math.log(1.7976931348623157e308)


def _nudge(x: float, direction: int, ulps: int) -> float:
    target = math.inf if direction > 0 else -math.inf
    for _ in range(ulps):
        x = math.nextafter(x, target)
    return x


@functools.total_ordering
@dataclass(frozen=True)
class TowerValue:
    level: int
    base: float

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("tower level must be nonnegative")
        if math.isnan(self.base):
            raise ValueError("tower base is NaN")
        if self.level > 0 and self.base < 0:
            raise ValueError("tower base must be nonnegative above level 0")

    @staticmethod
    def make(level: int, base: float) -> "TowerValue":
        """Build and canonicalize (promote or demote levels as needed)."""
        level = int(level)
        base = float(base)
        while base > CUTOFF:
            base = math.log(base)
            level += 1
        while level > 0 and base <= LOG_CUTOFF:
            base = math.exp(base)
            level -= 1
        return TowerValue(level, base)

    @staticmethod
    def from_float(x: float) -> "TowerValue":
        if math.isinf(x) and x > 0:
            raise OverflowError("cannot represent +inf as a tower value")
        return TowerValue.make(0, x)

    def _key(self):
        return (self.level, self.base)

    def __lt__(self, other):
        other = as_tower(other)
        return self._key() < other._key()

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = as_tower(other)
        if not isinstance(other, TowerValue):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def is_float(self) -> bool:
        return self.level == 0

    def to_float(self) -> float:
        """The denoted value as a float (inf when above the float range)."""
        if self.level == 0:
            return self.base
        if self.level == 1 and self.base <= LOG_MAX:
            return math.exp(self.base)
        return math.inf

    def __float__(self):
        return self.to_float()

    def exp(self) -> "TowerValue":
        if self.level == 0:
            if self.base <= LOG_CUTOFF:
                return TowerValue.make(0, math.exp(self.base))
            return TowerValue.make(1, self.base)
        return TowerValue(self.level + 1, self.base)

    def log(self) -> "TowerValue":
        if self.level == 0:
            return TowerValue.make(0, math.log(self.base))
        if self.level == 1:
            return TowerValue(0, self.base)
        return TowerValue(self.level - 1, self.base)

    def nudged(self, direction: int, ulps: int = 4) -> "TowerValue":
        """Move the stored base a few ulps up (direction>0) or down."""
        return TowerValue.make(self.level, _nudge(self.base, direction, ulps))

    def log10_estimate(self) -> float:
        """log10 of the value, finite only up to level 2."""
        if self.level == 0:
            return math.log10(self.base) if self.base > 0 else -math.inf
        if self.level == 1:
            return self.base / math.log(10.0)
        return math.inf

    def __repr__(self):
        return f"TowerValue(level={self.level}, base={self.base!r})"


def as_tower(x) -> TowerValue:
    if isinstance(x, TowerValue):
        return x
    return TowerValue.from_float(float(x))


def eval_F(t) -> TowerValue:
    """F(t) = e^t - 1, promoted to a tower level once e^t leaves the float range."""
    t = as_tower(t)
    if t.level == 0:
        if t.base <= LOG_CUTOFF:
            return TowerValue.make(0, math.expm1(t.base))
        return TowerValue.make(1, t.base)
    return TowerValue(t.level + 1, t.base)


def iterate_F(t, n: int) -> TowerValue:
    if n < 0:
        raise ValueError("n must be nonnegative")
    v = as_tower(t)
    if v.level == 0 and v.base < 0:
        raise ValueError("F is iterated on nonnegative arguments only")
    for _ in range(n):
        v = eval_F(v)
    return v


def tower_add_small(v: TowerValue, k: float, direction: int) -> TowerValue:
    """v + k for a modest constant k.

    Above level 0 the shift is invisible in the base; the result is nudged in
    ``direction`` so that dropping it errs on the requested side.
    """
    if v.level == 0:
        return TowerValue.make(0, _nudge(v.base + k, direction, 2))
    if (k > 0 and direction < 0) or (k < 0 and direction > 0):
        # dropping k already errs on the requested side
        return v
    return v.nudged(direction, 2)
