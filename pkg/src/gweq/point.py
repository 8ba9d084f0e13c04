"""Descendant integrals on moduli of curves (target = point).

``intersection_number`` evaluates <tau_{n_1} ... tau_{n_k}>_g by the
Virasoro/KdV recursion in the normalized form

    N(g, D) = <prod tau_{d_i}>_g * prod (2 d_i + 1)!!

which removes all denominators from the recursion step.  Recursing on an
insertion of level k+1 (we always pick the largest):

    N(g, {k+1} u D) = sum_j (2 d_j + 1) N(g, {k + d_j} u D \\ {d_j})
        + 1/2 sum_{a+b=k-1} [ N(g-1, {a,b} u D)
              + sum_{g1+g2=g, I u J = D} N(g1, {a} u I) N(g2, {b} u J) ]

with base cases N(0, {0,0,0}) = 1 and N(1, {1}) = 3 * (1/24); the genus-1
seed carries the central term of the lowest Virasoro constraint, which the
homogeneous recursion cannot see.

``genus0_closed_form`` is an independent formula used for cross-checking;
the recursion never calls it.
"""
from __future__ import annotations

import sys
from fractions import Fraction
from itertools import combinations

from .cache import MemoCache

__all__ = [
    "PointKey",
    "DimensionMismatch",
    "TooFewInsertions",
    "GenusCapExceeded",
    "point_key",
    "key_string",
    "intersection_number",
    "genus0_closed_form",
    "PointOracle",
]

PointKey = tuple[int, tuple[int, ...]]

DEFAULT_MAX_GENUS = 5


class DimensionMismatch(ValueError):
    """Insertion levels incompatible with the moduli dimension."""


class TooFewInsertions(ValueError):
    """Genus-0 closed form needs at least three insertions."""


class GenusCapExceeded(ValueError):
    """Requested genus above the configured safety cap."""


def point_key(g: int, levels) -> PointKey:
    return (g, tuple(sorted(levels)))


def key_string(key: PointKey) -> str:
    g, levels = key
    return "%d;%s" % (g, ",".join(str(n) for n in levels))


def _double_fact(n: int) -> int:
    # (2n+1)!! = 1*3*...*(2n+1)
    out = 1
    for i in range(3, 2 * n + 2, 2):
        out *= i
    return out


def genus0_closed_form(levels) -> Fraction:
    """<tau_{n_1} ... tau_{n_k}>_0 = (k-3)! / prod n_i! for sum n_i = k-3."""
    levels = tuple(levels)
    k = len(levels)
    if k < 3:
        raise TooFewInsertions("need at least 3 insertions, got %d" % k)
    if sum(levels) != k - 3:
        raise DimensionMismatch(
            "sum of levels %d != k-3 = %d" % (sum(levels), k - 3)
        )
    num = 1
    for i in range(1, k - 2):
        num *= i
    den = 1
    for n in levels:
        for i in range(2, n + 1):
            den *= i
    return Fraction(num, den)


class PointOracle:
    """Memoized evaluator; optionally backed by a shared disk cache."""

    def __init__(self, cache: MemoCache | None = None,
                 max_genus: int = DEFAULT_MAX_GENUS):
        self.cache = cache
        self.max_genus = max_genus
        self._norm: dict[PointKey, Fraction] = {}

    def intersection_number(self, g: int, levels) -> Fraction:
        key = point_key(g, levels)
        g, lv = key
        if any(n < 0 for n in lv):
            return Fraction(0)
        if g < 0 or sum(lv) != 3 * g - 3 + len(lv):
            return Fraction(0)
        if (g == 0 and len(lv) < 3) or (g == 1 and not lv):
            return Fraction(0)
        if g > self.max_genus:
            raise GenusCapExceeded("genus %d > cap %d" % (g, self.max_genus))
        if self.cache is not None:
            hit = self.cache.get(key_string(key))
            if hit is not None:
                return hit
        norm = 1
        for n in lv:
            norm *= _double_fact(n)
        val = self._n(key) / norm
        if self.cache is not None:
            self.cache.put(key_string(key), val)
        return val

    __call__ = intersection_number

    def _n(self, key: PointKey) -> Fraction:
        """Normalized value N(g, levels); key is sorted and dimension-valid."""
        hit = self._norm.get(key)
        if hit is not None:
            return hit
        g, lv = key
        if key == (0, (0, 0, 0)):
            return Fraction(1)
        if key == (1, (1,)):
            return Fraction(1, 8)
        # recurse on the largest level, lv[-1] = k+1 >= 1
        k = lv[-1] - 1
        rest = lv[:-1]
        total = Fraction(0)
        for j in range(len(rest)):
            if j > 0 and rest[j] == rest[j - 1]:
                continue
            mult = rest.count(rest[j])
            sub = rest[:j] + rest[j + 1:]
            total += mult * (2 * rest[j] + 1) * self._sub(g, sub + (k + rest[j],))
        half = Fraction(0)
        for a in range(k):
            b = k - 1 - a
            half += self._sub(g - 1, rest + (a, b))
            for g1 in range(g + 1):
                g2 = g - g1
                for r in range(len(rest) + 1):
                    for idx in combinations(range(len(rest)), r):
                        pick = set(idx)
                        left = tuple(rest[i] for i in range(len(rest)) if i in pick)
                        right = tuple(rest[i] for i in range(len(rest)) if i not in pick)
                        half += self._sub(g1, left + (a,)) * self._sub(g2, right + (b,))
        total += half / 2
        self._norm[key] = total
        return total

    def _sub(self, g: int, levels) -> Fraction:
        """N for a subterm: re-checks stability/dimension, returns 0 if invalid."""
        if g < 0:
            return Fraction(0)
        lv = tuple(sorted(levels))
        if sum(lv) != 3 * g - 3 + len(lv):
            return Fraction(0)
        if (g == 0 and len(lv) < 3) or (g == 1 and not lv):
            return Fraction(0)
        return self._n((g, lv))


_default = PointOracle()


def intersection_number(g: int, levels) -> Fraction:
    """Module-level convenience using a process-wide in-memory oracle."""
    return _default.intersection_number(g, levels)


if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)
