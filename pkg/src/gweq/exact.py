"""Exact rational arithmetic, affine forms, and dense linear solving over Q.

Every number in this package is a ``fractions.Fraction``; evaluated ansatz
instances are affine forms in the unknown coefficient symbols a1..a105.
No floating point appears anywhere on the math path.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

Rational = Fraction


def rat(text: str | int) -> Fraction:
    """Parse 'p/q' or 'p' (sign on the numerator) into a Fraction."""
    return Fraction(text)


def fmt(x: Fraction) -> str:
    """Canonical rendering: 'p/q', with '/q' omitted when q == 1."""
    return str(x)


class AffineForm:
    """Immutable rational-linear combination of symbols plus a constant.

    Symbols are small positive integers.  Zero coefficients are never
    stored, so equality of the internal maps is semantic equality.
    """

    __slots__ = ("coeffs", "const")

    def __init__(
        self,
        coeffs: Mapping[int, Fraction] | None = None,
        const: Fraction | int = 0,
    ):
        clean = {}
        if coeffs:
            for sym, c in coeffs.items():
                c = Fraction(c)
                if c:
                    clean[sym] = c
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "const", Fraction(const))

    def __setattr__(self, name, value):  # pragma: no cover
        raise AttributeError("AffineForm is immutable")

    @classmethod
    def symbol(cls, sym: int) -> AffineForm:
        return cls({sym: Fraction(1)})

    @classmethod
    def constant(cls, value: Fraction | int) -> AffineForm:
        return cls({}, value)

    def __add__(self, other) -> AffineForm:
        if not isinstance(other, AffineForm):
            return AffineForm(self.coeffs, self.const + Fraction(other))
        merged = dict(self.coeffs)
        for sym, c in other.coeffs.items():
            merged[sym] = merged.get(sym, Fraction(0)) + c
        return AffineForm(merged, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> AffineForm:
        return AffineForm({s: -c for s, c in self.coeffs.items()}, -self.const)

    def __sub__(self, other) -> AffineForm:
        return self + (-other if isinstance(other, AffineForm) else -Fraction(other))

    def __rsub__(self, other) -> AffineForm:
        return -self + other

    def __mul__(self, scalar) -> AffineForm:
        s = Fraction(scalar)
        return AffineForm({k: c * s for k, c in self.coeffs.items()}, self.const * s)

    __rmul__ = __mul__

    def substitute(self, values: Mapping[int, "AffineForm | Fraction"]) -> AffineForm:
        """Replace symbols by affine forms (or rationals); others survive."""
        out = AffineForm({}, self.const)
        for sym, c in self.coeffs.items():
            if sym in values:
                v = values[sym]
                if not isinstance(v, AffineForm):
                    v = AffineForm.constant(v)
                out = out + v * c
            else:
                out = out + AffineForm({sym: c})
        return out

    def coefficient(self, sym: int) -> Fraction:
        return self.coeffs.get(sym, Fraction(0))

    def is_zero(self) -> bool:
        return not self.coeffs and self.const == 0

    def is_constant(self) -> bool:
        return not self.coeffs

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.const == other
        if not isinstance(other, AffineForm):
            return NotImplemented
        return self.coeffs == other.coeffs and self.const == other.const

    def __hash__(self):
        return hash((tuple(sorted(self.coeffs.items())), self.const))

    def __str__(self) -> str:
        parts = []
        for sym in sorted(self.coeffs):
            c = self.coeffs[sym]
            mag = "a%d" % sym if abs(c) == 1 else "%s*a%d" % (fmt(abs(c)), sym)
            if not parts:
                parts.append(mag if c > 0 else "-" + mag)
            else:
                parts.append(("+ " if c > 0 else "- ") + mag)
        if self.const or not parts:
            c = self.const
            if not parts:
                parts.append(fmt(c))
            else:
                parts.append(("+ " if c > 0 else "- ") + fmt(abs(c)))
        return " ".join(parts)

    def __repr__(self) -> str:
        return "AffineForm(%s)" % self


class InconsistentSystem(Exception):
    """The relations admit no solution."""


class FreeSymbolPivoted(Exception):
    """The requested free symbol is actually determined by the system."""


class SolveResult:
    """Parametric solution: solved symbols plus the surviving free ones."""

    def __init__(self, solution: dict[int, AffineForm], free: list[int]):
        self.solution = solution
        self.free = free


class LinearSystem:
    """An ordered list of affine forms, each read as '= 0'."""

    def __init__(self, relations: Iterable[AffineForm] = ()):
        self.relations = list(relations)

    def add(self, form: AffineForm) -> None:
        self.relations.append(form)

    def symbols(self) -> list[int]:
        seen = set()
        for r in self.relations:
            seen.update(r.coeffs)
        return sorted(seen)

    def rank(self) -> int:
        """Q-rank of the homogeneous coefficient matrix (constants excluded)."""
        syms = self.symbols()
        rows = [[r.coefficient(s) for s in syms] for r in self.relations]
        return _row_reduce(rows)

    def solve_parametric(self, free: int) -> SolveResult:
        """Gaussian elimination treating ``free`` as a parameter.

        Returns every other symbol as an affine form over {free}; symbols
        that remain undetermined are reported in ``result.free`` (this is
        not an error).  Raises InconsistentSystem for 0 = nonzero, and
        FreeSymbolPivoted when the system forces a value for ``free``.
        """
        syms = [s for s in self.symbols() if s != free]
        col_of = {s: i for i, s in enumerate(syms)}
        n = len(syms)
        # Row = coefficients over syms, then RHS as AffineForm over {free}:
        #   sum c_i x_i = -const - c_free * free
        rows = []
        for r in self.relations:
            lhs = [r.coefficient(s) for s in syms]
            rhs = AffineForm({free: -r.coefficient(free)}, -r.const)
            rows.append((lhs, rhs))

        pivots: list[tuple[int, int]] = []  # (row, col)
        rank = 0
        for col in range(n):
            piv = next(
                (i for i in range(rank, len(rows)) if rows[i][0][col] != 0), None
            )
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            lhs, rhs = rows[rank]
            inv = 1 / lhs[col]
            lhs = [c * inv for c in lhs]
            rhs = rhs * inv
            rows[rank] = (lhs, rhs)
            for i in range(len(rows)):
                if i == rank:
                    continue
                f = rows[i][0][col]
                if f:
                    ilhs = [a - f * b for a, b in zip(rows[i][0], lhs)]
                    rows[i] = (ilhs, rows[i][1] - rhs * f)
            pivots.append((rank, col))
            rank += 1
        for i in range(rank, len(rows)):
            rhs = rows[i][1]
            if rhs.coefficient(free):
                raise FreeSymbolPivoted(
                    "free symbol a%d is determined by the system" % free
                )
            if rhs.const:
                raise InconsistentSystem("0 = %s" % rhs.const)

        solution: dict[int, AffineForm] = {}
        pivot_cols = {c for _, c in pivots}
        undetermined = [syms[c] for c in range(n) if c not in pivot_cols]
        for row, col in pivots:
            lhs, rhs = rows[row]
            form = rhs
            for c in range(n):
                if c != col and lhs[c]:
                    # pivot variable depends on a non-pivot (undetermined) one
                    form = form - AffineForm({syms[c]: lhs[c]})
            solution[syms[col]] = form
        return SolveResult(solution, [free] + undetermined)


def _row_reduce(rows: list[list[Fraction]]) -> int:
    if not rows:
        return 0
    n = len(rows[0])
    rank = 0
    for col in range(n):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [c * inv for c in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col]:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank
