"""Correlator calculus on the big phase space.

Scalar expressions are kept in a fully expanded normal form: a sum of
monomials, each a rational (or symbol-affine) coefficient times a product
of correlator factors.  A factor is ``(genus, args)`` and an argument is
either a basis field ``('b', level, cls)`` or one leg of a contracted
index pair ``('d', pair_id, sign, level)`` (sign +1 for the raised leg);
both legs of a pair always live inside the same monomial, possibly in
different factors.

The composite field operations expand immediately:

* ``quantum_product(v, w)``: v o w = <<v w g^mu>>_0 g_mu,
* ``apply_T(v)``: T(v) = tau_+(v) - <<v g^mu>>_0 g_mu,

so differentiation is plain Leibniz (append the direction to one factor
at a time) and ``evaluate_at_origin`` only ever sees primitive factors.
At the origin every factor's degree is forced by the dimension constraint
of the target, which collapses the degree-splitting sum to one term per
index-pair assignment.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable

from .exact import AffineForm

__all__ = [
    "TargetModel",
    "POINT",
    "P1",
    "NotExpanded",
    "GenusOverflow",
    "DegreeOverflow",
    "VFieldExpr",
    "ScalarExpr",
    "basis_field",
    "tau_shift",
    "quantum_product",
    "apply_T",
    "correlator",
    "differentiate",
    "evaluate_at_origin",
    "pretty",
]


class NotExpanded(TypeError):
    """Operation received an unexpanded operator tree."""


class GenusOverflow(ValueError):
    """A correlator factor exceeds the target's genus cap."""


class DegreeOverflow(ValueError):
    """A forced degree exceeds the target's degree cap."""


@dataclass(frozen=True)
class TargetModel:
    """Evaluation target: class data plus an exact invariant oracle.

    ``eta_raise[c]`` is the class paired with c by the intersection form;
    ``oracle(g, d, ins)`` returns the connected invariant for insertions
    ``((level, cls), ...)``.
    """
    name: str
    class_degrees: tuple[int, ...]
    eta_raise: tuple[int, ...]
    dim: int
    oracle: Callable[[int, int, tuple], Fraction]
    max_genus: int = 3
    max_degree: int = 2

    @property
    def nclasses(self) -> int:
        return len(self.class_degrees)


def _point_oracle(g, d, ins):
    from . import point
    if d != 0:
        return Fraction(0)
    return point.intersection_number(g, tuple(n for n, _ in ins))


def _p1_oracle(g, d, ins):
    from . import p1
    return p1.gw_invariant_p1(g, d, ins)


POINT = TargetModel("point", (0,), (0,), 0, _point_oracle)
P1 = TargetModel("p1", (0, 1), (1, 0), 1, _p1_oracle)


# --- expressions -----------------------------------------------------------

Arg = tuple
Factor = tuple  # (genus, tuple[Arg, ...])


def _coeff(x) -> AffineForm:
    if isinstance(x, AffineForm):
        return x
    return AffineForm.constant(x)


def _canonical(factors: tuple[Factor, ...]) -> tuple[Factor, ...]:
    """Sort factors and their arguments into a deterministic order.

    Index-pair ids are kept verbatim: they are globally unique and a pair's
    two legs may live in different factors, so renumbering them per-key
    would corrupt contractions when keys are later concatenated.  Like
    terms therefore merge only when they share the same pair ids, which is
    exactly the case for branches of one expansion.
    """
    return tuple(sorted((g, tuple(sorted(args))) for g, args in factors))


class ScalarExpr:
    """Sum of coefficient * product-of-correlator-factors monomials."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[tuple[Factor, ...], AffineForm] | None = None):
        self.terms = terms or {}

    @classmethod
    def zero(cls) -> "ScalarExpr":
        return cls({})

    def _add_term(self, factors, coeff) -> None:
        key = _canonical(tuple(factors))
        cur = self.terms.get(key)
        new = coeff if cur is None else cur + coeff
        if new.is_zero():
            self.terms.pop(key, None)
        else:
            self.terms[key] = new

    def __add__(self, other: "ScalarExpr") -> "ScalarExpr":
        out = ScalarExpr(dict(self.terms))
        for k, c in other.terms.items():
            out._add_term(k, c)
        return out

    def __sub__(self, other: "ScalarExpr") -> "ScalarExpr":
        return self + (-1) * other

    def __mul__(self, other) -> "ScalarExpr":
        if isinstance(other, ScalarExpr):
            # Pair ids survive in stored keys, so concatenation keeps
            # contractions that span both operands (the operands must not
            # both contain legs of a pair more than once, which holds for
            # correlator factors built from distinct dummy pairs).
            out = ScalarExpr()
            for f1, c1 in self.terms.items():
                for f2, c2 in other.terms.items():
                    out._add_term(f1 + f2, _affmul(c1, c2))
            return out
        c = _coeff(other)
        if c.is_zero():
            return ScalarExpr.zero()
        return ScalarExpr({k: _affmul(v, c) for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, ScalarExpr) and self.terms == other.terms

    def substitute(self, values) -> "ScalarExpr":
        out = ScalarExpr()
        for k, c in self.terms.items():
            out._add_term(k, c.substitute(values))
        return out


def _affmul(a: AffineForm, b: AffineForm) -> AffineForm:
    if a.is_constant():
        return b * a.const
    if b.is_constant():
        return a * b.const
    raise ValueError("product of two non-constant affine forms")


class VFieldExpr:
    """Vector-field-valued expression: monomials (coeff, factors, leg)."""

    __slots__ = ("monomials",)

    def __init__(self, monomials=None):
        self.monomials = list(monomials or [])

    def __add__(self, other):
        return VFieldExpr(self.monomials + other.monomials)

    def __mul__(self, scalar):
        c = Fraction(scalar)
        return VFieldExpr([(c * w, f, leg) for w, f, leg in self.monomials])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1


_fresh = [0]


def _new_pair() -> int:
    _fresh[0] += 1
    return _fresh[0]


def basis_field(level: int, cls: int = 0) -> VFieldExpr:
    return VFieldExpr([(Fraction(1), (), ("b", level, cls))])


def dummy_pair() -> tuple[VFieldExpr, VFieldExpr]:
    """Fresh contracted pair (raised leg, lowered leg)."""
    pid = _new_pair()
    up = VFieldExpr([(Fraction(1), (), ("d", pid, 1, 0))])
    dn = VFieldExpr([(Fraction(1), (), ("d", pid, -1, 0))])
    return up, dn


def _shift_leg(leg: Arg, steps: int) -> Arg:
    if leg[0] == "b":
        return ("b", leg[1] + steps, leg[2])
    return ("d", leg[1], leg[2], leg[3] + steps)


def tau_shift(v: VFieldExpr, steps: int = 1) -> VFieldExpr:
    return VFieldExpr([(w, f, _shift_leg(leg, steps)) for w, f, leg in v.monomials])


def quantum_product(v: VFieldExpr, w: VFieldExpr) -> VFieldExpr:
    out = []
    for cv, fv, lv in v.monomials:
        for cw, fw, lw in w.monomials:
            pid = _new_pair()
            fac = (0, (lv, lw, ("d", pid, 1, 0)))
            out.append((cv * cw, fv + fw + (fac,), ("d", pid, -1, 0)))
    return VFieldExpr(out)


def apply_T(v: VFieldExpr) -> VFieldExpr:
    out = []
    for c, f, leg in v.monomials:
        out.append((c, f, _shift_leg(leg, 1)))
        pid = _new_pair()
        fac = (0, (leg, ("d", pid, 1, 0)))
        out.append((-c, f + (fac,), ("d", pid, -1, 0)))
    return VFieldExpr(out)


def correlator(genus: int, fields: list[VFieldExpr],
               coeff=Fraction(1)) -> ScalarExpr:
    """<<f1 ... fk>>_genus, distributed into normal form."""
    for f in fields:
        if not isinstance(f, VFieldExpr):
            raise NotExpanded("correlator argument %r is not expanded" % (f,))
    out = ScalarExpr()
    for combo in product(*(f.monomials for f in fields)):
        c = _coeff(coeff)
        extra: tuple = ()
        legs = []
        for w, fac, leg in combo:
            c = c * w
            extra = extra + fac
            legs.append(leg)
        main = (genus, tuple(legs))
        out._add_term(extra + (main,), c)
    return out


def differentiate(expr: ScalarExpr, direction: tuple[int, int]) -> ScalarExpr:
    """d/dt along the coordinate field tau_level(class)."""
    if not isinstance(expr, ScalarExpr):
        raise NotExpanded("differentiate needs an expanded scalar expression")
    ins = ("b", direction[0], direction[1])
    out = ScalarExpr()
    for factors, coeff in expr.terms.items():
        for i, (g, args) in enumerate(factors):
            new = factors[:i] + ((g, args + (ins,)),) + factors[i + 1:]
            out._add_term(new, coeff)
    return out


def _eval_monomial(factors, model: TargetModel):
    """Yield (total_degree, Fraction) for each index-pair assignment,
    or nothing when every assignment dies on a dimension check."""
    pairs = sorted({a[1] for _, args in factors for a in args if a[0] == "d"})
    for assign in product(range(model.nclasses), repeat=len(pairs)):
        cls_of = dict(zip(pairs, assign))
        total_d = 0
        value = Fraction(1)
        for g, args in factors:
            if g > model.max_genus:
                raise GenusOverflow("genus %d factor exceeds cap %d"
                                    % (g, model.max_genus))
            ins = []
            for a in args:
                if a[0] == "b":
                    ins.append((a[1], a[2]))
                else:
                    c = cls_of[a[1]]
                    ins.append((a[3], c if a[2] > 0 else model.eta_raise[c]))
            # forced degree: sum(n + q) = (dim-3)(1-g) + k + (dim+1) d
            lhs = sum(n + model.class_degrees[c] for n, c in ins)
            rhs0 = (model.dim - 3) * (1 - g) + len(ins)
            if model.dim == 0:
                if lhs != rhs0:
                    value = Fraction(0)
                    break
                d = 0
            else:
                num = lhs - rhs0
                if num < 0 or num % (model.dim + 1):
                    value = Fraction(0)
                    break
                d = num // (model.dim + 1)
            total_d += d
            v = model.oracle(g, d, tuple(sorted(ins)))
            if not v:
                value = Fraction(0)
                break
            value *= v
        if value:
            yield total_d, value


def evaluate_at_origin(expr: ScalarExpr, model: TargetModel,
                       degree: int | None = None):
    """Evaluate at t = 0.  Returns an AffineForm for a fixed degree (the
    only sensible call for a point target is degree 0), or a dict mapping
    total degree to AffineForm when ``degree`` is None."""
    if not isinstance(expr, ScalarExpr):
        raise NotExpanded("evaluate_at_origin needs an expanded expression")
    if degree is not None and degree > model.max_degree:
        raise DegreeOverflow("degree %d exceeds cap %d"
                             % (degree, model.max_degree))
    buckets: dict[int, AffineForm] = {}
    for factors, coeff in expr.terms.items():
        for d, val in _eval_monomial(factors, model):
            if degree is None and d > model.max_degree:
                raise DegreeOverflow("forced degree %d exceeds cap %d"
                                     % (d, model.max_degree))
            if degree is not None and d != degree:
                continue
            cur = buckets.get(d)
            add = coeff * val
            buckets[d] = add if cur is None else cur + add
    if degree is not None:
        return buckets.get(degree, AffineForm.constant(0))
    return {d: v for d, v in buckets.items() if not v.is_zero()}


def _arg_sig(a: Arg) -> tuple:
    """Pair-id-blind sort signature for one argument."""
    if a[0] == "b":
        return (0, a[1], a[2], 0)
    return (1, a[3], 0, a[2])


def pretty(expr: ScalarExpr) -> str:
    """Canonical text rendering, one monomial per line.

    Pair ids are renumbered per term in order of first appearance under a
    pair-id-blind factor ordering, so two equal expressions built from
    different fresh dummies print identically; intended for golden tests
    and debugging, never fed back into the algebra.
    """
    if not isinstance(expr, ScalarExpr):
        raise NotExpanded("pretty needs an expanded scalar expression")
    lines = []
    for factors, coeff in expr.terms.items():
        fs = sorted(factors,
                    key=lambda f: (f[0], tuple(sorted(map(_arg_sig, f[1]))), f[1]))
        ids: dict[int, int] = {}
        for _, args in fs:
            for a in sorted(args, key=lambda a: (_arg_sig(a), a)):
                if a[0] == "d" and a[1] not in ids:
                    ids[a[1]] = len(ids) + 1
        parts = []
        for g, args in fs:
            rend = sorted(
                ("t%d.%d" % (a[1], a[2]) if a[0] == "b"
                 else "p%d%s%d" % (ids[a[1]], "^" if a[2] > 0 else "_", a[3]))
                for a in sorted(args, key=lambda a: (_arg_sig(a), a)))
            parts.append("g%d[%s]" % (g, ", ".join(rend)))
        c = str(coeff)
        if " " in c:
            c = "(%s)" % c
        lines.append("%s * %s" % (c, " ".join(parts)))
    return "\n".join(sorted(lines)) if lines else "0"
