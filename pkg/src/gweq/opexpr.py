"""Operator-level covariant differentiation of the manifest expressions.

The expansion engine (bigphase) macro-expands T and the quantum product
into correlator factors *first* and then differentiates with a plain
Leibniz rule.  This module is the independent second route: it keeps the
operators unexpanded, applies the connection rules

    nabla_D <<X1 ... Xk>>_g = <<D X1 ... Xk>>_g + sum_i <<... nabla_D Xi ...>>_g
    nabla_D T(V)            = T(nabla_D V) - D o V
    nabla_D (V o W)         = (nabla_D V) o W + V o (nabla_D W)
                              + <<V W D gamma^mu>>_0 gamma_mu

to the unexpanded terms, and only then expands and evaluates.  Both routes
must agree numerically on every instance; that comparison is the strongest
self-check the engine has, because the two differentiation orders exercise
completely different code paths.

Internally a term argument is a tree over the closed vocabulary

    ('ext', i)          external slot, constant field
    ('dummy', L, sign)  one leg of the contracted pair named L
    ('dir', (n, c))     a derivative direction, constant field
    ('T', x)            unary; repeated application is nested
    ('vprod', (x, ...)) <<x1 ... xk gamma^mu>>_0 gamma_mu

where ('vprod', (x, y)) is the quantum product x o y and longer tuples
arise from its derivative rule (each derivative appends one insertion).
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product

from . import equations as eq
from .bigphase import (
    ScalarExpr,
    VFieldExpr,
    apply_T,
    basis_field,
    correlator,
    dummy_pair,
    _new_pair,
)

__all__ = ["build_nabla"]


def _normalize(node):
    """Parser tree -> the nabla vocabulary above."""
    kind = node[0]
    if kind in ("ext", "dummy"):
        return node
    if kind == "T":
        out = _normalize(node[2])
        for _ in range(node[1]):
            out = ("T", out)
        return out
    if kind == "prod":  # left-nested, matching the expansion route
        cur = _normalize(node[1][0])
        for nxt in node[1][1:]:
            cur = ("vprod", (cur, _normalize(nxt)))
        return cur
    raise ValueError("unknown parse node %r" % (node,))


def _nabla_tree(node, dirleaf):
    """Covariant derivative of one argument: list of (sign, tree)."""
    kind = node[0]
    if kind in ("ext", "dummy", "dir"):
        return []
    if kind == "T":
        out = [(s, ("T", t)) for s, t in _nabla_tree(node[1], dirleaf)]
        out.append((-1, ("vprod", (dirleaf, node[1]))))
        return out
    if kind == "vprod":
        ch = node[1]
        out = [(1, ("vprod", ch + (dirleaf,)))]
        for i, c in enumerate(ch):
            for s, t in _nabla_tree(c, dirleaf):
                out.append((s, ("vprod", ch[:i] + (t,) + ch[i + 1:])))
        return out
    raise ValueError("unknown tree node %r" % (node,))


def _nabla_groups(groups, dirleaf):
    """Leibniz across a product of correlator groups."""
    out = []
    for i, (g, args) in enumerate(groups):
        pre, post = groups[:i], groups[i + 1:]
        out.append((1, pre + ((g, args + (dirleaf,)),) + post))
        for j, a in enumerate(args):
            for s, t in _nabla_tree(a, dirleaf):
                out.append((s, pre + ((g, args[:j] + (t,) + args[j + 1:]),) + post))
    return out


def _vprod(fields):
    """<<f1 ... fk gamma^mu>>_0 gamma_mu for expanded fields."""
    out = []
    for combo in product(*(f.monomials for f in fields)):
        pid = _new_pair()
        c = Fraction(1)
        fx: tuple = ()
        legs = []
        for w, fac, leg in combo:
            c *= w
            fx += fac
            legs.append(leg)
        main = (0, tuple(legs) + (("d", pid, 1, 0),))
        out.append((c, fx + (main,), ("d", pid, -1, 0)))
    return VFieldExpr(out)


def _realize(node, slots, dummies) -> VFieldExpr:
    kind = node[0]
    if kind == "ext":
        return slots[node[1]]
    if kind == "dummy":
        if node[1] not in dummies:
            dummies[node[1]] = dummy_pair()
        up, dn = dummies[node[1]]
        return up if node[2] > 0 else dn
    if kind == "dir":
        return basis_field(*node[1])
    if kind == "T":
        return apply_T(_realize(node[1], slots, dummies))
    if kind == "vprod":
        return _vprod([_realize(c, slots, dummies) for c in node[1]])
    raise ValueError("unknown tree node %r" % (node,))


def build_nabla(name: str, w1: VFieldExpr, w2: VFieldExpr,
                derivs=()) -> ScalarExpr:
    """Expand manifest ``name`` at (w1, w2), applying the derivative
    directions with the connection rules *before* expansion.

    Equivalent after evaluation to building with the expansion route and
    differentiating the expanded form; ``derivs`` is an ordered sequence
    of (level, class) directions.
    """
    slots = {0: w1, 1: w2}
    out = ScalarExpr.zero()
    for coeff, groups in eq.load_manifest(name):
        if groups == eq.OMEGA_SYM:
            raise ValueError("symmetrized tail line has no operator form")
        norm = tuple((g, tuple(_normalize(a) for a in args))
                     for g, args in groups)
        pieces = [(1, norm)]
        for dv in derivs:
            dirleaf = ("dir", (dv[0], dv[1]))
            pieces = [(s * s2, g2)
                      for s, grs in pieces
                      for s2, g2 in _nabla_groups(grs, dirleaf)]
        for s, grs in pieces:
            dummies: dict = {}
            term = None
            for g, args in grs:
                fac = correlator(g, [_realize(a, slots, dummies) for a in args])
                term = fac if term is None else term * fac
            out = out + term * (coeff * s)
    return out
