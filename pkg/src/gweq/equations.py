"""Builders for the packaged genus-2 and genus-3 correlator expressions.

The expressions are shipped as text manifests under ``data/``, one term per
line::

    <coeff> ; g<G>[<arg>, <arg>, ...] g<G>[...] ...

``<coeff>`` is a rational number or a symbol ``aN`` (N in 1..105); each
``gG[...]`` group is one genus-G correlator factor.  Arguments:

    W1, W2          the two external vector-field slots
    A^ / A_         eta-contracted index pair, raised / lowered (letters A, B, M)
    T(x), T2(x)     one or two applications of the descendant-shift operator
    o(x, y, ...)    quantum product, left-nested (the product is associative,
                    so the nesting does not affect evaluated values)

Index pairs are contracted across all factor groups of a term.  The special
tail line ``a2 ; OMEGA_SYM`` in the identity manifest stands for the
symmetrized correction form and is expanded by :func:`build_thm_rhs`.

Every manifest ships with an independently transcribed ``.check`` twin; a
test asserts byte equality of each pair.
"""
from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from .bigphase import (
    ScalarExpr,
    VFieldExpr,
    apply_T,
    correlator,
    dummy_pair,
    quantum_product,
)
from .exact import AffineForm, rat

__all__ = [
    "COEFF_SYMBOLS",
    "FREE_SYMBOL",
    "ManifestError",
    "build_Omega",
    "build_Phi",
    "build_Q",
    "build_skew",
    "build_thm_rhs",
    "lemma_coeff_table",
    "load_manifest",
    "manifest_text",
]

#: The ansatz coefficient symbols, as integer ids (aN <-> N).
COEFF_SYMBOLS = tuple(range(1, 106))

#: The designated free symbol (a2).
FREE_SYMBOL = 2

_DUMMY_LETTERS = "ABM"
_RATIONAL = re.compile(r"-?\d+(?:/\d+)?$")
_SYMBOL = re.compile(r"a(\d+)$")
_GROUP = re.compile(r"g(\d+)\[([^\[\]]*)\]")
_AFFINE_TOKEN = re.compile(r"[+-]|(?:\d+(?:/\d+)?\*)?a\d+|\d+(?:/\d+)?")

OMEGA_SYM = "OMEGA_SYM"


class ManifestError(ValueError):
    """A packaged expression manifest failed to parse or validate."""


def manifest_text(name: str) -> str:
    """Raw text of a packaged data file (also used by the two-pass test)."""
    return (resources.files(__package__) / "data" / name).read_text("utf-8")


def _fail(name: str, line_no: int, msg: str):
    raise ManifestError("%s:%d: %s" % (name, line_no, msg))


def _parse_arg(src: str, i: int, name: str, line_no: int):
    n = len(src)
    while i < n and src[i] == " ":
        i += 1
    if src.startswith("W1", i):
        return ("ext", 0), i + 2
    if src.startswith("W2", i):
        return ("ext", 1), i + 2
    if src.startswith("T2(", i):
        inner, i = _parse_arg(src, i + 3, name, line_no)
        return ("T", 2, inner), _expect(src, i, ")", name, line_no)
    if src.startswith("T(", i):
        inner, i = _parse_arg(src, i + 2, name, line_no)
        return ("T", 1, inner), _expect(src, i, ")", name, line_no)
    if src.startswith("o(", i):
        parts = []
        i += 2
        while True:
            node, i = _parse_arg(src, i, name, line_no)
            parts.append(node)
            while i < n and src[i] == " ":
                i += 1
            if i < n and src[i] == ",":
                i += 1
                continue
            i = _expect(src, i, ")", name, line_no)
            if len(parts) < 2:
                _fail(name, line_no, "product needs at least two arguments")
            return ("prod", tuple(parts)), i
    if i + 1 < n and src[i] in _DUMMY_LETTERS and src[i + 1] in "^_":
        return ("dummy", src[i], 1 if src[i + 1] == "^" else -1), i + 2
    _fail(name, line_no, "unrecognized argument at %r" % src[i:i + 12])


def _expect(src: str, i: int, ch: str, name: str, line_no: int) -> int:
    while i < len(src) and src[i] == " ":
        i += 1
    if i >= len(src) or src[i] != ch:
        _fail(name, line_no, "expected %r at %r" % (ch, src[i:i + 12]))
    return i + 1


def _parse_arg_list(body: str, name: str, line_no: int):
    body = body.strip()
    if not body:
        _fail(name, line_no, "empty correlator factor")
    args = []
    i = 0
    while True:
        node, i = _parse_arg(body, i, name, line_no)
        args.append(node)
        while i < len(body) and body[i] == " ":
            i += 1
        if i == len(body):
            return tuple(args)
        if body[i] != ",":
            _fail(name, line_no, "expected ',' at %r" % body[i:i + 12])
        i += 1


def _leaves(node, out: list):
    kind = node[0]
    if kind in ("ext", "dummy"):
        out.append(node)
    elif kind == "T":
        _leaves(node[2], out)
    else:
        for part in node[1]:
            _leaves(part, out)


def _validate_term(groups, name: str, line_no: int) -> None:
    leaves: list = []
    for _, args in groups:
        for a in args:
            _leaves(a, leaves)
    for slot in (0, 1):
        if leaves.count(("ext", slot)) != 1:
            _fail(name, line_no, "slot W%d must appear exactly once" % (slot + 1))
    for letter in _DUMMY_LETTERS:
        up = leaves.count(("dummy", letter, 1))
        dn = leaves.count(("dummy", letter, -1))
        if (up, dn) not in ((0, 0), (1, 1)):
            _fail(name, line_no, "unbalanced index pair %s" % letter)


def _parse_term_line(line: str, name: str, line_no: int):
    head, sep, tail = line.partition(";")
    if not sep:
        _fail(name, line_no, "missing ';' separator")
    ctok = head.strip()
    m = _SYMBOL.match(ctok)
    if m:
        coeff = AffineForm.symbol(int(m.group(1)))
    elif _RATIONAL.match(ctok):
        coeff = AffineForm.constant(rat(ctok))
    else:
        _fail(name, line_no, "bad coefficient %r" % ctok)
    rest = tail.strip()
    if rest == OMEGA_SYM:
        return coeff, OMEGA_SYM
    groups = []
    pos = 0
    for m in _GROUP.finditer(rest):
        if rest[pos:m.start()].strip():
            _fail(name, line_no, "unparsed text %r" % rest[pos:m.start()])
        groups.append((int(m.group(1)), _parse_arg_list(m.group(2), name, line_no)))
        pos = m.end()
    if rest[pos:].strip():
        _fail(name, line_no, "unparsed text %r" % rest[pos:])
    if not groups:
        _fail(name, line_no, "no correlator factors")
    term = tuple(groups)
    _validate_term(term, name, line_no)
    return coeff, term


@lru_cache(maxsize=None)
def load_manifest(name: str):
    """Parse a packaged term manifest into (coefficient, factor-groups) pairs."""
    terms = []
    for line_no, raw in enumerate(manifest_text(name).splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        terms.append(_parse_term_line(line, name, line_no))
    return tuple(terms)


def _realize(node, slots, dummies) -> VFieldExpr:
    kind = node[0]
    if kind == "ext":
        return slots[node[1]]
    if kind == "dummy":
        pair = dummies.get(node[1])
        if pair is None:
            pair = dummies[node[1]] = dummy_pair()
        return pair[0] if node[2] > 0 else pair[1]
    if kind == "T":
        v = _realize(node[2], slots, dummies)
        for _ in range(node[1]):
            v = apply_T(v)
        return v
    parts = [_realize(p, slots, dummies) for p in node[1]]
    v = parts[0]
    for p in parts[1:]:
        v = quantum_product(v, p)
    return v


def _term_expr(groups, w1: VFieldExpr, w2: VFieldExpr) -> ScalarExpr:
    slots = (w1, w2)
    dummies: dict = {}
    total = None
    for genus, argnodes in groups:
        fields = [_realize(a, slots, dummies) for a in argnodes]
        fac = correlator(genus, fields)
        total = fac if total is None else total * fac
    return total


def _build(name: str, w1: VFieldExpr, w2: VFieldExpr) -> ScalarExpr:
    out = ScalarExpr.zero()
    for coeff, groups in load_manifest(name):
        if groups == OMEGA_SYM:
            _fail(name, 0, "symmetrized tail line outside the identity manifest")
        out = out + _term_expr(groups, w1, w2) * coeff
    return out


def build_Q(w1: VFieldExpr, w2: VFieldExpr) -> ScalarExpr:
    """The genus<=2 bilinear bracket (27 terms)."""
    return _build("q_terms.txt", w1, w2)


def build_Phi(w1: VFieldExpr, w2: VFieldExpr) -> ScalarExpr:
    """The genus-3 ansatz: -<<T2(w1)T(w2)>>_3 plus 105 symbol-weighted terms.

    Evaluating the result yields affine forms in the symbols a1..a105.
    """
    return _build("phi_terms.txt", w1, w2)


def build_Omega(w1: VFieldExpr, w2: VFieldExpr) -> ScalarExpr:
    """The bilinear correction form multiplying the free coefficient."""
    return _build("omega_terms.txt", w1, w2)


def build_thm_rhs(w1: VFieldExpr, w2: VFieldExpr, a2=None) -> ScalarExpr:
    """Right-hand side of the main identity.

    ``a2`` picks the value of the free coefficient; ``None`` keeps it
    symbolic, so evaluation yields affine forms in a2.
    """
    weight = AffineForm.symbol(FREE_SYMBOL) if a2 is None \
        else AffineForm.constant(rat(a2))
    out = ScalarExpr.zero()
    for coeff, groups in load_manifest("identity_rhs.txt"):
        if groups == OMEGA_SYM:
            sym = build_Omega(w1, w2) + build_Omega(w2, w1)
            out = out + sym * weight
        else:
            out = out + _term_expr(groups, w1, w2) * coeff
    return out


def build_skew(w1: VFieldExpr, w2: VFieldExpr) -> ScalarExpr:
    """<<T2(w1)T(w2)>>_3 - <<T2(w2)T(w1)>>_3 - (1/7)(Q(w1,w2) - Q(w2,w1)).

    Evaluates to zero on every target; swapping the slots negates it.
    """
    lhs = correlator(3, [apply_T(apply_T(w1)), apply_T(w2)]) \
        - correlator(3, [apply_T(apply_T(w2)), apply_T(w1)])
    q_skew = build_Q(w1, w2) - build_Q(w2, w1)
    return lhs - q_skew * Fraction(1, 7)


def _parse_affine(text: str, name: str, line_no: int) -> AffineForm:
    toks = _AFFINE_TOKEN.findall(text)
    if "".join(toks) != text.replace(" ", ""):
        _fail(name, line_no, "bad coefficient expression %r" % text)
    acc = AffineForm.constant(0)
    sign = 1
    for tok in toks:
        if tok == "+":
            sign = 1
        elif tok == "-":
            sign = -1
        elif "a" in tok:
            scale, _, sym = tok.rpartition("*")
            term = AffineForm.symbol(int(sym[1:]))
            if scale:
                term = term * rat(scale)
            acc = acc + term * sign
            sign = 1
        else:
            acc = acc + AffineForm.constant(rat(tok) * sign)
            sign = 1
    return acc


@lru_cache(maxsize=None)
def _coeff_table() -> tuple:
    name = "coeff_table.txt"
    table: dict[int, AffineForm] = {}
    for line_no, raw in enumerate(manifest_text(name).splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        lhs, sep, rhs = line.partition("=")
        m = _SYMBOL.match(lhs.strip())
        if not sep or not m:
            _fail(name, line_no, "expected 'aN = ...', got %r" % line)
        sym = int(m.group(1))
        if sym in table:
            _fail(name, line_no, "duplicate entry a%d" % sym)
        rhs = rhs.strip()
        table[sym] = AffineForm.symbol(sym) if rhs == "free" \
            else _parse_affine(rhs, name, line_no)
    return tuple(sorted(table.items()))


def lemma_coeff_table() -> dict[int, AffineForm]:
    """Solved values of a1..a105 as affine forms in the free symbol a2."""
    return dict(_coeff_table())
