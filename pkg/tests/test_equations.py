"""Term manifests and stored coefficient table: transcription integrity,
structural anchors, and the consistency identities tying the ansatz, the
solved coefficients, and the symmetrized bracket together."""
from fractions import Fraction

import pytest

from gweq import equations as eq
from gweq import pipeline as pl
from gweq.bigphase import basis_field, differentiate, evaluate_at_origin
from gweq.exact import AffineForm

MANIFESTS = ("q_terms", "phi_terms", "omega_terms", "identity_rhs",
             "coeff_table", "relations_point", "relations_p1")


def test_second_pass_transcriptions_are_identical():
    for name in MANIFESTS:
        first = eq.manifest_text(name + ".txt")
        second = eq.manifest_text(name + ".check.txt")
        assert first == second, name


def test_manifest_shapes():
    assert len(eq.load_manifest("q_terms.txt")) == 27
    assert len(eq.load_manifest("phi_terms.txt")) == 106
    assert len(eq.load_manifest("omega_terms.txt")) == 69
    assert len(eq.load_manifest("identity_rhs.txt")) == 100
    assert len(eq.lemma_coeff_table()) == 105


def test_text_anchors():
    q = eq.manifest_text("q_terms.txt").splitlines()
    assert q[0] == "2/9 ; g2[W2, T(A^)] g0[A_, W1, B^, B_]"
    assert q[-1] == "1/120 ; g1[W2, A^] g0[A_, W1, B^, B_, M^, M_]"
    phi = eq.manifest_text("phi_terms.txt").splitlines()
    assert phi[0] == "-1 ; g3[T2(W1), T(W2)]"
    assert phi[1] == "a1 ; g3[T2(o(W1,W2))]"
    assert phi[-1] == "a105 ; g1[A^] g1[A_, o(W1,W2), B_] g1[B^]"
    rhs = eq.manifest_text("identity_rhs.txt").splitlines()
    assert rhs[0] == "5 ; g3[T2(o(W1,W2))]"
    assert rhs[-1] == "a2 ; OMEGA_SYM"


def test_q_and_omega_coefficients_are_numeric():
    for name in ("q_terms.txt", "omega_terms.txt"):
        for coeff, _ in eq.load_manifest(name):
            assert isinstance(coeff, AffineForm) and coeff.is_constant(), \
                (name, coeff)


def test_phi_symbol_ladder():
    syms = []
    for coeff, _ in eq.load_manifest("phi_terms.txt"):
        if isinstance(coeff, AffineForm) and not coeff.is_constant():
            (sym, c), = coeff.coeffs.items()
            assert c == 1 and coeff.const == 0
            syms.append(sym)
    assert syms == list(range(1, 106))


def test_lemma_table_anchors():
    table = eq.lemma_coeff_table()
    assert table[1] == AffineForm.constant(5)
    assert table[2] == AffineForm.symbol(2)  # stays free
    assert table[5] == AffineForm.constant(Fraction(5, 168))
    assert table[23] == AffineForm({2: 4}, Fraction(1, 36))
    assert table[104] == AffineForm.constant(Fraction(1, 23040))
    assert table[105] == AffineForm({2: -144}, Fraction(-64, 35))


def test_identity_rhs_is_the_lemma_substituted_ansatz():
    shapes = {}
    for coeff, groups in eq.load_manifest("phi_terms.txt"):
        if isinstance(coeff, AffineForm) and not coeff.is_constant():
            (sym, _), = coeff.coeffs.items()
            shapes[sym] = groups
    table = eq.lemma_coeff_table()
    want = {}
    for sym, form in table.items():
        if form.const:
            want[shapes[sym]] = form.const
    got = {}
    tail = 0
    for coeff, groups in eq.load_manifest("identity_rhs.txt"):
        if groups == eq.OMEGA_SYM:
            tail += 1
            assert coeff == AffineForm.symbol(eq.FREE_SYMBOL)
            continue
        assert groups not in got
        got[groups] = coeff
    assert tail == 1
    assert len(got) == 99
    assert got == want
    assert got[shapes[104]] == Fraction(1, 23040)


def test_malformed_lines_are_rejected():
    bad = [
        "; g1[W1]",                      # empty coefficient
        "1/2 ; g1[W1, T(]",              # unbalanced operator call
        "1/2 ; g1[W9]",                  # unknown slot name
        "1/2 ; g1[W1] trailing",         # junk after groups
        "1/2 ; g1[A^, W1]",              # unmatched dummy leg
        "x ; g1[W1, W2]",                # unparsable coefficient
    ]
    for line in bad:
        with pytest.raises(eq.ManifestError):
            eq._parse_term_line(line, "probe.txt", 1)


def test_manifest_error_carries_location():
    with pytest.raises(eq.ManifestError, match=r"probe\.txt:7"):
        eq._parse_term_line("1/2 ; g1[W9]", "probe.txt", 7)


def _omega_sym_value(spec: pl.InstanceSpec, targets=pl.DEFAULT_TARGETS):
    w1 = basis_field(*spec.args[0])
    w2 = basis_field(*spec.args[1])
    expr = eq.build_Omega(w1, w2) + eq.build_Omega(w2, w1)
    for dv in spec.derivs:
        expr = differentiate(expr, dv)
    return evaluate_at_origin(expr, targets.model(spec.target),
                              degree=spec.degree)


def test_free_direction_of_every_scheduled_row_is_the_symmetrized_bracket():
    # substituting the solved coefficients into an extracted row leaves an
    # affine form in the free symbol whose slope must equal the evaluated
    # symmetrized bracket (and the row itself must vanish identically)
    table = eq.lemma_coeff_table()
    for spec in pl.appendix_schedule():
        row = pl.extract_relation(spec)
        sub = row.substitute(table)
        omega = _omega_sym_value(spec)
        assert omega.is_constant()
        assert sub.coefficient(eq.FREE_SYMBOL) == omega.const, spec.ident
        assert sub.is_zero(), spec.ident


def test_skew_builder_is_antisymmetric_after_evaluation():
    pt = pl.DEFAULT_TARGETS.point
    p1 = pl.DEFAULT_TARGETS.p1
    for a, b in ((0, 1), (2, 3)):
        lhs = evaluate_at_origin(eq.build_skew(basis_field(a), basis_field(b)),
                                 pt, degree=0)
        rhs = evaluate_at_origin(eq.build_skew(basis_field(b), basis_field(a)),
                                 pt, degree=0)
        assert lhs == rhs * Fraction(-1)
        same = eq.build_skew(basis_field(a), basis_field(a))
        assert evaluate_at_origin(same, pt, degree=0).is_zero()
    lhs = evaluate_at_origin(
        eq.build_skew(basis_field(1, 0), basis_field(0, 1)), p1, degree=1)
    rhs = evaluate_at_origin(
        eq.build_skew(basis_field(0, 1), basis_field(1, 0)), p1, degree=1)
    assert lhs == rhs * Fraction(-1)
