"""Acceptance gate: one test per shipped guarantee, exact zero tolerance.

Every comparison is exact rational equality; there are no epsilons
anywhere in this module.  Runtime bounds are asserted where the guarantee
includes one.
"""
import random
import time
from fractions import Fraction
from itertools import combinations_with_replacement, product

import pytest

from gweq import equations as eq
from gweq import pipeline as pl
from gweq.bigphase import P1, POINT, basis_field, evaluate_at_origin
from gweq.exact import AffineForm
from gweq.opexpr import build_nabla
from gweq.p1 import gw_invariant_p1
from gweq.point import genus0_closed_form, intersection_number
from oracles import dim_ok, point_genus0
from test_bigphase import component


def _run_target(target: str):
    printed = pl.printed_relations()
    bad = []
    for spec in pl.appendix_schedule():
        if spec.target != target:
            continue
        row = pl.extract_relation(spec)
        if not pl.match_printed(row, printed[spec.ident]):
            bad.append(spec.ident)
    return bad


def test_criterion_1_point_relations_bit_exact():
    t0 = time.perf_counter()
    assert _run_target("point") == []
    cold = time.perf_counter() - t0
    assert cold < 600.0, "cold point regression took %.1fs" % cold
    # anchor spot checks on the stored rows themselves
    first = pl.printed_relations()["point-01"]
    assert first.const == Fraction(-77, 414720)
    assert first.coefficient(104) == 1
    t0 = time.perf_counter()
    assert _run_target("point") == []
    warm = time.perf_counter() - t0
    assert warm < 60.0, "warm point regression took %.1fs" % warm


def test_criterion_2_p1_relations_bit_exact():
    assert _run_target("p1") == []
    assert pl.printed_relations()["p1-01"].const == Fraction(31, 96768)
    t0 = time.perf_counter()
    assert _run_target("p1") == []
    warm = time.perf_counter() - t0
    assert warm < 300.0, "warm p1 regression took %.1fs" % warm


def test_criterion_3_rank_and_coefficient_table():
    try:
        report = pl.solve_and_compare(workers=2)
    except pl.RankMismatch as exc:
        pytest.fail(
            "stored relation system is rank-deficient: %s. The stored rows "
            "are reproduced bit-exactly by extraction (criteria 1-2), and "
            "the two instances named above are genuinely identical rows: "
            "the schedule lists both argument orders of one symmetric "
            "instance, whose expansions coincide term by term. The missing "
            "direction is recovered by any independent degree-1 instance "
            "(see test_pipeline.test_completed_system_reproduces_stored_"
            "table, which reaches rank 104 and reproduces the whole stored "
            "table with a2 free), so the coefficient table itself is "
            "verified; this gate stays red because the scheduled system "
            "alone does not reach rank 104." % exc)
    assert report["rank"] == 104
    assert report["undetermined"] == ["a2"]
    assert report["matched"] is True, report["mismatches"][:3]
    table = eq.lemma_coeff_table()
    assert table[1] == AffineForm.constant(5)
    assert table[5] == AffineForm.constant(Fraction(5, 168))
    assert table[23] == AffineForm({2: 4}, Fraction(1, 36))
    assert table[104] == AffineForm.constant(Fraction(1, 23040))
    assert table[105] == AffineForm({2: -144}, Fraction(-64, 35))
    took = report["perf"]["rank_ms"] + report["perf"]["solve_ms"]
    assert took < 5000, "solve took %d ms" % took


def test_criterion_4_skew_identity_vanishes():
    suite = pl.skew_suite()
    point = [s for s in suite if s.target == "point"]
    assert {(s.args[0][0], s.args[1][0]) for s in point if not s.derivs} \
        == {(a, b) for a in range(7) for b in range(7 - a)}
    assert {s.degree for s in suite if s.target == "p1"} == {0, 1, 2}
    assert any(s.derivs for s in point) and \
        any(s.derivs for s in suite if s.target == "p1")
    report = pl.verify_skew(suite=suite, workers=2)
    bad = [r["instance"] for r in report["instances"] if not r["matched"]]
    assert report["matched"] and not bad, bad[:5]
    assert all(r["extracted"] == {"const": "0"} for r in report["instances"])


def test_criterion_5_symmetrized_bracket_vanishes():
    # targets are the point and the projective line; higher-dimensional
    # targets (projective plane upward) are outside the oracle stack and
    # deliberately not scheduled
    suite = pl.omega_suite()
    assert len(suite) >= 50
    assert {s.target for s in suite} == {"point", "p1"}
    assert any(len(s.derivs) >= 2 for s in suite)
    report = pl.verify_omega_symmetrization(suite=suite, workers=2)
    bad = [r["instance"] for r in report["instances"] if not r["matched"]]
    assert report["matched"] and not bad, bad[:5]


def test_criterion_6_main_identity_at_both_free_values():
    report = pl.verify_main_identity(suite=pl.skew_suite(), workers=2,
                                     a2_values=(0, 1))
    assert len(report["instances"]) == 2 * len(pl.skew_suite())
    bad = [r["instance"] for r in report["instances"] if not r["matched"]]
    assert report["matched"] and not bad, bad[:5]


def _point_keys(rng, count):
    out = set()
    while len(out) < count:
        g = rng.randrange(4)
        k = rng.randrange(1, 7)
        levels = [rng.randrange(10) for _ in range(k - 1)]
        need = 3 * g - 3 + k - sum(levels)
        if 0 <= need <= 14:
            out.add((g, tuple(sorted(levels + [need]))))
    return sorted(out)


def _p1_keys(rng, count):
    out = set()
    while len(out) < count:
        g = rng.randrange(4)
        d = rng.randrange(3)
        k = rng.randrange(1, 5)
        ins = [(rng.randrange(7), rng.randrange(2)) for _ in range(k - 1)]
        c = rng.randrange(2)
        n = 2 * g - 2 + 2 * d + k - sum(a + b for a, b in ins) - c
        if 0 <= n <= 12:
            out.add((g, d, tuple(sorted(ins + [(n, c)]))))
    return sorted(out)


def test_criterion_7_oracle_property_suites():
    # (a) genus-0 closed form on every dimension-valid key with k <= 9
    checked = 0
    for k in range(3, 10):
        for levels in combinations_with_replacement(range(k - 2), k):
            if sum(levels) != k - 3:
                continue
            got = intersection_number(0, levels)
            assert got == genus0_closed_form(levels) == point_genus0(levels)
            checked += 1
    assert checked >= 30

    # (b) string and dilaton on 200 seeded point keys, genus <= 3
    for g, base in _point_keys(random.Random(0x5eed), 200):
        levels = (base[0] + 1,) + base[1:]
        lhs = intersection_number(g, levels + (0,))
        assert lhs == sum(
            intersection_number(g, levels[:i] + (n - 1,) + levels[i + 1:])
            for i, n in enumerate(levels) if n >= 1), (g, levels)
        assert intersection_number(g, base + (1,)) \
            == (2 * g - 2 + len(base)) * intersection_number(g, base)

    # (c) string, dilaton, divisor on 200 seeded p1 keys, g <= 3, d <= 2
    for g, d, base in _p1_keys(random.Random(0xd1ce), 200):
        ins = ((base[0][0] + 1, base[0][1]),) + base[1:]
        lhs = gw_invariant_p1(g, d, ins + ((0, 0),))
        assert lhs == sum(
            gw_invariant_p1(g, d, ins[:i] + ((n - 1, c),) + ins[i + 1:])
            for i, (n, c) in enumerate(ins) if n >= 1), (g, d, ins)
        assert gw_invariant_p1(g, d, base + ((1, 0),)) \
            == (2 * g - 2 + len(base)) * gw_invariant_p1(g, d, base)
        if d >= 1 or 2 * g - 2 + len(base) > 0:
            got = gw_invariant_p1(g, d, base + ((0, 1),))
            want = d * gw_invariant_p1(g, d, base) + sum(
                gw_invariant_p1(g, d, base[:i] + ((n - 1, 1),) + base[i + 1:])
                for i, (n, c) in enumerate(base) if c == 0 and n >= 1)
            assert got == want, (g, d, base)

    # (d) associativity of the product at evaluation, both targets
    pt_fields = [basis_field(n) for n in range(3)]
    for u, v, w in product(pt_fields, repeat=3):
        from gweq.bigphase import quantum_product as qp
        delta = qp(qp(u, v), w) + (-1) * qp(u, qp(v, w))
        for lv in range(7):
            assert evaluate_at_origin(component(delta, lv, 0, POINT),
                                      POINT, degree=0).is_zero()
    p1_fields = [basis_field(n, c) for n in (0, 1) for c in (0, 1)]
    for u, v, w in product(p1_fields, repeat=3):
        from gweq.bigphase import quantum_product as qp
        delta = qp(qp(u, v), w) + (-1) * qp(u, qp(v, w))
        for lv, cls, dg in product(range(7), (0, 1), range(3)):
            assert evaluate_at_origin(component(delta, lv, cls, P1),
                                      P1, degree=dg).is_zero()


def test_criterion_8_differentiation_routes_agree_on_schedule():
    for spec in pl.appendix_schedule():
        model = pl.DEFAULT_TARGETS.model(spec.target)
        w1, w2 = basis_field(*spec.args[0]), basis_field(*spec.args[1])
        direct = evaluate_at_origin(
            build_nabla("phi_terms.txt", w1, w2, spec.derivs),
            model, degree=spec.degree)
        assert direct == pl.extract_relation(spec), spec.ident
