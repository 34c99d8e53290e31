"""The nine acceptance criteria, each timed against its runtime limit.

Run with ``pytest tests/test_acceptance.py``; the terminal summary lists one
PASS/FAIL line per criterion.
"""
import random
from itertools import combinations, product

import pytest

from corpus import CORPUS_SEED, corpus, corpus_posets, random_order_preserving, random_poset
from oracles import (INF, codim_exists_oracle, codim_functions_of_component, grade_oracle,
                     levels_from_f)
from siltlab.arith import verify_end_matrix_Z
from siltlab.extint import NEG_INF
from siltlab.grcomplex import MonomialRing, quotient_complex, residue_field, ring_complex, shift
from siltlab.invariants import (cm_concentration, depth, depth_cech, grade_filtration, in_Y,
                                prime_vars, width, window)
from siltlab.loccalc import (Adelic, Hom, RingUnit, SumOver, Zero, block_form, canonical,
                             end_ring_of_TPhi, matches_dimension_one_shape, normalize,
                             random_orders, t_phi)
from siltlab.poset_core import (NoCodimensionFunction, build_poset,
                                codimension_functions, connected_components, from_order_pairs,
                                integer_window, is_catenary, is_codimension_function)
from siltlab.spfilt import (SpFiltration, classify, filtration_from_function,
                            filtration_from_levels, function_from_filtration, pullback)


@pytest.fixture(scope="module")
def pairs():
    return corpus()


@pytest.fixture(scope="module")
def posets():
    return corpus_posets()


def small_posets(max_nodes=3):
    """Every poset on up to max_nodes labelled nodes."""
    out = []
    for n in range(max_nodes + 1):
        names = ["v%d" % i for i in range(n)]
        cand = [(a, b) for a in names for b in names if a != b]
        seen = set()
        for r in range(len(cand) + 1):
            for rel in combinations(cand, r):
                s = set(rel)
                if any((b, a) in s for a, b in s):
                    continue
                if any((a, d) not in s for a, b in s for c, d in s if b == c):
                    continue
                P = from_order_pairs(names, rel)
                key = (P.nodes, P.covers)
                if key not in seen:
                    seen.add(key)
                    out.append(P)
    return out


def test_1_bijection(pairs, criterion):
    with criterion(1, "function/level round trips on 10^4 pairs; slice iff strictly increasing", 10):
        assert len(pairs) >= 10 ** 4
        for P, f in pairs:
            phi = filtration_from_function(P, f)
            assert function_from_filtration(phi) == f
            lo, hi = min(f.values()) - 1, max(f.values())
            table = {n: levels_from_f(P.nodes, f, n) for n in range(lo, hi + 1)}
            for n, L in table.items():
                assert phi.level(n) == L
            back = filtration_from_levels(P, table, outside="clamp")
            assert {n: back.level(n) for n in table} == table
            assert function_from_filtration(back) == f
            strict = all(f[a] < f[b] for a, b in P.covers)
            assert classify(phi).slice == strict
        vals = [NEG_INF, -1, 0, 1, 2, INF]
        count = 0
        for P in small_posets(3):
            for combo in product(vals, repeat=len(P.nodes)):
                f = dict(zip(P.nodes, combo))
                if any(f[a] > f[b] for a, b in P.covers):
                    continue
                count += 1
                finite = all(abs(v) != INF for v in combo)
                strict = all(f[a] < f[b] for a, b in P.covers)
                assert classify(SpFiltration(P, f)).slice == (finite and strict)
        assert count > 1000


def test_2_cousin(pairs, criterion):
    with criterion(2, "non-degenerate+strong Cousin = slice+weak Cousin = codimension", 10):
        a, b, c = set(), set(), set()
        for i, (P, f) in enumerate(pairs):
            fl = classify(SpFiltration(P, f))
            if fl.non_degenerate and fl.strong_cousin:
                a.add(i)
            if fl.slice and fl.weak_cousin:
                b.add(i)
            if fl.codimension:
                c.add(i)
        assert a == b == c
        assert c and len(c) < len(pairs)


def unique_end(P):
    for comp in connected_components(P):
        cs = set(comp)
        mins = [p for p in comp if not any(q in cs for q in P.lower_covers(p))]
        maxs = [p for p in comp if not any(q in cs for q in P.upper_covers(p))]
        if len(mins) != 1 and len(maxs) != 1:
            return False
    return True


def test_3_codimension_catenary(posets, criterion):
    with criterion(3, "solver vs catenary, per-component constants, k[[x]][y] model", 5) as cr:
        n_unique = 0
        for P in posets:
            try:
                d = codimension_functions(P).values
            except NoCodimensionFunction:
                d = None
            cat = is_catenary(P)[0]
            if d is not None:
                assert cat and is_codimension_function(P, d)
            if unique_end(P):
                n_unique += 1
                assert (d is not None) == cat
            if d is None:
                continue
            # every codimension function differs from the solver's by a constant per component
            for comp in connected_components(P):
                others = codim_functions_of_component(comp, P.covers, len(P.nodes))
                assert others
                for e in others:
                    assert len({e[p] - d[p] for p in comp}) == 1
        P = build_poset(["m0", "a", "b", "c"], [("m0", "a"), ("m0", "b"), ("b", "c")])
        d = codimension_functions(P).values
        assert d == P.heights()
        co = P.coheights()
        dim = max(P.heights().values())
        assert not is_codimension_function(P, {p: dim - co[p] for p in P.nodes})
        cr.note = "[%d posets, equivalence checked on %d with a unique end per component]" % (
            len(posets), n_unique)


@pytest.mark.xfail(strict=True, reason="catenary does not imply a codimension function for "
                   "finite posets with several minimal and maximal elements (see README)")
def test_3_literal_equivalence(posets, criterion):
    bad = []
    for P in posets:
        try:
            codimension_functions(P)
            ok = True
        except NoCodimensionFunction:
            ok = False
        if ok != is_catenary(P)[0]:
            assert not codim_exists_oracle(P.nodes, P.covers)
            bad.append(P)
    criterion.info("acceptance 3 literal clause XFAIL: %d of %d corpus posets are catenary "
                   "without a codimension function" % (len(bad), len(posets)))
    assert not bad


KX = MonomialRing(["x"])
KXY = MonomialRing(["x", "y"])
KXYZ = MonomialRing(["x", "y", "z"])
NONCM = MonomialRing(["x", "y"], ["x^2", "xy"])
NONCM3 = MonomialRing(["x", "y", "z"], ["xy", "xz"])


def test_4_fi_suite(criterion):
    with criterion(4, "Koszul depth = Cech depth, shift laws, frozen depths, grade < height", 60):
        for R in (KX, KXY, NONCM, NONCM3):
            rels = [tuple(r) for r in R.relations]
            mods = [ring_complex(R)] + [quotient_complex(R, [v]) for v in R.vars]
            for r in range(min(3, len(R.vars)) + 1):
                for gens in combinations(R.vars, r):
                    gens = list(gens)
                    for X in mods:
                        d, w = depth(X, gens), width(X, gens)
                        assert d == depth_cech(X, gens)
                        for n in (-2, -1, 1, 2):
                            assert depth(shift(X, n), gens) == (d - n if d != INF else d)
                            assert width(shift(X, n), gens) == (w + n if abs(w) != INF else w)
                    assert depth(mods[0], gens) == grade_oracle(
                        len(R.vars), rels, [R.var_index(g) for g in gens])
        assert depth(ring_complex(KXY), ["x", "y"]) == 2
        assert depth(ring_complex(NONCM), ["x", "y"]) == 0
        for R in (NONCM, NONCM3):
            g, h = grade_filtration(R).f, window(R).heights()
            assert any(g[p] < h[p] for p in h)
        for R in (KX, KXY):
            assert grade_filtration(R).f == window(R).heights()


def test_5_cm(criterion):
    with criterion(5, "CM concentration on k[x], k[x,y], k[x,y,z]; fails on k[x,y,z]/(xy,xz)", 60):
        for R in (KX, KXY, KXYZ):
            h = window(R).heights()
            for p in window(R).nodes:
                rep = cm_concentration(R, p)
                assert rep.concentrated and rep.degrees == [h[p]]
        rep = cm_concentration(NONCM3, "(x,y,z)")
        assert not rep.concentrated and set(rep.degrees) <= {1, 2} and len(rep.degrees) > 1


def window_filtrations(n=300):
    """Corpus-seeded order-preserving functions on the k[x,y] window, with infinite values."""
    W = window(KXY)
    rng = random.Random(CORPUS_SEED)
    out = []
    for _ in range(n):
        f = random_order_preserving(rng, W)
        if rng.random() < 0.2:
            for q in W.up_closure(rng.choice(W.nodes)):
                f[q] = INF
        elif rng.random() < 0.2:
            for q in W.down_closure(rng.choice(W.nodes)):
                f[q] = NEG_INF
        out.append(SpFiltration(W, f))
    return out


def test_6_aisle(criterion):
    with criterion(6, "in_Y(shifted residue field) = (-i >= f(q)) on the k[x,y] window", 30):
        W = window(KXY)
        fields = {q: residue_field(KXY, prime_vars(W, q)) for q in W.nodes}
        checked = 0
        for phi in window_filtrations():
            for q in W.nodes:
                for i in range(-9, 10):
                    # shift(k, -i) is k(q) in cohomological degree i
                    assert in_Y(shift(fields[q], -i), phi) == (-i >= phi.f[q])
                    checked += 1
        assert checked >= 20000


def expected_block_form(P, phi):
    """A^{W0}(R) + A^{W1}(R) + A^{W0'}A^{W1'}(R), W0' and W1' the nodes joined by a cover."""
    vals = sorted({phi.f[p] for p in P.nodes})
    strata = [frozenset(p for p in P.nodes if phi.f[p] == v) for v in vals]
    items = [Adelic(W, RingUnit()) for W in strata]
    if len(strata) == 2:
        W0, W1 = strata
        lo = frozenset(p for p in W0 if any(q in W1 for q in P.upper_covers(p)))
        hi = frozenset(q for q in W1 if any(p in W0 for p in P.lower_covers(q)))
        if lo:
            items.append(Adelic(lo, Adelic(hi, RingUnit())))
    return canonical(SumOver(tuple(items))) if len(items) > 1 else items[0]


def test_7_rewrite(posets, criterion):
    with criterion(7, "End(T_Phi) block form on height <= 1, confluence over 5 orders", 30) as cr:
        low = [P for P in posets if P.dimension() <= 1]
        for i, P in enumerate(low):
            phi = SpFiltration(P, codimension_functions(P).values)
            assert classify(phi).codimension
            term = Hom(t_phi(phi), t_phi(phi))
            results = [normalize(term, P, phi, order=o) for o in random_orders(5, i)]
            for r in results:
                assert r.ok
                assert all(a > b for a, b in zip(r.measures, r.measures[1:]))
            assert len({r.term for r in results}) == 1
            expected = expected_block_form(P, phi)
            assert results[0].term == expected
            # the literal A^{W0} A^{W1} form reduces to the same normal form
            assert normalize(block_form(phi), P, phi).term == expected
            pres = end_ring_of_TPhi(P, phi)
            for r_ in range(pres.size()):
                for c_ in range(r_ + 1, pres.size()):
                    assert pres.entries[(r_, c_)] == Zero()
        cr.note = "[%d posets of height <= 1]" % len(low)


def test_8_z_matrix(criterion):
    with criterion(8, "Z-window End matrix over {2,3,5}; arith checks at level 4", 20):
        Z = integer_window([2, 3, 5])
        pres = end_ring_of_TPhi(Z, SpFiltration(Z, codimension_functions(Z).values))
        assert matches_dimension_one_shape(pres)
        assert pres.rendered("Z") == {
            (0, 0): "Q", (0, 1): "0",
            (1, 0): "(prod_{p in {2,3,5}} Z_p) (x) Q",
            (1, 1): "prod_{p in {2,3,5}} Z_p"}
        rep = verify_end_matrix_Z([2, 3, 5], 4)
        assert rep.shape_ok and rep.all_matched
        by = {(e.row, e.col): e.observed for e in rep.entries}
        assert by[(1, 1)]["orders"] == {"2": 16, "3": 81, "5": 625}
        assert all(v == 0 for v in by[(1, 1)]["cross_homs"].values())
        assert by[(0, 1)]["hom_counts"] == {"2": 1, "3": 1, "5": 1}
        assert by[(1, 0)]["stage_counts"] == {"2": [16] * 4, "3": [81] * 4, "5": [625] * 4}


def random_fibered_map(rng):
    """A monotone g: P -> Q whose fibers are antichains.

    P has one to three copies of each node of Q; every relation of P lies over
    a strict relation of Q, so fibers are antichains and g is monotone.
    """
    Q = random_poset(rng, 5)
    copies = {q: ["%s_%d" % (q, i) for i in range(rng.randint(1, 3))] for q in Q.nodes}
    nodes = [c for q in Q.nodes for c in copies[q]]
    rel = set()
    for a in Q.nodes:
        for b in Q.nodes:
            if Q.lt(a, b):
                for x in copies[a]:
                    for y in copies[b]:
                        if rng.random() < 0.6:
                            rel.add((x, y))
    # close transitively so the relation is an order
    changed = True
    while changed:
        new = {(x, z) for x, y in rel for y2, z in rel if y == y2} - rel
        rel |= new
        changed = bool(new)
    P = from_order_pairs(nodes, rel)
    g = {c: q for q in Q.nodes for c in copies[q]}
    return Q, P, g


def test_9_pullback(criterion):
    with criterion(9, "pullback along 50 monotone maps with antichain fibers", 5):
        rng = random.Random(CORPUS_SEED)
        n_slice = 0
        for _ in range(50):
            Q, P, g = random_fibered_map(rng)
            for _ in range(4):
                f = random_order_preserving(rng, Q)
                if rng.random() < 0.5:
                    # a shifted height function, so slice inputs are well represented
                    h, c = Q.heights(), rng.randint(-2, 2)
                    f = {q: h[q] + c for q in Q.nodes}
                phi = SpFiltration(Q, f)
                psi = pullback(phi, P, g)
                assert psi.f == {p: f[g[p]] for p in P.nodes}
                if classify(phi).slice:
                    n_slice += 1
                    assert classify(psi).slice
        assert n_slice >= 50
