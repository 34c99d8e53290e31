import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import all_homs_cyclic
from siltlab.arith import (ArithError, LevelMismatch, NotPrime, PruferTruncation, TruncatedPadic,
                           end_prufer, end_prufer_tower, hom_count, hom_from_cyclic_stage,
                           hom_orthogonality, verify_end_matrix_Z)

PRIMES = [2, 3, 5, 7, 11, 13]


class TestPadic:
    def test_ring_ops(self):
        a, b = TruncatedPadic(3, 2, 5), TruncatedPadic(3, 2, 7)
        assert (a + b).value == 3 and (a * b).value == 8 and (a - b).value == 7
        assert (-a).value == 4
        assert (a * a.inverse()).value == 1
        assert TruncatedPadic(2, 5, 12).valuation() == 2
        assert TruncatedPadic(2, 5, 0).valuation() == 5
        assert TruncatedPadic(5, 3, 38).digits() == [3, 2, 1]

    def test_errors(self):
        with pytest.raises(NotPrime):
            TruncatedPadic(4, 2, 1)
        with pytest.raises(ArithError):
            TruncatedPadic(3, 0, 1)
        with pytest.raises(LevelMismatch):
            TruncatedPadic(3, 2, 1) + TruncatedPadic(3, 3, 1)
        with pytest.raises(ArithError):
            TruncatedPadic(3, 2, 6).inverse()

    @settings(max_examples=300, deadline=None)
    @given(st.sampled_from(PRIMES[:4]), st.integers(1, 6), st.data())
    def test_reduction_compatibility(self, p, k, data):
        N = p ** k
        x = TruncatedPadic(p, k, data.draw(st.integers(0, N - 1)))
        y = TruncatedPadic(p, k, data.draw(st.integers(0, N - 1)))
        j = data.draw(st.integers(1, k))
        r = lambda z: z.reduce(j)
        assert r(x + y) == r(x) + r(y)
        assert r(x * y) == r(x) * r(y)
        assert r(x - y) == r(x) - r(y)
        assert r(-x) == -r(x)
        assert r(x).is_unit() == x.is_unit()
        if x.is_unit():
            assert r(x.inverse()) == r(x).inverse()


class TestPrufer:
    def test_annihilated(self):
        for p, k in [(2, 3), (3, 2), (5, 1)]:
            for x in PruferTruncation.elements(p, k):
                assert x.scale(p ** k).is_zero()
                assert x.order() in [p ** i for i in range(k + 1)]

    def test_inclusion(self):
        p, k = 3, 2
        seen = set()
        for x in PruferTruncation.elements(p, k):
            y = x.include(k + 1)
            assert y.as_fraction() == x.as_fraction()
            seen.add(y)
            for z in PruferTruncation.elements(p, k):
                assert (x + z).include(k + 1) == y + z.include(k + 1)
        assert len(seen) == p ** k
        with pytest.raises(LevelMismatch):
            PruferTruncation(2, 3, 1).include(2)


class TestEnd:
    def test_small(self):
        E = end_prufer(2, 1)
        assert E.order == 2 and E.is_commutative_ring_iso()
        E = end_prufer(3, 2)
        assert E.order == 9 and E.is_commutative_ring_iso()
        lo = end_prufer(3, 1)
        for h in E.images:
            assert lo.evaluate(E.reduce(h)) == E.evaluate(h).reduce(1)

    def test_tower(self):
        tower, ok = end_prufer_tower(2, 5)
        assert ok and [E.order for E in tower] == [2, 4, 8, 16, 32]
        # evaluation is a ring map into Z/2^5
        top = tower[-1]
        rng = random.Random(0)
        for _ in range(50):
            h1, h2 = rng.choice(top.images), rng.choice(top.images)
            ev = top.evaluate
            assert ev(top.compose(h1, h2)) == ev(h1) * ev(h2)
            assert ev(top.add(h1, h2)) == ev(h1) + ev(h2)

    def test_not_prime(self):
        with pytest.raises(NotPrime):
            end_prufer(6, 1)

    @pytest.mark.parametrize("m,n", [(2, 4), (4, 2), (4, 8), (8, 4), (3, 9), (9, 3), (2, 3),
                                     (3, 4), (5, 5), (4, 4), (8, 2)])
    def test_hom_count_oracle(self, m, n):
        def pk(x):
            for p in (2, 3, 5):
                k = 0
                while p ** (k + 1) <= x and x % p ** (k + 1) == 0:
                    k += 1
                if p ** k == x and k:
                    return p, k
        (p, k), (q, l) = pk(m), pk(n)
        assert hom_count(p, k, q, l) == all_homs_cyclic(m, n)


class TestOrthogonality:
    def test_examples(self):
        assert hom_orthogonality(2, 3, 4) == 0
        assert hom_orthogonality(5, 2, 1) == 0
        assert hom_orthogonality(2, 2, 3) == 8
        assert hom_orthogonality(3, 3, 2) == 9

    def test_exhaustive(self):
        for p in PRIMES:
            for q in PRIMES:
                if p != q:
                    for k in range(1, 7):
                        assert hom_orthogonality(p, q, k) == 0


class TestVerifyZ:
    def test_two_three(self):
        rep = verify_end_matrix_Z([2, 3], 3)
        assert rep.shape_ok and rep.all_matched
        by = {(e.row, e.col): e for e in rep.entries}
        assert by[(1, 1)].observed["orders"] == {"2": 8, "3": 27}
        assert by[(1, 0)].observed["stage_counts"] == {"2": [8, 8, 8], "3": [27, 27, 27]}
        assert by[(0, 1)].observed["hom_counts"] == {"2": 1, "3": 1}

    def test_empty(self):
        rep = verify_end_matrix_Z([], 4)
        assert [(e.row, e.col) for e in rep.entries] == [(0, 0)] and rep.all_matched

    def test_two_level_one(self):
        rep = verify_end_matrix_Z([2], 1)
        by = {(e.row, e.col): e for e in rep.entries}
        assert by[(1, 1)].observed["orders"] == {"2": 2}
        assert by[(1, 0)].observed["stage_counts"] == {"2": [2]}
        assert rep.all_matched

    def test_stage_counts_by_oracle(self):
        # Hom((1/p^a)Z, (1/p^k)Z/Z) is Z/p^k: the source is free on 1/p^a
        for p, a, k in [(2, 1, 3), (3, 2, 2), (5, 1, 1)]:
            assert len(hom_from_cyclic_stage(p, a, k)) == p ** k

    def test_as_dict(self):
        d = verify_end_matrix_Z([2], 2).as_dict()
        assert d["level"] == 2 and d["primes"] == [2]
