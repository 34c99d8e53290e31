"""Random LocTerm generator for the rewrite property tests."""
from siltlab.loccalc import (Adelic, FreeCopies, Gamma, Hom, Lambda, LambdaSet, LocalizeAt, Opaque,
                             ProdOver, RingUnit, Shift, SumOver, Tensor, TStratum, Zero,
                             rgamma_local)


def random_upset(rng, P):
    seeds = [p for p in P.nodes if rng.random() < 0.4] or [rng.choice(P.nodes)]
    out = set()
    for p in seeds:
        out |= set(P.up_closure(p))
    return frozenset(out)


def random_antichain(rng, P):
    out = []
    for p in rng.sample(list(P.nodes), len(P.nodes)):
        if all(not P.le(p, q) and not P.le(q, p) for q in out) and rng.random() < 0.6:
            out.append(p)
    return frozenset(out or [rng.choice(P.nodes)])


def random_leaf(rng, P):
    k = rng.randrange(6)
    if k == 0:
        return RingUnit()
    if k == 1:
        return FreeCopies(rng.choice(["k", "w"]))
    if k == 2:
        return Zero()
    if k == 3:
        return Opaque(rng.choice(["E(R/p)", "D_p"]))
    return Shift(rng.randint(-2, 2), rgamma_local(P, rng.choice(P.nodes), rng.choice(["1", "1", "k"])))


def random_term(rng, P, depth=4, phi=None):
    if depth <= 0 or rng.random() < 0.25:
        return random_leaf(rng, P)
    k = rng.randrange(11)
    sub = lambda: random_term(rng, P, depth - 1, phi)
    if k == 0:
        return Gamma(random_upset(rng, P), sub())
    if k == 1:
        return LambdaSet(random_upset(rng, P), sub())
    if k == 2:
        return Lambda(rng.choice(P.nodes), sub())
    if k == 3:
        return LocalizeAt(rng.choice(P.nodes), sub())
    if k == 4:
        return Shift(rng.randint(-2, 2), sub())
    if k == 5:
        return Tensor(sub(), sub())
    if k == 6:
        return SumOver(tuple(sub() for _ in range(rng.randint(1, 3))))
    if k == 7:
        return ProdOver(tuple(sub() for _ in range(rng.randint(1, 3))))
    if k == 8:
        return Adelic(random_antichain(rng, P), sub())
    if k == 9 and phi is not None:
        vals = phi.finite_values()
        i, j = rng.choice(vals), rng.choice(vals)
        W = lambda n: frozenset(p for p in P.nodes if phi.f[p] == n)
        return Hom(TStratum(i, W(i)), TStratum(j, W(j), rng.choice(["1", "k"])))
    return Hom(sub(), sub())
