"""Truncated p-adic and Pruefer-module arithmetic over the integers.

Everything here is finite: Z_p is seen through Z/p^k, the Pruefer group
Z(p^inf) through its level-k piece (1/p^k)Z/Z, and Q or Z[1/p] through the
cyclic stages (1/m^a)Z.  Homomorphism groups are counted by enumerating
images of a generator and checking additivity against every element.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, prod

from .linalg import _is_prime
from .loccalc import end_ring_of_TPhi, matches_dimension_one_shape
from .poset_core import integer_window
from .spfilt import height_filtration


class ArithError(Exception):
    pass


class NotPrime(ArithError):
    def __init__(self, n):
        self.n = n
        super().__init__("%r is not prime" % (n,))


class LevelMismatch(ArithError):
    pass


@lru_cache(maxsize=None)
def _prime_ok(p):
    return _is_prime(p)


def _check_prime(p):
    if not isinstance(p, int) or not _prime_ok(p):
        raise NotPrime(p)


def _check_level(k):
    if not isinstance(k, int) or k < 1:
        raise ArithError("level must be an integer >= 1, got %r" % (k,))


@dataclass(frozen=True)
class TruncatedPadic:
    """An element of Z/p^k, read as a p-adic integer known mod p^k."""
    p: int
    k: int
    value: int

    def __post_init__(self):
        _check_prime(self.p)
        _check_level(self.k)
        object.__setattr__(self, "value", self.value % self.p ** self.k)

    @classmethod
    def from_int(cls, p, k, n):
        return cls(p, k, n)

    @property
    def modulus(self):
        return self.p ** self.k

    def _same(self, other):
        if isinstance(other, int):
            return TruncatedPadic(self.p, self.k, other)
        if (other.p, other.k) != (self.p, self.k):
            raise LevelMismatch("%s vs %s" % ((self.p, self.k), (other.p, other.k)))
        return other

    def __add__(self, other):
        o = self._same(other)
        return TruncatedPadic(self.p, self.k, self.value + o.value)

    def __sub__(self, other):
        o = self._same(other)
        return TruncatedPadic(self.p, self.k, self.value - o.value)

    def __mul__(self, other):
        o = self._same(other)
        return TruncatedPadic(self.p, self.k, self.value * o.value)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return TruncatedPadic(self.p, self.k, -self.value)

    def is_unit(self):
        return self.value % self.p != 0

    def inverse(self):
        if not self.is_unit():
            raise ArithError("%r is not a unit" % (self,))
        return TruncatedPadic(self.p, self.k, pow(self.value, -1, self.modulus))

    def valuation(self):
        """p-adic valuation, capped at k for zero."""
        if self.value == 0:
            return self.k
        v, n = 0, self.value
        while n % self.p == 0:
            n //= self.p
            v += 1
        return v

    def reduce(self, j):
        """Reduction Z/p^k -> Z/p^j for 1 <= j <= k."""
        if not 1 <= j <= self.k:
            raise LevelMismatch("cannot reduce level %d to %d" % (self.k, j))
        return TruncatedPadic(self.p, j, self.value)

    def digits(self):
        """Base-p digits, least significant first, length k."""
        out, n = [], self.value
        for _ in range(self.k):
            out.append(n % self.p)
            n //= self.p
        return out


@dataclass(frozen=True)
class PruferTruncation:
    """The class of num / p^k in (1/p^k)Z / Z."""
    p: int
    k: int
    num: int

    def __post_init__(self):
        _check_prime(self.p)
        _check_level(self.k)
        object.__setattr__(self, "num", self.num % self.p ** self.k)

    @classmethod
    def generator(cls, p, k):
        return cls(p, k, 1)

    @classmethod
    def elements(cls, p, k):
        return [cls(p, k, n) for n in range(p ** k)]

    def as_fraction(self):
        return Fraction(self.num, self.p ** self.k)

    def _same(self, other):
        if (other.p, other.k) != (self.p, self.k):
            raise LevelMismatch("%s vs %s" % ((self.p, self.k), (other.p, other.k)))
        return other

    def __add__(self, other):
        o = self._same(other)
        return PruferTruncation(self.p, self.k, self.num + o.num)

    def __neg__(self):
        return PruferTruncation(self.p, self.k, -self.num)

    def scale(self, n):
        return PruferTruncation(self.p, self.k, n * self.num)

    def is_zero(self):
        return self.num == 0

    def order(self):
        n, o = self.num, 1
        while n % self.p ** self.k:
            n *= self.p
            o *= self.p
        return o

    def include(self, j):
        """Inclusion of level k into level j >= k."""
        if j < self.k:
            raise LevelMismatch("cannot include level %d into %d" % (self.k, j))
        return PruferTruncation(self.p, j, self.num * self.p ** (j - self.k))


@dataclass
class EndPrufer:
    """End of (1/p^k)Z/Z, each endomorphism stored by the image of 1/p^k."""
    p: int
    k: int
    images: list

    @property
    def order(self):
        return len(self.images)

    def apply(self, h, x):
        # phi(n g) = n phi(g)
        return h.scale(x.num)

    def compose(self, h1, h2):
        """phi1 o phi2 as the image of the generator."""
        return self.apply(h1, self.apply(h2, PruferTruncation.generator(self.p, self.k)))

    def add(self, h1, h2):
        return h1 + h2

    def evaluate(self, h):
        """The ring isomorphism End -> Z/p^k, phi -> a where phi(g) = a g."""
        return TruncatedPadic(self.p, self.k, h.num)

    def reduce(self, h):
        """Restriction to level k-1, which phi preserves; image of the smaller generator."""
        if self.k == 1:
            raise LevelMismatch("no level below 1")
        g_small = PruferTruncation.generator(self.p, self.k - 1).include(self.k)
        img = self.apply(h, g_small)
        # img lies in the image of the inclusion: its numerator is divisible by p
        assert img.num % self.p == 0
        return PruferTruncation(self.p, self.k - 1, img.num // self.p)

    def is_commutative_ring_iso(self):
        """Evaluation is bijective and respects +, composition and 1 (checked on all pairs)."""
        N = self.p ** self.k
        vals = [self.evaluate(h).value for h in self.images]
        if sorted(vals) != list(range(N)):
            return False
        if self.evaluate(PruferTruncation.generator(self.p, self.k)).value != 1:
            return False
        pairs = list(zip((h.num for h in self.images), vals))
        for a, va in pairs:
            for b, vb in pairs:
                # compose: phi_a(phi_b(g)) = phi_a(b g) = b (a g)
                ab, ba = (b * a) % N, (a * b) % N
                if ab != ba or ab != (va * vb) % N or (a + b) % N != (va + vb) % N:
                    return False
        return True


def _additive(N, h):
    """phi(x + g) = phi(x) + phi(g) for every x of Z/N, which forces additivity."""
    return all(((x + 1) * h) % N == (x * h + h) % N for x in range(N))


def end_prufer(p, k) -> EndPrufer:
    _check_prime(p)
    _check_level(k)
    images = []
    for h in PruferTruncation.elements(p, k):
        if not h.scale(p ** k).is_zero():
            continue
        if _additive(p ** k, h.num):
            images.append(h)
    return EndPrufer(p, k, images)


def end_prufer_tower(p, K):
    """Levels 1..K with their reduction maps checked against Z/p^k reduction."""
    tower = [end_prufer(p, k) for k in range(1, K + 1)]
    consistent = True
    for lo, hi in zip(tower, tower[1:]):
        for h in hi.images:
            if lo.evaluate(hi.reduce(h)) != hi.evaluate(h).reduce(lo.k):
                consistent = False
    return tower, consistent


def hom_count(p, k, q, l) -> int:
    """|Hom((1/p^k)Z/Z, (1/q^l)Z/Z)| by enumerating images of the generator.

    An image h is well defined exactly when p^k h = 0 in Z/q^l, i.e. h is a
    multiple of q^l / gcd(p^k, q^l); only those candidates are visited.
    """
    _check_prime(p)
    _check_prime(q)
    _check_level(k)
    _check_level(l)
    N, g = q ** l, p ** k
    step = N // gcd(g, N)
    # phi(m g_src) = m h is additive once it is well defined
    return sum(_additive(N, h) for h in range(0, N, step))


def hom_orthogonality(p, q, k) -> int:
    """Number of homs between level-k truncations; 0 when only the zero map exists."""
    c = hom_count(p, k, q, k)
    return 0 if c == 1 else c


# -- proxies for Q and Z[1/p] ---------------------------------------------------

def proxy_stage(m, a, bound):
    """Elements n / m^a with |n| <= bound of the stage (1/m^a)Z."""
    d = m ** a
    return [Fraction(n, d) for n in range(-bound, bound + 1)]


def torsion_free_homs(p, k, stage):
    """Images of 1/p^k in a torsion-free stage that give well-defined maps."""
    return [y for y in stage if p ** k * y == 0]


def hom_from_cyclic_stage(p, a, k):
    """Homs (1/p^a)Z -> (1/p^k)Z/Z, enumerated by the image of 1/p^a."""
    out = []
    for y in PruferTruncation.elements(p, k):
        # the source is infinite cyclic, so every image is allowed; check a window
        N = p ** k
        if all(((n + 1) * y.num) % N == (n * y.num + y.num) % N for n in range(-N, N)):
            out.append(y)
    return out


@dataclass
class EntryCheck:
    row: int
    col: int
    symbolic: str
    claim: str
    observed: dict
    matched: bool

    def as_dict(self):
        return {"row": self.row, "col": self.col, "symbolic": self.symbolic,
                "claim": self.claim, "observed": self.observed, "matched": self.matched}


@dataclass
class EndMatrixReport:
    primes: list
    level: int
    shape_ok: bool
    entries: list = field(default_factory=list)

    @property
    def all_matched(self):
        return self.shape_ok and all(e.matched for e in self.entries)

    def as_dict(self):
        return {"primes": list(self.primes), "level": self.level, "shape_ok": self.shape_ok,
                "all_matched": self.all_matched,
                "entries": [e.as_dict() for e in sorted(self.entries, key=lambda e: (e.row, e.col))]}


def verify_end_matrix_Z(P, k=4) -> EndMatrixReport:
    ps = sorted({int(p) for p in P})
    for p in ps:
        _check_prime(p)
    _check_level(k)
    W = integer_window(ps)
    phi = height_filtration(W)
    pres = end_ring_of_TPhi(W, phi)
    sym = pres.rendered("Z")
    M = prod(ps) if ps else 1
    stage = proxy_stage(M, k, 64)

    entries = []
    # (0, 0): Q through a torsion-free stage; multiplication maps are injective
    tf = all(n * x != 0 for x in stage if x for n in range(1, 8))
    entries.append(EntryCheck(0, 0, sym[(0, 0)], "Q-proxy stage is torsion free",
                              {"stage": "(1/%d^%d)Z" % (M, k), "torsion_free": tf}, tf))
    if not ps:
        return EndMatrixReport(ps, k, pres.size() == 1, entries)

    shape = matches_dimension_one_shape(pres)
    # (1, 1): End of the sum of truncated Pruefer groups is the product of the Z/p^k
    ends = {p: end_prufer(p, k) for p in ps}
    cross = {"%d,%d" % (p, q): hom_orthogonality(p, q, k) for p in ps for q in ps if p != q}
    orders = {str(p): ends[p].order for p in ps}
    iso = {str(p): ends[p].is_commutative_ring_iso() for p in ps}
    ok = (all(ends[p].order == p ** k for p in ps) and all(iso.values())
          and all(v == 0 for v in cross.values()))
    entries.append(EntryCheck(1, 1, sym[(1, 1)], "prod Z/p^%d" % k,
                              {"orders": orders, "ring_iso": iso, "cross_homs": cross}, ok))
    # (0, 1): torsion source, torsion-free target
    counts = {str(p): len(torsion_free_homs(p, k, stage)) for p in ps}
    ok = all(c == 1 for c in counts.values())
    entries.append(EntryCheck(0, 1, sym[(0, 1)], "only the zero map",
                              {"hom_counts": counts}, ok))
    # (1, 0): stage counts p^k for a = 1..k, restriction image of size p^(k-1)
    stages, restr = {}, {}
    ok = True
    for p in ps:
        per = []
        for a in range(1, k + 1):
            hs = hom_from_cyclic_stage(p, a, k)
            per.append(len(hs))
            ok &= len(hs) == p ** k
        stages[str(p)] = per
        # restricting from stage a to a-1 multiplies the image by p
        img = {y.scale(p).num for y in hom_from_cyclic_stage(p, k, k)}
        restr[str(p)] = len(img)
        ok &= len(img) == p ** (k - 1)
    entries.append(EntryCheck(1, 0, sym[(1, 0)], "p^%d homs at every stage a <= %d" % (k, k),
                              {"stage_counts": stages, "restriction_image": restr}, ok))
    return EndMatrixReport(ps, k, shape, entries)
