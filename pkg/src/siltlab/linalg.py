"""Exact dense linear algebra over Q (Fraction) or a prime field F_p.

Matrices are lists of rows.  A matrix of shape (m, n) maps column vectors of
length n to length m.  Pieces in this package are small, so dense Gaussian
elimination is plenty.
"""
from fractions import Fraction


class Field:
    """Q when char == 0, F_p otherwise."""

    def __init__(self, char: int = 0):
        if char < 0 or char == 1:
            raise ValueError("characteristic must be 0 or a prime")
        if char and not _is_prime(char):
            raise ValueError("%d is not prime" % char)
        self.char = char

    def __eq__(self, other):
        return isinstance(other, Field) and other.char == self.char

    def __hash__(self):
        return hash(("field", self.char))

    def __repr__(self):
        return "Q" if self.char == 0 else "F%d" % self.char

    def __call__(self, x):
        if self.char == 0:
            return Fraction(x)
        if isinstance(x, Fraction):
            return (x.numerator * pow(x.denominator, -1, self.char)) % self.char
        return int(x) % self.char

    def inv(self, x):
        if self.char == 0:
            return 1 / Fraction(x)
        return pow(x, -1, self.char)

    def reduce(self, x):
        return x % self.char if self.char else x


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def zeros(m, n, K: Field):
    z = K(0)
    return [[z] * n for _ in range(m)]


def matmul(A, B, K: Field):
    if not A or not B:
        rows = len(A)
        cols = len(B[0]) if B else 0
        return zeros(rows, cols, K)
    n = len(B[0])
    out = []
    for row in A:
        acc = [K(0)] * n
        for k, a in enumerate(row):
            if a:
                bk = B[k]
                for j in range(n):
                    if bk[j]:
                        acc[j] = K.reduce(acc[j] + a * bk[j])
        out.append(acc)
    return out


def is_zero_matrix(A) -> bool:
    return all(not x for row in A for x in row)


def rref(A, K: Field):
    """Reduced row echelon form; returns (matrix, pivot columns)."""
    M = [[K(x) for x in row] for row in A]
    m = len(M)
    n = len(M[0]) if M else 0
    pivots = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        piv = next((i for i in range(r, m) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = K.inv(M[r][c])
        M[r] = [K.reduce(x * inv) for x in M[r]]
        for i in range(m):
            if i != r and M[i][c]:
                fac = M[i][c]
                M[i] = [K.reduce(a - fac * b) for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    return M, pivots


def rank(A, K: Field) -> int:
    if not A or not A[0]:
        return 0
    return len(rref(A, K)[1])


def kernel_basis(A, n: int, K: Field):
    """Basis of {v in K^n : A v = 0}; A has n columns (possibly zero rows)."""
    if not A:
        return [[K(1) if i == j else K(0) for i in range(n)] for j in range(n)]
    R, piv = rref(A, K)
    free = [c for c in range(n) if c not in piv]
    basis = []
    for fc in free:
        v = [K(0)] * n
        v[fc] = K(1)
        for r, pc in enumerate(piv):
            v[pc] = K.reduce(-R[r][fc])
        basis.append(v)
    return basis


def columns(A, n):
    return [[row[j] for row in A] for j in range(n)]


def complement_in(sub, vectors, K: Field):
    """Pick vectors that are independent modulo span(sub), greedily in order."""
    chosen = []
    current = [list(v) for v in sub]
    r = rank(current, K) if current else 0
    for v in vectors:
        trial = current + [list(v)]
        rt = rank(trial, K)
        if rt > r:
            chosen.append(v)
            current = trial
            r = rt
    return chosen
