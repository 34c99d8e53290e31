"""Integers extended by -inf and +inf with saturating arithmetic.

Values are plain Python ints, or the floats ``INF`` / ``NEG_INF``.  Floats
order correctly against ints and saturate under addition, which is all the
package needs (no inf - inf ever arises in the code paths below).
"""
import math

INF = math.inf
NEG_INF = -math.inf


def is_finite(v) -> bool:
    return v != INF and v != NEG_INF


def normalize(v):
    """Coerce to int when finite, keep the sentinels otherwise."""
    if isinstance(v, str):
        return parse(v)
    if is_finite(v):
        if int(v) != v:
            raise ValueError("non-integral value %r" % (v,))
        return int(v)
    return v


def fmt(v) -> str:
    if v == INF:
        return "+inf"
    if v == NEG_INF:
        return "-inf"
    return str(int(v))


def parse(s: str):
    t = s.strip().lower()
    if t in ("inf", "+inf", "oo", "+oo", "∞", "+∞"):
        return INF
    if t in ("-inf", "-oo", "-∞", "−∞"):
        return NEG_INF
    return int(t.replace("−", "-"))


def add(a, b):
    """Saturating sum; mixed infinities are rejected."""
    if (a == INF and b == NEG_INF) or (a == NEG_INF and b == INF):
        raise ValueError("inf + -inf is undefined")
    return normalize(a + b)


def neg(a):
    return normalize(-a)


# Alias so that callers can annotate; the runtime type is int | float.
ExtendedInt = float
