"""Thue-Morse sequence, the golden ratio and the Komornik-Loreti constant.

Both constants are returned as certified enclosures with rational endpoints.
The Komornik-Loreti bisection evaluates the truncated series exactly at dyadic
points, so the enclosure is rigorous without any rounding-error slack.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt

from .errors import PrecisionExhausted

# below this the exact bisection gets needlessly slow; nothing in the package needs it
MIN_PRECISION = Fraction(1, 10**200)


@dataclass(frozen=True)
class Enclosure:
    """Closed interval ``[lo, hi]`` certified to contain a constant."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("enclosure with lo > hi")

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return (self.lo + self.hi) / 2

    def __contains__(self, x):
        return self.lo <= x <= self.hi

    def disjoint(self, other):
        return self.hi < other.lo or other.hi < self.lo

    def nested_in(self, other):
        return other.lo <= self.lo and self.hi <= other.hi

    def __str__(self):
        digits = max(6, min(60, int(-_log10(self.width)) + 3)) if self.width else 20
        return f"[{_fmt(self.lo, digits)}, {_fmt(self.hi, digits)}]"


def _log10(x):
    x = Fraction(x)
    return (x.numerator.bit_length() - x.denominator.bit_length()) * 0.30103


def _fmt(x, digits):
    """Decimal text for a Fraction with ``digits`` places (truncated, not rounded)."""
    x = Fraction(x)
    sign = "-" if x < 0 else ""
    x = abs(x)
    scaled = x.numerator * 10**digits // x.denominator
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def thue_morse(n):
    """Return the ``n``-th Thue-Morse bit, 1-indexed so that ``thue_morse(1) == 0``."""
    if n < 1:
        raise ValueError("thue_morse index must be >= 1")
    return bin(n - 1).count("1") & 1


def golden_ratio(precision=Fraction(1, 10**12)):
    """Certified enclosure of (1 + sqrt 5)/2 with width <= ``precision``."""
    return _golden_ratio(Fraction(precision))


@lru_cache(maxsize=64)
def _golden_ratio(precision):
    if precision <= 0:
        raise ValueError("precision must be positive")
    # oversample: the square root is cheap and a narrow enclosure keeps
    # comparisons near G from needing a refinement round
    k = 1
    while Fraction(1, 2 ** (k + 1)) > precision / 64:
        k += 1
    # floor(2^k sqrt 5) <= 2^k sqrt 5 < floor(...) + 1
    s = isqrt(5 * 4**k)
    scale = 2 ** (k + 1)
    return Enclosure(Fraction(2**k + s, scale), Fraction(2**k + s + 1, scale))


@lru_cache(maxsize=None)
def _tm_coeffs(n_terms):
    return tuple(thue_morse(n) for n in range(1, n_terms + 1))


def kl_partial_sum(x, n_terms):
    """Exact value of ``sum_{n=1}^{N} m_n x^(1-n)`` for rational ``x``."""
    y = 1 / Fraction(x)
    acc = Fraction(0)
    # Horner in y = 1/x over coefficients m_1..m_N
    for bit in reversed(_tm_coeffs(n_terms)):
        acc = acc * y + bit
    return acc


def kl_tail_bound(x, n_terms):
    """Upper bound on the omitted tail ``sum_{n>N} m_n x^(1-n)`` (the tail is >= 0)."""
    y = 1 / Fraction(x)
    return y**n_terms / (1 - y)


def _kl_side(x, n_terms):
    """+1 if the full series exceeds 1 at ``x`` (root lies right of x), -1 if below, 0 if undecided."""
    s = kl_partial_sum(x, n_terms)
    if s > 1:
        return 1
    if s + kl_tail_bound(x, n_terms) < 1:
        return -1
    return 0


def komornik_loreti(precision=Fraction(1, 10**12)):
    """Certified enclosure of the Komornik-Loreti constant with width <= ``precision``.

    The defining series is strictly decreasing in x > 1.  Bisection starts on
    [3/2, 2]; each midpoint is classified with the partial sum and its tail
    bracket, raising the number of terms whenever the bracket straddles 1.
    """
    return _komornik_loreti(Fraction(precision))


@lru_cache(maxsize=64)
def _komornik_loreti(precision):
    if precision <= 0:
        raise ValueError("precision must be positive")
    if precision < MIN_PRECISION:
        raise PrecisionExhausted(f"precision below supported floor {float(MIN_PRECISION):g}")
    lo, hi = Fraction(3, 2), Fraction(2)
    n_terms = 8
    while kl_tail_bound(lo, n_terms) > precision / 4:
        n_terms += 8
    if _kl_side(lo, n_terms) != 1 or _kl_side(hi, n_terms) != -1:
        raise AssertionError("initial bracket lost the sign change")
    while hi - lo > precision:
        mid = (lo + hi) / 2
        side = _kl_side(mid, n_terms)
        while side == 0:
            n_terms *= 2
            if n_terms > 1 << 16:
                raise PrecisionExhausted("tail bracket never separated from 1")
            side = _kl_side(mid, n_terms)
        if side > 0:
            lo = mid
        else:
            hi = mid
    return Enclosure(lo, hi)
