"""Reference implementations that share no code with the package.

The 1D oracle uses the classical lexicographic characterisation of unique
expansions in a non-integer base: with digits x_k in {0,1} and base
beta in (1, 2), the sequence x is the only expansion of its value iff for
every k

    x_k = 0  =>  x_{k+1} x_{k+2} ...  <  alpha(beta)
    x_k = 1  =>  (1-x_{k+1}) (1-x_{k+2}) ...  <  alpha(beta)

where alpha(beta) is the quasi-greedy expansion of 1.  For beta > 2 every
sequence is a unique expansion.
"""

from fractions import Fraction
from itertools import product


def quasi_greedy(beta, length):
    """First ``length`` digits of the quasi-greedy expansion of 1 in base beta in (1, 2)."""
    out = []
    rem = Fraction(1)
    for k in range(1, length + 1):
        place = beta ** -k
        # quasi-greedy: take 1 only when strictly needed to stay infinite
        if rem > place:
            out.append(1)
            rem -= place
        else:
            out.append(0)
    return out


def _periodic(word, start, length):
    n = len(word)
    return [word[(start + i) % n] for i in range(length)]


def _less(seq, alpha):
    """seq < alpha lexicographically on the compared prefix; None when undecided."""
    for s, t in zip(seq, alpha):
        if s != t:
            return s < t
    return None


def lexicographic_unique(word, lam, horizon=400):
    """Is the purely periodic address word^inf unique for M = (lam), u = 1?

    ``word`` is over {-1, +1}; ``lam`` a Fraction.  Returns True/False, or
    None when the comparison with alpha is undecided within ``horizon``.
    """
    lam = abs(Fraction(lam))
    beta = 1 / lam
    if beta > 2:
        return True
    if beta == 2:
        # binary: unique iff not eventually constant
        return len(set(word)) > 1
    alpha = quasi_greedy(beta, horizon)
    bits = [(a + 1) // 2 for a in word]
    for k in range(len(bits)):
        tail = _periodic(bits, k + 1, horizon)
        if bits[k] == 1:
            tail = [1 - t for t in tail]
        r = _less(tail, alpha)
        if r is None:
            return None
        if not r:
            return False
    return True


def signed_1d_unique(word, lam, horizon=400):
    """Uniqueness for M = (lam) with lam possibly negative.

    For lam < 0, sum a_k lam^k = sum (a_k (-1)^k) |lam|^k, so flipping every
    odd digit reduces to the positive case (the period may double).
    """
    lam = Fraction(lam)
    if lam > 0:
        return lexicographic_unique(word, lam, horizon)
    w = list(word) * (2 if len(word) % 2 else 1)
    flipped = [a if k % 2 == 0 else -a for k, a in enumerate(w)]
    return lexicographic_unique(flipped, -lam, horizon)


def oracle_count_1d(lam, n):
    """Number of words w of length n with w^inf unique; raises if any case is undecided."""
    count = 0
    for w in product((-1, 1), repeat=n):
        r = signed_1d_unique(w, lam)
        if r is None:
            raise RuntimeError(f"oracle undecided on {w}")
        count += r
    return count


def oracle_count_diag_pm(lam, n):
    """Count for M = diag(-lam, lam), u = (1, 1).

    The two coordinates add and subtract to 2 sum_{k even} a_k lam^k and
    2 sum_{k odd} a_k lam^k, so a word is unique iff its even-indexed and
    odd-indexed subsequences are unique for the 1D base lam^2.
    """
    lam2 = Fraction(lam) ** 2
    count = 0
    for w in product((-1, 1), repeat=n):
        ww = list(w) * (2 if n % 2 else 1)
        even, odd = ww[0::2], ww[1::2]
        ok = [lexicographic_unique(even, lam2), lexicographic_unique(odd, lam2)]
        if None in ok:
            raise RuntimeError(f"oracle undecided on {w}")
        count += all(ok)
    return count


def series_point(matrix, u, head, period, terms):
    """Partial sum of sum a_k M^k u with plain Python floats (no numpy)."""
    d = len(u)
    v = [float(x) for x in u]
    m = [[float(x) for x in row] for row in matrix]
    acc = [0.0] * d
    for k in range(terms):
        a = head[k] if k < len(head) else period[(k - len(head)) % len(period)]
        acc = [x + a * y for x, y in zip(acc, v)]
        v = [sum(m[i][j] * v[j] for j in range(d)) for i in range(d)]
    return acc
