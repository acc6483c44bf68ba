"""Small dense linear algebra over ``Fraction`` (or any exact field).

Matrices are tuples of row tuples, vectors are tuples.  Sizes here are tiny
(d <= 8 or so), so plain Python loops are fine.
"""

from fractions import Fraction


def identity(d, one=Fraction(1)):
    zero = one - one
    return tuple(tuple(one if i == j else zero for j in range(d)) for i in range(d))


def mat_mul(a, b):
    cols = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def mat_vec(a, v):
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def mat_pow(a, n):
    result = identity(len(a), one=_one_like(a))
    base = a
    while n:
        if n & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        n >>= 1
    return result


def _one_like(a):
    x = a[0][0]
    return x ** 0 if not isinstance(x, float) else 1.0


def vec_add(u, v):
    return tuple(x + y for x, y in zip(u, v))


def vec_sub(u, v):
    return tuple(x - y for x, y in zip(u, v))


def vec_scale(c, v):
    return tuple(c * x for x in v)


def norm_inf(v):
    return max(abs(x) for x in v)


def op_norm_inf(a):
    """Operator norm induced by the max-norm: the largest absolute row sum."""
    return max(sum(abs(x) for x in row) for row in a)


def _row_echelon(rows):
    """Gaussian elimination in place; returns the rank and the sign of the row swaps."""
    m = [list(r) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    rank = 0
    sign = 1
    for col in range(ncols):
        pivot = next((r for r in range(rank, nrows) if m[r][col] != 0), None)
        if pivot is None:
            continue
        if pivot != rank:
            m[rank], m[pivot] = m[pivot], m[rank]
            sign = -sign
        p = m[rank][col]
        for r in range(rank + 1, nrows):
            if m[r][col] != 0:
                f = m[r][col] / p
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
        if rank == nrows:
            break
    return m, rank, sign


def rank(rows):
    if not rows:
        return 0
    return _row_echelon(rows)[1]


def det(a):
    m, r, sign = _row_echelon(a)
    if r < len(a):
        return m[0][0] * 0
    out = m[0][0] ** 0 * sign
    for i in range(len(a)):
        out *= m[i][i]
    return out


def solve(a, b):
    """Solve ``a x = b`` exactly (``a`` square, invertible)."""
    d = len(a)
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    for col in range(d):
        pivot = next((r for r in range(col, d) if aug[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(d):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(row[d] for row in aug)


def inverse(a):
    d = len(a)
    eye = identity(d, one=_one_like(a))
    cols = [solve(a, tuple(eye[i][j] for i in range(d))) for j in range(d)]
    return tuple(tuple(cols[j][i] for j in range(d)) for i in range(d))


def to_fraction(x):
    """Parse ``'a/b'``, a decimal string, an int or a Fraction into a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(str(x).strip())
