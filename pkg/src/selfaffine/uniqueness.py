"""Certified unique addresses by branch-and-bound over difference sequences.

Two addresses a != b give the same point iff, from their first disagreement
m on, the differences c_k = a_{m+k} - b_{m+k} in {0, 2 a_{m+k}} (c_0 != 0)
satisfy sum_k c_k M^k u = 0.  The search walks these c sequences keeping the
normalized state

    z_j = M^{-j} sum_{k<j} c_k M^k u,     z_{j+1} = M^{-1} (z_j + c_j u),

so a surviving branch must be able to cancel z_j with its remaining digits:
-z_j = sum_{k>=0} c_{j+k} M^k u.  For a handful of directions w the
remaining sum is confined to an interval whose ends add up the positive
(resp. negative) terms 2 a_{m+j+k} <w, M^k u> allowed by the digit signs;
a branch whose state leaves any interval is dead.

In exact (rational) mode z_j = 0 is a finite collision, and a repeated
(state, phase) pair along one branch closes into a periodic collision.
Trees that die out everywhere certify uniqueness; a branch alive at the
depth cap leaves the answer undetermined.
"""

import enum
import os
import sys as _sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import gcd

import numpy as np

from . import linalg
from .attractor import Address, exact_limit, orbit, tail_bound, tail_bounds
from .errors import BudgetError, QUndefinedError, SelfAffineError
from .spectral import IrrationalAngle

DEFAULT_DEPTH_CAP = 64
DEFAULT_NODE_BUDGET = 10**7
# the search recurses once per level
MAX_DEPTH_CAP = 20000
MAX_ENUM_LENGTH = 22
FLOAT_ZERO = 1e-12
# relative guard on float-evaluated interval ends
ROUNDING_GUARD = 1e-12


class Status(enum.Enum):
    UNIQUE = "UniqueCertified"
    COLLISION = "CollisionFound"
    UNDETERMINED = "Undetermined"


@dataclass
class ShiftStats:
    start: int
    status: Status
    nodes: int = 0
    max_depth: int = 0
    pruned: int = 0
    memo_hits: int = 0
    reason: str = ""

    def to_dict(self):
        return {"start": self.start, "status": self.status.value, "nodes": self.nodes,
                "max_depth": self.max_depth, "pruned": self.pruned,
                "memo_hits": self.memo_hits, "reason": self.reason}


@dataclass
class Certification:
    status: Status
    address: Address
    depth_cap: int
    witness: Address | None = None
    witness_kind: str | None = None
    shifts: list = field(default_factory=list)
    exact: bool = True

    @property
    def unique(self):
        return self.status is Status.UNIQUE

    def to_dict(self):
        return {
            "address": str(self.address),
            "status": self.status.value,
            "depth_cap": self.depth_cap,
            "mode": "exact" if self.exact else "float",
            "witness": None if self.witness is None else str(self.witness),
            "witness_kind": self.witness_kind,
            "shifts": [s.to_dict() for s in self.shifts],
        }


# ---------------------------------------------------------------- per-system data

def _directions(d):
    """Coordinate axes and the pairwise sums/differences e_i +- e_j."""
    dirs = [np.eye(d)[i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            for s in (1.0, -1.0):
                w = np.zeros(d)
                w[i], w[j] = 1.0, s
                dirs.append(w)
    return np.array(dirs)


def _common_denominator(values):
    den = 1
    for x in values:
        den = den * x.denominator // gcd(den, x.denominator)
    return den


class _Engine:
    """Quantities shared by every search on one system.

    Exact states are kept as a reduced pair (integer vector y, integer den)
    with z = y / den; writing M^{-1} = K / D and u = U / E with integer K, U,
    one step is y' = K (E y + c den U), den' = D E den.
    """

    def __init__(self, sys):
        self.sys = sys
        self.exact = sys.exact
        self.d = sys.d
        if sys.exact:
            minv = linalg.inverse(sys.matrix)
            dd = _common_denominator(x for row in minv for x in row)
            ee = _common_denominator(sys.u)
            self.k_int = tuple(tuple(int(x * dd) for x in row) for row in minv)
            self.u_int = tuple(int(x * ee) for x in sys.u)
            self.d_int, self.e_int = dd, ee
        self.minv_f = np.linalg.inv(sys.array)
        self.minv_u_f = self.minv_f @ sys.u_array
        self.dirs = _directions(self.d)
        self.dirs_py = tuple(tuple(float(x) for x in w) for w in self.dirs)
        t = tail_bounds(sys, 0)[0]
        # terms kept in the interval sums; the rest is covered by 2*T_K
        k = 16
        while True:
            tk = tail_bound(sys.as_float(), k)
            if tk <= 1e-14 * float(t) or k >= 4096:
                break
            k *= 2
        self.n_terms = k
        vecs = orbit(sys.as_float(), k)
        self.proj = vecs @ self.dirs.T  # (K, W)
        l1 = np.abs(self.dirs).sum(axis=1)
        self.tail_slack = 2.0 * float(tail_bound(sys.as_float(), k)) * l1
        self.t0 = float(t)

    def step(self, y, den, c):
        """Exact successor state of (y, den) under digit difference c, reduced."""
        ee = self.e_int
        if c:
            v = [ee * yi + c * den * ui for yi, ui in zip(y, self.u_int)]
        else:
            v = [ee * yi for yi in y]
        ny = [sum(kij * vj for kij, vj in zip(row, v)) for row in self.k_int]
        nden = self.d_int * ee * den
        g = nden
        for x in ny:
            g = gcd(g, x)
        return tuple(x // g for x in ny), nden // g

    def phase_bounds(self, symbols):
        """Allowed intervals for <w, z> at each phase (rows of ``symbols``, next K symbols each).

        The remainder sum_k c_k M^k u with c_k in {0, 2 s_k} has <w, .> within
        [sum of negative terms, sum of positive terms]; the state must equal
        minus the remainder.
        """
        terms = 2.0 * np.asarray(symbols, float)[:, :, None] * self.proj[None, :, :]
        pos = np.where(terms > 0, terms, 0.0).sum(axis=1)
        neg = np.where(terms < 0, terms, 0.0).sum(axis=1)
        guard = ROUNDING_GUARD * np.abs(terms).sum(axis=1) + self.tail_slack + 1e-300
        return (-pos - guard), (-neg + guard)


@lru_cache(maxsize=64)
def _engine(sys):
    return _Engine(sys)


def _phase_table(engine, a):
    """Interval bounds for every canonical phase of ``a``, as lists of float tuples."""
    ell, p = len(a.head), len(a.period)
    k = engine.n_terms
    n = ell + p
    syms = np.array([a[i] for i in range(n + k)], dtype=float)
    rows = np.lib.stride_tricks.sliding_window_view(syms, k)[:n]
    lo, hi = engine.phase_bounds(rows)
    return [tuple(r) for r in lo.tolist()], [tuple(r) for r in hi.tolist()]


def _canon(pos, ell, p):
    return pos if pos < ell else ell + (pos - ell) % p


# ---------------------------------------------------------------- search

class _Found(Exception):
    def __init__(self, kind, digits, cycle_start=None):
        self.kind = kind
        self.digits = digits
        self.cycle_start = cycle_start


class _Capped(Exception):
    pass


def _search_shift(engine, a, m, depth_cap, node_budget, lo_tab, hi_tab):
    """Branch-and-bound for collisions whose first differing position is m.

    Returns (stats, found) with ``found`` a ``_Found`` or None.
    """
    ell, p = len(a.head), len(a.period)
    if depth_cap > MAX_DEPTH_CAP:
        raise ValueError(f"depth cap {depth_cap} exceeds {MAX_DEPTH_CAP}")
    if _sys.getrecursionlimit() < depth_cap + 500:
        _sys.setrecursionlimit(depth_cap + 500)
    syms = [a[i] for i in range(ell + p)]
    exact = engine.exact
    dirs = engine.dirs_py
    stats = ShiftStats(m, Status.UNIQUE)
    digits = []
    path = {}
    dead = {}  # (state, phase) -> height of its fully pruned subtree
    zero_tol = FLOAT_ZERO * max(1.0, engine.t0)
    minv_f = [tuple(r) for r in engine.minv_f.tolist()]
    minv_u_f = engine.minv_u_f.tolist()

    def alive(zf, ph):
        lo, hi = lo_tab[ph], hi_tab[ph]
        for w, l, h in zip(dirs, lo, hi):
            t = sum(wi * zi for wi, zi in zip(w, zf))
            if t < l or t > h:
                return False
        return True

    def visit(state, zf, j):
        # returns the height of the subtree below this (alive) node
        stats.nodes += 1
        if stats.nodes > node_budget:
            raise BudgetError("node budget exhausted")
        if j > stats.max_depth:
            stats.max_depth = j
        ph = _canon(m + j, ell, p)
        if exact:
            key = (state, ph)
            if key in path:
                raise _Found("periodic", list(digits), cycle_start=path[key])
            h = dead.get(key)
            if h is not None:
                stats.memo_hits += 1
                if j + h >= depth_cap:
                    raise _Capped
                return h
        if j >= depth_cap:
            raise _Capped
        sym = syms[ph]
        children = []
        if exact:
            y, den = state
            for c in (0, 2 * sym):
                ny, nden = engine.step(y, den, c)
                children.append((c, (ny, nden), [yi / nden for yi in ny]))
        else:
            base = [sum(r * z for r, z in zip(row, zf)) for row in minv_f]
            for c in (0, 2 * sym):
                children.append((c, None, [b + c * v for b, v in zip(base, minv_u_f)]))
        # likelier collision first: the child closer to the origin
        if max(map(abs, children[1][2])) < max(map(abs, children[0][2])):
            children.reverse()
        height = 0
        if exact:
            path[key] = j
        nph = _canon(m + j + 1, ell, p)
        for c, nstate, nzf in children:
            digits.append(c)
            if exact:
                if not any(nstate[0]):
                    raise _Found("finite", list(digits))
            elif max(map(abs, nzf)) <= zero_tol:
                raise _Found("finite", list(digits))
            if alive(nzf, nph):
                height = max(height, 1 + visit(nstate, nzf, j + 1))
            else:
                stats.pruned += 1
            digits.pop()
        if exact:
            del path[key]
            dead[key] = height
        return height

    c0 = 2 * syms[_canon(m, ell, p)]
    digits.append(c0)
    try:
        if exact:
            d = engine.d
            z1 = engine.step((0,) * d, 1, c0)
            z1f = [yi / z1[1] for yi in z1[0]]
        else:
            z1 = None
            z1f = [c0 * v for v in minv_u_f]
        stats.nodes += 1
        if alive(z1f, _canon(m + 1, ell, p)):
            visit(z1, z1f, 1)
        else:
            stats.pruned += 1
    except _Found as f:
        stats.status = Status.COLLISION
        return stats, f
    except _Capped:
        stats.status = Status.UNDETERMINED
        stats.reason = f"branch alive at depth cap {depth_cap}"
        return stats, None
    except BudgetError:
        stats.status = Status.UNDETERMINED
        stats.reason = f"node budget {node_budget} exhausted"
        return stats, None
    return stats, None


def _witness_address(a, m, found):
    """Turn collision digits into the colliding address b = a - c."""
    ell, p = len(a.head), len(a.period)
    c = found.digits
    if found.kind == "finite":
        end = m + len(c)
        head_len = max(end, ell)
        head_len += (-(head_len - ell)) % p  # keep phase alignment trivial
        head = [a[i] - (c[i - m] if m <= i < end else 0) for i in range(head_len)]
        period = [a[i] for i in range(head_len, head_len + p)]
        return Address(head, period)
    # periodic: the digits from cycle_start repeat forever
    j1 = found.cycle_start
    cyc = c[j1:]
    start = m + j1
    head = [a[i] - (c[i - m] if i >= m else 0) for i in range(start)]
    period = [a[start + i] - cyc[i] for i in range(len(cyc))]
    return Address(head, period)


def certify_address(sys, a, depth_cap=DEFAULT_DEPTH_CAP, node_budget=DEFAULT_NODE_BUDGET):
    """Decide (soundly, possibly with Undetermined) whether ``a`` is a unique address."""
    if not a.is_periodic:
        raise SelfAffineError("per-address certification requires eventually periodic input")
    ell, p = len(a.head), len(a.period)
    if depth_cap < ell + p:
        raise ValueError(f"depth cap {depth_cap} < preperiod + period = {ell + p}")
    engine = _engine(sys)
    lo, hi = _phase_table(engine, a)
    shifts = []
    outcome = Status.UNIQUE
    witness = kind = None
    for m in range(ell + p):
        stats, found = _search_shift(engine, a, m, depth_cap, node_budget, lo, hi)
        shifts.append(stats)
        if stats.status is Status.COLLISION:
            outcome = Status.COLLISION
            witness = _witness_address(a, m, found)
            kind = found.kind
            break
        if stats.status is Status.UNDETERMINED:
            outcome = Status.UNDETERMINED
    return Certification(outcome, a, depth_cap, witness, kind, shifts, sys.exact)


def verify_witness(sys, cert):
    """Replay a collision witness: exact equality, or agreement within 2*T_cap in float mode."""
    if cert.witness is None:
        return False
    if cert.witness == cert.address:
        return False
    if sys.exact:
        return exact_limit(sys, cert.address) == exact_limit(sys, cert.witness)
    x = np.asarray(exact_limit(sys, cert.address), float)
    y = np.asarray(exact_limit(sys, cert.witness), float)
    return float(np.abs(x - y).max()) <= 2 * float(tail_bound(sys, cert.depth_cap))


# ---------------------------------------------------------------- enumeration

@dataclass
class Enumeration:
    length: int
    count: int
    words: list
    undetermined: int
    collisions: int

    def to_dict(self):
        return {"n": self.length, "N_n": self.count, "undetermined": self.undetermined,
                "collisions": self.collisions,
                "words": ["".join("+" if x > 0 else "-" for x in w) for w in self.words]}


def _shift0_status(sys, word, depth_cap, node_budget):
    a = Address((), word)
    engine = _engine(sys)
    lo, hi = _phase_table(engine, a)
    stats, _ = _search_shift(engine, a, 0, depth_cap, node_budget, lo, hi)
    return stats.status


def _chunk_statuses(args):
    sys, words, depth_cap, node_budget = args
    return [_shift0_status(sys, w, depth_cap, node_budget) for w in words]


def _threads():
    try:
        return max(1, int(os.environ.get("SELFAFFINE_THREADS", "1")))
    except ValueError:
        return 1


def enumerate_unique_periodic(sys, n, depth_cap=DEFAULT_DEPTH_CAP, node_budget=DEFAULT_NODE_BUDGET,
                              workers=None):
    """Count words w of length n with w^infinity certified unique.

    The shift-m search for w is the shift-0 search for its m-th rotation, and
    the search for -w mirrors that of w, so only one shift-0 search per
    sign class of words is run.
    """
    if n < 1:
        raise ValueError("length must be >= 1")
    if n > MAX_ENUM_LENGTH:
        raise BudgetError(f"2^{n} words exceeds the enumeration budget (n <= {MAX_ENUM_LENGTH})")
    reps = [w for w in product((-1, 1), repeat=n) if w[0] == 1]
    workers = workers or _threads()
    if workers > 1 and len(reps) > 64:
        size = -(-len(reps) // (workers * 4))
        chunks = [reps[i:i + size] for i in range(0, len(reps), size)]
        with ProcessPoolExecutor(workers) as ex:
            results = [s for part in ex.map(_chunk_statuses,
                                            [(sys, c, depth_cap, node_budget) for c in chunks])
                       for s in part]
    else:
        results = _chunk_statuses((sys, reps, depth_cap, node_budget))
    shift0 = {}
    for w, s in zip(reps, results):
        shift0[w] = s
        shift0[tuple(-x for x in w)] = s
    words, undetermined, collisions = [], 0, 0
    for w in product((-1, 1), repeat=n):
        sts = {shift0[w[i:] + w[:i]] for i in range(n)}
        if Status.COLLISION in sts:
            collisions += 1
        elif Status.UNDETERMINED in sts:
            undetermined += 1
        else:
            words.append(w)
    words.sort()
    return Enumeration(n, len(words), words, undetermined, collisions)


@dataclass(frozen=True)
class EntropyEstimate:
    slope: float
    intercept: float
    residual: float
    lengths: tuple
    label: str = "symbolic-entropy proxy (slope of log2 N_n); not the Hausdorff dimension"

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual,
                "lengths": list(self.lengths), "label": self.label}


def entropy_estimate(counts):
    """Least-squares slope of log2 N_n against n.

    ``counts`` maps n -> N_n (or is a sequence of (n, N_n) pairs); at least
    four consecutive lengths, all counts positive.
    """
    items = sorted(dict(counts).items())
    if len(items) < 4:
        raise ValueError("need at least 4 counts")
    ns = [n for n, _ in items]
    if ns != list(range(ns[0], ns[0] + len(ns))):
        raise ValueError("lengths must be consecutive")
    if any(c <= 0 for _, c in items):
        raise ValueError("zero count: entropy proxy undefined")
    x = np.array(ns, float)
    y = np.log2([c for _, c in items])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return EntropyEstimate(float(slope), float(intercept), resid, tuple(ns))


# ---------------------------------------------------------------- reduction helpers

def _imag_sign(angle, j):
    """Sign of sin(j * angle) for a RationalPi angle, by integer arithmetic."""
    t = (j * angle.p) % (2 * angle.s)
    if t == 0 or t == angle.s:
        return 0
    return 1 if t < angle.s else -1


def constrained_digits(spec, horizon):
    """Digits 0..horizon forced by the imaginary parts of kappa_i^j.

    Position j is free (``None``) iff every Im(kappa_i^j) vanishes, which is
    iff q divides j; otherwise the digit is the sign of the first non-zero
    Im(kappa_i^j) in block order.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if any(isinstance(b.angle, IrrationalAngle) for b in spec.blocks):
        raise QUndefinedError("constrained digits need rational angles")
    out = []
    for j in range(horizon + 1):
        digit = None
        for b in spec.blocks:
            if b.angle is None:
                continue
            s = _imag_sign(b.angle, j)
            if s:
                digit = s
                break
        out.append(digit)
    return out


def reduce_subsequence(a, q, j):
    """The address a_j a_{q+j} a_{2q+j} ... (for the system M^q)."""
    if not 0 <= j < q:
        raise ValueError("need 0 <= j < q")
    ell = len(a.head)
    if a.period is None:
        return Address(tuple(a.head[i] for i in range(j, ell, q)), None)
    p = len(a.period)
    i0 = max(0, -(-(ell - j) // q))
    per = p // gcd(p, q)
    head = tuple(a[j + i * q] for i in range(i0))
    period = tuple(a[j + i * q] for i in range(i0, i0 + per))
    return Address(head, period)


def random_collision_probe(sys, a, depth, trials, rng):
    """Search random b (differing from a within the first ``depth`` symbols) for a near-collision.

    Returns the first b whose depth-``depth`` head sum lies within
    2*T_depth of a's, else None.  Exact systems are compared exactly.
    """
    tb = tail_bound(sys, depth)
    vecs = orbit(sys, depth)
    pre = a.prefix(depth)
    for _ in range(trials):
        flips = rng.integers(0, 2, size=depth)
        if not flips.any():
            flips[rng.integers(0, depth)] = 1
        diff = None
        for k in np.nonzero(flips)[0]:
            term = linalg.vec_scale(2 * pre[k], vecs[k]) if sys.exact else 2 * pre[k] * vecs[k]
            diff = term if diff is None else (linalg.vec_add(diff, term) if sys.exact else diff + term)
        norm = linalg.norm_inf(diff) if sys.exact else float(np.abs(diff).max())
        if norm <= 2 * tb:
            return [(-pre[k] if flips[k] else pre[k]) for k in range(depth)]
    return None
