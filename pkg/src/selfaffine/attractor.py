"""The attractor A_M = { sum_k a_k M^k u : a_k = +-1 }.

Everything here measures distances of truncated series in the max-norm: the
tail radius ``T_n`` bounds ``sum_{k>=n} ||M^k u||_inf``, so the true point of
any address agrees with its depth-n partial sum to within ``T_n`` in every
coordinate.  The interior certificate is the one place Euclidean balls are
used.
"""

import enum
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from . import linalg
from .errors import BudgetError, NormCertificateError

NORM_CERT_CAP = 32
FLOAT_SLACK = 1e-9
MAX_CLOUD_DEPTH_FLOAT = 24
MAX_CLOUD_DEPTH_EXACT = 18
BURN_IN = 64
MAX_LOCAL_CENTERS = 1 << 22
MAX_CELLS = 1 << 22


# ---------------------------------------------------------------- addresses

@dataclass(frozen=True)
class Address:
    """A word over {-1, +1}: a finite head followed by a periodic tail or nothing.

    ``period=None`` means the tail is free (unspecified).
    """

    head: tuple = ()
    period: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(int(x) for x in self.head))
        if self.period is not None:
            object.__setattr__(self, "period", tuple(int(x) for x in self.period))
            if not self.period:
                raise ValueError("periodic tail must be non-empty")
        if any(x not in (-1, 1) for x in self.head + (self.period or ())):
            raise ValueError("address symbols must be -1 or +1")

    @classmethod
    def periodic(cls, word, head=()):
        return cls(tuple(head), tuple(word))

    @classmethod
    def parse(cls, text):
        """``'+-(+--)'``: head ``+-`` then ``+--`` repeated.  No parentheses = free tail.

        Symbols may also be written ``1``/``-1`` separated by spaces or commas.
        """
        text = text.strip()
        m = re.fullmatch(r"([^()]*)(?:\(([^()]+)\))?", text)
        if m is None:
            raise ValueError(f"cannot parse address {text!r}")
        head = _parse_symbols(m.group(1))
        period = _parse_symbols(m.group(2)) if m.group(2) is not None else None
        return cls(head, period)

    @property
    def preperiod(self):
        return len(self.head)

    @property
    def is_periodic(self):
        return self.period is not None

    def __getitem__(self, k):
        if k < len(self.head):
            return self.head[k]
        if self.period is None:
            raise IndexError("symbol beyond the head of a free-tail address")
        return self.period[(k - len(self.head)) % len(self.period)]

    def prefix(self, n):
        return tuple(self[k] for k in range(n))

    def known_length(self, n):
        """How many of the first ``n`` symbols are determined."""
        return n if self.period is not None else min(n, len(self.head))

    def __neg__(self):
        return Address(tuple(-x for x in self.head),
                       None if self.period is None else tuple(-x for x in self.period))

    def shift(self, m):
        """The address a_m a_{m+1} ..."""
        if m <= len(self.head):
            return Address(self.head[m:], self.period)
        if self.period is None:
            return Address((), None)
        r = (m - len(self.head)) % len(self.period)
        return Address((), self.period[r:] + self.period[:r])

    def __str__(self):
        sym = lambda w: "".join("+" if x > 0 else "-" for x in w)  # noqa: E731
        return sym(self.head) + (f"({sym(self.period)})" if self.period else "")


def _parse_symbols(text):
    text = text.strip()
    if not text:
        return ()
    if re.fullmatch(r"[+-]+", text):
        return tuple(1 if c == "+" else -1 for c in text)
    out = []
    for tok in re.split(r"[\s,]+", text):
        if tok in ("1", "+1", "+"):
            out.append(1)
        elif tok in ("-1", "-"):
            out.append(-1)
        elif tok:
            raise ValueError(f"bad address symbol {tok!r}")
    return tuple(out)


# ---------------------------------------------------------------- series basics

def orbit(sys, n):
    """The vectors u, Mu, ..., M^{n-1}u (exact tuples, or a float array of shape (n, d))."""
    if sys.exact:
        out = [sys.u]
        for _ in range(n - 1):
            out.append(linalg.mat_vec(sys.matrix, out[-1]))
        return out[:n]
    m, v = sys.array, sys.u_array
    out = np.empty((n, sys.d))
    for k in range(n):
        out[k] = v
        v = m @ v
    return out


@lru_cache(maxsize=256)
def norm_certificate(sys, cap=NORM_CERT_CAP):
    """Smallest m <= cap with rho = ||M^m||_inf < 1, returned as (m, rho)."""
    if sys.exact:
        p = sys.matrix
        for m in range(1, cap + 1):
            rho = linalg.op_norm_inf(p)
            if rho < 1:
                return m, rho
            p = linalg.mat_mul(p, sys.matrix)
    else:
        a = sys.array
        p = a.copy()
        for m in range(1, cap + 1):
            rho = float(np.abs(p).sum(axis=1).max()) * (1 + FLOAT_SLACK)
            if rho < 1:
                return m, rho
            p = p @ a
    raise NormCertificateError(
        f"norm certificate unavailable: ||M^m||_inf >= 1 for all m <= {cap}; raise the cap"
    )


def tail_bound(sys, n, cap=NORM_CERT_CAP):
    """Certified ``T_n >= sum_{k>=n} ||M^k u||_inf``.

    With ``rho = ||M^m|| < 1`` the tail splits into m interleaved geometric
    series, giving ``T_n = (sum_{i<m} ||M^{n+i} u||) / (1 - rho)``.
    Exact systems get an exact Fraction; float systems are inflated by 1e-9.
    """
    return tail_bounds(sys, n, cap)[n]


def tail_bounds(sys, n_max, cap=NORM_CERT_CAP):
    """``[T_0, ..., T_{n_max}]`` from one orbit computation."""
    m, rho = norm_certificate(sys, cap)
    vecs = orbit(sys, n_max + m)
    if sys.exact:
        norms = [linalg.norm_inf(v) for v in vecs]
        denom = 1 - rho
        return [sum(norms[n:n + m]) / denom for n in range(n_max + 1)]
    norms = np.abs(vecs).max(axis=1)
    # direct window sums: differences of a running sum would cancel to 0 deep in the tail
    windows = np.lib.stride_tricks.sliding_window_view(norms, m)[:n_max + 1].sum(axis=1)
    return [float(x) for x in windows / (1 - rho) * (1 + FLOAT_SLACK)]


def project_address(sys, a, n):
    """Depth-n partial sum of ``a`` and the radius T around it holding the true point.

    For a free-tail address only the head is known, so the depth is cut to
    the head length and the returned radius reflects that.
    """
    if n < 0:
        raise ValueError("depth must be >= 0")
    n = a.known_length(n)
    vecs = orbit(sys, max(n, 1))
    if sys.exact:
        point = tuple(Fraction(0) for _ in range(sys.d))
        for k in range(n):
            point = linalg.vec_add(point, linalg.vec_scale(a[k], vecs[k]))
    else:
        point = np.zeros(sys.d)
        for k in range(n):
            point = point + a[k] * vecs[k]
    return point, tail_bound(sys, n)


def exact_limit(sys, a):
    """pi_M(a) for an eventually periodic address, by solving (I - M^p) x = periodic sum."""
    if a.period is None:
        raise ValueError("exact limit needs an eventually periodic address")
    ell, p = len(a.head), len(a.period)
    vecs = orbit(sys, ell + p)
    if sys.exact:
        head = [Fraction(0)] * sys.d
        for k in range(ell):
            head = linalg.vec_add(head, linalg.vec_scale(a.head[k], vecs[k]))
        per = [Fraction(0)] * sys.d
        for k in range(p):
            per = linalg.vec_add(per, linalg.vec_scale(a.period[k], vecs[k]))
        mp = linalg.mat_pow(sys.matrix, p)
        eye = linalg.identity(sys.d)
        lhs = tuple(tuple(eye[i][j] - mp[i][j] for j in range(sys.d)) for i in range(sys.d))
        x = linalg.solve(lhs, per)
        tail = linalg.mat_vec(linalg.mat_pow(sys.matrix, ell), x)
        return linalg.vec_add(head, tail)
    head = sum((a.head[k] * vecs[k] for k in range(ell)), np.zeros(sys.d))
    per = sum((a.period[k] * vecs[k] for k in range(p)), np.zeros(sys.d))
    mat = sys.array
    x = np.linalg.solve(np.eye(sys.d) - np.linalg.matrix_power(mat, p), per)
    return head + np.linalg.matrix_power(mat, ell) @ x


# ---------------------------------------------------------------- point clouds

def chaos_game(sys, count, seed=0, burn_in=BURN_IN):
    """``count`` points of A_M (to within T_{burn_in}) by random iteration x <- Mx +- u.

    Runs ``count`` independent chains from the origin for ``burn_in`` steps,
    so each sample is a depth-``burn_in`` partial sum with random digits.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    m, u = sys.array, sys.u_array
    signs = rng.integers(0, 2, size=(burn_in, count)) * 2 - 1
    x = np.zeros((count, sys.d))
    for step in range(burn_in):
        x = x @ m.T + signs[step][:, None] * u
    return x


@dataclass
class CylinderCloud:
    """All 2^depth partial sums; bit k of an index is 1 iff w_k = +1."""

    depth: int
    centers: object  # float array (2^n, d), or list of exact tuples
    radius: object
    exact: bool

    def __len__(self):
        return len(self.centers)

    def word(self, index):
        return word_of(index, self.depth)

    def as_array(self):
        if self.exact:
            return np.array([[float(x) for x in c] for c in self.centers]).reshape(-1, len(self.centers[0]))
        return self.centers


def word_of(index, depth):
    return tuple(1 if (index >> k) & 1 else -1 for k in range(depth))


def _doubling_sums(vecs, digits, exact, d):
    """Sums over all digit choices, index bit k selecting digits[1] for term k."""
    lo, hi = digits
    if exact:
        pts = [tuple(Fraction(0) for _ in range(d))]
        for v in vecs:
            a = [linalg.vec_add(p, linalg.vec_scale(lo, v)) for p in pts] if lo else list(pts)
            b = [linalg.vec_add(p, linalg.vec_scale(hi, v)) for p in pts]
            pts = a + b
        return pts
    pts = np.zeros((1, d))
    for v in vecs:
        pts = np.concatenate([pts + lo * v, pts + hi * v])
    return pts


def cylinder_cloud(sys, depth):
    cap = MAX_CLOUD_DEPTH_EXACT if sys.exact else MAX_CLOUD_DEPTH_FLOAT
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if depth > cap:
        raise BudgetError(f"depth {depth} exceeds the cap {cap} for {'exact' if sys.exact else 'float'} clouds")
    vecs = orbit(sys, max(depth, 1))[:depth]
    centers = _doubling_sums(vecs, (-1, 1), sys.exact, sys.d)
    return CylinderCloud(depth, centers, tail_bound(sys, depth), sys.exact)


# ---------------------------------------------------------------- Minkowski identity

@dataclass
class DecompositionReport:
    equal: bool
    blocks: int
    depth: int
    size: int
    exact: bool
    first_mismatch: tuple | None = None
    left: list = field(default=None, repr=False)
    right: list = field(default=None, repr=False)

    def to_dict(self):
        mm = None
        if self.first_mismatch is not None:
            i, a, b = self.first_mismatch
            mm = {"index": i, "left": [str(x) for x in a], "right": [str(x) for x in b]}
        return {"equal": self.equal, "blocks": self.blocks, "depth": self.depth,
                "size": self.size, "mode": "exact" if self.exact else "float(1e-9)",
                "first_mismatch": mm}


def compare_multisets(left, right, exact, tol=1e-9):
    """Compare two point multisets; returns (equal, first mismatch or None)."""
    if exact:
        a, b = sorted(left), sorted(right)
    else:
        a = sorted(map(tuple, np.round(np.asarray(left, float) / tol).astype(np.int64).tolist()))
        b = sorted(map(tuple, np.round(np.asarray(right, float) / tol).astype(np.int64).tolist()))
    if len(a) != len(b):
        return False, (min(len(a), len(b)), (), ())
    for i, (x, y) in enumerate(zip(a, b)):
        if exact:
            if x != y:
                return False, (i, x, y)
        elif max(abs(p - q) for p, q in zip(x, y)) > 1:
            return False, (i, tuple(t * tol for t in x), tuple(t * tol for t in y))
    return True, None


def minkowski_sum(sets, exact):
    out = sets[0]
    for s in sets[1:]:
        if exact:
            out = [linalg.vec_add(p, q) for p in out for q in s]
        else:
            out = (np.asarray(out)[:, None, :] + np.asarray(s)[None, :, :]).reshape(-1, np.asarray(s).shape[1])
    return out


def minkowski_decomposition_check(sys, blocks=None, depth=None):
    """Compare depth-(n*b) {0,1}-digit sums of A_M with the Minkowski sum of
    M^j * (depth-n {0,1}-digit sums of A_{M^b}), j = 0..b-1.

    ``blocks`` defaults to the dimension d; ``depth`` defaults to 3*blocks.
    """
    b = blocks or sys.d
    depth = 3 * b if depth is None else depth
    if depth % b:
        raise ValueError(f"depth {depth} is not a multiple of {b}")
    n = depth // b
    if depth > (MAX_CLOUD_DEPTH_EXACT if sys.exact else MAX_CLOUD_DEPTH_FLOAT):
        raise BudgetError(f"depth {depth} too large for an exhaustive comparison")
    left = _doubling_sums(orbit(sys, depth), (0, 1), sys.exact, sys.d)
    mb = sys.power(b)
    base = _doubling_sums(orbit(mb, n), (0, 1), sys.exact, sys.d)
    parts = []
    mj = linalg.identity(sys.d) if sys.exact else np.eye(sys.d)
    for j in range(b):
        if sys.exact:
            parts.append([linalg.mat_vec(mj, p) for p in base])
            mj = linalg.mat_mul(sys.matrix, mj)
        else:
            parts.append(np.asarray(base) @ mj.T)
            mj = sys.array @ mj
    right = minkowski_sum(parts, sys.exact)
    equal, mismatch = compare_multisets(left, right, sys.exact)
    return DecompositionReport(equal, b, depth, len(left), sys.exact, mismatch, left, right)


# ---------------------------------------------------------------- interior certificate

class CertStatus(enum.Enum):
    CERTIFIED = "Certified"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class InteriorCertificate:
    status: CertStatus
    x0: tuple
    r: float
    depth: int
    h: float
    slack: float = FLOAT_SLACK
    reason: str = ""
    cells: int = 0
    centers_used: int = 0

    @property
    def certified(self):
        return self.status is CertStatus.CERTIFIED

    def to_dict(self):
        return {"verdict": self.status.value, "x0": list(map(float, self.x0)), "r": self.r,
                "depth": self.depth, "h": self.h, "slack": self.slack, "reason": self.reason,
                "cells": self.cells, "centers_used": self.centers_used}


def _local_centers(sys, depth, target, reach):
    """Depth-``depth`` partial sums c_w with ||c_w - target||_inf <= reach.

    Built level by level; a level-k partial sum is dropped once it is farther
    than reach + (remaining tail) from the target.
    """
    vecs = orbit(sys.as_float(), max(depth, 1))[:depth]
    tails = np.concatenate([np.cumsum(np.abs(vecs)[::-1], axis=0)[::-1], np.zeros((1, sys.d))])
    pts = np.zeros((1, sys.d))
    for k, v in enumerate(vecs):
        if 2 * len(pts) > MAX_LOCAL_CENTERS:
            raise BudgetError(f"more than {MAX_LOCAL_CENTERS} candidate centers; lower the depth or radius")
        pts = np.concatenate([pts - v, pts + v])
        keep = np.all(np.abs(pts - target) <= reach + tails[k + 1] * (1 + FLOAT_SLACK), axis=1)
        pts = pts[keep]
    return pts


def interior_certificate(sys, x0=None, r=1.0, depth=8, h=None):
    """Try to certify that the ball B(x0, r) lies inside A_M.

    Self-covering test at depth n: the images f_w(B) = c_w + M^n B, over all
    words w of length n, each contain the ball of radius r*sigma_min(M^n)
    about c_w + M^n x0.  The ball is cut into axis-aligned cubes of side h
    (on the lattice x0 + h*Z^d); if every cube meeting B fits inside one of
    those image balls, then B is contained in the union of its images and
    hence in A_M.  Cube containment is checked exactly (farthest corner),
    so halving h can only keep a certificate, never lose it.
    """
    d = sys.d
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    if h is None:
        h = r / 4
    if not r > 0 or not 0 < h <= r:
        raise ValueError("need r > 0 and 0 < h <= r")
    mn = np.linalg.matrix_power(sys.array, depth)
    sigma = float(np.linalg.svd(mn, compute_uv=False).min())
    rad = r * sigma / (1 + FLOAT_SLACK)
    half_diag = h * math.sqrt(d) / 2
    base = dict(x0=tuple(x0.tolist()), r=float(r), depth=depth, h=float(h))
    if rad <= half_diag:
        return InteriorCertificate(
            CertStatus.INCONCLUSIVE, **base,
            reason=f"r*sigma_min(M^n) = {r * sigma:.3g} <= h*sqrt(d)/2 = {half_diag:.3g}; shrink h or depth")

    # cubes x0 + h*[i, i+1]^d meeting B(x0, r)
    lim = int(math.ceil(r / h)) + 1
    if (2 * lim) ** d > MAX_CELLS:
        return InteriorCertificate(CertStatus.INCONCLUSIVE, **base,
                                   reason=f"more than {MAX_CELLS} grid cells; increase h")
    ticks = np.arange(-lim, lim)
    grid = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), axis=-1).reshape(-1, d)
    cell_centers = x0 + h * (grid + 0.5)
    meets = np.linalg.norm(cell_centers - x0, axis=1) <= r + half_diag
    cell_centers = cell_centers[meets]

    shift = mn @ x0
    reach = r + half_diag + rad
    try:
        centers = _local_centers(sys, depth, x0 - shift, reach) + shift
    except BudgetError as exc:
        return InteriorCertificate(CertStatus.INCONCLUSIVE, **base, reason=str(exc))
    if len(centers) == 0:
        return InteriorCertificate(CertStatus.INCONCLUSIVE, **base, reason="no image centers near the ball",
                                   cells=len(cell_centers))
    tree = cKDTree(centers)
    near = tree.query_ball_point(cell_centers, rad)
    for g, idx in zip(cell_centers, near):
        if not idx:
            break
        far = np.linalg.norm(np.abs(centers[idx] - g) + h / 2, axis=1)
        if not np.any(far <= rad):
            break
    else:
        return InteriorCertificate(CertStatus.CERTIFIED, **base, cells=len(cell_centers),
                                   centers_used=len(centers))
    return InteriorCertificate(CertStatus.INCONCLUSIVE, **base,
                               reason=f"cube at {g.tolist()} not covered by any image ball",
                               cells=len(cell_centers), centers_used=len(centers))


def search_interior_certificate(sys, x0=None, max_depth=24, radii=8, depths=None):
    """Scan radii T_0 * 2^-j and increasing depths for a certified ball.

    Returns the first Certified result in scan order (depth-major), else the
    last Inconclusive one.
    """
    t0 = float(tail_bound(sys, 0))
    d = sys.d
    if depths is None:
        depths = sorted({min(max_depth, k) for k in (1, 2, 4, 6, 8, 12, 16, 20, 24)})
    last = None
    for n in depths:
        if n > max_depth:
            break
        sigma = float(np.linalg.svd(np.linalg.matrix_power(sys.array, n), compute_uv=False).min())
        for j in range(1, radii + 1):
            r = t0 * 2.0**-j
            h = r * sigma / math.sqrt(d)
            cert = interior_certificate(sys, x0, r, n, min(h, r))
            if cert.certified:
                return cert
            last = cert
    return last


# ---------------------------------------------------------------- rendering

def render_image(points, viewport, resolution):
    """Hit-count raster (rows top to bottom) of 2D points in ``viewport``.

    ``viewport = (xmin, xmax, ymin, ymax)``; ``resolution = (width, height)``.
    Points outside the viewport are dropped; points on the max edge land in
    the last pixel.
    """
    xmin, xmax, ymin, ymax = map(float, viewport)
    w, hgt = resolution
    if not (xmax > xmin and ymax > ymin) or w < 1 or hgt < 1:
        raise ValueError("empty viewport or resolution")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    inside = (pts[:, 0] >= xmin) & (pts[:, 0] <= xmax) & (pts[:, 1] >= ymin) & (pts[:, 1] <= ymax)
    pts = pts[inside]
    col = np.minimum(np.floor((pts[:, 0] - xmin) / (xmax - xmin) * w).astype(np.int64), w - 1)
    row = np.minimum(np.floor((ymax - pts[:, 1]) / (ymax - ymin) * hgt).astype(np.int64), hgt - 1)
    raster = np.zeros((hgt, w), dtype=np.int64)
    np.add.at(raster, (row, col), 1)
    return raster


def pgm_bytes(raster, binary=True):
    """Encode a raster as binary PGM (P5): lit/unlit at 255/0, or clipped hit counts."""
    hgt, w = raster.shape
    if binary:
        data = np.where(raster > 0, 255, 0).astype(np.uint8)
        maxval = 255
    else:
        maxval = int(min(65535, max(1, raster.max())))
        clipped = np.minimum(raster, maxval)
        data = clipped.astype(">u2") if maxval > 255 else clipped.astype(np.uint8)
    return f"P5\n{w} {hgt}\n{maxval}\n".encode("ascii") + data.tobytes()


def read_pgm(data):
    """Decode P5 bytes written by ``pgm_bytes`` into an integer array."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, hgt = map(int, parts[1].split())
    maxval = int(parts[2])
    dtype = np.uint8 if maxval < 256 else ">u2"
    return np.frombuffer(parts[3], dtype=dtype).reshape(hgt, w).astype(np.int64)


def points_csv(points):
    """One point per line, coordinates as 17-significant-digit decimals."""
    return "".join(",".join(f"{float(x):.16e}" for x in p) + "\n" for p in np.asarray(points, float))


def bounding_box(points):
    pts = np.asarray(points, float)
    return pts.min(axis=0), pts.max(axis=0)


def all_words(n):
    return itertools.product((-1, 1), repeat=n)
