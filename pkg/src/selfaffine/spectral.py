"""Input models for the contraction M and digit vector u.

Two ways to describe a system:

* ``SpectralSpec`` -- the eigenstructure given exactly, block by block.
  Classification from a spec is exact.
* ``RawSystem`` -- an explicit matrix and vector.  Its eigenstructure is
  recovered numerically (``eigenstructure``), so anything derived from it is
  tagged heuristic.

The configuration grammar is documented in ``docs/config.md``.
"""

import enum
import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm

import numpy as np

from . import linalg
from .errors import ConfigError, IllConditionedError, NotCyclicError, QUndefinedError

DEFAULT_ANGLE_CAP = 64
DEFAULT_TOLERANCE = 1e-9


class BlockKind(enum.Enum):
    REAL_POSITIVE = "RealPositive"
    REAL_NEGATIVE = "RealNegative"
    JORDAN = "Jordan"
    ROTATION = "Rotation"


@dataclass(frozen=True)
class RationalPi:
    """An argument equal to (p/s)*pi with 0 < p/s < 1 and gcd(p, s) = 1."""

    p: int
    s: int

    def __post_init__(self):
        if self.s <= 0 or not 0 < self.p < self.s:
            raise ValueError(f"angle {self.p}/{self.s} pi outside (0, pi)")
        if gcd(self.p, self.s) != 1:
            raise ValueError(f"angle fraction {self.p}/{self.s} not in lowest terms")

    @property
    def fraction(self):
        return Fraction(self.p, self.s)

    @property
    def radians(self):
        return math.pi * self.p / self.s

    def __str__(self):
        return f"{self.p}/{self.s}pi"


@dataclass(frozen=True)
class IrrationalAngle:
    """An argument (in radians, in (0, pi)) with no rational multiple of pi attached."""

    radians: float

    def __post_init__(self):
        if not 0 < self.radians < math.pi:
            raise ValueError(f"angle {self.radians} rad outside (0, pi)")

    def __str__(self):
        return f"irrational:{self.radians!r}"


class Provenance(enum.Enum):
    EXACT = "Exact"
    HEURISTIC = "HeuristicFromMatrix"


@dataclass(frozen=True)
class SpectralBlock:
    """One block of the real Jordan form of M.

    ``modulus`` is |eigenvalue|.  Real kinds have ``angle=None``.  A Jordan
    block carries ``size >= 2`` and either ``angle=None`` (real eigenvalue,
    sign given by ``negative``) or an angle (complex pair, dimension 2*size).
    A Rotation block stands for the conjugate pair r*exp(+-i*angle).
    """

    kind: BlockKind
    modulus: Fraction | float
    angle: RationalPi | IrrationalAngle | None = None
    size: int = 1
    negative: bool = False

    def __post_init__(self):
        if not 0 < self.modulus < 1:
            raise ValueError(f"modulus {self.modulus} not in (0, 1)")
        if self.kind is BlockKind.JORDAN:
            if self.size < 2:
                raise ValueError("Jordan block needs size >= 2")
            if self.angle is not None and self.negative:
                raise ValueError("complex Jordan block cannot also be negative")
        else:
            if self.size != 1:
                raise ValueError(f"{self.kind.value} block must have size 1")
            if (self.kind is BlockKind.ROTATION) != (self.angle is not None):
                raise ValueError("exactly the Rotation kind carries an angle")
            object.__setattr__(self, "negative", self.kind is BlockKind.REAL_NEGATIVE)

    @property
    def dimension(self):
        return self.size * (2 if self.angle is not None else 1)

    @property
    def is_real(self):
        return self.angle is None

    def eigenvalue(self):
        """One representative eigenvalue as a Python complex."""
        m = float(self.modulus)
        if self.angle is None:
            return complex(-m if self.negative else m)
        return m * complex(math.cos(self.angle.radians), math.sin(self.angle.radians))

    def _key(self):
        # identity of the eigenvalue, used to detect derogatory specs
        ang = self.angle
        if isinstance(ang, IrrationalAngle):
            ang = ("irr", ang.radians)
        return (self.modulus, self.negative, ang)

    def __str__(self):
        if self.kind is BlockKind.ROTATION:
            return f"rotation r={self.modulus} angle={self.angle}"
        if self.kind is BlockKind.JORDAN:
            k = -self.modulus if self.negative else self.modulus
            extra = f" angle={self.angle}" if self.angle is not None else ""
            return f"jordan k={k} size={self.size}{extra}"
        k = -self.modulus if self.negative else self.modulus
        return f"real k={k}"


def real_block(k):
    k = linalg.to_fraction(k) if not isinstance(k, float) else k
    kind = BlockKind.REAL_NEGATIVE if k < 0 else BlockKind.REAL_POSITIVE
    return SpectralBlock(kind, abs(k))


def rotation_block(r, angle):
    r = linalg.to_fraction(r) if not isinstance(r, float) else r
    if isinstance(angle, float):
        angle = IrrationalAngle(angle)
    elif isinstance(angle, (Fraction, tuple)):
        f = Fraction(*angle) if isinstance(angle, tuple) else angle
        angle = RationalPi(f.numerator, f.denominator)
    return SpectralBlock(BlockKind.ROTATION, r, angle)


def jordan_block(k, size, angle=None):
    k = linalg.to_fraction(k) if not isinstance(k, float) else k
    return SpectralBlock(BlockKind.JORDAN, abs(k), angle, size=size, negative=k < 0)


@dataclass(frozen=True)
class SpectralSpec:
    blocks: tuple
    provenance: Provenance = Provenance.EXACT
    tolerance: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ValueError("a spectral spec needs at least one block")
        if self.provenance is Provenance.EXACT:
            keys = [b._key() for b in self.blocks]
            if len(set(keys)) != len(keys):
                raise NotCyclicError(
                    "two blocks share an eigenvalue: M is derogatory and has no cyclic vector"
                )

    @property
    def dimension(self):
        return sum(b.dimension for b in self.blocks)

    @property
    def exact(self):
        return self.provenance is Provenance.EXACT

    def determinant_abs(self):
        """|det M| as the product of moduli raised to block dimensions (exact for exact moduli)."""
        out = Fraction(1) if all(isinstance(b.modulus, Fraction) for b in self.blocks) else 1.0
        for b in self.blocks:
            out *= b.modulus ** b.dimension
        return out

    def to_system(self):
        """A concrete (M, u) realizing this spectrum; exact whenever all entries are rational."""
        return realize(self)


@dataclass(frozen=True)
class RawSystem:
    """An explicit contraction M with digit vector u.

    ``exact`` systems hold ``Fraction`` entries; float systems hold floats.
    """

    matrix: tuple
    u: tuple
    exact: bool = True
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        conv = linalg.to_fraction if self.exact else float
        m = tuple(tuple(conv(x) for x in row) for row in self.matrix)
        u = tuple(conv(x) for x in self.u)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "u", u)
        d = len(m)
        if d == 0 or any(len(row) != d for row in m):
            raise ValueError("matrix must be square and non-empty")
        if len(u) != d:
            raise ValueError(f"u has length {len(u)}, expected {d}")
        if not self.check:
            return
        if all(x == 0 for x in u):
            raise ValueError("u must be non-zero")
        if (linalg.det(m) if self.exact else np.linalg.det(self.array)) == 0:
            raise ValueError("M must be invertible")
        rho = max(abs(np.linalg.eigvals(self.array)))
        if not rho < 1:
            raise ValueError(f"spectral radius {rho:.6g} is not < 1")

    @property
    def d(self):
        return len(self.u)

    @property
    def array(self):
        return np.array([[float(x) for x in row] for row in self.matrix])

    @property
    def u_array(self):
        return np.array([float(x) for x in self.u])

    def determinant_abs(self):
        if self.exact:
            return abs(linalg.det(self.matrix))
        return abs(float(np.linalg.det(self.array)))

    def power(self, n):
        """The system (M^n, u)."""
        if self.exact:
            return RawSystem(linalg.mat_pow(self.matrix, n), self.u, exact=True, check=False)
        return RawSystem(tuple(map(tuple, np.linalg.matrix_power(self.array, n))), self.u,
                         exact=False, check=False)

    def as_float(self):
        if not self.exact:
            return self
        return RawSystem(self.matrix, self.u, exact=False, check=False)


def block_diag_system(*systems):
    """Stack systems (M_i, u_i) into block-diagonal M with u concatenated."""
    exact = all(s.exact for s in systems)
    zero = Fraction(0) if exact else 0.0
    d = sum(s.d for s in systems)
    rows = []
    offset = 0
    for s in systems:
        for row in s.matrix:
            rows.append((zero,) * offset + tuple(row) + (zero,) * (d - offset - s.d))
        offset += s.d
    u = tuple(x for s in systems for x in s.u)
    return RawSystem(tuple(rows), u, exact=exact)


# ---------------------------------------------------------------- realization

def _rational_cos_sin(angle):
    """Exact (cos, sin) for the few angles where both are rational, else None."""
    table = {(1, 2): (Fraction(0), Fraction(1))}
    return table.get((angle.p, angle.s)) if isinstance(angle, RationalPi) else None


def _block_matrix(block):
    """Real matrix of one block and its cyclic vector, as nested lists."""
    m = block.modulus
    if block.angle is None:
        lam = -m if block.negative else m
        n = block.size
        mat = [[lam if i == j else (1 if j == i + 1 else 0) for j in range(n)] for i in range(n)]
        u = [0] * (n - 1) + [1]
        return mat, u
    cs = _rational_cos_sin(block.angle)
    if cs is not None and isinstance(m, Fraction):
        c, s = m * cs[0], m * cs[1]
    else:
        c = float(m) * math.cos(block.angle.radians)
        s = float(m) * math.sin(block.angle.radians)
    rot = [[c, -s], [s, c]]
    n = block.size
    dim = 2 * n
    mat = [[0] * dim for _ in range(dim)]
    for b in range(n):
        for i in range(2):
            for j in range(2):
                mat[2 * b + i][2 * b + j] = rot[i][j]
        if b + 1 < n:
            mat[2 * b][2 * b + 2] = 1
            mat[2 * b + 1][2 * b + 3] = 1
    u = [0] * (dim - 2) + [1, 0]
    return mat, u


def realize(spec):
    """Block-diagonal real matrix with the given spectrum, plus a cyclic u.

    Each block gets its own cyclic vector; since blocks have distinct
    eigenvalues the concatenation is cyclic for the whole matrix.
    """
    parts = [_block_matrix(b) for b in spec.blocks]
    d = sum(len(u) for _, u in parts)
    exact = all(
        not isinstance(x, float) for mat, _ in parts for row in mat for x in row
    )
    rows, u = [], []
    off = 0
    for mat, bu in parts:
        n = len(bu)
        for row in mat:
            rows.append([0] * off + list(row) + [0] * (d - off - n))
        u.extend(bu)
        off += n
    return RawSystem(rows, u, exact=exact)


# ---------------------------------------------------------------- parsing

_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?(?:/\d+)?"


def _parse_number(text, key, line, exact=True):
    text = text.strip()
    if not re.fullmatch(_NUM, text):
        raise ConfigError(f"cannot parse number {text!r}", key=key, line=line)
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ConfigError("zero denominator", key=key, line=line)
        return Fraction(Fraction(num), int(den))
    return Fraction(text) if exact else float(text)


def _parse_angle(text, key, line):
    t = text.strip().replace(" ", "").lower()
    if t.startswith("irrational:"):
        try:
            rad = float(t.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad irrational angle {text!r}", key=key, line=line) from None
        if not 0 < rad < math.pi:
            raise ConfigError("angle must lie in (0, pi)", key=key, line=line)
        return IrrationalAngle(rad)
    m = re.fullmatch(r"(\d+)/(\d+)\*?pi", t) or re.fullmatch(r"(\d+)\*?pi/(\d+)", t)
    if m is None and re.fullmatch(r"pi/(\d+)", t):
        m = re.fullmatch(r"()pi/(\d+)", t)
    if m is None:
        raise ConfigError(f"angle {text!r} is not 'p/s pi' or 'irrational:<rad>'", key=key, line=line)
    p = int(m.group(1) or 1)
    s = int(m.group(2))
    if s == 0:
        raise ConfigError("zero denominator in angle", key=key, line=line)
    g = gcd(p, s)
    if g != 1:
        warnings.warn(f"angle {p}/{s} pi reduced to {p // g}/{s // g} pi", stacklevel=3)
        p, s = p // g, s // g
    if not 0 < p < s:
        raise ConfigError(f"angle {p}/{s} pi outside (0, pi)", key=key, line=line)
    return RationalPi(p, s)


_MODULUS_KEYS = ("k", "r", "modulus", "lambda")


def _parse_block(tokens, line):
    kind = None
    fields = {}
    for tok in tokens:
        if "=" in tok:
            k, v = tok.split("=", 1)
            fields[k.strip().lower()] = v
        elif tok.lower() in ("pi", "π") and "angle" in fields:
            # "angle=1/2 pi" written with a space
            fields["angle"] += "pi"
        elif kind is None:
            kind = tok.lower()
        else:
            raise ConfigError(f"unexpected token {tok!r}", key="block", line=line)
    kind = fields.pop("kind", kind)
    if kind is None:
        raise ConfigError("block without a kind", key="kind", line=line)
    mkeys = [k for k in _MODULUS_KEYS if k in fields]
    if len(mkeys) != 1:
        raise ConfigError("block needs exactly one of k=, r=, modulus=", key="modulus", line=line)
    mkey = mkeys[0]
    value = _parse_number(fields.pop(mkey), mkey, line)
    angle = None
    if "angle" in fields:
        angle = _parse_angle(fields.pop("angle"), "angle", line)
    size = None
    if "size" in fields:
        try:
            size = int(fields.pop("size"))
        except ValueError:
            raise ConfigError("size must be an integer", key="size", line=line) from None
    if fields:
        raise ConfigError(f"unknown key(s) {sorted(fields)}", key=sorted(fields)[0], line=line)
    if not 0 < abs(value) < 1:
        raise ConfigError(f"modulus {abs(value)} not in (0,1)", key=mkey, line=line)
    try:
        if kind in ("real", "realpositive", "realnegative"):
            if angle is not None or size not in (None, 1):
                raise ConfigError("real blocks take no angle or size", key="angle", line=line)
            if kind == "realnegative":
                value = -abs(value)
            return real_block(value)
        if kind == "rotation":
            if angle is None:
                raise ConfigError("rotation block needs angle=", key="angle", line=line)
            if value < 0:
                raise ConfigError("rotation modulus must be positive", key=mkey, line=line)
            return SpectralBlock(BlockKind.ROTATION, value, angle)
        if kind == "jordan":
            if size is None:
                raise ConfigError("jordan block needs size=", key="size", line=line)
            if angle is not None and value < 0:
                raise ConfigError("complex jordan modulus must be positive", key=mkey, line=line)
            return jordan_block(value, size, angle)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), key="block", line=line) from None
    raise ConfigError(f"unknown block kind {kind!r}", key="kind", line=line)


def parse_spec(text, force_exact=None):
    """Parse a configuration document into a ``SpectralSpec`` or a ``RawSystem``.

    ``force_exact`` overrides the arithmetic mode of a matrix document
    (``True`` reads decimals as exact rationals, ``False`` forces floats).
    """
    blocks, rows, u, mode = [], [], None, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        head = head.lower()
        if head == "block":
            blocks.append(_parse_block(rest, lineno))
        elif head == "row":
            rows.append(([_parse_number(t, "row", lineno) for t in rest], rest))
        elif head == "u":
            if u is not None:
                raise ConfigError("u given twice", key="u", line=lineno)
            u = ([_parse_number(t, "u", lineno) for t in rest], rest)
        elif head == "mode":
            if len(rest) != 1 or rest[0].lower() not in ("exact", "float"):
                raise ConfigError("mode must be 'exact' or 'float'", key="mode", line=lineno)
            mode = rest[0].lower()
        elif head == "matrix":
            if rest:
                raise ConfigError("'matrix' takes no arguments; give 'row' lines", key="matrix", line=lineno)
        else:
            raise ConfigError(f"unknown key {head!r}", key=head, line=lineno)
    if blocks and (rows or u is not None):
        raise ConfigError("document mixes block lines with a matrix", key="block")
    if blocks:
        return SpectralSpec(tuple(blocks))
    if not rows:
        raise ConfigError("document has neither block lines nor a matrix", key="block")
    if u is None:
        raise ConfigError("matrix given without u vector", key="u")
    texts = [t for _, toks in rows for t in toks] + list(u[1])
    has_decimal = any("." in t or "e" in t.lower() for t in texts)
    if force_exact is not None:
        exact = force_exact
    elif mode is not None:
        exact = mode == "exact"
    else:
        exact = not has_decimal
    matrix = [r for r, _ in rows]
    if not exact:
        matrix = [[float(x) for x in r] for r in matrix]
    try:
        return RawSystem(matrix, u[0] if exact else [float(x) for x in u[0]], exact=exact)
    except ValueError as exc:
        raise ConfigError(str(exc), key="matrix") from None


# ---------------------------------------------------------------- operations

def krylov_matrix(sys):
    """Columns u, Mu, ..., M^{d-1}u as a list of vectors."""
    vecs = [sys.u]
    for _ in range(sys.d - 1):
        vecs.append(linalg.mat_vec(sys.matrix, vecs[-1]))
    return vecs


@dataclass(frozen=True)
class CyclicCheck:
    cyclic: bool
    rank: int
    dimension: int

    def __bool__(self):
        return self.cyclic


def krylov_cyclic_check(sys, tolerance=DEFAULT_TOLERANCE):
    """Is u a cyclic vector for M?  Rank is exact for exact systems."""
    vecs = krylov_matrix(sys)
    if sys.exact:
        r = linalg.rank(vecs)
    else:
        a = np.array(vecs, dtype=float)
        sv = np.linalg.svd(a, compute_uv=False)
        r = int(np.sum(sv > tolerance * max(sv[0], 1.0)))
    return CyclicCheck(r == sys.d, r, sys.d)


def angle_from_argument(theta, cap=DEFAULT_ANGLE_CAP, tolerance=DEFAULT_TOLERANCE):
    """Tag an argument theta in (0, pi) as RationalPi or IrrationalAngle.

    Uses the best rational approximation of theta/pi with denominator <= cap
    (``Fraction.limit_denominator``, i.e. the continued-fraction convergents
    and semiconvergents).
    """
    t = theta / math.pi
    f = Fraction(t).limit_denominator(cap)
    if 0 < f < 1 and abs(float(f) - t) <= tolerance:
        return RationalPi(f.numerator, f.denominator)
    return IrrationalAngle(theta)


def _cluster(values, radius):
    """Single-linkage clusters of complex numbers (indices), stable order."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) < radius:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


# distinct eigenvalues this close are treated as one candidate Jordan cluster
_CLUSTER_RADIUS = 1e-4


def exact_triangular_spectrum(sys):
    """Exact ``SpectralSpec`` for an exact triangular M with distinct diagonal entries.

    The eigenvalues are then the diagonal entries, all simple, so no numerics are
    needed.  Returns None otherwise.
    """
    if not sys.exact:
        return None
    m, d = sys.matrix, sys.d
    upper = all(m[i][j] == 0 for i in range(d) for j in range(i))
    lower = all(m[i][j] == 0 for i in range(d) for j in range(i + 1, d))
    diag = [m[i][i] for i in range(d)]
    if not (upper or lower) or len(set(diag)) != d:
        return None
    return SpectralSpec(tuple(real_block(k) for k in diag))


def eigenstructure(sys, angle_denominator_cap=DEFAULT_ANGLE_CAP, tolerance=DEFAULT_TOLERANCE):
    """Heuristic ``SpectralSpec`` for a numeric matrix.

    Eigenvalues closer than 1e-4 are clustered.  A cluster of k >= 2
    eigenvalues becomes a Jordan block of size k when M - lambda I has exactly
    one negligible singular value; no negligible value splits it back into
    simple eigenvalues; more than one is ambiguous (derogatory or nearly so)
    and raises ``IllConditionedError``.
    """
    exact = exact_triangular_spectrum(sys)
    if exact is not None:
        return exact
    a = sys.array
    d = sys.d
    eig = np.linalg.eigvals(a)
    upper = [complex(z) for z in eig if z.imag > tolerance]
    reals = [complex(z.real) for z in eig if abs(z.imag) <= tolerance]
    scale = max(1.0, float(np.abs(a).max()))
    blocks = []

    def add_simple(z):
        if z.imag == 0:
            blocks.append(SpectralBlock(
                BlockKind.REAL_NEGATIVE if z.real < 0 else BlockKind.REAL_POSITIVE, abs(z.real)))
        else:
            ang = angle_from_argument(math.atan2(z.imag, z.real), angle_denominator_cap, tolerance)
            blocks.append(SpectralBlock(BlockKind.ROTATION, abs(z), ang))

    for group_vals in (reals, upper):
        for idx in _cluster(group_vals, _CLUSTER_RADIUS):
            zs = [group_vals[i] for i in idx]
            if len(zs) == 1:
                add_simple(zs[0])
                continue
            lam = sum(zs) / len(zs)
            sv = np.linalg.svd(a - lam * np.eye(d), compute_uv=False)
            small = int(np.sum(sv < 1e-6 * scale))
            if small == 0:
                for z in zs:
                    add_simple(z)
            elif small == 1:
                if lam.imag == 0:
                    blocks.append(jordan_block(float(lam.real), len(zs)))
                else:
                    ang = angle_from_argument(math.atan2(lam.imag, lam.real),
                                              angle_denominator_cap, tolerance)
                    blocks.append(jordan_block(abs(lam), len(zs), ang))
            else:
                raise IllConditionedError(
                    "ill-conditioned eigenstructure: cannot tell a Jordan block from "
                    "repeated or nearly repeated eigenvalues; supply a SpectralSpec directly"
                )
    return SpectralSpec(tuple(blocks), Provenance.HEURISTIC, tolerance)


def minimal_real_power(spec):
    """Least q >= 1 with every eigenvalue's q-th power real."""
    q = 1
    for b in spec.blocks:
        if b.angle is None:
            continue
        if isinstance(b.angle, IrrationalAngle):
            raise QUndefinedError("q undefined: an eigenvalue has irrational argument/pi")
        q = lcm(q, b.angle.s)
    return q


def sign_of_power(block, q):
    """Sign of kappa^q for a block whose q-th power is real."""
    if block.angle is None:
        return -1 if block.negative and q % 2 else 1
    if isinstance(block.angle, IrrationalAngle):
        raise QUndefinedError("irrational angle has no real power")
    num = q * block.angle.p
    if num % block.angle.s:
        raise ValueError(f"kappa^{q} is not real for angle {block.angle}")
    return -1 if (num // block.angle.s) % 2 else 1
