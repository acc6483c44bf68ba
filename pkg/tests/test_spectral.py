import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfaffine.errors import ConfigError, IllConditionedError, NotCyclicError, QUndefinedError
from selfaffine.spectral import (
    BlockKind,
    IrrationalAngle,
    Provenance,
    RationalPi,
    RawSystem,
    SpectralBlock,
    SpectralSpec,
    angle_from_argument,
    block_diag_system,
    eigenstructure,
    jordan_block,
    krylov_cyclic_check,
    minimal_real_power,
    parse_spec,
    real_block,
    realize,
    rotation_block,
    sign_of_power,
)

F = Fraction


def test_cyclic_diag_distinct():
    s = RawSystem([[F(1, 2), 0], [0, F(1, 3)]], [1, 1])
    assert krylov_cyclic_check(s)


def test_cyclic_zero_coordinate():
    s = RawSystem([[F(1, 2), 0], [0, F(1, 3)]], [1, 0])
    chk = krylov_cyclic_check(s)
    assert not chk and chk.rank == 1


def test_cyclic_companion_of_rotation():
    s = RawSystem([[0, -0.81], [1, 2 * 0.9 * math.cos(math.pi / 4)]], [1, 0], exact=False)
    assert krylov_cyclic_check(s)


@pytest.mark.parametrize("u", [(1, 0), (0, 1), (1, 1), (3, -7), (F(1, 3), F(2, 5))])
def test_derogatory_never_cyclic(u):
    s = RawSystem([[F(1, 2), 0], [0, F(1, 2)]], u)
    assert not krylov_cyclic_check(s)


def test_eigenstructure_rotation():
    r, th = 0.9, math.pi / 4
    s = RawSystem([[0, -r * r], [1, 2 * r * math.cos(th)]], [1, 0], exact=False)
    spec = eigenstructure(s, 64, 1e-9)
    (b,) = spec.blocks
    assert b.kind is BlockKind.ROTATION
    assert abs(b.modulus - 0.9) < 1e-9
    assert b.angle == RationalPi(1, 4)
    assert spec.provenance is Provenance.HEURISTIC


def test_eigenstructure_irrational():
    c, s_ = 0.9 * math.cos(1.0), 0.9 * math.sin(1.0)
    s = RawSystem([[c, -s_], [s_, c]], [1, 0], exact=False)
    (b,) = eigenstructure(s, 64, 1e-9).blocks
    assert isinstance(b.angle, IrrationalAngle)
    assert abs(b.angle.radians - 1.0) < 1e-12


def test_eigenstructure_jordan_and_real():
    spec = SpectralSpec((jordan_block(F(1, 2), 3), real_block(F(-1, 3))))
    got = eigenstructure(realize(spec), 64, 1e-9)
    kinds = sorted((b.kind.value, b.size, round(float(b.modulus), 9), b.negative) for b in got.blocks)
    assert kinds == sorted([("Jordan", 3, 0.5, False), ("RealNegative", 1, round(1 / 3, 9), True)])


def test_eigenstructure_derogatory_rejected():
    s = RawSystem([[0.5, 0.0], [0.0, 0.5]], [1, 1], exact=False, check=True)
    with pytest.raises(IllConditionedError):
        eigenstructure(s)


def test_angle_from_argument_cap():
    assert angle_from_argument(math.pi * 3 / 7) == RationalPi(3, 7)
    assert isinstance(angle_from_argument(math.pi * 3 / 71, cap=64), IrrationalAngle)
    assert angle_from_argument(math.pi * 3 / 71, cap=80) == RationalPi(3, 71)


def test_minimal_real_power_examples():
    assert minimal_real_power(SpectralSpec((rotation_block(F(1, 2), F(1, 2)),))) == 2
    spec = SpectralSpec((rotation_block(F(1, 2), F(3, 4)), rotation_block(F(1, 2), F(1, 3))))
    assert minimal_real_power(spec) == 12
    assert minimal_real_power(SpectralSpec((real_block(F(1, 2)), real_block(F(-1, 3))))) == 1
    with pytest.raises(QUndefinedError):
        minimal_real_power(SpectralSpec((rotation_block(F(1, 2), 1.0),)))


def test_sign_of_power_examples():
    assert sign_of_power(rotation_block(F(1, 2), F(3, 4)), 12) == -1
    assert sign_of_power(rotation_block(F(1, 2), F(1, 2)), 2) == -1
    assert sign_of_power(real_block(F(-1, 2)), 3) == -1
    assert sign_of_power(real_block(F(-1, 2)), 2) == 1
    with pytest.raises(ValueError):
        sign_of_power(rotation_block(F(1, 2), F(1, 3)), 2)


@given(st.lists(st.tuples(st.integers(1, 20), st.integers(2, 30)), min_size=1, max_size=4))
@settings(max_examples=300, deadline=None)
def test_minimal_real_power_is_least(angles):
    blocks = []
    seen = set()
    for p, s in angles:
        f = F(p, s)
        if not 0 < f < 1 or f in seen:
            continue
        seen.add(f)
        blocks.append(rotation_block(F(1, 2) + F(len(blocks), 100), f))
    if not blocks:
        return
    spec = SpectralSpec(tuple(blocks))
    q = minimal_real_power(spec)
    for b in blocks:
        assert (q * b.angle.fraction).denominator == 1
    for q2 in range(1, q):
        assert any((q2 * b.angle.fraction).denominator != 1 for b in blocks)


def _random_spec(rng):
    blocks = []
    keys = set()
    for _ in range(rng.integers(1, 4)):
        kind = rng.integers(0, 4)
        mod = F(int(rng.integers(30, 95)), 100)
        if kind == 0:
            b = real_block(mod if rng.integers(0, 2) else -mod)
        elif kind == 1:
            s = int(rng.integers(2, 13))
            p = int(rng.integers(1, s))
            g = math.gcd(p, s)
            b = rotation_block(mod, F(p // g, s // g))
        elif kind == 2:
            b = jordan_block(mod if rng.integers(0, 2) else -mod, int(rng.integers(2, 4)))
        else:
            b = rotation_block(mod, F(1, 2))
        k = (b.modulus, b.negative, b.angle)
        # keep eigenvalues well apart so clustering cannot merge them
        if any(abs(b.eigenvalue() - o.eigenvalue()) < 1e-2 for o in blocks) or k in keys:
            continue
        keys.add(k)
        blocks.append(b)
    return SpectralSpec(tuple(blocks))


def _signature(spec):
    out = []
    for b in spec.blocks:
        ang = b.angle if isinstance(b.angle, RationalPi) else None
        out.append((b.kind.value, b.size, round(float(b.modulus), 7), b.negative, str(ang)))
    return sorted(out)


def test_realize_eigenstructure_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(200):
        spec = _random_spec(rng)
        if not spec.blocks:
            continue
        sys_ = realize(spec)
        assert krylov_cyclic_check(sys_)
        got = eigenstructure(sys_, 64, 1e-9)
        assert _signature(got) == _signature(spec)


def test_block_validation():
    with pytest.raises(ValueError):
        SpectralBlock(BlockKind.REAL_POSITIVE, F(3, 2))
    with pytest.raises(ValueError):
        SpectralBlock(BlockKind.JORDAN, F(1, 2), size=1)
    with pytest.raises(ValueError):
        RationalPi(2, 4)
    with pytest.raises(NotCyclicError):
        SpectralSpec((real_block(F(1, 2)), real_block(F(1, 2))))


def test_rawsystem_validation():
    with pytest.raises(ValueError):
        RawSystem([[2]], [1])
    with pytest.raises(ValueError):
        RawSystem([[F(1, 2), 0], [0, 0]], [1, 1])
    with pytest.raises(ValueError):
        RawSystem([[F(1, 2)]], [0])
    with pytest.raises(ValueError):
        RawSystem([[F(1, 2), 0]], [1])


def test_block_diag_system():
    s = block_diag_system(RawSystem([[F(1, 2)]], [1]), RawSystem([[F(1, 3)]], [2]))
    assert s.matrix == ((F(1, 2), 0), (0, F(1, 3)))
    assert s.u == (1, 2)


def test_parse_block_lines():
    spec = parse_spec("block rotation r=0.95 angle=1/2pi\n")
    (b,) = spec.blocks
    assert b.kind is BlockKind.ROTATION and b.modulus == F(19, 20) and b.angle == RationalPi(1, 2)
    spec = parse_spec("block rotation r=19/20 angle=1/3 pi  # comment\nblock real k=-1/2\n")
    assert [b.kind for b in spec.blocks] == [BlockKind.ROTATION, BlockKind.REAL_NEGATIVE]
    spec = parse_spec("block jordan k=1/2 size=2\nblock rotation r=0.9 angle=irrational:1.0\n")
    assert spec.blocks[0].size == 2 and isinstance(spec.blocks[1].angle, IrrationalAngle)


def test_parse_reducible_angle_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        spec = parse_spec("block rotation r=1/2 angle=2/4pi\n")
    assert spec.blocks[0].angle == RationalPi(1, 2)
    assert w


def test_parse_matrix():
    s = parse_spec("matrix\nrow 1/2 0\nrow 0 -1/3\nu 1 1\n")
    assert s.exact and s.matrix == ((F(1, 2), 0), (0, F(-1, 3)))
    s = parse_spec("row 0.5 0\nrow 0 0.25\nu 1 1\n")
    assert not s.exact
    s = parse_spec("row 0.5 0\nrow 0 0.25\nu 1 1\nmode exact\n")
    assert s.exact and s.matrix[0][0] == F(1, 2)


@pytest.mark.parametrize("text,key", [
    ("block rotation r=1.2 angle=1/2pi\n", "r"),
    ("block rotation r=0.5\n", "angle"),
    ("block jordan k=0.5\n", "size"),
    ("block wobble k=0.5\n", "kind"),
    ("block real k=0.5 colour=red\n", "colour"),
    ("row 1/2 0\nrow 0 1/3\n", "u"),
    ("frobnicate 3\n", "frobnicate"),
    ("row 1/2 0\nrow 0 1/3\nu 1 1\nmode fuzzy\n", "mode"),
])
def test_parse_errors_name_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_spec(text)
    assert exc.value.key == key
    assert key in str(exc.value)


def test_determinant_of_rotation_block():
    spec = SpectralSpec((rotation_block(F(9, 10), F(1, 4)),))
    assert spec.determinant_abs() == F(81, 100)


def test_exact_triangular_matrix_gives_exact_spectrum():
    sys_ = RawSystem([[Fraction(9, 10), 1], [0, Fraction(-9, 10)]], [0, 1])
    spec = eigenstructure(sys_)
    assert spec.exact
    assert sorted(str(b) for b in spec.blocks) == ["real k=-9/10", "real k=9/10"]
    full = RawSystem([[0, Fraction(-81, 100)], [1, Fraction(1, 5)]], [1, 0])
    assert not eigenstructure(full).exact
