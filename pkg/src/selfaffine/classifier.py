"""Verdicts on the attractor and on its set of uniqueness.

``classify_uniqueness`` dispatches on the spectrum in a fixed order:
Jordan block, irrational angle, two different moduli, and otherwise the
equal-moduli rational case where a parameter beta decides the bucket.
``interior_verdict`` and ``connectivity_verdict`` are determinant threshold
tests.
"""

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .constants import Enclosure, golden_ratio, komornik_loreti
from .errors import PrecisionExhausted
from .spectral import (
    BlockKind,
    IrrationalAngle,
    SpectralSpec,
    minimal_real_power,
    sign_of_power,
)

# enclosure widths tried, coarse to fine, when beta sits near the KL constant
KL_REFINEMENT = tuple(Fraction(1, 10**k) for k in (12, 24, 48, 96, 192))


class Verdict(enum.Enum):
    FINITE_NON_EMPTY = "FiniteNonEmpty"
    INFINITE_COUNTABLE = "InfiniteCountable"
    UNCOUNTABLE_ZERO_DIM = "UncountableZeroDim"
    POSITIVE_DIM = "PositiveHausdorffDim"


class Rule(enum.Enum):
    JORDAN = "Jordan"
    IRRATIONAL_ANGLE = "IrrationalAngle"
    DISTINCT_MODULI = "DistinctModuli"
    RATIONAL_EQUAL_MODULI = "RationalEqualModuli"


class Confidence(enum.Enum):
    EXACT = "Exact"
    HEURISTIC = "Heuristic"


@dataclass(frozen=True)
class UniquenessClass:
    verdict: Verdict
    rule: Rule
    confidence: Confidence
    beta: Fraction | float | None = None
    q: int | None = None
    sign_conflict: bool = False
    signs: tuple = ()
    trace: tuple = field(default=(), compare=False)
    bounds: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        out = {
            "verdict": self.verdict.value,
            "rule": self.rule.value,
            "confidence": self.confidence.value,
            "sign_conflict": self.sign_conflict,
            "trace": list(self.trace),
        }
        if self.q is not None:
            out["q"] = self.q
            out["signs"] = list(self.signs)
        if self.beta is not None:
            out["beta"] = {
                "exact": str(self.beta) if isinstance(self.beta, Fraction) else None,
                "decimal": float(self.beta),
            }
            out["bounds"] = {k: [str(v.lo), str(v.hi)] for k, v in self.bounds.items()}
        return out


def _equal(a, b, spec):
    if spec.exact:
        return a == b
    tol = spec.tolerance or 1e-9
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _bucket_exact(beta, trace):
    """Bucket a rational beta > 1 against G and the KL constant."""
    bounds = {}
    # beta <= G  <=>  beta^2 - beta - 1 <= 0 for beta > 0; exact, no enclosure needed
    if beta * beta - beta - 1 <= 0:
        trace.append("beta^2 - beta - 1 <= 0, so beta in (1, G]")
        bounds["G"] = golden_ratio(KL_REFINEMENT[0])
        return Verdict.FINITE_NON_EMPTY, bounds
    bounds["G"] = golden_ratio(KL_REFINEMENT[0])
    trace.append("beta > G")
    for prec in KL_REFINEMENT:
        kl = komornik_loreti(prec)
        bounds["beta_star"] = kl
        if beta < kl.lo:
            trace.append(f"beta < beta_star.lo at enclosure width {float(prec):g}")
            return Verdict.INFINITE_COUNTABLE, bounds
        if beta > kl.hi:
            trace.append(f"beta > beta_star.hi at enclosure width {float(prec):g}")
            return Verdict.POSITIVE_DIM, bounds
    raise PrecisionExhausted(
        f"beta = {beta} lies inside the beta_star enclosure of width {float(KL_REFINEMENT[-1]):g}; "
        "a tighter enclosure is needed to bucket it"
    )


def _bucket_float(beta, tol, trace):
    """Bucket a floating beta; boundary hits within ``tol`` are taken as equality."""
    g = golden_ratio(KL_REFINEMENT[0])
    kl = komornik_loreti(KL_REFINEMENT[0])
    bounds = {"G": g, "beta_star": kl}
    scale = tol * max(1.0, beta)
    if beta <= float(g.hi) + scale:
        trace.append("beta <= G within tolerance")
        return Verdict.FINITE_NON_EMPTY, bounds
    if abs(beta - float(kl.mid)) <= scale + float(kl.width):
        trace.append("beta equals beta_star within tolerance")
        return Verdict.UNCOUNTABLE_ZERO_DIM, bounds
    if beta < float(kl.mid):
        trace.append("G < beta < beta_star")
        return Verdict.INFINITE_COUNTABLE, bounds
    trace.append("beta > beta_star")
    return Verdict.POSITIVE_DIM, bounds


def classify_uniqueness(spec: SpectralSpec) -> UniquenessClass:
    conf = Confidence.EXACT if spec.exact else Confidence.HEURISTIC
    trace = []

    if any(b.kind is BlockKind.JORDAN for b in spec.blocks):
        trace.append("non-trivial Jordan block present")
        return UniquenessClass(Verdict.POSITIVE_DIM, Rule.JORDAN, conf, trace=tuple(trace))

    if any(isinstance(b.angle, IrrationalAngle) for b in spec.blocks):
        trace.append("eigenvalue with irrational argument/pi")
        return UniquenessClass(Verdict.POSITIVE_DIM, Rule.IRRATIONAL_ANGLE, conf, trace=tuple(trace))

    moduli = [b.modulus for b in spec.blocks]
    if any(not _equal(m, moduli[0], spec) for m in moduli[1:]):
        trace.append(f"moduli differ: {sorted({float(m) for m in moduli})}")
        return UniquenessClass(Verdict.POSITIVE_DIM, Rule.DISTINCT_MODULI, conf, trace=tuple(trace))

    q = minimal_real_power(spec)
    signs = tuple(sign_of_power(b, q) for b in spec.blocks)
    conflict = len(set(signs)) > 1
    r = moduli[0]
    exponent = 2 * q if conflict else q
    beta = (1 / r) ** exponent
    trace.append(f"all moduli equal to {r}; q = {q}; signs of kappa^q = {list(signs)}")
    trace.append(f"beta = modulus^-{exponent} = {beta}" + (" (sign conflict)" if conflict else ""))

    if isinstance(beta, Fraction):
        verdict, bounds = _bucket_exact(beta, trace)
    else:
        verdict, bounds = _bucket_float(float(beta), spec.tolerance or 1e-9, trace)
    return UniquenessClass(
        verdict, Rule.RATIONAL_EQUAL_MODULI, conf,
        beta=beta, q=q, sign_conflict=conflict, signs=signs,
        trace=tuple(trace), bounds=bounds,
    )


# ---------------------------------------------------------------- interior

class Interior(enum.Enum):
    NON_EMPTY = "NonEmptyByTheorem"
    EMPTY_NULL_SET = "EmptyNullSet"
    UNKNOWN = "Unknown"


class Connectivity(enum.Enum):
    PATH_CONNECTED = "PathConnected"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class InteriorVerdict:
    verdict: Interior
    det_abs: Fraction | float
    dimension: int

    @property
    def threshold_hi(self):
        return 2.0 ** (-1.0 / self.dimension)

    threshold_lo = Fraction(1, 2)

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "det_abs": float(self.det_abs),
            "det_abs_exact": str(self.det_abs) if isinstance(self.det_abs, Fraction) else None,
            "dimension": self.dimension,
            "threshold_hi": self.threshold_hi,
            "threshold_lo": float(self.threshold_lo),
        }


def _det_and_dim(sys_or_spec):
    if isinstance(sys_or_spec, SpectralSpec):
        return sys_or_spec.determinant_abs(), sys_or_spec.dimension
    return sys_or_spec.determinant_abs(), sys_or_spec.d


def det_at_least_two_pow(det_abs, d):
    """Exact test of ``det_abs >= 2^(-1/d)``, i.e. ``det_abs^d >= 1/2``."""
    if isinstance(det_abs, Fraction):
        return det_abs**d * 2 >= 1
    return det_abs**d >= 0.5


def interior_verdict(sys_or_spec) -> InteriorVerdict:
    det_abs, d = _det_and_dim(sys_or_spec)
    if det_at_least_two_pow(det_abs, d):
        v = Interior.NON_EMPTY
    elif det_abs < Fraction(1, 2):
        v = Interior.EMPTY_NULL_SET
    else:
        v = Interior.UNKNOWN
    return InteriorVerdict(v, det_abs, d)


def connectivity_verdict(sys_or_spec) -> Connectivity:
    det_abs, _ = _det_and_dim(sys_or_spec)
    return Connectivity.PATH_CONNECTED if det_abs >= Fraction(1, 2) else Connectivity.UNKNOWN


__all__ = [
    "Confidence", "Connectivity", "Enclosure", "Interior", "InteriorVerdict", "Rule",
    "UniquenessClass", "Verdict", "classify_uniqueness", "connectivity_verdict",
    "interior_verdict",
]
