"""Two-digit self-affine attractors: interior and connectivity verdicts,
classification of the set of uniqueness, and certified unique addresses."""

__version__ = "0.1.0"

from .attractor import Address, cylinder_cloud, project_address, tail_bound  # noqa: E402
from .classifier import classify_uniqueness, connectivity_verdict, interior_verdict  # noqa: E402
from .constants import golden_ratio, komornik_loreti, thue_morse  # noqa: E402
from .spectral import RawSystem, SpectralSpec, parse_spec  # noqa: E402
from .uniqueness import certify_address, enumerate_unique_periodic  # noqa: E402

__all__ = [
    "Address", "RawSystem", "SpectralSpec", "certify_address", "classify_uniqueness",
    "connectivity_verdict", "cylinder_cloud", "enumerate_unique_periodic", "golden_ratio",
    "interior_verdict", "komornik_loreti", "parse_spec", "project_address", "tail_bound",
    "thue_morse",
]
