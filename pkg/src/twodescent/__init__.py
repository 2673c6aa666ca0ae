"""Exact 2-isogeny descent over Q for the twisted family
y^2 = x^3 + 4a(a+b)d x^2 + 2a(a+b)^2 (a-b) d^2 x, with staged construction
of congruence sites whose admissible pairs certify rank 1 over Q and rank 0
for the quadratic twist by D (hence rank 1 over Q(sqrt(D)))."""

__version__ = "1.0.0"

from .certify import (
    Certificate,
    CertificationFailed,
    certify,
    demo_batch,
    verify,
)
from .curves import FamilyParams, WeierstrassCurve, j_invariant, marked_point
from .pairsearch import (
    FoundPair,
    SearchExhausted,
    SearchTask,
    collect_pairs,
    find_pairs,
)
from .selmer import (
    descent_summary,
    rank_from_descent,
    selmer_dimensions,
    twist_rank_over_L,
)
from .sitebuilder import SiteSpec, build_site, site_from_json, site_to_json

__all__ = [
    "__version__",
    "Certificate",
    "CertificationFailed",
    "certify",
    "demo_batch",
    "verify",
    "FamilyParams",
    "WeierstrassCurve",
    "j_invariant",
    "marked_point",
    "FoundPair",
    "SearchExhausted",
    "SearchTask",
    "collect_pairs",
    "find_pairs",
    "descent_summary",
    "rank_from_descent",
    "selmer_dimensions",
    "twist_rank_over_L",
    "SiteSpec",
    "build_site",
    "site_from_json",
    "site_to_json",
]
