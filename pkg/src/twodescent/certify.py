"""Self-contained rank certificates for pairs found on a site.

certify(a, b, D, site) runs both descents (d = 1 and d = D) from scratch
and succeeds only when the Selmer dimensions are (1, 2) and (1, 1), the
marked point has infinite order, and the rank bounds therefore pin
rank E_1(Q) = 1 and rank E_D(Q) = 0 -- hence rank 1 over Q(sqrt(D)).
Nothing is taken from the site except the prime list (to name q1, q2, q3)
and pi1/site-hash bookkeeping: a pair the site admits but whose descent
comes out differently is a first-class failure carrying its full
diagnostic table, never a weakened certificate.

The certificate is a plain JSON document (schema version 1) recording
every ingredient: curve coefficients, per-place reduction types, local
images by both methods where the formula applies, Selmer bases, the
non-torsion witness, rank claims, and side diagnostics.  verify() rebuilds
the entire document from (a, b, D) alone and reports the first divergence,
so a certificate is exactly as trustworthy as the recomputation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction

from . import __version__
from .curves import (
    FamilyParams,
    is_nontorsion,
    j_invariant,
    make_pair,
    marked_point,
    nontorsion_witness,
)
from .exactnum import REAL, DomainError, kronecker, sfree_part
from .localimage import (
    image_of_dual_descent,
    image_of_phi_descent,
    predicted_image_at,
)
from .pairsearch import SearchExhausted, SearchTask, find_pairs, stripped_prime
from .selmer import (
    _class_value,
    _mask_of_class,
    bad_places,
    rank_from_descent,
    selmer_ratio_report,
    twist_rank_over_L,
)
from .sitebuilder import SiteSpec, normalize_twist, site_hash
from .tate import UnsupportedProfileError, tate_at

__all__ = [
    "Certificate",
    "CertificationFailed",
    "certify",
    "verify",
    "demo_batch",
]


class CertificationFailed(RuntimeError):
    """The descent outcome differs from the certified pattern; carries the
    full diagnostic table instead of a certificate."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Certificate:
    document: dict

    @property
    def a(self) -> Fraction:
        return _unrat(self.document["a"])

    @property
    def b(self) -> Fraction:
        return _unrat(self.document["b"])

    @property
    def D(self) -> int:
        return int(self.document["D"])

    @property
    def ranks(self) -> tuple[int, int, int]:
        r = self.document["ranks"]
        return int(r["E1_Q"]), int(r["ED_Q"]), int(r["E1_L"])

    @property
    def j(self) -> Fraction:
        return _unrat(self.document["j_invariant"])

    def json(self) -> str:
        return json.dumps(self.document, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.json().encode()).hexdigest()

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        return cls(json.loads(text))


# ----------------------------------------------------------------------
# document plumbing: every number becomes a decimal string, every rational
# a {"num","den"} pair, places "real" or the prime in decimal


def _rat(x) -> dict:
    x = Fraction(x)
    return {"num": str(x.numerator), "den": str(x.denominator)}


def _unrat(d: dict) -> Fraction:
    return Fraction(int(d["num"]), int(d["den"]))


def _place_key(place) -> str:
    return "real" if place == REAL else str(place)


def _classes_doc(classes) -> list:
    return [str(c) for c in sorted(classes)]


def _reduction_doc(red) -> dict:
    return {
        "kodaira": red.kodaira,
        "tamagawa": str(red.tamagawa),
        "v_min_disc": str(red.v_min_disc),
        "split": red.split,
    }


def _descent_block(params: FamilyParams, known_points) -> tuple[dict, object]:
    """(document block for one twist, DescentSummary)."""
    summary = rank_from_descent(params, known_points)
    E, Ep, _, _ = make_pair(params)
    places = bad_places(params)

    images = {}
    for place in places:
        brute_phi = image_of_phi_descent(params, place)
        brute_dual = image_of_dual_descent(params, place)
        formula = None
        if place != REAL and place != 2 and params.d % place != 0:
            try:
                formula = predicted_image_at(params, place)
            except (DomainError, UnsupportedProfileError):
                formula = None
        if formula is not None and formula != brute_phi:
            raise RuntimeError(
                f"formula/brute image mismatch at {place}: "
                f"{sorted(formula)} vs {sorted(brute_phi)}"
            )
        images[_place_key(place)] = {
            "phi": {
                "brute": _classes_doc(brute_phi),
                "formula": None if formula is None else _classes_doc(formula),
            },
            "phi_dual": {"brute": _classes_doc(brute_dual)},
        }

    reductions = {}
    for place in places:
        if place == REAL:
            continue
        reductions[_place_key(place)] = {
            "curve": _reduction_doc(tate_at(E, place)),
            "dual": _reduction_doc(tate_at(Ep, place)),
        }

    ratio_dims, ratio_local, _ = selmer_ratio_report(params)
    block = {
        "places": [_place_key(v) for v in places],
        "reductions": reductions,
        "images": images,
        "selmer": {
            "phi_basis": _classes_doc(summary.classes(dual=False)),
            "phi_dual_basis": _classes_doc(summary.classes(dual=True)),
            "dims": [str(d) for d in summary.dims],
        },
        "cassels_ratio": {
            "from_dims": str(ratio_dims),
            "from_local_factors": str(ratio_local),
            "equal": ratio_dims == ratio_local,
        },
    }
    return block, summary


def _build_document(a, b, D, *, pi1, site_hash_hex, toolchain, strip):
    """The full certificate document; raises CertificationFailed when the
    descent outcome differs from the certified pattern."""
    a, b = Fraction(a), Fraction(b)
    diagnostics: dict = {}

    def fail(message: str):
        raise CertificationFailed(message, diagnostics)

    if not 0 < a < b:
        raise DomainError("need 0 < a < b")
    if D != normalize_twist(D) or D == 1:
        raise DomainError("D must be a squarefree integer != 0, 1")

    diagnostics["s_integers"] = (
        sfree_part(a.denominator, strip) == 1
        and sfree_part(b.denominator, strip) == 1
    )
    if not diagnostics["s_integers"]:
        fail("a, b are not S-integers for this site")

    # everything below is computed before any gate fires, so a failed
    # certification still carries the complete diagnostic table
    triple = [
        stripped_prime(x.numerator, strip) for x in (a, a + b, b - a)
    ]
    diagnostics["prime_triple"] = [str(q) if q else None for q in triple]

    params1 = FamilyParams(a, b, 1)
    paramsD = FamilyParams(a, b, D)
    P1 = marked_point(a, b)
    E1 = make_pair(params1)[0]

    diagnostics["marked_point_on_curve"] = E1.contains(P1)
    diagnostics["marked_point_nontorsion"] = diagnostics[
        "marked_point_on_curve"
    ] and is_nontorsion(E1, P1)

    block1, summary1 = _descent_block(params1, [P1])
    blockD, summaryD = _descent_block(paramsD, [])
    diagnostics["dims_d1"] = [str(x) for x in summary1.dims]
    diagnostics["dims_dD"] = [str(x) for x in summaryD.dims]

    # side facts recorded for every attempt
    two_a_apb = 2 * a * (a + b)
    diagnostics["selmer_phi_d1_is_two_a_a_plus_b"] = summary1.sel_phi == (
        _mask_of_class(two_a_apb, summary1.gens),
    )
    diagnostics["selmer_phi_dD_is_two_a_a_plus_b"] = summaryD.sel_phi == (
        _mask_of_class(two_a_apb, summaryD.gens),
    )
    diagnostics["cassels_identity_d1"] = block1["cassels_ratio"]["equal"]
    diagnostics["cassels_identity_dD"] = blockD["cassels_ratio"]["equal"]
    diagnostics["ratio_d1"] = block1["cassels_ratio"]["from_dims"]
    diagnostics["ratio_dD"] = blockD["cassels_ratio"]["from_dims"]

    if None in triple or len(set(triple)) != 3:
        fail("the parts of a, a+b, b-a outside S are not three distinct primes")
    q1, q2, q3 = triple
    diagnostics["q2_inert_in_twist_field"] = kronecker(D, q2) == -1
    diagnostics["pi1_nonsquare_mod_q3"] = (
        None if pi1 is None else kronecker(pi1, q3) == -1
    )

    if not diagnostics["marked_point_nontorsion"]:
        fail("marked point is torsion or off-curve")
    if summary1.dims != (1, 2):
        fail(f"d=1 Selmer dimensions {summary1.dims} != (1, 2)")
    if summaryD.dims != (1, 1):
        fail(f"d=D Selmer dimensions {summaryD.dims} != (1, 1)")

    r1, rD = summary1.rank_exact, summaryD.rank_exact
    if r1 != 1 or rD != 0:
        fail(f"rank bounds did not pin (1, 0): got ({r1}, {rD})")
    rL = twist_rank_over_L(r1, rD)

    # dim E_d(Q)/2E_d(Q) = rank + 1 (torsion contributes one Z/2 factor)
    diagnostics["weak_mw_dims"] = [str(r1 + 1), str(rD + 1)]

    E1p = make_pair(params1)[1]
    ED, EDp, _, _ = make_pair(paramsD)
    document = {
        "version": "1",
        "toolchain": toolchain,
        "site_hash": site_hash_hex,
        "pi1": None if pi1 is None else str(pi1),
        "site_primes": [str(p) for p in strip],
        "D": str(D),
        "a": _rat(a),
        "b": _rat(b),
        "q1": str(q1),
        "q2": str(q2),
        "q3": str(q3),
        "curves": {
            "E1": {"alpha": _rat(E1.alpha), "beta": _rat(E1.beta)},
            "E1_dual": {"alpha": _rat(E1p.alpha), "beta": _rat(E1p.beta)},
            "ED": {"alpha": _rat(ED.alpha), "beta": _rat(ED.beta)},
            "ED_dual": {"alpha": _rat(EDp.alpha), "beta": _rat(EDp.beta)},
        },
        "j_invariant": _rat(j_invariant(a, b)),
        "marked_point": {"x": _rat(P1[0]), "y": _rat(P1[1])},
        "nontorsion_witness_x": [_rat(x) for x in nontorsion_witness(E1, P1)],
        "local_data": {"1": block1, str(D): blockD},
        "ranks": {"E1_Q": str(r1), "ED_Q": str(rD), "E1_L": str(rL)},
        "diagnostics": diagnostics,
    }
    return document


def certify(a, b, D: int, site: SiteSpec) -> Certificate:
    """Run both descents for (a, b) and the twist D and emit a certificate.

    Raises CertificationFailed when the pair does not produce the certified
    descent pattern, DomainError for malformed input.
    """
    if site.D != D:
        raise DomainError(f"site was built for D = {site.D}, not {D}")
    document = _build_document(
        Fraction(a),
        Fraction(b),
        D,
        pi1=site.pi1,
        site_hash_hex=site_hash(site),
        toolchain=f"twodescent {__version__}",
        strip=list(site.all_primes()),
    )
    document["diagnostics"]["site_admits_pair"] = site.admits(a, b)
    return Certificate(document)


def _first_divergence(expected, got, path="certificate"):
    if isinstance(expected, dict) and isinstance(got, dict):
        for key in sorted(set(expected) | set(got)):
            if key not in expected:
                return f"{path}.{key}: unexpected entry"
            if key not in got:
                return f"{path}.{key}: missing"
            sub = _first_divergence(expected[key], got[key], f"{path}.{key}")
            if sub is not None:
                return sub
        return None
    if isinstance(expected, list) and isinstance(got, list):
        if len(expected) != len(got):
            return f"{path}: length {len(got)} != {len(expected)}"
        for i, (e, g) in enumerate(zip(expected, got)):
            sub = _first_divergence(e, g, f"{path}[{i}]")
            if sub is not None:
                return sub
        return None
    if expected != got:
        return f"{path}: recorded {got!r}, recomputed {expected!r}"
    return None


def verify(certificate: Certificate) -> tuple[bool, str]:
    """Recompute the whole document from (a, b, D) and compare.

    toolchain and site_hash are provenance and copied through; everything
    else -- curves, reductions, images (brute everywhere, formula where it
    applies), Selmer bases, ratios, witness, ranks, diagnostics -- must be
    reproduced bit-for-bit.
    """
    doc = certificate.document
    try:
        a, b = _unrat(doc["a"]), _unrat(doc["b"])
        D = int(doc["D"])
        pi1 = None if doc.get("pi1") is None else int(doc["pi1"])
        strip = [int(p) for p in doc["site_primes"]]
    except (KeyError, TypeError, ValueError) as err:
        return False, f"malformed certificate: {err!r}"

    try:
        fresh = _build_document(
            a,
            b,
            D,
            pi1=pi1,
            site_hash_hex=doc.get("site_hash"),
            toolchain=doc.get("toolchain"),
            strip=strip,
        )
    except CertificationFailed as failed:
        return False, f"recomputation refuses to certify: {failed}"
    except (DomainError, RuntimeError) as err:
        return False, f"recomputation failed: {err}"

    if "site_admits_pair" in doc.get("diagnostics", {}):
        fresh["diagnostics"]["site_admits_pair"] = doc["diagnostics"][
            "site_admits_pair"
        ]

    divergence = _first_divergence(fresh, doc)
    if divergence is not None:
        return False, divergence
    return True, "every recorded fact was recomputed and matched"


def demo_batch(
    D: int,
    count: int,
    site: SiteSpec,
    *,
    height_bound: int,
    jobs: int = 1,
    checkpoint_path=None,
    failures: list | None = None,
) -> list[Certificate]:
    """Certificates for `count` pairwise non-isomorphic curves (distinct j).

    Pairs whose j-invariant repeats an already-certified one are skipped,
    not failed; pairs failing certification are recorded in `failures`
    (when given) and the search continues.  Raises SearchExhausted when the
    height bound (or the pair stream) runs out first.
    """
    if count == 0:
        return []
    task = SearchTask(site, height_bound=height_bound, count=10 * count + 16)
    certificates: list[Certificate] = []
    seen_j: set = set()
    pairs_seen = 0
    for pair in find_pairs(task, checkpoint_path=checkpoint_path, jobs=jobs):
        pairs_seen += 1
        j = j_invariant(pair.a, pair.b)
        if j in seen_j:
            continue
        try:
            cert = certify(pair.a, pair.b, D, site)
        except CertificationFailed as failed:
            if failures is not None:
                failures.append((pair, failed.diagnostics))
            continue
        seen_j.add(j)
        certificates.append(cert)
        if len(certificates) == count:
            return certificates
    raise SearchExhausted(
        f"pair stream ended with {len(certificates)} of {count} certificates",
        {
            "pairs_seen": pairs_seen,
            "certificates": len(certificates),
            "failures": None if failures is None else len(failures),
        },
    )
