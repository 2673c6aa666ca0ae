"""Acceptance gate: six end-to-end criteria, one pass/fail line each.

Each test prints its verdict outside pytest's capture so the line shows up
in plain `pytest -v` output.  The criteria:

  1  local-image formula agrees with brute-force descent in all nine
     classified cases, >= 25 randomized instances per case, under 60 s
  2  reduction-type table (Kodaira symbol + Tamagawa number) matches the
     Tate runner on every classified valuation profile, >= 25 per row
  3  the Selmer-quotient ratio equals the product of local factors for
     >= 25 prime-triple pairs with entries <= 500, at d = 1, -1 and 5
  4  full pipeline (site -> search -> certify -> verify) yields >= 5
     certificates per twist for D = -1 and D = 5, pairwise distinct j,
     ranks (1, 0, 1), Selmer orders (2, 4, 2, 2), all inside 10 minutes
  5  the six structural invariants of the built D = -1 site all hold
  6  algebraic identities: dual-composed-with-isogeny is doubling,
     marked point on-curve, connecting-map multiplicativity, and the
     marked point is non-torsion on every certificate from criterion 4
"""

import random
import time
from collections import Counter
from fractions import Fraction

from twodescent.certify import demo_batch, verify
from twodescent.curves import (
    INFINITY,
    FamilyParams,
    group_law,
    is_nontorsion,
    isogeny_pair,
    make_pair,
    marked_point,
    scalar_multiple,
)
from twodescent.exactnum import is_local_square, is_prime, kronecker, square_class
from twodescent.localimage import image_of_phi_descent, predicted_image_at
from twodescent.selmer import selmer_ratio_report
from twodescent.sitebuilder import build_site, site_invariants, template_local_pair
from twodescent.tate import expected_reduction, profile_at, tate_at

_ODD_PRIMES = [p for p in range(3, 200) if is_prime(p)]
_TEMPLATES = [(0, 0, 1), (1, 0, 0), (0, 1, 0), (-1, 1, -1), (0, 2, 0)]

_cache: dict = {}


def _site(D: int):
    if ("site", D) not in _cache:
        _cache[("site", D)] = build_site(D)
    return _cache[("site", D)]


def _certified(D: int):
    """The criterion-4 certificate batch (cached so criterion 6 reuses it)."""
    if ("certs", D) not in _cache:
        failures: list = []
        certs = demo_batch(D, 5, _site(D), height_bound=10**45, failures=failures)
        _cache[("certs", D)] = (certs, failures)
    return _cache[("certs", D)]


def _announce(capfd, number: int, label: str, body):
    try:
        detail = body()
    except BaseException as err:
        with capfd.disabled():
            print(
                f"\nACCEPTANCE CRITERION {number} [{label}]: FAIL -- {err!r}",
                flush=True,
            )
        raise
    with capfd.disabled():
        print(
            f"\nACCEPTANCE CRITERION {number} [{label}]: PASS -- {detail}",
            flush=True,
        )


def _least_nonresidue(p: int) -> int:
    return next(u for u in range(2, p) if kronecker(u, p) == -1)


def _unit_profile_pair(rng, p):
    """Random (a, b) whose profile at p is (0, 0, 0)."""
    while True:
        a, b = rng.randint(1, 400), rng.randint(1, 400)
        if a != b and a * (a + b) * (a - b) % p != 0:
            return Fraction(a), Fraction(b)


def test_criterion_1_local_image_formula_vs_bruteforce(capfd):
    def body():
        start = time.monotonic()
        rng = random.Random(92001)
        counts: Counter = Counter()
        checks = 0
        for _ in range(25):
            p = rng.choice(_ODD_PRIMES)
            u = _least_nonresidue(p)
            pairs = [_unit_profile_pair(rng, p)]
            for profile in _TEMPLATES:
                pairs.append(
                    template_local_pair(
                        profile,
                        p,
                        unit_square=rng.random() < 0.5,
                        nonsquare_a=rng.random() < 0.5,
                    )
                )
            for a, b in pairs:
                for d in (1, u):
                    params = FamilyParams(a, b, d)
                    predicted = predicted_image_at(params, p)
                    brute = image_of_phi_descent(params, p)
                    assert predicted == brute, (a, b, d, p)
                    checks += 1
                    m = profile_at(params, p)
                    if m in ((0, 1, 0),):
                        case = f"{m} d {'' if is_local_square(d, p) else 'non'}square"
                    elif m in ((-1, 1, -1), (0, 2, 0)):
                        sq = is_local_square(-2 * a * (a + b) * d, p)
                        case = f"{m} -2a(a+b)d {'' if sq else 'non'}square"
                    else:
                        case = str(m)
                    counts[case] += 1
        elapsed = time.monotonic() - start
        assert len(counts) == 9, sorted(counts)
        assert min(counts.values()) >= 25, counts
        assert elapsed < 60, f"{elapsed:.1f}s"
        return (
            f"9 cases x >=25 instances, {checks} exact formula/bruteforce "
            f"agreements in {elapsed:.1f}s"
        )

    _announce(capfd, 1, "local-image oracle agreement", body)


def test_criterion_2_reduction_table(capfd):
    def body():
        rng = random.Random(92002)
        rows = Counter()
        for profile in _TEMPLATES + [(0, 0, 0)]:
            for _ in range(25):
                p = rng.choice(_ODD_PRIMES)
                if profile == (0, 0, 0):
                    a, b = _unit_profile_pair(rng, p)
                else:
                    a, b = template_local_pair(
                        profile,
                        p,
                        unit_square=rng.random() < 0.5,
                        nonsquare_a=rng.random() < 0.5,
                    )
                d = rng.choice((1, _least_nonresidue(p)))
                params = FamilyParams(a, b, d)
                (kod, c), (kod_dual, c_dual) = expected_reduction(params, p)
                E, Ep, _, _ = make_pair(params)
                red, red_dual = tate_at(E, p), tate_at(Ep, p)
                assert (red.kodaira, red.tamagawa) == (kod, c), (a, b, d, p)
                assert (red_dual.kodaira, red_dual.tamagawa) == (
                    kod_dual,
                    c_dual,
                ), (a, b, d, p)
                rows[profile] += 1
        assert all(n >= 25 for n in rows.values())
        return f"{len(rows)} profile rows x 25 instances, Kodaira/Tamagawa exact"

    _announce(capfd, 2, "reduction-type table reproduction", body)


def test_criterion_3_selmer_ratio_identity(capfd):
    def body():
        candidates = [
            (a, b)
            for a in range(2, 500)
            for b in range(a + 1, 501)
            if is_prime(a)
            and is_prime(a + b)
            and is_prime(b - a)
            and len({a, a + b, b - a}) == 3
        ]
        rng = random.Random(92003)
        rng.shuffle(candidates)
        sample = candidates[:27]
        assert len(sample) >= 25
        checks = 0
        for a, b in sample:
            for d in (1, -1, 5):
                ratio_dims, ratio_local, _ = selmer_ratio_report(
                    FamilyParams(a, b, d)
                )
                assert ratio_dims == ratio_local, (a, b, d)
                checks += 1
        return f"{len(sample)} prime-triple pairs x d in {{1, -1, 5}}: {checks} exact ratio identities"

    _announce(capfd, 3, "Selmer ratio = product of local factors", body)


def test_criterion_4_pipeline_demo(capfd):
    def body():
        start = time.monotonic()
        summary = []
        for D in (-1, 5):
            certs, failures = _certified(D)
            assert len(certs) == 5, f"D={D}: {len(certs)} certificates"
            assert len({c.j for c in certs}) == 5, f"D={D}: repeated j"
            for cert in certs:
                assert cert.ranks == (1, 0, 1)
                dims1 = cert.document["local_data"]["1"]["selmer"]["dims"]
                dimsD = cert.document["local_data"][str(D)]["selmer"]["dims"]
                orders = tuple(2 ** int(x) for x in dims1 + dimsD)
                assert orders == (2, 4, 2, 2), f"D={D}: orders {orders}"
                ok, report = verify(cert)
                assert ok, f"D={D}: {report}"
            summary.append(f"D={D}: 5 verified ({len(failures)} failed pairs)")
        elapsed = time.monotonic() - start
        assert elapsed <= 600, f"{elapsed:.0f}s exceeds 10 minutes"
        return f"{'; '.join(summary)}; distinct j, orders (2,4,2,2), {elapsed:.0f}s"

    _announce(capfd, 4, "site->search->certify->verify demo", body)


def test_criterion_5_site_invariants(capfd):
    def body():
        invariants = site_invariants(_site(-1))
        assert len(invariants) == 6
        for name, holds in invariants.items():
            assert holds, name
        return "all six structural checks hold: " + ", ".join(sorted(invariants))

    _announce(capfd, 5, "built-site invariants at D = -1", body)


def test_criterion_6_algebraic_identities(capfd):
    def body():
        rng = random.Random(92006)

        # dual-composed-with-isogeny is multiplication by 2
        doubled = 0
        while doubled < 100:
            a = rng.randint(1, 60)
            b = rng.randint(a + 1, 120)
            params = FamilyParams(a, b, 1)
            E = make_pair(params)[0]
            phi, phi_hat = isogeny_pair(params)
            P1 = marked_point(a, b)
            for P in (P1, scalar_multiple(E, 2, P1), (Fraction(0), Fraction(0))):
                assert phi_hat(phi(P)) == scalar_multiple(E, 2, P), (a, b, P)
                doubled += 1

        # the marked point lies on the curve for random admissible pairs
        on_curve = 0
        for _ in range(100):
            a = rng.randint(1, 10**6)
            b = rng.randint(a + 1, 2 * 10**6)
            E = make_pair(FamilyParams(a, b, 1))[0]
            assert E.contains(marked_point(a, b)), (a, b)
            on_curve += 1

        # the connecting map x-class is multiplicative on the dual curve
        triples = 0
        while triples < 100:
            a = rng.randint(1, 40)
            b = rng.randint(a + 1, 80)
            params = FamilyParams(a, b, 1)
            Ep = make_pair(params)[1]
            phi, _ = isogeny_pair(params)
            Q1 = phi(marked_point(a, b))
            pool = [Q1, scalar_multiple(Ep, 2, Q1), (Fraction(0), Fraction(0))]

            def delta_x(R):
                if R is INFINITY:
                    return Fraction(1)
                return Ep.beta if R[0] == 0 else R[0]

            for P in pool:
                for Q in pool:
                    product = delta_x(P) * delta_x(Q) * delta_x(group_law(Ep, P, Q))
                    assert square_class(product).is_trivial(), (a, b, P, Q)
                    triples += 1

        # the marked point is non-torsion on every certified pair
        nontorsion = 0
        for D in (-1, 5):
            certs, _ = _certified(D)
            for cert in certs:
                E = make_pair(FamilyParams(cert.a, cert.b, 1))[0]
                assert is_nontorsion(E, marked_point(cert.a, cert.b))
                nontorsion += 1

        return (
            f"dual∘isogeny=[2] on {doubled} points; marked point on-curve "
            f"x{on_curve}; connecting map multiplicative on {triples} "
            f"triples; non-torsion on all {nontorsion} certified pairs"
        )

    _announce(capfd, 6, "algebraic identities", body)
