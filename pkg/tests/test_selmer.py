"""Global Selmer groups: frozen worked example plus randomized cross-checks.

The structured route assembles the Selmer group as an F_2 kernel of local
conditions; the oracle here enumerates every candidate square class and
tests membership place by place with set lookups.  Both routes share only
the local images, which test_localimage already pins against naive p-adic
scans.
"""

import random
from fractions import Fraction

import pytest

from twodescent.curves import FamilyParams, make_pair, marked_point
from twodescent.exactnum import DomainError, REAL, square_class
from twodescent.localimage import (
    image_of_dual_descent,
    image_of_phi_descent,
    local_square_classes,
)
from twodescent.selmer import (
    bad_places,
    rank_from_descent,
    twist_rank_over_L,
    descent_summary,
    rank_interval,
    selmer_basis,
    selmer_dimensions,
    selmer_generators,
    selmer_ratio_report,
)


def _value(mask, gens):
    v = 1
    for i, g in enumerate(gens):
        if (mask >> i) & 1:
            v *= g
    return v


def _span_values(basis, gens):
    span = {0}
    for v in basis:
        span |= {s ^ v for s in span}
    return sorted(_value(m, gens) for m in span)


def _brute_members(params, dual):
    """Oracle: test every candidate class at every bad place directly."""
    gens = selmer_generators(params)
    places = bad_places(params)
    images = {
        pl: (image_of_dual_descent(params, pl) if dual else image_of_phi_descent(params, pl))
        for pl in places
    }
    out = []
    for mask in range(1 << len(gens)):
        c = _value(mask, gens)
        if all(local_square_classes(pl).localize(c) in images[pl] for pl in places):
            out.append(c)
    return sorted(out)


def test_worked_example_groups():
    params = FamilyParams(5, 8, 1)
    assert selmer_generators(params) == (-1, 2, 3, 5, 13)
    assert bad_places(params) == (REAL, 2, 3, 5, 13)
    gens = selmer_generators(params)
    assert _span_values(selmer_basis(params, False), gens) == [1, 130]
    assert _span_values(selmer_basis(params, True), gens) == [
        -130, -39, -30, -1, 1, 30, 39, 130,
    ]
    assert selmer_dimensions(params) == (1, 3)
    # the classes of the (0,0) points: beta' = 87880 ~ 130, beta = -5070 ~ -30
    E, Ep, _, _ = make_pair(params)
    assert square_class(Ep.beta).value == 130
    assert square_class(E.beta).value == -30


def test_worked_example_ratio_and_rank():
    params = FamilyParams(5, 8, 1)
    lhs, rhs, factors = selmer_ratio_report(params)
    assert lhs == rhs == Fraction(1, 4)
    assert factors == {
        REAL: Fraction(1, 2),
        2: Fraction(1),
        3: Fraction(1, 2),
        5: Fraction(1),
        13: Fraction(1),
    }
    # upper bound 1 + 3 - 2 = 2; marked point supplies the lower bound
    assert rank_interval(params) == (1, 2)


def test_random_instances_match_brute_enumeration():
    rng = random.Random(41002)
    checked = 0
    while checked < 25:
        a = Fraction(rng.randint(-30, 30), rng.choice([1, 1, 1, 2, 3, 5]))
        b = Fraction(rng.randint(-30, 30), rng.choice([1, 1, 1, 2, 3]))
        d = rng.choice([1, 1, 1, -1, 2, 3, -5, 6])
        if a == 0 or a + b == 0 or a - b == 0:
            continue
        params = FamilyParams(a, b, d)
        gens = selmer_generators(params)
        if len(gens) > 7:
            continue
        for dual in (False, True):
            brute = _brute_members(params, dual)
            structured = _span_values(selmer_basis(params, dual), gens)
            assert brute == structured, (params, dual)
        lhs, rhs, _ = selmer_ratio_report(params)
        assert lhs == rhs, params
        checked += 1
    assert checked == 25


def test_torsion_classes_always_members():
    rng = random.Random(555)
    for _ in range(40):
        a = rng.randint(-20, 20)
        b = rng.randint(-20, 20)
        d = rng.choice([1, -1, 3, 5])
        if a == 0 or a + b == 0 or a - b == 0:
            continue
        params = FamilyParams(a, b, d)
        gens = selmer_generators(params)
        E, Ep, _, _ = make_pair(params)
        assert square_class(Ep.beta).value in _span_values(
            selmer_basis(params, False), gens
        )
        assert square_class(E.beta).value in _span_values(
            selmer_basis(params, True), gens
        )


def test_rank_interval_requires_nonsquare_beta_prime():
    # 2a(a+b) = 16 is a square, so beta' = 4096 d^2 is one too and the
    # dimension formula's -2 is not valid for this curve
    with pytest.raises(AssertionError):
        rank_interval(FamilyParams(1, 7, 1))


def test_descent_summary_shape():
    params = FamilyParams(5, 8, 1)
    s = descent_summary(params)
    assert s.dims == (1, 3)
    assert s.gens == (-1, 2, 3, 5, 13)
    assert s.places == (REAL, 2, 3, 5, 13)
    assert s.classes(dual=False) == (130,)
    assert set(s.classes(dual=True)) <= {-130, -39, -30, -1, 30, 39, 130}
    assert (s.rank_lower, s.rank_upper) == (1, 2)


def test_rational_parameters():
    params = FamilyParams(Fraction(1, 13), Fraction(168, 13), -1)
    assert selmer_generators(params) == (-1, 2, 13, 167)
    assert selmer_dimensions(params) == (1, 3)
    lhs, rhs, _ = selmer_ratio_report(params)
    assert lhs == rhs == Fraction(1, 4)


def test_rank_from_descent_with_explicit_points():
    # dims (1,3): upper bound 2; the marked point gives lower bound 1
    params = FamilyParams(Fraction(5), Fraction(8), 1)
    E = make_pair(params)[0]
    P1 = marked_point(params.a, params.b)
    summary = rank_from_descent(params, [P1])
    assert summary.dims == (1, 3)
    assert (summary.rank_lower, summary.rank_upper) == (1, 2)
    assert summary.rank_exact is None
    # no points: lower bound drops to 0
    bare = rank_from_descent(params, [])
    assert (bare.rank_lower, bare.rank_upper) == (0, 2)
    # a non-point is ignored, not trusted
    junk = rank_from_descent(params, [(Fraction(1), Fraction(1))])
    assert junk.rank_lower == 0
    assert not E.contains((Fraction(1), Fraction(1)))


def test_rank_from_descent_rejects_full_two_torsion():
    # a = 1, b = 7: 2a(a+b) = 16 is square, so beta' is a square
    with pytest.raises(DomainError):
        rank_from_descent(FamilyParams(Fraction(1), Fraction(7), 1), [])


def test_twist_rank_over_L_addition():
    assert twist_rank_over_L(1, 0) == 1
    assert twist_rank_over_L(0, 0) == 0
    assert twist_rank_over_L(1, 1) == 2
