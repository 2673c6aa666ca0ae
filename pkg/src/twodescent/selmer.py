"""Selmer groups of the 2-isogeny pair, by purely local conditions.

A global square class lies in the phi-Selmer group iff its image in every
completion lands in the local descent image.  Candidate classes are
supported on -1 and the bad primes, so the Selmer group is the kernel of an
F_2-linear map

    (exponent vector over generators) -> (local class modulo local image)_v

assembled from the local images computed in localimage.  |Sel_phi| /
|Sel_phihat| also has a purely local expression: the product over all places
of |local phi-image| / 2; comparing the two routes is a sharp end-to-end
check and is exposed here as selmer_ratio_report.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .curves import FamilyParams, make_pair, marked_point, is_nontorsion
from .exactnum import DomainError, REAL, factorize, is_square_integer, valuation
from .gf2 import f2_kernel
from .localimage import (
    image_of_dual_descent,
    image_of_phi_descent,
    local_square_classes,
)

__all__ = [
    "DescentSummary",
    "bad_places",
    "selmer_generators",
    "selmer_basis",
    "selmer_dimensions",
    "selmer_ratio_report",
    "rank_interval",
    "descent_summary",
    "rank_from_descent",
    "twist_rank_over_L",
]


def bad_places(params: FamilyParams) -> tuple:
    """(REAL, 2, odd primes of bad reduction for the pair), in order.

    Everything dividing a numerator or denominator of one of a, a+b, a-b, d
    is included, along with 2 and the real place; at any other prime both
    curves have good reduction and impose only the even-valuation condition.
    The factors are factored separately -- their product can be a large
    composite with no small prime factor, which rho cannot split in
    reasonable time, while each factor carries at most one large prime.
    """
    a, b = params.a, params.b
    support: set[int] = set()
    for y in (a, a + b, a - b, Fraction(params.d)):
        support |= set(factorize(abs(y.numerator)))
        support |= set(factorize(y.denominator))
    support.discard(2)
    return (REAL, 2) + tuple(sorted(support))


def selmer_generators(params: FamilyParams) -> tuple[int, ...]:
    """Generators of the subgroup of Q*/squares containing both Selmer
    groups: -1, 2, and the odd bad primes."""
    return (-1,) + tuple(p for p in bad_places(params) if p != REAL)


def _class_value(mask: int, gens: tuple[int, ...]) -> int:
    out = 1
    for i, g in enumerate(gens):
        if (mask >> i) & 1:
            out *= g
    return out


def _local_condition_rows(params: FamilyParams, gens, places, dual: bool):
    """Rows over F_2 (one block per place) whose kernel is the Selmer group."""
    rows = []
    for place in places:
        grp = local_square_classes(place)
        image = image_of_dual_descent(params, place) if dual else image_of_phi_descent(params, place)
        image_bits = [grp.bits(r) for r in image]
        # functionals on the local class group vanishing exactly on the image
        functionals = f2_kernel(image_bits, grp.nbits)
        gen_bits = [grp.bits(g) for g in gens]
        for y in functionals:
            row = 0
            for i, gb in enumerate(gen_bits):
                if (y & gb).bit_count() & 1:
                    row |= 1 << i
            rows.append(row)
    return rows


def selmer_basis(params: FamilyParams, dual: bool = False) -> tuple[int, ...]:
    """Basis of the Selmer group as exponent masks over selmer_generators."""
    gens = selmer_generators(params)
    places = bad_places(params)
    rows = _local_condition_rows(params, gens, places, dual)
    basis = f2_kernel(rows, len(gens))
    # the class of the rational 2-torsion point (0,0) is always a member
    E, Ep, _, _ = make_pair(params)
    tor_mask = _mask_of_class(E.beta if dual else Ep.beta, gens)
    span = {0}
    for v in basis:
        span |= {s ^ v for s in span}
    assert tor_mask in span, "class of (0,0) must be a Selmer member"
    return tuple(sorted(basis))


def _mask_of_class(x, gens: tuple[int, ...]) -> int:
    """Exponent mask of the square class of x over gens.

    x must be supported on gens (sign and listed primes); the mask is read
    off from valuations rather than by factoring x, whose numerator is a
    large semiprime for search-sized parameters.
    """
    x = Fraction(x)
    mask = 0
    if x < 0:
        mask |= 1 << gens.index(-1)
        x = -x
    for g in gens:
        if g == -1:
            continue
        e = valuation(x, g)
        if e % 2:
            mask |= 1 << gens.index(g)
        x /= Fraction(g) ** e
    assert _is_rational_square(x), "class not supported on the generators"
    return mask


def _is_rational_square(x) -> bool:
    x = Fraction(x)
    return x > 0 and is_square_integer(x.numerator) and is_square_integer(x.denominator)


def selmer_dimensions(params: FamilyParams) -> tuple[int, int]:
    """(dim Sel_phi, dim Sel_phihat) over F_2."""
    return len(selmer_basis(params, False)), len(selmer_basis(params, True))


def selmer_ratio_report(params: FamilyParams):
    """Two independent computations of |Sel_phi| / |Sel_phihat|.

    Returns (ratio from Selmer dimensions, ratio as product of local factors,
    dict place -> local factor).  The two agree by the global duality
    formula; callers should compare them.
    """
    dim_phi, dim_phihat = selmer_dimensions(params)
    lhs = Fraction(2) ** (dim_phi - dim_phihat)
    factors = {}
    rhs = Fraction(1)
    for place in bad_places(params):
        f = Fraction(len(image_of_phi_descent(params, place)), 2)
        factors[place] = f
        rhs *= f
    return lhs, rhs, factors


@dataclass(frozen=True)
class DescentSummary:
    params: FamilyParams
    gens: tuple[int, ...]
    places: tuple
    sel_phi: tuple[int, ...]      # basis masks
    sel_phihat: tuple[int, ...]
    rank_lower: int
    rank_upper: int

    @property
    def dims(self) -> tuple[int, int]:
        return len(self.sel_phi), len(self.sel_phihat)

    @property
    def rank_exact(self) -> int | None:
        return self.rank_lower if self.rank_lower == self.rank_upper else None

    def classes(self, dual: bool = False) -> tuple[int, ...]:
        basis = self.sel_phihat if dual else self.sel_phi
        return tuple(_class_value(m, self.gens) for m in basis)


def rank_interval(params: FamilyParams) -> tuple[int, int]:
    """(lower, upper) bounds on rank E_d(Q) from the descent.

    Upper bound dim Sel_phi + dim Sel_phihat - 2 needs both curves to have
    exactly one rational 2-torsion point, i.e. beta and beta' nonsquare;
    for the family beta < 0 holds whenever a(a-b) < 0, and beta' nonsquare
    is checked here.  Lower bound: 1 if d = 1 and the marked point is a point
    of infinite order, else 0.
    """
    E, Ep, _, _ = make_pair(params)
    assert not _is_rational_square(E.beta), "beta must be a nonsquare"
    assert not _is_rational_square(Ep.beta), "beta' must be a nonsquare"
    dim_phi, dim_phihat = selmer_dimensions(params)
    upper = dim_phi + dim_phihat - 2
    lower = 0
    if params.d == 1:
        P1 = marked_point(params.a, params.b)
        if is_nontorsion(E, P1):
            lower = 1
    assert lower <= upper, "descent bounds crossed"
    return lower, upper


def descent_summary(params: FamilyParams) -> DescentSummary:
    gens = selmer_generators(params)
    places = bad_places(params)
    lower, upper = rank_interval(params)
    return DescentSummary(
        params,
        gens,
        places,
        selmer_basis(params, False),
        selmer_basis(params, True),
        lower,
        upper,
    )


def rank_from_descent(params: FamilyParams, known_points=()) -> DescentSummary:
    """Descent summary with the rank lower bound taken from explicit points.

    The upper bound dim Sel_phi + dim Sel_phihat - 2 needs each curve of the
    isogenous pair to carry exactly one rational 2-torsion point, so a square
    beta' (full 2-torsion) is rejected.  The lower bound is 1 when some
    supplied point lies on the curve and has infinite order; independence
    machinery for several points is out of scope, so the bound is
    deliberately capped at 1.
    """
    E, Ep, _, _ = make_pair(params)
    if _is_rational_square(Ep.beta):
        raise DomainError("full rational 2-torsion is out of scope (beta' square)")
    assert not _is_rational_square(E.beta), "beta must be a nonsquare"
    sel_phi = selmer_basis(params, False)
    sel_phihat = selmer_basis(params, True)
    upper = len(sel_phi) + len(sel_phihat) - 2
    lower = 0
    for P in known_points:
        if P is not None and E.contains(P) and is_nontorsion(E, P):
            lower = 1
            break
    lower = min(lower, upper)
    return DescentSummary(
        params,
        selmer_generators(params),
        bad_places(params),
        sel_phi,
        sel_phihat,
        lower,
        upper,
    )


def twist_rank_over_L(rank_E1_Q: int, rank_ED_Q: int) -> int:
    """Rank over the quadratic twist field: the two eigenspace ranks add."""
    return rank_E1_Q + rank_ED_Q
