"""Construction of the finite prime set S and local conditions U_p.

Given a squarefree twist D, this module builds, stage by stage, the data
that makes the twisted-pair search succeed:

  * stage 0: primes dividing 2D, with congruence anchors that pin the
    local images and force a+b into 1 + n0*Z_p at ramified primes;
  * stage 1: inert primes balancing the product of local image sizes
    between d=1 and d=D, with an odd total valuation of a+b, plus a few
    extension primes until the S-units can generate every local class
    group that matters;
  * stage 2: split primes until the S-units surject onto the local class
    groups modulo the expected images, plus a distinguished prime pi1
    that is a local square at every earlier place;
  * stage 3: primes cutting the kernels of both localization maps down
    to the group generated by pi1, plus a prime p0 where all S-units are
    squares.

Finally a sign epsilon is fixed by a Jacobi-symbol product so that pi1 is
a non-square modulo the prime carried by a-b.  Every descriptor built here
can be re-checked directly on a concrete pair (a, b) via
UpDescriptor.admits; consumers never have to trust the construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from hashlib import sha256

from .curves import FamilyParams
from .exactnum import (
    REAL,
    DomainError,
    factorize,
    is_local_square,
    kronecker,
    next_prime,
    valuation,
)
from .gf2 import dot_bit, f2_in_span, f2_kernel, f2_rank
from .localimage import image_of_phi_descent, local_square_classes

__all__ = [
    "SiteBuildError",
    "UpDescriptor",
    "SiteSpec",
    "normalize_twist",
    "twist_conductor",
    "splits_in_twist_field",
    "template_local_pair",
    "build_s0",
    "build_s1",
    "build_s2",
    "kernel_and_s3",
    "choose_epsilon",
    "build_site",
    "site_invariants",
    "site_report",
    "site_to_json",
    "site_from_json",
    "site_hash",
]

# square-condition tags: expression evaluated at a concrete (a, b, D, pi1)
COND_MINUS_2A_APB = "minus_2a_a_plus_b"   # -2a(a+b)
COND_A = "a"                              # a itself
COND_A_MINUS_B_PI1 = "a_minus_b_times_pi1"  # (a-b) * pi1
COND_TWIST = "twist_d"                    # the twist D (records split/inert)


class SiteBuildError(RuntimeError):
    """A prime scan exhausted its bound, or a stage postcondition failed."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def normalize_twist(D: int) -> int:
    """Squarefree part of D; error on 0 or a perfect square (twist trivial)."""
    if D == 0:
        raise DomainError("twist must be nonzero")
    sign = -1 if D < 0 else 1
    out = sign
    for p, e in factorize(abs(D)).items():
        if e % 2:
            out *= p
    if out == 1:
        raise DomainError("twist must not be a square")
    return out


def twist_conductor(D: int) -> int:
    """Conductor n0 of Q(sqrt(D)) over Q: |D| when D = 1 mod 4, else 4|D|."""
    assert D == normalize_twist(D)
    return abs(D) if D % 4 == 1 else 4 * abs(D)


def splits_in_twist_field(D: int, p: int) -> bool:
    """Does the (unramified) prime p split in Q(sqrt(D))?"""
    if p == 2:
        assert D % 2 != 0 and D % 8 in (1, 5), "2 must be unramified"
        return D % 8 == 1
    assert D % p != 0, "p must be unramified"
    return kronecker(D, p) == 1


def _least_nonresidue(p: int) -> int:
    u = 2
    while kronecker(u, p) != -1:
        u += 1
    return u


def template_local_pair(
    profile: tuple[int, int, int],
    p: int,
    *,
    unit_square: bool = True,
    nonsquare_a: bool = False,
) -> tuple[Fraction, Fraction]:
    """A concrete pair realizing the valuation profile at the odd prime p.

    For profile (-1,1,-1) the pair always makes -2a(a+b) a square, and
    (a-b)*p is a square iff unit_square.  For (0,0,1), nonsquare_a picks
    a non-residue leading entry.  For (0,2,0) the pair makes -2a(a+b) a
    square as well.
    """
    if p == 2:
        raise DomainError("templates are defined at odd primes only")
    P = Fraction(p)
    if profile == (0, 1, 0):
        return Fraction(1), -1 - P
    if profile == (-1, 1, -1):
        u = 1 if unit_square else _least_nonresidue(p)
        a = Fraction(u, 2 * p)
        return a, -a - P / u
    if profile == (0, 2, 0):
        return Fraction(1), -1 - P * P / 2
    if profile == (0, 0, 1):
        u = _least_nonresidue(p) if nonsquare_a else 1
        return Fraction(u), Fraction(u) + P
    if profile == (1, 0, 0):
        return P, Fraction(1)
    raise DomainError(f"no template for profile {profile}")


def _rat_mod(x, m: int) -> int:
    """x mod m for a rational x whose denominator is invertible mod m."""
    x = Fraction(x)
    return x.numerator * pow(x.denominator, -1, m) % m


@dataclass(frozen=True)
class UpDescriptor:
    """Local condition at one prime: valuation profile, a congruence on the
    (scaled) pair, and square conditions on named expressions."""

    p: int
    profile: tuple[int, int, int]
    square_conditions: tuple[tuple[str, bool], ...]
    residue_a: int
    residue_b: int
    modulus: int          # p**M, congruence on (scale*a, scale*b)
    scale: int            # p**max(0, -min(profile))

    def __post_init__(self):
        assert self.scale == self.p ** max(0, -min(self.profile))
        assert 0 <= self.residue_a < self.modulus
        assert 0 <= self.residue_b < self.modulus

    def congruence_holds(self, a, b) -> bool:
        p, m = self.p, self.modulus
        for x, r in ((a, self.residue_a), (b, self.residue_b)):
            diff = self.scale * Fraction(x) - r
            if diff != 0 and valuation(diff, p) < valuation(m, p):
                return False
        return True

    def profile_holds(self, a, b) -> bool:
        a, b = Fraction(a), Fraction(b)
        if a * b * (a + b) * (a - b) == 0:
            return False
        got = (valuation(a, self.p), valuation(a + b, self.p), valuation(a - b, self.p))
        return got == self.profile

    def conditions_hold(self, a, b, D: int, pi1: int | None) -> bool:
        a, b = Fraction(a), Fraction(b)
        for tag, required in self.square_conditions:
            if tag == COND_MINUS_2A_APB:
                expr = -2 * a * (a + b)
            elif tag == COND_A:
                expr = a
            elif tag == COND_A_MINUS_B_PI1:
                assert pi1 is not None, "pi1 needed for this condition"
                expr = (a - b) * pi1
            elif tag == COND_TWIST:
                expr = Fraction(D)
            else:
                raise DomainError(f"unknown square-condition tag {tag!r}")
            if is_local_square(expr, self.p) != required:
                return False
        return True

    def admits(self, a, b, *, D: int, pi1: int | None = None) -> bool:
        return (
            self.profile_holds(a, b)
            and self.congruence_holds(a, b)
            and self.conditions_hold(a, b, D, pi1)
        )


def _make_descriptor(p, profile, conditions, pair, *, exponent=None) -> UpDescriptor:
    span = max(profile) - min(profile)
    M = exponent if exponent is not None else (5 if p == 2 else span + 3)
    scale = p ** max(0, -min(profile))
    mod = p**M
    return UpDescriptor(
        p,
        tuple(profile),
        tuple(conditions),
        _rat_mod(scale * Fraction(pair[0]), mod),
        _rat_mod(scale * Fraction(pair[1]), mod),
        mod,
        scale,
    )


@dataclass(frozen=True)
class SiteSpec:
    """Everything the search and certifier need: the staged prime lists,
    per-prime descriptors, expected local images, pi1, epsilon, and the
    kernel dimension bookkeeping (|kernel| = 2^(n+1))."""

    D: int
    s0: tuple[int, ...]
    s1: tuple[int, ...]
    s2: tuple[int, ...]
    s3: tuple[int, ...]
    descriptors: tuple[UpDescriptor, ...]
    phi_table: tuple[tuple[int, object, tuple[int, ...]], ...]  # (d, place, classes)
    pi1: int
    epsilon: int
    n: int
    xi: tuple[tuple[int, Fraction], ...]
    mu: tuple[tuple[int, int], ...]

    def all_primes(self) -> tuple[int, ...]:
        return self.s0 + self.s1 + self.s2 + self.s3

    def descriptor_for(self, p: int) -> UpDescriptor:
        for d in self.descriptors:
            if d.p == p:
                return d
        raise KeyError(p)

    def phi(self, d: int, place) -> frozenset[int]:
        for dd, pl, classes in self.phi_table:
            if dd == d and pl == place:
                return frozenset(classes)
        raise KeyError((d, place))

    def denominator(self) -> int:
        out = 1
        for desc in self.descriptors:
            if min(desc.profile) < 0:
                out *= desc.p ** (-min(desc.profile))
        return out

    def admits(self, a, b) -> bool:
        return all(
            desc.admits(a, b, D=self.D, pi1=self.pi1) for desc in self.descriptors
        )


# ----------------------------------------------------------------------
# stage 0


def build_s0(D: int, *, two_exponent: int = 5):
    """Primes of 2D with congruence anchors; returns (s0, descriptors, phi).

    The anchor pair at p is (1, n0*p): then any admitted (a, b) has unit
    valuations for a, a+b, a-b, and a+b lies in 1 + n0*Z_p at every prime
    dividing the conductor n0.
    """
    n0 = twist_conductor(D)
    s0 = [2] + sorted(p for p in factorize(abs(D)) if p != 2)
    descriptors: dict[int, UpDescriptor] = {}
    phi: dict[tuple[int, object], frozenset[int]] = {}
    for d in (1, D):
        phi[(d, REAL)] = frozenset({1})
    for p in s0:
        pair = (Fraction(1), Fraction(n0 * p))
        exponent = two_exponent if p == 2 else None
        descriptors[p] = _make_descriptor(p, (0, 0, 0), (), pair, exponent=exponent)
        for d in (1, D):
            phi[(d, p)] = image_of_phi_descent(FamilyParams(pair[0], pair[1], d), p)
    return s0, descriptors, phi


# ----------------------------------------------------------------------
# block bookkeeping for the F_2 conditions


class _Blocks:
    """Concatenated local square-class coordinates over an ordered list of
    places (the real place first)."""

    def __init__(self, places):
        self.places = tuple(places)
        self.groups = [local_square_classes(v) for v in self.places]
        self.offsets = []
        pos = 0
        for g in self.groups:
            self.offsets.append(pos)
            pos += g.nbits
        self.total = pos

    def row(self, x) -> int:
        out = 0
        for g, off in zip(self.groups, self.offsets):
            out |= g.bits(x) << off
        return out

    def embed(self, place, bits: int) -> int:
        i = self.places.index(place)
        return bits << self.offsets[i]


def _generation_condition_holds(d, blocks: _Blocks, primes, s1_primes, phi) -> bool:
    """Can the S-units, the expected images, and the stage-1 unit subgroups
    together generate every local class group over the listed places?"""
    rows = [blocks.row(g) for g in [-1] + list(primes)]
    for place, g in zip(blocks.places, blocks.groups):
        if place == REAL:
            continue
        for rep in phi[(d, place)]:
            rows.append(blocks.embed(place, g.bits(rep)))
    for p in s1_primes:
        rows.append(blocks.embed(p, 1))  # the non-residue unit class at odd p
    return f2_rank(rows) == blocks.total


def _quotient_functionals(d, blocks: _Blocks, phi):
    """Per place, a basis of linear functionals vanishing on the expected
    image; their values give coordinates on (local classes)/(image)."""
    out = []
    for place, g in zip(blocks.places, blocks.groups):
        image_bits = [g.bits(r) for r in phi[(d, place)]]
        out.append((place, g, f2_kernel(image_bits, g.nbits)))
    return out


def _gamma_row(functionals, x) -> int:
    row = 0
    pos = 0
    for _, g, ys in functionals:
        bx = g.bits(x)
        for y in ys:
            row |= dot_bit(y, bx) << pos
            pos += 1
    return row


def _gamma_dim(functionals) -> int:
    return sum(len(ys) for _, _, ys in functionals)


# ----------------------------------------------------------------------
# stage 1


def build_s1(D: int, s0, descriptors, phi, *, scan_bound: int = 10**6):
    """Inert balancing primes (with xi, mu) plus generation-extension primes.

    Returns (s1, xi, mu).  Mutates descriptors/phi with the new entries.
    """
    ratio = Fraction(1)
    for p in s0:
        ratio *= Fraction(len(phi[(1, p)]), len(phi[(D, p)]))
    assert ratio.numerator & (ratio.numerator - 1) == 0
    assert ratio.denominator & (ratio.denominator - 1) == 0
    k = ratio.denominator.bit_length() - ratio.numerator.bit_length()  # product of xi = 2^k
    twos = max(k, 1)
    halves = twos - k
    xis = [Fraction(2)] * twos + [Fraction(1, 2)] * halves
    mus = [1] * len(xis)
    if len(xis) % 2 == 0:
        mus[0] = 2  # restore odd total valuation of a+b over the inert primes

    s1: list[int] = []
    xi: dict[int, Fraction] = {}
    mu: dict[int, int] = {}
    p = 2
    for x, m in zip(xis, mus):
        while True:
            p = next_prime(p)
            if p > scan_bound:
                raise SiteBuildError("stage1", "no inert prime below bound")
            if p not in s0 and D % p != 0 and not splits_in_twist_field(D, p):
                break
        if x == 2 and m == 1:
            profile, conds = (-1, 1, -1), ((COND_MINUS_2A_APB, True), (COND_TWIST, False))
        elif x == 2:
            profile, conds = (0, 2, 0), ((COND_MINUS_2A_APB, True), (COND_TWIST, False))
        else:
            profile, conds = (0, 1, 0), ((COND_TWIST, False),)
        pair = template_local_pair(profile, p)
        descriptors[p] = _make_descriptor(p, profile, conds, pair)
        for d in (1, D):
            phi[(d, p)] = image_of_phi_descent(FamilyParams(pair[0], pair[1], d), p)
        got = Fraction(len(phi[(1, p)]), len(phi[(D, p)]))
        assert got == x, f"image ratio {got} at {p}, wanted {x}"
        s1.append(p)
        xi[p] = x
        mu[p] = m
    assert sum(mu.values()) % 2 == 1

    # extension primes with profile (1,0,0) until the generation condition
    # holds for both twists
    while True:
        blocks = _Blocks([REAL] + s0 + s1)
        missing = [
            d
            for d in (1, D)
            if not _generation_condition_holds(d, blocks, s0 + s1, s1, phi)
        ]
        if not missing:
            break
        q = 2
        added = False
        while q <= scan_bound:
            q = next_prime(q)
            if q in s0 or q in s1 or D % q == 0:
                continue
            pair = template_local_pair((1, 0, 0), q)
            trial_phi = dict(phi)
            for d in (1, D):
                trial_phi[(d, q)] = image_of_phi_descent(
                    FamilyParams(pair[0], pair[1], d), q
                )
                assert len(trial_phi[(d, q)]) == 2
            trial_blocks = _Blocks([REAL] + s0 + s1 + [q])
            if _extension_helps(missing, blocks, trial_blocks, s0, s1, q, phi, trial_phi):
                descriptors[q] = _make_descriptor(q, (1, 0, 0), (), pair)
                phi.update(trial_phi)
                s1.append(q)
                added = True
                break
        if not added:
            raise SiteBuildError("stage1", "generation extension exhausted bound")
    return s1, xi, mu


def _extension_helps(missing, blocks, trial_blocks, s0, s1, q, phi, trial_phi) -> bool:
    """Accept q if it strictly shrinks the generation deficit for a twist
    that still fails.  A new prime's own block is always spanned by its
    image row together with its unit row, so the deficit never grows."""
    for d in missing:
        before = blocks.total - _generation_rank(d, blocks, s0 + s1, s1, phi)
        after = trial_blocks.total - _generation_rank(
            d, trial_blocks, s0 + s1 + [q], s1 + [q], trial_phi
        )
        if after < before:
            return True
    return False


def _generation_rank(d, blocks: _Blocks, primes, s1_primes, phi) -> int:
    rows = [blocks.row(g) for g in [-1] + list(primes)]
    for place, g in zip(blocks.places, blocks.groups):
        if place == REAL:
            continue
        for rep in phi[(d, place)]:
            rows.append(blocks.embed(place, g.bits(rep)))
    for p in s1_primes:
        rows.append(blocks.embed(p, 1))
    return f2_rank(rows)


# ----------------------------------------------------------------------
# stage 2


def build_s2(D, s0, s1, descriptors, phi, *, scan_bound: int = 10**6):
    """Split primes until the S-unit localization map is surjective modulo
    the expected images, then the distinguished everywhere-square prime pi1.

    Returns (s2, pi1).  The pi1 descriptor is installed later, once epsilon
    is known.
    """
    blocks = _Blocks([REAL] + s0 + s1)
    funcs = {d: _quotient_functionals(d, blocks, phi) for d in (1, D)}
    qdim = {d: _gamma_dim(funcs[d]) for d in (1, D)}
    s2: list[int] = []

    def ranks():
        out = {}
        for d in (1, D):
            rows = [_gamma_row(funcs[d], g) for g in [-1] + s0 + s1 + s2]
            out[d] = f2_rank(rows)
        return out

    current = ranks()
    q = 2
    while any(current[d] < qdim[d] for d in (1, D)):
        q = next_prime(q)
        if q > scan_bound:
            raise SiteBuildError("stage2", "surjectivity scan exhausted bound")
        if q in s0 or q in s1 or D % q == 0 or not splits_in_twist_field(D, q):
            continue
        s2.append(q)
        trial = ranks()
        if sum(trial.values()) > sum(current.values()):
            current = trial
        else:
            s2.pop()

    pi1 = _find_pi1(D, s0, s1, s2, scan_bound)
    s2.append(pi1)
    for p in s2:
        for d in (1, D):
            phi[(d, p)] = frozenset(local_square_classes(p).reps)
        if p != pi1:
            pair = template_local_pair((-1, 1, -1), p)
            descriptors[p] = _make_descriptor(
                p,
                (-1, 1, -1),
                ((COND_MINUS_2A_APB, True), (COND_TWIST, True)),
                pair,
            )
    return s2, pi1


def _find_pi1(D, s0, s1, s2, scan_bound) -> int:
    odd_earlier = [p for p in s0 + s1 if p != 2]
    q = 2
    while q <= scan_bound:
        q = next_prime(q)
        if q in s0 or q in s1 or q in s2 or D % q == 0:
            continue
        if q % 8 != 1:
            continue  # must be a square in Q_2 and positive
        if not splits_in_twist_field(D, q):
            continue
        if all(kronecker(q, p) == 1 for p in odd_earlier):
            return q
    raise SiteBuildError("stage2", "no everywhere-square split prime below bound")


# ----------------------------------------------------------------------
# stage 3


def _kernel_basis(d, gens, blocks, phi):
    funcs = _quotient_functionals(d, blocks, phi)
    rows = [_gamma_row(funcs, g) for g in gens]
    width = _gamma_dim(funcs)
    transposed = []
    for j in range(width):
        col = 0
        for i, row in enumerate(rows):
            if row >> j & 1:
                col |= 1 << i
        transposed.append(col)
    return f2_kernel(transposed, len(gens))


def _mask_value(mask: int, gens) -> int:
    out = 1
    for i, g in enumerate(gens):
        if mask >> i & 1:
            out *= g
    return out


def _cut_basis(basis, gens, r):
    """Basis of the sublattice where the class is a square modulo r."""
    flagged = [(m, kronecker(_mask_value(m, gens), r) == -1) for m in basis]
    pivot = next((m for m, bad in flagged if bad), None)
    if pivot is None:
        return list(basis)
    return [m ^ pivot if bad else m for m, bad in flagged if m != pivot]


def kernel_and_s3(D, s0, s1, s2, pi1, descriptors, phi, *, scan_bound: int = 10**6):
    """Cut both localization kernels down to <pi1>; returns (n, s3).

    s3 = [p0, p1..pn] where the p_i are the cutting primes and p0 is a prime
    where every S-unit is a square.  Mutates descriptors/phi.
    """
    gens = [-1] + s0 + s1 + s2
    blocks = _Blocks([REAL] + s0 + s1)
    pi1_mask = 1 << gens.index(pi1)
    w1 = _kernel_basis(1, gens, blocks, phi)
    wD = _kernel_basis(D, gens, blocks, phi)
    if len(w1) != len(wD):
        raise SiteBuildError("stage3", f"kernel dims differ: {len(w1)} vs {len(wD)}")
    n = len(w1) - 1
    for basis in (w1, wD):
        if not f2_in_span(pi1_mask, basis):
            raise SiteBuildError("stage3", "pi1 not in a localization kernel")

    cuts: list[int] = []
    while len(w1) > 1:
        assert len(w1) == len(wD)
        u_mask = next(m for m in w1 if not f2_in_span(m, [pi1_mask]))
        v_mask = next(m for m in wD if not f2_in_span(m, [pi1_mask]))
        u_val = _mask_value(u_mask, gens)
        v_val = _mask_value(v_mask, gens)
        r = 2
        while True:
            r = next_prime(r)
            if r > scan_bound:
                raise SiteBuildError("stage3", "kernel-cut scan exhausted bound")
            if r in gens or r in cuts or D % r == 0:
                continue
            if (
                kronecker(pi1, r) == 1
                and kronecker(u_val, r) == -1
                and kronecker(v_val, r) == -1
            ):
                break
        cuts.append(r)
        new_w1 = _cut_basis(w1, gens, r)
        new_wD = _cut_basis(wD, gens, r)
        assert len(new_w1) == len(w1) - 1 and len(new_wD) == len(wD) - 1
        w1, wD = new_w1, new_wD
        for basis in (w1, wD):
            assert f2_in_span(pi1_mask, basis)
    assert len(cuts) == n

    p0 = _find_p0(D, gens, cuts, scan_bound)
    s3 = [p0] + cuts
    for p in s3:
        nonsq = p == p0
        pair = template_local_pair((0, 0, 1), p, nonsquare_a=nonsq)
        conds = ((COND_A, False),) if nonsq else ()
        descriptors[p] = _make_descriptor(p, (0, 0, 1), conds, pair)
        for d in (1, D):
            phi[(d, p)] = frozenset({1})
    return n, s3


def _find_p0(D, gens, cuts, scan_bound) -> int:
    odd_gens = [g for g in gens if g not in (-1, 2)]
    r = 2
    while r <= scan_bound:
        r = next_prime(r)
        if r in gens or r in cuts or D % r == 0:
            continue
        if r % 8 != 1:
            continue  # makes -1 and 2 squares
        if all(kronecker(g, r) == 1 for g in odd_gens):
            return r
    raise SiteBuildError("stage3", "no all-units-square prime below bound")


# ----------------------------------------------------------------------
# epsilon and assembly


def choose_epsilon(pi1: int, descriptors, s1, s2, s3) -> int:
    """Sign making pi1 a forced non-square modulo the prime of a-b.

    The reciprocity bookkeeping multiplies kronecker(pi1, p) over the primes
    whose descriptor gives a-b odd valuation; epsilon is set to make the
    total product -1.
    """
    prod = 1
    for p in list(s1) + list(s2) + list(s3):
        if p == pi1:
            continue
        e = descriptors[p].profile[2]
        if e % 2:
            prod *= kronecker(pi1, p)
    return -prod


def build_site(D: int, *, scan_bound: int = 10**6, two_exponent: int = 5) -> SiteSpec:
    D = normalize_twist(D)
    s0, descriptors, phi = build_s0(D, two_exponent=two_exponent)
    s1, xi, mu = build_s1(D, s0, descriptors, phi, scan_bound=scan_bound)
    s2, pi1 = build_s2(D, s0, s1, descriptors, phi, scan_bound=scan_bound)
    n, s3 = kernel_and_s3(
        D, s0, s1, s2, pi1, descriptors, phi, scan_bound=scan_bound
    )
    epsilon = choose_epsilon(pi1, descriptors, s1, s2, s3)
    pair = template_local_pair((-1, 1, -1), pi1, unit_square=(epsilon == 1))
    descriptors[pi1] = _make_descriptor(
        pi1,
        (-1, 1, -1),
        (
            (COND_MINUS_2A_APB, True),
            (COND_TWIST, True),
            (COND_A_MINUS_B_PI1, epsilon == 1),
        ),
        pair,
    )
    ordered = tuple(descriptors[p] for p in s0 + s1 + s2 + s3)
    phi_entries = []
    for d in (1, D):
        phi_entries.append((d, REAL, tuple(sorted(phi[(d, REAL)]))))
        for p in s0 + s1 + s2 + s3:
            phi_entries.append((d, p, tuple(sorted(phi[(d, p)]))))
    return SiteSpec(
        D,
        tuple(s0),
        tuple(s1),
        tuple(s2),
        tuple(s3),
        ordered,
        tuple(phi_entries),
        pi1,
        epsilon,
        n,
        tuple(sorted(xi.items())),
        tuple(sorted(mu.items())),
    )


# ----------------------------------------------------------------------
# invariants and reporting


def site_invariants(site: SiteSpec) -> dict[str, bool]:
    """The six structural checks; all must hold for a well-built site."""
    out = {}
    D = site.D
    xi = dict(site.xi)
    mu = dict(site.mu)

    inert_total = sum(
        site.descriptor_for(p).profile[1] for p in xi  # = mu_p at those primes
    )
    out["odd_inert_valuation_sum"] = inert_total % 2 == 1 and all(
        site.descriptor_for(p).profile[1] == mu[p] for p in xi
    )

    prod1 = prodD = 1
    for p in site.s0 + site.s1:
        prod1 *= len(site.phi(1, p))
        prodD *= len(site.phi(D, p))
    out["balanced_image_product"] = prod1 == prodD

    blocks = _Blocks([REAL] + list(site.s0) + list(site.s1))
    phi = {(d, pl): frozenset(cl) for d, pl, cl in site.phi_table}
    gens = [-1] + list(site.s0) + list(site.s1) + list(site.s2)
    surj = True
    for d in (1, D):
        funcs = _quotient_functionals(d, blocks, phi)
        rows = [_gamma_row(funcs, g) for g in gens]
        surj = surj and f2_rank(rows) == _gamma_dim(funcs)
    out["localization_surjective"] = surj

    pi1_mask = 1 << gens.index(site.pi1)
    kernels_ok = True
    for d in (1, D):
        basis = _kernel_basis(d, gens, blocks, phi)
        kernels_ok = kernels_ok and len(basis) == site.n + 1
        kernels_ok = kernels_ok and f2_in_span(pi1_mask, basis)
        cut = list(basis)
        for r in site.s3[1:]:
            cut = _cut_basis(cut, gens, r)
        kernels_ok = kernels_ok and len(cut) == 1 and f2_in_span(pi1_mask, cut)
    out["kernels_cut_to_pi1"] = kernels_ok

    ok = True
    for desc in site.descriptors:
        pair = _descriptor_template(site, desc)
        ok = ok and desc.admits(pair[0], pair[1], D=D, pi1=site.pi1)
    out["templates_satisfy_descriptors"] = ok

    forced = True
    for p in site.s2:
        grp = local_square_classes(p)
        forced = forced and all(
            site.phi(d, p) == frozenset(grp.reps) for d in (1, D)
        )
    for p in site.s3:
        forced = forced and all(site.phi(d, p) == frozenset({1}) for d in (1, D))
    out["forced_images_at_late_stages"] = forced
    return out


def _descriptor_template(site: SiteSpec, desc: UpDescriptor):
    """The stored residues themselves are a pair satisfying the descriptor:
    they match the congruence exactly, and the modulus exceeds every pinned
    valuation, so profile and square conditions carry over."""
    return Fraction(desc.residue_a, desc.scale), Fraction(desc.residue_b, desc.scale)


def site_report(site: SiteSpec) -> str:
    xi = dict(site.xi)
    lines = [
        f"twist D = {site.D}",
        f"stage-0 primes: {list(site.s0)}",
        f"stage-1 primes: {list(site.s1)}  xi={ {p: str(x) for p, x in site.xi} }  mu={dict(site.mu)}",
        f"stage-2 primes: {list(site.s2)}  (pi1 = {site.pi1})",
        f"stage-3 primes: {list(site.s3)}  (p0 = {site.s3[0]})",
        f"kernel size 2^(n+1) with n = {site.n}",
        f"epsilon = {site.epsilon:+d}",
    ]
    prod_xi = Fraction(1)
    for x in xi.values():
        prod_xi *= x
    if prod_xi == 1:
        lines.append(
            "note: stage-0 image sizes already balanced; the minimal xi"
            " multiset pairs one 2 with one 1/2"
        )
    orders = {}
    for d, pl, classes in site.phi_table:
        orders.setdefault(d, []).append(f"{pl}:{len(classes)}")
    for d, parts in orders.items():
        lines.append(f"image orders d={d}: " + " ".join(parts))
    return "\n".join(lines)


# ----------------------------------------------------------------------
# serialization


def _desc_to_json(desc: UpDescriptor) -> dict:
    return {
        "p": str(desc.p),
        "profile": [str(x) for x in desc.profile],
        "square_conditions": [[tag, bool(req)] for tag, req in desc.square_conditions],
        "residue_a": str(desc.residue_a),
        "residue_b": str(desc.residue_b),
        "modulus": str(desc.modulus),
        "scale": str(desc.scale),
    }


def _desc_from_json(d: dict) -> UpDescriptor:
    return UpDescriptor(
        int(d["p"]),
        tuple(int(x) for x in d["profile"]),
        tuple((tag, bool(req)) for tag, req in d["square_conditions"]),
        int(d["residue_a"]),
        int(d["residue_b"]),
        int(d["modulus"]),
        int(d["scale"]),
    )


def site_to_json(site: SiteSpec) -> str:
    doc = {
        "version": "1",
        "D": str(site.D),
        "s0": [str(p) for p in site.s0],
        "s1": [str(p) for p in site.s1],
        "s2": [str(p) for p in site.s2],
        "s3": [str(p) for p in site.s3],
        "descriptors": [_desc_to_json(d) for d in site.descriptors],
        "phi": [
            {
                "d": str(d),
                "place": "real" if pl == REAL else str(pl),
                "classes": [str(c) for c in classes],
            }
            for d, pl, classes in site.phi_table
        ],
        "pi1": str(site.pi1),
        "epsilon": str(site.epsilon),
        "n": str(site.n),
        "xi": {str(p): str(x) for p, x in site.xi},
        "mu": {str(p): str(m) for p, m in site.mu},
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def site_from_json(text: str) -> SiteSpec:
    doc = json.loads(text)
    if doc.get("version") != "1":
        raise DomainError("unsupported site document version")
    return SiteSpec(
        int(doc["D"]),
        tuple(int(p) for p in doc["s0"]),
        tuple(int(p) for p in doc["s1"]),
        tuple(int(p) for p in doc["s2"]),
        tuple(int(p) for p in doc["s3"]),
        tuple(_desc_from_json(d) for d in doc["descriptors"]),
        tuple(
            (
                int(e["d"]),
                REAL if e["place"] == "real" else int(e["place"]),
                tuple(int(c) for c in e["classes"]),
            )
            for e in doc["phi"]
        ),
        int(doc["pi1"]),
        int(doc["epsilon"]),
        int(doc["n"]),
        tuple(sorted((int(p), Fraction(x)) for p, x in doc["xi"].items())),
        tuple(sorted((int(p), int(m)) for p, m in doc["mu"].items())),
    )


def site_hash(site: SiteSpec) -> str:
    return sha256(site_to_json(site).encode()).hexdigest()
