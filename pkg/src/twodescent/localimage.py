"""Local square-class groups and local descent images.

For a curve C: y^2 = x^3 + A x^2 + B x over a completion K_v of Q, the
x-coordinate map sends C(K_v) into K_v*/(K_v*)^2 (with (0, 0) going to the
class of B and infinity to the trivial class).  Its image is the local image
of the descent map attached to the 2-isogeny with kernel <(0, 0)>.

Membership of a class c is decided through the associated torsor: writing
x = c z^2, a point with x-class c exists iff

    w^2 = c^3 z^4 + A c^2 z^2 + B c         (|z| <= 1, chart 1)
 or w^2 = B c u^4 + A c^2 u^2 + c^3         (|u| < 1, chart 2)

has a K_v-point.  Chart 1 at z = 0 recovers (0, 0), chart 2 at u = 0 recovers
infinity, so no special cases are needed.

Solvability over Q_p is decided exactly.  Small p goes by scanning residue
balls; large p by factoring the reduction and using the Weil bound; deep
recursions terminate through a resultant bound: once every point z of the
current ball has v_p(H0(z)) > 2 v_p(Res(H0, H0')), Newton iteration from any
of them converges to an exact root of H0 in Z_p, which is itself a torsor
point (w = 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .curves import FamilyParams, WeierstrassCurve, make_pair
from .exactnum import REAL, DomainError, is_prime, kronecker, valuation
from .polymod import pderiv, peval, pnormalize, proots, squarefree_split
from .tate import UnsupportedProfileError, profile_at

# threshold above which the Weil bound p - 2*sqrt(p) - 14 > 0 makes a point
# with nonzero square value automatic (chosen with wide margin)
_WEIL_THRESHOLD = 67


# ----------------------------------------------------------------------
# local square classes
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LocalSquareClasses:
    """Representatives and F_2-coordinates for K_v*/(K_v*)^2.

    reps: canonical class representatives, trivial class first.
    nbits: dimension over F_2 (1 real, 2 odd p, 3 for p = 2).
    """

    place: object  # REAL or a prime
    reps: tuple[int, ...]
    nbits: int

    def localize(self, x) -> int:
        """Canonical representative of the class of x."""
        return self.reps[self.index_of(x)]

    def index_of(self, x) -> int:
        return self.reps.index(_rep_of(x, self.place))

    def bits(self, x) -> int:
        """Coordinates of the class of x as a bitmask (see _bits_of)."""
        return _bits_of(x, self.place)


def local_square_classes(place) -> LocalSquareClasses:
    if place == REAL:
        return LocalSquareClasses(place, (1, -1), 1)
    p = int(place)
    if p == 2:
        return LocalSquareClasses(2, (1, -1, 5, -5, 2, -2, 10, -10), 3)
    if p < 3 or not is_prime(p):
        raise DomainError(f"not a place: {place}")
    u = _least_nonresidue(p)
    return LocalSquareClasses(p, (1, u, p, u * p), 2)


def _least_nonresidue(p: int) -> int:
    u = 2
    while kronecker(u, p) != -1:
        u += 1
    return u


def _rep_of(x, place) -> int:
    x = Fraction(x)
    if x == 0:
        raise DomainError("zero has no square class")
    if place == REAL:
        return 1 if x > 0 else -1
    p = int(place)
    v = valuation(x, p)
    w = x / Fraction(p) ** v  # unit part
    if p == 2:
        w8 = (w.numerator * pow(w.denominator, -1, 8)) % 8
        unit = {1: 1, 3: -5, 5: 5, 7: -1}[w8]
    else:
        wp = (w.numerator * pow(w.denominator, -1, p)) % p
        unit = 1 if kronecker(wp, p) == 1 else _least_nonresidue(p)
    return unit * (p if v % 2 else 1)


def _bits_of(x, place) -> int:
    """Class coordinates: real: bit0 = negative.  Odd p: bit0 = nonresidue
    unit part, bit1 = odd valuation.  p = 2: unit part (-1)^s 5^t mod 8 gives
    bit0 = s, bit1 = t, and bit2 = odd valuation."""
    x = Fraction(x)
    if x == 0:
        raise DomainError("zero has no square class")
    if place == REAL:
        return 1 if x < 0 else 0
    p = int(place)
    v = valuation(x, p)
    w = x / Fraction(p) ** v
    if p == 2:
        w8 = (w.numerator * pow(w.denominator, -1, 8)) % 8
        s, t = {1: (0, 0), 7: (1, 0), 5: (0, 1), 3: (1, 1)}[w8]
        return s | (t << 1) | ((v % 2) << 2)
    wp = (w.numerator * pow(w.denominator, -1, p)) % p
    nr = 1 if kronecker(wp, p) == -1 else 0
    return nr | ((v % 2) << 1)


# ----------------------------------------------------------------------
# exact solvability of w^2 = H(z) with z in Z_p, H an integer quartic
# ----------------------------------------------------------------------

def _shift_scale(H, z0: int, p: int):
    """Coefficients of H(z0 + p Z) as a polynomial in Z."""
    # Taylor by repeated synthetic division: H(z0 + Y) then Y -> p Z
    work = list(H)
    taylor = []
    for _ in range(len(H)):
        rem = 0
        for i in reversed(range(len(work))):
            rem = rem * z0 + work[i]
            work[i] = rem
        taylor.append(work.pop(0))
    return [c * p**k for k, c in enumerate(taylor)]


def _strip_square_factors(H, p: int) -> tuple[list[int], int]:
    """(H / p^(2k), 2k) with k maximal; preserves square values."""
    m = min(valuation(c, p) for c in H if c != 0)
    k = m // 2
    if k == 0:
        return list(H), 0
    q = p ** (2 * k)
    return [c // q for c in H], 2 * k


def _biquadratic_resultant_valuation(a: int, c: int, e: int, p: int) -> int:
    """v_p(Res(H, H')) for H = a z^4 + c z^2 + e (separable)."""
    res = 16 * a * a * e * (c * c - 4 * a * e) ** 2
    assert res != 0, "torsor quartic must be separable"
    return valuation(res, p)


def _odd_solvable(H, p: int, acc: int, cap: int, depth: int = 0) -> bool:
    """Is w^2 = H(z) solvable with z in Z_p, w in Q_p?  (p odd.)

    acc = valuation of the original quartic already stripped along this
    branch; once acc exceeds cap = 2 v_p(Res) the Newton argument yields an
    exact root and the answer is yes.
    """
    assert depth < 120, "runaway torsor recursion"
    H, gained = _strip_square_factors(H, p)
    acc += gained
    if acc > cap:
        return True
    m = min(valuation(c, p) for c in H if c != 0)
    if m >= 1:
        # every value is divisible by p: need v(H(z)) >= 2, i.e. z must be
        # a root of (H/p) mod p; recurse into those balls
        h1 = pnormalize([c // p for c in H], p)
        return any(
            _odd_solvable(_shift_scale(H, z0, p), p, acc, cap, depth + 1)
            for z0 in proots(h1, p)
        )
    hbar = pnormalize(H, p)
    if p < _WEIL_THRESHOLD:
        # scan the residue line: units decide on the spot, simple roots are
        # exact roots by Hensel (a w = 0 point), multiple roots recurse
        dbar = pderiv(hbar, p)
        multiple = []
        for z0 in range(p):
            val = peval(hbar, z0, p)
            if val != 0:
                if kronecker(val, p) == 1:
                    return True
            elif peval(dbar, z0, p) != 0:
                return True
            else:
                multiple.append(z0)
        return any(
            _odd_solvable(_shift_scale(H, z0, p), p, acc, cap, depth + 1)
            for z0 in multiple
        )
    cbar, sbar, tbar = squarefree_split(hbar, p)
    if len(tbar) - 1 >= 1:
        # the squarefree part is nonconstant: by the Weil bound the curve
        # w^2 = hbar(z) has an F_p-point with unit square value (p >= 67)
        return True
    # hbar = cbar * sbar^2: off the roots of sbar the class is cbar
    if kronecker(cbar, p) == 1:
        return True
    return any(
        _odd_solvable(_shift_scale(H, z0, p), p, acc, cap, depth + 1)
        for z0 in proots(sbar, p)
    )


def _two_adic_solvable(H, z0: int, j: int, cap: int) -> bool:
    """Is w^2 = H(z) solvable with z in the ball z0 + 2^j Z_2?

    A ball is decided by its center once v_2(H(z0)) + 3 <= j (the value's
    square class is then constant on the ball); otherwise it splits.
    """
    val = peval_int(H, z0)
    if val == 0:
        return True  # exact rational root: w = 0
    v = valuation(val, 2)
    if v > cap:
        return True  # Newton regime: exact 2-adic root nearby
    if v + 3 <= j:
        return v % 2 == 0 and (val >> v) % 8 == 1
    return _two_adic_solvable(H, z0, j + 1, cap) or _two_adic_solvable(
        H, z0 + (1 << j), j + 1, cap
    )


def peval_int(H, z: int) -> int:
    out = 0
    for c in reversed(H):
        out = out * z + c
    return out


def torsor_has_local_point(c: int, A: int, B: int, place) -> bool:
    """Does the class-c torsor of y^2 = x^3 + A x^2 + B x have a K_v-point?

    A, B integers, c an integer representing a square class.
    """
    if place == REAL:
        if c > 0:
            return True
        return B < 0 or (A > 0 and A * A - 4 * B >= 0)
    p = int(place)
    chart1 = [B * c, 0, A * c * c, 0, c**3]  # H(z), z in Z_p
    chart2 = [c**3, 0, A * c * c, 0, B * c]  # H(u), u in p Z_p
    if p == 2:
        cap = 2 * _biquadratic_resultant_valuation(c**3, A * c * c, B * c, 2)
        return _two_adic_solvable(chart1, 0, 0, cap) or _two_adic_solvable(
            chart2, 0, 1, cap
        )
    cap = 2 * _biquadratic_resultant_valuation(c**3, A * c * c, B * c, p)
    return _odd_solvable(chart1, p, 0, cap) or _odd_solvable(
        _shift_scale(chart2, 0, p), p, 0, cap
    )


# ----------------------------------------------------------------------
# local images of the x-class map
# ----------------------------------------------------------------------

def _integral_model(curve: WeierstrassCurve) -> tuple[int, int]:
    u = lcm(curve.alpha.denominator, curve.beta.denominator)
    return int(curve.alpha * u * u), int(curve.beta * u**4)


def local_x_class_image(curve: WeierstrassCurve, place) -> frozenset[int]:
    """Square classes of x-coordinates of curve(K_v), as canonical reps.

    Always contains 1 (infinity) and the class of beta (the point (0, 0));
    the result is a subgroup of K_v*/(K_v*)^2.
    """
    A, B = _integral_model(curve)
    grp = local_square_classes(place)
    beta_rep = grp.localize(B)
    image = set()
    for c in grp.reps:
        if c == 1 or c == beta_rep:
            image.add(c)
        elif torsor_has_local_point(c, A, B, place):
            image.add(c)
    for g in image:
        for h in image:
            assert grp.localize(g * h) in image, (
                f"x-class image not a subgroup at {place}: {sorted(image)}"
            )
    return frozenset(image)


def image_of_phi_descent(params: FamilyParams, place) -> frozenset[int]:
    """Local image of the descent map on E' (classes hit by x on E'(K_v))."""
    _, Ep, _, _ = make_pair(params)
    return local_x_class_image(Ep, place)


def image_of_dual_descent(params: FamilyParams, place) -> frozenset[int]:
    """Local image of the dual descent map on E."""
    E, _, _, _ = make_pair(params)
    return local_x_class_image(E, place)


def local_selmer_factor(params: FamilyParams, place) -> Fraction:
    """|image of the phi-descent at v| / 2: one factor of the global ratio
    |Sel_phi| / |Sel_phihat|."""
    return Fraction(len(image_of_phi_descent(params, place)), 2)


# ----------------------------------------------------------------------
# predicted image at odd primes with a classified profile
# ----------------------------------------------------------------------

def predicted_image_at(params: FamilyParams, p: int) -> frozenset[int]:
    """The image of the phi-descent at an odd prime p with v_p(2d) = 0 and a
    classified valuation profile, read off the (a, b, d) data alone.

    Cases, with m = (v_p(a), v_p(a+b), v_p(a-b)):
      (0,0,0)                     unit classes {1, u}
      (0,0,1)                     trivial
      (1,0,0)                     {1, class(beta')} (ramified generator)
      (0,1,0), d square           {1, class(beta')}
      (0,1,0), d nonsquare        everything
      (-1,1,-1), -2a(a+b)d square everything
      (-1,1,-1), otherwise        unit classes
      (0,2,0),  -2a(a+b)d square  everything
      (0,2,0),  otherwise         unit classes
    """
    if p == 2:
        raise UnsupportedProfileError("predicted image applies to odd primes")
    if valuation(Fraction(2 * params.d), p) != 0:
        raise UnsupportedProfileError("predicted image needs v_p(2d) = 0")
    m = profile_at(params, p)
    grp = local_square_classes(p)
    one, u = grp.reps[0], grp.reps[1]
    a, b, d = params.a, params.b, params.d

    if m == (0, 0, 0):
        return frozenset((one, u))
    if m == (0, 0, 1):
        return frozenset((one,))
    if m in ((1, 0, 0), (0, 1, 0)):
        beta_p = 8 * a * (a + b) ** 3 * d * d
        if m == (1, 0, 0) or _is_square_class(d, p):
            gen = grp.localize(beta_p)
            assert valuation(beta_p, p) % 2 == 1, "generator must be ramified"
            return frozenset((one, gen))
        return frozenset(grp.reps)
    if m in ((-1, 1, -1), (0, 2, 0)):
        if _is_square_class(-2 * a * (a + b) * d, p):
            return frozenset(grp.reps)
        return frozenset((one, u))
    raise UnsupportedProfileError(f"profile {m} at p={p} not classified")


def _is_square_class(x, p: int) -> bool:
    """Even valuation and quadratic-residue unit part (x a local square)."""
    return _rep_of(x, p) == 1
