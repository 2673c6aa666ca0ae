"""Reduction types: Tate's algorithm at every prime, plus the family's
predicted reduction table at odd primes with a classified valuation profile.

tate_at runs the full algorithm (all Kodaira types, any p including 2) on the
integral model obtained from y^2 = x^3 + alpha x^2 + beta x by clearing
denominators; non-minimal models are reduced on the fly, so the reported
valuation is that of the minimal discriminant.  Large primes are fine: root
counting mod p goes through polymod, never through residue scans.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .curves import FamilyParams, WeierstrassCurve, make_pair
from .exactnum import DomainError, is_local_square, is_prime, kronecker, valuation
from .polymod import count_roots, pderiv, pgcd, pmul, pnormalize, proots

_INF = 10**9  # stand-in for v_p(0)


def _exactdiv(n: int, m: int) -> int:
    assert n % m == 0, f"inexact division {n} / {m}"
    return n // m


class UnsupportedProfileError(DomainError):
    """Valuation profile outside the classified table."""


@dataclass(frozen=True)
class LocalReduction:
    p: int
    kodaira: str  # "I0", "I2", "III", "I1*", "II*", ...
    tamagawa: int
    v_min_disc: int
    split: bool | None = None  # multiplicative types only


# ----------------------------------------------------------------------
# integral Weierstrass bookkeeping
# ----------------------------------------------------------------------

def _vp(n: int, p: int) -> int:
    if n == 0:
        return _INF
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _b_invariants(ai):
    a1, a2, a3, a4, a6 = ai
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    return b2, b4, b6, b8


def _disc(ai) -> int:
    b2, b4, b6, b8 = _b_invariants(ai)
    return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6


def _c4(ai) -> int:
    b2, b4, _, _ = _b_invariants(ai)
    return b2 * b2 - 24 * b4


def _translate(ai, r: int, s: int, t: int):
    """Coordinate change x -> x + r, y -> y + s x + t (unit scaling)."""
    a1, a2, a3, a4, a6 = ai
    A1 = a1 + 2 * s
    A2 = a2 - s * a1 + 3 * r - s * s
    A3 = a3 + r * a1 + 2 * t
    A4 = a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t
    A6 = a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1
    out = [A1, A2, A3, A4, A6]
    assert _disc(out) == _disc(ai), "translation must preserve the discriminant"
    return out


def _singular_point(ai, p: int):
    """The unique singular point of the reduction mod p, lifted to ints."""
    a1, a2, a3, a4, a6 = ai
    if p == 2:
        for x0 in (0, 1):
            for y0 in (0, 1):
                F = y0 * y0 + a1 * x0 * y0 + a3 * y0 - x0**3 - a2 * x0 * x0 - a4 * x0 - a6
                Fx = a1 * y0 - 3 * x0 * x0 - 2 * a2 * x0 - a4
                Fy = 2 * y0 + a1 * x0 + a3
                if F % 2 == 0 and Fx % 2 == 0 and Fy % 2 == 0:
                    return x0, y0
        raise AssertionError("no singular point found mod 2")
    # p odd: complete the square; singular x is a repeated root of
    # g = 4x^3 + b2 x^2 + 2 b4 x + b6
    b2, b4, b6, _ = _b_invariants(ai)
    g = pnormalize([b6, 2 * b4, b2, 4], p)
    rep = pgcd(g, pderiv(g, p), p)
    roots = proots(rep, p)
    assert len(roots) == 1, f"expected a unique singular x mod {p}"
    x0 = roots[0]
    y0 = (-(a1 * x0 + a3) * pow(2, p - 2, p)) % p
    return x0, y0


# ----------------------------------------------------------------------
# quadratic split tests over F_p
# ----------------------------------------------------------------------

def _quad_splits(A: int, B: int, C: int, p: int) -> tuple[bool, bool]:
    """(separable?, has roots in F_p?) for A Y^2 + B Y + C over F_p, A a unit."""
    if p == 2:
        sep = B % 2 == 1
        has = any((A * y * y + B * y + C) % 2 == 0 for y in (0, 1))
        return sep, has
    disc = (B * B - 4 * A * C) % p
    if disc == 0:
        return False, True
    return True, kronecker(disc, p) == 1


# ----------------------------------------------------------------------
# the algorithm
# ----------------------------------------------------------------------

def tate_at(curve: WeierstrassCurve, p: int) -> LocalReduction:
    """Kodaira type, Tamagawa number and minimal-discriminant valuation at p."""
    if p < 2 or not is_prime(p):
        raise DomainError(f"tate_at needs a prime, got {p}")
    u = lcm(curve.alpha.denominator, curve.beta.denominator)
    ai = [0, int(curve.alpha * u * u), 0, int(curve.beta * u**4), 0]
    return _tate_integral(ai, p)


def _tate_integral(ai, p: int) -> LocalReduction:
    while True:
        disc = _disc(ai)
        assert disc != 0
        n = _vp(disc, p)
        if n == 0:
            return LocalReduction(p, "I0", 1, 0)

        # step: move the singular point of the reduction to the origin
        x0, y0 = _singular_point(ai, p)
        ai = _translate(ai, x0, 0, y0)
        a1, a2, a3, a4, a6 = ai

        if _vp(_c4(ai), p) == 0:
            # multiplicative: I_n; tangent directions from Y^2 + a1 Y - a2
            _, split = _quad_splits(1, a1, -a2, p)
            c = n if split else (2 if n % 2 == 0 else 1)
            return LocalReduction(p, f"I{n}", c, n, split)

        if _vp(a6, p) < 2:
            return LocalReduction(p, "II", 1, n)
        if _vp(_b_invariants(ai)[3], p) < 3:  # b8
            return LocalReduction(p, "III", 2, n)
        if _vp(_b_invariants(ai)[2], p) < 3:  # b6
            _, has = _quad_splits(1, _exactdiv(a3, p), -_exactdiv(a6, p * p), p)
            return LocalReduction(p, "IV", 3 if has else 1, n)

        ai = _normalize_step7(ai, p)
        a1, a2, a3, a4, a6 = ai

        # P(T) = T^3 + (a2/p) T^2 + (a4/p^2) T + a6/p^3 mod p
        Pcoeffs = [_exactdiv(a6, p**3), _exactdiv(a4, p**2), _exactdiv(a2, p), 1]
        P = pnormalize(Pcoeffs, p)
        rep = pgcd(P, pderiv(P, p), p)

        if len(rep) <= 1:  # squarefree: I0*
            c = 1 + count_roots(Pcoeffs, p)
            return LocalReduction(p, "I0*", c, n)

        # rep has one distinct root rho; decide double vs triple by expansion
        rho = proots(rep, p)[0]
        cube = pmul(pmul([-rho, 1], [-rho, 1], p), [-rho, 1], p)
        if P != cube:  # double root -> I_m*
            ai = _translate(ai, rho * p, 0, 0)
            return _im_star_loop(ai, p, n)

        # triple root
        ai = _translate(ai, rho * p, 0, 0)
        a1, a2, a3, a4, a6 = ai
        assert _vp(a2, p) >= 2 and _vp(a4, p) >= 3 and _vp(a6, p) >= 4

        a3t, a6t = _exactdiv(a3, p**2), _exactdiv(a6, p**4)
        sep, has = _quad_splits(1, a3t, -a6t, p)
        if sep:
            return LocalReduction(p, "IV*", 3 if has else 1, n)
        y0 = _double_root_of_quad(1, a3t, -a6t, p)
        ai = _translate(ai, 0, 0, y0 * p * p)
        a1, a2, a3, a4, a6 = ai
        assert _vp(a3, p) >= 3 and _vp(a6, p) >= 5

        if _vp(a4, p) == 3:
            return LocalReduction(p, "III*", 2, n)
        if _vp(a6, p) == 5:
            return LocalReduction(p, "II*", 1, n)

        # non-minimal: rescale (x, y) -> (p^2 x, p^3 y) and start over
        assert _vp(a1, p) >= 1 and _vp(a2, p) >= 2 and _vp(a4, p) >= 4 and _vp(a6, p) >= 6
        ai = [a1 // p, a2 // p**2, a3 // p**3, a4 // p**4, a6 // p**6]


def _normalize_step7(ai, p: int):
    """Reach p | a1, a2; p^2 | a3, a4; p^3 | a6 by an (r, s, t) change."""
    if p != 2:
        a1, a2, a3, a4, a6 = ai
        inv2 = pow(2, p - 2, p)
        s = (-a1 * inv2) % p
        out = _translate(ai, 0, s, 0)
        t = (-out[2] * inv2) % (p * p)
        out = _translate(out, 0, 0, t)
    else:
        out = None
        for r in (0, 2, 4, 6):
            for s in (0, 1, 2, 3):
                for t in range(8):
                    cand = _translate(ai, r, s, t)
                    if (
                        cand[0] % 2 == 0
                        and cand[1] % 2 == 0
                        and cand[2] % 4 == 0
                        and cand[3] % 4 == 0
                        and cand[4] % 8 == 0
                    ):
                        out = cand
                        break
                if out:
                    break
            if out:
                break
        assert out is not None, "step-7 normalization must be reachable"
    a1, a2, a3, a4, a6 = out
    assert a1 % p == 0 and a2 % p == 0
    assert a3 % p**2 == 0 and a4 % p**2 == 0 and a6 % p**3 == 0
    return out


def _double_root_of_quad(A: int, B: int, C: int, p: int) -> int:
    # double root of A Y^2 + B Y + C mod p (A unit, discriminant = 0 mod p)
    if p == 2:
        # B even: Y^2 = -C/A, square root mod 2 is the identity
        return (-C * A) % 2
    return (-B * pow(2 * A, p - 2, p)) % p


def _im_star_loop(ai, p: int, n: int) -> LocalReduction:
    """Subloop for I_m*, entered with a double root moved to T = 0."""
    a1, a2, a3, a4, a6 = ai
    assert _vp(a2, p) == 1 and _vp(a3, p) >= 2 and _vp(a4, p) >= 3 and _vp(a6, p) >= 4
    m = 1
    mx = my = p * p
    while True:
        a1, a2, a3, a4, a6 = ai
        a3t = _exactdiv(a3, my)
        a6t = _exactdiv(a6, mx * my)
        sep, has = _quad_splits(1, a3t, -a6t, p)
        if sep:
            c = 4 if has else 2
            break
        y0 = _double_root_of_quad(1, a3t, -a6t, p)
        ai = _translate(ai, 0, 0, y0 * my)
        my *= p
        m += 1

        a1, a2, a3, a4, a6 = ai
        a2t = _exactdiv(a2, p)
        a4t = _exactdiv(a4, p * mx)
        a6t = _exactdiv(a6, mx * my)
        sep, has = _quad_splits(a2t, a4t, a6t, p)
        if sep:
            c = 4 if has else 2
            break
        x0 = _double_root_of_quad(a2t, a4t, a6t, p)
        ai = _translate(ai, x0 * mx, 0, 0)
        mx *= p
        m += 1
    if p == 2:
        # wild ramification: v(disc) = 6 + m + delta with delta >= 0
        assert n >= 6 + m, f"I_m* bookkeeping: v(disc) = {n} but m = {m}"
    else:
        assert n == 6 + m, f"I_m* bookkeeping: v(disc) = {n} but m = {m}"
    return LocalReduction(p, f"I{m}*", c, n)


# ----------------------------------------------------------------------
# the family's predicted table at odd primes with classified profiles
# ----------------------------------------------------------------------

def profile_at(params: FamilyParams, p: int) -> tuple[int, int, int]:
    """(v_p(a), v_p(a+b), v_p(a-b))."""
    a, b = params.a, params.b
    return (valuation(a, p), valuation(a + b, p), valuation(a - b, p))


_CLASSIFIED = {(0, 0, 0), (0, 0, 1), (1, 0, 0), (0, 1, 0), (-1, 1, -1), (0, 2, 0)}


def expected_reduction(params: FamilyParams, p: int):
    """Predicted ((kodaira, c) for E, (kodaira, c) for E') at an odd prime p
    not dividing 2d, for the six classified valuation profiles."""
    if p == 2:
        raise UnsupportedProfileError("table applies to odd primes only")
    if valuation(2 * params.d, p) != 0:
        raise UnsupportedProfileError("table needs v_p(2d) = 0")
    m = profile_at(params, p)
    if m not in _CLASSIFIED:
        raise UnsupportedProfileError(f"profile {m} at p={p} not classified")
    a, b, d = params.a, params.b, params.d
    if m == (0, 0, 0):
        return ("I0", 1), ("I0", 1)
    if m == (0, 0, 1):
        return ("I2", 2), ("I1", 1)
    if m == (1, 0, 0):
        return ("III", 2), ("III", 2)
    if m == (0, 1, 0):
        return ("I1*", 4 if is_local_square(Fraction(d), p) else 2), ("I2*", 4)
    # remaining rows: (-1,1,-1) and (0,2,0)
    split = is_local_square(-2 * a * (a + b) * d, p)
    return ("I2", 2), ("I4", 4 if split else 2)


def reductions_for_pair(params: FamilyParams, p: int) -> tuple[LocalReduction, LocalReduction]:
    """tate_at for (E, E') of the family at p."""
    E, Ep, _, _ = make_pair(params)
    return tate_at(E, p), tate_at(Ep, p)
