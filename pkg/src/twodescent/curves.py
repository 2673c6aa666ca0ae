"""The two-parameter curve family and its 2-isogeny structure.

Curves are y^2 = x^3 + alpha x^2 + beta x, always with a rational 2-torsion
point at the origin.  For parameters (a, b) and a twist factor d the pair is

    E:  alpha = 4 a (a+b) d,     beta = 2 a (a+b)^2 (a-b) d^2
    E': alpha' = -2 alpha,       beta' = alpha^2 - 4 beta

joined by the 2-isogeny phi(x, y) = (y^2/x^2, y (beta - x^2)/x^2) and its
dual.  Points are affine (x, y) tuples of Fractions; None is the point at
infinity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactnum import DomainError, Rational

INFINITY = None  # the identity of the group law

Point = "tuple[Rational, Rational] | None"


@dataclass(frozen=True)
class WeierstrassCurve:
    """y^2 = x^3 + alpha x^2 + beta x with beta (alpha^2 - 4 beta) != 0."""

    alpha: Rational
    beta: Rational

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "beta", Fraction(self.beta))
        if self.beta * (self.alpha**2 - 4 * self.beta) == 0:
            raise DomainError("degenerate curve: beta (alpha^2 - 4 beta) = 0")

    def discriminant(self) -> Rational:
        return 16 * self.beta**2 * (self.alpha**2 - 4 * self.beta)

    def contains(self, P) -> bool:
        if P is INFINITY:
            return True
        x, y = P
        return y * y == x**3 + self.alpha * x * x + self.beta * x


@dataclass(frozen=True)
class FamilyParams:
    """Family parameters: rationals a, b and a squarefree twist integer d."""

    a: Rational
    b: Rational
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.a == 0 or self.a + self.b == 0 or self.a - self.b == 0:
            raise DomainError("need a(a+b)(a-b) != 0")
        if self.d == 0:
            raise DomainError("twist factor must be nonzero")


def make_pair(params: FamilyParams):
    """(E, E', disc E, disc E') for the parameters.

    Discriminants returned are of these fixed models:
        disc E  = 2^9  a^3 (a+b)^7 (a-b)^2 d^6
        disc E' = 2^15 a^3 (a+b)^8 (a-b)   d^6
    """
    a, b, d = params.a, params.b, Fraction(params.d)
    alpha = 4 * a * (a + b) * d
    beta = 2 * a * (a + b) ** 2 * (a - b) * d * d
    E = WeierstrassCurve(alpha, beta)
    Ep = WeierstrassCurve(-2 * alpha, alpha**2 - 4 * beta)
    # the primed coefficients in closed form; guards against edit slips
    assert Ep.alpha == -8 * a * (a + b) * d
    assert Ep.beta == 8 * a * (a + b) ** 3 * d * d
    disc = 2**9 * a**3 * (a + b) ** 7 * (a - b) ** 2 * d**6
    disc_p = 2**15 * a**3 * (a + b) ** 8 * (a - b) * d**6
    assert disc == E.discriminant() and disc_p == Ep.discriminant()
    return E, Ep, disc, disc_p


def group_law(curve: WeierstrassCurve, P, Q):
    """Chord-tangent addition; inputs must lie on the curve."""
    for R in (P, Q):
        if not curve.contains(R):
            raise DomainError(f"point {R} not on curve")
    if P is INFINITY:
        return Q
    if Q is INFINITY:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if y1 == -y2:
            return INFINITY
        # tangent: implicit differentiation of y^2 = x^3 + alpha x^2 + beta x
        m = (3 * x1 * x1 + 2 * curve.alpha * x1 + curve.beta) / (2 * y1)
    else:
        m = (y2 - y1) / (x2 - x1)
    x3 = m * m - curve.alpha - x1 - x2
    y3 = m * (x1 - x3) - y1
    return (x3, y3)


def negate(P):
    return INFINITY if P is INFINITY else (P[0], -P[1])


def scalar_multiple(curve: WeierstrassCurve, n: int, P):
    """n P via double-and-add."""
    if n < 0:
        return scalar_multiple(curve, -n, negate(P))
    R = INFINITY
    Q = P
    while n:
        if n & 1:
            R = group_law(curve, R, Q)
        Q = group_law(curve, Q, Q)
        n >>= 1
    return R


def isogeny_pair(params: FamilyParams):
    """(phi, phi_hat): the 2-isogeny E -> E' and its dual, as point maps."""
    E, Ep, _, _ = make_pair(params)

    def phi(P):
        if not E.contains(P):
            raise DomainError("phi: point not on source curve")
        if P is INFINITY or P == (0, 0):
            return INFINITY
        x, y = P
        img = (y * y / (x * x), y * (E.beta - x * x) / (x * x))
        assert Ep.contains(img)
        return img

    def phi_hat(P):
        if not Ep.contains(P):
            raise DomainError("phi_hat: point not on source curve")
        if P is INFINITY or P == (0, 0):
            return INFINITY
        x, y = P
        # same construction followed by (X, Y) -> (X/4, Y/8)
        img = (y * y / (4 * x * x), y * (Ep.beta - x * x) / (8 * x * x))
        assert E.contains(img)
        return img

    return phi, phi_hat


def marked_point(a, b) -> tuple:
    """The built-in point (-2a(a+b), 2a(a+b)^2) on the d = 1 curve."""
    a, b = Fraction(a), Fraction(b)
    return (-2 * a * (a + b), 2 * a * (a + b) ** 2)


def is_nontorsion(curve: WeierstrassCurve, P) -> bool:
    """True iff P is a point of infinite order.

    Torsion over Q has order at most 12 (and never 11), so P is nontorsion
    iff nP != infinity for n = 2..12.
    """
    if P is INFINITY:
        return False
    if not curve.contains(P):
        raise DomainError("is_nontorsion: point not on curve")
    R = P
    for _ in range(2, 13):
        R = group_law(curve, R, P)
        if R is INFINITY:
            return False
    return True


def nontorsion_witness(curve: WeierstrassCurve, P) -> list:
    """x-coordinates of nP for n = 2..12, all finite for a nontorsion P."""
    out = []
    R = P
    for _ in range(2, 13):
        R = group_law(curve, R, P)
        assert R is not INFINITY, "witness requested for a torsion point"
        out.append(R[0])
    return out


def j_invariant(a, b) -> Rational:
    """j of the d = 1 curve (twist-invariant): 64 (5a+3b)^3 / ((a-b)^2 (a+b))."""
    a, b = Fraction(a), Fraction(b)
    if (a - b) * (a + b) == 0 or a == 0:
        raise DomainError("j undefined on the degenerate locus")
    return 64 * (5 * a + 3 * b) ** 3 / ((a - b) ** 2 * (a + b))
