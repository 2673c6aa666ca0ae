"""Exact arithmetic substrate: p-adic valuations, Kronecker symbols, square
classes of rationals, local square tests, primality and integer factoring.

Everything here is exact integer/rational arithmetic.  No floats, anywhere.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt, prod

Rational = Fraction

# The archimedean place of Q.  Finite places are named by their prime.
REAL = "real"

# Trial division bound used before rho kicks in.
_TRIAL_BOUND = 1_000_000

# Bases making Miller-Rabin deterministic for n < 2^64 (Sinclair's set).
_MR_BASES_64 = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

# Number of extra pseudo-random rounds above 2^64 (error < 4^-64).
_MR_ROUNDS_BIG = 64


class DomainError(ValueError):
    """An operation was applied outside its mathematical domain."""


# ----------------------------------------------------------------------
# valuations and symbols
# ----------------------------------------------------------------------

def valuation(x, p: int) -> int:
    """p-adic valuation of a nonzero rational (or integer)."""
    if p < 2:
        raise DomainError(f"valuation needs a prime, got {p}")
    if x == 0:
        raise DomainError("valuation of 0 is undefined")
    if isinstance(x, Fraction):
        return _int_valuation(x.numerator, p) - _int_valuation(x.denominator, p)
    return _int_valuation(int(x), p)


def _int_valuation(n: int, p: int) -> int:
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def unit_part(x, p: int) -> Fraction:
    """x / p^v(x): the p-adic unit cofactor of a nonzero rational."""
    return Fraction(x) / Fraction(p) ** valuation(x, p)


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n), the full extension of Jacobi/Legendre."""
    a = int(a)
    n = int(n)
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    # peel the even part of n: (a|2) is 0, 1, -1 by a mod 8
    twos = 0
    while n % 2 == 0:
        n //= 2
        twos += 1
    if twos:
        if a % 2 == 0:
            return 0
        if twos % 2 == 1 and a % 8 in (3, 5):
            result = -result
    # Jacobi part, n odd > 0, by reciprocity
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


# ----------------------------------------------------------------------
# primality
# ----------------------------------------------------------------------

def _miller_rabin_witness(n: int, a: int) -> bool:
    # True if a witnesses compositeness of odd n > 2.
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    x = pow(a % n, d, n)
    if x == 1 or x == n - 1:
        return False
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return False
    return True


def is_prime(n: int) -> bool:
    """Primality test; deterministic below 2^64, see is_prime_checked above that."""
    return is_prime_checked(n)[0]


def is_prime_checked(n: int) -> tuple[bool, bool]:
    """(prime?, certain?).  certain is False only for probable primes >= 2^64."""
    n = int(n)
    if n < 2:
        return False, True
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p, True
    if n < 41 * 41:
        return True, True
    for a in _MR_BASES_64:
        if _miller_rabin_witness(n, a):
            return False, True
    if n < 1 << 64:
        return True, True
    # fixed-seed witnesses keep runs reproducible
    rng = random.Random(n & 0xFFFFFFFF)
    for _ in range(_MR_ROUNDS_BIG):
        if _miller_rabin_witness(n, rng.randrange(2, n - 1)):
            return False, True
    return True, False


def next_prime(n: int) -> int:
    """Smallest prime > n."""
    n = max(int(n), 1) + 1
    if n % 2 == 0 and n > 2:
        n += 1
    while not is_prime(n):
        n += 1 if n == 2 else 2
    return n


# ----------------------------------------------------------------------
# factoring: trial division + Brent's rho
# ----------------------------------------------------------------------

_small_primes: list[int] | None = None


def _sieve_primes() -> list[int]:
    global _small_primes
    if _small_primes is None:
        bound = _TRIAL_BOUND
        flags = bytearray([1]) * (bound + 1)
        flags[0] = flags[1] = 0
        for i in range(2, isqrt(bound) + 1):
            if flags[i]:
                flags[i * i :: i] = bytearray(len(flags[i * i :: i]))
        _small_primes = [i for i in range(bound + 1) if flags[i]]
    return _small_primes


def _brent_rho(n: int) -> int:
    # nontrivial factor of odd composite n (no small prime factors)
    if n % 2 == 0:
        return 2
    rng = random.Random(n % (1 << 30))
    while True:
        y = rng.randrange(1, n)
        c = rng.randrange(1, n)
        m = 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = gcd(abs(x - ys), n)
        if g != n:
            return g


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of |n| as {p: e}; raises on 0."""
    n = abs(int(n))
    if n == 0:
        raise DomainError("cannot factor 0")
    out: dict[int, int] = {}
    for p in _sieve_primes():
        if p * p > n:
            break
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    if n > 1:
        stack = [n]
        while stack:
            m = stack.pop()
            if is_prime(m):
                out[m] = out.get(m, 0) + 1
                continue
            d = _brent_rho(m)
            stack.append(d)
            stack.append(m // d)
    return dict(sorted(out.items()))


# ----------------------------------------------------------------------
# square classes in Q* / (Q*)^2
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SquareClass:
    """A class in Q*/(Q*)^2: a sign and a sorted tuple of distinct primes.

    The canonical representative is sign * prod(primes), a squarefree integer.
    """

    sign: int
    primes: tuple[int, ...]

    def __post_init__(self):
        assert self.sign in (1, -1)
        assert all(
            self.primes[i] < self.primes[i + 1] for i in range(len(self.primes) - 1)
        ), "primes must be sorted and distinct"

    def __mul__(self, other: "SquareClass") -> "SquareClass":
        sym = set(self.primes) ^ set(other.primes)
        return SquareClass(self.sign * other.sign, tuple(sorted(sym)))

    def is_trivial(self) -> bool:
        return self.sign == 1 and not self.primes

    @property
    def value(self) -> int:
        """The signed squarefree representative."""
        return self.sign * prod(self.primes) if self.primes else self.sign

    def __repr__(self):
        return f"SquareClass({self.value})"


TRIVIAL_CLASS = SquareClass(1, ())


def square_class(x) -> SquareClass:
    """Image of a nonzero rational in Q*/(Q*)^2."""
    x = Fraction(x)
    if x == 0:
        raise DomainError("0 has no square class")
    n = x.numerator * x.denominator  # same class as x
    sign = 1 if n > 0 else -1
    primes = tuple(p for p, e in factorize(n).items() if e % 2 == 1)
    return SquareClass(sign, primes)


# ----------------------------------------------------------------------
# local squares
# ----------------------------------------------------------------------

def is_local_square(x, place) -> bool:
    """Is the nonzero rational x a square in Q_p (or R for place == REAL)?"""
    x = Fraction(x)
    if x == 0:
        raise DomainError("0 is excluded from local square tests")
    if place == REAL:
        return x > 0
    p = int(place)
    v = valuation(x, p)
    if v % 2 == 1:
        return False
    u = x / Fraction(p) ** v
    w = u.numerator * u.denominator  # unit at p, same class as u
    if p == 2:
        return w % 8 == 1
    return kronecker(w, p) == 1


def is_square_integer(n: int) -> bool:
    """Exact perfect-square test for integers."""
    if n < 0:
        return False
    r = isqrt(n)
    return r * r == n


def sfree_part(x, strip: list[int]) -> int:
    """Remove all factors of the given primes from a positive integer."""
    x = int(x)
    if x <= 0:
        raise DomainError("sfree_part expects a positive integer")
    for p in strip:
        while x % p == 0:
            x //= p
    return x
