"""Small-degree polynomial arithmetic over F_p.

Used for: locating singular points mod p, counting/extracting roots of the
cubics and quartics that appear in Tate's algorithm and in local torsor
analysis.  Degrees never exceed 4, but p can be large (billions), so root
finding goes through gcd(T^p - T, f) with modular exponentiation instead of
scanning F_p.  All choices are deterministic.
"""

from __future__ import annotations

from .exactnum import kronecker

Poly = list[int]  # coefficients, index i = coefficient of T^i, reduced mod p


def trim(f: Poly) -> Poly:
    while f and f[-1] == 0:
        f.pop()
    return f


def pnormalize(f, p: int) -> Poly:
    return trim([int(c) % p for c in f])


def pdeg(f: Poly) -> int:
    return len(f) - 1  # deg(0) == -1


def padd(f: Poly, g: Poly, p: int) -> Poly:
    n = max(len(f), len(g))
    return trim([((f[i] if i < len(f) else 0) + (g[i] if i < len(g) else 0)) % p for i in range(n)])


def pmul(f: Poly, g: Poly, p: int) -> Poly:
    if not f or not g:
        return []
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] = (out[i + j] + a * b) % p
    return trim(out)


def pscale(f: Poly, c: int, p: int) -> Poly:
    c %= p
    return trim([a * c % p for a in f])


def pmod(f: Poly, g: Poly, p: int) -> Poly:
    """f mod g over F_p; g nonzero."""
    f = list(f)
    dg = pdeg(g)
    assert dg >= 0
    inv = pow(g[-1], p - 2, p)
    while pdeg(f) >= dg:
        c = f[-1] * inv % p
        shift = pdeg(f) - dg
        if c:
            for i in range(len(g)):
                f[i + shift] = (f[i + shift] - c * g[i]) % p
        f.pop()
        trim(f)
    return trim(f)


def pgcd(f: Poly, g: Poly, p: int) -> Poly:
    """Monic gcd over F_p."""
    f, g = pnormalize(f, p), pnormalize(g, p)
    while g:
        f, g = g, pmod(f, g, p)
    if f:
        f = pscale(f, pow(f[-1], p - 2, p), p)
    return f


def pderiv(f: Poly, p: int) -> Poly:
    return trim([i * f[i] % p for i in range(1, len(f))])


def peval(f: Poly, x: int, p: int) -> int:
    acc = 0
    for c in reversed(f):
        acc = (acc * x + c) % p
    return acc


def ppowmod(base: Poly, e: int, modpoly: Poly, p: int) -> Poly:
    """base^e mod (modpoly, p)."""
    result = [1]
    base = pmod(base, modpoly, p)
    while e:
        if e & 1:
            result = pmod(pmul(result, base, p), modpoly, p)
        base = pmod(pmul(base, base, p), modpoly, p)
        e >>= 1
    return result


def _linear_factor_product(f: Poly, p: int) -> Poly:
    """gcd(T^p - T, f): the product of (T - r) over distinct roots r in F_p."""
    tp = ppowmod([0, 1], p, f, p)  # T^p mod f
    return pgcd(padd(tp, pscale([0, 1], p - 1, p), p), f, p)


def proots(f, p: int) -> list[int]:
    """Sorted distinct roots of f in F_p (f not identically 0 mod p)."""
    f = pnormalize(f, p)
    assert f, "polynomial vanishes mod p"
    if pdeg(f) == 0:
        return []
    if p <= 64 or p <= pdeg(f) + 1:
        return sorted(x for x in range(p) if peval(f, x, p) == 0)
    g = _linear_factor_product(f, p)
    return sorted(_extract_roots(g, p))


def _extract_roots(g: Poly, p: int) -> list[int]:
    # g is a product of distinct monic linear factors over F_p
    d = pdeg(g)
    if d <= 0:
        return []
    if d == 1:
        return [(-g[0]) % p]
    if d == 2:
        # quadratic formula (p odd here: p > 64 in the caller)
        b, c = g[1], g[0]
        disc = (b * b - 4 * c) % p
        s = sqrt_mod(disc, p)
        assert s is not None, "split quadratic must have square discriminant"
        inv2 = pow(2, p - 2, p)
        return [((-b + s) * inv2) % p, ((-b - s) * inv2) % p]
    # split with gcd(g, (T+delta)^((p-1)/2) - 1) over deterministic shifts
    for delta in range(p):
        h = ppowmod([delta, 1], (p - 1) // 2, g, p)
        h = padd(h, [p - 1], p)
        d1 = pgcd(h, g, p)
        if 0 < pdeg(d1) < d:
            rest = _pexactdiv(g, d1, p)
            return _extract_roots(d1, p) + _extract_roots(rest, p)
    raise AssertionError("no splitting shift found")  # unreachable for split g


def _pexactdiv(f: Poly, g: Poly, p: int) -> Poly:
    """f / g when g | f over F_p."""
    f = list(f)
    out = [0] * (pdeg(f) - pdeg(g) + 1)
    inv = pow(g[-1], p - 2, p)
    for shift in range(len(out) - 1, -1, -1):
        c = f[pdeg(g) + shift] * inv % p
        out[shift] = c
        if c:
            for i in range(len(g)):
                f[i + shift] = (f[i + shift] - c * g[i]) % p
    assert not trim(f), "division was not exact"
    return trim(out)


def count_roots(f, p: int) -> int:
    """Number of distinct roots of f in F_p."""
    f = pnormalize(f, p)
    assert f
    if pdeg(f) == 0:
        return 0
    if p <= 64:
        return sum(1 for x in range(p) if peval(f, x, p) == 0)
    return pdeg(_linear_factor_product(f, p))


def squarefree_split(f: Poly, p: int) -> tuple[int, Poly, Poly]:
    """Write f = c * s^2 * t mod p with t monic squarefree, s monic.

    Assumes p > deg(f) so derivatives do not collapse (callers have deg <= 4
    and route small p through direct scans).
    """
    f = pnormalize(f, p)
    assert f and p > pdeg(f)
    c = f[-1]
    monic = pscale(f, pow(c, p - 2, p), p)
    s, t = _square_decompose(monic, p)
    return c, s, t


def _square_decompose(monic: Poly, p: int) -> tuple[Poly, Poly]:
    # monic = s^2 * t with t squarefree; recursion on the repeated part
    if pdeg(monic) <= 0:
        return [1], [1]
    d = pgcd(monic, pderiv(monic, p), p)  # prod f_i^(e_i - 1)
    if pdeg(d) == 0:
        return [1], monic
    u = _pexactdiv(monic, d, p)  # radical: prod f_i
    s1, t1 = _square_decompose(d, p)
    # factors of even multiplicity are exactly those shared by u and t1
    com = pgcd(u, t1, p)
    assert t1 == com, "repeated odd part must match the shared radical"
    return pmul(s1, com, p), _pexactdiv(u, com, p)


def sqrt_mod(a: int, p: int) -> int | None:
    """A square root of a modulo an odd prime p, or None (Tonelli-Shanks)."""
    a %= p
    if a == 0:
        return 0
    if kronecker(a, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # write p-1 = q 2^s with q odd
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while kronecker(z, p) != -1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        t2, i = t * t % p, 1
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r
