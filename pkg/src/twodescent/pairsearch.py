"""Sieve for admissible parameter pairs over a built site.

A site pins (a, b) into one congruence class per listed prime.  Writing
a = A/Q and b = B/Q with Q the product of the primes where the profile dips
below zero, the Chinese Remainder Theorem collapses all descriptor
congruences into a single residue pair (A0, B0) modulo M = prod p^{M_p};
every admissible pair lives on that lattice.  The search walks the lattice
by increasing B, and keeps a candidate iff the parts of A, A+B and B-A
left after removing all site primes are three distinct primes (the b-a
form is taken positive: primality of the cofactor is blind to sign).

Every emitted pair is re-checked against the descriptors directly; the
sieve is an accelerator, never an authority.  The walk is deterministic,
checkpointable, and optionally block-parallel with an order-preserving
merge, so a fixed task always emits the same sequence.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .exactnum import DomainError, is_prime, sfree_part
from .sitebuilder import SiteBuildError, SiteSpec, site_hash

__all__ = [
    "SearchTask",
    "FoundPair",
    "SearchExhausted",
    "CheckpointMismatch",
    "residue_system",
    "stripped_prime",
    "prime_triple",
    "find_pairs",
    "task_hash",
]

# Rejecting composites by a small-prime wheel is far cheaper than a
# Miller-Rabin round on search-sized integers; is_prime only trial-divides
# up to 37 on its own.
_WHEEL = [p for p in range(2, 1000) if is_prime(p)]


class SearchExhausted(RuntimeError):
    """Height bound hit before enough pairs were found."""

    def __init__(self, message: str, statistics: dict):
        super().__init__(message)
        self.statistics = statistics


class CheckpointMismatch(ValueError):
    """Checkpoint file belongs to a different task."""


@dataclass(frozen=True)
class FoundPair:
    """One admissible pair: a = A/Q, b = B/Q, with the three prime
    cofactors of a, a+b and b-a (q2 and q3 name the a+b and a-b primes
    throughout, matching the certifier's diagnostics)."""

    a: Fraction
    b: Fraction
    q1: int
    q2: int
    q3: int
    A: int
    B: int


@dataclass(frozen=True)
class SearchTask:
    site: SiteSpec
    height_bound: int
    count: int

    def __post_init__(self):
        if self.height_bound < 1 or self.count < 1:
            raise DomainError("height bound and count must be positive")
        for desc in self.site.descriptors:
            if min(desc.profile) < -1:
                raise DomainError(
                    "profiles below -1 would make the denominator non-squarefree"
                )

    @property
    def denominator(self) -> int:
        return self.site.denominator()


def residue_system(site: SiteSpec):
    """(Q, M, [(A0, B0)]): the congruence lattice for (A, B) = (Q*a, Q*b).

    Each descriptor pins scale*a mod p^{M_p}; since Q/scale is a unit at p,
    this is the single integer congruence A = (Q/scale)*residue mod p^{M_p}.
    The moduli are pairwise coprime, so the intersection is one residue
    pair modulo the product.
    """
    Q = site.denominator()
    M = 1
    A0 = B0 = 0
    for desc in sorted(site.descriptors, key=lambda d: d.p):
        m = desc.modulus
        if gcd(M, m) != 1:
            raise SiteBuildError("residue-system", "descriptor moduli collide")
        co = Q // desc.scale
        ra = desc.residue_a * co % m
        rb = desc.residue_b * co % m
        inv = pow(M % m, -1, m)
        A0 += M * ((ra - A0) * inv % m)
        B0 += M * ((rb - B0) * inv % m)
        M *= m
    return Q, M, [(A0 % M, B0 % M)]


def stripped_prime(form: int, strip) -> int | None:
    """The strip-free part of form if it is a prime outside strip, else None.

    An S-unit (everything stripped away) yields None: it generates no prime.
    A small prime r in the wheel divides the cofactor only when the cofactor
    is r itself; any larger multiple is composite and rejected without a
    Miller-Rabin round.
    """
    t = sfree_part(form, strip)
    if t == 1:
        return None
    for r in _WHEEL:
        if r * r > t:
            break
        if t % r == 0:
            return None
    return t if is_prime(t) else None


def prime_triple(A: int, B: int, strip) -> tuple[int, int, int] | None:
    """(q1, q2, q3) for the forms (A, A+B, B-A), or None if any cofactor
    is 1 or composite or the three primes are not pairwise distinct."""
    q1 = stripped_prime(A, strip)
    if q1 is None:
        return None
    q2 = stripped_prime(A + B, strip)
    if q2 is None:
        return None
    q3 = stripped_prime(B - A, strip)
    if q3 is None or len({q1, q2, q3}) != 3:
        return None
    return q1, q2, q3


def task_hash(task: SearchTask) -> str:
    payload = json.dumps(
        {
            "site": site_hash(task.site),
            "height_bound": str(task.height_bound),
            "count": str(task.count),
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def _scan_blocks(site, Q, M, residues, strip, j_lo, j_hi, height_bound):
    """All pairs in blocks j_lo <= j < j_hi, ordered by (B, A)."""
    out = []
    for j in range(j_lo, j_hi):
        for A0, B0 in residues:
            B = B0 + j * M
            if B <= 0 or B > height_bound:
                continue
            i = 0
            while True:
                A = A0 + i * M
                i += 1
                if A >= B:
                    break
                if A <= 0:
                    continue
                triple = prime_triple(A, B, strip)
                if triple is None:
                    continue
                a, b = Fraction(A, Q), Fraction(B, Q)
                # independent full recheck; the sieve gets no trust
                if not (0 < a < b and site.admits(a, b)):
                    continue
                out.append(FoundPair(a, b, *triple, A, B))
    out.sort(key=lambda f: (f.B, f.A))
    return out


def _load_checkpoint(path, expected_hash: str):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        return None
    if data.get("task") != expected_hash:
        raise CheckpointMismatch(f"checkpoint {path} belongs to a different task")
    return data


def _write_checkpoint(path, expected_hash, next_block, last_height, candidates, pairs):
    data = {
        "version": "1",
        "task": expected_hash,
        "next_block": str(next_block),
        "last_height": str(last_height),
        "candidates": str(candidates),
        "pairs": [[str(f.A), str(f.B)] for f in pairs],
    }
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _restore_pair(A: int, B: int, Q: int, strip) -> FoundPair:
    triple = prime_triple(A, B, strip)
    assert triple is not None, "checkpointed pair fails its own sieve"
    return FoundPair(Fraction(A, Q), Fraction(B, Q), *triple, A, B)


def find_pairs(task: SearchTask, *, checkpoint_path=None, jobs: int = 1):
    """Yield admissible pairs in deterministic (B, A) order, up to
    task.count; raise SearchExhausted if the height bound runs out first.

    With jobs > 1 the blocks are scanned by a process pool in chunks and
    merged in submission order, so the output is identical to a sequential
    run.  A checkpoint file (matched to the task by hash) makes the walk
    restartable: completed blocks are skipped and previously found pairs
    are re-emitted first.
    """
    site = task.site
    Q, M, residues = residue_system(site)
    strip = list(site.all_primes())
    digest = task_hash(task)

    start_block = 0
    candidates = 0
    found: list[FoundPair] = []
    if checkpoint_path is not None:
        state = _load_checkpoint(checkpoint_path, digest)
        if state is not None:
            start_block = int(state["next_block"])
            candidates = int(state["candidates"])
            found = [
                _restore_pair(int(sA), int(sB), Q, strip)
                for sA, sB in state["pairs"]
            ]

    emitted = 0
    for pair in found[: task.count]:
        yield pair
        emitted += 1

    min_b0 = min(b0 for _, b0 in residues)
    # past this block every residue places B above the height bound
    last_block = max(0, (task.height_bound - min_b0) // M + 1)

    def height_scanned(next_block: int) -> int:
        top = max(b0 for _, b0 in residues) + (next_block - 1) * M
        return max(0, min(task.height_bound, top))

    def blocks_done(next_block: int):
        if checkpoint_path is not None:
            _write_checkpoint(
                checkpoint_path, digest, next_block,
                height_scanned(next_block), candidates, found,
            )

    j = start_block
    checkpoint_every = 512
    if jobs <= 1:
        while emitted < task.count and j <= last_block:
            batch = _scan_blocks(site, Q, M, residues, strip, j, j + 1, task.height_bound)
            candidates += _block_size(j, M, residues, task.height_bound)
            j += 1
            for pair in batch:
                found.append(pair)
                if emitted < task.count:
                    yield pair
                    emitted += 1
            if batch or j % checkpoint_every == 0:
                blocks_done(j)
    else:
        chunk = 16
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            pending = []
            next_submit = j
            while emitted < task.count and (pending or next_submit <= last_block):
                while len(pending) < jobs + 2 and next_submit <= last_block:
                    hi = min(next_submit + chunk, last_block + 1)
                    pending.append(
                        (
                            next_submit,
                            hi,
                            pool.submit(
                                _scan_blocks,
                                site, Q, M, residues, strip,
                                next_submit, hi, task.height_bound,
                            ),
                        )
                    )
                    next_submit = hi
                lo, hi, fut = pending.pop(0)
                batch = fut.result()
                for jj in range(lo, hi):
                    candidates += _block_size(jj, M, residues, task.height_bound)
                j = hi
                for pair in batch:
                    found.append(pair)
                    if emitted < task.count:
                        yield pair
                        emitted += 1
                blocks_done(j)

    blocks_done(j)
    if emitted < task.count:
        raise SearchExhausted(
            f"height bound {task.height_bound} exhausted with "
            f"{emitted} of {task.count} pairs",
            {
                "blocks_scanned": j - start_block,
                "candidates": candidates,
                "pairs_found": len(found),
                "height_bound": task.height_bound,
                "modulus": M,
            },
        )


def _block_size(j: int, M: int, residues, height_bound: int) -> int:
    """Number of (A, B) candidates inspected in block j (for statistics)."""
    n = 0
    for A0, B0 in residues:
        B = B0 + j * M
        if B <= 0 or B > height_bound:
            continue
        if A0 <= 0:
            hi = (B - A0) // M  # i with 0 < A0 + i*M < B
            lo = (-A0) // M + 1
        else:
            hi = (B - 1 - A0) // M + 1
            lo = 0
        n += max(0, hi - lo)
    return n


def collect_pairs(task: SearchTask, **kwargs) -> list[FoundPair]:
    """Materialize find_pairs (propagating SearchExhausted)."""
    return list(find_pairs(task, **kwargs))
