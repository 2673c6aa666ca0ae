"""Dense GF(2) linear algebra on int bitsets.

A matrix is a list of rows; each row is a Python int whose bit j is the entry
in column j.  This is compact and fast enough for the tiny systems we solve
(tens of rows/columns).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class F2Matrix:
    rows: list[int]
    cols: int

    def copy(self) -> "F2Matrix":
        return F2Matrix(list(self.rows), self.cols)


def f2_rank(rows: list[int]) -> int:
    """Rank of the span of the given bitset rows."""
    basis: list[int] = []
    for row in rows:
        row = _reduce_row(row, basis)
        if row:
            basis.append(row)
            basis.sort(reverse=True)
    return len(basis)


def _reduce_row(row: int, basis: list[int]) -> int:
    for b in basis:
        if row ^ b < row:  # b's leading bit is set in row
            row ^= b
    return row


def f2_in_span(row: int, basis_rows: list[int]) -> bool:
    """Is row in the GF(2) span of basis_rows?"""
    basis: list[int] = []
    for b in basis_rows:
        b = _reduce_row(b, basis)
        if b:
            basis.append(b)
            basis.sort(reverse=True)
    return _reduce_row(row, basis) == 0


def f2_image_rank(rows: list[int], modulo_rows: list[int] | None = None) -> int:
    """Rank of the rows, optionally in the quotient by span(modulo_rows)."""
    if not modulo_rows:
        return f2_rank(rows)
    base = f2_rank(modulo_rows)
    return f2_rank(rows + modulo_rows) - base


def f2_kernel(rows: list[int], cols: int) -> list[int]:
    """Basis of {x in F_2^cols : for every row r, <r, x> = 0}.

    Vectors are bitsets over the same column indexing as the rows.
    """
    # Gaussian elimination with pivot bookkeeping.
    work = [r for r in rows if r]
    pivots: dict[int, int] = {}  # column -> reduced row with leading bit there
    for row in work:
        for col, prow in pivots.items():
            if row >> col & 1:
                row ^= prow
        if row == 0:
            continue
        lead = row.bit_length() - 1
        for col in list(pivots):
            if pivots[col] >> lead & 1:
                pivots[col] ^= row
        pivots[lead] = row
    free_cols = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free_cols:
        vec = 1 << fc
        for col, prow in pivots.items():
            if prow >> fc & 1:
                vec |= 1 << col
        basis.append(vec)
    return basis


def f2_solve(rows: list[int], cols: int, rhs: list[int]) -> int | None:
    """One solution x of the affine system <row_i, x> = rhs_i, or None.

    rows are bitset equations over cols unknowns; rhs entries are 0/1 bits.
    """
    # Augment with the rhs in an extra column, eliminate, read a solution.
    aug = [r | (b & 1) << cols for r, b in zip(rows, rhs)]
    mask = (1 << cols) - 1
    pivots: dict[int, int] = {}
    for row in aug:
        for col, prow in pivots.items():
            if row >> col & 1:
                row ^= prow
        if row & mask == 0:
            if row:
                return None  # 0 = 1
            continue
        lead = (row & mask).bit_length() - 1
        for col in list(pivots):
            if pivots[col] >> lead & 1:
                pivots[col] ^= row
        pivots[lead] = row
    x = 0
    for col, prow in pivots.items():
        if prow >> cols & 1:
            x |= 1 << col
    return x


def dot_bit(a: int, b: int) -> int:
    """GF(2) inner product of two bitsets."""
    return (a & b).bit_count() & 1
