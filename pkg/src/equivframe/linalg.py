"""Small exact linear algebra over Expr and Fraction entries."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Sequence

from .expr import Expr

__all__ = ["inverse", "det", "rank_fraction", "rank_expr", "rank_by_minors", "nonzero_minor"]


def inverse(A: Sequence[Sequence[Expr]]) -> tuple[list[list[Expr]], Expr]:
    """Gauss-Jordan inverse of a square Expr matrix; returns (inverse, det)."""
    n = len(A)
    reg = A[0][0].reg
    one, zero = Expr.constant(reg, 1), Expr.constant(reg, 0)
    M = [list(row) + [one if i == j else zero for j in range(n)] for i, row in enumerate(A)]
    d = one
    for c in range(n):
        piv = None
        for r in range(c, n):
            if not M[r][c].is_zero():
                if piv is None or len(str(M[r][c])) < len(str(M[piv][c])):
                    piv = r
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            d = -d
        p = M[c][c]
        d = d * p
        inv_p = p.inv()
        M[c] = [x * inv_p if not x.is_zero() else x for x in M[c]]
        for r in range(n):
            if r != c and not M[r][c].is_zero():
                f = M[r][c]
                M[r] = [a - f * b if not b.is_zero() else a for a, b in zip(M[r], M[c])]
    return [row[n:] for row in M], d


def det(A: Sequence[Sequence[Expr]]) -> Expr:
    n = len(A)
    if n == 0:
        raise ValueError("empty matrix")
    reg = A[0][0].reg
    M = [list(r) for r in A]
    d = Expr.constant(reg, 1)
    for c in range(n):
        piv = next((r for r in range(c, n) if not M[r][c].is_zero()), None)
        if piv is None:
            return Expr.constant(reg, 0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            d = -d
        p = M[c][c]
        d = d * p
        for r in range(c + 1, n):
            if not M[r][c].is_zero():
                f = M[r][c] / p
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return d


def rank_fraction(M: Sequence[Sequence[Fraction]]) -> int:
    rows = [list(r) for r in M if any(r)]
    if not rows:
        return 0
    ncol = len(rows[0])
    rank = 0
    for c in range(ncol):
        piv = next((r for r in range(rank, len(rows)) if rows[r][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][c] != 0:
                f = rows[r][c] / rows[rank][c]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def rank_expr(M: Sequence[Sequence[Expr]]) -> int:
    """Exact rank over the fraction field by fraction-free elimination."""
    rows = [list(r) for r in M]
    if not rows:
        return 0
    ncol = len(rows[0])
    rank = 0
    for c in range(ncol):
        piv = next((r for r in range(rank, len(rows)) if not rows[r][c].is_zero()), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank][c]
        for r in range(len(rows)):
            if r != rank and not rows[r][c].is_zero():
                f = rows[r][c] / p
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def nonzero_minor(M: Sequence[Sequence[Expr]], k: int):
    """Row and column index sets of some k x k minor that is not identically zero."""
    nr, nc = len(M), len(M[0]) if M else 0
    for rs in itertools.combinations(range(nr), k):
        for cs in itertools.combinations(range(nc), k):
            sub = [[M[r][c] for c in cs] for r in rs]
            if not det(sub).is_zero():
                return rs, cs
    return None


def rank_by_minors(M: Sequence[Sequence[Expr]]) -> int:
    """Largest k with a nonvanishing k x k minor (brute force over all minors)."""
    if not M or not M[0]:
        return 0
    for k in range(min(len(M), len(M[0])), 0, -1):
        if nonzero_minor(M, k) is not None:
            return k
    return 0


def specialize_rank(M: Sequence[Sequence[Expr]], trials: int = 3, seed: int = 20240601) -> int:
    """Generic rank by evaluating at random rational points (fixed seed)."""
    syms = set()
    for row in M:
        for e in row:
            syms |= e.free_symbols()
    syms = sorted(syms, key=lambda s: s.sort_key())
    rng = random.Random(seed)
    best = 0
    for _ in range(trials):
        for _attempt in range(20):
            vals = {s: Fraction(rng.randint(-97, 97), rng.randint(1, 29)) for s in syms}
            try:
                num = [[e.evaluate(vals) for e in row] for row in M]
            except ZeroDivisionError:
                continue
            best = max(best, rank_fraction(num))
            break
    return best
