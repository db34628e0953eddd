"""Partitions, Young tableaux and the symmetric group algebra.

Permutations are 0-based one-line tuples: ``sigma[i]`` is the image of ``i``.
Products compose right to left, ``(sigma * tau)(i) = sigma(tau(i))``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Iterator, Mapping

from .errors import CapExceeded, InputError

Partition = tuple[int, ...]
Perm = tuple[int, ...]

SYMMETRIZER_CAP = 8
SSYT_CAP_N = 12
SSYT_CAP_D = 6


def as_partition(parts: Iterable[int]) -> Partition:
    """Validate and return ``parts`` as a partition tuple."""
    lam = tuple(int(p) for p in parts)
    if any(p < 1 for p in lam):
        raise InputError(f"partition parts must be positive: {lam}")
    if any(lam[i] < lam[i + 1] for i in range(len(lam) - 1)):
        raise InputError(f"partition parts must be weakly decreasing: {lam}")
    return lam


def partitions(n: int) -> list[Partition]:
    """All partitions of ``n`` in reverse-lexicographic order, e.g. (3), (2,1), (1,1,1)."""
    if n < 0:
        raise InputError("n must be nonnegative")

    def gen(rest: int, bound: int) -> Iterator[Partition]:
        if rest == 0:
            yield ()
            return
        for first in range(min(rest, bound), 0, -1):
            for tail in gen(rest - first, first):
                yield (first,) + tail

    return list(gen(n, n))


def conjugate(lam: Partition) -> Partition:
    lam = as_partition(lam)
    if not lam:
        return ()
    return tuple(sum(1 for part in lam if part >= i) for i in range(1, lam[0] + 1))


def content(lam: Partition) -> int:
    """Sum of (column - row) over all boxes, 0-indexed."""
    lam = as_partition(lam)
    return sum(j - i for i, row in enumerate(lam) for j in range(row))


def odd_row_count(mu: Partition) -> int:
    return sum(1 for part in as_partition(mu) if part % 2)


def _corners_removed(lam: Partition) -> Iterator[Partition]:
    for i, part in enumerate(lam):
        below = lam[i + 1] if i + 1 < len(lam) else 0
        if part > below:
            child = list(lam)
            child[i] -= 1
            if child[i] == 0:
                child.pop()
            yield tuple(child)


@lru_cache(maxsize=None)
def _syt(lam: Partition) -> int:
    if not lam:
        return 1
    return sum(_syt(mu) for mu in _corners_removed(lam))


def syt_count(lam: Partition) -> int:
    """Number of standard Young tableaux, via removal of one corner box."""
    return _syt(as_partition(lam))


def standard_tableaux(lam: Partition) -> list[tuple[tuple[int, ...], ...]]:
    """Explicit standard tableaux with entries 1..n (rows of the tableau)."""
    lam = as_partition(lam)
    n = sum(lam)
    found = []
    rows: list[list[int]] = [[] for _ in lam]

    def place(value: int) -> None:
        if value > n:
            found.append(tuple(tuple(r) for r in rows))
            return
        for i, row in enumerate(rows):
            if len(row) < lam[i] and (i == 0 or len(rows[i - 1]) > len(row)):
                row.append(value)
                place(value + 1)
                row.pop()

    place(1)
    return found


def ssyt_count(lam: Partition, d: int) -> int:
    """Number of semistandard tableaux of shape ``lam`` with entries in 1..d.

    Counted by backtracking over boxes in row-major order.
    """
    lam = as_partition(lam)
    if d < 1:
        raise InputError("d must be positive")
    n = sum(lam)
    if n > SSYT_CAP_N or d > SSYT_CAP_D:
        raise CapExceeded(f"ssyt enumeration capped at n <= {SSYT_CAP_N}, d <= {SSYT_CAP_D}")
    if lam and len(lam) > d:
        return 0
    boxes = [(i, j) for i, row in enumerate(lam) for j in range(row)]
    grid: dict[tuple[int, int], int] = {}

    def fill(idx: int) -> int:
        if idx == len(boxes):
            return 1
        i, j = boxes[idx]
        low = 1
        if j > 0:
            low = max(low, grid[(i, j - 1)])
        if i > 0:
            low = max(low, grid[(i - 1, j)] + 1)
        total = 0
        for value in range(low, d + 1):
            grid[(i, j)] = value
            total += fill(idx + 1)
        grid.pop((i, j), None)
        return total

    return fill(0)


def irr_symmetric(N: int, d: int) -> list[Partition]:
    """Labels of the symmetric-group irreps appearing in (C^d)^{⊗N}: at most d rows."""
    if d < 1:
        raise InputError("d must be positive")
    return [lam for lam in partitions(N) if len(lam) <= d]


@dataclass(frozen=True)
class IrrepLabelBrauer:
    lam: Partition
    k: int

    def __post_init__(self) -> None:
        as_partition(self.lam)
        if self.k < 0:
            raise InputError("k must be nonnegative")

    @property
    def n(self) -> int:
        return sum(self.lam) + 2 * self.k


def irr_brauer(N: int, d: int) -> list[IrrepLabelBrauer]:
    """Labels (lam, k) with lam ⊢ N-2k whose first two columns hold at most d boxes."""
    if N < 0 or d < 1:
        raise InputError("need N >= 0 and d >= 1")
    out = []
    for k in range(N // 2 + 1):
        for lam in partitions(N - 2 * k):
            cols = conjugate(lam) + (0, 0)
            if cols[0] + cols[1] <= d:
                out.append(IrrepLabelBrauer(lam, k))
    return out


# symmetric group algebra -----------------------------------------------------

def compose_perm(sigma: Perm, tau: Perm) -> Perm:
    return tuple(sigma[t] for t in tau)


def inverse_perm(sigma: Perm) -> Perm:
    inv = [0] * len(sigma)
    for i, s in enumerate(sigma):
        inv[s] = i
    return tuple(inv)


def perm_sign(sigma: Perm) -> int:
    seen = [False] * len(sigma)
    sign = 1
    for start in range(len(sigma)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = sigma[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


class SymAlgebraElement:
    """Exact rational combination of permutations of {0..n-1}."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Perm, Fraction | int] | None = None):
        self.n = n
        clean: dict[Perm, Fraction] = {}
        for perm, coef in (terms or {}).items():
            perm = tuple(perm)
            if sorted(perm) != list(range(n)):
                raise InputError(f"{perm} is not a permutation of {n} points")
            coef = Fraction(coef)
            if coef:
                clean[perm] = clean.get(perm, Fraction(0)) + coef
        self.terms = {p: c for p, c in clean.items() if c}

    @classmethod
    def identity(cls, n: int) -> SymAlgebraElement:
        return cls(n, {tuple(range(n)): 1})

    def _check(self, other: SymAlgebraElement) -> None:
        if self.n != other.n:
            raise InputError("degree mismatch")

    def __add__(self, other: SymAlgebraElement) -> SymAlgebraElement:
        self._check(other)
        terms = dict(self.terms)
        for p, c in other.terms.items():
            terms[p] = terms.get(p, Fraction(0)) + c
        return SymAlgebraElement(self.n, terms)

    def __sub__(self, other: SymAlgebraElement) -> SymAlgebraElement:
        return self + other.scale(-1)

    def scale(self, c: Fraction | int) -> SymAlgebraElement:
        return SymAlgebraElement(self.n, {p: v * c for p, v in self.terms.items()})

    def __mul__(self, other: SymAlgebraElement) -> SymAlgebraElement:
        self._check(other)
        out: dict[Perm, Fraction] = {}
        for p, a in self.terms.items():
            for q, b in other.terms.items():
                r = compose_perm(p, q)
                out[r] = out.get(r, Fraction(0)) + a * b
        return SymAlgebraElement(self.n, out)

    def conjugated(self, sigma: Perm) -> SymAlgebraElement:
        """sigma * self * sigma^-1"""
        inv = inverse_perm(sigma)
        return SymAlgebraElement(
            self.n, {compose_perm(compose_perm(sigma, p), inv): c for p, c in self.terms.items()}
        )

    def coefficient(self, perm: Perm) -> Fraction:
        return self.terms.get(tuple(perm), Fraction(0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymAlgebraElement):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self) -> str:
        return f"SymAlgebraElement(n={self.n}, terms={len(self.terms)})"


def _check_cap(n: int) -> None:
    if n > SYMMETRIZER_CAP:
        raise CapExceeded(f"symmetric group algebra capped at n <= {SYMMETRIZER_CAP}")


def canonical_tableau(lam: Partition) -> tuple[tuple[int, ...], ...]:
    """Row-major consecutive filling with 0-based entries."""
    rows, start = [], 0
    for part in lam:
        rows.append(tuple(range(start, start + part)))
        start += part
    return tuple(rows)


def _group_of_blocks(blocks: Iterable[tuple[int, ...]], n: int, signed: bool) -> SymAlgebraElement:
    blocks = [b for b in blocks if len(b) > 1]
    terms: dict[Perm, int] = {}
    for images in itertools.product(*(itertools.permutations(b) for b in blocks)):
        perm = list(range(n))
        for block, image in zip(blocks, images):
            for src, dst in zip(block, image):
                perm[src] = dst
        perm_t = tuple(perm)
        terms[perm_t] = perm_sign(perm_t) if signed else 1
    if not terms:
        terms[tuple(range(n))] = 1
    return SymAlgebraElement(n, terms)


def young_symmetrizer(lam: Partition) -> SymAlgebraElement:
    """s_T = r_T c_T for the canonical tableau of shape ``lam``."""
    lam = as_partition(lam)
    n = sum(lam)
    _check_cap(n)
    rows = canonical_tableau(lam)
    cols = [tuple(row[j] for row in rows if j < len(row)) for j in range(lam[0])] if lam else []
    r = _group_of_blocks(rows, n, signed=False)
    c = _group_of_blocks(cols, n, signed=True)
    return r * c


def isotypic_projector(lam: Partition) -> SymAlgebraElement:
    """Central idempotent of C[S_n] for the irrep ``lam``.

    Summing s_T over all n! tableaux T (entries without repetition) equals the
    sum of sigma s sigma^-1 over S_n.  That sum acts on the lam-isotypic block
    as (n!/f)^2, so the projector carries the factor (f/n!)^2.
    """
    lam = as_partition(lam)
    n = sum(lam)
    _check_cap(n)
    s = young_symmetrizer(lam)
    acc: dict[Perm, Fraction] = {}
    for sigma in itertools.permutations(range(n)):
        for p, c in s.conjugated(sigma).terms.items():
            acc[p] = acc.get(p, Fraction(0)) + c
    scale = Fraction(syt_count(lam), factorial(n)) ** 2
    return SymAlgebraElement(n, {p: c * scale for p, c in acc.items()})
