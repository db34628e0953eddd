"""Set-partition diagrams and the diagram monoids built from them.

A diagram on ``k`` rows is a set partition of {1..2k}.  Vertices 1..k form the
right column and k+1..2k the left column; row ``i`` holds vertices ``i`` and
``k+i``.  In ``p ∘ q`` the diagram ``q`` sits to the right of ``p``: the right
column of ``p`` is glued to the left column of ``q``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import CapExceeded, DimensionError, InputError
from .young import perm_sign

Block = tuple[int, ...]

ENUMERATION_CAPS = {"partition": 5, "brauer": 6, "symmetric": 7, "uniform": 5, "walled": 6}


@dataclass(frozen=True, order=False)
class Diagram:
    k: int
    blocks: tuple[Block, ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InputError("a diagram needs k >= 1")
        canon = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else 0))
        seen = [v for b in canon for v in b]
        if any(not b for b in canon) or sorted(seen) != list(range(1, 2 * self.k + 1)):
            raise InputError(f"blocks do not partition 1..{2 * self.k}: {self.blocks}")
        object.__setattr__(self, "blocks", canon)

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], k: int | None = None) -> Diagram:
        blocks = [tuple(b) for b in blocks]
        if k is None:
            top = max((v for b in blocks for v in b), default=0)
            if top % 2:
                raise InputError("cannot infer k from an odd vertex count")
            k = top // 2
        return cls(k, tuple(blocks))

    @classmethod
    def identity(cls, k: int) -> Diagram:
        return cls(k, tuple((i, k + i) for i in range(1, k + 1)))

    @classmethod
    def parse(cls, text: str, k: int | None = None) -> Diagram:
        """Parse ``"1,3|2,6|4,5"`` or ``"1,3|2,6|4,5@k=3"``."""
        body = text.strip()
        m = re.fullmatch(r"(.*?)@k=(\d+)", body)
        if m:
            body, tagged = m.group(1), int(m.group(2))
            if k is not None and k != tagged:
                raise InputError(f"k={k} disagrees with tag k={tagged}")
            k = tagged
        blocks = []
        pos = 0
        for chunk in body.split("|"):
            items = chunk.split(",")
            block = []
            for item in items:
                token = item.strip()
                if not token.isdigit():
                    raise InputError(f"bad vertex {token!r} at position {pos}")
                block.append(int(token))
                pos += len(item) + 1
            blocks.append(tuple(block))
        try:
            return cls.from_blocks(blocks, k)
        except InputError as exc:
            raise InputError(f"{exc} (in {text!r})") from None

    def __str__(self) -> str:
        return "|".join(",".join(map(str, b)) for b in self.blocks) + f"@k={self.k}"

    @property
    def body(self) -> str:
        return str(self).split("@")[0]

    def is_left(self, v: int) -> bool:
        return v > self.k

    def row(self, v: int) -> int:
        return v if v <= self.k else v - self.k


# composition ------------------------------------------------------------------

class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def compose(p: Diagram, q: Diagram) -> tuple[Diagram, int]:
    """Return ``(p ∘ q, loops)``.

    Stacked graph on 3k vertices: 0..k-1 is the left column of ``p``, k..2k-1 the
    glued middle and 2k..3k-1 the right column of ``q``.
    """
    if p.k != q.k:
        raise DimensionError(f"cannot compose k={p.k} with k={q.k}")
    k = p.k
    uf = _UnionFind(3 * k)

    def p_node(v: int) -> int:
        return v - k - 1 if v > k else k + v - 1

    def q_node(v: int) -> int:
        return k + (v - k - 1) if v > k else 2 * k + v - 1

    for blocks, node in ((p.blocks, p_node), (q.blocks, q_node)):
        for b in blocks:
            for v in b[1:]:
                uf.union(node(b[0]), node(v))
    groups: dict[int, list[int]] = {}
    for x in range(3 * k):
        groups.setdefault(uf.find(x), []).append(x)
    blocks, loops = [], 0
    for members in groups.values():
        outer = [x for x in members if x < k or x >= 2 * k]
        if not outer:
            loops += 1
            continue
        # outer left column of p -> k+1..2k, outer right column of q -> 1..k
        blocks.append(tuple(x + k + 1 if x < k else x - 2 * k + 1 for x in outer))
    return Diagram(k, tuple(blocks)), loops


def closure_loop_count(p: Diagram) -> int:
    """Components after joining vertex i with k+i for every row."""
    uf = _UnionFind(2 * p.k + 1)
    for b in p.blocks:
        for v in b[1:]:
            uf.union(b[0], v)
    for i in range(1, p.k + 1):
        uf.union(i, p.k + i)
    return len({uf.find(v) for v in range(1, 2 * p.k + 1)})


def partial_transpose_rows(p: Diagram, rows: Iterable[int]) -> Diagram:
    """Swap vertex i with k+i for each selected row."""
    rows = set(rows)
    if not rows <= set(range(1, p.k + 1)):
        raise InputError(f"rows must lie in 1..{p.k}")
    swap = {}
    for i in rows:
        swap[i], swap[p.k + i] = p.k + i, i
    return Diagram(p.k, tuple(tuple(swap.get(v, v) for v in b) for b in p.blocks))


def from_permutation(sigma: Sequence[int]) -> Diagram:
    """Diagram of a permutation in 1-based one-line notation: blocks {i, k+sigma(i)}."""
    sigma = list(sigma)
    k = len(sigma)
    if sorted(sigma) != list(range(1, k + 1)):
        raise InputError(f"{sigma} is not a bijection of 1..{k}")
    return Diagram(k, tuple((i + 1, k + s) for i, s in enumerate(sigma)))


def to_permutation(p: Diagram) -> tuple[int, ...]:
    """Inverse of :func:`from_permutation`; raises if ``p`` is not a permutation."""
    if not is_member(p, Family.symmetric()):
        raise InputError(f"{p} is not a permutation diagram")
    image = {}
    for a, b in p.blocks:
        image[a] = b - p.k
    return tuple(image[i] for i in range(1, p.k + 1))


def cycle_to_oneline(cycles: Sequence[Sequence[int]], k: int) -> tuple[int, ...]:
    """``[(1, 2, 3)]`` with k=3 -> (2, 3, 1)."""
    image = list(range(1, k + 1))
    for cyc in cycles:
        for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
            image[a - 1] = b
    return tuple(image)


def sign(sigma: Sequence[int]) -> int:
    return perm_sign(tuple(s - 1 for s in sigma))


# families ---------------------------------------------------------------------

class Kind(str, Enum):
    SYMMETRIC = "symmetric"
    PARTITION = "partition"
    BRAUER = "brauer"
    WALLED = "walled"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class Family:
    kind: Kind
    wall: tuple[int, int] | None = None

    @classmethod
    def symmetric(cls) -> Family:
        return cls(Kind.SYMMETRIC)

    @classmethod
    def partition(cls) -> Family:
        return cls(Kind.PARTITION)

    @classmethod
    def brauer(cls) -> Family:
        return cls(Kind.BRAUER)

    @classmethod
    def uniform(cls) -> Family:
        return cls(Kind.UNIFORM)

    @classmethod
    def walled(cls, k: int, l: int) -> Family:
        if k < 0 or l < 0:
            raise InputError("wall sizes must be nonnegative")
        return cls(Kind.WALLED, (k, l))

    @classmethod
    def parse(cls, text: str) -> Family:
        """Accepts S, P, B, U and W<k>,<l> (or the long names)."""
        t = text.strip()
        short = {"S": Kind.SYMMETRIC, "P": Kind.PARTITION, "B": Kind.BRAUER, "U": Kind.UNIFORM}
        if t in short:
            return cls(short[t])
        m = re.fullmatch(r"(?:W|walled)\(?(\d+),(\d+)\)?", t)
        if m:
            return cls.walled(int(m.group(1)), int(m.group(2)))
        try:
            kind = Kind(t.lower())
        except ValueError:
            raise InputError(f"unknown family {text!r}") from None
        if kind is Kind.WALLED:
            raise InputError("walled family needs sizes, e.g. W2,2")
        return cls(kind)


def _pair_blocks(p: Diagram) -> bool:
    return all(len(b) == 2 for b in p.blocks)


def is_member(p: Diagram, family: Family) -> bool:
    k = p.k
    if family.kind is Kind.PARTITION:
        return True
    if family.kind is Kind.UNIFORM:
        return all(sum(v > k for v in b) == sum(v <= k for v in b) for b in p.blocks)
    if not _pair_blocks(p):
        return False
    if family.kind is Kind.BRAUER:
        return True
    if family.kind is Kind.SYMMETRIC:
        return all((a <= k) != (b <= k) for a, b in p.blocks)
    kl, kr = family.wall  # type: ignore[misc]
    if kl + kr != k:
        return False
    for a, b in p.blocks:
        above_a, above_b = p.row(a) <= kl, p.row(b) <= kl
        same_column = (a <= k) == (b <= k)
        if same_column and above_a == above_b:
            return False
        if not same_column and above_a != above_b:
            return False
    return True


def _set_partitions(items: list[int]) -> Iterator[list[list[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def _pairings(items: list[int]) -> Iterator[list[tuple[int, int]]]:
    if not items:
        yield []
        return
    a = items[0]
    for j in range(1, len(items)):
        rest = items[1:j] + items[j + 1 :]
        for tail in _pairings(rest):
            yield [(a, items[j])] + tail


def _sort_key(p: Diagram) -> tuple:
    return p.blocks


def enumerate_family(family: Family, k: int, cap: int | None = None) -> list[Diagram]:
    """All diagrams of ``family`` on ``k`` rows, sorted by canonical block tuple."""
    if k < 1:
        raise InputError("k must be >= 1")
    limit = cap if cap is not None else ENUMERATION_CAPS[family.kind.value]
    if k > limit:
        raise CapExceeded(f"{family.kind.value} enumeration capped at k <= {limit}")
    verts = list(range(1, 2 * k + 1))
    kind = family.kind
    if kind is Kind.SYMMETRIC:
        out = [from_permutation(s) for s in itertools.permutations(range(1, k + 1))]
    elif kind is Kind.PARTITION:
        out = [Diagram(k, tuple(map(tuple, part))) for part in _set_partitions(verts)]
    elif kind is Kind.UNIFORM:
        out = [
            d
            for d in (Diagram(k, tuple(map(tuple, part))) for part in _set_partitions(verts))
            if is_member(d, family)
        ]
    else:
        pairs = (Diagram(k, tuple(pr)) for pr in _pairings(verts))
        out = [d for d in pairs if is_member(d, family)]
    return sorted(out, key=_sort_key)


def bell(n: int) -> int:
    """Bell numbers from B_{m+1} = Σ_i C(m,i) B_i."""
    b = [1]
    for m in range(n):
        b.append(sum(comb(m, i) * b[i] for i in range(m + 1)))
    return b[n]


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def uniform_order(k: int) -> int:
    """|U_k| from |U_{m+1}| = Σ_{i=0}^m C(m,i) C(m+1,i) |U_i|."""
    u = [1]
    for m in range(k):
        u.append(sum(comb(m, i) * comb(m + 1, i) * u[i] for i in range(m + 1)))
    return u[k]


def family_order(family: Family, k: int) -> int:
    """Closed-form monoid orders."""
    kind = family.kind
    if kind is Kind.SYMMETRIC:
        return factorial(k)
    if kind is Kind.PARTITION:
        return bell(2 * k)
    if kind is Kind.BRAUER:
        return double_factorial(2 * k - 1)
    if kind is Kind.UNIFORM:
        return uniform_order(k)
    kl, kr = family.wall  # type: ignore[misc]
    return factorial(kl + kr) if kl + kr == k else 0


# algebra ------------------------------------------------------------------------

Coef = Fraction | complex


class DiagramAlgebraElement:
    """Linear combination of diagrams with loop parameter delta.

    With ``delta=None`` the loop count is tracked symbolically: terms are keyed
    by ``(diagram, power)`` and stand for ``delta**power * diagram``.
    """

    __slots__ = ("k", "delta", "terms")

    def __init__(self, k: int, terms: Mapping[tuple[Diagram, int], Coef] | None = None, delta: Fraction | int | None = None):
        self.k = k
        self.delta = None if delta is None else Fraction(delta)
        acc: dict[tuple[Diagram, int], Coef] = {}
        for (diag, power), c in (terms or {}).items():
            if diag.k != k:
                raise DimensionError("all diagrams must share k")
            c = c if isinstance(c, complex) else Fraction(c)
            if self.delta is not None and power:
                c = c * self.delta**power
                power = 0
            key = (diag, power)
            acc[key] = acc.get(key, 0) + c
        self.terms = {key: c for key, c in acc.items() if c != 0}

    @classmethod
    def of(cls, diag: Diagram, coef: Coef = 1, delta: Fraction | int | None = None) -> DiagramAlgebraElement:
        return cls(diag.k, {(diag, 0): coef}, delta)

    def _check(self, other: DiagramAlgebraElement) -> None:
        if self.k != other.k:
            raise DimensionError("k mismatch")
        if self.delta != other.delta:
            raise InputError("incompatible delta")

    def __add__(self, other: DiagramAlgebraElement) -> DiagramAlgebraElement:
        self._check(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            terms[key] = terms.get(key, 0) + c
        return DiagramAlgebraElement(self.k, terms, self.delta)

    def scale(self, c: Coef) -> DiagramAlgebraElement:
        return DiagramAlgebraElement(self.k, {key: v * c for key, v in self.terms.items()}, self.delta)

    def __sub__(self, other: DiagramAlgebraElement) -> DiagramAlgebraElement:
        return self + other.scale(-1)

    def __mul__(self, other: DiagramAlgebraElement) -> DiagramAlgebraElement:
        return multiply(self, other)

    def specialize(self, delta: Fraction | int) -> DiagramAlgebraElement:
        return DiagramAlgebraElement(self.k, self.terms, delta) if self.delta is None else self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiagramAlgebraElement):
            return NotImplemented
        return self.k == other.k and self.delta == other.delta and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.k, self.delta, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        parts = []
        for (diag, power), c in sorted(self.terms.items(), key=lambda t: (t[0][0].blocks, t[0][1])):
            loop = f"δ^{power}·" if power else ""
            parts.append(f"{c}·{loop}[{diag.body}]")
        return " + ".join(parts) or "0"


def multiply(x: DiagramAlgebraElement, y: DiagramAlgebraElement) -> DiagramAlgebraElement:
    x._check(y)
    out: dict[tuple[Diagram, int], Coef] = {}
    for (p, i), a in x.terms.items():
        for (q, j), b in y.terms.items():
            r, loops = compose(p, q)
            key = (r, i + j + loops)
            out[key] = out.get(key, 0) + a * b
    return DiagramAlgebraElement(x.k, out, x.delta)
