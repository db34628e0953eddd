"""Frozen reference values used by ``selftest`` and the test-suite."""
from __future__ import annotations

from fractions import Fraction

F = Fraction

# p(N, d) for d = 2..9 (rows) and N = 2..9 (columns)
P_TABLE_ROWS: dict[int, tuple[Fraction, ...]] = {
    2: (F(1), F(1, 3), F(1, 3), F(1, 5), F(1, 5), F(1, 7), F(1, 7), F(1, 9)),
    3: (F(1), F(7, 19), F(1, 3), F(7, 31), F(1, 5), F(7, 43), F(1, 7), F(1, 8)),
    4: (F(1), F(1, 3), F(1, 3), F(1, 5), F(1, 5), F(1, 7), F(1, 7), F(1, 9)),
    5: (F(1), F(1, 3), F(1, 3), F(11, 51), F(1, 5), F(11, 71), F(1, 7), F(11, 91)),
    6: (F(1), F(1, 3), F(1, 3), F(1, 5), F(1, 5), F(1, 7), F(1, 7), F(1, 9)),
    7: (F(1), F(1, 3), F(1, 3), F(1, 5), F(1, 5), F(5, 33), F(1, 7), F(15, 127)),
    8: (F(1), F(1, 3), F(1, 3), F(1, 5), F(1, 5), F(1, 7), F(1, 7), F(1, 9)),
    9: (F(1), F(1, 3), F(1, 3), F(1, 5), F(1, 5), F(1, 7), F(1, 7), F(19, 163)),
}


def p_table_reference() -> dict[tuple[int, int], Fraction]:
    return {(N, d): row[N - 2] for d, row in P_TABLE_ROWS.items() for N in range(2, 10)}


PRIMAL_DUAL_CELLS = ((3, 2), (4, 2), (5, 2), (3, 3), (4, 3), (5, 3), (3, 4), (2, 5))
