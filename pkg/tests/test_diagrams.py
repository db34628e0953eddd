from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclone.diagrams import (
    Diagram,
    DiagramAlgebraElement,
    Family,
    bell,
    closure_loop_count,
    compose,
    cycle_to_oneline,
    double_factorial,
    enumerate_family,
    family_order,
    from_permutation,
    is_member,
    multiply,
    partial_transpose_rows,
    sign,
    to_permutation,
    uniform_order,
)
from qclone.errors import CapExceeded, DimensionError, InputError

P = Diagram.parse


def test_compose_small_example():
    r, loops = compose(P("1,3|2,6|4,5"), P("1,2|3,5|4,6"))
    assert str(r) == "1,2|3,6|4,5@k=3"
    assert loops == 1


def test_compose_p5_example():
    r, loops = compose(P("1,4|2,8|3,5|6,7|9,10"), P("1,2|3,5|4,7|6,9|8,10"))
    assert r.body == "1,2|3,5|4,8|6,7|9,10"
    assert loops == 2


def test_compose_identity():
    p = P("1,3|2,6|4,5")
    assert compose(Diagram.identity(3), p) == (p, 0)
    assert compose(p, Diagram.identity(3)) == (p, 0)


def test_compose_mismatched_k():
    with pytest.raises(DimensionError):
        compose(Diagram.identity(2), Diagram.identity(3))


def test_permutation_composition():
    s = from_permutation(cycle_to_oneline([(1, 2, 3)], 3))
    t = from_permutation(cycle_to_oneline([(1, 2)], 3))
    r, loops = compose(s, t)
    assert loops == 0
    assert r == from_permutation(cycle_to_oneline([(1, 3)], 3))


def test_from_permutation_convention():
    assert str(from_permutation(cycle_to_oneline([(1, 2, 3)], 3))) == "1,5|2,6|3,4@k=3"
    assert from_permutation([1, 2, 3]) == Diagram.identity(3)
    assert to_permutation(P("1,5|2,6|3,4")) == (2, 3, 1)
    assert sign((2, 1)) == -1


def test_cup_cap_squares_to_delta():
    D = P("1,2|3,4")
    assert compose(D, D) == (D, 1)
    x = DiagramAlgebraElement.of(D, delta=3)
    assert x * x == x.scale(3)


def test_algebra_symbolic_delta():
    D = P("1,2|3,4")
    x = DiagramAlgebraElement.of(D)
    sq = multiply(x, x)
    assert sq.terms == {(D, 1): Fraction(1)}
    assert sq.specialize(2) == DiagramAlgebraElement.of(D, 2, delta=2)


def test_membership_examples():
    U = Family.uniform()
    assert is_member(P("1,2,4,5|3,6"), U)
    assert not is_member(P("1,2|3,6|4,5"), U)
    q = P("1,3|2,7|4,9|5,10|6,12|8,11")
    assert is_member(q, Family.brauer())
    assert not is_member(q, Family.walled(3, 3))


def test_partial_transpose_rows():
    p = P("1,4|2,7|3,9|5,10|6,12|8,11")
    r = partial_transpose_rows(p, [1])
    assert r.body == "1,2|3,9|4,7|5,10|6,12|8,11"
    assert partial_transpose_rows(r, [1]) == p
    # a through-strand in the transposed row maps onto itself
    assert partial_transpose_rows(Diagram.identity(2), [1]) == Diagram.identity(2)
    assert partial_transpose_rows(from_permutation([2, 1]), [1]).body == "1,2|3,4"


def test_closure_loops():
    assert closure_loop_count(P("1,2,4,5|3,6")) == 2
    assert closure_loop_count(Diagram.identity(4)) == 4
    assert closure_loop_count(from_permutation([2, 1])) == 1


@pytest.mark.parametrize(
    "family,k,expected",
    [
        (Family.partition(), 2, 15),
        (Family.partition(), 3, 203),
        (Family.brauer(), 3, 15),
        (Family.brauer(), 4, 105),
        (Family.symmetric(), 1, 1),
        (Family.symmetric(), 4, 24),
        (Family.uniform(), 3, 16),
        (Family.uniform(), 4, 131),
        (Family.walled(2, 2), 4, 24),
    ],
)
def test_enumeration_orders(family, k, expected):
    diagrams = enumerate_family(family, k)
    assert len(diagrams) == expected == family_order(family, k)
    assert len(set(diagrams)) == expected
    assert all(is_member(d, family) for d in diagrams)


def test_sequences():
    assert [bell(n) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]
    assert [double_factorial(2 * k - 1) for k in range(1, 6)] == [1, 3, 15, 105, 945]
    assert [uniform_order(k) for k in range(6)] == [1, 1, 3, 16, 131, 1496]


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        enumerate_family(Family.partition(), 6)


def test_parse_roundtrip_and_errors():
    p = P("3,6|1,2|4,5@k=3")
    assert str(p) == "1,2|3,6|4,5@k=3"
    assert P(str(p)) == p
    with pytest.raises(InputError, match="position"):
        P("1,3|2,x|4,5")
    with pytest.raises(InputError):
        P("1,2|2,3@k=2")
    with pytest.raises(InputError):
        Family.parse("Q")
    assert Family.parse("W2,2") == Family.walled(2, 2)


diagram_st = st.sampled_from(enumerate_family(Family.partition(), 3))


@settings(max_examples=60)
@given(diagram_st, diagram_st, diagram_st)
def test_compose_associative_with_loops(a, b, c):
    ab, l1 = compose(a, b)
    abc, l2 = compose(ab, c)
    bc, l3 = compose(b, c)
    abc2, l4 = compose(a, bc)
    assert abc == abc2
    assert l1 + l2 == l3 + l4


@settings(max_examples=40)
@given(diagram_st, diagram_st)
def test_family_closed_under_composition(a, b):
    for fam in (Family.brauer(), Family.uniform(), Family.symmetric()):
        if is_member(a, fam) and is_member(b, fam):
            assert is_member(compose(a, b)[0], fam)
