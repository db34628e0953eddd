import itertools
from math import factorial, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclone.cloning import (
    Choi1to2Coeffs,
    assemble_choi_1to2,
    b_from_direction,
    choi_1to2_blocks,
    ellipse_family,
    ellipse_lhs,
    gram,
    lambda_feasibility,
    marginal_report,
    necessary_condition_residual,
    optimal_asymmetric_channel,
    optimal_symmetric_channel,
    overlaps_from_eigvec,
    p_opt,
    q_norm,
    r_matrix,
    reduced_lambda_max,
    region_1to2,
    region_1to2_distance,
    region_membership_N,
    restricted_region_check,
    s_matrix,
    sigma_partial_trace_check,
    sigma_subsets,
    twirl_estimate,
    upper_bound,
)
from qclone.errors import InputError
from qclone.operators import choi_of_map, cptp_check, lambda_max, special_state, top_eigvec


def test_s_matrix_single_term():
    for d in (2, 3):
        assert np.allclose(s_matrix([1.0], d), d * special_state("omega", d))


def test_s_matrix_trace():
    x = np.array([0.2, -0.5, 0.3])
    for d in (2, 3):
        assert np.isclose(np.trace(s_matrix(x, d)), np.abs(x).sum() * d**3)


def test_s_matrix_against_hand_built():
    # Σ_i a_i |Ω><Ω| on (0,i), assembled from explicit basis vectors
    d = 2
    S = np.zeros((8, 8))
    for i, ai in ((1, 0.5), (2, 0.5)):
        for free in range(d):
            for j in range(d):
                for k in range(d):
                    idx = [0, 0, 0]
                    idx[0], idx[i], idx[3 - i] = j, j, free
                    jdx = [0, 0, 0]
                    jdx[0], jdx[i], jdx[3 - i] = k, k, free
                    S[idx[0] * 4 + idx[1] * 2 + idx[2], jdx[0] * 4 + jdx[1] * 2 + jdx[2]] += ai
    assert np.allclose(s_matrix([0.5, 0.5], d), S)
    assert np.isclose(lambda_max(S), 1.5)


def test_r_matrix():
    a = [0.3, 0.7]
    for d in (2, 3):
        R = r_matrix(a, d)
        assert np.allclose(R, s_matrix(a, d) + np.eye(d**3))
        assert np.isclose(lambda_max(R), lambda_max(s_matrix(a, d)) + 1)
    assert np.isclose(lambda_max(r_matrix([1.0], 2)), 3)
    assert lambda_max(r_matrix([1.0], 2, "equatorial")) <= lambda_max(r_matrix([1.0], 2)) + 1e-12
    with pytest.raises(InputError):
        r_matrix([0.5, 0.6], 2)


def test_q_norm_values():
    for N in range(1, 5):
        for d in (2, 3):
            assert np.isclose(q_norm(np.eye(N)[0], d), 1, atol=1e-12)
            assert np.isclose(q_norm(np.full(N, 1 / N), d), (d + N) / (N * (d + 1)), atol=1e-12)


def test_q_norm_positive_on_coordinates():
    for N in (2, 3):
        for d in (2, 3):
            for i in range(N):
                e = np.zeros(N)
                e[i] = 1e-3
                assert q_norm(e, d) > 0
            assert q_norm(np.zeros(N), d) == 0


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 4).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(-3, 3), min_size=n, max_size=n),
            st.lists(st.floats(-3, 3), min_size=n, max_size=n),
            st.lists(st.floats(0, 1), min_size=n, max_size=n),
        )
    ),
    st.sampled_from([2, 3]),
)
def test_q_norm_axioms(data, d):
    x, y, t = map(np.array, data)
    qx = q_norm(x, d, "reduced")
    assert q_norm(x + y, d, "reduced") <= qx + q_norm(y, d, "reduced") + 1e-12
    assert q_norm(t * x, d, "reduced") <= qx + 1e-12
    assert np.isclose(q_norm(-2.5 * x, d, "reduced"), 2.5 * qx, rtol=1e-12, atol=1e-12)


def test_reduced_matches_dense():
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.normal(size=3)
        assert np.isclose(reduced_lambda_max(x, 3), lambda_max(s_matrix(x, 3)), atol=1e-12)


def test_upper_bound():
    assert np.isclose(upper_bound([0.5, 0.5], 2), 5 / 6)
    assert np.isclose(upper_bound([1.0, 0.0], 3), 1)
    rng = np.random.default_rng(1)
    for _ in range(10):
        a = rng.dirichlet(np.ones(3))
        for d in (2, 3):
            lhs = lambda_max(r_matrix(a, d)) / (d + 1)
            rhs = a.sum() / d + (1 - 1 / d) * q_norm(a, d)
            assert abs(lhs - rhs) < 1e-12
            assert np.isclose(upper_bound(a, d), rhs)


def test_b_coefficients():
    for N, d in [(2, 2), (3, 2), (2, 3)]:
        bc = b_from_direction(np.full(N, 1 / N), d)
        assert np.allclose(bc.b, 1 / sqrt(N * (N + d - 1)))
        bc = b_from_direction(np.eye(N)[0], d)
        assert np.isclose(bc.b[0], 1 / sqrt(d)) and np.allclose(bc.b[1:], 0)
        assert bc.degenerate
    rng = np.random.default_rng(2)
    for _ in range(10):
        a = rng.dirichlet(np.ones(3))
        bc = b_from_direction(a, 2)
        assert abs(bc.constraint_residual()) < 1e-10
        assert np.all(bc.overlaps**2 >= 1 / 2 - 1e-12)
        chi = top_eigvec(s_matrix(a, 2))
        assert np.allclose(overlaps_from_eigvec(chi, 3, 2), bc.overlaps**2, atol=1e-9)


def test_gram():
    assert np.array_equal(gram(2, 3), np.array([[3.0, 1.0], [1.0, 3.0]]))


def test_p_opt():
    assert np.isclose(p_opt(2, 2), 2 / 3)
    assert np.isclose(p_opt(3, 2), 5 / 9)
    assert p_opt(1, 4) == 1


def test_symmetric_channel():
    C = optimal_symmetric_channel(2, 2)
    rep = cptp_check(C, 2, 4)
    assert rep.ok and rep.trace_residual < 1e-10
    assert np.allclose(marginal_report(C, 2, 2).p, [2 / 3, 2 / 3], atol=1e-12)


def test_asymmetric_channel():
    for N, d in [(2, 2), (3, 2)]:
        sym = marginal_report(optimal_asymmetric_channel(np.full(N, 1 / N), d), N, d).p
        assert np.allclose(sym, p_opt(N, d), atol=1e-10)
    point = marginal_report(optimal_asymmetric_channel([1.0, 0.0], 3), 2, 3)
    assert np.allclose(point.f, [1, 1 / 3], atol=1e-10)
    a = np.array([0.7, 0.3])
    point = marginal_report(optimal_asymmetric_channel(a, 2), 2, 2)
    assert abs(a @ point.f - upper_bound(a, 2)) < 1e-8


def test_asymmetric_reproduces_three_clone_point():
    point = marginal_report(optimal_asymmetric_channel([0.5, 0.5, 0.0], 2), 3, 2)
    assert np.allclose(point.p, [2 / 3, 2 / 3, 1 / 9], atol=1e-10)


def test_marginal_report_known_channels():
    d = 3
    ident = choi_of_map(lambda X: X, d)
    assert np.allclose(marginal_report(ident, 1, d).p, [1])
    dep = choi_of_map(lambda X: np.trace(X) * np.eye(d) / d, d)
    assert np.allclose(marginal_report(dep, 1, d).p, [0], atol=1e-12)


def test_twirl_fixed_point_and_convergence():
    d = 2
    C = d * special_state("omega", d)
    assert np.allclose(twirl_estimate(C, 1, d, samples=50, seed=3), C, atol=1e-12)
    # a non-covariant channel: amplitude damping style Kraus pair
    g = 0.4
    K0 = np.array([[1, 0], [0, np.sqrt(1 - g)]])
    K1 = np.array([[0, np.sqrt(g)], [0, 0]])
    C = choi_of_map(lambda X: K0 @ X @ K0.T + K1 @ X @ K1.T, d)
    resid = []
    for n in (20, 2000):
        T = twirl_estimate(C, 1, d, samples=n, seed=4)
        resid.append(marginal_report(T, 1, d).residual)
    assert resid[1] < resid[0]
    assert resid[1] < 0.05


def test_region_membership_N():
    m = region_membership_N([1.0, 0.0, 0.0], 2)
    assert m.status == "boundary" and m.inside
    assert region_membership_N([1.0, 1.0], 2).status == "outside"
    m = region_membership_N([p_opt(3, 2)] * 3, 2)
    assert m.status == "boundary"
    assert region_membership_N([0.3, 0.3, 0.3], 2).status == "inside"


def test_necessary_condition():
    assert abs(necessary_condition_residual([2 / 3, 2 / 3], 2, 2)) < 1e-12
    N, d = 3, 2
    assert np.isclose(necessary_condition_residual([0, 0, 0], N, d), N - d * (d - 1) - N**2 / (N + d - 1))


def test_sigma_subsets():
    N = 4
    assert len(sigma_subsets(1, 1, N)) == factorial(N - 1)
    parts = [set(sigma_subsets(a, b, N)) for a in range(1, N + 1) for b in range(1, N + 1)]
    fixed = {s for s in itertools.permutations(range(N + 1)) if s[0] == 0}
    union = set().union(*parts, fixed)
    assert len(union) == factorial(N + 1) == sum(map(len, parts)) + len(fixed)
    for a, b in [(1, 1), (1, 2)]:
        assert sigma_partial_trace_check(a, b, 2, 2).ok
        assert sigma_partial_trace_check(a, b, 3, 2).ok


def test_ellipses():
    fam = ellipse_family(2)
    assert len(fam) == 16 and fam[-1].lam == 2
    assert abs(ellipse_lhs(2 / 3, 2 / 3, 2, 2)) < 1e-12


def test_region_1to2_examples():
    r = region_1to2(2 / 3, 2 / 3, 2)
    assert r.inside and abs(r.margin) < 1e-12 and r.lam == pytest.approx(2)
    for d in (2, 3, 4, 5):
        assert not region_1to2(1, 1, d).inside
        assert region_1to2(1, 0, d).inside and abs(region_1to2(1, 0, d).margin) < 1e-12
        lo = -1 / (d * d - 1)
        # the perfect-clone corner paired with the most negative shrink factor lies outside
        assert not region_1to2(1, lo, d).inside
        assert not region_1to2(lo, lo, d).inside
    with pytest.raises(InputError):
        region_1to2(1.5, 0, 2)


def test_region_1to2_distance_sign():
    assert region_1to2_distance(0.5, 0.5, 2) < 0
    assert region_1to2_distance(1, 1, 2) > 0
    assert 0 < region_1to2_distance(0.6667, 0.6667, 2) < 1e-4


def test_restricted_region():
    assert restricted_region_check(2 / 3, 2 / 3, 2)
    assert restricted_region_check(1, 0, 2)
    assert not restricted_region_check(1, 1, 2)


def test_choi_1to2_depolarizing():
    for d in (2, 3):
        c = Choi1to2Coeffs(0.0, 0.0, 0j, 1 / d**2, 0.0, d)
        assert np.isclose(c.trace_condition(), 1)
        blocks = choi_1to2_blocks(c)
        assert blocks.psd
        C = assemble_choi_1to2(c)
        assert np.allclose(C, np.eye(d**3) / d**2)
        assert np.allclose(marginal_report(C, 2, d).p, 0, atol=1e-12)


def test_choi_1to2_restricted_trace():
    # eps1 = eps2 = 0: trace condition d(alpha + beta) + 2 Re gamma = 1
    c = Choi1to2Coeffs(0.2, 0.15, complex(0.15, 0), 0.0, 0.0, 2)
    assert np.isclose(c.trace_condition(), 2 * 0.35 + 0.3)


def test_choi_1to2_block_spectrum_matches_dense():
    rng = np.random.default_rng(5)
    for d in (2, 3):
        for _ in range(5):
            al, be, e2 = rng.normal(size=3) * 0.1
            ga = complex(*(rng.normal(size=2) * 0.1))
            e1 = (1 - d * (al + be) - 2 * ga.real - d * e2) / d**2
            c = Choi1to2Coeffs(al, be, ga, e1, e2, d)
            dense = np.linalg.eigvalsh(assemble_choi_1to2(c))
            assert np.allclose(np.sort(dense), choi_1to2_blocks(c).spectrum(), atol=1e-10)


def test_lambda_parameterisation_marginals():
    c = Choi1to2Coeffs.from_lambda(0.6, 0.5, 1.5, 0.01, 3)
    assert np.isclose(c.trace_condition(), 1)
    assert np.isclose(c.p1, 0.6) and np.isclose(c.p2, 0.5)
    C = assemble_choi_1to2(c)
    assert np.allclose(marginal_report(C, 2, 3).p, [0.6, 0.5], atol=1e-10)


@pytest.mark.parametrize("d", [2, 3])
def test_closed_form_agrees_with_feasibility_sample(d):
    rng = np.random.default_rng(10 + d)
    lo = -1 / (d * d - 1)
    for p1, p2 in rng.uniform(lo, 1, size=(25, 2)):
        if abs(region_1to2_distance(p1, p2, d)) < 1e-6:
            continue
        assert region_1to2(p1, p2, d).inside == (lambda_feasibility(p1, p2, d)[0] >= 0)
