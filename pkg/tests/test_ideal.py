import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qml.ideal import (
    GradedIdeal,
    IdealIntersection,
    ideal_intersection_per_degree,
    ideal_power,
    ideal_product,
    j_power,
    j_theta,
    maximal_ideal_power,
    subspace_distance,
)
from qml.jpower import b_union
from qml.poly import (
    EPS_NUM,
    HPoly,
    ThetaDirection,
    r_g,
    random_hpoly,
    shift_matrix,
    space_dim,
    w_basis,
)
from qml.ideal import EPS_RANK, orth


def span_of(polys, n, d):
    return orth(np.column_stack([p.to_vector(n) for p in polys]))


# --- degree components ---------------------------------------------------


def test_j_degree_one_is_span_of_w():
    J = j_power(3, 1)
    comp = J.degree_component(1)
    assert comp.dim == 2
    ws = w_basis(3)[1:]
    assert subspace_distance(comp.columns, span_of(ws, 1, 3)) < 1e-12


def test_below_generator_degree_is_empty():
    I = GradedIdeal(3, [HPoly.monomial((2, 0, 0))])
    assert I.degree_component(1).dim == 0
    assert I.degree_component(0).dim == 0


def test_j_squared_degree_two():
    J2 = j_power(3, 2)
    assert J2.degree_component(2).dim == 3
    assert J2.quotient_component(2).dim == 3


def test_rejects_bad_generators():
    with pytest.raises(ValueError, match="zero"):
        GradedIdeal(3, [HPoly.zero(3)])
    with pytest.raises(ValueError, match="unit"):
        GradedIdeal(3, [HPoly.constant(3)])
    with pytest.raises(ValueError):
        GradedIdeal(3, [HPoly.coordinate(2, 0)])


# --- quotient components -------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_j_quotient_is_one_dimensional(d):
    J = j_power(d, 1)
    assert [q for _, q in J.hilbert_dims(12)] == [1] * 13
    # the surviving direction is sum of all monomials of the degree
    col = J.quotient_component(4).columns[:, 0]
    np.testing.assert_allclose(np.abs(col), 1 / math.sqrt(space_dim(d, 4)), atol=1e-12)


@pytest.mark.parametrize("d,N", [(d, N) for d in range(2, 6) for N in range(1, 5)])
def test_jpower_hilbert_function_stabilizes(d, N):
    D = N + 4
    dims = [q for _, q in j_power(d, N).hilbert_dims(D)]
    target = math.comb(N + d - 2, d - 1)
    assert dims[N - 1 :] == [target] * (D - N + 2)
    # below N-1 nothing of J^N is visible yet except J^N_n = 0
    for n in range(N):
        assert dims[n] == space_dim(d, n)


def test_constants_survive():
    for I in (j_power(3, 2), maximal_ideal_power(4, 1), GradedIdeal(3, [HPoly.monomial((0, 1, 1))])):
        assert I.quotient_component(0).dim == 1


def test_maximal_ideal_power_dims():
    d, N = 3, 3
    dims = [q for _, q in maximal_ideal_power(d, N).hilbert_dims(6)]
    assert dims == [space_dim(d, n) if n < N else 0 for n in range(7)]


@pytest.mark.parametrize("ideal", [j_power(3, 2), j_power(4, 2), GradedIdeal(3, [HPoly.monomial((1, 1, 0))])])
def test_complementarity_unitary(ideal):
    for n in range(7):
        I_n = ideal.degree_component(n).columns
        Q_n = ideal.quotient_component(n).columns
        U = np.hstack([I_n, Q_n])
        assert U.shape[0] == U.shape[1]
        np.testing.assert_allclose(U.conj().T @ U, np.eye(U.shape[1]), atol=EPS_NUM)


@pytest.mark.parametrize("ideal", [j_power(3, 2), GradedIdeal(3, [HPoly.coordinate(3, 0) - HPoly.coordinate(3, 1)])])
def test_graded_containment(ideal):
    d = ideal.dim
    for n in range(6):
        cols = ideal.degree_component(n).columns
        Q = ideal.quotient_component(n + 1).columns
        for i in range(d):
            moved = shift_matrix(d, n, i) @ cols
            assert np.abs(Q.conj().T @ moved).max(initial=0) <= EPS_RANK * 10


def test_recursive_quotient_matches_direct_assembly():
    # quotient from the backward-shift recursion vs orthocomplement of the assembled ideal span
    from qml.ideal import null_space

    for ideal in (j_power(3, 3), GradedIdeal(3, [HPoly.monomial((2, 0, 0)), w_basis(3)[1] ** 2])):
        for n in range(8):
            direct = null_space(ideal._ideal_columns(n).conj().T, atol=EPS_RANK)
            assert subspace_distance(direct, ideal.quotient_component(n).columns) < 1e-9


# --- algebra -------------------------------------------------------------


def test_product_matches_power():
    J = j_power(3, 1)
    JJ = ideal_product(J, J)
    assert JJ.degree_component(2).dim == 3
    assert subspace_distance(JJ.degree_component(3).columns, j_power(3, 2).degree_component(3).columns) < 1e-9


def test_power_one_is_identity():
    J = j_power(3, 1)
    assert ideal_power(J, 1).generators == J.generators
    with pytest.raises(ValueError):
        ideal_power(J, 0)


def test_product_of_two_lines():
    a = j_theta(ThetaDirection.ones(3))
    b = j_theta(ThetaDirection((1, 1, -1)))
    P = ideal_product(a, b)
    assert [q for _, q in P.hilbert_dims(6)][2:] == [2] * 5


def test_product_inside_intersection():
    a = j_theta(ThetaDirection.ones(3))
    b = j_theta(ThetaDirection((1, 1, -1)))
    P = ideal_product(a, b)
    for n in range(1, 6):
        prod = P.degree_component(n).columns
        inter = ideal_intersection_per_degree(a, b, n).columns
        # every product column lies in the intersection
        resid = prod - inter @ (inter.conj().T @ prod)
        assert np.abs(resid).max(initial=0) < 1e-9
        assert prod.shape[1] <= min(a.degree_component(n).dim, b.degree_component(n).dim)


def test_intersection_examples():
    J = j_power(3, 1)
    for n in range(5):
        assert subspace_distance(ideal_intersection_per_degree(J, J, n).columns, J.degree_component(n).columns) < 1e-9
    a = j_theta(ThetaDirection.ones(3))
    b = j_theta(ThetaDirection((1, 1, -1)))
    assert ideal_intersection_per_degree(a, b, 1).dim == 1
    # disjoint supports: (z1) and (z2) intersect in (z1 z2)
    x = GradedIdeal(3, [HPoly.monomial((1, 0, 0))])
    y = GradedIdeal(3, [HPoly.monomial((0, 1, 0))])
    xy = ideal_product(x, y)
    for n in range(4):
        assert subspace_distance(ideal_intersection_per_degree(x, y, n).columns, xy.degree_component(n).columns) < 1e-9


def test_intersection_ideal_quotient_dims():
    a = j_theta(ThetaDirection.ones(3))
    b = j_theta(ThetaDirection((1, 1, -1)))
    I = IdealIntersection([a, b])
    for n in range(6):
        direct = ideal_intersection_per_degree(a, b, n).dim
        assert I.hilbert_dims(n)[-1] == (direct, space_dim(3, n) - direct)


# --- j_theta ------------------------------------------------------------


def test_j_theta_generators_vanish_on_line():
    th = ThetaDirection((1, 1j, -1))
    for g in j_theta(th).generators:
        for t in (0.3, 0.7j):
            assert abs(g(*(x * t for x in th.theta))) < 1e-12


def test_j_theta_d2_example():
    (g,) = j_theta(ThetaDirection((1, -1))).generators
    c = g.terms[(1, 0)]
    assert g.terms[(0, 1)] == pytest.approx(c)


def test_j_theta_rejects_non_unimodular():
    with pytest.raises(ValueError):
        j_theta(ThetaDirection((1, 2, 1)))


@given(st.lists(st.floats(0, 6.28), min_size=3, max_size=3), st.integers(1, 4))
def test_rotation_equivariance(angles, n):
    th = ThetaDirection(tuple(np.exp(1j * np.array(angles))))
    base = j_power(3, 2).degree_component(n).columns
    # rotation by theta^-1 acts diagonally on the monomial basis
    from qml.poly import monomials

    diag = np.array([np.prod([t ** (-int(a)) for t, a in zip(th.theta, al)]) for al in monomials(3, n)])
    rotated = diag[:, None] * base
    assert subspace_distance(rotated, j_power(3, 2, th).degree_component(n).columns) < EPS_NUM


# --- membership ---------------------------------------------------------


def test_membership_examples():
    J2 = j_power(3, 2)
    w2 = w_basis(3)[1]
    ok, _ = J2.membership(w2 * w2)
    assert ok
    ok, resid = J2.membership(w2)
    assert not ok
    assert resid == pytest.approx(w2.norm())


def test_membership_dual_oracle(rng):
    # projection membership vs the r_g criterion over all g in the J_n bases, n < N
    for N in (2, 3):
        ideal = j_power(3, N)
        pieces = b_union(3, N)
        for _ in range(50):
            n = int(rng.integers(0, 6))
            h = random_hpoly(rng, 3, n)
            if rng.random() < 0.5:
                # bias towards members
                gens = [g for g in ideal.generators if g.degree <= n]
                if gens:
                    g = gens[int(rng.integers(len(gens)))]
                    h = g * random_hpoly(rng, 3, n - g.degree)
            member, _ = ideal.membership(h)
            crit = all(
                max((abs(c) for c in r_g(g, h).coefficients), default=0.0) <= 1e-9 * max(1.0, h.norm())
                for _, g in pieces
            )
            assert member == crit


def test_concurrent_cache_is_write_once():
    ideal = j_power(4, 2)
    with ThreadPoolExecutor(4) as pool:
        results = list(pool.map(lambda n: ideal.quotient_component(n).columns, [12, 10, 12, 11, 12]))
    for a, b in zip(results[0::2], results[2::2]):
        assert subspace_distance(a, b) < 1e-12
