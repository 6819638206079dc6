import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitctl.exterior import (GradeError, MultiVector, basis_blades, blade, decomposable_norm,
                               hodge_star, inner, scalar, vector, wedge, wedge_all)


def perm_sign(seq):
    """Sign of the permutation sorting ``seq``, via a permutation-matrix determinant."""
    n = len(seq)
    P = np.zeros((n, n))
    for row, col in enumerate(np.argsort(seq)):
        P[row, col] = 1.0
    return int(round(np.linalg.det(P)))


def random_multivector(rng, n, r):
    return MultiVector(n, r, {J: rng.standard_normal() for J in basis_blades(n, r)})


def coeffs(a):
    return np.array(a.components(), dtype=float)


def test_repeated_factor_vanishes():
    assert wedge(blade(3, 1), blade(3, 1)).norm_squared() == 0.0


def test_antisymmetry_of_basis_vectors():
    assert wedge(blade(3, 2), blade(3, 1)).allclose(blade(3, 1, 2) * -1.0)


def test_bilinearity():
    out = wedge(vector([2.0, 3.0, 0.0]), blade(3, 3))
    assert out.allclose(blade(3, 1, 3) * 2.0 + blade(3, 2, 3) * 3.0)


def test_grade_overflow_is_an_error():
    with pytest.raises(GradeError):
        wedge(blade(3, 1, 2), blade(3, 2, 3))


def test_dimension_mismatch_is_an_error():
    with pytest.raises(ValueError):
        wedge(blade(3, 1), blade(4, 2))


@pytest.mark.parametrize("bad", [(2, 1), (1, 1), (0, 2), (1, 4)])
def test_index_tuples_must_be_increasing_and_in_range(bad):
    with pytest.raises(ValueError):
        MultiVector(3, 2, {bad: 1.0})


def test_hodge_star_examples():
    assert hodge_star(blade(3, 1, 2)).allclose(blade(3, 3))
    for n in range(1, 6):
        assert hodge_star(scalar(n)).allclose(blade(n, *range(1, n + 1)))
    # e3 ^ 2e2 = -2 e23 and *e23 = e1 (cyclic permutation)
    assert hodge_star(wedge(blade(3, 3), blade(3, 2) * 2.0)).allclose(blade(3, 1) * -2.0)


@pytest.mark.parametrize("n", range(1, 7))
def test_hodge_star_on_basis_matches_permutation_sign(n):
    for r in range(n + 1):
        for J in basis_blades(n, r):
            Jc = tuple(i for i in range(1, n + 1) if i not in J)
            expected = blade(n, *Jc) * float(perm_sign(J + Jc))
            assert hodge_star(blade(n, *J)).allclose(expected)


@pytest.mark.parametrize("n", range(1, 7))
def test_double_star_sign_law(n):
    for r in range(n + 1):
        for J in basis_blades(n, r):
            e = blade(n, *J)
            assert hodge_star(hodge_star(e)).allclose(e * float((-1) ** (r * (n - r))), atol=0.0)


@pytest.mark.parametrize("n", range(2, 7))
def test_defining_identity_on_basis_pairs(n):
    vol = blade(n, *range(1, n + 1))
    for r in range(n + 1):
        for J, K in itertools.product(basis_blades(n, r), repeat=2):
            lhs = wedge(blade(n, *J), hodge_star(blade(n, *K)))
            assert lhs.allclose(vol * (1.0 if J == K else 0.0), atol=0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.data(), st.integers(0, 2**32 - 1))
def test_wedge_associative(n, data, seed):
    rng = np.random.default_rng(seed)
    r = data.draw(st.integers(0, n))
    s = data.draw(st.integers(0, n - r))
    t = data.draw(st.integers(0, n - r - s))
    a, b, c = (random_multivector(rng, n, g) for g in (r, s, t))
    left, right = wedge(wedge(a, b), c), wedge(a, wedge(b, c))
    scale = max(1.0, np.abs(coeffs(left)).max())
    assert np.allclose(coeffs(left), coeffs(right), rtol=0.0, atol=1e-12 * scale)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.data(), st.integers(0, 2**32 - 1))
def test_wedge_graded_anticommutative(n, data, seed):
    rng = np.random.default_rng(seed)
    r = data.draw(st.integers(0, n))
    s = data.draw(st.integers(0, n - r))
    a, b = random_multivector(rng, n, r), random_multivector(rng, n, s)
    ab, ba = wedge(a, b), wedge(b, a)
    assert ab.grade == ba.grade == r + s
    np.testing.assert_allclose(coeffs(ab), (-1) ** (r * s) * coeffs(ba), rtol=0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.data(), st.integers(0, 2**32 - 1))
def test_star_pairing_is_inner_product(n, data, seed):
    rng = np.random.default_rng(seed)
    r = data.draw(st.integers(0, n))
    a, b = random_multivector(rng, n, r), random_multivector(rng, n, r)
    top = wedge(a, hodge_star(b))
    assert top.grade == n
    assert abs(top[tuple(range(1, n + 1))] - coeffs(a) @ coeffs(b)) <= 1e-12 * max(1.0, len(coeffs(a)))
    assert abs(inner(a, b) - coeffs(a) @ coeffs(b)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.data(), st.integers(0, 2**32 - 1))
def test_wedge_of_vectors_has_minor_coefficients(n, data, seed):
    rng = np.random.default_rng(seed)
    r = data.draw(st.integers(1, n))
    vs = rng.standard_normal((r, n))
    w = wedge_all(vs.tolist(), n)
    for J in basis_blades(n, r):
        minor = np.linalg.det(vs[:, [j - 1 for j in J]])
        assert abs(w[J] - minor) <= 1e-12 * max(1.0, abs(minor))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.data(), st.integers(0, 2**32 - 1))
def test_gram_norm_identity(n, data, seed):
    rng = np.random.default_rng(seed)
    r = data.draw(st.integers(1, n))
    vs = rng.standard_normal((r, n)).tolist()
    lhs = decomposable_norm(vs) ** 2
    rhs = wedge_all(vs, n).norm_squared()
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, rhs)


def test_decomposable_norm_examples():
    assert decomposable_norm([[1, 0, 0], [0, 1, 0]]) == pytest.approx(1.0, abs=1e-15)
    # Gram matrix diag(4, 1)
    assert decomposable_norm([[2, 0, 0], [0, 0, 1]]) == pytest.approx(2.0, abs=1e-15)
    v = [0.3, -1.2, 2.5]
    assert decomposable_norm([v, [2 * x for x in v]]) == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(ValueError):
        decomposable_norm([])


def test_orientation_flip_negates_star():
    a = wedge(vector([1.0, 2.0, 0.5]), vector([0.0, -1.0, 3.0]))
    assert hodge_star(a, orientation=-1).allclose(hodge_star(a) * -1.0)


def test_prune_eps_drops_tiny_coefficients():
    mv = MultiVector(3, 1, {(1,): 1e-20, (2,): 1.0}, prune_eps=1e-15)
    assert (1,) not in mv.coefficients
    assert mv[(2,)] == 1.0
