import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadkf.tensor_kit import commutation_matrix, kron, matricize, reduction_maps, stack, unstack, vec_square

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 5)


def kron_loop(a, b):
    p, q = a.shape
    r, s = b.shape
    out = np.zeros((p * r, q * s))
    for i in range(p):
        for j in range(q):
            for k in range(r):
                for l in range(s):
                    out[i * r + k, j * s + l] = a[i, j] * b[k, l]
    return out


def test_kron_scalar_and_identity():
    assert kron([[1]], [[5]]).tolist() == [[5]]
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))


def test_kron_matches_index_loop():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(kron(a, b), kron_loop(a, b))


@given(seeds, dims, dims, dims, dims)
def test_kron_loop_random(seed, p, q, r, s):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((p, q)), rng.standard_normal((r, s))
    np.testing.assert_allclose(kron(a, b), kron_loop(a, b), rtol=0, atol=0)


def test_kron_rejects_3d():
    with pytest.raises(ValueError):
        kron(np.zeros((2, 2, 2)), np.eye(2))


def test_vec_square_examples():
    assert vec_square([1.0]).tolist() == [1.0]
    assert vec_square([1.0, 2.0]).tolist() == [1.0, 2.0, 2.0, 4.0]
    v = np.array([0.3, -1.2, 2.5])
    expected = [v[i] * v[j] for i in range(3) for j in range(3)]
    np.testing.assert_array_equal(vec_square(v), expected)


def test_stack_is_column_major():
    m = np.array([[1, 2], [3, 4]])
    assert stack(m).tolist() == [1, 3, 2, 4]
    np.testing.assert_array_equal(unstack([1, 3, 2, 4], 2, 2), m)


def test_unstack_dimension_mismatch():
    with pytest.raises(ValueError):
        unstack([1, 2, 3], 2, 2)


@given(seeds, dims, dims)
def test_unstack_inverts_stack(seed, r, c):
    m = np.random.default_rng(seed).standard_normal((r, c))
    np.testing.assert_array_equal(unstack(stack(m), r, c), m)


@given(seeds, dims)
def test_stack_outer_is_vec_square(seed, m):
    dy = np.random.default_rng(seed).standard_normal(m)
    np.testing.assert_allclose(stack(np.outer(dy, dy)), vec_square(dy), rtol=1e-15)


@given(seeds, dims, dims, dims, dims)
def test_vec_identity(seed, p, q, r, s):
    rng = np.random.default_rng(seed)
    a, b, c = rng.standard_normal((p, q)), rng.standard_normal((q, r)), rng.standard_normal((r, s))
    lhs = stack(a @ b @ c)
    rhs = kron(c.T, a) @ stack(b)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(lhs).max())


@given(seeds, dims, dims, dims)
def test_kron_mixed_product(seed, p, q, r):
    rng = np.random.default_rng(seed)
    a, c = rng.standard_normal((p, q)), rng.standard_normal((q, r))
    b, d = rng.standard_normal((r, p)), rng.standard_normal((p, q))
    lhs = kron(a, b) @ kron(c, d)
    rhs = kron(a @ c, b @ d)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.abs(rhs).max())


def test_vec_h2_equals_stack_hph():
    rng = np.random.default_rng(0)
    h = rng.standard_normal((2, 6))
    p = rng.standard_normal((6, 6))
    p = p @ p.T
    np.testing.assert_allclose(kron(h, h) @ stack(p), stack(h @ p @ h.T), rtol=1e-12)


def test_reduction_maps_small():
    r1 = reduction_maps(1)
    assert r1.select.tolist() == [[1.0]] and r1.duplicate.tolist() == [[1.0]]
    r2 = reduction_maps(2)
    assert r2.select.shape == (3, 4) and r2.duplicate.shape == (4, 3)
    np.testing.assert_array_equal(r2.select @ r2.duplicate, np.eye(3))
    assert r2.pairs == ((0, 0), (0, 1), (1, 1))
    assert reduction_maps(3).pairs == ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def test_reduction_maps_rejects_zero():
    with pytest.raises(ValueError):
        reduction_maps(0)


@given(seeds, dims)
def test_duplicate_select_restores_squares(seed, m):
    maps = reduction_maps(m)
    v2 = vec_square(np.random.default_rng(seed).standard_normal(m))
    np.testing.assert_allclose(maps.duplicate @ maps.select @ v2, v2, rtol=1e-15)
    np.testing.assert_allclose(maps.select @ maps.duplicate, np.eye(m * (m + 1) // 2))


@given(seeds, dims)
def test_vec_square_in_symmetric_subspace(seed, m):
    maps = reduction_maps(m)
    v2 = vec_square(np.random.default_rng(seed).standard_normal(m))
    coef, *_ = np.linalg.lstsq(maps.duplicate, v2, rcond=None)
    np.testing.assert_allclose(maps.duplicate @ coef, v2, atol=1e-12 * max(1.0, np.abs(v2).max()))


@given(seeds, dims, dims)
def test_commutation_matrix(seed, p, q):
    a = np.random.default_rng(seed).standard_normal((p, q))
    np.testing.assert_array_equal(commutation_matrix(p, q) @ stack(a), stack(a.T))


def test_matricize_column_major():
    w = np.arange(8.0)
    np.testing.assert_array_equal(matricize(w, 4), w.reshape((4, 2), order="F"))
    with pytest.raises(ValueError):
        matricize(w, 3)
