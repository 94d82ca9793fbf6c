import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from krauscope import matcore
from krauscope.errors import DimensionError, NotHermitianError, NotIsometryError
from krauscope.matcore import SIGMA_X, SIGMA_Z

I2 = np.eye(2)


def _kron_loops(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def _ptrace_loops(m, d_a, d_b, keep):
    """Bipartite partial trace by explicit summation."""
    if keep == 0:
        out = np.zeros((d_a, d_a), dtype=complex)
        for i in range(d_a):
            for j in range(d_a):
                out[i, j] = sum(m[i * d_b + k, j * d_b + k] for k in range(d_b))
    else:
        out = np.zeros((d_b, d_b), dtype=complex)
        for i in range(d_b):
            for j in range(d_b):
                out[i, j] = sum(m[k * d_b + i, k * d_b + j] for k in range(d_a))
    return out


def test_kron_examples():
    assert matcore.allclose(matcore.kron(I2, I2), np.eye(4), 0)
    b = np.array([[1, 2j], [3, 4]])
    assert matcore.allclose(matcore.kron([[1]], b), b, 0)
    expected = np.array([[0, 0, 1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, -1, 0, 0]])
    assert matcore.allclose(matcore.kron(SIGMA_X, SIGMA_Z), expected, 0)


def test_kron_matches_index_formula():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    b = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    assert matcore.allclose(matcore.kron(a, b), _kron_loops(a, b), 1e-15)


def test_kron_associative():
    a, b, c = (matcore.random_unitary(d, s) for d, s in ((2, 1), (3, 2), (2, 3)))
    left = matcore.kron(matcore.kron(a, b), c)
    right = matcore.kron(a, matcore.kron(b, c))
    assert matcore.allclose(left, right, 1e-13)


def test_partial_trace_product_state():
    ra, rb = matcore.random_density(2, 1), matcore.random_density(3, 2)
    m = np.kron(ra, rb)
    assert matcore.allclose(matcore.partial_trace(m, [2, 3], keep=[0]), ra, 1e-12)
    assert matcore.allclose(matcore.partial_trace(m, [2, 3], keep=[1]), rb, 1e-12)


def test_partial_trace_bell_state():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    p = np.outer(bell, bell)
    assert matcore.allclose(matcore.partial_trace(p, [2, 2], keep=[0]), I2 / 2, 1e-15)


def test_partial_trace_keep_all_is_identity():
    rho = matcore.random_density(6, 5)
    assert matcore.allclose(matcore.partial_trace(rho, [2, 3], keep=[0, 1]), rho, 0)


@pytest.mark.parametrize("keep", [0, 1])
def test_partial_trace_matches_loops(keep):
    m = matcore.random_density(12, 9) + 0.3j * matcore.random_unitary(12, 4)
    assert matcore.allclose(matcore.partial_trace(m, [3, 4], keep=[keep]), _ptrace_loops(m, 3, 4, keep), 1e-14)


def test_partial_trace_scaled_factor():
    a = np.array([[2, 1j], [-1j, 3]])
    b = np.array([[1, 0.5], [0.5, 4]])
    m = np.kron(a, b)
    assert matcore.allclose(matcore.partial_trace(m, [2, 2], keep=[0]), np.trace(b) * a, 1e-12)
    assert matcore.allclose(matcore.partial_trace(m, [2, 2], keep=[1]), np.trace(a) * b, 1e-12)


def test_partial_trace_tripartite_middle():
    rs = [matcore.random_density(d, s) for d, s in ((2, 1), (3, 2), (2, 3))]
    m = matcore.kron_all(rs)
    assert matcore.allclose(matcore.partial_trace(m, [2, 3, 2], keep=[1]), rs[1], 1e-12)
    assert matcore.allclose(matcore.partial_trace(m, [2, 3, 2], keep=[0, 2]), np.kron(rs[0], rs[2]), 1e-12)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionError):
        matcore.partial_trace(np.eye(4), [2, 3], keep=[0])


def test_expm_examples():
    assert matcore.allclose(matcore.expm_hermitian(SIGMA_X, np.pi), -I2, 1e-12)
    h = matcore.random_hermitian(3, 0)
    assert matcore.allclose(matcore.expm_hermitian(h, 0.0), np.eye(3), 1e-15)
    got = matcore.expm_hermitian(np.diag([1.0, 2.0]), 0.5)
    assert matcore.allclose(got, np.diag([np.exp(-0.5j), np.exp(-1.0j)]), 1e-15)


@pytest.mark.parametrize("scale", [0.1, 1.0, 7.3, 50.0])
def test_expm_against_scipy(scale):
    h = matcore.random_hermitian(4, 3, norm=2.0)
    ref = scipy.linalg.expm(-1j * scale * h)
    got = matcore.expm_hermitian(h, scale)
    assert matcore.allclose(got, ref, 1e-10)
    assert matcore.is_unitary(got, 1e-10)


def test_expm_group_property():
    h = matcore.random_hermitian(5, 8)
    lhs = matcore.expm_hermitian(h, 0.4) @ matcore.expm_hermitian(h, 1.9)
    assert matcore.allclose(lhs, matcore.expm_hermitian(h, 2.3), 1e-10)


def test_expm_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        matcore.expm_hermitian(np.array([[0, 1], [0, 0]]), 1.0)


def test_random_unitary_properties():
    u1 = matcore.random_unitary(1, 3)
    assert u1.shape == (1, 1) and abs(abs(u1[0, 0]) - 1) < 1e-15
    for seed in range(20):
        u = matcore.random_unitary(5, seed)
        assert np.linalg.norm(u.conj().T @ u - np.eye(5)) <= 1e-12


def test_random_unitary_haar_marginal():
    # |U00|^2 is uniform on [0, 1] for Haar d=2, so its mean is 1/2
    vals = [abs(matcore.random_unitary(2, s)[0, 0]) ** 2 for s in range(10_000)]
    assert abs(np.mean(vals) - 0.5) < 0.02


def test_random_unitary_phase_fix_matters():
    # without the phase fix QR gives real-positive diagonals in R and a biased
    # Q; with it, the phase of U00 is uniform, so its mean is ~0
    phases = [matcore.random_unitary(2, s)[0, 0] for s in range(4000)]
    assert abs(np.mean(phases)) < 0.05


def test_random_ensembles_deterministic():
    assert np.array_equal(matcore.random_unitary(4, 42), matcore.random_unitary(4, 42))
    assert np.array_equal(matcore.random_density(4, 42), matcore.random_density(4, 42))
    assert not np.array_equal(matcore.random_unitary(4, 42), matcore.random_unitary(4, 43))


def test_random_density_properties():
    assert matcore.allclose(matcore.random_density(1, 0), [[1]], 1e-15)
    for seed in range(10):
        rho = matcore.random_density(4, seed)
        assert abs(np.trace(rho) - 1) <= 1e-12
        assert np.linalg.eigvalsh(rho)[0] >= -1e-12
        assert matcore.is_hermitian(rho, 1e-15)
        assert np.all(np.abs(rho) > 0)


def test_complete_to_unitary():
    u = matcore.random_unitary(3, 1)
    assert np.array_equal(matcore.complete_to_unitary(u), u)
    e0 = np.eye(4)[:, :1]
    full = matcore.complete_to_unitary(e0)
    assert matcore.allclose(full[:, :1], e0, 0)
    assert matcore.is_unitary(full, 1e-12)
    for seed in range(20):
        iso = matcore.random_unitary(6, seed)[:, :2]
        full = matcore.complete_to_unitary(iso, seed=seed)
        assert matcore.allclose(full[:, :2], iso, 0)
        assert np.linalg.norm(full.conj().T @ full - np.eye(6)) <= 1e-10


def test_complete_to_unitary_rejects_non_isometry():
    with pytest.raises(NotIsometryError):
        matcore.complete_to_unitary(np.array([[1.0], [1.0]]))


def test_frobenius_distance():
    m = matcore.random_unitary(3, 0)
    assert matcore.frobenius_distance(m, m) == 0
    assert matcore.frobenius_distance(I2, np.zeros((2, 2))) == pytest.approx(np.sqrt(2), abs=1e-15)
    assert matcore.frobenius_distance(SIGMA_X, SIGMA_Z) == pytest.approx(2, abs=1e-15)
    with pytest.raises(DimensionError):
        matcore.frobenius_distance(I2, np.eye(3))


def test_dft_entries_have_equal_modulus():
    f = matcore.dft_matrix(5)
    assert matcore.is_unitary(f, 1e-12)
    assert np.allclose(np.abs(f), 1 / np.sqrt(5))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31), st.floats(-20, 20), st.floats(-20, 20))
def test_expm_additive_in_angle(d, seed, s, t):
    h = matcore.random_hermitian(d, seed)
    lhs = matcore.expm_hermitian(h, s) @ matcore.expm_hermitian(h, t)
    assert matcore.allclose(lhs, matcore.expm_hermitian(h, s + t), 1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_partial_trace_preserves_trace(d_a, d_b, seed):
    rho = matcore.random_density(d_a * d_b, seed)
    for keep in (0, 1):
        red = matcore.partial_trace(rho, [d_a, d_b], keep=[keep])
        assert abs(np.trace(red) - 1) < 1e-12
