"""Dense complex matrix helpers and random ensembles.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Nothing here
keeps state; every function returns a fresh array.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, NotHermitianError, NotIsometryError

# input validation vs. constructive postconditions
EPS_HERM = 1e-10
EPS_BUILD = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_cmatrix(m) -> np.ndarray:
    """Coerce to a 2-D complex128 array (vectors become columns)."""
    a = np.array(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    elif a.ndim != 2:
        raise DimensionError(f"expected a matrix, got an array with ndim={a.ndim}")
    if a.size == 0:
        raise DimensionError("matrix must have at least one row and one column")
    return a


def allclose(a, b, eps: float) -> bool:
    """Entrywise comparison with an explicit absolute tolerance."""
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= eps))


def is_hermitian(h, eps: float = EPS_HERM) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and allclose(h, h.conj().T, eps)


def is_unitary(u, eps: float = EPS_HERM) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])) <= eps


def kron(a, b) -> np.ndarray:
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def kron_all(mats: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_cmatrix(m))
    return out


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Subsystem 0 is the most significant (leftmost) tensor factor, the same
    ordering ``kron`` produces.
    """
    m = as_cmatrix(m)
    dims = [int(d) for d in dims]
    n = int(np.prod(dims))
    if m.shape != (n, n):
        raise DimensionError(f"dims {dims} (product {n}) do not match matrix shape {m.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} subsystems")

    nsub = len(dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * nsub > len(letters):
        raise DimensionError("too many subsystems")
    row = list(letters[:nsub])
    col = list(letters[nsub:2 * nsub])
    for s in range(nsub):
        if s not in keep:
            col[s] = row[s]
    out = "".join(row[s] for s in keep) + "".join(col[s] for s in keep)
    t = m.reshape(dims + dims)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[s] for s in keep])) if keep else 1
    return reduced.reshape(dk, dk)


def eigh_hermitian(h, eps: float = EPS_HERM):
    """Eigen-decomposition of a Hermitian matrix (after symmetrising away round-off)."""
    h = as_cmatrix(h)
    if not is_hermitian(h, eps):
        raise NotHermitianError(
            f"matrix is not Hermitian within {eps:g} "
            f"(max |h - h^dag| = {np.max(np.abs(h - h.conj().T)):.3e})"
        )
    return np.linalg.eigh(0.5 * (h + h.conj().T))


def expm_hermitian(h, scale: float) -> np.ndarray:
    """Return ``exp(-i * scale * h)`` for Hermitian ``h``.

    Computed from the eigen-decomposition, so it stays exact (to round-off)
    for arbitrarily large angles.
    """
    w, v = eigh_hermitian(h)
    return (v * np.exp(-1j * scale * w)) @ v.conj().T


def sqrtm_psd(h) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix; tiny negative eigenvalues are clipped."""
    w, v = eigh_hermitian(h)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_unitary(d: int, seed: int | np.random.SeedSequence) -> np.ndarray:
    """Haar-random ``d x d`` unitary.

    QR of a Ginibre matrix with the phases of ``diag(R)`` moved into ``Q``;
    without the phase fix the distribution is not Haar.
    """
    if d < 1:
        raise DimensionError("d must be >= 1")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, d, d))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, seed: int | np.random.SeedSequence) -> np.ndarray:
    """Random full-rank mixed state ``G G^dag / tr(G G^dag)`` with ``G`` Ginibre."""
    if d < 1:
        raise DimensionError("d must be >= 1")
    rng = np.random.default_rng(seed)
    g = _ginibre(rng, d, d)
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def random_hermitian(d: int, seed: int | np.random.SeedSequence, norm: float = 1.0) -> np.ndarray:
    """GUE sample rescaled to spectral norm ``norm``."""
    rng = np.random.default_rng(seed)
    g = _ginibre(rng, d, d)
    h = 0.5 * (g + g.conj().T)
    return h * (norm / np.max(np.abs(np.linalg.eigvalsh(h))))


def complete_to_unitary(iso, seed: int = 0) -> np.ndarray:
    """Extend an isometry (orthonormal columns) to a square unitary.

    The first ``iso.shape[1]`` columns of the result are ``iso`` itself; the
    remaining ones come from a seeded random matrix projected onto the
    orthogonal complement.
    """
    iso = as_cmatrix(iso)
    n, m = iso.shape
    if m > n:
        raise NotIsometryError(f"isometry has more columns ({m}) than rows ({n})")
    gram_err = np.linalg.norm(iso.conj().T @ iso - np.eye(m))
    if gram_err > EPS_HERM:
        raise NotIsometryError(f"columns are not orthonormal (||V^dag V - I||_F = {gram_err:.3e})")
    if m == n:
        return iso.copy()
    rng = np.random.default_rng(seed)
    g = _ginibre(rng, n, n - m)
    # two projection passes: one pass leaves O(eps * cond) leakage into span(iso)
    for _ in range(2):
        g = g - iso @ (iso.conj().T @ g)
    q, _ = np.linalg.qr(g)
    return np.hstack([iso, q])


def frobenius_distance(a, b) -> float:
    a, b = as_cmatrix(a), as_cmatrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def dft_matrix(d: int) -> np.ndarray:
    """Unitary discrete Fourier transform; every entry has modulus ``1/sqrt(d)``."""
    idx = np.arange(d)
    return np.exp(2j * np.pi * np.outer(idx, idx) / d) / np.sqrt(d)


def basis_projector(j: int, d: int) -> np.ndarray:
    p = np.zeros((d, d), dtype=complex)
    p[j, j] = 1.0
    return p
