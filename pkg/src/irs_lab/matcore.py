"""Dense complex linear-algebra kernels.

All kernels take and return plain ``numpy`` arrays (``complex128``) and are
pure functions. Rank and pseudo-inverse decisions use singular values
relative to the largest one, so they are unaffected by the absolute power
scale of a channel.
"""

from typing import NamedTuple

import numpy as np

from .exceptions import NotHermitianError, NotPositiveDefiniteError
from .validation import as_cmatrix, as_square, check_rel_tol

HERMITIAN_TOL = 1e-10
PD_TOL = 1e-12
DEGENERACY_TOL = 1e-10


class EigenPair(NamedTuple):
    """An eigenvalue together with a unit-norm eigenvector."""

    value: float
    vector: np.ndarray


def hermitize(A, tol=HERMITIAN_TOL, name="A"):
    """Return ``(A + A^H) / 2`` after checking ``A`` is Hermitian within ``tol``."""
    A = as_square(A, name)
    scale = np.linalg.norm(A)
    if scale > 0 and np.linalg.norm(A - A.conj().T) > tol * scale:
        raise NotHermitianError(
            f"{name} is not Hermitian: relative asymmetry "
            f"{np.linalg.norm(A - A.conj().T) / scale:.3e} > {tol:.0e}")
    return 0.5 * (A + A.conj().T)


def fix_phase(v):
    """Rotate ``v`` so its first nonzero component is real and positive."""
    v = np.asarray(v, dtype=np.complex128)
    nz = np.flatnonzero(np.abs(v) > 1e-12 * max(np.max(np.abs(v)), 1e-300))
    if nz.size == 0:
        return v
    first = v[nz[0]]
    return v * (np.abs(first) / first)


def _canonical_top(w, Q, count):
    # w ascending with orthonormal eigenvector columns Q (as from eigh).
    n = w.size
    scale = np.max(np.abs(w))
    out = []
    hi = n
    while len(out) < count and hi > 0:
        lo = hi - 1
        while lo > 0 and abs(w[lo - 1] - w[hi - 1]) <= DEGENERACY_TOL * scale:
            lo -= 1
        basis = Q[:, lo:hi]
        if basis.shape[1] == 1:
            out.append(fix_phase(basis[:, 0]))
        else:
            # degenerate eigenspace: take e_1, e_2, ... projected onto it, so
            # the first pick maximizes |first component|
            projector = basis @ basis.conj().T
            for i in range(n):
                if len(out) >= count or np.real(np.trace(projector)) < 0.5:
                    break
                p = projector[:, i]
                norm = np.linalg.norm(p)
                if norm > 1e-6:
                    vec = fix_phase(p / norm)
                    out.append(vec)
                    projector = projector - np.outer(vec, vec.conj())
        hi = lo
    return out[:count]


def hermitian_top_eigvecs(A, count=1):
    """Top ``count`` eigenpairs of a Hermitian matrix, largest first."""
    A = hermitize(A)
    w, Q = np.linalg.eigh(A)
    vecs = _canonical_top(w, Q, count)
    values = [float(np.real(v.conj() @ A @ v)) for v in vecs]
    return [EigenPair(val, vec) for val, vec in zip(values, vecs)]


def hermitian_top_eigpair(A):
    """Largest eigenvalue of a Hermitian matrix and its unit eigenvector.

    ``A`` is symmetrized after checking its relative asymmetry is at most
    1e-10. The returned vector has its first nonzero entry real and
    positive; a degenerate top eigenvalue is resolved by taking the unit
    vector of the eigenspace with the largest first component.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Hermitian matrix.

    Returns
    -------
    EigenPair
    """
    return hermitian_top_eigvecs(A, 1)[0]


def matrix_inv_sqrt(D, pd_tol=PD_TOL):
    """Hermitian ``S`` with ``S^H D S = I`` for a positive-definite ``D``.

    Computed from the eigendecomposition ``D = Q F Q^H`` as
    ``S = Q F^{-1/2} Q^H``.
    """
    D = hermitize(D, name="D")
    f, Q = np.linalg.eigh(D)
    scale = np.linalg.norm(D)
    if scale == 0 or f[0] <= pd_tol * scale:
        raise NotPositiveDefiniteError(
            f"D is not positive definite: smallest eigenvalue {f[0]:.3e}, "
            f"threshold {pd_tol * scale:.3e}")
    return (Q * (1.0 / np.sqrt(f))) @ Q.conj().T


def generalized_top_eigvecs(A, D, count=1, pd_tol=PD_TOL):
    """Top ``count`` maximizers of ``(x^H A x) / (x^H D x)``, unit-normalized."""
    A = hermitize(A, name="A")
    S = matrix_inv_sqrt(D, pd_tol=pd_tol)
    whitened = S.conj().T @ A @ S
    pairs = hermitian_top_eigvecs(0.5 * (whitened + whitened.conj().T), count)
    D = hermitize(D, name="D")
    out = []
    for pair in pairs:
        x = S @ pair.vector
        x = fix_phase(x / np.linalg.norm(x))
        value = float(np.real(x.conj() @ A @ x) / np.real(x.conj() @ D @ x))
        out.append(EigenPair(value, x))
    return out


def generalized_top_eigvec(A, D, pd_tol=PD_TOL):
    """Unit vector maximizing the generalized Rayleigh quotient.

    Solves ``max_x (x^H A x) / (x^H D x)`` as ``D^{-1/2}`` times the top
    eigenvector of ``D^{-1/2,H} A D^{-1/2}``, renormalized to unit norm.
    ``EigenPair.value`` is the attained quotient.

    Raises
    ------
    NotPositiveDefiniteError
        If the smallest eigenvalue of ``D`` is not above ``pd_tol * ||D||_F``.
    """
    return generalized_top_eigvecs(A, D, 1, pd_tol=pd_tol)[0]


def pinv(A, rel_tol=1e-12):
    """Moore-Penrose pseudo-inverse with singular values below
    ``rel_tol * sigma_max`` treated as zero."""
    A = as_cmatrix(A)
    rel_tol = check_rel_tol(rel_tol)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((A.shape[1], A.shape[0]), dtype=np.complex128)
    keep = s > rel_tol * s[0]
    return (Vh[keep].conj().T / s[keep]) @ U[:, keep].conj().T


def numerical_rank(A, rel_tol=1e-10):
    """Number of singular values above ``rel_tol * sigma_max`` (0 for the zero matrix)."""
    A = as_cmatrix(A)
    rel_tol = check_rel_tol(rel_tol)
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def null_space_projector(T, rel_tol=1e-10):
    """Orthogonal projector ``I - T^H (T T^H)^+ T`` onto the null space of ``T``.

    Evaluated as ``I - T^+ T`` (the same operator) so the conditioning of
    ``T`` is not squared.
    """
    T = as_cmatrix(T, "T")
    P = np.eye(T.shape[1], dtype=np.complex128) - pinv(T, rel_tol) @ T
    return 0.5 * (P + P.conj().T)


def column_space_complement(H, rel_tol=1e-10):
    """Orthogonal projector onto the complement of ``range(H)``: ``I - H H^+``."""
    H = as_cmatrix(H, "H")
    P = np.eye(H.shape[0], dtype=np.complex128) - H @ pinv(H, rel_tol)
    return 0.5 * (P + P.conj().T)
