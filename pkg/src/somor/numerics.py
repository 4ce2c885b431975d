"""Dense complex linear-algebra kernels.

Everything here works in complex double precision; real inputs are promoted.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from .errors import DimensionMismatch, NonFinite, SingularMass, SpectraOverlap

__all__ = [
    'SpectrumReport',
    'as_matrix',
    'solve_standard_sylvester',
    'quadratic_eigenvalues',
    'pencil_eigenvalues',
    'is_positive_definite',
    'left_null_space',
    'pencil_is_regular_and_disjoint',
    'spectral_gap',
]

# unknown count above which the Kronecker route is abandoned for Schur
KRON_LIMIT = 2000
DISJOINT_RTOL = 1e-8
MASS_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Eigenvalues of a matrix pencil together with the pencil degree."""

    eigenvalues: np.ndarray
    degree: int = 2

    @property
    def count(self):
        return len(self.eigenvalues)

    @property
    def max_real(self):
        return float(np.max(self.eigenvalues.real)) if self.count else -np.inf


def as_matrix(A, name='matrix', complex_=True):
    """Return `A` as a finite 2-D array (complex unless `complex_` is False)."""
    A = np.asarray(A, dtype=complex if complex_ else None)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise DimensionMismatch(f'{name} must be 2-D, got shape {A.shape}')
    if not np.all(np.isfinite(A)):
        raise NonFinite(f'{name} contains NaN or Inf')
    return A


def _require_square(A, name):
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f'{name} must be square, got shape {A.shape}')


def spectral_gap(lam1, lam2):
    """Minimum pairwise distance between two eigenvalue collections."""
    lam1 = np.atleast_1d(lam1)
    lam2 = np.atleast_1d(lam2)
    if lam1.size == 0 or lam2.size == 0:
        return np.inf
    return float(np.min(np.abs(lam1[:, None] - lam2[None, :])))


def _check_disjoint(eA, eS):
    scale = 1.0 + max(np.max(np.abs(eA), initial=0.0), np.max(np.abs(eS), initial=0.0))
    gap = spectral_gap(eA, eS)
    if gap < DISJOINT_RTOL * scale:
        raise SpectraOverlap(f'spectra are not disjoint: minimum eigenvalue distance {gap:.3e}')


def solve_standard_sylvester(A, S, C, method='auto'):
    """Solve ``A X - X S = C``.

    Parameters
    ----------
    A
        Square matrix of size n.
    S
        Square matrix of size nu.
    C
        Right-hand side of shape (n, nu).
    method
        ``'kron'`` solves the vectorized system densely, ``'schur'`` uses a
        Bartels-Stewart type solver, ``'auto'`` picks ``'kron'`` while the
        number of unknowns is at most 2000.

    Returns
    -------
    X
        Complex array of shape (n, nu).
    """
    A = as_matrix(A, 'A')
    S = as_matrix(S, 'S')
    C = as_matrix(C, 'C')
    _require_square(A, 'A')
    _require_square(S, 'S')
    n, nu = A.shape[0], S.shape[0]
    if C.shape != (n, nu):
        raise DimensionMismatch(f'C must have shape {(n, nu)}, got {C.shape}')
    _check_disjoint(np.linalg.eigvals(A), np.linalg.eigvals(S))

    if method == 'auto':
        method = 'kron' if n * nu <= KRON_LIMIT else 'schur'
    if method == 'kron':
        big = np.kron(np.eye(nu), A) - np.kron(S.T, np.eye(n))
        x = np.linalg.solve(big, C.reshape(-1, order='F'))
        return x.reshape((n, nu), order='F')
    if method == 'schur':
        return spla.solve_sylvester(A, -S, C)
    raise ValueError(f'unknown method {method!r}')


def quadratic_eigenvalues(M, D, K):
    """Eigenvalues of ``M s^2 + D s + K`` through the companion matrix.

    Raises `SingularMass` when `M` is numerically singular.
    """
    M, D, K = (as_matrix(X, name) for X, name in ((M, 'M'), (D, 'D'), (K, 'K')))
    n = M.shape[0]
    for X, name in ((M, 'M'), (D, 'D'), (K, 'K')):
        _require_square(X, name)
        if X.shape[0] != n:
            raise DimensionMismatch(f'{name} must be {n}x{n}')
    if np.linalg.cond(M) > MASS_COND_LIMIT:
        raise SingularMass('mass matrix is numerically singular')
    A = np.block([[np.zeros((n, n)), np.eye(n)],
                  [-np.linalg.solve(M, K), -np.linalg.solve(M, D)]])
    return SpectrumReport(np.linalg.eigvals(A), degree=2)


def pencil_eigenvalues(F2, F1, F0):
    """Finite eigenvalues of ``F2 s^2 + F1 s + F0``; `F2` may be singular."""
    F2, F1, F0 = (as_matrix(X) for X in (F2, F1, F0))
    A, B = _linearization(F2, F1, F0)
    ab = spla.eig(A, B, right=False, homogeneous_eigvals=True)
    alpha, beta = ab[0], ab[1]
    scale = max(1.0, np.linalg.norm(F2))
    finite = np.abs(beta) > 1e-12 * scale
    return SpectrumReport(alpha[finite] / beta[finite], degree=2)


def is_positive_definite(A, tol=1e-12):
    """Whether the Hermitian part of `A` has smallest eigenvalue above `tol`."""
    A = as_matrix(A, 'A')
    _require_square(A, 'A')
    H = (A + A.conj().T) / 2
    return bool(np.linalg.eigvalsh(H)[0] > tol)


def left_null_space(A, tol=1e-10):
    """Orthonormal rows spanning ``{z : z A = 0}``.

    The numerical rank counts singular values above ``tol * sigma_max``.
    """
    A = as_matrix(A, 'A')
    U, s, _ = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return U[:, rank:].conj().T


REGULAR_RTOL = 1e-13


def _linearization(F2, F1, F0):
    nu = F2.shape[0]
    Z, I = np.zeros((nu, nu)), np.eye(nu)
    return np.block([[Z, I], [-F0, -F1]]), np.block([[I, Z], [Z, F2]])


def pencil_is_regular_and_disjoint(F2, F1, F0, forbidden=(), tol=1e-8):
    """Check that a quadratic pencil is regular and avoids `forbidden` points.

    The pencil is declared singular when the QZ decomposition of its
    companion linearization has a pair ``(alpha, beta)`` with both entries
    negligible.  Finite eigenvalues must keep a distance larger than `tol`
    from every forbidden point.
    """
    F2, F1, F0 = (as_matrix(X) for X in (F2, F1, F0))
    A, B = _linearization(F2, F1, F0)
    alpha, beta = spla.eig(A, B, right=False, homogeneous_eigvals=True)
    na, nb = max(np.linalg.norm(A), 1.0), max(np.linalg.norm(B), 1.0)
    regular = not np.any((np.abs(alpha) < REGULAR_RTOL * na) & (np.abs(beta) < REGULAR_RTOL * nb))
    if not regular:
        return False
    forbidden = np.asarray(list(forbidden), dtype=complex)
    if forbidden.size == 0:
        return True
    eigs = pencil_eigenvalues(F2, F1, F0).eigenvalues
    return spectral_gap(eigs, forbidden) > tol
