"""Reduced second-order models that match moments.

Two parameterized families are built on top of the Sylvester solutions of
`somor.moments`:

* the G-family, matching input-side moments at ``sigma(S)``, with free
  ``F2, F1, G, H1`` and ``F0 = G L - F2 S^2 - F1 S``,
  ``H0 = C0 Pi + C1 Pi S - H1 S``;
* the H-family, matching output-side moments at ``sigma(Q)``, with free
  ``F2, F1, H0, H1`` and ``F0 = R H0 + Q R H1 - Q^2 F2 - Q F1``,
  ``G = Upsilon B``.

Particular members give stability or passivity, two-sided matching, pole
placement and matching of first derivatives.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import (ControllabilityFailure, DimensionMismatch, NoNullSpace, NonNegativeEigenvalue,
                     PassivityPreconditionViolated, PencilDegenerate, RankDeficient, RankDeficientPi,
                     SingularProduct, SpectraOverlap, WrongOutputStructure)
from .moments import InterpolationSet, is_controllable, solve_pi, solve_upsilon
from .numerics import (as_matrix, is_positive_definite, left_null_space, pencil_eigenvalues,
                       pencil_is_regular_and_disjoint, spectral_gap)
from .system import SecondOrderSystem, eval_transfer

__all__ = [
    'ReducedFamilyParams',
    'ReducedModel',
    'StabilityReport',
    'family_g',
    'family_h',
    'verify_match',
    'check_stability_condition_g',
    'check_stability_condition_h',
    'stable_choice_g',
    'stable_choice_h',
    'passive_galerkin_g',
    'passive_galerkin_h',
    'two_sided',
    'pole_placement',
    'derivative_matching',
]

PRODUCT_COND_LIMIT = 1e12
DISJOINT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ReducedFamilyParams:
    """Free parameters of one family member; unused entries stay ``None``."""

    family: str
    F2: np.ndarray
    F1: np.ndarray
    G: np.ndarray = None
    H0: np.ndarray = None
    H1: np.ndarray = None


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """A reduced `SecondOrderSystem` plus a record of how it was built."""

    system: SecondOrderSystem
    construction: str
    interpolation: dict = field(default_factory=dict)
    params: ReducedFamilyParams = None

    @property
    def nu(self):
        return self.system.n

    @property
    def poles(self):
        return self.system.poles.eigenvalues

    def transfer(self, s):
        return eval_transfer(self.system, s)

    def provenance(self):
        from .moments import interpolation_set_to_dict
        return {
            'construction': self.construction,
            'interpolation': {k: v.to_dict() if hasattr(v, 'to_dict') else interpolation_set_to_dict(v)
                              for k, v in self.interpolation.items()},
        }


def _input(S, L):
    if isinstance(S, InterpolationSet):
        return S.shift, S.direction
    return as_matrix(S, 'S'), as_matrix(L, 'L')


def _output(Q, R):
    if isinstance(Q, InterpolationSet):
        return Q.shift, Q.direction
    return as_matrix(Q, 'Q'), as_matrix(R, 'R')


def _check_pencil(F2, F1, F0, forbidden):
    if not pencil_is_regular_and_disjoint(F2, F1, F0):
        raise PencilDegenerate('reduced pencil is singular')
    eigs = pencil_eigenvalues(F2, F1, F0).eigenvalues
    if spectral_gap(eigs, forbidden) <= DISJOINT_TOL * (1 + np.max(np.abs(forbidden), initial=0)):
        raise SpectraOverlap('reduced poles meet the interpolation points')


def family_g(sys, S, L, F2, F1, G, H1, Pi=None, construction='family_g'):
    """Member of the G-family; matches input-side moments at ``sigma(S)``."""
    S, L = _input(S, L)
    nu = S.shape[0]
    F2, F1, G, H1 = (as_matrix(X, name) for X, name in ((F2, 'F2'), (F1, 'F1'), (G, 'G'), (H1, 'H1')))
    if F2.shape != (nu, nu) or F1.shape != (nu, nu) or G.shape != (nu, sys.p) or H1.shape != (sys.q, nu):
        raise DimensionMismatch('family parameters do not fit the interpolation set')
    if Pi is None:
        Pi = solve_pi(sys, S, L)
    F0 = G @ L - F2 @ S @ S - F1 @ S
    H0 = sys.C0 @ Pi + sys.C1 @ Pi @ S - H1 @ S
    _check_pencil(F2, F1, F0, np.linalg.eigvals(S))
    red = SecondOrderSystem(F2, F1, F0, G, H0, H1)
    return ReducedModel(red, construction, {'input': InterpolationSet(S, L, 'input')},
                        ReducedFamilyParams('G', F2, F1, G=G, H1=H1))


def family_h(sys, Q, R, F2, F1, H0, H1, Upsilon=None, construction='family_h'):
    """Member of the H-family; matches output-side moments at ``sigma(Q)``."""
    Q, R = _output(Q, R)
    nu = Q.shape[0]
    F2, F1, H0, H1 = (as_matrix(X, name) for X, name in ((F2, 'F2'), (F1, 'F1'), (H0, 'H0'), (H1, 'H1')))
    if F2.shape != (nu, nu) or F1.shape != (nu, nu) or H0.shape != (sys.q, nu) or H1.shape != (sys.q, nu):
        raise DimensionMismatch('family parameters do not fit the interpolation set')
    if Upsilon is None:
        Upsilon = solve_upsilon(sys, Q, R)
    F0 = R @ H0 + Q @ R @ H1 - Q @ Q @ F2 - Q @ F1
    G = Upsilon @ sys.B
    _check_pencil(F2, F1, F0, np.linalg.eigvals(Q))
    red = SecondOrderSystem(F2, F1, F0, G, H0, H1)
    return ReducedModel(red, construction, {'output': InterpolationSet(Q, R, 'output')},
                        ReducedFamilyParams('H', F2, F1, H0=H0, H1=H1))


def verify_match(sys, red, points, side='input'):
    """Largest relative tangential mismatch between `sys` and `red`.

    `points` holds ``(s, direction)`` pairs, or is an `InterpolationSet`
    whose eigenvalues and directions are used.  On the input side the error
    is measured on ``W(s) l``, on the output side on ``r W(s)``.
    """
    if isinstance(points, InterpolationSet):
        side = points.side
        points = points.tangential_points()
    red_sys = red.system if isinstance(red, ReducedModel) else red
    worst = 0.0
    for s, d in points:
        d = np.asarray(d, dtype=complex).ravel()
        W, Wr = eval_transfer(sys, s), eval_transfer(red_sys, s)
        if side == 'input':
            ref, got = W @ d, Wr @ d
        else:
            ref, got = d @ W, d @ Wr
        denom = max(np.linalg.norm(ref), np.finfo(float).tiny)
        worst = max(worst, float(np.linalg.norm(ref - got) / denom))
    return worst


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the definiteness conditions plus the spectral verdict."""

    conditions_hold: bool
    spectrally_stable: bool
    max_real_pole: float

    def __bool__(self):
        return self.conditions_hold


def _stability(F2, F1, F0, tol):
    conds = all(is_positive_definite(X, tol) for X in (F2, F1, F0))
    eigs = pencil_eigenvalues(F2, F1, F0).eigenvalues
    max_re = float(np.max(eigs.real)) if eigs.size else -np.inf
    return StabilityReport(conds, bool(eigs.size == 2 * F2.shape[0] and max_re < 0), max_re)


def check_stability_condition_g(S, L, F2, F1, G, tol=1e-12):
    """Definiteness of ``F2``, ``F1`` and ``G L - F2 S^2 - F1 S``.

    Definiteness is judged on Hermitian parts.  The report also says whether
    all pencil eigenvalues lie in the open left half-plane.
    """
    S, L = _input(S, L)
    F2, F1, G = as_matrix(F2), as_matrix(F1), as_matrix(G)
    return _stability(F2, F1, G @ L - F2 @ S @ S - F1 @ S, tol)


def check_stability_condition_h(Q, R, F2, F1, H0, H1, tol=1e-12):
    """Definiteness of ``F2``, ``F1`` and ``R H0 + Q R H1 - Q^2 F2 - Q F1``."""
    Q, R = _output(Q, R)
    F2, F1, H0, H1 = (as_matrix(X) for X in (F2, F1, H0, H1))
    return _stability(F2, F1, R @ H0 + Q @ R @ H1 - Q @ Q @ F2 - Q @ F1, tol)


def _negative_real_eig(A, name):
    lam, V = np.linalg.eig(A)
    scale = 1 + np.max(np.abs(lam))
    if np.any(np.abs(lam.imag) > 1e-10 * scale) or np.any(lam.real >= 0):
        raise NonNegativeEigenvalue(f'{name} must have negative real eigenvalues, got {lam}')
    if np.linalg.cond(V) > 1e10:
        raise NonNegativeEigenvalue(f'{name} is not diagonalizable')
    return lam.real, V


def _dfree(dfree, nu):
    if dfree is None:
        return np.eye(nu)
    d = np.asarray(dfree, dtype=float)
    d = np.diag(d) if d.ndim == 1 else d
    if d.shape != (nu, nu) or np.any(np.diag(d) <= 0) or np.count_nonzero(d - np.diag(np.diag(d))):
        raise ValueError('dfree must be a positive diagonal matrix')
    return d


def stable_choice_g(S, L, dfree=None, theta=0.5):
    """Stabilizing ``(F2, F1, G)`` for a shift with negative real spectrum.

    With ``S = T^{-1} Lam T``: ``F1 = T* Dfree T``,
    ``F2 = theta (-T* Dfree Lam^{-1} T)`` and ``G = L*``.  Any `theta` in
    (0, 1) keeps ``F2`` strictly inside its admissible interval.
    """
    S, L = _input(S, L)
    if not 0 < theta < 1:
        raise ValueError('theta must lie in (0, 1)')
    lam, V = _negative_real_eig(S, 'S')
    T = np.linalg.inv(V)
    Dm = _dfree(dfree, S.shape[0])
    Th = T.conj().T
    F1 = Th @ Dm @ T
    F2 = theta * (-Th @ Dm @ np.diag(1 / lam) @ T)
    return F2, F1, L.conj().T


def stable_choice_h(Q, R, dfree=None, theta=0.5, literal=False):
    """Stabilizing ``(F2, F1, H0, H1)``; dual of `stable_choice_g`.

    With ``Q = Z Lam Z^{-1}``: ``F1 = Z Dfree Z*``,
    ``F2 = theta (-Z Dfree Lam^{-1} Z*)``, ``H0 = R*`` and ``H1 = R* Q*``,
    which makes ``F0 = R R* + Q R R* Q* - (1 - theta) Z Lam Dfree Z*``
    Hermitian positive definite.  ``literal=True`` uses ``H1 = R* Q``
    instead; both agree for real symmetric ``Q``, but for non-normal ``Q``
    the literal choice can give an unstable model.
    """
    Q, R = _output(Q, R)
    if not 0 < theta < 1:
        raise ValueError('theta must lie in (0, 1)')
    lam, Z = _negative_real_eig(Q, 'Q')
    Dm = _dfree(dfree, Q.shape[0])
    Zh = Z.conj().T
    F1 = Z @ Dm @ Zh
    F2 = theta * (-Z @ Dm @ np.diag(1 / lam) @ Zh)
    Rh = R.conj().T
    return F2, F1, Rh, Rh @ (Q if literal else Q.conj().T)


def _check_passive_structure(sys):
    for name in ('M', 'D', 'K'):
        X = getattr(sys, name)
        if not np.allclose(X, X.conj().T, rtol=0, atol=1e-12 * max(1.0, np.linalg.norm(X))):
            raise PassivityPreconditionViolated(f'{name} is not symmetric')
        if not is_positive_definite(X):
            raise PassivityPreconditionViolated(f'{name} is not positive definite')
    if sys.p != sys.q:
        raise PassivityPreconditionViolated('passivity needs as many inputs as outputs')
    if np.any(sys.C0 != 0):
        raise PassivityPreconditionViolated('C0 must vanish')
    if not np.allclose(sys.C1, sys.B.conj().T, rtol=0, atol=1e-14 * max(1.0, np.linalg.norm(sys.B))):
        raise PassivityPreconditionViolated('C1 must equal B*')


def _full_column_rank(X, name):
    sv = np.linalg.svd(X, compute_uv=False)
    if X.shape[0] < X.shape[1] or sv.size == 0 or sv[-1] <= 1e-10 * sv[0]:
        raise RankDeficientPi(f'{name} is rank deficient')


def passive_galerkin_g(sys, S, L):
    """Congruence projection with ``Pi``: ``F_i = Pi* X Pi``, ``G = H1* = Pi* B``."""
    S, L = _input(S, L)
    _check_passive_structure(sys)
    Pi = solve_pi(sys, S, L)
    _full_column_rank(Pi, 'Pi')
    Ph = Pi.conj().T
    F2, F1, F0 = Ph @ sys.M @ Pi, Ph @ sys.D @ Pi, Ph @ sys.K @ Pi
    G = Ph @ sys.B
    H1 = sys.B.conj().T @ Pi
    red = SecondOrderSystem(F2, F1, F0, G, np.zeros_like(H1), H1)
    return ReducedModel(red, 'passive_g', {'input': InterpolationSet(S, L, 'input')},
                        ReducedFamilyParams('G', F2, F1, G=G, H1=H1))


def passive_galerkin_h(sys, Q, R):
    """Congruence projection with ``Upsilon*``; dual of `passive_galerkin_g`."""
    Q, R = _output(Q, R)
    _check_passive_structure(sys)
    Y = solve_upsilon(sys, Q, R)
    _full_column_rank(Y.T, 'Upsilon')
    Yh = Y.conj().T
    F2, F1, F0 = Y @ sys.M @ Yh, Y @ sys.D @ Yh, Y @ sys.K @ Yh
    G = Y @ sys.B
    H1 = sys.B.conj().T @ Yh
    red = SecondOrderSystem(F2, F1, F0, G, np.zeros_like(H1), H1)
    return ReducedModel(red, 'passive_h', {'output': InterpolationSet(Q, R, 'output')},
                        ReducedFamilyParams('H', F2, F1, H0=np.zeros_like(H1), H1=H1))


def _product_inverse(Y, Pi):
    YP = Y @ Pi
    if np.linalg.cond(YP) > PRODUCT_COND_LIMIT:
        raise SingularProduct('Upsilon Pi is numerically singular')
    return np.linalg.inv(YP)


def two_sided(sys, S, L, Q, R, form='g'):
    """Unique model matching moments at ``sigma(S)`` and ``sigma(Q)``.

    ``form='g'`` uses the left pseudo-inverse ``(Y Pi)^{-1} Y`` of ``Pi``,
    ``form='h'`` the right pseudo-inverse ``Pi (Y Pi)^{-1}`` of ``Y``.  The
    two realizations are related by the state transformation ``Y Pi``.
    """
    S, L = _input(S, L)
    Q, R = _output(Q, R)
    Pi = solve_pi(sys, S, L)
    Y = solve_upsilon(sys, Q, R)
    P = _product_inverse(Y, Pi)
    interp = {'input': InterpolationSet(S, L, 'input'), 'output': InterpolationSet(Q, R, 'output')}
    if form == 'g':
        Pd = P @ Y
        F2, F1, G, H1 = Pd @ sys.M @ Pi, Pd @ sys.D @ Pi, Pd @ sys.B, sys.C1 @ Pi
        red = family_g(sys, S, L, F2, F1, G, H1, Pi=Pi, construction='two_sided')
    elif form == 'h':
        Yd = Pi @ P
        F2, F1, H1, H0 = Y @ sys.M @ Yd, Y @ sys.D @ Yd, sys.C1 @ Yd, sys.C0 @ Yd
        red = family_h(sys, Q, R, F2, F1, H0, H1, Upsilon=Y, construction='two_sided')
    else:
        raise ValueError(f'unknown form {form!r}')
    eigs = red.poles
    both = np.concatenate([np.linalg.eigvals(S), np.linalg.eigvals(Q)])
    if spectral_gap(eigs, both) <= DISJOINT_TOL * (1 + np.max(np.abs(both))):
        raise SpectraOverlap('reduced poles meet the interpolation points')
    return ReducedModel(red.system, 'two_sided', interp, red.params)


def _closest_solution(A, Y, X_center):
    """Minimizer of ``||X - X_center||_F`` subject to ``A X = Y`` (A full row rank)."""
    return X_center - np.linalg.pinv(A) @ (A @ X_center - Y)


def _null_rows(N, q, offset):
    r = N.shape[0]
    E = np.zeros((q, r))
    for i in range(q):
        E[i, (offset + i) % r] = 1.0
    return E @ N


def pole_placement(sys, S, L, targets, Rp=None, Q=None, R=None):
    """G-family member that matches moments at ``sigma(S)`` and has the
    prescribed `targets` among its poles.

    The constraints ``Yp Pi F2 = Yp M Pi``, ``Yp Pi F1 = Yp D Pi`` and
    ``Yp Pi G = Yp B`` leave freedom when there are fewer targets than the
    reduced order; it is spent staying as close as possible (Frobenius norm)
    to a projection model.  That centre is the two-sided model when `Q`, `R`
    are given and the orthogonal projection ``pinv(Pi) X Pi`` otherwise.
    """
    S, L = _input(S, L)
    nu = S.shape[0]
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    kappa = targets.size
    if kappa > nu:
        raise DimensionMismatch(f'cannot place {kappa} poles in a model of order {nu}')
    if kappa:
        sS = np.linalg.eigvals(S)
        if spectral_gap(targets, sS) <= DISJOINT_TOL * (1 + np.max(np.abs(sS))):
            raise SpectraOverlap('a target pole coincides with an interpolation point')
        poles = sys.poles.eigenvalues
        if spectral_gap(targets, poles) <= DISJOINT_TOL * (1 + np.max(np.abs(poles))):
            raise SpectraOverlap('a target pole coincides with a pole of the full system')
        if np.unique(targets).size != kappa:
            raise ValueError('target poles must be distinct')

    Pi = solve_pi(sys, S, L)
    if Q is not None:
        Q, R = _output(Q, R)
        Y = solve_upsilon(sys, Q, R)
        Pd = _product_inverse(Y, Pi) @ Y
    else:
        Pd = np.linalg.pinv(Pi)
    centre = [Pd @ sys.M @ Pi, Pd @ sys.D @ Pi, Pd @ sys.B]
    if kappa == 0:
        F2, F1, G = centre
        return family_g(sys, S, L, F2, F1, G, sys.C1 @ Pi, Pi=Pi, construction='pole_place')

    N = left_null_space(Pi)
    if N.shape[0] == 0:
        raise NoNullSpace('Pi has no left null space; reduce to an order below n')
    Cp0 = _null_rows(N, sys.q, 0)
    Cp1 = _null_rows(N, sys.q, sys.q)
    Qp = np.diag(targets)
    if Rp is None:
        Rp = np.ones((kappa, sys.q))
    Rp = as_matrix(Rp, 'Rp')
    if Rp.shape != (kappa, sys.q):
        raise DimensionMismatch(f'Rp must be {kappa}x{sys.q}')
    if not is_controllable(Qp, Rp):
        raise ControllabilityFailure('(Qp, Rp) is not controllable')
    Yp = solve_upsilon(sys.with_outputs(Cp0, Cp1), Qp, Rp, check=False)
    A = Yp @ Pi
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 1e-10 * max(sv[0], np.finfo(float).tiny):
        raise RankDeficient('Upsilon_p Pi does not have full row rank')
    rhs = [Yp @ sys.M @ Pi, Yp @ sys.D @ Pi, Yp @ sys.B]
    F2, F1, G = (_closest_solution(A, y, c) for y, c in zip(rhs, centre))
    red = family_g(sys, S, L, F2, F1, G, sys.C1 @ Pi, Pi=Pi, construction='pole_place')
    return red


def derivative_matching(sys, S, L):
    """Model matching ``W`` and ``W'`` at ``sigma(S)`` for systems with ``C1 = 0``.

    ``Upsilon`` solves ``S^2 Y M + S Y D + Y K = -L* C``; the model is
    ``F2 = Pd M Pi``, ``F1 = Pd D Pi``, ``G = Pd B``, ``H0 = C Pi`` with
    ``Pd = (Y Pi)^{-1} Y``.
    """
    S, L = _input(S, L)
    if np.any(sys.C1 != 0):
        raise WrongOutputStructure('derivative matching needs C1 = 0')
    if sys.p != sys.q:
        raise DimensionMismatch('derivative matching needs as many inputs as outputs')
    Pi = solve_pi(sys, S, L)
    Y = solve_upsilon(sys, S, -L.conj().T)
    Pd = _product_inverse(Y, Pi) @ Y
    F2, F1, G = Pd @ sys.M @ Pi, Pd @ sys.D @ Pi, Pd @ sys.B
    red = family_g(sys, S, L, F2, F1, G, np.zeros((sys.q, S.shape[0])), Pi=Pi,
                   construction='derivative')
    return red
