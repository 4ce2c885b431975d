"""Moments of second-order systems through second-order Sylvester equations.

Input-side moments at ``sigma(S)`` are read off ``C0 Pi + C1 Pi S`` where

    M Pi S^2 + D Pi S + K Pi = B L,

and output-side moments at ``sigma(Q)`` off ``Upsilon B`` where

    Q^2 Upsilon M + Q Upsilon D + Upsilon K = R C0 + Q R C1.

Both equations are solved through their first-order companion embedding.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import (ControllabilityFailure, DimensionMismatch, ObservabilityFailure, ParseError,
                     ZeroDirection)
from .numerics import as_matrix, solve_standard_sylvester
from .system import decode_matrix, eval_transfer_derivative, to_first_order

__all__ = [
    'InterpolationSet',
    'MomentSolution',
    'is_observable',
    'is_controllable',
    'solve_pi',
    'solve_upsilon',
    'input_moments',
    'output_moments',
    'jordan_set',
    'sign_matrix',
    'moments_oracle',
    'interpolation_set_to_dict',
    'interpolation_set_from_dict',
]

RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class InterpolationSet:
    """Shift matrix with tangential directions.

    On the input side `shift` is ``S`` and `direction` is ``L`` (p x nu); on
    the output side they are ``Q`` and ``R`` (nu x q).
    """

    shift: np.ndarray
    direction: np.ndarray
    side: str = 'input'

    def __post_init__(self):
        if self.side not in ('input', 'output'):
            raise ValueError(f'side must be "input" or "output", got {self.side!r}')
        shift = as_matrix(self.shift, 'shift')
        direction = as_matrix(self.direction, 'direction')
        nu = shift.shape[0]
        if shift.shape != (nu, nu):
            raise DimensionMismatch('shift must be square')
        if self.side == 'input' and direction.shape[1] != nu:
            raise DimensionMismatch(f'L must have {nu} columns, got {direction.shape}')
        if self.side == 'output' and direction.shape[0] != nu:
            raise DimensionMismatch(f'R must have {nu} rows, got {direction.shape}')
        object.__setattr__(self, 'shift', shift)
        object.__setattr__(self, 'direction', direction)

    @property
    def nu(self):
        return self.shift.shape[0]

    @classmethod
    def diagonal(cls, points, directions=None, side='input', width=1):
        """Diagonal shift with given points; directions default to ones."""
        points = np.asarray(points, dtype=complex).ravel()
        if directions is None:
            shape = (width, points.size) if side == 'input' else (points.size, width)
            directions = np.ones(shape)
        return cls(np.diag(points), directions, side)

    def tangential_points(self):
        """``(s_i, direction_i)`` pairs at the eigenvalues of the shift.

        For ``S = V diag(s) V^{-1}`` the columns of ``L V`` are the input-side
        directions; for ``Q`` the rows of ``V^{-1} R`` are the output-side ones.
        """
        if np.count_nonzero(self.shift - np.diag(np.diag(self.shift))) == 0:
            s, V = np.diag(self.shift), np.eye(self.nu)
        else:
            s, V = np.linalg.eig(self.shift)
            if np.linalg.cond(V) > 1e10:
                raise ValueError('shift is not diagonalizable')
        if self.side == 'input':
            LV = self.direction @ V
            return [(s[i], LV[:, i]) for i in range(self.nu)]
        VR = np.linalg.solve(V, self.direction)
        return [(s[i], VR[i, :]) for i in range(self.nu)]


def _pbh_full_rank(shift, block, stack):
    """Popov-Belevitch-Hautus rank test at every eigenvalue of `shift`."""
    nu = shift.shape[0]
    scale = max(1.0, np.linalg.norm(shift), np.linalg.norm(block))
    for lam in np.linalg.eigvals(shift):
        T = lam * np.eye(nu) - shift
        test = np.vstack([T, block]) if stack == 'v' else np.hstack([T, block])
        sv = np.linalg.svd(test, compute_uv=False)
        if sv[nu - 1] <= RANK_RTOL * scale:
            return False
    return True


def is_observable(L, S):
    S, L = as_matrix(S), as_matrix(L)
    return _pbh_full_rank(S, L, 'v')


def is_controllable(Q, R):
    Q, R = as_matrix(Q), as_matrix(R)
    return _pbh_full_rank(Q, R, 'h')


@dataclass(frozen=True, eq=False)
class MomentSolution:
    """Solution of a second-order Sylvester equation and its moment matrix."""

    solution: np.ndarray
    moment_matrix: np.ndarray
    side: str
    residual: float

    @property
    def sign_matrix(self):
        nu = self.solution.shape[1] if self.side == 'input' else self.solution.shape[0]
        return sign_matrix(nu)


def _input_set(S, L):
    if isinstance(S, InterpolationSet):
        return S.shift, S.direction
    return as_matrix(S, 'S'), as_matrix(L, 'L')


def solve_pi(sys, S, L=None, method='auto', check=True):
    """Solve ``M Pi S^2 + D Pi S + K Pi = B L`` for ``Pi`` (n x nu).

    `S` may be an `InterpolationSet` (then `L` is taken from it).  The
    equation is lifted to ``A Pi~ - Pi~ S = -B~ L`` with the companion matrix
    ``A``, whose solution stacks ``Pi`` on top of ``Pi S``.
    """
    S, L = _input_set(S, L)
    nu = S.shape[0]
    if L.shape != (sys.p, nu):
        raise DimensionMismatch(f'L must be {sys.p}x{nu}, got {L.shape}')
    if check and not is_observable(L, S):
        raise ObservabilityFailure('(L, S) is not observable')
    A, Bt, _ = to_first_order(sys)
    Pt = solve_standard_sylvester(A, S, -Bt @ L, method=method)
    return Pt[:sys.n]


def solve_upsilon(sys, Q, R=None, method='auto', check=True):
    """Solve ``Q^2 Y M + Q Y D + Y K = R C0 + Q R C1`` for ``Y`` (nu x n).

    The dual embedding ``Q Y~ - Y~ A = R [C0 C1]`` has right block ``Y M``.
    """
    if isinstance(Q, InterpolationSet):
        Q, R = Q.shift, Q.direction
    Q, R = as_matrix(Q, 'Q'), as_matrix(R, 'R')
    nu = Q.shape[0]
    if R.shape != (nu, sys.q):
        raise DimensionMismatch(f'R must be {nu}x{sys.q}, got {R.shape}')
    if check and not is_controllable(Q, R):
        raise ControllabilityFailure('(Q, R) is not controllable')
    A, _, Ct = to_first_order(sys)
    Yt = solve_standard_sylvester(Q, A, R @ Ct, method=method)
    YM = Yt[:, sys.n:]
    return np.linalg.solve(sys.M.T, YM.T).T


def pi_residual(sys, Pi, S, L):
    lhs = sys.M @ Pi @ S @ S + sys.D @ Pi @ S + sys.K @ Pi
    rhs = sys.B @ L
    scale = np.linalg.norm(rhs) + (np.linalg.norm(sys.M) + np.linalg.norm(sys.D)
                                   + np.linalg.norm(sys.K)) * np.linalg.norm(Pi) * (1 + np.linalg.norm(S)) ** 2
    return float(np.linalg.norm(lhs - rhs) / scale)


def upsilon_residual(sys, Y, Q, R):
    lhs = Q @ Q @ Y @ sys.M + Q @ Y @ sys.D + Y @ sys.K
    rhs = R @ sys.C0 + Q @ R @ sys.C1
    scale = np.linalg.norm(rhs) + (np.linalg.norm(sys.M) + np.linalg.norm(sys.D)
                                   + np.linalg.norm(sys.K)) * np.linalg.norm(Y) * (1 + np.linalg.norm(Q)) ** 2
    return float(np.linalg.norm(lhs - rhs) / scale)


def input_moment_solution(sys, S, L=None, method='auto'):
    S, L = _input_set(S, L)
    Pi = solve_pi(sys, S, L, method=method)
    return MomentSolution(Pi, sys.C0 @ Pi + sys.C1 @ Pi @ S, 'input', pi_residual(sys, Pi, S, L))


def output_moment_solution(sys, Q, R=None, method='auto'):
    if isinstance(Q, InterpolationSet):
        Q, R = Q.shift, Q.direction
    Q, R = as_matrix(Q), as_matrix(R)
    Y = solve_upsilon(sys, Q, R, method=method)
    return MomentSolution(Y, Y @ sys.B, 'output', upsilon_residual(sys, Y, Q, R))


def input_moments(sys, S, L=None):
    """Unsigned moment matrix ``C0 Pi + C1 Pi S`` (q x nu)."""
    return input_moment_solution(sys, S, L).moment_matrix


def output_moments(sys, Q, R=None):
    """Unsigned moment matrix ``Upsilon B`` (nu x p)."""
    return output_moment_solution(sys, Q, R).moment_matrix


def jordan_set(s_star, order, direction, side='input'):
    """Single-point interpolation set of size `order` (number of moments).

    The input side uses an upper bidiagonal Jordan block with
    ``L = [l0, 0, ..., 0]``; the output side uses the lower bidiagonal block
    with ``R = [r0; 0; ...; 0]``.
    """
    if order < 1:
        raise ValueError('order must be at least 1')
    direction = np.asarray(direction, dtype=complex).ravel()
    if not np.any(direction):
        raise ZeroDirection('tangential direction must be nonzero')
    J = complex(s_star) * np.eye(order, dtype=complex)
    if side == 'input':
        J += np.eye(order, k=1)
        D = np.zeros((direction.size, order), dtype=complex)
        D[:, 0] = direction
    else:
        J += np.eye(order, k=-1)
        D = np.zeros((order, direction.size), dtype=complex)
        D[0, :] = direction
    return InterpolationSet(J, D, side)


def sign_matrix(nu):
    """``diag(1, -1, 1, ...)`` of size `nu`."""
    return np.diag((-1.0) ** np.arange(nu))


def moments_oracle(sys, s_star, up_to):
    """Moments ``eta_k = (-1)^k / k! W^(k)(s_star)`` for ``k = 0..up_to``."""
    return [(-1) ** k / math.factorial(k) * eval_transfer_derivative(sys, s_star, k)
            for k in range(up_to + 1)]


# -- serialization ---------------------------------------------------------

def interpolation_set_to_dict(iset):
    if iset.side == 'input':
        return {'S': _pairs(iset.shift), 'L': _pairs(iset.direction)}
    return {'Q': _pairs(iset.shift), 'R': _pairs(iset.direction)}


def _pairs(A):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(A, dtype=complex)]


def interpolation_set_from_dict(d):
    if 'S' in d:
        return InterpolationSet(decode_matrix(d['S'], 'S'), decode_matrix(d['L'], 'L'), 'input')
    if 'Q' in d:
        return InterpolationSet(decode_matrix(d['Q'], 'Q'), decode_matrix(d['R'], 'R'), 'output')
    raise ParseError('interpolation set needs fields "S","L" or "Q","R"')

