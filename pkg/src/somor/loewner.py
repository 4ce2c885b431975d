"""Second-order Loewner framework.

Right data ``(alpha_i, r_i, w_i)`` with ``w_i = W(alpha_i) r_i`` and left
data ``(beta_j, l_j, v_j)`` with ``v_j^T = l_j^T W(beta_j)`` are arranged as

    Lambda_alpha = diag(alpha),  R = [r_1 ... r_nu],   W = [w_1 ... w_nu],
    Lambda_beta  = diag(beta),   L = [l_1^T; ...],     V = [v_1^T; ...].

From them the Loewner, shifted and double-shifted Loewner matrices are
assembled, and two families of second-order interpolants are built.
"""
import csv
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, DividedDifferenceBlowup, DuplicateFrequency, ParseError,
                     PencilDegenerate, SingularFrequency, SingularShift, WrongOutputStructure,
                     ZeroDirection)
from .numerics import pencil_is_regular_and_disjoint, solve_standard_sylvester
from .reduction import ReducedModel
from .system import SecondOrderSystem, eval_transfer, read_json

__all__ = [
    'TangentialData',
    'LoewnerTriple',
    'sample_tangential',
    'split_alternating',
    'build_loewner',
    'loewner_identity_residuals',
    'factored_loewner',
    'interpolant_family_m',
    'interpolant_family_k',
    'rayleigh_mhat',
    'rayleigh_khat',
    'rayleigh_residual',
    'verify_tangential',
    'save_tangential',
    'load_tangential',
    'load_tangential_csv',
]

DIVDIFF_RTOL = 1e-12


def _vec(x):
    return np.atleast_1d(np.asarray(x, dtype=complex))


@dataclass(frozen=True, eq=False)
class TangentialData:
    """Right and left tangential samples.

    Attributes
    ----------
    alpha, beta
        Right and left frequencies.
    R, W
        Right directions (p x nu) and responses (q x nu), one column each.
    L, V
        Left directions (nu x q) and responses (nu x p), one row each.
    """

    alpha: np.ndarray
    R: np.ndarray
    W: np.ndarray
    beta: np.ndarray
    L: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        alpha, beta = _vec(self.alpha).ravel(), _vec(self.beta).ravel()
        R, W = np.atleast_2d(_vec(self.R)), np.atleast_2d(_vec(self.W))
        L, V = np.atleast_2d(_vec(self.L)), np.atleast_2d(_vec(self.V))
        if L.shape[0] != beta.size and L.shape[1] == beta.size:
            L, V = L.T, V.T
        if R.shape[1] != alpha.size or W.shape[1] != alpha.size:
            raise DimensionMismatch('R and W need one column per right frequency')
        if L.shape[0] != beta.size or V.shape[0] != beta.size:
            raise DimensionMismatch('L and V need one row per left frequency')
        if L.shape[1] != W.shape[0] or V.shape[1] != R.shape[0]:
            raise DimensionMismatch('left and right data disagree on input/output sizes')
        for name, x in (('alpha', alpha), ('beta', beta)):
            if x.size != np.unique(x).size:
                raise DuplicateFrequency(f'{name} contains repeated frequencies')
        if np.intersect1d(alpha, beta).size:
            raise DuplicateFrequency('a frequency appears on both sides')
        if np.any(np.linalg.norm(R, axis=0) == 0) or np.any(np.linalg.norm(L, axis=1) == 0):
            raise ZeroDirection('tangential directions must be nonzero')
        for name, x in (('alpha', alpha), ('beta', beta), ('R', R), ('W', W), ('L', L), ('V', V)):
            object.__setattr__(self, name, x)

    @property
    def nu(self):
        return self.alpha.size

    @property
    def Lambda_alpha(self):
        return np.diag(self.alpha)

    @property
    def Lambda_beta(self):
        return np.diag(self.beta)

    def to_dict(self):
        pair = lambda z: [float(z.real), float(z.imag)]
        return {
            'right': [{'s': pair(self.alpha[i]), 'r': [pair(z) for z in self.R[:, i]],
                       'w': [pair(z) for z in self.W[:, i]]} for i in range(self.alpha.size)],
            'left': [{'s': pair(self.beta[j]), 'l': [pair(z) for z in self.L[j]],
                      'v': [pair(z) for z in self.V[j]]} for j in range(self.beta.size)],
        }


@dataclass(frozen=True, eq=False)
class LoewnerTriple:
    L: np.ndarray
    Ls: np.ndarray
    Lss: np.ndarray


def split_alternating(points):
    """Assign even-indexed points to the right side and odd ones to the left."""
    points = np.asarray(points, dtype=complex).ravel()
    return points[0::2], points[1::2]


def sample_tangential(sys, alphas, betas, r_dirs=None, l_dirs=None):
    """Sample ``W(alpha_i) r_i`` and ``l_j^T W(beta_j)`` from a system.

    Directions default to all-ones vectors.  `r_dirs` is p x nu (one column
    per point), `l_dirs` is nu x q (one row per point).
    """
    alphas, betas = _vec(alphas).ravel(), _vec(betas).ravel()
    if r_dirs is None:
        r_dirs = np.ones((sys.p, alphas.size))
    if l_dirs is None:
        l_dirs = np.ones((betas.size, sys.q))
    R = np.asarray(r_dirs, dtype=complex).reshape(sys.p, alphas.size)
    L = np.asarray(l_dirs, dtype=complex).reshape(betas.size, sys.q)
    W = np.column_stack([eval_transfer(sys, a) @ R[:, i] for i, a in enumerate(alphas)])
    V = np.vstack([L[j] @ eval_transfer(sys, b) for j, b in enumerate(betas)])
    return TangentialData(alphas, R, W, betas, L, V)


def build_loewner(data):
    """Loewner, shifted and double-shifted Loewner matrices of `data`."""
    a, b = data.alpha, data.beta
    den = b[:, None] - a[None, :]
    scale = 1 + max(np.max(np.abs(a)), np.max(np.abs(b)))
    if np.min(np.abs(den)) < DIVDIFF_RTOL * scale:
        raise DividedDifferenceBlowup('left and right frequencies nearly coincide')
    VR = data.V @ data.R
    LW = data.L @ data.W
    L = (VR - LW) / den
    Ls = (b[:, None] * VR - a[None, :] * LW) / den
    Lss = (b[:, None] ** 2 * VR - a[None, :] ** 2 * LW) / den
    return LoewnerTriple(L, Ls, Lss)


def _rel(lhs, rhs):
    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), np.finfo(float).tiny)
    return float(np.linalg.norm(lhs - rhs) / scale)


def loewner_identity_residuals(data, triple=None):
    """Relative residuals of the Sylvester and cross-pair identities."""
    t = triple or build_loewner(data)
    La, Lb = data.Lambda_alpha, data.Lambda_beta
    VR, LW = data.V @ data.R, data.L @ data.W
    return {
        'sylv_L': _rel(Lb @ t.L - t.L @ La, VR - LW),
        'sylv_Ls': _rel(Lb @ t.Ls - t.Ls @ La, Lb @ VR - LW @ La),
        'sylv_Lss': _rel(Lb @ t.Lss - t.Lss @ La, Lb @ Lb @ VR - LW @ La @ La),
        'L_Ls': _rel(-t.L @ La + t.Ls, VR),
        'Ls_L': _rel(-Lb @ t.L + t.Ls, LW),
        'L_Lss_a': _rel(-t.L @ La @ La + t.Lss, Lb @ VR + VR @ La),
        'L_Lss_b': _rel(-Lb @ Lb @ t.L + t.Lss, Lb @ LW + LW @ La),
        'Ls_Lss_a': _rel(-t.Ls @ La + t.Lss, Lb @ VR),
        'Ls_Lss_b': _rel(-Lb @ t.Ls + t.Lss, LW @ La),
        'Lss_L_Ls': _rel(t.Lss, -Lb @ t.L @ La + Lb @ t.Ls + t.Ls @ La),
    }


def factored_loewner(sys, data):
    """Loewner triple expressed through the generalized tangential
    controllability matrix ``X`` and observability matrix ``Y`` of `sys`."""
    if np.any(sys.C1 != 0):
        raise WrongOutputStructure('factored Loewner forms need C1 = 0')
    X = np.column_stack([np.linalg.solve(sys.pencil(a), sys.B @ data.R[:, i])
                         for i, a in enumerate(data.alpha)])
    Y = np.vstack([np.linalg.solve(sys.pencil(b).T, (data.L[j] @ sys.C0)).T
                   for j, b in enumerate(data.beta)])
    La, Lb = data.Lambda_alpha, data.Lambda_beta
    YMX, YDX, YKX = Y @ sys.M @ X, Y @ sys.D @ X, Y @ sys.K @ X
    return LoewnerTriple(
        -Lb @ YMX - YMX @ La - YDX,
        -Lb @ YMX @ La + YKX,
        Lb @ YDX @ La + Lb @ YKX + YKX @ La,
    )


def _model(F2, F1, F0, B, C, data, construction):
    forbidden = np.concatenate([data.alpha, data.beta])
    if not pencil_is_regular_and_disjoint(F2, F1, F0, forbidden):
        raise PencilDegenerate('interpolant pencil is singular or has a pole at a data frequency')
    return ReducedModel(SecondOrderSystem(F2, F1, F0, B, C), construction, {'data': data})


def interpolant_family_m(data, Mhat, triple=None):
    """Interpolant ``Mh x'' + (-L - Lb Mh - Mh La) x' + (Ls + Lb Mh La) x = V u``, ``y = W x``."""
    t = triple or build_loewner(data)
    Mh = np.asarray(Mhat, dtype=complex)
    if Mh.shape != t.L.shape:
        raise DimensionMismatch(f'Mhat must be {t.L.shape}')
    La, Lb = data.Lambda_alpha, data.Lambda_beta
    return _model(Mh, -t.L - Lb @ Mh - Mh @ La, t.Ls + Lb @ Mh @ La, data.V, data.W, data,
                  'loewner_m')


def interpolant_family_k(data, Khat, triple=None):
    """Interpolant ``(-Ls + Kh) x'' + (Lss - Lb Kh - Kh La) x' + Lb Kh La x = Lb V u``,
    ``y = W La x``.  Requires nonzero frequencies."""
    if np.any(data.alpha == 0) or np.any(data.beta == 0):
        raise SingularFrequency('the K-family needs nonzero frequencies')
    t = triple or build_loewner(data)
    Kh = np.asarray(Khat, dtype=complex)
    if Kh.shape != t.L.shape:
        raise DimensionMismatch(f'Khat must be {t.L.shape}')
    La, Lb = data.Lambda_alpha, data.Lambda_beta
    return _model(-t.Ls + Kh, t.Lss - Lb @ Kh - Kh @ La, Lb @ Kh @ La, Lb @ data.V, data.W @ La,
                  data, 'loewner_k')


def rayleigh_mhat(data, alpha_r, beta_r, triple=None):
    """`Mhat` whose M-family interpolant has damping ``alpha_r M + beta_r K``.

    The requirement is the generalized Sylvester equation

        (Lb + alpha_r I) Mh + (I + beta_r Lb) Mh La = -L - beta_r Ls,

    which is brought to standard form by left-multiplying with
    ``(I + beta_r Lb)^{-1}``.
    """
    t = triple or build_loewner(data)
    shift = 1 + beta_r * data.beta
    if np.min(np.abs(shift)) < 1e-14:
        raise SingularShift('I + beta_r Lambda_beta is singular')
    A = np.diag((data.beta + alpha_r) / shift)
    C = (-t.L - beta_r * t.Ls) / shift[:, None]
    return solve_standard_sylvester(A, -data.Lambda_alpha, C)


def rayleigh_khat(data, alpha_r, beta_r, triple=None):
    """`Khat` whose K-family interpolant has damping ``alpha_r M + beta_r K``.

    The requirement is

        Lb Kh (I + beta_r La) + Kh (La + alpha_r I) = Lss + alpha_r Ls,

    solved after right-multiplying with ``(I + beta_r La)^{-1}``.
    """
    t = triple or build_loewner(data)
    shift = 1 + beta_r * data.alpha
    if np.min(np.abs(shift)) < 1e-14:
        raise SingularShift('I + beta_r Lambda_alpha is singular')
    S = -np.diag((data.alpha + alpha_r) / shift)
    C = (t.Lss + alpha_r * t.Ls) / shift[None, :]
    return solve_standard_sylvester(data.Lambda_beta, S, C)


def rayleigh_residual(model, alpha_r, beta_r):
    """Relative defect of ``D = alpha_r M + beta_r K`` for a model."""
    s = model.system if isinstance(model, ReducedModel) else model
    return _rel(s.D, alpha_r * s.M + beta_r * s.K)


def verify_tangential(model, data):
    """Largest relative right and left interpolation residuals."""
    s = model.system if isinstance(model, ReducedModel) else model
    right = 0.0
    for i, a in enumerate(data.alpha):
        got = eval_transfer(s, a) @ data.R[:, i]
        right = max(right, _relvec(got, data.W[:, i]))
    left = 0.0
    for j, b in enumerate(data.beta):
        got = data.L[j] @ eval_transfer(s, b)
        left = max(left, _relvec(got, data.V[j]))
    return right, left


def _relvec(got, ref):
    return float(np.linalg.norm(got - ref) / max(np.linalg.norm(ref), np.finfo(float).tiny))


# -- file formats ----------------------------------------------------------

def save_tangential(data, path):
    import json
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(data.to_dict(), indent=1, sort_keys=True) + '\n')


def _cplx(x, where):
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    raise ParseError(f'{where}: expected [re, im], got {x!r}')


def tangential_from_dict(d):
    try:
        right, left = d['right'], d['left']
        alpha = [_cplx(e['s'], f'right[{i}].s') for i, e in enumerate(right)]
        R = np.array([[_cplx(x, f'right[{i}].r') for x in e['r']] for i, e in enumerate(right)]).T
        W = np.array([[_cplx(x, f'right[{i}].w') for x in e['w']] for i, e in enumerate(right)]).T
        beta = [_cplx(e['s'], f'left[{j}].s') for j, e in enumerate(left)]
        L = np.array([[_cplx(x, f'left[{j}].l') for x in e['l']] for j, e in enumerate(left)])
        V = np.array([[_cplx(x, f'left[{j}].v') for x in e['v']] for j, e in enumerate(left)])
    except (KeyError, TypeError) as exc:
        raise ParseError(f'malformed tangential data: missing or invalid field {exc}') from None
    return TangentialData(alpha, R, W, beta, L, V)


def load_tangential(path):
    return tangential_from_dict(read_json(path))


def load_tangential_csv(path):
    """SISO measurements with columns ``freq_imag, re(W), im(W), side``.

    `side` is ``right`` or ``left``; frequencies lie on the imaginary axis.
    A header line is skipped when its first field is not a number.
    """
    right, left = [], []
    with open(path, newline='', encoding='utf-8') as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or not ''.join(row).strip():
                continue
            try:
                w_imag, re, im = float(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError):
                if lineno == 1:
                    continue
                raise ParseError(f'{path}: line {lineno}: expected freq_imag,re,im,side') from None
            side = row[3].strip().lower() if len(row) > 3 else ''
            if side not in ('right', 'left'):
                raise ParseError(f'{path}: line {lineno}: side must be "right" or "left"')
            (right if side == 'right' else left).append((1j * w_imag, complex(re, im)))
    if not right or not left:
        raise ParseError(f'{path}: need samples on both sides')
    alpha = [s for s, _ in right]
    beta = [s for s, _ in left]
    return TangentialData(alpha, np.ones((1, len(right))), np.array([[w for _, w in right]]),
                          beta, np.ones((len(left), 1)), np.array([[v] for _, v in left]))
