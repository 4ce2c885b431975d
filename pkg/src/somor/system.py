"""Second-order LTI systems ``M x'' + D x' + K x = B u``, ``y = C1 x' + C0 x``."""
from dataclasses import dataclass, field
from functools import cached_property
import json
import math

import numpy as np
import scipy.linalg as spla

from .errors import DimensionMismatch, NearPole, OrderTooHigh, ParseError, SingularMass
from .numerics import MASS_COND_LIMIT, as_matrix, pencil_eigenvalues, quadratic_eigenvalues

__all__ = [
    'SecondOrderSystem',
    'FrequencySample',
    'eval_transfer',
    'eval_transfer_derivative',
    'to_first_order',
    'msd_benchmark',
    'save_system',
    'load_system',
    'system_to_dict',
    'system_from_dict',
    'encode_matrix',
    'decode_matrix',
]

NEAR_POLE_RTOL = 1e-10
MAX_DERIVATIVE_ORDER = 8

_FIELDS = ('M', 'D', 'K', 'B', 'C0', 'C1')


def _freeze(A, name):
    A = np.asarray(A)
    A = as_matrix(A, name, complex_=np.iscomplexobj(A))
    if not np.iscomplexobj(A):
        A = A.astype(float)
    A = A.copy()
    A.setflags(write=False)
    return A


@dataclass(frozen=True, eq=False)
class SecondOrderSystem:
    """Coefficient matrices of a second-order system.

    Real matrices stay real; reduced models built from complex interpolation
    data carry complex coefficients.  The leading coefficient `M` may be
    singular for some reduced models, in which case only the finite poles are
    reported.
    """

    M: np.ndarray
    D: np.ndarray
    K: np.ndarray
    B: np.ndarray
    C0: np.ndarray
    C1: np.ndarray = None

    def __post_init__(self):
        C1 = self.C1
        if C1 is None:
            C1 = np.zeros(np.shape(np.atleast_2d(self.C0)))
        object.__setattr__(self, 'C1', C1)
        for name in _FIELDS:
            object.__setattr__(self, name, _freeze(getattr(self, name), name))
        n = self.M.shape[0]
        for name in ('M', 'D', 'K'):
            if getattr(self, name).shape != (n, n):
                raise DimensionMismatch(f'{name} must be {n}x{n}, got {getattr(self, name).shape}')
        if self.B.shape[0] != n:
            raise DimensionMismatch(f'B must have {n} rows, got {self.B.shape}')
        if self.C0.shape[1] != n or self.C1.shape != self.C0.shape:
            raise DimensionMismatch(
                f'C0 and C1 must both be q x {n}, got {self.C0.shape} and {self.C1.shape}')

    @property
    def n(self):
        return self.M.shape[0]

    @property
    def p(self):
        return self.B.shape[1]

    @property
    def q(self):
        return self.C0.shape[0]

    @property
    def is_real(self):
        return not any(np.iscomplexobj(getattr(self, f)) for f in _FIELDS)

    @cached_property
    def poles(self):
        """`SpectrumReport` of the finite poles."""
        if np.linalg.cond(self.M) <= MASS_COND_LIMIT:
            return quadratic_eigenvalues(self.M, self.D, self.K)
        return pencil_eigenvalues(self.M, self.D, self.K)

    def check_mass(self):
        if np.linalg.cond(self.M) > MASS_COND_LIMIT:
            raise SingularMass('mass matrix is numerically singular')

    def pencil(self, s):
        return self.M * s ** 2 + self.D * s + self.K

    def transfer(self, s):
        return eval_transfer(self, s)

    def with_outputs(self, C0, C1=None):
        return SecondOrderSystem(self.M, self.D, self.K, self.B, C0, C1)


@dataclass(frozen=True, eq=False)
class FrequencySample:
    s: complex
    value: np.ndarray = field(repr=False)


def _check_off_poles(sys, s):
    poles = sys.poles.eigenvalues
    if poles.size and np.min(np.abs(poles - s)) < NEAR_POLE_RTOL * (1 + abs(s)):
        raise NearPole(f's = {s} lies on a pole of the system')


def eval_transfer(sys, s):
    """``W(s) = (C1 s + C0) (M s^2 + D s + K)^{-1} B`` as a q x p array."""
    s = complex(s)
    _check_off_poles(sys, s)
    X = np.linalg.solve(sys.pencil(s), sys.B.astype(complex))
    return (sys.C1 * s + sys.C0) @ X


def eval_transfer_derivative(sys, s, k):
    """k-th derivative of the transfer function at `s`.

    Derivatives of the resolvent ``F(s) = (M s^2 + D s + K)^{-1}`` follow the
    three-term recursion

        F^(k) = -k F (2 M s + D) F^(k-1) - k (k - 1) F M F^(k-2)

    applied to `B`, and the output map contributes ``k C1 F^(k-1) B``.
    """
    s = complex(s)
    if k < 0:
        raise ValueError('derivative order must be nonnegative')
    if k > MAX_DERIVATIVE_ORDER:
        raise OrderTooHigh(f'derivative order {k} exceeds {MAX_DERIVATIVE_ORDER}')
    _check_off_poles(sys, s)
    lu = spla.lu_factor(sys.pencil(s))
    dF1 = 2 * sys.M * s + sys.D
    derivs = [spla.lu_solve(lu, sys.B.astype(complex))]
    for j in range(1, k + 1):
        rhs = -j * (dF1 @ derivs[j - 1])
        if j >= 2:
            rhs = rhs - j * (j - 1) * (sys.M @ derivs[j - 2])
        derivs.append(spla.lu_solve(lu, rhs))
    out = (sys.C0 + sys.C1 * s) @ derivs[k]
    if k >= 1:
        out = out + k * (sys.C1 @ derivs[k - 1])
    return out


def to_first_order(sys):
    """Companion realization ``(A, B~, C~)`` with ``A`` of size 2n."""
    sys.check_mass()
    n = sys.n
    MK = np.linalg.solve(sys.M, sys.K)
    MD = np.linalg.solve(sys.M, sys.D)
    A = np.block([[np.zeros((n, n)), np.eye(n)], [-MK, -MD]])
    Bt = np.vstack([np.zeros((n, sys.p)), np.linalg.solve(sys.M, sys.B)])
    Ct = np.hstack([sys.C0, sys.C1])
    return A, Bt, Ct


def _chain(n, coef):
    """Stiffness-like matrix of a chain whose last node is tied to a wall."""
    T = np.zeros((n, n))
    for i in range(n - 1):
        # element between node i and node i+1
        T[i, i] += coef
        T[i + 1, i + 1] += coef
        T[i, i + 1] -= coef
        T[i + 1, i] -= coef
    T[n - 1, n - 1] += coef
    return T


def msd_benchmark(n, m=1.0, c=0.1, k=1.5):
    """Mass-spring-damper chain driven and observed at the first mass."""
    if n < 1:
        raise ValueError('need at least one mass')
    if not (m > 0 and c > 0 and k > 0):
        raise ValueError('m, c and k must be positive')
    e1 = np.zeros((n, 1))
    e1[0, 0] = 1.0
    return SecondOrderSystem(m * np.eye(n), _chain(n, c), _chain(n, k), e1, e1.T.copy(),
                             np.zeros((1, n)))


# -- serialization ---------------------------------------------------------

def encode_matrix(A):
    """Row-major nested lists; complex entries become ``[re, im]`` pairs."""
    A = np.asarray(A)
    if np.iscomplexobj(A) and np.any(A.imag != 0):
        return [[[float(z.real), float(z.imag)] for z in row] for row in A]
    return [[float(x) for x in row] for row in A.real]


def _decode_entry(x, name):
    if isinstance(x, bool):
        raise ParseError(f'field {name!r}: booleans are not numbers')
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise ParseError(f'field {name!r}: cannot read entry {x!r}')


def decode_matrix(obj, name):
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ParseError(f'field {name!r} must be a non-empty array of rows')
    widths = {len(r) for r in obj}
    if len(widths) != 1:
        raise ParseError(f'field {name!r}: rows have different lengths')
    A = np.array([[_decode_entry(x, name) for x in row] for row in obj], dtype=complex)
    if not np.all(np.isfinite(A)):
        raise ParseError(f'field {name!r}: non-finite entry')
    if np.all(A.imag == 0):
        return A.real.copy()
    return A


def system_to_dict(sys):
    d = {'n': sys.n, 'p': sys.p, 'q': sys.q}
    for name in _FIELDS:
        d[name] = encode_matrix(getattr(sys, name))
    return d


def system_from_dict(d):
    if not isinstance(d, dict):
        raise ParseError('system file must contain a JSON object')
    for key in ('n', 'p', 'q') + _FIELDS:
        if key not in d:
            raise ParseError(f'missing field {key!r}')
    n, p, q = d['n'], d['p'], d['q']
    mats = {name: decode_matrix(d[name], name) for name in _FIELDS}
    expected = {'M': (n, n), 'D': (n, n), 'K': (n, n), 'B': (n, p), 'C0': (q, n), 'C1': (q, n)}
    for name, shape in expected.items():
        if mats[name].shape != shape:
            raise DimensionMismatch(f'field {name!r} has shape {mats[name].shape}, expected {shape}')
    return SecondOrderSystem(**mats)


def dumps(obj):
    return json.dumps(obj, indent=1, sort_keys=True) + '\n'


def save_system(sys, path, extra=None):
    """Write `sys` as JSON; `extra` entries (e.g. provenance) are merged in."""
    d = system_to_dict(sys)
    if extra:
        d.update(extra)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(dumps(d))


def read_json(path):
    with open(path, encoding='utf-8') as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f'{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}') from None


def load_system(path):
    return system_from_dict(read_json(path))


def log_grid(count, lo, hi):
    """`count` log-spaced values between `lo` and `hi` inclusive."""
    return np.logspace(math.log10(lo), math.log10(hi), count)
