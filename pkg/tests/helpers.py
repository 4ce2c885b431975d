import numpy as np

from somor.system import SecondOrderSystem

ACCEPTANCE_LINES = []


def spd(rng, n, shift=1.0):
    A = rng.standard_normal((n, n))
    return A @ A.T / n + shift * np.eye(n)


def random_system(rng, n, p=1, q=1, with_c1=True):
    """Real system with symmetric positive definite M, D, K (poles in the open LHP)."""
    B = rng.standard_normal((n, p))
    C0 = rng.standard_normal((q, n))
    C1 = rng.standard_normal((q, n)) if with_c1 else np.zeros((q, n))
    return SecondOrderSystem(spd(rng, n), 0.5 * spd(rng, n), spd(rng, n), B, C0, C1)


def rhp_points(rng, nu, lo=0.2, hi=2.0, span=3.0):
    """Distinct points in the right half-plane, well away from any LHP pole."""
    while True:
        pts = rng.uniform(lo, hi, nu) + 1j * rng.uniform(-span, span, nu)
        if nu == 1 or np.min(np.abs(pts[:, None] - pts[None, :]) + np.eye(nu)) > 0.1:
            return pts


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), np.finfo(float).tiny))


def richardson_derivative(f, s, k, h=0.02):
    """k-th derivative (k <= 3) of f at s along the real direction by
    central differences with one Richardson step."""
    stencils = {
        1: ([-1, 1], [-0.5, 0.5]),
        2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
        3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
    }
    offs, w = stencils[k]

    def central(hh):
        return sum(c * f(s + o * hh) for o, c in zip(offs, w)) / hh ** k

    return (4 * central(h / 2) - central(h)) / 3
