"""Quadrature rules on the unit interval.

Plain Gauss-Legendre rules plus a Gauss rule for the weight ln(1/u) on (0, 1),
used to integrate the logarithmic part of the layer-potential kernels on
coincident and corner-adjacent panel pairs.
"""

from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal


@lru_cache(maxsize=None)
def gauss01(n: int):
    """n-point Gauss-Legendre nodes and weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _log_recurrence(n: int):
    # Chebyshev algorithm from the exact monomial moments
    # m_k = int_0^1 u^k ln(1/u) du = 1/(k+1)^2, run in high precision;
    # the algorithm loses ~4^n digits, so float64 would be unusable.
    import mpmath as mp

    with mp.workdps(80):
        m = [mp.mpf(1) / (k + 1) ** 2 for k in range(2 * n)]
        alpha = [m[1] / m[0]]
        beta = [m[0]]
        sig_prev = [mp.mpf(0)] * (2 * n + 1)
        sig_cur = list(m)
        for k in range(1, n):
            sig_new = [mp.mpf(0)] * len(sig_cur)
            for l in range(k, 2 * n - k):
                sig_new[l] = (
                    sig_cur[l + 1]
                    - alpha[k - 1] * sig_cur[l]
                    - beta[k - 1] * sig_prev[l]
                )
            alpha.append(sig_new[k + 1] / sig_new[k] - sig_cur[k] / sig_cur[k - 1])
            beta.append(sig_new[k] / sig_cur[k - 1])
            sig_prev, sig_cur = sig_cur, sig_new
        return [float(a) for a in alpha], [float(b) for b in beta]


@lru_cache(maxsize=None)
def gauss_log01(n: int):
    """n-point Gauss rule for integrals of the form int_0^1 f(u) ln(1/u) du."""
    alpha, beta = _log_recurrence(n)
    nodes, vecs = eigh_tridiagonal(np.array(alpha), np.sqrt(np.array(beta[1:])))
    weights = beta[0] * vecs[0] ** 2
    return nodes, weights
