"""Bessel/Hankel functions and the 2D Helmholtz free-space kernel.

These are the kernels of the single-layer, double-layer, adjoint double-layer
and hypersingular boundary operators.  Integer orders only; arguments are kept
to desk scale (|z| <= 1e4), which covers every wavenumber-distance product the
library produces.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, SingularityError

MAX_ORDER = 60
MAX_ARG = 1.0e4


def _check(order: int, z: complex, allow_zero: bool) -> complex:
    if abs(int(order)) != abs(order):
        raise DomainError(f"order must be an integer, got {order!r}")
    if abs(order) > MAX_ORDER:
        raise DomainError(f"|order| = {abs(order)} exceeds supported {MAX_ORDER}")
    z = complex(z)
    if abs(z) > MAX_ARG:
        raise DomainError(f"|z| = {abs(z):.3g} exceeds supported {MAX_ARG:.0e}")
    if not allow_zero and z == 0:
        raise SingularityError("singular at z = 0")
    return z


def bessel_j(order: int, z: complex) -> complex:
    """Bessel function of the first kind J_order(z)."""
    z = _check(order, z, allow_zero=True)
    return complex(special.jv(order, z))


def bessel_y(order: int, z: complex) -> complex:
    """Bessel function of the second kind Y_order(z); diverges at z = 0."""
    z = _check(order, z, allow_zero=False)
    return complex(special.yv(order, z))


def hankel1(order: int, z: complex) -> complex:
    """Hankel function of the first kind, J_order(z) + i Y_order(z)."""
    z = _check(order, z, allow_zero=False)
    return complex(special.hankel1(order, z))


def hankel1_derivative(order: int, z: complex) -> complex:
    """d/dz of the first-kind Hankel function, via the three-term recurrence."""
    z = _check(order, z, allow_zero=False)
    return (complex(special.hankel1(order - 1, z)) - complex(special.hankel1(order + 1, z))) / 2.0


@dataclass(frozen=True)
class KernelValue:
    """Free-space kernel value with first derivatives and mixed Hessian.

    value    : G(x - y)
    grad_x   : gradient with respect to x
    grad_y   : gradient with respect to y (= -grad_x, translation invariance)
    hess_xy  : hess_xy[i][j] = d^2 G / dx_i dy_j with y entering through (x - y)
    """

    value: complex
    grad_x: np.ndarray
    grad_y: np.ndarray
    hess_xy: np.ndarray


def green_2d(displacement, wavenumber: complex) -> KernelValue:
    """2D Helmholtz free-space kernel (i/4) H_0(kappa |x|) at x = displacement.

    Derivatives are analytic, via H_0' = -H_1 and the chain rule.
    """
    d = np.asarray(displacement, dtype=float)
    if d.shape != (2,):
        raise DomainError("displacement must be a 2-vector")
    r = float(np.hypot(d[0], d[1]))
    if r == 0.0:
        raise SingularityError("kernel singular at zero displacement")
    kappa = complex(wavenumber)
    if kappa.real <= 0:
        raise DomainError("Re(wavenumber) must be positive")
    z = kappa * r
    h0 = hankel1(0, z)
    h1 = hankel1(1, z)

    value = 0.25j * h0
    # g(r) = (i/4) H_0(kappa r);  g' = -(i/4) kappa H_1;  H_1' = H_0 - H_1/z
    gp = -0.25j * kappa * h1
    gpp = -0.25j * kappa * kappa * (h0 - h1 / z)
    u = d / r
    grad_x = gp * u
    grad_y = -grad_x

    outer = np.outer(u, u)
    hess_uu = gpp * outer + gp * (np.eye(2) - outer) / r
    hess_xy = -hess_uu
    return KernelValue(value=value, grad_x=grad_x, grad_y=grad_y, hess_xy=hess_xy)
