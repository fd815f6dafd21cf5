"""Exact scattering eigenvalues of the unit disk.

For each integer angular mode, interface matching of interior Bessel and
exterior outgoing Hankel solutions gives a 2x2 transcendental system; its
determinant roots in the lower half plane are the scattering eigenvalues.
They are located with Beyn's contour-integral method on a covering of the
requested region, and serve as the ground truth for surrogate pole validation.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ContourError, InvalidParameterError, SingularityError


def _jvp(order: int, z: complex) -> complex:
    return (special.jv(order - 1, z) - special.jv(order + 1, z)) / 2.0


def _h1vp(order: int, z: complex) -> complex:
    return (special.hankel1(order - 1, z) - special.hankel1(order + 1, z)) / 2.0


def dispersion(order: int, n_i: float, lam: complex) -> np.ndarray:
    """Interface-matching matrix for one angular mode.

    Rows are the Dirichlet and Neumann matching conditions at the unit circle;
    columns multiply the interior Bessel and exterior Hankel amplitudes.
    """
    if lam == 0:
        raise SingularityError("dispersion matrix singular at lambda = 0")
    if n_i <= 0:
        raise InvalidParameterError(f"refraction index must be positive, got {n_i}")
    z_in = n_i * lam
    return np.array(
        [
            [special.jv(order, z_in), special.hankel1(order, lam)],
            [z_in * _jvp(order, z_in), lam * _h1vp(order, lam)],
        ],
        dtype=complex,
    )


def dispersion_det(order: int, n_i: float, lam: complex) -> complex:
    m = dispersion(order, n_i, lam)
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def dispersion_det_derivative(order: int, n_i: float, lam: complex) -> complex:
    """Analytic derivative of the determinant with respect to lambda."""
    z = complex(lam)
    zi = n_i * z
    j = special.jv(order, zi)
    jp = _jvp(order, zi)
    jpp = (special.jv(order - 2, zi) - 2 * special.jv(order, zi) + special.jv(order + 2, zi)) / 4.0
    h = special.hankel1(order, z)
    hp = _h1vp(order, z)
    hpp = (special.hankel1(order - 2, z) - 2 * special.hankel1(order, z) + special.hankel1(order + 2, z)) / 4.0
    # det = j(n z) * z h'(z) - h(z) * n z j'(n z)
    t1 = n_i * jp * (z * hp) + j * (hp + z * hpp)
    t2 = hp * (n_i * z * jp) + h * (n_i * jp + n_i * n_i * z * jpp)
    return t1 - t2


def newton_refine(
    order: int, n_i: float, lam0: complex, tol: float = 1e-12, max_iter: int = 60
) -> complex:
    """Newton iteration on the dispersion determinant."""
    lam = complex(lam0)
    for _ in range(max_iter):
        f = dispersion_det(order, n_i, lam)
        fp = dispersion_det_derivative(order, n_i, lam)
        if fp == 0:
            break
        step = f / fp
        lam = lam - step
        if abs(step) < tol * max(1.0, abs(lam)):
            break
    return lam


@dataclass
class BeynConfig:
    """Circular-contour configuration for the contour-integral eigensolver."""

    center: complex
    radius: float
    quadrature_points: int = 64
    probe_columns: int = 4
    rank_tolerance: float = 1e-8
    residual_tolerance: float = 1e-6

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidParameterError("contour radius must be positive")
        if self.quadrature_points < 32:
            raise InvalidParameterError("need at least 32 quadrature points")
        for name in ("rank_tolerance", "residual_tolerance"):
            v = getattr(self, name)
            if not (0 < v < 1):
                raise InvalidParameterError(f"{name} must lie in (0, 1)")


@dataclass
class SpectrumEstimate:
    """Complex eigenvalue approximations with provenance."""

    eigenvalues: list = field(default_factory=list)  # dicts: lambda, order_index, residual
    provenance: str = "beyn_exact"  # beyn_exact | surrogate_pole


def beyn_solve(matrix_fn, config: BeynConfig, order_index=None) -> SpectrumEstimate:
    """Eigenvalues of a holomorphic small-matrix function inside a circle.

    Trapezoid contour moments of F(z)^-1 feed a rank-revealing linearization;
    block-Hankel padding handles more eigenvalues than the matrix dimension.
    Raises ContourError when the contour passes too close to an eigenvalue
    (moment blow-up); returns an empty estimate when nothing is inside.
    """
    dim = np.asarray(matrix_fn(config.center)).shape[0]
    depth = max(1, -(-config.probe_columns // dim))  # ceil
    nq = config.quadrature_points
    angles = 2.0 * np.pi * np.arange(nq) / nq
    zs = config.center + config.radius * np.exp(1j * angles)

    # constant column scaling keeps the moments finite when the two solution
    # families differ by many orders of magnitude (high angular modes)
    f_center = np.asarray(matrix_fn(config.center), dtype=complex)
    colscale = np.linalg.norm(f_center, axis=0)
    colscale[colscale == 0] = 1.0

    inv_samples = np.empty((nq, dim, dim), dtype=complex)
    eye = np.eye(dim, dtype=complex)
    for i, z in enumerate(zs):
        f = np.asarray(matrix_fn(z), dtype=complex) / colscale[None, :]
        try:
            inv_samples[i] = np.linalg.solve(f, eye)
        except np.linalg.LinAlgError as exc:
            raise ContourError(f"singular matrix on the contour at z={z}") from exc
    blowup = np.abs(inv_samples).max()
    if not np.isfinite(blowup) or blowup > 1e12:
        raise ContourError(
            f"contour moment blow-up (max |F^-1| = {blowup:.2e}); "
            "an eigenvalue lies on or near the contour"
        )

    # moments A_m = (1/2 pi i) oint z^m F(z)^-1 dz, trapezoid on the circle
    moments = []
    dz = 1j * config.radius * np.exp(1j * angles)  # dz/dtheta
    for m in range(2 * depth):
        wz = (zs ** m) * dz / (1j * nq)
        moments.append(np.tensordot(wz, inv_samples, axes=(0, 0)))

    h0 = np.block([[moments[i + j] for j in range(depth)] for i in range(depth)])
    h1 = np.block([[moments[i + j + 1] for j in range(depth)] for i in range(depth)])
    u, s, vh = np.linalg.svd(h0)
    if s[0] == 0:
        return SpectrumEstimate(eigenvalues=[], provenance="beyn_exact")
    keep = s > config.rank_tolerance * s[0]
    rank = int(np.sum(keep))
    if rank == 0:
        return SpectrumEstimate(eigenvalues=[], provenance="beyn_exact")
    u = u[:, :rank]
    s = s[:rank]
    vh = vh[:rank, :]
    b = (u.conj().T @ h1 @ vh.conj().T) / s[None, :]
    vals = np.linalg.eigvals(b)
    vals = vals[np.abs(vals - config.center) < config.radius]

    entries = []
    for lam in vals:
        f = np.asarray(matrix_fn(lam), dtype=complex) / colscale[None, :]
        sv = np.linalg.svd(f, compute_uv=False)
        residual = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
        if residual <= config.residual_tolerance:
            entries.append(
                {"lambda": complex(lam), "order_index": order_index, "residual": residual}
            )
    entries.sort(key=lambda e: (e["lambda"].real, e["lambda"].imag))
    return SpectrumEstimate(eigenvalues=entries, provenance="beyn_exact")


def _hex_tile_centers(re0, re1, im0, im1, radius: float, spacing: float):
    rows = []
    y = im0
    dy = spacing * np.sqrt(3.0) / 2.0
    row = 0
    while y <= im1 + dy:
        x0 = re0 + (spacing / 2.0 if row % 2 else 0.0)
        x = x0
        while x <= re1 + spacing:
            rows.append(complex(x, min(y, im1)))
            x += spacing
        y += dy
        row += 1
    return rows


def exact_disk_spectrum(
    n_i: float,
    region,
    max_order: int = 30,
    quadrature_points: int = 64,
    rank_tolerance: float = 1e-8,
    residual_tolerance: float = 1e-6,
    tile_radius: float = 0.35,
    dedupe_tol: float = 1e-6,
) -> SpectrumEstimate:
    """All disk eigenvalues in a rectangle [re0, re1] x [im0, im1 <= 0].

    Sweeps angular orders from zero upward, covering the rectangle with
    overlapping circular contours; stops early once two consecutive orders
    contribute nothing.  Eigenvalues with tiny positive imaginary part from
    contour-quadrature noise are clamped to the real axis.
    """
    re0, re1, im0, im1 = map(float, region)
    if im1 > 1e-9:
        raise InvalidParameterError("region must lie below or touch the real axis")
    centers = _hex_tile_centers(re0, re1, im0, im1, tile_radius, spacing=tile_radius)
    found = []
    misses = 0
    for order in range(max_order + 1):
        got_any = False
        for c in centers:
            cfg = BeynConfig(
                center=c,
                radius=tile_radius,
                quadrature_points=quadrature_points,
                rank_tolerance=rank_tolerance,
                residual_tolerance=residual_tolerance,
            )
            try:
                est = beyn_solve(lambda z: dispersion(order, n_i, z), cfg, order_index=order)
            except ContourError:
                cfg = BeynConfig(
                    center=c,
                    radius=tile_radius * 1.043,
                    quadrature_points=quadrature_points,
                    rank_tolerance=rank_tolerance,
                    residual_tolerance=residual_tolerance,
                )
                est = beyn_solve(lambda z: dispersion(order, n_i, z), cfg, order_index=order)
            for e in est.eigenvalues:
                lam = e["lambda"]
                if lam.imag > 1e-9:
                    continue
                if lam.imag > 0:
                    lam = complex(lam.real, 0.0)
                if not (re0 <= lam.real <= re1 and im0 <= lam.imag <= im1 + 1e-12):
                    continue
                e = dict(e, **{"lambda": lam})
                dup = False
                for other in found:
                    if abs(other["lambda"] - lam) < dedupe_tol:
                        dup = True
                        if e["residual"] < other["residual"]:
                            other.update(e)
                        break
                if not dup:
                    found.append(e)
                    got_any = True
        misses = 0 if got_any else misses + 1
        if misses >= 2:
            break
    found.sort(key=lambda e: (e["lambda"].real, e["lambda"].imag))
    return SpectrumEstimate(eigenvalues=found, provenance="beyn_exact")


def spectrum_to_csv(est: SpectrumEstimate, path) -> None:
    """Write eigenvalues as CSV rows (nu, re, im, residual)."""
    with open(path, "w") as fh:
        fh.write("nu,re,im,residual\n")
        for e in est.eigenvalues:
            lam = e["lambda"]
            nu = e["order_index"] if e["order_index"] is not None else -1
            fh.write(f"{nu},{lam.real:.15g},{lam.imag:.15g},{e['residual']:.6g}\n")
