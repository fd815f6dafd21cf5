"""Analytic disk eigenvalues: dispersion system and the contour eigensolver."""

import numpy as np
import pytest

from scatamp.disk_spectrum import (
    BeynConfig,
    beyn_solve,
    dispersion,
    dispersion_det,
    dispersion_det_derivative,
    exact_disk_spectrum,
    newton_refine,
    spectrum_to_csv,
)
from scatamp.errors import InvalidParameterError, SingularityError
from scatamp.kernels import bessel_j, hankel1

N_I = np.sqrt(20.0)


def test_dispersion_entries():
    lam = 1.7 - 0.2j
    m = dispersion(3, N_I, lam)
    z = N_I * lam
    assert m[0, 0] == pytest.approx(bessel_j(3, z), rel=1e-12)
    assert m[0, 1] == pytest.approx(hankel1(3, lam), rel=1e-12)
    jp = (bessel_j(2, z) - bessel_j(4, z)) / 2
    hp = (hankel1(2, lam) - hankel1(4, lam)) / 2
    assert m[1, 0] == pytest.approx(z * jp, rel=1e-12)
    assert m[1, 1] == pytest.approx(lam * hp, rel=1e-12)
    with pytest.raises(SingularityError):
        dispersion(0, N_I, 0.0)


def test_dispersion_order_symmetry():
    for lam in (1.3 - 0.1j, 2.4 - 0.02j):
        for nu in (1, 2, 5):
            assert dispersion_det(nu, N_I, lam) == pytest.approx(
                dispersion_det(-nu, N_I, lam), rel=1e-10
            )


def test_dispersion_real_axis_reflection():
    # for real lambda: J real, H(conj) = conj(J) + ... reflection through the
    # Schwarz principle of each Bessel family
    rng = np.random.default_rng(2)
    for lam in rng.uniform(1.0, 3.0, size=20):
        d_up = dispersion_det(2, N_I, complex(lam, 1e-3))
        d_dn = dispersion_det(2, N_I, complex(lam, -1e-3))
        refl = 2 * dispersion_det(2, N_I, complex(lam, 0.0)).real  # noqa: F841
        # J_nu(conj z) = conj(J_nu z); the Hankel column breaks full conjugate
        # symmetry, but the Bessel column obeys it
        m_up = dispersion(2, N_I, complex(lam, 1e-3))
        m_dn = dispersion(2, N_I, complex(lam, -1e-3))
        assert m_dn[0, 0] == pytest.approx(np.conj(m_up[0, 0]), rel=1e-9)
        assert m_dn[1, 0] == pytest.approx(np.conj(m_up[1, 0]), rel=1e-9)
        assert d_up != pytest.approx(d_dn)  # Hankel outgoing condition is one-sided


def test_dispersion_derivative_analytic():
    lam = 2.1 - 0.15j
    h = 1e-6
    for nu in (0, 2, 6):
        fd = (dispersion_det(nu, N_I, lam + h) - dispersion_det(nu, N_I, lam - h)) / (2 * h)
        an = dispersion_det_derivative(nu, N_I, lam)
        assert an == pytest.approx(fd, rel=1e-7)


def test_beyn_linear_scalar_case():
    est = beyn_solve(lambda z: np.diag([z - 2.0, 1.0]), BeynConfig(center=2.0, radius=0.5))
    assert len(est.eigenvalues) == 1
    e = est.eigenvalues[0]
    assert abs(e["lambda"] - 2.0) <= 1e-10
    assert e["residual"] <= 1e-10


def test_beyn_contour_selectivity():
    est = beyn_solve(lambda z: np.diag([z - 2.0, z - 5.0]), BeynConfig(center=2.0, radius=0.5))
    assert [round(e["lambda"].real, 8) for e in est.eigenvalues] == [2.0]
    empty = beyn_solve(lambda z: np.diag([z - 10.0, 1.0]), BeynConfig(center=2.0, radius=0.5))
    assert empty.eigenvalues == []


def test_beyn_quadrature_refinement_stability():
    fn = lambda z: dispersion(3, N_I, z)
    cfg1 = BeynConfig(center=1.15 - 0.05j, radius=0.35, quadrature_points=64)
    cfg2 = BeynConfig(center=1.15 - 0.05j, radius=0.35, quadrature_points=128)
    e1 = beyn_solve(fn, cfg1).eigenvalues
    e2 = beyn_solve(fn, cfg2).eigenvalues
    assert len(e1) == len(e2) > 0
    for a, b in zip(e1, e2):
        assert abs(a["lambda"] - b["lambda"]) <= 1e-8


def test_beyn_dispersion_determinant_and_newton():
    cfg_area = (1.0, 3.0, -0.5, 0.0)
    est = exact_disk_spectrum(N_I, cfg_area, max_order=8)
    assert est.eigenvalues
    for e in est.eigenvalues:
        lam = e["lambda"]
        nu = e["order_index"]
        m = dispersion(nu, N_I, lam)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        scale = np.linalg.norm(m) ** 2
        assert abs(det) <= 1e-8 * scale
        # Newton from a perturbed start returns to the eigenvalue
        start = lam + 1e-4 * (1 + 1j)
        refined = newton_refine(nu, N_I, start)
        assert abs(refined - lam) <= 1e-8


def test_spectrum_region_and_ordering():
    est = exact_disk_spectrum(N_I, (1.0, 3.0, -1.0, 0.0), max_order=20)
    lams = [e["lambda"] for e in est.eigenvalues]
    assert len(lams) >= 15
    assert all(lam.imag <= 0 for lam in lams)
    assert all(1.0 <= lam.real <= 3.0 for lam in lams)
    res = sorted(lams, key=lambda z: z.real)
    assert res == lams
    # sequences approaching the real axis at high order exist
    tiny = [lam for lam in lams if -1e-4 < lam.imag <= 0]
    assert tiny


def test_spectrum_region_validation():
    with pytest.raises(InvalidParameterError):
        exact_disk_spectrum(N_I, (1.0, 3.0, -1.0, 0.5))


def test_spectrum_csv(tmp_path):
    est = exact_disk_spectrum(N_I, (1.0, 1.6, -0.2, 0.0), max_order=4)
    path = tmp_path / "spec.csv"
    spectrum_to_csv(est, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "nu,re,im,residual"
    assert len(lines) == 1 + len(est.eigenvalues)
