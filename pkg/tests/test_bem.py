"""Boundary-element assembly: mass, operator blocks, and the solution operator."""

import numpy as np
import pytest
from scipy import integrate, special

from scatamp.bem import (
    SolutionOperator,
    _adjacent_pairs,
    _calderon_blocks,
    _self_pairs,
    apply_solution_operator,
    assemble_calderon,
    assemble_mass,
    assemble_system_matrix,
    build_system,
    dump_matrix_csv,
    solution_operator,
    sqrt_mass,
)
from scatamp.errors import NotSPDError
from scatamp.geometry import build_mesh, make_curve

N_I = np.sqrt(20.0)


@pytest.fixture(scope="module")
def disk64():
    mesh = build_mesh(make_curve("disk"), 64)
    return build_system(mesh, N_I)


def plane_wave_residual(system, k, direction=(1.0, 0.0)):
    mesh = system.mesh
    d = np.asarray(direction)
    phase = np.exp(1j * k * (mesh.nodes @ d))
    g = np.concatenate([phase, 1j * k * (mesh.nodal_normals @ d) * phase])
    bmat = assemble_calderon(system, k).entries
    r = np.linalg.solve(system.mass, bmat @ g) - g
    mnorm = lambda v: np.sqrt(np.real(np.conj(v) @ (system.mass @ v)))
    return mnorm(r) / mnorm(g)


def test_mass_matrix_analytic_values():
    mesh = build_mesh(make_curve("disk"), 40)
    mass = assemble_mass(mesh)
    n = 40
    h = mesh.panel_lengths[0]
    block = mass[:n, :n]
    assert np.allclose(np.diag(block), 2 * h / 3)
    assert block[0, 1] == pytest.approx(h / 6)
    assert block[3, 2] == pytest.approx(h / 6)
    # partition of unity: row sums equal the two half-panel lengths
    assert np.allclose(block.sum(axis=1), h)
    # off-diagonal blocks vanish
    assert np.all(mass[:n, n:] == 0)
    assert np.all(mass[n:, :n] == 0)
    evals = np.linalg.eigvalsh(block)
    assert evals.min() > 0


def test_sqrt_mass():
    assert np.allclose(sqrt_mass(np.eye(3)), np.eye(3))
    assert np.allclose(sqrt_mass(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    mesh = build_mesh(make_curve("disk"), 32)
    m1 = assemble_mass(mesh)[:32, :32]
    r = sqrt_mass(m1)
    assert np.allclose(r, r.T)
    assert np.linalg.norm(r @ r - m1) <= 1e-10 * np.linalg.norm(m1)
    with pytest.raises(NotSPDError):
        sqrt_mass(np.diag([1.0, -1.0]))
    with pytest.raises(NotSPDError):
        sqrt_mass(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_system_sqrt_consistency(disk64):
    assert np.linalg.norm(disk64.mass_sqrt @ disk64.mass_sqrt - disk64.mass) <= (
        1e-10 * np.linalg.norm(disk64.mass)
    )


def test_singular_quadrature_against_adaptive_integration():
    # coincident and corner-adjacent single-layer entries vs brute force
    k = 2.0
    mesh = build_mesh(make_curve("disk"), 12)
    L = mesh.panel_lengths
    starts = mesh.nodes
    chords = np.roll(mesh.nodes, -1, axis=0) - mesh.nodes

    vs, sgs = _self_pairs(mesh, k, 6)
    vn, kn, ksn, sgn = _adjacent_pairs(mesh, k, 6, +1)

    def brute_self(al, be):
        def inner(s, part):
            def f(t):
                r = L[0] * abs(s - t)
                v = 0.25j * special.hankel1(0, k * r)
                sh = ((1 - s) if al == 0 else s) * ((1 - t) if be == 0 else t)
                w = v * sh * L[0] * L[0]
                return w.real if part == 0 else w.imag
            return integrate.quad(f, 0, 1, points=[s], limit=300, epsabs=1e-13)[0]
        return (
            integrate.quad(lambda s: inner(s, 0), 0, 1, limit=300, epsabs=1e-12)[0]
            + 1j * integrate.quad(lambda s: inner(s, 1), 0, 1, limit=300, epsabs=1e-12)[0]
        )

    def brute_adjacent(al, be):
        def f(s, t):
            x = starts[0] + s * chords[0]
            y = starts[1] + t * chords[1]
            r = np.hypot(*(x - y))
            sh = ((1 - s) if al == 0 else s) * ((1 - t) if be == 0 else t)
            return 0.25j * special.hankel1(0, k * r) * sh * L[0] * L[1]
        re = integrate.dblquad(lambda t, s: f(s, t).real, 0, 1, 0, 1, epsabs=1e-12)[0]
        im = integrate.dblquad(lambda t, s: f(s, t).imag, 0, 1, 0, 1, epsabs=1e-12)[0]
        return re + 1j * im

    for al in range(2):
        for be in range(2):
            assert abs(vs[0, al, be] - brute_self(al, be)) < 1e-12
            assert abs(vn[0, al, be] - brute_adjacent(al, be)) < 1e-10


def test_quadrature_order_doubling_stability():
    mesh = build_mesh(make_curve("disk"), 100)
    s1 = build_system(mesh, N_I, quadrature_order=11)
    s2 = build_system(mesh, N_I, quadrature_order=22)
    b1 = assemble_calderon(s1, 2.0).entries
    b2 = assemble_calderon(s2, 2.0).entries
    assert np.linalg.norm(b1 - b2) <= 1e-6 * np.linalg.norm(b1)


def test_plane_wave_identity_and_mesh_convergence():
    k = 2.0
    residuals = []
    for n in (50, 100, 200):
        system = build_system(build_mesh(make_curve("disk"), n), N_I)
        residuals.append(plane_wave_residual(system, k))
    assert residuals[1] <= 0.05
    assert residuals[0] > residuals[1] > residuals[2]


def test_calderon_rotational_symmetry(disk64):
    # the disk commutes with the cyclic node shift
    n = disk64.mesh.n_nodes
    bmat = assemble_calderon(disk64, 2.0).entries
    shift = np.roll(np.eye(n), 1, axis=0)
    perm = np.zeros((2 * n, 2 * n))
    perm[:n, :n] = shift
    perm[n:, n:] = shift
    comm = bmat @ perm - perm @ bmat
    assert np.linalg.norm(comm) <= 1e-8 * np.linalg.norm(bmat)


def test_single_layer_block_complex_symmetric(disk64):
    n = disk64.mesh.n_nodes
    bmat = assemble_calderon(disk64, 2.0).entries
    v = bmat[:n, n:]
    assert np.linalg.norm(v - v.T) <= 1e-8 * np.linalg.norm(v)


def test_single_layer_circle_eigenvalue(disk64):
    # V e_m = (i pi / 2) J_m(k) H_m(k) e_m on the unit circle
    n = disk64.mesh.n_nodes
    k = 2.0
    bmat = assemble_calderon(disk64, k).entries
    v = bmat[:n, n:]
    m1 = disk64.mass_block
    for m in (0, 2):
        e = np.exp(1j * m * disk64.mesh.node_params)
        lam = (np.conj(e) @ (v @ e)) / (np.conj(e) @ (m1 @ e))
        exact = 0.5j * np.pi * special.jv(m, k) * special.hankel1(m, k)
        assert abs(lam - exact) <= 2e-3 * abs(exact) + 2e-3


def test_hypersingular_block_against_potential_differences():
    # Independent route to the hypersingular block: the Neumann trace of the
    # double-layer potential, by Richardson-extrapolated one-sided finite
    # differences of off-boundary potential values (averaged over both sides,
    # since that trace is continuous across the boundary).  The assembled
    # block carries the integration-by-parts (coercive) sign, hence the minus.
    k = 1.3
    mesh = build_mesh(make_curve("disk"), 16)
    system = build_system(mesh, N_I)
    n = mesh.n_nodes
    w_block = assemble_calderon(system, k).entries[n:, :n]

    starts = mesh.nodes
    chords = np.roll(mesh.nodes, -1, axis=0) - mesh.nodes
    L = mesh.panel_lengths
    nrm = mesh.outward_normals

    # dense composite quadrature resolves the near-boundary potential values
    gq, gw = np.polynomial.legendre.leggauss(10)
    gq = 0.5 * (gq + 1)
    gw = 0.5 * gw
    sub = 240
    offs = ((np.arange(sub)[:, None] + gq[None, :]) / sub).reshape(-1)
    wsub = np.tile(gw, sub) / sub
    y_flat = (starts[:, None, :] + offs[None, :, None] * chords[:, None, :]).reshape(-1, 2)
    ny = np.repeat(nrm, len(offs), axis=0)
    wq = (wsub[None, :] * L[:, None]).reshape(-1)

    rng = np.random.default_rng(0)
    density = rng.standard_normal(n)
    dens = np.tile(1 - offs, n) * np.repeat(density, len(offs)) + np.tile(offs, n) * np.repeat(
        np.roll(density, -1), len(offs)
    )

    def dlp_batch(z_batch):
        out = np.empty(len(z_batch), dtype=complex)
        for lo in range(0, len(z_batch), 120):
            zc = z_batch[lo : lo + 120]
            diff = zc[:, None, :] - y_flat[None, :, :]
            r = np.linalg.norm(diff, axis=2)
            kern = 0.25j * k * special.hankel1(1, k * r)
            kern *= np.einsum("zji,ji->zj", diff, ny) / r
            out[lo : lo + 120] = kern @ (wq * dens)
        return out

    gq2, gw2 = np.polynomial.legendre.leggauss(16)
    gq2 = 0.5 * (gq2 + 1)
    gw2 = 0.5 * gw2
    eps = 3e-3
    oracle = np.zeros(n, dtype=complex)
    shifts = (2, 1, 0.5, 0.25, -0.25, -0.5, -1, -2)
    for p in range(n):
        x = starts[p][None, :] + gq2[:, None] * chords[p][None, :]
        nu = nrm[p]
        zs = np.concatenate([x + s * eps * nu for s in shifts])
        u = dict(zip(shifts, dlp_batch(zs).reshape(len(shifts), len(gq2))))
        wvals = 0.0
        for sgn in (1, -1):
            d0 = sgn * (u[sgn * 2] - u[sgn * 1]) / eps
            d1 = sgn * (u[sgn * 1] - u[sgn * 0.5]) / (0.5 * eps)
            d2 = sgn * (u[sgn * 0.5] - u[sgn * 0.25]) / (0.25 * eps)
            wvals = wvals + 0.5 * (8 * d2 - 6 * d1 + d0) / 3
        oracle[p] += np.sum(gw2 * L[p] * (1 - gq2) * wvals)
        oracle[(p + 1) % n] += np.sum(gw2 * L[p] * gq2 * wvals)
    galerkin = w_block @ density
    assert np.linalg.norm(galerkin + oracle) <= 1e-3 * np.linalg.norm(oracle)


def test_system_matrix_identity_and_continuity(disk64):
    amat = assemble_system_matrix(disk64, 2.0).entries
    bmat_k = assemble_calderon(disk64, 2.0).entries
    bmat_kn = assemble_calderon(disk64, 2.0 * N_I).entries
    assert np.allclose(amat, disk64.mass + bmat_k - bmat_kn)
    # refraction index one: system matrix equals the mass exactly
    unit = build_system(disk64.mesh, 1.0)
    assert np.array_equal(assemble_system_matrix(unit, 1.7).entries, unit.mass.astype(complex))
    # continuity in the wavenumber
    a2 = assemble_system_matrix(disk64, 2.0 + 1e-6).entries
    assert np.linalg.norm(a2 - amat) <= 1e-3 * np.linalg.norm(amat)


def test_system_matrix_invertibility(disk64):
    for k in (1.0, 2.0, 3.0):
        amat = assemble_system_matrix(disk64, k).entries
        assert np.isfinite(np.linalg.cond(amat))


def test_solution_operator_identity_when_uniform():
    mesh = build_mesh(make_curve("disk"), 24)
    unit = build_system(mesh, 1.0)
    cmat = solution_operator(unit, 2.0).entries
    assert np.allclose(cmat, np.eye(48), atol=1e-10)
    v = np.arange(48) + 1j
    assert np.allclose(apply_solution_operator(unit, 2.0, v), v, atol=1e-10)


def test_solution_operator_solve_residual(disk64):
    k = 1.5
    cmat = solution_operator(disk64, k).entries
    amat = assemble_system_matrix(disk64, k).entries
    msqrt = disk64.mass_sqrt
    minv_sqrt = np.linalg.inv(msqrt)
    resid = amat @ (minv_sqrt @ cmat) - msqrt
    assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(msqrt)


def test_apply_matches_dense_and_linearity(disk64):
    k = 1.9
    op = SolutionOperator(disk64, k)
    cmat = op.matrix()
    rng = np.random.default_rng(5)
    u = rng.standard_normal(disk64.size) + 1j * rng.standard_normal(disk64.size)
    v = rng.standard_normal(disk64.size) + 1j * rng.standard_normal(disk64.size)
    assert np.linalg.norm(op.apply(u) - cmat @ u) <= 1e-10 * np.linalg.norm(cmat @ u)
    lin = op.apply(2.0 * u + 3j * v) - (2.0 * op.apply(u) + 3j * op.apply(v))
    assert np.linalg.norm(lin) <= 1e-10 * np.linalg.norm(op.apply(u))
    adj = op.apply_adjoint(u)
    assert np.linalg.norm(adj - cmat.conj().T @ u) <= 1e-10 * np.linalg.norm(adj)


def test_matrix_dump(tmp_path):
    mesh = build_mesh(make_curve("disk"), 8)
    system = build_system(mesh, 2.0)
    op = assemble_calderon(system, 1.0)
    path = tmp_path / "mat.csv"
    dump_matrix_csv(op, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "row,col,re,im"
    assert len(lines) == 1 + 16 * 16
