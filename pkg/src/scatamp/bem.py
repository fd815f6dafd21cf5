"""Galerkin P1 boundary-element assembly for the 2D transmission problem.

Builds the mass matrix, the compound boundary-operator matrix (the interior
Calderon projector blocks: single layer, double layer, its adjoint, and the
hypersingular operator), the transmission system matrix, and the normalized
solution operator whose largest singular value is the field amplification.

Quadrature: panels are straight segments.  Well-separated panel pairs use a
tensor Gauss rule of the configured polynomial order.  Coincident and
corner-adjacent pairs split the logarithmic kernel part analytically
(H_0(z) - (2i/pi) J_0(z) ln z is entire, likewise for H_1 up to its 1/z pole)
and integrate it with a log-weighted Gauss rule; corner pairs additionally use
a Duffy-type change of variables, whose Jacobian absorbs the adjoint-kernel
1/r behavior.  The hypersingular block is assembled through integration by
parts against arclength derivatives, which needs weakly singular kernels only.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.linalg import lu_factor, lu_solve

from .errors import NotSPDError, SingularSystemError
from .geometry import BoundaryMesh
from .quadrature import gauss01, gauss_log01

INV_2PI = 1.0 / (2.0 * np.pi)


def _gauss_points(order: int) -> int:
    # polynomial exactness `order` needs ceil((order+1)/2) Gauss points
    return (int(order) + 2) // 2


def assemble_mass(mesh: BoundaryMesh) -> np.ndarray:
    """[L2]^2 mass matrix: two identical P1 curve mass blocks on the diagonal."""
    m1 = _mass_block(mesh)
    n = mesh.n_nodes
    mass = np.zeros((2 * n, 2 * n))
    mass[:n, :n] = m1
    mass[n:, n:] = m1
    return mass


def _mass_block(mesh: BoundaryMesh) -> np.ndarray:
    n = mesh.n_nodes
    m1 = np.zeros((n, n))
    idx = np.arange(n)
    nxt = (idx + 1) % n
    L = mesh.panel_lengths
    np.add.at(m1, (idx, idx), L / 3.0)
    np.add.at(m1, (nxt, nxt), L / 3.0)
    np.add.at(m1, (idx, nxt), L / 6.0)
    np.add.at(m1, (nxt, idx), L / 6.0)
    return m1


def sqrt_mass(mass: np.ndarray) -> np.ndarray:
    """Symmetric square root of an SPD matrix via eigendecomposition."""
    if not np.allclose(mass, mass.T, rtol=0, atol=1e-12 * np.abs(mass).max()):
        raise NotSPDError("matrix is not symmetric")
    evals, evecs = np.linalg.eigh(mass)
    if evals.min() <= 1e-14 * evals.max():
        raise NotSPDError("matrix is not positive definite")
    root = (evecs * np.sqrt(evals)) @ evecs.T
    return 0.5 * (root + root.T)


# ---------------------------------------------------------------------------
# Kernel helpers
# ---------------------------------------------------------------------------
def _h_parts(z: np.ndarray):
    """J0, Y0, J1, Y1 at real positive arguments."""
    return special.j0(z), special.y0(z), special.j1(z), special.y1(z)


def _kernel_values(kappa: float, r: np.ndarray, dn_y: np.ndarray, dn_x: np.ndarray):
    """Single-layer, double-layer, and adjoint double-layer kernels.

    kV  = (i/4) H_0(kappa r)
    kK  = (i kappa/4) H_1(kappa r) (x-y).n(y)/r      (double layer)
    kKs = -(i kappa/4) H_1(kappa r) (x-y).n(x)/r     (adjoint double layer)
    """
    j0, y0, j1, y1 = _h_parts(kappa * r)
    kV = np.empty(r.shape, dtype=complex)
    kV.real = -0.25 * y0
    kV.imag = 0.25 * j0
    c = 0.25 * kappa
    kK = np.empty(r.shape, dtype=complex)
    kK.real = -c * y1 * dn_y
    kK.imag = c * j1 * dn_y
    kKs = np.empty(r.shape, dtype=complex)
    kKs.real = c * y1 * dn_x
    kKs.imag = -c * j1 * dn_x
    return kV, kK, kKs


def _log_coefficients(kappa: float, r: np.ndarray, dn_y: np.ndarray, dn_x: np.ndarray):
    """Coefficients of ln(r) in the kernels of _kernel_values."""
    z = kappa * r
    j0 = special.j0(z)
    j1 = special.j1(z)
    cV = -INV_2PI * j0
    cK = -(kappa * INV_2PI) * j1 * dn_y
    cKs = (kappa * INV_2PI) * j1 * dn_x
    return cV, cK, cKs


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------
def _calderon_blocks(mesh: BoundaryMesh, kappas, order: int):
    """Galerkin matrices (V, K, K*, W) for each requested wavenumber.

    Geometry is computed once and shared across wavenumbers.  Returns a list
    of dicts with keys 'V', 'K', 'Ks', 'W' (each n x n complex).
    """
    n = mesh.n_nodes
    Q = _gauss_points(order)
    gs, gw = gauss01(Q)
    starts = mesh.nodes
    chords = np.roll(mesh.nodes, -1, axis=0) - mesh.nodes
    L = mesh.panel_lengths
    tau = mesh.panel_tangents
    nrm = mesh.outward_normals

    # ---- far field: all panel pairs on a tensor Gauss rule -----------------
    X = starts[:, None, :] + gs[None, :, None] * chords[:, None, :]  # (n, Q, 2)
    P = X.reshape(n * Q, 2)
    PN = np.repeat(nrm, Q, axis=0)

    diffx = P[:, 0, None] - P[None, :, 0]
    diffy = P[:, 1, None] - P[None, :, 1]
    r = np.hypot(diffx, diffy)
    np.fill_diagonal(r, 1.0)  # masked later; keeps ufuncs finite

    pndot = P @ PN.T                     # P_i . n(j)
    sdot = np.einsum("ij,ij->i", P, PN)  # P_i . n(i)
    dn_y = (pndot - sdot[None, :]) / r
    dn_x = (sdot[:, None] - pndot.T) / r
    del pndot, diffx, diffy

    WS = gw[:, None] * np.stack([1.0 - gs, gs], axis=1)  # (Q, 2) weighted shapes
    LL = L[:, None] * L[None, :]
    ttdot = tau @ tau.T
    dsign = np.array([-1.0, 1.0])

    offset = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    near = (offset == 0) | (offset == 1) | (offset == n - 1)

    results = []
    for kappa in kappas:
        kV, kK, kKs = _kernel_values(float(kappa), r, dn_y, dn_x)
        blocks = {}
        for name, ker in (("V", kV), ("K", kK), ("Ks", kKs)):
            k4 = ker.reshape(n, Q, n, Q)
            blk = np.einsum("pqrs,qa,sb->parb", k4, WS, WS, optimize=True)
            blk *= LL[:, None, :, None]
            blk *= ~near[:, None, :, None]
            blocks[name] = blk
        sg = np.einsum(
            "pqrs,q,s->pr", kV.reshape(n, Q, n, Q), gw, gw, optimize=True
        )
        sg[near] = 0.0
        blocks["SG"] = sg
        results.append(blocks)
    del kV, kK, kKs, r, dn_y, dn_x

    # ---- singular corrections ----------------------------------------------
    for kappa, blocks in zip(kappas, results):
        vs, sgs = _self_pairs(mesh, float(kappa), Q)
        vn, kn, ksn, sgn = _adjacent_pairs(mesh, float(kappa), Q, direction=+1)
        vp, kp, ksp, sgp = _adjacent_pairs(mesh, float(kappa), Q, direction=-1)

        idx = np.arange(n)
        nxt = (idx + 1) % n
        prv = (idx - 1) % n

        Vb = blocks["V"]
        Kb = blocks["K"]
        Ksb = blocks["Ks"]
        SGb = blocks["SG"]
        Vb[idx, :, idx, :] = vs
        SGb[idx, idx] = sgs
        Vb[idx, :, nxt, :] = vn
        Kb[idx, :, nxt, :] = kn
        Ksb[idx, :, nxt, :] = ksn
        SGb[idx, nxt] = sgn
        Vb[idx, :, prv, :] = vp
        Kb[idx, :, prv, :] = kp
        Ksb[idx, :, prv, :] = ksp
        SGb[idx, prv] = sgp

        # hypersingular block by integration by parts:
        # <W phi, psi> = <V d_s phi, d_s psi> - kappa^2 <V phi tau, psi tau>
        Wb = (
            dsign[None, :, None, None] * dsign[None, None, None, :] * SGb[:, None, :, None]
            - (kappa ** 2) * ttdot[:, None, :, None] * Vb
        )
        blocks["W"] = _scatter(Wb, n)
        blocks["V"] = _scatter(Vb, n)
        blocks["K"] = _scatter(Kb, n)
        blocks["Ks"] = _scatter(Ksb, n)
        del blocks["SG"]
    return results


def _scatter(blk: np.ndarray, n: int) -> np.ndarray:
    """Accumulate (panel, alpha, panel', beta) local blocks into node space."""
    out = np.zeros((n, n), dtype=complex)
    for a in range(2):
        for b in range(2):
            out += np.roll(blk[:, a, :, b], (a, b), axis=(0, 1))
    return out


def _self_pairs(mesh: BoundaryMesh, kappa: float, Q: int):
    """V local blocks and unit-square kernel integrals on coincident panels."""
    gs, gw = gauss01(Q)
    gs2, gw2 = gauss01(Q + 1)  # distinct nodes: avoids r = 0 on the diagonal
    ul, wl = gauss_log01(Q)
    L = mesh.panel_lengths  # (n,)
    n = len(L)

    def kern(rr):
        z = kappa * rr
        j0, y0 = special.j0(z), special.y0(z)
        kv = np.empty(rr.shape, dtype=complex)
        kv.real = -0.25 * y0
        kv.imag = 0.25 * j0
        return kv

    def clog(rr):
        return -INV_2PI * special.j0(kappa * rr)

    shapes = np.stack([1.0 - gs, gs], axis=1)  # (Q, 2)
    shapes2 = np.stack([1.0 - gs2, gs2], axis=1)

    # smooth part: kernel - clog * ln|s-t| on a (Q, Q+1) tensor rule; the
    # ln(panel length) piece of ln r stays here so it is integrated exactly
    smat = np.abs(gs[:, None] - gs2[None, :])           # (Q, Q+1)
    rr = L[:, None, None] * smat[None, :, :]            # (n, Q, Q+1)
    smooth = kern(rr) - clog(rr) * np.log(smat)[None, :, :]
    wsm = (gw[:, None] * gw2[None, :])[None, :, :] * smooth
    v_sm = np.einsum("nqr,qa,rb->nab", wsm, shapes, shapes2, optimize=True)
    sg_sm = wsm.sum(axis=(1, 2))

    # log part: int int f(s,t) clog(r) ln|s-t| ds dt, split at t = s;
    # substituting t = s -/+ scale*u (scale = s resp. 1-s) gives a
    # scale*ln(scale) piece (log-weighted rule in the outer variable) and a
    # scale*ln(u) piece (log-weighted rule in the inner variable)
    v_lg = np.zeros((n, 2, 2), dtype=complex)
    sg_lg = np.zeros(n, dtype=complex)
    for left in (True, False):
        # (outer nodes, outer weights incl. the scale factor, inner nodes/weights)
        combos = (
            (ul if left else 1.0 - ul, -wl * ul, gs, gw),
            (gs, gw * (gs if left else 1.0 - gs), ul, -wl),
        )
        for snod, swgt, unod, uwgt in combos:
            scale = snod if left else 1.0 - snod
            tm = snod[:, None] - (scale[:, None] * unod[None, :] if left else -(scale[:, None] * unod[None, :]))
            dist = scale[:, None] * unod[None, :]
            rr = L[:, None, None] * dist[None, :, :]
            cv = clog(rr)
            ssh = np.stack([1.0 - snod, snod], axis=1)  # (Qs, 2)
            tsh = np.stack([1.0 - tm, tm], axis=-1)     # (Qs, Qu, 2)
            wq = swgt[:, None] * uwgt[None, :]
            wcv = wq[None, :, :] * cv
            v_lg += np.einsum("nqu,qa,qub->nab", wcv, ssh, tsh, optimize=True)
            sg_lg += wcv.sum(axis=(1, 2))

    v_loc = (L ** 2)[:, None, None] * (v_sm + v_lg)
    sg_loc = sg_sm + sg_lg
    return v_loc, sg_loc


def _adjacent_pairs(mesh: BoundaryMesh, kappa: float, Q: int, direction: int):
    """Local blocks for panel pairs sharing one corner node.

    direction=+1: y panel follows the x panel (shared node = x end);
    direction=-1: y panel precedes it (shared node = x start).
    Uses Duffy coordinates (a, b) measured from the corner; each triangle
    {b <= a}, {a <= b} maps to the unit square with Jacobian u.
    """
    gs, gw = gauss01(Q)
    ul, wl = gauss_log01(Q)
    n = mesh.n_nodes
    L = mesh.panel_lengths
    tau = mesh.panel_tangents
    nrm = mesh.outward_normals
    idx = np.arange(n)
    jdx = (idx + direction) % n

    Lx, Ly = L[idx], L[jdx]
    if direction == +1:
        ux = -(Lx[:, None]) * tau[idx]  # x = corner + a*ux, a = 1-s
        uy = (Ly[:, None]) * tau[jdx]   # y = corner + b*uy, b = t
    else:
        ux = (Lx[:, None]) * tau[idx]   # a = s
        uy = -(Ly[:, None]) * tau[jdx]  # b = 1-t

    nx, ny = nrm[idx], nrm[jdx]
    uxux = np.einsum("ni,ni->n", ux, ux)
    uyuy = np.einsum("ni,ni->n", uy, uy)
    uxuy = np.einsum("ni,ni->n", ux, uy)
    ux_ny = np.einsum("ni,ni->n", ux, ny)
    uy_nx = np.einsum("ni,ni->n", uy, nx)

    def shapes_from_corner(avals, flip):
        # local P1 shapes in the original panel parameter; flip=True when the
        # corner sits at parameter 1 (a = 1 - s)
        s = 1.0 - avals if flip else avals
        return np.stack([1.0 - s, s], axis=-1)

    flip_x = direction == +1
    flip_y = direction == -1

    v_loc = np.zeros((n, 2, 2), dtype=complex)
    k_loc = np.zeros((n, 2, 2), dtype=complex)
    ks_loc = np.zeros((n, 2, 2), dtype=complex)
    sg_loc = np.zeros(n, dtype=complex)

    for tri in (0, 1):
        for nodes, is_log in ((gs, False), (ul, True)):
            u = nodes[:, None] * np.ones((1, Q))     # (Qu, Qv)
            v = np.ones((len(nodes), 1)) * gs[None, :]
            if tri == 0:
                a, b = u, u * v
            else:
                a, b = u * v, u
            # r and kernel direction factors; r is exactly u * R(v)
            a2, b2, ab = a * a, b * b, a * b
            r = np.sqrt(
                a2[None] * uxux[:, None, None]
                + b2[None] * uyuy[:, None, None]
                - 2.0 * ab[None] * uxuy[:, None, None]
            )
            # diff = a*ux - b*uy; uy is tangent to the y panel, ux to the x one
            dn_y = a[None] * ux_ny[:, None, None] / r
            dn_x = -b[None] * uy_nx[:, None, None] / r
            kV, kK, kKs = _kernel_values(kappa, r, dn_y, dn_x)
            cV, cK, cKs = _log_coefficients(kappa, r, dn_y, dn_x)

            sha = shapes_from_corner(a, flip_x)      # (Qu, Qv, 2)
            shb = shapes_from_corner(b, flip_y)
            if is_log:
                # log-rule contribution: - sum wl wq [u * f * clog]
                wq = -(wl[:, None] * gw[None, :]) * u
                kerV, kerK, kerKs = cV, cK, cKs
            else:
                # tensor part: u * f * (kernel - clog * ln u)
                wq = (gw[:, None] * gw[None, :]) * u
                lnu = np.log(u)
                kerV = kV - cV * lnu
                kerK = kK - cK * lnu
                kerKs = kKs - cKs * lnu

            wv = wq[None] * kerV
            v_loc += np.einsum("nuv,uva,uvb->nab", wv, sha, shb, optimize=True)
            sg_loc += wv.sum(axis=(1, 2))
            k_loc += np.einsum("nuv,uva,uvb->nab", wq[None] * kerK, sha, shb, optimize=True)
            ks_loc += np.einsum("nuv,uva,uvb->nab", wq[None] * kerKs, sha, shb, optimize=True)

    LL = (Lx * Ly)[:, None, None]
    return LL * v_loc, LL * k_loc, LL * ks_loc, sg_loc


# ---------------------------------------------------------------------------
# System-level API
# ---------------------------------------------------------------------------
@dataclass
class BemSystem:
    """Mesh plus wavenumber-independent matrices for one scatterer."""

    mesh: BoundaryMesh
    refraction_inner: float
    quadrature_order: int
    mass: np.ndarray
    mass_sqrt: np.ndarray
    mass_block: np.ndarray = field(repr=False, default=None)
    mass_sqrt_block: np.ndarray = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return 2 * self.mesh.n_nodes


def build_system(
    mesh: BoundaryMesh, refraction_inner: float, quadrature_order: int = 11
) -> BemSystem:
    """Assemble the mass matrix and its symmetric square root for a mesh."""
    if refraction_inner <= 0:
        raise NotSPDError(f"refraction index must be positive, got {refraction_inner}")
    m1 = _mass_block(mesh)
    sq1 = sqrt_mass(m1)
    n = mesh.n_nodes
    mass = np.zeros((2 * n, 2 * n))
    mass[:n, :n] = m1
    mass[n:, n:] = m1
    msqrt = np.zeros((2 * n, 2 * n))
    msqrt[:n, :n] = sq1
    msqrt[n:, n:] = sq1
    return BemSystem(
        mesh=mesh,
        refraction_inner=float(refraction_inner),
        quadrature_order=int(quadrature_order),
        mass=mass,
        mass_sqrt=msqrt,
        mass_block=m1,
        mass_sqrt_block=sq1,
    )


@dataclass
class OperatorMatrix:
    """Dense wavenumber-dependent matrix with a role tag."""

    wavenumber: float
    entries: np.ndarray
    kind: str  # "calderon" | "system" | "solution"


def _stack_calderon(mesh: BoundaryMesh, m1: np.ndarray, blocks: dict) -> np.ndarray:
    n = mesh.n_nodes
    out = np.empty((2 * n, 2 * n), dtype=complex)
    out[:n, :n] = 0.5 * m1 - blocks["K"]
    out[:n, n:] = blocks["V"]
    out[n:, :n] = blocks["W"]
    out[n:, n:] = 0.5 * m1 + blocks["Ks"]
    return out


def assemble_calderon(system: BemSystem, wavenumber: float) -> OperatorMatrix:
    """Interior Calderon-projector matrix at one wavenumber.

    Traces of any incident field solving the free Helmholtz equation form an
    eigenvector with unit eigenvalue of mass^-1 times this matrix.
    """
    if wavenumber <= 0:
        raise SingularSystemError(f"wavenumber must be positive, got {wavenumber}")
    blocks = _calderon_blocks(system.mesh, [wavenumber], system.quadrature_order)[0]
    entries = _stack_calderon(system.mesh, system.mass_block, blocks)
    return OperatorMatrix(wavenumber=float(wavenumber), entries=entries, kind="calderon")


def assemble_system_matrix(system: BemSystem, wavenumber: float) -> OperatorMatrix:
    """Transmission system matrix: mass + calderon(k) - calderon(k * n_i)."""
    if wavenumber <= 0:
        raise SingularSystemError(f"wavenumber must be positive, got {wavenumber}")
    ni = system.refraction_inner
    if ni == 1.0:
        entries = system.mass.astype(complex)
    else:
        outer, inner = _calderon_blocks(
            system.mesh, [wavenumber, wavenumber * ni], system.quadrature_order
        )
        b_out = _stack_calderon(system.mesh, system.mass_block, outer)
        b_in = _stack_calderon(system.mesh, system.mass_block, inner)
        entries = system.mass + b_out - b_in
    return OperatorMatrix(wavenumber=float(wavenumber), entries=entries, kind="system")


class SolutionOperator:
    """Factorized normalized solution operator at one wavenumber.

    Wraps sqrt(M) A(k)^-1 sqrt(M): one LU factorization per wavenumber, then
    matrix-vector products (and adjoint products) cost triangular solves only.
    """

    def __init__(self, system: BemSystem, wavenumber: float):
        self.system = system
        self.wavenumber = float(wavenumber)
        amat = assemble_system_matrix(system, wavenumber).entries
        if not np.all(np.isfinite(amat)):
            raise SingularSystemError(f"non-finite system matrix at k={wavenumber}")
        try:
            self._lu = lu_factor(amat)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise SingularSystemError(f"factorization failed at k={wavenumber}") from exc

    def _solve(self, rhs: np.ndarray, adjoint: bool = False) -> np.ndarray:
        out = lu_solve(self._lu, rhs, trans=2 if adjoint else 0)
        if not np.all(np.isfinite(out)):
            raise SingularSystemError(
                f"singular solve at k={self.wavenumber} (near a real eigenvalue?)"
            )
        return out

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """sqrt(M) A^-1 sqrt(M) vec."""
        return self.system.mass_sqrt @ self._solve(self.system.mass_sqrt @ vec)

    def apply_adjoint(self, vec: np.ndarray) -> np.ndarray:
        """Conjugate-transpose product (mass factors are real symmetric)."""
        return self.system.mass_sqrt @ self._solve(
            self.system.mass_sqrt @ vec, adjoint=True
        )

    def matrix(self) -> np.ndarray:
        """Dense operator, by columnwise solves (no explicit inverse)."""
        return self.system.mass_sqrt @ self._solve(
            self.system.mass_sqrt.astype(complex)
        )


def solution_operator(system: BemSystem, wavenumber: float) -> OperatorMatrix:
    """Dense normalized solution operator at one wavenumber."""
    op = SolutionOperator(system, wavenumber)
    return OperatorMatrix(wavenumber=float(wavenumber), entries=op.matrix(), kind="solution")


def apply_solution_operator(
    system: BemSystem, wavenumber: float, vector: np.ndarray
) -> np.ndarray:
    """Solution operator times a vector, using a single factorization."""
    return SolutionOperator(system, wavenumber).apply(vector)


def dump_matrix_csv(opmat: OperatorMatrix, path) -> None:
    """Write complex entries as CSV rows (row, col, re, im)."""
    with open(path, "w") as fh:
        fh.write("row,col,re,im\n")
        ent = opmat.entries
        for i in range(ent.shape[0]):
            for j in range(ent.shape[1]):
                z = ent[i, j]
                fh.write(f"{i},{j},{z.real:.15g},{z.imag:.15g}\n")
