"""Field-amplification evaluation over wavenumber grids.

The field amplification at a wavenumber is the largest singular value of the
normalized solution operator.  The direct sweep evaluates it per grid point by
assembly + factorization + SVD; the randomized power-method estimator trades
the SVD for a few matrix-vector products with a random probe.
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .bem import BemSystem, SolutionOperator
from .errors import InvalidParameterError

RPM_ITER_FACTOR = 10.0


@dataclass
class WavenumberGrid:
    """Sorted evaluation grid on [k_min, k_max]; uniform unless overridden."""

    k_min: float
    k_max: float
    count: int
    points: np.ndarray = None

    def __post_init__(self):
        if not (0 < self.k_min < self.k_max):
            raise InvalidParameterError(
                f"need 0 < k_min < k_max, got [{self.k_min}, {self.k_max}]"
            )
        if self.count < 1:
            raise InvalidParameterError(f"count must be positive, got {self.count}")
        if self.points is None:
            self.points = np.linspace(self.k_min, self.k_max, self.count)
        else:
            self.points = np.asarray(self.points, dtype=float)
            if len(self.points) != self.count:
                raise InvalidParameterError("count must equal len(points)")
            if np.any(np.diff(self.points) <= 0):
                raise InvalidParameterError("points must be strictly increasing")

    @classmethod
    def uniform(cls, k_min: float, k_max: float, count: int) -> "WavenumberGrid":
        return cls(k_min=k_min, k_max=k_max, count=count)

    def subgrid(self, stride: int) -> "WavenumberGrid":
        """Every stride-th point, sharing the exact float values."""
        pts = self.points[::stride]
        return WavenumberGrid(
            k_min=self.k_min, k_max=self.k_max, count=len(pts), points=pts
        )


@dataclass
class AmplificationCurve:
    """Amplification values over a grid, tagged with the producing method."""

    grid: WavenumberGrid
    values: np.ndarray
    method_tag: str  # direct | rational | sketch | hybrid_sum | hybrid_max
    timings: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def field_amplification(system: BemSystem, k: float) -> float:
    """Largest singular value of the solution operator at one wavenumber."""
    op = SolutionOperator(system, k)
    return float(np.linalg.svd(op.matrix(), compute_uv=False)[0])


def spectral_norm_rpm(matrix: np.ndarray, probe: np.ndarray, iterations: int) -> float:
    """Randomized power-method estimate of the spectral norm.

    Equals |C (C*C)^q b| / |(C*C)^q b| with q = iterations; the iterate is
    renormalized every step, so large norms cannot overflow.  Converges upward
    to the largest singular value and never exceeds it.
    """
    matrix = np.asarray(matrix)
    x = np.asarray(probe, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidParameterError("matrix must be square")
    if x.shape != (matrix.shape[0],):
        raise InvalidParameterError("probe length must match matrix dimension")
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ZeroDivisionError("probe vector is zero")
    x = x / nx
    ch = matrix.conj().T
    for _ in range(int(iterations)):
        x = ch @ (matrix @ x)
        nx = np.linalg.norm(x)
        if nx == 0:
            raise ZeroDivisionError("power iterate vanished")
        x = x / nx
    return float(np.linalg.norm(matrix @ x))


def default_rpm_iterations(n_panels: int) -> int:
    """Iteration count floor(10 (1 + ln N_h))."""
    return int(np.floor(RPM_ITER_FACTOR * (1.0 + np.log(n_panels))))


def direct_sweep(
    system: BemSystem,
    grid: WavenumberGrid,
    norm_method: str = "svd",
    seed: int = 0,
    rpm_iterations: int = None,
    rpm_probe_count: int = 1,
) -> AmplificationCurve:
    """Per-point exact evaluation of the amplification over a grid.

    With norm_method="rpm" the SVD is replaced by the randomized estimator
    (the best over rpm_probe_count independent probes, which is still a lower
    bound on the true norm).
    """
    if norm_method not in ("svd", "rpm"):
        raise InvalidParameterError(f"norm_method must be svd or rpm, got {norm_method}")
    values = np.empty(grid.count)
    probes = None
    q = rpm_iterations
    if norm_method == "rpm":
        gen = _rng.stream(seed, "direct-rpm-probe")
        probes = [_rng.complex_gaussian(gen, system.size) for _ in range(max(1, rpm_probe_count))]
        if q is None:
            q = default_rpm_iterations(system.mesh.n_panels)
    t0 = time.perf_counter()
    for i, k in enumerate(grid.points):
        op = SolutionOperator(system, k)
        cmat = op.matrix()
        if norm_method == "svd":
            values[i] = np.linalg.svd(cmat, compute_uv=False)[0]
        else:
            values[i] = max(spectral_norm_rpm(cmat, b, q) for b in probes)
    elapsed = time.perf_counter() - t0
    return AmplificationCurve(
        grid=grid,
        values=values,
        method_tag="direct",
        timings={
            "evaluation_s": elapsed,
            "evaluation_per_point_s": elapsed / grid.count,
        },
        meta={"norm_method": norm_method, "rpm_iterations": q},
    )


def power_norm(
    matrix: np.ndarray,
    start: np.ndarray,
    rel_tol: float = 1e-8,
    max_iter: int = 300,
    mix: np.ndarray = None,
) -> tuple:
    """Spectral norm by power iteration on C*C with a stall-window stop.

    Returns (estimate, final_vector); the vector warm-starts the next
    evaluation in a sweep, where consecutive matrices differ little.  The
    optional mix vector is blended into the start so a warm start can never
    be near-orthogonal to the new dominant singular space (which would park
    the monotone estimate on a lower singular value long enough to fake
    convergence).
    """
    x = start / np.linalg.norm(start)
    if mix is not None:
        x = x + 0.2 * mix / np.linalg.norm(mix)
        x = x / np.linalg.norm(x)
    ch = matrix.conj().T
    prev = 0.0
    est = 0.0
    stall = 0
    for it in range(max_iter):
        y = matrix @ x
        est = np.linalg.norm(y)
        x = ch @ y
        nx = np.linalg.norm(x)
        if nx == 0:
            return 0.0, start
        x = x / nx
        stall = stall + 1 if abs(est - prev) <= rel_tol * max(est, 1e-300) else 0
        if it >= 8 and stall >= 3:
            break
        prev = est
    return float(est), x


def curve_to_csv(curve: AmplificationCurve, path) -> None:
    """Write (k, phi) rows with 12+ significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write("k,phi\n")
        for k, v in zip(curve.grid.points, curve.values):
            fh.write(f"{k:.14e},{v:.14e}\n")


def curve_from_csv(path, method_tag: str = "direct") -> AmplificationCurve:
    """Read a curve written by curve_to_csv."""
    ks, vs = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["k", "phi"]:
            raise InvalidParameterError(f"unexpected curve header {header!r}")
        for row in reader:
            ks.append(float(row[0]))
            vs.append(float(row[1]))
    pts = np.array(ks)
    grid = WavenumberGrid(k_min=pts[0], k_max=pts[-1], count=len(pts), points=pts)
    return AmplificationCurve(grid=grid, values=np.array(vs), method_tag=method_tag)
