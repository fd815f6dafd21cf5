"""Hybrid amplification surrogate: identified poles plus collocation fits.

A one-sided sketch of the solution operator is approximated by a rational
surrogate; its poles, filtered and deduplicated, define radial basis functions
1/|k - pole|.  Exact amplification samples at the pole real parts (plus
optional uniformly spaced oversampling points) fit the radial coefficients,
either for the sum of pole terms or for their pointwise maximum, with an
optional piecewise-linear correction basis.  Evaluation cost is independent
of the boundary-element resolution.
"""

import json
import time
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .amplification import AmplificationCurve, WavenumberGrid, field_amplification
from .bem import BemSystem, SolutionOperator
from .errors import EmptyPoleSetError, InvalidParameterError
from .rational import VECTOR_FLOOR_QUANTILE, PoleSet, greedy_sample, poles

EVAL_FLOOR = 1e-12


def filter_poles_close(all_poles: PoleSet, grid: WavenumberGrid) -> PoleSet:
    """Keep the poles that are nearest to at least one grid point.

    Spurious poles tend to sit at some distance from the real interval, so
    they lose every nearest-pole contest; ties keep all tied poles.
    """
    if len(all_poles.poles) == 0:
        raise EmptyPoleSetError("no poles to filter")
    dist = np.abs(grid.points[:, None] - all_poles.poles[None, :])
    dmin = dist.min(axis=1)
    keep = np.zeros(len(all_poles.poles), dtype=bool)
    tie = dist <= dmin[:, None] * (1.0 + 1e-12)
    keep |= tie.any(axis=0)
    return PoleSet(poles=all_poles.poles[keep], source=all_poles.source)


def dedupe_and_nudge(pole_set: PoleSet, epsilon: float) -> PoleSet:
    """Canonicalize poles for use as radial centers.

    Upper-half-plane poles are reflected to their conjugates, duplicates and
    conjugate duplicates collapse (tolerance = epsilon in both components),
    and real poles are pushed off the axis by -i epsilon.
    """
    if epsilon <= 0:
        raise InvalidParameterError("epsilon must be positive")
    if len(pole_set.poles) == 0:
        raise EmptyPoleSetError("no poles to deduplicate")
    flipped = np.where(pole_set.poles.imag > 0, np.conj(pole_set.poles), pole_set.poles)
    kept = []
    for p in sorted(flipped, key=lambda z: (z.real, z.imag)):
        if any(abs(p.real - q.real) <= epsilon and abs(p.imag - q.imag) <= epsilon for q in kept):
            continue
        kept.append(p)
    out = np.array([p if p.imag < 0 else complex(p.real, -epsilon) for p in kept])
    if len(out) == 0:
        raise EmptyPoleSetError("all poles removed by deduplication")
    return PoleSet(poles=out, source=pole_set.source)


@dataclass
class CollocationSet:
    """Sampling points for the radial fit; first len(poles) are pole abscissae."""

    points: np.ndarray
    values: np.ndarray = None


def collocation_points(pole_set: PoleSet, k_range, n_o: int) -> CollocationSet:
    """Pole real parts, then n_o uniform oversampling points; repeats nudged."""
    if n_o < 0:
        raise InvalidParameterError("n_o must be nonnegative")
    k_min, k_max = float(k_range[0]), float(k_range[1])
    step = 1e-6 * (k_max - k_min)
    pts = []
    for x in [p.real for p in pole_set.poles] + list(
        np.linspace(k_min, k_max, n_o) if n_o > 0 else []
    ):
        while any(abs(x - y) < 0.5 * step for y in pts):
            x = x + step
        pts.append(float(x))
    return CollocationSet(points=np.array(pts))


def sample_collocation(colloc: CollocationSet, system: BemSystem) -> CollocationSet:
    """Fill in exact amplification values at the collocation points."""
    vals = np.array([field_amplification(system, k) for k in colloc.points])
    return CollocationSet(points=colloc.points, values=vals)


@dataclass
class HybridSurrogate:
    """Radial pole terms plus a piecewise-linear correction basis."""

    poles: np.ndarray        # deduplicated, all strictly below the real axis
    psi: np.ndarray          # radial coefficients, one per pole
    basis_nodes: np.ndarray  # hat-function nodes (possibly empty)
    alpha: np.ndarray        # hat coefficients
    flavor: str              # sum | max
    k_range: tuple

    def evaluate(self, k):
        """Amplification estimate, clamped below at a small positive floor."""
        k_arr = np.atleast_1d(np.asarray(k, dtype=float))
        radial = self.psi[None, :] / np.abs(k_arr[:, None] - self.poles[None, :])
        if self.flavor == "sum":
            vals = radial.sum(axis=1)
        else:
            vals = radial.max(axis=1)
        if len(self.basis_nodes):
            vals = vals + _hat_matrix(k_arr, self.basis_nodes) @ self.alpha
        vals = np.maximum(vals, EVAL_FLOOR)
        return vals if np.ndim(k) else float(vals[0])


def eval_hybrid(surrogate: HybridSurrogate, k):
    return surrogate.evaluate(k)


def _hat_nodes(n_b: int, k_range) -> np.ndarray:
    if n_b == 0:
        return np.empty(0)
    if n_b == 1:
        return np.array([0.5 * (k_range[0] + k_range[1])])
    return np.linspace(k_range[0], k_range[1], n_b)


def _hat_matrix(points: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """P1 hat functions on the node partition, evaluated at points."""
    if len(nodes) == 1:
        return np.ones((len(points), 1))
    h = nodes[1] - nodes[0]
    out = np.maximum(0.0, 1.0 - np.abs(points[:, None] - nodes[None, :]) / h)
    return out


def _solve_scaled_lsq(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Least squares with unit-max column scaling (radial columns span decades)."""
    scale = np.abs(mat).max(axis=0)
    scale[scale == 0] = 1.0
    sol, *_ = np.linalg.lstsq(mat / scale[None, :], rhs, rcond=None)
    return sol / scale


def fit_sum(
    colloc: CollocationSet, pole_set: PoleSet, n_b: int, k_range
) -> HybridSurrogate:
    """Fit radial and hat coefficients jointly against exact samples.

    Square when n_b equals the oversampling count (interpolation), least
    squares otherwise.
    """
    m = len(pole_set.poles)
    n_o = len(colloc.points) - m
    if not (0 <= n_b <= n_o):
        raise InvalidParameterError(f"need 0 <= n_b <= n_o, got n_b={n_b}, n_o={n_o}")
    if colloc.values is None:
        raise InvalidParameterError("collocation values missing; sample them first")
    radial = 1.0 / np.abs(colloc.points[:, None] - pole_set.poles[None, :])
    nodes = _hat_nodes(n_b, k_range)
    mat = np.hstack([radial, _hat_matrix(colloc.points, nodes)]) if n_b else radial
    coef = _solve_scaled_lsq(mat, colloc.values)
    return HybridSurrogate(
        poles=pole_set.poles.copy(),
        psi=coef[:m].real if np.isrealobj(colloc.values) else coef[:m],
        basis_nodes=nodes,
        alpha=coef[m:].real,
        flavor="sum",
        k_range=(float(k_range[0]), float(k_range[1])),
    )


def fit_max(
    colloc: CollocationSet, pole_set: PoleSet, n_b: int, k_range
) -> HybridSurrogate:
    """Per-pole radial coefficients by direct sampling, then a hat correction.

    psi = |Im pole| * phi(Re pole) makes the max term interpolate at each pole
    abscissa whenever that pole attains the max; the hats are least-squares
    fitted on the oversampling points against the residual.
    """
    m = len(pole_set.poles)
    n_o = len(colloc.points) - m
    if not (0 <= n_b <= n_o):
        raise InvalidParameterError(f"need 0 <= n_b <= n_o, got n_b={n_b}, n_o={n_o}")
    if colloc.values is None:
        raise InvalidParameterError("collocation values missing; sample them first")
    psi = np.abs(pole_set.poles.imag) * colloc.values[:m]
    nodes = _hat_nodes(n_b, k_range)
    alpha = np.zeros(n_b)
    if n_b > 0:
        extra = colloc.points[m:]
        maxterm = (psi[None, :] / np.abs(extra[:, None] - pole_set.poles[None, :])).max(axis=1)
        alpha = _solve_scaled_lsq(_hat_matrix(extra, nodes), colloc.values[m:] - maxterm)
    return HybridSurrogate(
        poles=pole_set.poles.copy(),
        psi=psi,
        basis_nodes=nodes,
        alpha=alpha,
        flavor="max",
        k_range=(float(k_range[0]), float(k_range[1])),
    )


N_O_POLICIES = ("zero", "equal_MK", "double_MK")


def hybrid_sweep(
    system: BemSystem,
    grid: WavenumberGrid,
    tol: float,
    n_o_policy: str = "equal_MK",
    flavor: str = "max",
    filter_poles: bool = True,
    seed: int = 0,
    max_samples: int = 256,
) -> AmplificationCurve:
    """Sketch surrogate -> poles -> filter -> collocation -> radial fit.

    The sketch is one-sided (a single solve per sample); pole identification
    needs only the surrogate, never off-axis solves.  The oversampling and hat
    counts follow the named policy: zero, one, or two per identified pole.
    """
    if n_o_policy not in N_O_POLICIES:
        raise InvalidParameterError(f"n_o_policy must be one of {N_O_POLICIES}")
    if flavor not in ("sum", "max"):
        raise InvalidParameterError(f"flavor must be sum or max, got {flavor}")
    gen = _rng.stream(seed, "hybrid-probe")
    probe = _rng.complex_gaussian(gen, system.size)

    t0 = time.perf_counter()
    surr = greedy_sample(
        lambda k: SolutionOperator(system, k).apply(probe),
        (grid.k_min, grid.k_max),
        tol,
        max_samples=max_samples,
        payload_kind="vector",
        floor_quantile=VECTOR_FLOOR_QUANTILE,
    )
    all_poles = poles(surr)
    t_train = time.perf_counter() - t0

    t0 = time.perf_counter()
    kept = filter_poles_close(all_poles, grid) if filter_poles else all_poles
    span = grid.k_max - grid.k_min
    kept = dedupe_and_nudge(kept, epsilon=1e-8 * span)
    m = len(kept.poles)
    n_o = {"zero": 0, "equal_MK": m, "double_MK": 2 * m}[n_o_policy]
    n_b = n_o
    colloc = sample_collocation(
        collocation_points(kept, (grid.k_min, grid.k_max), n_o), system
    )
    fitter = fit_sum if flavor == "sum" else fit_max
    model = fitter(colloc, kept, n_b, (grid.k_min, grid.k_max))
    t_extra = time.perf_counter() - t0

    t0 = time.perf_counter()
    values = model.evaluate(grid.points)
    t_eval = time.perf_counter() - t0

    return AmplificationCurve(
        grid=grid,
        values=values,
        method_tag=f"hybrid_{flavor}",
        timings={
            "training_rational_s": t_train,
            "training_extra_s": t_extra,
            "evaluation_s": t_eval,
            "evaluation_per_point_s": t_eval / grid.count,
        },
        meta={
            "n_samples": surr.n_samples,
            "budget_exhausted": surr.budget_exhausted,
            "n_poles_all": len(all_poles.poles),
            "n_poles_kept": m,
            "n_o": n_o,
            "n_b": n_b,
            "surrogate": surr,
            "pole_set": kept,
            "pole_set_all": all_poles,
            "model": model,
            "collocation": colloc,
        },
    )


def save_hybrid(model: HybridSurrogate, path, filter_flag: bool = True) -> None:
    """JSON serialization of the scalar surrogate."""
    doc = {
        "poles_re": model.poles.real.tolist(),
        "poles_im": model.poles.imag.tolist(),
        "psi": np.asarray(model.psi, dtype=float).tolist(),
        "alpha": model.alpha.tolist(),
        "basis_nodes": model.basis_nodes.tolist(),
        "flavor": model.flavor,
        "k_range": list(model.k_range),
        "filter_poles": bool(filter_flag),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def load_hybrid(path) -> HybridSurrogate:
    with open(path) as fh:
        doc = json.load(fh)
    return HybridSurrogate(
        poles=np.array(doc["poles_re"]) + 1j * np.array(doc["poles_im"]),
        psi=np.array(doc["psi"]),
        basis_nodes=np.array(doc["basis_nodes"]),
        alpha=np.array(doc["alpha"]),
        flavor=doc["flavor"],
        k_range=tuple(doc["k_range"]),
    )
