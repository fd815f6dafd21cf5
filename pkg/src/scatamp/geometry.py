"""Scatterer boundary curves and their panel meshes.

Three closed Lipschitz contours are supported: a disk, a kite, and a C shape
(annulus sector with rounded end caps, traversed as one C^1 curve).  Meshes
are inscribed polygons with nodes at equispaced parameter values, carrying the
continuous piecewise-linear (P1) nodal basis.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

TWO_PI = 2.0 * np.pi


def _rotate_minus90(v: np.ndarray) -> np.ndarray:
    # outward normal for a counterclockwise tangent
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


class BoundaryCurve:
    """Closed parameterized contour on t in [0, 2pi)."""

    def position(self, t):
        raise NotImplementedError

    def velocity(self, t):
        raise NotImplementedError

    def speed(self, t):
        v = self.velocity(t)
        return np.linalg.norm(v, axis=-1)

    def tangent(self, t):
        v = self.velocity(t)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def normal(self, t):
        return _rotate_minus90(self.tangent(t))


class DiskCurve(BoundaryCurve):
    def __init__(self, radius: float):
        if radius <= 0:
            raise InvalidParameterError(f"disk radius must be positive, got {radius}")
        self.radius = float(radius)

    def position(self, t):
        t = np.asarray(t, dtype=float)
        return self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        return self.radius * np.stack([-np.sin(t), np.cos(t)], axis=-1)


class KiteCurve(BoundaryCurve):
    """Kite contour (cos t + 0.65 cos 2t - 0.65, 1.5 sin t), scaled."""

    def __init__(self, scale: float):
        if scale <= 0:
            raise InvalidParameterError(f"kite scale must be positive, got {scale}")
        self.scale = float(scale)

    def position(self, t):
        t = np.asarray(t, dtype=float)
        x = np.cos(t) + 0.65 * np.cos(2 * t) - 0.65
        y = 1.5 * np.sin(t)
        return self.scale * np.stack([x, y], axis=-1)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        dx = -np.sin(t) - 1.3 * np.sin(2 * t)
        dy = 1.5 * np.cos(t)
        return self.scale * np.stack([dx, dy], axis=-1)


class CShapeCurve(BoundaryCurve):
    """C-shaped contour: annulus sector with semicircular end caps.

    The body occupies polar angles [opening/2, 2pi - opening/2] between radii
    r_in and r_out; each end of the sector is closed by a half circle of
    radius (r_out - r_in)/2 centered at mid radius, which meets both arcs
    tangentially.  The parameterization has constant speed, so the assembled
    curve is C^1 and counterclockwise (interior on the left).
    """

    def __init__(self, r_in: float = 0.5, r_out: float = 1.0, opening: float = np.pi / 3):
        if not (0 < r_in < r_out):
            raise InvalidParameterError(
                f"need 0 < r_in < r_out, got r_in={r_in}, r_out={r_out}"
            )
        if not (0 < opening < TWO_PI):
            raise InvalidParameterError(f"opening angle must lie in (0, 2pi), got {opening}")
        self.r_in = float(r_in)
        self.r_out = float(r_out)
        self.opening = float(opening)
        self.r_cap = 0.5 * (r_out - r_in)
        self.r_mid = 0.5 * (r_out + r_in)

        th0 = 0.5 * self.opening            # start of the body
        th1 = TWO_PI - 0.5 * self.opening   # end of the body
        sweep = th1 - th0
        lengths = np.array([
            self.r_out * sweep,       # outer arc, CCW
            np.pi * self.r_cap,       # cap at th1
            self.r_in * sweep,        # inner arc, CW
            np.pi * self.r_cap,       # cap at th0
        ])
        self._th0, self._th1, self._sweep = th0, th1, sweep
        self._lengths = lengths
        self._total = float(lengths.sum())
        self._breaks = np.concatenate([[0.0], np.cumsum(lengths)]) / self._total * TWO_PI

    def _pieces(self, t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.mod(np.asarray(t, dtype=float), TWO_PI))
        idx = np.searchsorted(self._breaks, t, side="right") - 1
        idx = np.clip(idx, 0, 3)
        local = (t - self._breaks[idx]) / (self._breaks[idx + 1] - self._breaks[idx])
        return t, idx, local, scalar

    def position(self, t):
        t, idx, u, scalar = self._pieces(t)
        out = np.empty(t.shape + (2,), dtype=float)

        sel = idx == 0  # outer arc th0 -> th1
        th = self._th0 + u[sel] * self._sweep
        out[sel] = self.r_out * np.stack([np.cos(th), np.sin(th)], axis=-1)

        sel = idx == 1  # cap at th1: from r_out to r_in around mid-radius center
        th = self._th1
        c = self.r_mid * np.array([np.cos(th), np.sin(th)])
        # half circle from +radial to -radial through the azimuthal direction
        # pointing toward the opening (increasing theta at th1)
        phi = u[sel] * np.pi
        radial = np.array([np.cos(th), np.sin(th)])
        azim = np.array([-np.sin(th), np.cos(th)])
        out[sel] = c + self.r_cap * (
            np.cos(phi)[:, None] * radial + np.sin(phi)[:, None] * azim
        )

        sel = idx == 2  # inner arc th1 -> th0 (clockwise)
        th = self._th1 - u[sel] * self._sweep
        out[sel] = self.r_in * np.stack([np.cos(th), np.sin(th)], axis=-1)

        sel = idx == 3  # cap at th0: from r_in back to r_out
        th = self._th0
        c = self.r_mid * np.array([np.cos(th), np.sin(th)])
        phi = u[sel] * np.pi
        radial = np.array([np.cos(th), np.sin(th)])
        azim = np.array([-np.sin(th), np.cos(th)])
        out[sel] = c + self.r_cap * (
            -np.cos(phi)[:, None] * radial - np.sin(phi)[:, None] * azim
        )
        return out[0] if scalar else out

    def velocity(self, t):
        t, idx, u, scalar = self._pieces(t)
        out = np.empty(t.shape + (2,), dtype=float)
        v = self._total / TWO_PI  # constant speed

        sel = idx == 0
        th = self._th0 + u[sel] * self._sweep
        out[sel] = v * np.stack([-np.sin(th), np.cos(th)], axis=-1)

        sel = idx == 1
        th = self._th1
        phi = u[sel] * np.pi
        radial = np.array([np.cos(th), np.sin(th)])
        azim = np.array([-np.sin(th), np.cos(th)])
        out[sel] = v * (
            -np.sin(phi)[:, None] * radial + np.cos(phi)[:, None] * azim
        )

        sel = idx == 2
        th = self._th1 - u[sel] * self._sweep
        out[sel] = v * np.stack([np.sin(th), -np.cos(th)], axis=-1)

        sel = idx == 3
        th = self._th0
        phi = u[sel] * np.pi
        radial = np.array([np.cos(th), np.sin(th)])
        azim = np.array([-np.sin(th), np.cos(th)])
        out[sel] = v * (
            np.sin(phi)[:, None] * radial - np.cos(phi)[:, None] * azim
        )
        return out[0] if scalar else out


_SHAPES = {"disk": DiskCurve, "kite": KiteCurve, "cshape": CShapeCurve}


def make_curve(shape: str, **params) -> BoundaryCurve:
    """Build one of the supported scatterer contours.

    disk   : radius (> 0)
    kite   : scale (> 0)
    cshape : r_in, r_out (0 < r_in < r_out), opening angle in (0, 2pi)
    """
    try:
        cls = _SHAPES[shape]
    except KeyError:
        raise InvalidParameterError(
            f"unknown shape {shape!r}; expected one of {sorted(_SHAPES)}"
        ) from None
    defaults = {"disk": {"radius": 1.0}, "kite": {"scale": 1.0}, "cshape": {}}[shape]
    merged = {**defaults, **params}
    try:
        return cls(**merged)
    except TypeError as exc:
        raise InvalidParameterError(f"bad parameters for {shape}: {exc}") from None


@dataclass
class BoundaryMesh:
    """Closed polygonal panel mesh with a P1 nodal basis.

    Node i is shared by panels (i-1, i); panel p runs from node p to node
    (p+1) mod N.  Normals are per-panel (constant on straight panels);
    nodal tangents/normals come from the underlying smooth curve.
    """

    nodes: np.ndarray            # (N, 2)
    panels: np.ndarray           # (N, 2) node index pairs, cyclic
    panel_lengths: np.ndarray    # (N,)
    outward_normals: np.ndarray  # (N, 2) per panel
    nodal_tangents: np.ndarray   # (N, 2)
    nodal_normals: np.ndarray    # (N, 2)
    node_params: np.ndarray      # (N,) parameter values on the curve
    panel_tangents: np.ndarray = field(default=None)  # (N, 2)

    @property
    def n_panels(self) -> int:
        return len(self.panel_lengths)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def build_mesh(curve: BoundaryCurve, panel_count: int) -> BoundaryMesh:
    """Mesh a closed curve with panel_count straight panels."""
    if panel_count < 3:
        raise InvalidParameterError(f"panel_count must be >= 3, got {panel_count}")
    t = np.arange(panel_count) * (TWO_PI / panel_count)
    nodes = curve.position(t)
    ends = np.roll(nodes, -1, axis=0)
    chords = ends - nodes
    lengths = np.linalg.norm(chords, axis=1)
    if np.any(lengths <= 0):
        raise InvalidParameterError("degenerate panel (coincident nodes)")
    tangents = chords / lengths[:, None]
    normals = _rotate_minus90(tangents)
    panels = np.stack(
        [np.arange(panel_count), (np.arange(panel_count) + 1) % panel_count], axis=1
    )
    return BoundaryMesh(
        nodes=nodes,
        panels=panels,
        panel_lengths=lengths,
        outward_normals=normals,
        nodal_tangents=curve.tangent(t),
        nodal_normals=curve.normal(t),
        node_params=t,
        panel_tangents=tangents,
    )


def export_mesh_csv(mesh: BoundaryMesh, path) -> None:
    """Write node coordinates as CSV (node_index, x, y)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "x", "y"])
        for i, (x, y) in enumerate(mesh.nodes):
            writer.writerow([i, f"{x:.15g}", f"{y:.15g}"])
