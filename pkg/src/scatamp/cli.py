"""Configuration-driven experiment runner.

Reads a flat key=value config file, runs one of the four amplification
algorithms (or the analytic disk spectrum), and writes curve CSV, manifest
JSON, pole CSV, and an SVG plot into the output directory.

Exit codes: 0 success (budget exhaustion is flagged in the manifest, not an
error), 2 configuration error, 3 numerical failure.
"""

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .amplification import (
    AmplificationCurve,
    WavenumberGrid,
    curve_from_csv,
    curve_to_csv,
    direct_sweep,
)
from .bem import build_system
from .disk_spectrum import SpectrumEstimate, exact_disk_spectrum, spectrum_to_csv
from .errors import ConfigError, GridMismatchError, SingularSystemError
from .geometry import build_mesh, make_curve
from .hybrid import hybrid_sweep, save_hybrid
from .plotting import render_svg
from .rational import (
    PoleSet,
    matrix_surrogate_sweep,
    pole_residue_norms,
    poles,
    poles_to_csv,
    save_surrogate,
    sketched_surrogate_sweep,
)

ALGORITHMS = ("direct", "rational", "sketch", "hybrid")


@dataclass
class ExperimentConfig:
    """All run parameters; every field can be set in the config file."""

    shape: str = "disk"
    radius: float = 1.0
    r_in: float = 0.5
    r_out: float = 1.0
    opening: float = np.pi / 3
    scale: float = 1.0
    n_i: float = np.sqrt(20.0)
    k_min: float = 1.0
    k_max: float = 3.0
    n_k: int = 1001
    n_h: int = 200
    quadrature_order: int = 11
    algorithm: str = "rational"
    tol: float = 0.01
    q: int = 0
    n_o_policy: str = "equal_MK"
    flavor: str = "max"
    filter_poles: bool = True
    rpm_probe_count: int = 1
    norm_method: str = "svd"
    max_samples: int = 128
    seed: int = 0
    output_dir: str = "runs/out"
    reference: str = ""
    im_min: float = -1.0
    max_order: int = 30
    save_payloads: bool = False

    def validate(self):
        checks = [
            ("shape", self.shape in ("disk", "cshape", "kite")),
            ("algorithm", self.algorithm in ALGORITHMS),
            ("n_i", self.n_i > 0),
            ("k_min", self.k_min > 0),
            ("k_max", self.k_max > self.k_min),
            ("n_k", self.n_k >= 1),
            ("n_h", self.n_h >= 3),
            ("quadrature_order", self.quadrature_order >= 1),
            ("tol", self.tol > 0),
            ("q", self.q >= 0),
            ("n_o_policy", self.n_o_policy in ("zero", "equal_MK", "double_MK")),
            ("flavor", self.flavor in ("sum", "max")),
            ("rpm_probe_count", self.rpm_probe_count >= 1),
            ("norm_method", self.norm_method in ("svd", "rpm")),
            ("max_samples", self.max_samples >= 3),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(f"invalid value for config field '{name}': {getattr(self, name)!r}")
        return self


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def load_config(path) -> ExperimentConfig:
    """Parse a flat key = value file ('#' starts a comment)."""
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in fields:
            raise ConfigError(f"{path}:{lineno}: unknown config field '{key}'")
        ftype = fields[key].type
        try:
            if ftype == "bool" or isinstance(getattr(ExperimentConfig, key, None), bool):
                values[key] = _BOOL[val.lower()]
            elif isinstance(getattr(ExperimentConfig(), key), bool):
                values[key] = _BOOL[val.lower()]
            elif isinstance(getattr(ExperimentConfig(), key), int) and key != "n_i":
                values[key] = int(val)
            elif isinstance(getattr(ExperimentConfig(), key), float):
                values[key] = float(val)
            else:
                values[key] = val
        except (ValueError, KeyError):
            raise ConfigError(f"{path}:{lineno}: cannot parse value for '{key}': {val!r}") from None
    return ExperimentConfig(**values).validate()


def _shape_params(config: ExperimentConfig) -> dict:
    if config.shape == "disk":
        return {"radius": config.radius}
    if config.shape == "kite":
        return {"scale": config.scale}
    return {"r_in": config.r_in, "r_out": config.r_out, "opening": config.opening}


def rms_relative_error(candidate: AmplificationCurve, reference: AmplificationCurve) -> float:
    """Root-mean-square of pointwise relative errors on a shared grid."""
    a, b = candidate.grid.points, reference.grid.points
    if len(a) != len(b) or not np.allclose(a, b, rtol=1e-12, atol=0):
        raise GridMismatchError("curves are defined on different grids")
    return float(
        np.sqrt(np.mean(np.abs(candidate.values - reference.values) ** 2 / reference.values ** 2))
    )


def compare_spectra(surrogate_poles: PoleSet, exact: SpectrumEstimate, im_cutoff: float) -> dict:
    """Greedy nearest matching of near-real exact eigenvalues to poles."""
    exact_vals = [e["lambda"] for e in exact.eigenvalues if e["lambda"].imag > im_cutoff]
    pole_vals = list(surrogate_poles.poles)
    if not exact_vals or not pole_vals:
        raise ConfigError("compare_spectra needs nonempty spectra")
    dist = np.abs(np.subtract.outer(np.array(exact_vals), np.array(pole_vals)))
    pairs = []
    used_e, used_p = set(), set()
    order = np.dstack(np.unravel_index(np.argsort(dist, axis=None), dist.shape))[0]
    for i, j in order:
        if i in used_e or j in used_p:
            continue
        used_e.add(int(i))
        used_p.add(int(j))
        pairs.append(
            {
                "exact_re": exact_vals[i].real,
                "exact_im": exact_vals[i].imag,
                "pole_re": pole_vals[j].real,
                "pole_im": pole_vals[j].imag,
                "distance": float(dist[i, j]),
            }
        )
        if len(used_e) == len(exact_vals) or len(used_p) == len(pole_vals):
            break
    return {
        "pairs": pairs,
        "unmatched_exact": len(exact_vals) - len(pairs),
        "unmatched_poles": len(pole_vals) - len(pairs),
        "max_distance": max(p["distance"] for p in pairs),
        "im_cutoff": im_cutoff,
    }


def run(config: ExperimentConfig) -> dict:
    """Execute one experiment; returns the manifest (also written to disk)."""
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = WavenumberGrid.uniform(config.k_min, config.k_max, config.n_k)

    t0 = time.perf_counter()
    curve = pole_set = model = surrogate = None
    mesh = build_mesh(make_curve(config.shape, **_shape_params(config)), config.n_h)
    system = build_system(mesh, config.n_i, config.quadrature_order)
    t_setup = time.perf_counter() - t0

    if config.algorithm == "direct":
        curve = direct_sweep(
            system,
            grid,
            norm_method=config.norm_method,
            seed=config.seed,
            rpm_probe_count=config.rpm_probe_count,
        )
    elif config.algorithm == "rational":
        curve = matrix_surrogate_sweep(
            system, grid, config.tol, seed=config.seed, max_samples=config.max_samples
        )
        surrogate = curve.meta["surrogate"]
        pole_set = poles(surrogate)
    elif config.algorithm == "sketch":
        curve = sketched_surrogate_sweep(
            system, grid, config.tol, config.q, seed=config.seed,
            max_samples=config.max_samples,
        )
    else:
        curve = hybrid_sweep(
            system,
            grid,
            config.tol,
            n_o_policy=config.n_o_policy,
            flavor=config.flavor,
            filter_poles=config.filter_poles,
            seed=config.seed,
            max_samples=config.max_samples,
        )
        surrogate = curve.meta["surrogate"]
        pole_set = curve.meta["pole_set"]
        model = curve.meta["model"]

    artifacts = {}
    curve_path = out / "curve.csv"
    curve_to_csv(curve, curve_path)
    artifacts["curve_csv"] = str(curve_path)

    manifest = {
        "config": {k: (v if not isinstance(v, float) else float(v)) for k, v in dataclasses.asdict(config).items()},
        "method": curve.method_tag,
        "timings": {"setup_s": t_setup, **curve.timings},
        "sample_counts": {},
        "budget_flags": {},
        "rms_relative_error": None,
    }
    if "n_samples" in curve.meta:
        manifest["sample_counts"]["n_samples"] = curve.meta["n_samples"]
    if "budget_exhausted" in curve.meta:
        manifest["budget_flags"]["budget_exhausted"] = bool(curve.meta["budget_exhausted"])
    if "budget_exhausted_by_p" in curve.meta:
        manifest["budget_flags"]["budget_exhausted_by_p"] = [
            bool(b) for b in curve.meta["budget_exhausted_by_p"]
        ]
    for key in ("n_poles_all", "n_poles_kept", "n_o", "n_b", "distinct_sample_points"):
        if key in curve.meta:
            manifest["sample_counts"][key] = curve.meta[key]

    if pole_set is not None:
        pole_path = out / "poles.csv"
        poles_to_csv(pole_set, pole_path)
        artifacts["poles_csv"] = str(pole_path)
        if surrogate is not None:
            all_set = poles(surrogate)
            manifest["pole_residue_norms"] = pole_residue_norms(surrogate, all_set).tolist()
    if model is not None:
        hybrid_path = out / "hybrid_model.json"
        save_hybrid(model, hybrid_path, filter_flag=config.filter_poles)
        artifacts["hybrid_json"] = str(hybrid_path)
    if surrogate is not None and (config.save_payloads or surrogate.payload_kind == "vector"):
        sj = out / "surrogate.json"
        sp = out / "surrogate_payloads.npz"
        save_surrogate(surrogate, sj, sp)
        artifacts["surrogate_json"] = str(sj)

    if config.reference:
        ref = curve_from_csv(config.reference)
        stride = (curve.grid.count - 1) // (ref.grid.count - 1) if ref.grid.count > 1 else 1
        if stride >= 1 and (curve.grid.count - 1) == stride * (ref.grid.count - 1):
            sub = AmplificationCurve(
                grid=curve.grid.subgrid(stride),
                values=curve.values[::stride],
                method_tag=curve.method_tag,
            )
            manifest["rms_relative_error"] = rms_relative_error(sub, ref)
        else:
            manifest["rms_relative_error"] = rms_relative_error(curve, ref)

    svg_path = out / "curve.svg"
    render_svg(
        [curve],
        svg_path,
        poles=pole_set.poles if pole_set is not None else None,
        labels=[curve.method_tag],
        logy=bool(np.all(curve.values > 0)),
        title=f"{config.shape}, {curve.method_tag}",
    )
    artifacts["svg"] = str(svg_path)

    manifest["artifacts"] = artifacts
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def _cmd_algorithm(args, algorithm: str) -> int:
    config = load_config(args.config)
    config.algorithm = algorithm
    if args.output_dir:
        config.output_dir = args.output_dir
    if args.reference:
        config.reference = args.reference
    manifest = run(config)
    print(json.dumps(manifest["sample_counts"] | manifest["budget_flags"], sort_keys=True))
    return 0


def _cmd_spectrum(args) -> int:
    config = load_config(args.config)
    if config.shape != "disk":
        raise ConfigError("the analytic spectrum is available for the disk only")
    out = Path(args.output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    est = exact_disk_spectrum(
        config.n_i,
        (config.k_min, config.k_max, config.im_min, 0.0),
        max_order=config.max_order,
    )
    spectrum_to_csv(est, out / "spectrum.csv")
    print(f"{len(est.eigenvalues)} eigenvalues -> {out / 'spectrum.csv'}")
    return 0


def _read_poles_csv(path) -> PoleSet:
    rows = Path(path).read_text().strip().splitlines()[1:]
    vals = []
    source = "matrix_surrogate"
    for row in rows:
        re_, im_, source = row.split(",")
        vals.append(complex(float(re_), float(im_)))
    return PoleSet(poles=np.array(vals), source=source)


def _read_spectrum_csv(path) -> SpectrumEstimate:
    rows = Path(path).read_text().strip().splitlines()[1:]
    eigenvalues = []
    for row in rows:
        nu, re_, im_, res = row.split(",")
        eigenvalues.append(
            {"lambda": complex(float(re_), float(im_)), "order_index": int(nu), "residual": float(res)}
        )
    return SpectrumEstimate(eigenvalues=eigenvalues, provenance="beyn_exact")


def _cmd_compare(args) -> int:
    report = compare_spectra(
        _read_poles_csv(args.poles), _read_spectrum_csv(args.spectrum), args.im_cutoff
    )
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def _cmd_plot(args) -> int:
    curves = [curve_from_csv(p, method_tag=Path(p).stem) for p in args.curves]
    pole_vals = _read_poles_csv(args.poles).poles if args.poles else None
    render_svg(curves, args.out, poles=pole_vals, labels=[Path(p).stem for p in args.curves], logy=args.logy)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatamp",
        description="Field-amplification surrogates for 2D transmission scattering",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ALGORITHMS:
        p = sub.add_parser(name, help=f"run the {name} algorithm")
        p.add_argument("config", help="flat key=value config file")
        p.add_argument("--output-dir", default="")
        p.add_argument("--reference", default="", help="curve CSV for RMS reporting")
    p = sub.add_parser("spectrum", help="analytic disk eigenvalues")
    p.add_argument("config")
    p.add_argument("--output-dir", default="")
    p = sub.add_parser("compare", help="match surrogate poles to exact eigenvalues")
    p.add_argument("--poles", required=True)
    p.add_argument("--spectrum", required=True)
    p.add_argument("--im-cutoff", type=float, default=-0.05)
    p.add_argument("--out", default="")
    p = sub.add_parser("plot", help="render curves (and poles) to SVG")
    p.add_argument("curves", nargs="+")
    p.add_argument("--poles", default="")
    p.add_argument("--out", required=True)
    p.add_argument("--logy", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ALGORITHMS:
            return _cmd_algorithm(args, args.command)
        if args.command == "spectrum":
            return _cmd_spectrum(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_plot(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SingularSystemError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
