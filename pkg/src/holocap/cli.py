"""Command-line entry point: ``holocap <subcommand> [options]``.

Every run writes its outputs plus ``<primary output>.manifest.json`` holding
the config hash, seed, package versions and wall time.  The config hash is
the SHA-256 of the canonical JSON of the subcommand, seed, remaining
parameters and the content digests of input files; output paths, plot path
and worker count are excluded, so it does not depend on where results go or
how many threads ran.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .capacity import (DEFAULT_NS, capacity_from_diameters, energy_capacity, fekete_capacity, fekete_exchange,
                       leja_sequence, nth_diameter)
from .core import (DegenerateInput, InvalidArgument, LambdaGrid, NumericalFailure, PointCloud,
                   gen_arcsine_segment, gen_cantor_quarter_square, gen_circle, gen_ellipse, gen_segment)
from .experiments import (DEFAULT_BOX_SCALES, DimTable, SampledFunction, SweepConfig, SweepTable,
                          capacity_sweep, continuity_report, harnack_check, hausdorff_discontinuity_experiment,
                          submean_check)
from .harmonic import indicator_report, welding_table
from .motion import (BottcherParams, check_motion_axioms, external_ray_landing, julia_inverse_iteration,
                     make_motion)

SUBCOMMANDS = ("capacity", "sweep", "julia", "welding", "checks", "dims")
_NOT_HASHED = {"out", "plot", "workers", "config", "force", "report", "manifest"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let values such as "-5,-10" or "-0.5,0.1" through as option arguments
        self._negative_number_matcher = re.compile(r"^-\.?\d[\d.,eE+\-ij]*$")

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# -- spec strings -------------------------------------------------------------------

def _value(text: str):
    t = text.strip()
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    try:
        return complex(t.replace(" ", "").replace("i", "j"))
    except ValueError:
        return t


def parse_spec(spec: str) -> tuple[str, dict[str, Any]]:
    """``"kind:key=value,key=value"`` -> ``(kind, params)``."""
    kind, _, rest = spec.partition(":")
    params: dict[str, Any] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise InvalidArgument(f"expected key=value in {spec!r}, got {item!r}")
        params[key.strip()] = _value(val)
    return kind.strip(), params


def parse_complex(text: str) -> complex:
    """``"re,im"`` or a complex literal such as ``0.1+0.2i``."""
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
        if len(parts) == 1:
            return complex(parts[0].replace(" ", "").replace("i", "j"))
    except ValueError:
        pass
    raise InvalidArgument(f"cannot read a complex number from {text!r}")


def motion_spec(value) -> str:
    """A motion given as ``kind:key=value,...`` text or as a TOML table with a ``kind`` key."""
    if isinstance(value, dict):
        params = {k: v for k, v in value.items() if k != "kind"}
        if "kind" not in value:
            raise InvalidArgument("motion table needs a 'kind' key")
        args = ",".join(f"{k}={_toml_scalar(v)}" for k, v in sorted(params.items()))
        return f"{value['kind']}:{args}" if args else str(value["kind"])
    return str(value)


def _toml_scalar(v) -> str:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return repr(complex(float(v[0]), float(v[1])))
    return str(v).lower() if isinstance(v, bool) else str(v)


def parse_set(spec: str) -> PointCloud:
    """Named sets: ``circle[:n=,r=]``, ``segment[:n=,a=,b=]``, ``arcsine[:n=,a=,b=]``,
    ``ellipse[:n=,a=,b=]``, ``cantor[:level=,per=]``, or ``file:<path>`` (CSV or JSON)."""
    if spec.startswith("file:"):
        return load_cloud(Path(spec[5:]))
    kind, p = parse_spec(spec)
    n = int(p.get("n", 2048))
    if kind == "circle":
        cloud = gen_circle(n, float(p.get("r", 1.0)))
    elif kind == "segment":
        cloud = gen_segment(n, complex(p.get("a", -2)), complex(p.get("b", 2)))
    elif kind == "arcsine":
        cloud = gen_arcsine_segment(n, complex(p.get("a", -2)), complex(p.get("b", 2)))
    elif kind == "ellipse":
        cloud = gen_ellipse(n, float(p.get("a", 1.0)), float(p.get("b", 0.5)))
    elif kind == "cantor":
        cloud = gen_cantor_quarter_square(int(p.get("level", 4)), int(p.get("per", 2)))
    else:
        raise InvalidArgument(f"unknown set {kind!r}")
    return PointCloud(cloud.points, spec, cloud.generator_params)


def parse_grid(spec: str) -> LambdaGrid:
    """``real:start:stop:num`` or ``polar:r1,r2,...:n_angles``."""
    parts = spec.split(":")
    try:
        if parts[0] == "real" and len(parts) == 4:
            return LambdaGrid.real(float(parts[1]), float(parts[2]), int(parts[3]))
        if parts[0] == "polar" and len(parts) == 3:
            return LambdaGrid.polar([float(r) for r in parts[1].split(",")], int(parts[2]))
    except ValueError as exc:
        raise InvalidArgument(f"bad grid spec {spec!r}: {exc}") from exc
    raise InvalidArgument(f"bad grid spec {spec!r}")


def parse_motion(spec: str):
    kind, params = parse_spec(spec)
    return make_motion(kind, **params)


def _floats(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def load_cloud(path: Path) -> PointCloud:
    text = path.read_text()
    if path.suffix == ".json":
        return PointCloud.from_json(text)
    return PointCloud.from_csv(text, label=path.name)


# -- config, hashing, manifest ------------------------------------------------------

@dataclass
class RunConfig:
    subcommand: str
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    workers: int | None = None

    def canonical(self) -> dict[str, Any]:
        return {"subcommand": self.subcommand, "seed": self.seed, "params": self.params,
                "inputs": self.inputs}

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def to_json(self) -> str:
        return json.dumps({**self.canonical(), "outputs": self.outputs, "workers": self.workers},
                          sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        d = json.loads(text)
        return cls(d["subcommand"], int(d.get("seed", 0)), d.get("params", {}), d.get("inputs", {}),
                   d.get("outputs", {}), d.get("workers"))


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict[str, str]:
    import matplotlib
    import scipy
    return {"holocap": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "matplotlib": matplotlib.__version__}


def read_config_hash(text: str) -> str | None:
    """The hash recorded in a ``# config_hash: ...`` header line or a JSON ``config_hash`` key."""
    for line in text.splitlines():
        if line.startswith("# config_hash:"):
            return line.split(":", 1)[1].strip() or None
        if not line.startswith("#"):
            break
    try:
        data = json.loads(text)
    except ValueError:
        return None
    return data.get("config_hash") if isinstance(data, dict) else None


def _load_toml(path: str) -> dict[str, Any]:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return {k.replace("-", "_"): v for k, v in data.items()}


# -- plotting -------------------------------------------------------------------------

def _table_columns(table) -> tuple[str, np.ndarray]:
    if isinstance(table, SweepTable):
        lam = table.lambdas
        if np.all(lam.imag == 0):
            return "lambda (real part)", lam.real
        return "|lambda|", np.abs(lam)
    if isinstance(table, DimTable):
        return "c", table.column("c")
    if hasattr(table, "external_angles"):
        return "theta", np.asarray(table.external_angles)
    raise InvalidArgument("unsupported table type")


def _column(table, name: str) -> np.ndarray:
    if hasattr(table, "column"):
        return table.column(name)
    cols = {"phi": "internal_angles", "delta": "increments", "mc_error": "mc_error"}
    if name not in cols:
        raise InvalidArgument(f"unknown column {name!r}")
    return np.asarray(getattr(table, cols[name]), dtype=float)


def emit_plot(table, column: str, path: str | os.PathLike, config_hash: str = "") -> Path:
    """Write an SVG line plot of ``column`` against lambda (sweeps), c (dims) or theta (weldings).

    The SVG carries no timestamp and a fixed hash salt, so reruns are
    byte-identical.  A missing or entirely empty column is an error.
    """
    import matplotlib
    from matplotlib.backends.backend_svg import FigureCanvasSVG
    from matplotlib.figure import Figure

    xlabel, x = _table_columns(table)
    y = _column(table, column)
    if y.size == 0 or not np.any(np.isfinite(y)):
        raise InvalidArgument(f"column {column!r} has no values to plot")
    keep = np.isfinite(y)
    x, y = x[keep], y[keep]
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    with matplotlib.rc_context({"svg.hashsalt": "holocap", "svg.fonttype": "path"}):
        fig = Figure(figsize=(6, 4))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot()
        ax.plot(x, y, "o" if x.size == 1 else "o-", ms=3, lw=1)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(column)
        ax.grid(alpha=0.3)
        fig.text(0.01, 0.01, f"config {config_hash[:16] or 'n/a'}", fontsize=7, color="0.4")
        fig.tight_layout(rect=(0, 0.04, 1, 1))
        path = Path(path)
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


# -- argument parsing --------------------------------------------------------------------

def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=None,
                        help="thread count; results do not depend on it (env HOLOCAP_WORKERS)")
    common.add_argument("--config", help="TOML file of option defaults (keys are long option names)")
    common.add_argument("--out", help="primary output path (relative paths go under HOLOCAP_OUTDIR)")

    p = _Parser(prog="holocap", description="Capacity, holomorphic motions and Julia-set experiments.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    c = sub.add_parser("capacity", parents=[common], help="capacity of a point set")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="CSV (re,im) or JSON point cloud")
    src.add_argument("--set", help="named set, e.g. circle:n=4096")
    c.add_argument("--n", default=",".join(map(str, DEFAULT_NS)), help="n or comma list of n")
    c.add_argument("--method", choices=("fekete", "leja", "energy"), default="fekete")
    c.add_argument("--max-passes", type=int, default=500)
    c.add_argument("--max-pairs", type=int, default=1_000_000)

    s = sub.add_parser("sweep", parents=[common], help="capacity along a holomorphic motion")
    s.add_argument("--motion", required=True, help="e.g. translation:a=1, scaling:beta=0.5, stretch, bottcher")
    s.add_argument("--set", required=True)
    s.add_argument("--grid", required=True, help="real:start:stop:num or polar:r1,r2:n_angles")
    s.add_argument("--ns", default=",".join(map(str, DEFAULT_NS)))
    s.add_argument("--max-passes", type=int, default=500)
    s.add_argument("--max-candidates", type=int, default=4096)
    s.add_argument("--area-grid", type=int, default=0, help="cells per side for the enclosed area (0: off)")
    s.add_argument("--boxdim", action="store_true", help="add the box-dimension column")
    s.add_argument("--plot", help="SVG path for a plot of --plot-column")
    s.add_argument("--plot-column", default="capacity")

    j = sub.add_parser("julia", parents=[common], help="Julia set samples")
    j.add_argument("--c", required=True, help="parameter as re,im or a complex literal, e.g. 0.1,0.2")
    j.add_argument("--algo", choices=("inverse-iteration", "ray-landing"), default="inverse-iteration")
    j.add_argument("--samples", type=int, default=100_000)
    j.add_argument("--burn-in", type=int, default=50)
    j.add_argument("--depth", type=int, default=40)
    j.add_argument("--allow-outside-region", action="store_true",
                   help="trace rays for |c| beyond the quasicircle test region")

    w = sub.add_parser("welding", parents=[common], help="conformal welding of a Julia quasicircle")
    w.add_argument("--c", required=True, help="parameter as re,im or a complex literal")
    w.add_argument("--resolution", type=int, default=64)
    w.add_argument("--walks", type=int, default=100_000)
    w.add_argument("--epsilon", type=float, default=None)
    w.add_argument("--alpha", type=float, default=0.9)
    w.add_argument("--allow-outside-region", action="store_true",
                   help="trace rays for |c| beyond the quasicircle test region")
    w.add_argument("--report", help="JSON path for the singularity indicators")
    w.add_argument("--plot", help="SVG path for a plot of --plot-column")
    w.add_argument("--plot-column", default="phi")

    k = sub.add_parser("checks", parents=[common], help="verification suites on a sweep table")
    k.add_argument("--suite", required=True, choices=("submean", "harnack", "motion-axioms", "continuity"))
    k.add_argument("--in", dest="input", help="sweep table CSV")
    k.add_argument("--force", action="store_true", help="accept inputs whose config hash cannot be verified")
    k.add_argument("--tolerance", type=float, default=None)
    k.add_argument("--centers", default="0")
    k.add_argument("--radii", default=None, help="comma list; default: every sampled circle about the center")
    k.add_argument("--rho", type=float, default=0.9)
    k.add_argument("--M", type=float, default=None, help="default: max u + 0.5")
    k.add_argument("--modulus", type=float, default=1.0)
    k.add_argument("--motion", help="motion for motion-axioms")
    k.add_argument("--set", default="circle:n=64", help="test points for motion-axioms")
    k.add_argument("--radius", type=float, default=0.5)
    k.add_argument("--n-lambda", type=int, default=32)

    d = sub.add_parser("dims", parents=[common], help="box dimension and capacity of Cantor Julia sets")
    d.add_argument("--c-list", required=True, help="comma list of real parameters")
    d.add_argument("--samples", type=int, default=100_000)
    d.add_argument("--burn-in", type=int, default=50)
    d.add_argument("--energy-pairs", type=int, default=1_000_000)
    d.add_argument("--plot", help="SVG path for a plot of --plot-column")
    d.add_argument("--plot-column", default="boxdim")
    return p


def _parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    config = pre.parse_known_args(argv)[0].config
    name = next((a for a in argv if a in SUBCOMMANDS), None)
    if config and name:
        values = _load_toml(config)
        if "motion" in values:
            values["motion"] = motion_spec(values["motion"])
        sub = parser._subparsers._group_actions[0].choices[name]
        actions = {a.dest: a for a in sub._actions}
        unknown = set(values) - set(actions)
        if unknown:
            raise UsageError(f"unknown keys in {config}: {sorted(unknown)}")
        # file values act as defaults, so options they supply are no longer required
        for key in values:
            actions[key].required = False
        for group in sub._mutually_exclusive_groups:
            if any(a.dest in values for a in group._group_actions):
                group.required = False
        sub.set_defaults(**values)
    return parser.parse_args(argv)


def _outdir() -> Path:
    return Path(os.environ.get("HOLOCAP_OUTDIR") or ".")


def _resolve(path: str | None, default: str) -> Path:
    p = Path(path or default)
    return p if p.is_absolute() else _outdir() / p


# -- subcommands ----------------------------------------------------------------------------

def _hashable(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items())
            if k not in _NOT_HASHED and k not in ("subcommand", "seed", "input")}


def _cmd_capacity(args, cfg: RunConfig) -> dict[str, Path]:
    cloud = load_cloud(Path(args.input)) if args.input else parse_set(args.set)
    ns = sorted({int(n) for n in args.n.split(",") if n.strip()})
    h = cfg.config_hash()
    if args.method == "energy":
        est = energy_capacity(cloud.points, args.max_pairs, args.seed, cfg.workers)
        report = {"method": "energy", "capacity": est.capacity, "stderr": est.stderr,
                  "pair_count": est.pair_count, "skipped_coincident": est.skipped_coincident,
                  "exhaustive": est.exhaustive}
    elif args.method == "leja":
        order = leja_sequence(cloud.points, max(ns))
        diam = [(n, nth_diameter(cloud.points[order[:n]])) for n in ns]
        report = _diameter_report(diam, "leja", {"candidates": len(cloud)})
    elif len(ns) >= 3:
        report = fekete_capacity(cloud.points, ns, args.max_passes, args.seed, cfg.workers).to_dict()
    else:
        runs = [fekete_exchange(cloud.points, n, args.max_passes, args.seed) for n in ns]
        report = _diameter_report([(n, r.delta) for n, r in zip(ns, runs)], "fekete",
                                  {"candidates": len(cloud), "converged": all(r.converged for r in runs)})
    report["set"] = cloud.label
    report["config_hash"] = h
    out = _resolve(args.out, "capacity.json")
    out.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return {"report": out}


def _diameter_report(diam, method: str, stats: dict[str, Any]) -> dict[str, Any]:
    if len(diam) >= 3:
        return capacity_from_diameters(diam, method, stats).to_dict()
    return {"diameters": [[int(n), float(d)] for n, d in diam], "raw": float(diam[-1][1]),
            "extrapolated": None, "method": method, "stats": stats,
            "note": "extrapolation needs at least three n values"}


def _cmd_sweep(args, cfg: RunConfig) -> dict[str, Path]:
    motion = parse_motion(args.motion)
    cloud = parse_set(args.set)
    grid = parse_grid(args.grid)
    config = SweepConfig(seed=args.seed, ns=tuple(int(n) for n in args.ns.split(",")),
                         max_passes=args.max_passes, max_candidates=args.max_candidates,
                         area_grid=args.area_grid,
                         boxdim_scales=DEFAULT_BOX_SCALES if args.boxdim else None, workers=cfg.workers)
    table = capacity_sweep(motion, cloud, grid, config, cfg.config_hash())
    out = _resolve(args.out, "sweep.csv")
    out.write_text(table.to_csv())
    files = {"table": out}
    if args.plot:
        files["plot"] = emit_plot(table, args.plot_column, _resolve(args.plot, ""), table.config_hash)
    return files


def _cmd_julia(args, cfg: RunConfig) -> dict[str, Path]:
    c = parse_complex(args.c)
    h = cfg.config_hash()
    if args.algo == "inverse-iteration":
        cloud = julia_inverse_iteration(c, args.samples, args.burn_in, args.seed, cfg.workers)
    else:
        theta = np.arange(args.samples) / args.samples
        params = BottcherParams(depth=args.depth, allow_outside_region=args.allow_outside_region)
        pts = external_ray_landing(c, theta, params)
        cloud = PointCloud(pts, f"julia-rays:c={c}", {"c": [c.real, c.imag], "depth": args.depth})
    out = _resolve(args.out, "julia.csv")
    out.write_text(cloud.to_csv(f"config_hash: {h}\nlabel: {cloud.label}"))
    return {"cloud": out}


def _cmd_welding(args, cfg: RunConfig) -> dict[str, Path]:
    c = parse_complex(args.c)
    h = cfg.config_hash()
    table = welding_table(c, args.resolution, args.walks, args.epsilon, args.seed,
                          BottcherParams(allow_outside_region=args.allow_outside_region), workers=cfg.workers)
    out = _resolve(args.out, "welding.csv")
    out.write_text(table.to_csv(f"config_hash: {h}\nc: {c}"))
    files = {"table": out}
    if args.report:
        rep = json.loads(indicator_report(table, args.alpha))
        rep["config_hash"] = h
        path = _resolve(args.report, "")
        path.write_text(json.dumps(rep, sort_keys=True, indent=2) + "\n")
        files["report"] = path
    if args.plot:
        files["plot"] = emit_plot(table, args.plot_column, _resolve(args.plot, ""), h)
    return files


def _verified_table(args) -> tuple[SweepTable, dict[str, Any]]:
    if not args.input:
        raise InvalidArgument(f"--in is required for the {args.suite} suite")
    path = Path(args.input)
    text = path.read_text()
    table = SweepTable.from_csv(text)
    info = {"input_config_hash": table.config_hash, "verified": False}
    manifest = path.with_name(path.name + ".manifest.json")
    problem = None
    if not table.config_hash:
        problem = "input carries no config hash"
    elif not manifest.exists():
        problem = f"no manifest {manifest.name} next to the input"
    else:
        m = json.loads(manifest.read_text())
        if m.get("config_hash") != table.config_hash:
            problem = "config hash of the input does not match its manifest"
        elif _digest(path) not in m.get("output_digests", {}).values():
            problem = "input content differs from the file its manifest recorded"
    if problem and not args.force:
        raise InvalidArgument(f"{problem}; rerun with --force to check it anyway")
    info["verified"] = problem is None
    if problem:
        info["forced"] = problem
    return table, info


def _circle_radii(u: SampledFunction, center: complex) -> list[float]:
    r = np.abs(u.lambdas - center)
    r = r[r > 1e-12]
    radii: list[float] = []
    for v in np.sort(r):
        if not radii or abs(v - radii[-1]) > 1e-9 * max(1.0, v):
            radii.append(float(v))
    return radii


def _cmd_checks(args, cfg: RunConfig) -> dict[str, Path]:
    info: dict[str, Any] = {}
    if args.suite == "motion-axioms":
        if not args.motion:
            raise InvalidArgument("--motion is required for the motion-axioms suite")
        rep = check_motion_axioms(parse_motion(args.motion), parse_set(args.set), args.radius,
                                  args.n_lambda, args.seed, args.tolerance)
        result = rep.to_dict()
    else:
        table, info = _verified_table(args)
        if args.suite == "continuity":
            result = continuity_report(table, modulus_constant=args.modulus).to_dict()
        else:
            u = SampledFunction.log_capacity(table)
            if args.suite == "submean":
                centers = [complex(_value(c)) for c in args.centers.split(",")]
                radii = _floats(args.radii) if args.radii else sorted(
                    {r for c in centers for r in _circle_radii(u, c)})
                result = submean_check(u, centers, radii,
                                       1e-2 if args.tolerance is None else args.tolerance).to_dict()
            else:
                M = float(np.max(u.values)) + 0.5 if args.M is None else args.M
                result = harnack_check(u, args.rho, M,
                                       1e-9 if args.tolerance is None else args.tolerance).to_dict()
    result.update(info)
    result["config_hash"] = cfg.config_hash()
    out = _resolve(args.out, f"checks-{args.suite}.json")
    out.write_text(json.dumps(result, sort_keys=True, indent=2) + "\n")
    return {"report": out}


def _cmd_dims(args, cfg: RunConfig) -> dict[str, Path]:
    table = hausdorff_discontinuity_experiment(_floats(args.c_list), args.samples, DEFAULT_BOX_SCALES,
                                               args.seed, args.burn_in, args.energy_pairs, cfg.workers)
    table.config_hash = cfg.config_hash()
    out = _resolve(args.out, "dims.csv")
    out.write_text(table.to_csv())
    files = {"table": out}
    if args.plot:
        files["plot"] = emit_plot(table, args.plot_column, _resolve(args.plot, ""), table.config_hash)
    return files


_COMMANDS = {"capacity": _cmd_capacity, "sweep": _cmd_sweep, "julia": _cmd_julia,
             "welding": _cmd_welding, "checks": _cmd_checks, "dims": _cmd_dims}


def run(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; returns 0 on success, 1 on invalid input, 2 on numerical failure."""
    argv = list(sys.argv[1:] if argv is None else argv)
    start = time.perf_counter()
    try:
        args = _parse(argv)
        workers = args.workers
        if workers is None and os.environ.get("HOLOCAP_WORKERS"):
            workers = int(os.environ["HOLOCAP_WORKERS"])
        inputs = {}
        if getattr(args, "input", None):
            inputs["input"] = _digest(Path(args.input))
        cfg = RunConfig(args.subcommand, args.seed, _hashable(args), inputs, workers=workers)
        _outdir().mkdir(parents=True, exist_ok=True)
        files = _COMMANDS[args.subcommand](args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return 2
    except (InvalidArgument, DegenerateInput, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    primary = next(iter(files.values()))
    cfg.outputs = {k: str(v) for k, v in files.items()}
    manifest = {
        "config_hash": cfg.config_hash(),
        "config": json.loads(cfg.to_json()),
        "seed": cfg.seed,
        "versions": _versions(),
        "wall_time_s": round(time.perf_counter() - start, 3),
        "output_digests": {k: _digest(Path(v)) for k, v in files.items()},
    }
    primary.with_name(primary.name + ".manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return 0


def main() -> None:
    sys.exit(run())
