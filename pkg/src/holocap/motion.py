"""Holomorphic motions, quadratic Julia sets and Böttcher coordinates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.spatial import cKDTree

from . import _parallel
from .core import INFINITY, InvalidArgument, NumericalFailure, PointCloud

EvalFn = Callable[[complex, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Motion:
    """``h(lam, z)`` for ``lam`` in the unit disk, vectorised over ``z``."""

    evaluate: EvalFn
    name: str
    params: dict[str, Any] = field(default_factory=dict)
    domain_note: str = "the whole plane"
    fixes_infinity: bool = True
    tolerance: float = 1e-10

    def __call__(self, lam: complex, z):
        if z is INFINITY:
            if self.fixes_infinity:
                return INFINITY
            raise InvalidArgument(f"motion {self.name} is not defined at infinity")
        if abs(lam) >= 1:
            raise InvalidArgument("lambda must lie in the open unit disk")
        scalar = np.ndim(z) == 0
        out = self.evaluate(complex(lam), np.atleast_1d(np.asarray(z, dtype=np.complex128)))
        return complex(out[0]) if scalar else out

    def apply(self, lam: complex, cloud: PointCloud) -> PointCloud:
        params = dict(cloud.generator_params)
        params["motion"] = {"name": self.name, **self.params,
                            "lambda": [float(np.real(lam)), float(np.imag(lam))]}
        return PointCloud(self(lam, cloud.points), f"{cloud.label}@{self.name}", params)

    @property
    def ident(self) -> str:
        if not self.params:
            return self.name
        args = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}:{args}"


def motion_translation(a: complex) -> Motion:
    a = complex(a)
    if not np.isfinite(a):
        raise InvalidArgument("translation vector must be finite")
    return Motion(lambda lam, z: z + lam * a, "translation", {"a": _num(a)})


def motion_scaling(beta: complex) -> Motion:
    beta = complex(beta)
    if abs(beta) > 0.5:
        raise InvalidArgument("|beta| must be at most 1/2")
    return Motion(lambda lam, z: (1 + beta * lam) * z, "scaling", {"beta": _num(beta)})


def motion_affine_stretch() -> Motion:
    return Motion(lambda lam, z: z + lam * np.conj(z), "stretch", {})


def _num(x: complex):
    x = complex(x)
    return x.real if x.imag == 0 else [x.real, x.imag]


# -- quadratic dynamics ----------------------------------------------------------

def mandelbrot_membership(c: complex, max_iter: int = 1000, escape_radius: float = 2.0) -> bool:
    if max_iter < 1:
        raise InvalidArgument("max_iter must be >= 1")
    z = 0j
    for _ in range(max_iter):
        z = z * z + c
        if abs(z) > escape_radius:
            return False
    return True


def repelling_fixed_point(c: complex) -> complex:
    """The fixed point ``(1 + sqrt(1 - 4c))/2`` of ``z^2 + c``, the landing point of ray 0."""
    return (1 + np.sqrt(complex(1 - 4 * c))) / 2


def julia_inverse_iteration(c: complex, n_samples: int, burn_in: int = 50, seed: int = 0,
                            workers: int | None = 1) -> PointCloud:
    """Sample the Julia set of ``z^2 + c`` by random backward orbits.

    Every sample is an independent orbit started at the repelling fixed point
    with ``burn_in + 1`` steps ``z <- ±sqrt(z - c)``; the sign sequence comes
    from the seeded stream of the sample's block.  The law of each sample
    approaches the balanced (equilibrium) measure of the Julia set.
    """
    if n_samples < 1:
        raise InvalidArgument("n_samples must be >= 1")
    c = complex(c)
    start = repelling_fixed_point(c)

    def run(block):
        b, s, e = block
        rng = _parallel.stream(seed, "julia", b)
        signs = rng.integers(0, 2, size=(burn_in + 1, e - s), dtype=np.int8)
        z = np.full(e - s, start, dtype=np.complex128)
        for k in range(burn_in + 1):
            z = np.sqrt(z - c)
            z = np.where(signs[k] == 1, -z, z)
        return z

    pts = np.concatenate(_parallel.pmap(run, _parallel.blocks(n_samples), workers))
    return PointCloud(pts, "julia-inverse-iteration",
                      {"c": _num(c), "n_samples": n_samples, "burn_in": burn_in, "seed": seed})


def forward_orbit_radius(c: complex, z, steps: int) -> np.ndarray:
    """Largest modulus along the first ``steps`` forward iterates of each point."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128)).copy()
    peak = np.abs(z)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            z = z * z + c
            peak = np.fmax(peak, np.abs(z))
            z = np.where(np.isfinite(z), z, np.inf)
    return peak


@dataclass(frozen=True)
class BottcherParams:
    """Backward-iteration depth and seed radius for Böttcher evaluations.

    Boundary points are evaluated at radius ``escape_radius ** 2**-depth``,
    which must be within ``tolerance`` of 1.  ``max_abs_c`` bounds the
    parameter region in which the Julia set is treated as a quasicircle.
    """

    depth: int = 40
    escape_radius: float = 1e4
    tolerance: float = 1e-6
    first_order_seed: bool = False
    max_abs_c: float = 0.2
    allow_outside_region: bool = False

    def __post_init__(self):
        if self.depth < 8:
            raise InvalidArgument("depth must be >= 8")
        if self.escape_radius < 100:
            raise InvalidArgument("escape_radius must be >= 100")
        if self.boundary_radius() - 1 >= self.tolerance:
            raise InvalidArgument(
                f"depth {self.depth} leaves radius {self.boundary_radius()} too far from 1 "
                f"for tolerance {self.tolerance}")

    def boundary_radius(self) -> float:
        return math.exp(math.log(self.escape_radius) / 2 ** self.depth)

    def check_parameter(self, c: complex) -> None:
        if abs(c) > self.max_abs_c + 1e-12 and not self.allow_outside_region:
            raise InvalidArgument(
                f"|c| = {abs(c):.4g} is outside the quasicircle test region |c| <= {self.max_abs_c}")


# keep the seed modulus finite when z is far from the unit circle
_LOG_SEED_CAP = math.log(1e100)
_BRANCH_TIE = 1e-9


def _doubling_angles(theta: np.ndarray, levels: int) -> np.ndarray:
    """``frac(2**k * theta)`` for ``k = 0..levels`` (doubling mod 1 is exact in binary)."""
    out = np.empty((levels + 1, theta.size))
    t = np.mod(theta, 1.0)
    out[0] = t
    for k in range(1, levels + 1):
        t = np.mod(2.0 * t, 1.0)
        out[k] = t
    return out


def _backward(c: complex, theta: np.ndarray, log_mod: np.ndarray, levels: np.ndarray,
              first_order: bool) -> np.ndarray:
    """Evaluate ``B_c`` at ``exp(log_mod + 2 pi i theta)`` by ``levels`` square-root steps."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.size, dtype=np.complex128)
    for m in np.unique(levels):
        sel = np.flatnonzero(levels == m)
        ang = _doubling_angles(theta[sel], int(m))
        w = np.exp(log_mod[sel] * 2.0 ** m + 2j * np.pi * ang[m])
        if first_order:
            w = w - c / (2 * w)
        for k in range(int(m) - 1, -1, -1):
            s = np.sqrt(w - c)
            target = 2 * np.pi * ang[k]
            d1 = np.abs(np.angle(s * np.exp(-1j * target)))
            d2 = np.pi - d1
            tie = np.abs(d1 - d2) < _BRANCH_TIE
            if np.any(tie):
                i = int(sel[np.flatnonzero(tie)[0]])
                raise NumericalFailure("ambiguous square-root branch", index=i,
                                       theta=float(theta[i]), level=k)
            w = np.where(d1 <= d2, s, -s)
        out[sel] = w
    return out


def external_ray_landing(c: complex, theta, params: BottcherParams = BottcherParams(),
                         validate: bool = True):
    """Landing point(s) of the external ray(s) of angle ``theta`` (in turns).

    Evaluates the Böttcher map at radius ``R ** 2**-depth`` by ``depth``
    backward square roots seeded at radius ``R``, picking at level ``k`` the
    root whose argument is closest to ``2 pi frac(2**k theta)``.
    """
    c = complex(c)
    params.check_parameter(c)
    scalar = np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    m = params.depth
    log_mod = np.full(th.size, math.log(params.escape_radius) / 2.0 ** m)
    z = _backward(c, th, log_mod, np.full(th.size, m), params.first_order_seed)
    if validate:
        # the forward orbit climbs back to the seed circle |w| = R after depth steps
        peak = forward_orbit_radius(c, z, m)
        bad = np.flatnonzero(~(peak <= 2 * params.escape_radius))
        if bad.size:
            raise NumericalFailure("landing point escapes under forward iteration",
                                   index=int(bad[0]), theta=float(th[bad[0]]))
    return complex(z[0]) if scalar else z


def bottcher_map(c: complex, z, params: BottcherParams = BottcherParams()) -> np.ndarray:
    """``B_c(z)`` for ``|z| >= 1``; points on the unit circle give ray landing points."""
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    r = np.abs(z)
    if np.any(r < 1 - 1e-12):
        raise InvalidArgument("the Böttcher motion is defined only for |z| >= 1")
    if c == 0:
        return z.copy()
    params.check_parameter(c)
    theta = np.mod(np.angle(z) / (2 * np.pi), 1.0)
    on_circle = r <= 1 + 1e-12
    out = np.empty(z.size, dtype=np.complex128)
    if on_circle.any():
        out[on_circle] = external_ray_landing(c, theta[on_circle], params)
    ext = ~on_circle
    if ext.any():
        L = np.log(r[ext])
        levels = np.minimum(params.depth, np.floor(np.log2(_LOG_SEED_CAP / L))).astype(int)
        levels = np.maximum(levels, 0)
        out[ext] = _backward(c, theta[ext], L, levels, params.first_order_seed)
    return out


def motion_bottcher(params: BottcherParams = BottcherParams()) -> Motion:
    """``h(lam, z) = B_{lam/4}(z)`` on the closed exterior of the unit disk."""

    def evaluate(lam, z):
        return bottcher_map(lam / 4, z, params)

    return Motion(evaluate, "bottcher",
                  {"depth": params.depth, "escape_radius": params.escape_radius},
                  domain_note="closed exterior of unit disk plus boundary",
                  tolerance=1e-4)


def make_motion(kind: str, **params) -> Motion:
    if kind == "translation":
        return motion_translation(_complex_param(params.get("a", 1.0)))
    if kind == "scaling":
        return motion_scaling(_complex_param(params.get("beta", 0.5)))
    if kind == "stretch":
        return motion_affine_stretch()
    if kind == "bottcher":
        fields = {k: params[k] for k in ("depth", "escape_radius", "tolerance", "max_abs_c",
                                         "first_order_seed", "allow_outside_region") if k in params}
        if "depth" in fields:
            fields["depth"] = int(fields["depth"])
        return motion_bottcher(BottcherParams(**fields))
    raise InvalidArgument(f"unknown motion kind {kind!r}")


def _complex_param(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


# -- axiom checks ------------------------------------------------------------------

@dataclass
class AxiomReport:
    motion: str
    identity_residual: float
    injectivity_min_distance: list[float]
    injectivity_flagged: bool
    mean_value_residual: float
    cauchy_riemann_residual: float
    tolerance: float
    note: str = "injectivity is a sampled check, not a proof"

    @property
    def holomorphy_residual(self) -> float:
        return max(self.mean_value_residual, self.cauchy_riemann_residual)

    @property
    def passed(self) -> bool:
        return (self.identity_residual <= self.tolerance
                and self.holomorphy_residual <= self.tolerance
                and not self.injectivity_flagged)

    def to_dict(self) -> dict[str, Any]:
        return {
            "motion": self.motion,
            "identity_residual": self.identity_residual,
            "injectivity_min_distance": self.injectivity_min_distance,
            "injectivity_flagged": self.injectivity_flagged,
            "mean_value_residual": self.mean_value_residual,
            "cauchy_riemann_residual": self.cauchy_riemann_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "note": self.note,
        }


def _min_pair_distance(z: np.ndarray) -> tuple[float, int, int]:
    tree = cKDTree(np.column_stack([z.real, z.imag]))
    d, i = tree.query(np.column_stack([z.real, z.imag]), k=2)
    k = int(np.argmin(d[:, 1]))
    return float(d[k, 1]), k, int(i[k, 1])


def check_motion_axioms(m: Motion, test_points: PointCloud, lambda_circle_radius: float = 0.5,
                        n_lambda: int = 32, seed: int = 0, tolerance: float | None = None,
                        step: float = 1e-4, injectivity_tol: float = 1e-9) -> AxiomReport:
    """Sampled checks of the three motion axioms.

    * identity: ``max |h(0, z) - z|``;
    * injectivity: smallest image separation at sampled ``lam`` values, flagged
      when it drops below ``injectivity_tol`` for separated preimages;
    * holomorphy: discrete circle mean of ``h(., z)`` against ``h(0, z)``, and a
      central-difference ``d/d(conj lam)`` at seeded points of the disk.
    """
    tol = m.tolerance if tolerance is None else tolerance
    z = test_points.points
    identity = float(np.max(np.abs(m(0.0, z) - z)))

    rng = _parallel.stream(seed, "axioms")
    radius = lambda_circle_radius
    lam_circle = radius * np.exp(2j * np.pi * np.arange(n_lambda) / n_lambda)
    n_inner = max(4, n_lambda // 4)
    lam_inner = 0.5 * radius * np.sqrt(rng.random(n_inner)) * np.exp(2j * np.pi * rng.random(n_inner))

    pre_sep, _, _ = _min_pair_distance(z) if z.size > 1 else (math.inf, 0, 0)
    min_dists = []
    flagged = False
    images = [m(lam, z) for lam in lam_circle]
    if z.size > 1:
        for lam, w in zip(np.concatenate([lam_circle, lam_inner]), images + [m(l, z) for l in lam_inner]):
            d, i, j = _min_pair_distance(w)
            min_dists.append(d)
            if d < injectivity_tol and abs(z[i] - z[j]) > injectivity_tol:
                flagged = True

    h0 = m(0.0, z)
    mean = np.mean(np.stack(images), axis=0)
    mean_value = float(np.max(np.abs(mean - h0)))

    cr = 0.0
    for lam in lam_inner:
        dx = (m(lam + step, z) - m(lam - step, z)) / (2 * step)
        dy = (m(lam + 1j * step, z) - m(lam - 1j * step, z)) / (2 * step)
        cr = max(cr, float(np.max(np.abs(0.5 * (dx + 1j * dy)))))

    return AxiomReport(m.ident, identity, min_dists, flagged, mean_value, cr, tol)
