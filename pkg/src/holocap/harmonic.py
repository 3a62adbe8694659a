"""Harmonic measure by walk-on-spheres and conformal weldings of Julia quasicircles."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import _parallel
from .core import (InvalidArgument, JordanCurveApprox, NumericalFailure, SegmentLocator,
                   self_intersections)
from .motion import BottcherParams, external_ray_landing


WOS_BLOCK = 16384


@dataclass
class MeasureVector:
    """Discrete harmonic measure over boundary cells.

    ``hits`` counts absorbed walks per cell; walks stopped by the step cap are
    in ``n_capped`` and excluded, so ``hits.sum() == n_walks - n_capped``.
    """

    weights: np.ndarray
    hits: np.ndarray
    n_walks: int
    epsilon: float
    n_capped: int = 0
    mean_steps: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.hits = np.asarray(self.hits, dtype=np.int64)
        if np.any(self.weights < 0):
            raise InvalidArgument("weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise InvalidArgument("weights must sum to 1")

    def __len__(self) -> int:
        return self.weights.size

    def mc_error(self) -> np.ndarray:
        n = max(int(self.hits.sum()), 1)
        return np.sqrt(self.weights * (1 - self.weights) / n)

    def merged(self, groups: Sequence[Sequence[int]]) -> "MeasureVector":
        w = np.array([self.weights[list(g)].sum() for g in groups])
        h = np.array([self.hits[list(g)].sum() for g in groups]) if self.hits.size else self.hits
        return MeasureVector(w / w.sum(), h, self.n_walks, self.epsilon, self.n_capped, self.mean_steps)


def equal_cells(n_segments: int, n_cells: int) -> np.ndarray:
    """Segment-to-cell map splitting the polygon into ``n_cells`` contiguous runs."""
    if n_segments % n_cells:
        raise InvalidArgument("number of segments must be a multiple of the number of cells")
    return np.arange(n_segments) // (n_segments // n_cells)


def _normalise_weights(hits: np.ndarray) -> np.ndarray:
    total = hits.sum()
    if total == 0:
        raise NumericalFailure("no walk was absorbed")
    w = hits / total
    # exact unit sum: push the rounding residue into the largest cell
    w[np.argmax(w)] += 1.0 - w.sum()
    return w


def wos_harmonic_measure(curve: JordanCurveApprox, z0: complex, cells=None, n_walks: int = 100_000,
                         epsilon: float | None = None, seed: int = 0, max_steps: int = 10_000,
                         workers: int | None = 1) -> MeasureVector:
    """Harmonic measure of the polygon's interior seen from ``z0``.

    Each walk jumps to a uniform point on the largest circle about the current
    position that avoids the curve, until it is within ``epsilon`` of the
    curve; the hit goes to the cell of the nearest segment.  ``cells`` is
    ``None`` (one cell per segment), a cell count (equal contiguous runs) or a
    segment-to-cell array.  ``epsilon`` defaults to ``1e-3 * diameter``.
    """
    nseg = len(curve)
    if cells is None:
        cell_of = np.arange(nseg)
    elif np.ndim(cells) == 0:
        cell_of = equal_cells(nseg, int(cells))
    else:
        cell_of = np.asarray(cells, dtype=np.int64)
        if cell_of.size != nseg:
            raise InvalidArgument("cell map must have one entry per segment")
    n_cells = int(cell_of.max()) + 1
    if epsilon is None:
        epsilon = 1e-3 * curve.diameter()
    if not epsilon > 0:
        raise InvalidArgument("epsilon must be positive")
    z0 = complex(z0)
    locator = SegmentLocator(curve)
    if not curve.contains(z0)[0]:
        raise InvalidArgument("basepoint lies outside the curve")
    d0 = float(locator.query(z0)[0][0])
    if d0 <= epsilon:
        raise InvalidArgument("basepoint lies within epsilon of the curve")

    def run(block):
        b, s, e = block
        rng = _parallel.stream(seed, "wos", b)
        m = e - s
        z = np.full(m, z0)
        alive = np.arange(m)
        hit_cell = np.full(m, -1, dtype=np.int64)
        steps = np.zeros(m, dtype=np.int64)
        for step in range(max_steps):
            if alive.size == 0:
                break
            if step == 0:
                # every walk starts at z0, whose distance is already known
                r, seg = np.full(m, d0), np.full(m, -1, dtype=np.int64)
            else:
                r, seg = locator.query_radius(z[alive], epsilon)
            done = r < epsilon
            if done.any():
                hit_cell[alive[done]] = cell_of[seg[done]]
            keep = ~done
            alive, r = alive[keep], r[keep]
            # one uniform draw per still-active walk; order is fixed by the block
            u = rng.random(alive.size)
            z[alive] += r * np.exp(2j * np.pi * u)
            steps[alive] += 1
        hits = np.bincount(hit_cell[hit_cell >= 0], minlength=n_cells)
        return hits, int(np.count_nonzero(hit_cell < 0)), int(steps.sum())

    results = _parallel.pmap(run, _parallel.blocks(n_walks, WOS_BLOCK), workers)
    hits = np.sum([h for h, _, _ in results], axis=0)
    capped = sum(c for _, c, _ in results)
    total_steps = sum(s for _, _, s in results)
    return MeasureVector(_normalise_weights(hits.astype(float)), hits, n_walks, float(epsilon),
                         capped, total_steps / n_walks)


def external_measure_arcs(partition: Sequence[float]) -> MeasureVector:
    """Exterior harmonic measure of the arcs between consecutive external angles.

    ``partition`` is increasing and spans exactly one turn, e.g. ``[0, 0.1, 1]``.
    """
    p = np.asarray(partition, dtype=float)
    if p.size < 2 or np.any(np.diff(p) <= 0):
        raise InvalidArgument("partition must be strictly increasing")
    if abs(p[-1] - p[0] - 1.0) > 1e-12:
        raise InvalidArgument("partition must span one full turn")
    w = np.diff(p)
    w[np.argmax(w)] += 1.0 - w.sum()
    return MeasureVector(w, np.zeros(0, dtype=np.int64), 0, 0.0)


@dataclass
class WeldingTable:
    """Sampled circle homeomorphism ``theta_k -> phi_k`` (both in turns)."""

    external_angles: np.ndarray
    internal_angles: np.ndarray
    increments: np.ndarray
    c: complex
    mc_error: np.ndarray
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def resolution(self) -> int:
        return self.external_angles.size

    @classmethod
    def from_increments(cls, increments, c: complex = 0j, mc_error=None, **diagnostics) -> "WeldingTable":
        d = np.asarray(increments, dtype=float)
        if np.any(d < 0) or abs(d.sum() - 1) > 1e-12:
            raise InvalidArgument("increments must be nonnegative and sum to 1")
        n = d.size
        phi = np.concatenate([[0.0], np.cumsum(d)[:-1]])
        theta = np.arange(n) / n
        err = np.zeros(n) if mc_error is None else np.asarray(mc_error, dtype=float)
        diagnostics.setdefault("strictly_monotone", bool(np.all(d > 0)))
        diagnostics.setdefault("normalization", "phi_0 = 0 at theta_0 = 0")
        return cls(theta, phi, d, complex(c), err, diagnostics)

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            for line in header_comment.splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "phi", "delta", "mc_error"])
        for row in zip(self.external_angles, self.internal_angles, self.increments, self.mc_error):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def welding_table(c: complex, resolution: int, n_walks: int = 100_000, epsilon: float | None = None,
                  seed: int = 0, ray_params: BottcherParams = BottcherParams(),
                  polygon_vertices: int = 4096, workers: int | None = 1) -> WeldingTable:
    """Conformal welding of the Julia quasicircle of ``z^2 + c`` at ``resolution`` angles.

    The curve is the polygon through the landing points of ``M`` equally spaced
    external rays (``M`` a multiple of ``resolution``, at least
    ``polygon_vertices``).  Cell ``k`` is the arc between the landings of
    ``k/N`` and ``(k+1)/N``; its exterior harmonic measure is exactly ``1/N``,
    and its interior measure from 0, estimated by walk-on-spheres, is the
    increment of the internal angle.
    """
    n = int(resolution)
    if n < 2 or n & (n - 1):
        raise InvalidArgument("resolution must be a power of two")
    refine = max(1, -(-int(polygon_vertices) // n))
    m = n * refine
    theta_fine = np.arange(m) / m
    try:
        verts = external_ray_landing(c, theta_fine, ray_params)
    except NumericalFailure as exc:
        idx = exc.diagnostics.get("index", 0)
        raise NumericalFailure(f"ray landing failed: {exc}", cell=int(idx) // refine) from exc
    bad = self_intersections(verts)
    if bad:
        raise NumericalFailure("landing polygon is not simple", cell=bad[0][0] // refine)
    curve = JordanCurveApprox(verts)
    if not curve.contains(0j)[0]:
        raise NumericalFailure("basepoint 0 is not inside the landing polygon", cell=-1)
    measure = wos_harmonic_measure(curve, 0j, equal_cells(m, n), n_walks, epsilon, seed, workers=workers)
    zero = int(np.count_nonzero(measure.hits == 0))
    return WeldingTable.from_increments(
        measure.weights, c, measure.mc_error(),
        n_walks=int(n_walks), absorbed=int(measure.hits.sum()), n_capped=measure.n_capped,
        epsilon=measure.epsilon, polygon_vertices=m, mean_steps=measure.mean_steps,
        zero_cells=zero, strictly_monotone=zero == 0, seed=int(seed),
    )


def concentration_statistic(table: WeldingTable, alpha: float = 0.9) -> float:
    """Smallest fraction of cells whose internal increments carry mass ``alpha``."""
    if not 0 < alpha < 1:
        raise InvalidArgument("alpha must lie in (0, 1)")
    d = np.sort(table.increments)[::-1]
    k = int(np.searchsorted(np.cumsum(d), alpha - 1e-12)) + 1
    return min(k, d.size) / d.size


def ks_identity_distance(table: WeldingTable) -> float:
    """``max_k |phi_k - theta_k - s|`` minimised over the rotation ``s``."""
    diff = table.internal_angles - table.external_angles
    return float(0.5 * (diff.max() - diff.min()))


def indicator_report(table: WeldingTable, alpha: float = 0.9) -> str:
    return json.dumps({
        "c": [table.c.real, table.c.imag],
        "resolution": table.resolution,
        "alpha": alpha,
        "concentration": concentration_statistic(table, alpha),
        "ks_identity_distance": ks_identity_distance(table),
        "diagnostics": table.diagnostics,
        "note": "qualitative singularity indicators; mutual singularity is not decided numerically",
    }, sort_keys=True, indent=2)
