"""Planar geometry primitives: point clouds, closed polylines, lambda grids.

Points are plain Python/numpy complex numbers.  The point at infinity is the
singleton :data:`INFINITY`; it never appears inside a :class:`PointCloud`.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np
from scipy.spatial import cKDTree


class InvalidArgument(ValueError):
    """An argument violates a documented precondition."""


class DegenerateInput(ValueError):
    """The input is well-formed but carries no usable geometry."""


class NumericalFailure(RuntimeError):
    """A numerical routine could not produce a trustworthy result."""

    def __init__(self, message: str, **diagnostics: Any):
        super().__init__(message)
        self.diagnostics = diagnostics


class _PointAtInfinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"

    def __reduce__(self):
        return (_PointAtInfinity, ())


INFINITY = _PointAtInfinity()


def is_infinity(z: Any) -> bool:
    return z is INFINITY


def _as_points(points: Iterable[complex] | np.ndarray) -> np.ndarray:
    arr = np.array(points, dtype=np.complex128).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PointCloud:
    """Finite sample of a compact planar set together with its provenance."""

    points: np.ndarray
    label: str = ""
    generator_params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.points, np.ndarray) and any(p is INFINITY for p in self.points):
            raise InvalidArgument("a point cloud cannot contain the point at infinity")
        pts = _as_points(self.points)
        if pts.size == 0:
            raise InvalidArgument("a point cloud must be nonempty")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgument("point cloud coordinates must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "generator_params", dict(self.generator_params))

    def __len__(self) -> int:
        return self.points.size

    def transformed(self, scale: complex = 1.0, shift: complex = 0.0, label: str | None = None) -> "PointCloud":
        params = dict(self.generator_params)
        params["affine"] = [[float(np.real(scale)), float(np.imag(scale))],
                            [float(np.real(shift)), float(np.imag(shift))]]
        return PointCloud(scale * self.points + shift, label if label is not None else self.label, params)

    def diameter(self) -> float:
        return float(farthest_pair_distance(self.points))

    # -- serialization -------------------------------------------------
    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            for line in header_comment.splitlines():
                buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["re", "im"])
        for p in self.points:
            writer.writerow([repr(float(p.real)), repr(float(p.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, label: str = "", generator_params: Mapping[str, Any] | None = None) -> "PointCloud":
        rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        reader = csv.DictReader(rows)
        if reader.fieldnames is None or not {"re", "im"} <= set(reader.fieldnames):
            raise InvalidArgument("point cloud CSV needs a 're,im' header")
        pts = [complex(float(r["re"]), float(r["im"])) for r in reader]
        return cls(pts, label, generator_params or {})

    def to_json(self) -> str:
        return json.dumps({
            "label": self.label,
            "points": [[float(p.real), float(p.imag)] for p in self.points],
            "generator_params": self.generator_params,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PointCloud":
        data = json.loads(text)
        pts = [complex(re, im) for re, im in data["points"]]
        return cls(pts, data.get("label", ""), data.get("generator_params", {}))


@dataclass(frozen=True)
class JordanCurveApprox:
    """Closed polyline; vertex ``k`` connects to vertex ``k+1`` cyclically."""

    vertices: np.ndarray
    closed: bool = True
    check_simple: bool = False

    def __post_init__(self):
        v = _as_points(self.vertices)
        if v.size < 3:
            raise InvalidArgument("a Jordan polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("polygon vertices must be finite")
        if np.any(v == np.roll(v, -1)):
            raise InvalidArgument("consecutive polygon vertices must be distinct")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "closed", True)
        if self.check_simple:
            bad = self_intersections(v)
            if bad:
                raise InvalidArgument(f"polygon is not simple; segments {bad[0]} intersect")

    def __len__(self) -> int:
        return self.vertices.size

    @property
    def starts(self) -> np.ndarray:
        return self.vertices

    @property
    def ends(self) -> np.ndarray:
        return np.roll(self.vertices, -1)

    def diameter(self) -> float:
        return float(farthest_pair_distance(self.vertices))

    def contains(self, z, chunk: int = 4_000_000) -> np.ndarray:
        """Even-odd point-in-polygon test (points exactly on an edge are unspecified).

        Each edge is only paired with the points in its horizontal band, found
        by bisection in the y-sorted points, so the cost scales with the
        number of actual crossings.
        """
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        order = np.argsort(z.imag, kind="stable")
        ys, xs = z.imag[order], z.real[order]
        a, b = self.starts, self.ends
        lo_y, hi_y = np.minimum(a.imag, b.imag), np.maximum(a.imag, b.imag)
        # edge e crosses the ray from z iff lo_y <= y < hi_y and x < x_e(y)
        lo = np.searchsorted(ys, lo_y, side="left")
        hi = np.searchsorted(ys, hi_y, side="left")
        counts = hi - lo
        parity = np.zeros(z.size, dtype=np.int64)
        edges = np.flatnonzero(counts)
        csum = np.cumsum(counts[edges])
        start = 0
        while start < edges.size:
            base = csum[start - 1] if start else 0
            stop = max(int(np.searchsorted(csum, base + chunk, side="right")), start + 1)
            e = edges[start:stop]
            n = counts[e]
            eid = np.repeat(e, n)
            first = np.repeat(np.cumsum(n) - n, n)
            idx = np.repeat(lo[e], n) + (np.arange(eid.size) - first)
            ay, by = a.imag[eid], b.imag[eid]
            xint = a.real[eid] + (ys[idx] - ay) * (b.real[eid] - a.real[eid]) / (by - ay)
            hit = xs[idx] < xint
            parity += np.bincount(idx[hit], minlength=z.size)
            start = stop
        inside = np.empty(z.size, dtype=bool)
        inside[order] = parity % 2 == 1
        return inside


@dataclass(frozen=True)
class LambdaGrid:
    samples: np.ndarray
    description: str = ""

    def __post_init__(self):
        s = _as_points(self.samples)
        if s.size == 0 or np.any(np.abs(s) >= 1.0):
            raise InvalidArgument("lambda samples must lie in the open unit disk")
        if not np.any(s == 0):
            raise InvalidArgument("a lambda grid must contain lambda = 0")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.size

    @classmethod
    def real(cls, start: float, stop: float, num: int) -> "LambdaGrid":
        pts = np.linspace(start, stop, num)
        pts[np.abs(pts) < 1e-12] = 0.0
        if not np.any(pts == 0):
            pts = np.sort(np.append(pts, 0.0))
        return cls(pts.astype(np.complex128), f"real:{start}:{stop}:{num}")

    @classmethod
    def polar(cls, radii: Iterable[float], n_angles: int) -> "LambdaGrid":
        """Origin plus ``n_angles`` equally spaced samples on each circle."""
        radii = [float(r) for r in radii]
        ang = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
        pts = [0j] + [r * a for r in radii for a in ang]
        return cls(np.array(pts), f"polar:{','.join(map(str, radii))}:{n_angles}")


# -- generators ----------------------------------------------------------

def gen_circle(n: int, radius: float = 1.0, center: complex = 0.0) -> PointCloud:
    if n < 3:
        raise InvalidArgument("gen_circle needs n >= 3")
    if not radius > 0:
        raise InvalidArgument("radius must be positive")
    k = np.arange(n)
    z = np.exp(2j * np.pi * k / n)
    # cos/sin leave ~1e-16 residue at multiples of pi/2
    z = np.where(np.abs(z.real) < 1e-15, 1j * z.imag, z)
    z = np.where(np.abs(z.imag) < 1e-15, z.real + 0j, z)
    pts = center + radius * z
    return PointCloud(pts, "circle", {"n": n, "radius": radius,
                                      "center": [float(np.real(center)), float(np.imag(center))]})


def gen_segment(n: int, a: complex, b: complex) -> PointCloud:
    if n < 2:
        raise InvalidArgument("gen_segment needs n >= 2")
    if a == b:
        raise InvalidArgument("segment endpoints must differ")
    t = np.linspace(0.0, 1.0, n)
    pts = a + t * (b - a)
    pts[-1] = b
    return PointCloud(pts, "segment", {"n": n, "a": [float(np.real(a)), float(np.imag(a))],
                                       "b": [float(np.real(b)), float(np.imag(b))]})


def gen_arcsine_segment(n: int, a: complex, b: complex) -> PointCloud:
    """Chebyshev nodes on [a, b]; their empirical law tends to the arcsine (equilibrium) law."""
    if n < 2 or a == b:
        raise InvalidArgument("need n >= 2 and distinct endpoints")
    t = 0.5 * (1.0 - np.cos(np.pi * (np.arange(n) + 0.5) / n))
    return PointCloud(a + t * (b - a), "segment-arcsine",
                      {"n": n, "a": [float(np.real(a)), float(np.imag(a))],
                       "b": [float(np.real(b)), float(np.imag(b))]})


def gen_ellipse(n: int, a: float, b: float) -> PointCloud:
    if n < 3 or a <= 0 or b <= 0:
        raise InvalidArgument("need n >= 3 and positive semi-axes")
    t = 2 * np.pi * np.arange(n) / n
    return PointCloud(a * np.cos(t) + 1j * b * np.sin(t), "ellipse", {"n": n, "a": a, "b": b})


def cantor_quarter_squares(level: int) -> tuple[np.ndarray, float]:
    """Lower-left corners and common side length of the level-th generation squares."""
    if level < 0:
        raise InvalidArgument("level must be >= 0")
    corners = np.zeros(1, dtype=np.complex128)
    side = 1.0
    offsets = np.array([0, 1, 1j, 1 + 1j])
    for _ in range(level):
        child = side / 4
        corners = (corners[:, None] + (side - child) * offsets[None, :]).ravel()
        side = child
    return corners, side


def gen_cantor_quarter_square(level: int, points_per_square: int = 2) -> PointCloud:
    """Sample the level-th generation of the Cantor 1/4-square in [0,1]^2.

    ``points_per_square = m`` puts an ``m x m`` grid (corners included) in
    every square; ``m = 1`` gives the square centres.
    """
    if points_per_square < 1:
        raise InvalidArgument("points_per_square must be >= 1")
    corners, side = cantor_quarter_squares(level)
    m = points_per_square
    if m == 1:
        local = np.array([0.5 * side * (1 + 1j)])
    else:
        u = np.linspace(0.0, side, m)
        local = (u[:, None] + 1j * u[None, :]).ravel()
    pts = (corners[:, None] + local[None, :]).ravel()
    pts = np.clip(pts.real, 0, 1) + 1j * np.clip(pts.imag, 0, 1)
    return PointCloud(pts, "cantor-quarter-square",
                      {"level": level, "points_per_square": m, "squares": int(corners.size), "side": side})


# -- distances -------------------------------------------------------------

def farthest_pair_distance(points: np.ndarray) -> float:
    i, j = farthest_pair(points)
    return float(abs(points[i] - points[j]))


def farthest_pair(points: np.ndarray, chunk: int = 2048) -> tuple[int, int]:
    """Indices ``(i, j)``, ``i < j``, of a farthest pair; lowest indices win ties."""
    pts = np.asarray(points, dtype=np.complex128)
    n = pts.size
    if n < 2:
        raise InvalidArgument("need at least two points")
    cand, ring = _hull_candidates(pts)
    if ring is not None and ring.size > 512:
        return _calipers(pts, ring)
    best, bi, bj = -1.0, 0, 1
    for s in range(0, cand.size, chunk):
        rows = cand[s:s + chunk]
        d = np.abs(pts[rows][:, None] - pts[cand][None, :])
        d[rows[:, None] >= cand[None, :]] = -1.0
        flat = int(np.argmax(d))
        r, c = divmod(flat, cand.size)
        if d[r, c] > best:
            best, bi, bj = float(d[r, c]), int(rows[r]), int(cand[c])
    return bi, bj


def _calipers(pts: np.ndarray, ring: np.ndarray) -> tuple[int, int]:
    """Farthest pair over the antipodal pairs of a convex polygon (counterclockwise ``ring``)."""
    P = pts[ring]
    m = P.size

    def cross(u: complex, v: complex) -> float:
        return u.real * v.imag - u.imag * v.real

    pairs = []
    j = 1
    for i in range(m):
        ni = (i + 1) % m
        e = P[ni] - P[i]
        while cross(e, P[(j + 1) % m] - P[j]) > 0:
            j = (j + 1) % m
        pairs += [(i, j), (ni, j)]
        if cross(e, P[(j + 1) % m] - P[j]) == 0:
            pairs += [(i, (j + 1) % m), (ni, (j + 1) % m)]
    a = np.array(pairs)
    ia, ib = ring[a[:, 0]], ring[a[:, 1]]
    lo, hi = np.minimum(ia, ib), np.maximum(ia, ib)
    keep = lo < hi
    lo, hi = lo[keep], hi[keep]
    d = np.abs(pts[lo] - pts[hi])
    top = np.flatnonzero(d == d.max())
    k = top[np.lexsort((hi[top], lo[top]))[0]]
    return int(lo[k]), int(hi[k])


def _hull_candidates(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Indices of possible farthest-pair endpoints (ascending) and, when
    available, the hull vertices in counterclockwise order."""
    from scipy.spatial import ConvexHull, QhullError

    if pts.size <= 64:
        return np.arange(pts.size), None
    xy = np.column_stack([pts.real, pts.imag])
    ring = None
    try:
        verts = ConvexHull(xy).vertices
    except (QhullError, ValueError):
        # collinear input: extremes along the principal direction
        centred = xy - xy.mean(axis=0)
        _, _, vt = np.linalg.svd(centred, full_matrices=False)
        proj = centred @ vt[0]
        verts = np.array([np.argmin(proj), np.argmax(proj)])
    # duplicates of a hull vertex resolve to the lowest index
    uniq, first = np.unique(pts, return_index=True)
    lowest = first[np.searchsorted(uniq, pts[verts])]
    if verts.size > 2:
        ring = lowest
    return np.unique(lowest), ring


def segment_distance(z: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distance from ``z`` to segments ``[a, b]`` (broadcasting) and the foot parameter."""
    ab = b - a
    denom = np.abs(ab) ** 2
    t = np.real((z - a) * np.conj(ab)) / denom
    t = np.clip(t, 0.0, 1.0)
    foot = a + t * ab
    return np.abs(z - foot), t


class SegmentLocator:
    """Exact nearest-segment queries on a closed polyline.

    Candidate segments come from a k-d tree over segment midpoints.  A query
    is exact once the k-th midpoint is farther than (best distance + largest
    half-length); otherwise it falls back to a full scan.
    """

    def __init__(self, curve: JordanCurveApprox, k: int = 16):
        self.a = curve.starts
        self.b = curve.ends
        mid = 0.5 * (self.a + self.b)
        self.half = 0.5 * float(np.max(np.abs(self.b - self.a)))
        self.tree = cKDTree(np.column_stack([mid.real, mid.imag]))
        self.k = min(k, self.a.size)

    def query(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Return (distance, nearest segment index) for each query point."""
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        if z.size == 0:
            return np.zeros(0), np.zeros(0, dtype=np.int64)
        dist, seg, unsure = self._knn(z, self.k)
        if unsure.size and 4 * self.k < self.a.size:
            d2, s2, u2 = self._knn(z[unsure], 4 * self.k)
            dist[unsure], seg[unsure] = d2, s2
            unsure = unsure[u2]
        if unsure.size:
            fd, fs = self._scan(z[unsure])
            dist[unsure], seg[unsure] = fd, fs
        return dist, seg

    def _knn(self, z: np.ndarray, k: int):
        k = min(k, self.a.size)
        kd, ki = self.tree.query(np.column_stack([z.real, z.imag]), k=k)
        if k == 1:
            kd, ki = kd[:, None], ki[:, None]
        d, _ = segment_distance(z[:, None], self.a[ki], self.b[ki])
        pos = np.argmin(d, axis=1)
        rows = np.arange(z.size)
        dist = d[rows, pos]
        seg = ki[rows, pos]
        # a segment outside the candidate set has its midpoint beyond kd[-1]
        # and so lies at distance at least kd[-1] - half
        if k < self.a.size:
            unsure = np.flatnonzero(kd[:, -1] <= dist + self.half)
        else:
            unsure = np.zeros(0, dtype=np.int64)
        return dist, seg, unsure

    def query_radius(self, z, near: float, spacing: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """A radius ``r <= dist(z, curve)``; exact (with its segment) wherever ``r < near``.

        Away from the curve ``r`` is the distance to a resampling of the
        polyline at spacing ``h`` minus ``h/2``, a certified lower bound since
        every curve point lies within ``h/2`` of a sample.  Coarse resamplings
        answer far points and finer ones are consulted only near the curve.
        Segment indices are ``-1`` where ``r`` is only a bound.
        """
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        r = np.empty(z.size)
        todo = np.arange(z.size)
        levels = self._levels(near / 2 if spacing is None else spacing)
        for i, (tree, h) in enumerate(levels):
            if todo.size == 0:
                break
            ds, _ = tree.query(np.column_stack([z[todo].real, z[todo].imag]), k=1)
            ok = ds >= 16 * h if i < len(levels) - 1 else np.ones(todo.size, dtype=bool)
            r[todo[ok]] = ds[ok] - 0.5 * h
            todo = todo[~ok]
        seg = np.full(z.size, -1, dtype=np.int64)
        close = np.flatnonzero(r < near)
        if close.size:
            d, sg = self.query(z[close])
            r[close], seg[close] = d, sg
        return r, seg

    def _levels(self, spacing: float):
        cached = getattr(self, "_levels_cache", None)
        if cached is not None and cached[0] == spacing:
            return cached[1]
        lengths = np.abs(self.b - self.a)
        total = float(lengths.sum())
        finest = max(float(spacing), total / 200_000)
        hs = [finest]
        while hs[-1] * 8 < total / 32:
            hs.append(hs[-1] * 8)
        out = [self._resample(lengths, h) for h in reversed(hs)]
        self._levels_cache = (spacing, out)
        return out

    def _resample(self, lengths: np.ndarray, h: float):
        # equal arc-length steps: each curve point is within h/2 (along the
        # curve, hence in the plane) of a sample
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        k = max(1, int(np.ceil(cum[-1] / h)))
        s = np.arange(k) * (cum[-1] / k)
        seg = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, lengths.size - 1)
        t = (s - cum[seg]) / np.where(lengths[seg] > 0, lengths[seg], 1.0)
        pts = self.a[seg] + t * (self.b[seg] - self.a[seg])
        return cKDTree(np.column_stack([pts.real, pts.imag])), cum[-1] / k

    def _scan(self, z: np.ndarray, chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
        out_d = np.empty(z.size)
        out_s = np.empty(z.size, dtype=np.int64)
        for s in range(0, z.size, chunk):
            d, _ = segment_distance(z[s:s + chunk, None], self.a[None, :], self.b[None, :])
            idx = np.argmin(d, axis=1)
            out_s[s:s + chunk] = idx
            out_d[s:s + chunk] = d[np.arange(idx.size), idx]
        return out_d, out_s


def dist_to_curve(z, curve: JordanCurveApprox):
    """Euclidean distance from ``z`` (scalar or array) to the closed polyline."""
    scalar = np.ndim(z) == 0
    d, _ = SegmentLocator(curve).query(z)
    return float(d[0]) if scalar else d


def self_intersections(vertices: np.ndarray, tol: float = 0.0) -> list[tuple[int, int]]:
    """Pairs of non-adjacent polygon edges that intersect (or come within ``tol``)."""
    v = np.asarray(vertices, dtype=np.complex128)
    n = v.size
    a, b = v, np.roll(v, -1)
    mid = 0.5 * (a + b)
    reach = float(np.max(np.abs(b - a))) + tol
    tree = cKDTree(np.column_stack([mid.real, mid.imag]))
    pairs = tree.query_pairs(reach, output_type="ndarray")
    if pairs.size == 0:
        return []
    i, j = pairs[:, 0], pairs[:, 1]
    adjacent = (np.abs(i - j) == 1) | (np.abs(i - j) == n - 1)
    i, j = i[~adjacent], j[~adjacent]

    def orient(p, q, r):
        return np.sign(np.imag(np.conj(q - p) * (r - p)))

    o1 = orient(a[i], b[i], a[j])
    o2 = orient(a[i], b[i], b[j])
    o3 = orient(a[j], b[j], a[i])
    o4 = orient(a[j], b[j], b[i])
    hit = (o1 * o2 <= 0) & (o3 * o4 <= 0)
    if tol > 0:
        close = np.minimum.reduce([
            segment_distance(a[i], a[j], b[j])[0], segment_distance(b[i], a[j], b[j])[0],
            segment_distance(a[j], a[i], b[i])[0], segment_distance(b[j], a[i], b[i])[0]])
        hit |= close <= tol
    out = sorted((int(x), int(y)) for x, y in zip(i[hit], j[hit]))
    return out
