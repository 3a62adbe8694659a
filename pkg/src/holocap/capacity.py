"""Transfinite diameter, Fekete/Leja optimisation and energy estimates of capacity."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import _parallel
from .core import DegenerateInput, InvalidArgument, PointCloud, farthest_pair

MONOTONE_TOL = 1e-9


def _pts(x) -> np.ndarray:
    if isinstance(x, PointCloud):
        return x.points
    return np.asarray(x, dtype=np.complex128).ravel()


def log_vandermonde(points) -> float:
    """Sum of ``log|w_j - w_k|`` over pairs ``j < k``; ``-inf`` on a repeated point."""
    w = _pts(points)
    n = w.size
    if n < 2:
        raise InvalidArgument("need at least two points")
    iu = np.triu_indices(n, 1)
    d = np.abs(w[:, None] - w[None, :])[iu]
    if np.any(d == 0):
        return -math.inf
    return float(np.sum(np.log(d)))


def nth_diameter(points) -> float:
    w = _pts(points)
    n = w.size
    lv = log_vandermonde(w)
    if lv == -math.inf:
        return 0.0
    return math.exp(2.0 * lv / (n * (n - 1)))


def leja_sequence(candidates, n: int) -> list[int]:
    """Greedy Leja indices: farthest pair first, then maximal log-potential."""
    z = _pts(candidates)
    if n < 2:
        raise InvalidArgument("n must be >= 2")
    if z.size < n:
        raise InvalidArgument(f"need at least {n} candidates, got {z.size}")
    i, j = farthest_pair(z)
    chosen = [i, j]
    taken = np.zeros(z.size, dtype=bool)
    taken[chosen] = True
    with np.errstate(divide="ignore"):
        pot = np.log(np.abs(z - z[i])) + np.log(np.abs(z - z[j]))
        while len(chosen) < n:
            score = np.where(taken, -np.inf, pot)
            k = int(np.argmax(score))
            if taken[k]:
                # every remaining candidate is taken; can only happen when n > size
                raise InvalidArgument("ran out of candidates")
            chosen.append(k)
            taken[k] = True
            pot = pot + np.log(np.abs(z - z[k]))
    return chosen


@dataclass
class FeketeResult:
    indices: list[int]
    points: np.ndarray
    log_vandermonde: float
    delta: float
    initial_log_vandermonde: float
    passes: int
    exchanges: int
    converged: bool


def fekete_exchange(candidates, n: int, max_passes: int = 500, seed: int = 0,
                    rel_tol: float = 1e-13) -> FeketeResult:
    """Local search for an ``n``-point Fekete tuple among ``candidates``.

    Starts from the Leja indices and visits tuple positions in a seeded random
    order; each position moves to the candidate that maximises the
    log-Vandermonde, if that is a strict improvement.  Stops after a pass with
    no accepted exchange.
    """
    z = _pts(candidates)
    idx = np.array(leja_sequence(z, n), dtype=np.int64)
    if z.size == n:
        lv = log_vandermonde(z[idx])
        return FeketeResult(idx.tolist(), z[idx].copy(), lv, nth_diameter(z[idx]), lv, 0, 0, True)

    rng = _parallel.stream(seed, "fekete", n)
    with np.errstate(divide="ignore", invalid="ignore"):
        logd = np.log(np.abs(z[:, None] - z[idx][None, :]))  # (M, n)
        pot = logd.sum(axis=1)
    lv0 = log_vandermonde(z[idx])
    lv = lv0
    scale = max(1.0, abs(lv0)) if math.isfinite(lv0) else 1.0
    passes = exchanges = 0
    converged = False
    while passes < max_passes:
        passes += 1
        moved = 0
        for pos in rng.permutation(n):
            cur = idx[pos]
            with np.errstate(invalid="ignore"):
                score = pot - logd[:, pos]
            # points coinciding with the current one give nan (-inf - -inf)
            score = np.where(np.isnan(score), -np.inf, score)
            score[cur] = -np.inf
            best = int(np.argmax(score))
            with np.errstate(divide="ignore"):
                current = float(np.sum(np.log(np.abs(z[cur] - np.delete(z[idx], pos)))))
            if not score[best] > current + rel_tol * scale:
                continue
            with np.errstate(divide="ignore"):
                new_col = np.log(np.abs(z - z[best]))
            with np.errstate(invalid="ignore"):
                pot = pot - logd[:, pos] + new_col
            logd[:, pos] = new_col
            stale = np.isnan(pot)
            if stale.any():
                pot[stale] = logd[stale].sum(axis=1)
            idx[pos] = best
            moved += 1
        exchanges += moved
        if moved == 0:
            converged = True
            break
        # refresh sums occasionally against drift
        if passes % 50 == 0:
            pot = logd.sum(axis=1)
    lv = log_vandermonde(z[idx])
    return FeketeResult(idx.tolist(), z[idx].copy(), lv, nth_diameter(z[idx]), lv0, passes, exchanges, converged)


@dataclass
class CapacityReport:
    diameters: list[tuple[int, float]]
    raw_estimate: float
    extrapolated: float
    method: str
    optimizer_stats: dict[str, Any] = field(default_factory=dict)
    extrapolation_stderr: float = 0.0
    monotone: bool = True
    violations: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "diameters": [[int(n), float(d)] for n, d in self.diameters],
            "raw": float(self.raw_estimate),
            "extrapolated": float(self.extrapolated),
            "extrapolation_stderr": float(self.extrapolation_stderr),
            "method": self.method,
            "monotone": bool(self.monotone),
            "violations": [[int(n), float(v)] for n, v in self.violations],
            "stats": self.optimizer_stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _upper_half(ns: np.ndarray) -> np.ndarray:
    mid = 0.5 * (ns[0] + ns[-1])
    mask = ns >= mid
    if mask.sum() < 2:
        mask = np.zeros(ns.size, dtype=bool)
        mask[-2:] = True
    return mask


def capacity_from_diameters(diameters: Sequence[tuple[int, float]], method: str = "given",
                            optimizer_stats: dict[str, Any] | None = None,
                            tol: float = MONOTONE_TOL) -> CapacityReport:
    """Raw and extrapolated capacity from an increasing-``n`` sequence of diameters.

    The extrapolation is the intercept of a least-squares line ``delta ~ c + a/n``
    over the upper half of the ``n`` range (``n >= (n_min + n_max)/2``).
    """
    if len(diameters) < 3:
        raise InvalidArgument("need at least three (n, delta) entries")
    ns = np.array([int(n) for n, _ in diameters])
    ds = np.array([float(d) for _, d in diameters])
    if np.any(np.diff(ns) <= 0):
        raise InvalidArgument("n values must be strictly increasing")
    mask = _upper_half(ns)
    x, y = 1.0 / ns[mask], ds[mask]
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    intercept = float(coef[0])
    stderr = 0.0
    if x.size > 2:
        resid = y - A @ coef
        s2 = float(resid @ resid) / (x.size - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        stderr = math.sqrt(max(cov[0, 0], 0.0))
    if np.allclose(ds, ds[0], rtol=0, atol=1e-15):
        intercept = float(ds[0])
    steps = np.diff(ds)
    bad = [(int(ns[k + 1]), float(steps[k])) for k in range(steps.size) if steps[k] > tol]
    return CapacityReport(
        diameters=[(int(n), float(d)) for n, d in zip(ns, ds)],
        raw_estimate=float(ds[-1]),
        extrapolated=intercept,
        method=method,
        optimizer_stats=dict(optimizer_stats or {}),
        extrapolation_stderr=stderr,
        monotone=not bad,
        violations=bad,
    )


DEFAULT_NS = (8, 12, 16, 24, 32, 40, 48, 56, 64)


def fekete_capacity(candidates, ns: Sequence[int] = DEFAULT_NS, max_passes: int = 500,
                    seed: int = 0, workers: int | None = 1) -> CapacityReport:
    """Run :func:`fekete_exchange` for each ``n`` and assemble a report."""
    z = _pts(candidates)
    ns = sorted(int(n) for n in ns)
    distinct = np.unique(z).size
    usable = [n for n in ns if n <= distinct]
    if len(usable) < 3:
        raise InvalidArgument(f"need at least three n values <= {distinct} distinct candidates")
    runs = _parallel.pmap(lambda n: fekete_exchange(z, n, max_passes, seed), usable, workers)
    stats = {
        "candidates": int(z.size),
        "passes": {str(n): r.passes for n, r in zip(usable, runs)},
        "exchanges": {str(n): r.exchanges for n, r in zip(usable, runs)},
        "converged": all(r.converged for r in runs),
    }
    return capacity_from_diameters([(n, r.delta) for n, r in zip(usable, runs)], "fekete", stats)


@dataclass
class EnergyEstimate:
    pair_count: int
    mean_neg_log_distance: float
    capacity: float
    skipped_coincident: int = 0
    stderr: float = 0.0
    exhaustive: bool = False


def energy_capacity(samples, max_pairs: int = 1_000_000, seed: int = 0,
                    workers: int | None = 1) -> EnergyEstimate:
    """Monte-Carlo logarithmic energy of the empirical measure of ``samples``.

    All ``n(n-1)/2`` pairs are used when that is at most ``max_pairs``;
    otherwise ``max_pairs`` ordered pairs ``i != j`` are drawn in seeded blocks.
    Coincident pairs are skipped and counted.
    """
    z = _pts(samples)
    n = z.size
    if n < 2 or np.all(z == z[0]):
        raise DegenerateInput("need at least two distinct points")
    total = n * (n - 1) // 2
    if total <= max_pairs:
        iu = np.triu_indices(n, 1)
        d = np.abs(z[iu[0]] - z[iu[1]])
        exhaustive = True
    else:
        def draw(block):
            b, s, e = block
            rng = _parallel.stream(seed, "energy", b)
            i = rng.integers(0, n, e - s)
            j = (i + rng.integers(1, n, e - s)) % n
            return np.abs(z[i] - z[j])
        d = np.concatenate(_parallel.pmap(draw, _parallel.blocks(max_pairs, 1 << 16), workers))
        exhaustive = False
    keep = d > 0
    skipped = int(d.size - np.count_nonzero(keep))
    v = -np.log(d[keep])
    if v.size == 0:
        raise DegenerateInput("all sampled pairs coincide")
    mean = float(np.mean(v))
    stderr = 0.0 if exhaustive else float(np.std(v) / math.sqrt(v.size))
    return EnergyEstimate(int(v.size), mean, math.exp(-mean), skipped, stderr, exhaustive)


# -- closed-form oracles ----------------------------------------------------------

def reference_capacity(shape: str, **params: float) -> float:
    """Classical logarithmic capacities: disk ``r``; segment ``length``; ellipse ``a, b``."""
    for k, v in params.items():
        if not v > 0:
            raise InvalidArgument(f"parameter {k} must be positive")
    if shape == "disk":
        return float(params["r"])
    if shape == "segment":
        return float(params["length"]) / 4.0
    if shape == "ellipse":
        return 0.5 * (float(params["a"]) + float(params["b"]))
    raise InvalidArgument(f"unknown shape {shape!r}")


@dataclass
class GammaOracleResult:
    value: float | None
    shape: str
    provenance: str


def reference_gamma(shape: str, **params) -> GammaOracleResult:
    """Analytic capacity of a disk (``r``) or of a finite union of real intervals."""
    if shape == "disk":
        r = float(params["r"])
        if not r > 0:
            raise InvalidArgument("radius must be positive")
        return GammaOracleResult(r, "disk", "closed form: 1/z-type extremal, gamma(disk r) = r")
    if shape == "intervals":
        iv = sorted((float(a), float(b)) for a, b in params["intervals"])
        for a, b in iv:
            if not b >= a:
                raise InvalidArgument("interval endpoints must satisfy a <= b")
        for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
            if a1 <= b0:
                raise InvalidArgument("intervals must be pairwise disjoint")
        length = sum(b - a for a, b in iv)
        return GammaOracleResult(length / 4.0, "intervals",
                                 "literature value: gamma(E) = |E|/4 for compact E on the real line")
    return GammaOracleResult(None, shape, "unsupported shape: no closed form")


def gamma_is_null_on_circle(arcs: Sequence[tuple[float, float]]) -> bool:
    """Whether a finite union of arcs of the unit circle has analytic capacity zero.

    Arcs are ``(start, end)`` angles in radians with ``end >= start``; on the
    circle, analytic capacity vanishes exactly when arc length does.
    """
    return arc_length(arcs) == 0.0


def arc_length(arcs: Sequence[tuple[float, float]]) -> float:
    two_pi = 2 * math.pi
    pieces = []
    for s, e in arcs:
        if e < s:
            raise InvalidArgument("arc end must not precede its start")
        if e - s >= two_pi:
            return two_pi
        s0 = s % two_pi
        e0 = s0 + (e - s)
        if e0 > two_pi:
            pieces += [(s0, two_pi), (0.0, e0 - two_pi)]
        else:
            pieces.append((s0, e0))
    pieces.sort()
    total, cur_s, cur_e = 0.0, None, None
    for s, e in pieces:
        if cur_e is None or s > cur_e:
            if cur_e is not None:
                total += cur_e - cur_s
            cur_s, cur_e = s, e
        else:
            cur_e = max(cur_e, e)
    if cur_e is not None:
        total += cur_e - cur_s
    return total
