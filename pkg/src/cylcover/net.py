"""Deterministic rho-separated nets, packing statistics and box-dimension fits.

The net rule: candidates are the points of the lattice ``(rho/K) Z^d`` inside
the set (or the given points for finite sets), swept in lexicographic order;
a candidate is kept iff it is at distance >= rho from every kept point. On
the lattice the test is done in integer arithmetic, so the output is exact,
inclusion-maximal among the candidates and covariant under scaling:
``build_net(n*A, rho) == n * build_net(A, rho/n)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import ResourceError, UsageError
from . import _kernels as kern

MAX_CANDIDATES = 10**8
SNAP = 1e-9


# ---------------------------------------------------------------- geometry


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi) or len(self.lo) < 2:
            raise UsageError("box corners must share a dimension d >= 2")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise UsageError("box corners must satisfy lo <= hi componentwise")

    @property
    def d(self):
        return len(self.lo)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if len(self.center) < 2:
            raise UsageError("ball must live in R^d with d >= 2")
        if not self.radius >= 0:
            raise UsageError("ball radius must be nonnegative")

    @property
    def d(self):
        return len(self.center)


@dataclass(frozen=True, eq=False)
class Points:
    points: np.ndarray

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        if p.size == 0:
            raise UsageError("empty point set")
        if p.shape[1] < 2:
            raise UsageError("points must live in R^d with d >= 2")
        if not np.all(np.isfinite(p)):
            raise UsageError("points must be finite")
        object.__setattr__(self, "points", p)

    @property
    def d(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class Scaled:
    inner: "GeometrySpec"
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise UsageError("scale factor must be positive")

    @property
    def d(self):
        return self.inner.d


@dataclass(frozen=True)
class Union_:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise UsageError("empty union")
        if len({p.d for p in self.parts}) != 1:
            raise UsageError("union members must share d")

    @property
    def d(self):
        return self.parts[0].d


GeometrySpec = Union[Box, Ball, Points, Scaled, Union_]


def unit_box(d: int) -> Box:
    return Box((0.0,) * d, (1.0,) * d)


def integer_grid(n: int, d: int) -> Points:
    """The points of ``[0, n-1]^d`` with integer coordinates."""
    axes = [np.arange(n, dtype=float)] * d
    return Points(np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d))


def flatten(spec: GeometrySpec, factor: float = 1.0) -> list:
    """Primitive pieces with scale factors pushed into their parameters."""
    if isinstance(spec, Box):
        return [Box(tuple(factor * v for v in spec.lo), tuple(factor * v for v in spec.hi))]
    if isinstance(spec, Ball):
        return [Ball(tuple(factor * v for v in spec.center), factor * spec.radius)]
    if isinstance(spec, Points):
        return [Points(factor * spec.points)]
    if isinstance(spec, Scaled):
        return flatten(spec.inner, factor * spec.factor)
    if isinstance(spec, Union_):
        return [q for p in spec.parts for q in flatten(p, factor)]
    raise UsageError(f"unknown geometry spec {spec!r}")


def bounding_box(spec: GeometrySpec):
    los, his = [], []
    for p in flatten(spec):
        if isinstance(p, Box):
            los.append(p.lo), his.append(p.hi)
        elif isinstance(p, Ball):
            c = np.asarray(p.center)
            los.append(c - p.radius), his.append(c + p.radius)
        else:
            los.append(p.points.min(0)), his.append(p.points.max(0))
    return np.min(np.asarray(los, float), 0), np.max(np.asarray(his, float), 0)


# ---------------------------------------------------------------- nets


@dataclass(frozen=True, eq=False)
class Net:
    rho: float
    points: np.ndarray
    K: int
    source: GeometrySpec
    spacing: float | None = None     # lattice step; None for finite point sets
    indices: np.ndarray | None = None
    ordering: str = "lexicographic"

    @property
    def d(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def rule(self) -> dict:
        return {"rule": "greedy-lattice", "K": self.K, "ordering": self.ordering,
                "spacing": self.spacing}


def _snap(v):
    r = np.round(v)
    return np.where(np.abs(v - r) <= SNAP * np.maximum(1.0, np.abs(v)), r, v)


def _lattice_prims(prims, spacing, d):
    kinds = np.empty(len(prims), np.int64)
    params = np.zeros((len(prims), 2 * d))
    lo = np.full(d, np.iinfo(np.int64).max, np.int64)
    hi = np.full(d, np.iinfo(np.int64).min, np.int64)
    for j, p in enumerate(prims):
        if isinstance(p, Box):
            a = _snap(np.asarray(p.lo) / spacing)
            b = _snap(np.asarray(p.hi) / spacing)
            kinds[j] = kern.BOX
            params[j, :d], params[j, d:] = a, b
            plo, phi = np.ceil(a), np.floor(b)
        else:
            c = _snap(np.asarray(p.center) / spacing)
            r = float(_snap(np.asarray(p.radius / spacing)))
            kinds[j] = kern.BALL
            params[j, :d], params[j, d] = c, r
            plo, phi = np.ceil(c - r - 1e-9), np.floor(c + r + 1e-9)
        lo = np.minimum(lo, plo.astype(np.int64))
        hi = np.maximum(hi, phi.astype(np.int64))
    return kinds, params, lo, hi


def _cell_for(q, d):
    c = 1
    while (c * c) * d < q:  # (cell - 1)^2 * d < q with cell = c + 1
        c += 1
    cell = c  # largest spread per coordinate inside a cell is cell - 1
    smax = math.isqrt(max(q - 1, 0))
    while smax * smax >= q:
        smax -= 1
    reach = (smax + cell - 1) // cell
    return cell, reach


def _guard(lo, hi):
    n = 1
    for a, b in zip(lo, hi):
        n *= max(int(b) - int(a) + 1, 0)
    if n > MAX_CANDIDATES:
        raise ResourceError(f"candidate lattice too large ({n} > {MAX_CANDIDATES})")
    return n


def lattice_net_indices(prims, spacing: float, q: int):
    """Greedy net on ``spacing * Z^d`` with squared separation ``q`` lattice units."""
    d = prims[0].d
    kinds, params, lo, hi = _lattice_prims(prims, spacing, d)
    if np.any(hi < lo):
        raise UsageError("geometry contains no lattice candidates")
    n = _guard(lo, hi)
    cell, reach = _cell_for(q, d)
    cap = max(16, min(n, 1 << 16))
    return kern.lattice_greedy(lo, hi, kinds, params, int(q), cell, reach, cap)


def _lex_order(p):
    return np.lexsort(p.T[::-1])


def _point_net(pts, rho):
    pts = pts[_lex_order(pts)]
    d = pts.shape[1]
    cell = rho / math.sqrt(d) if rho > 0 else 1.0
    # points closer than rho can be ceil(sqrt(d)) + 1 cells apart per axis
    reach = int(math.ceil(rho / cell)) + 1
    lo = pts.min(0)
    span = (pts.max(0) - lo) / cell
    if np.prod(span + 1) > 5e8:
        cell = float(np.max(pts.max(0) - lo)) / 1000 + rho
        reach = int(math.ceil(rho / cell)) + 1
    keep = kern.point_greedy(np.ascontiguousarray(pts), rho * rho, cell, reach, lo)
    return pts[keep], pts


def build_net(spec: GeometrySpec, rho: float, K: int = 8, *,
              spacing: float | None = None) -> Net:
    """Greedy inclusion-maximal rho-separated subset of ``spec``.

    ``spacing`` overrides the lattice step ``rho/K``; nets built for several
    rho on one shared step keep the covering property across rho.
    """
    if not rho > 0:
        raise UsageError("rho must be positive")
    if int(K) != K or K < 2:
        raise UsageError("K must be an integer >= 2")
    prims = flatten(spec)
    finite = [p for p in prims if isinstance(p, Points)]
    cont = [p for p in prims if not isinstance(p, Points)]
    step = rho / K if spacing is None else float(spacing)
    if not finite:
        q = int(round((rho / step) ** 2))
        if abs(q - (rho / step) ** 2) > 1e-9 * q:
            q = int(math.ceil((rho / step) ** 2 - 1e-9))
        idx = lattice_net_indices(cont, step, q)
        if len(idx) == 0:
            raise UsageError("geometry contains no lattice candidates")
        return Net(rho, idx * step, int(K), spec, step, idx)
    pts = np.concatenate([p.points for p in finite])
    if cont:
        kinds, params, lo, hi = _lattice_prims(cont, step, spec.d)
        if np.all(hi >= lo):
            _guard(lo, hi)
            members = kern.lattice_members(lo, hi, kinds, params, 1 << 12)
            pts = np.concatenate([pts, members * step])
    pts = np.unique(pts, axis=0)
    kept, _ = _point_net(pts, rho)
    return Net(rho, kept, int(K), spec, None, None)


def candidates(spec: GeometrySpec, rho: float, K: int = 8, spacing=None) -> np.ndarray:
    """The candidate set the net rule sweeps (for covering checks)."""
    prims = flatten(spec)
    step = rho / K if spacing is None else spacing
    out = [p.points for p in prims if isinstance(p, Points)]
    cont = [p for p in prims if not isinstance(p, Points)]
    if cont:
        kinds, params, lo, hi = _lattice_prims(cont, step, spec.d)
        _guard(lo, hi)
        out.append(kern.lattice_members(lo, hi, kinds, params, 1 << 12) * step)
    pts = np.unique(np.concatenate(out), axis=0)
    return pts[_lex_order(pts)]


def net_count(spec: GeometrySpec, rho: float, K: int = 8) -> int:
    return len(build_net(spec, rho, K))


# ---------------------------------------------------------------- statistics


@dataclass
class DimensionFit:
    slope: float
    intercept: float
    rhos: np.ndarray
    counts: np.ndarray
    local_slopes: np.ndarray
    residual: float


def box_dimension_fit(spec: GeometrySpec, rhos: Sequence[float], K: int = 8) -> DimensionFit:
    rhos = np.asarray(sorted(set(float(r) for r in rhos), reverse=True))
    if rhos.size < 3:
        raise UsageError("box_dimension_fit needs at least 3 distinct rho values")
    counts = np.array([net_count(spec, r, K) for r in rhos], float)
    x, y = -np.log(rhos), np.log(counts)
    slope, icpt = np.polyfit(x, y, 1)
    res = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return DimensionFit(float(slope), float(icpt), rhos, counts.astype(int),
                        np.diff(y) / np.diff(x), res)


def content_constant(spec: GeometrySpec, dim: float, rhos: Sequence[float], K: int = 8) -> dict:
    if dim < 0:
        raise UsageError("dim must be nonnegative")
    rhos = np.asarray(rhos, float)
    counts = np.array([net_count(spec, r, K) for r in rhos])
    vals = rhos ** dim * counts
    return {"rhos": rhos, "counts": counts, "values": vals,
            "min": float(vals.min()), "max": float(vals.max()),
            "ratio": float(vals.max() / vals.min())}


def packing_profile(net: Net, y) -> dict:
    y = np.asarray(y, float)
    pts = net.points
    dist = np.linalg.norm(pts - y, axis=1)
    if not np.any(np.all(pts == y, axis=1)):
        raise UsageError("origin point must belong to the net")
    d, rho = net.d, net.rho
    rmax = int(math.ceil(dist.max())) if dist.max() > 0 else 1
    r = np.arange(1, rmax + 1)
    annulus = np.array([np.count_nonzero((dist >= k) & (dist <= k + 1)) for k in r])
    ball = np.array([np.count_nonzero(dist <= k) for k in r])
    far = dist >= 1
    s_y = float(np.sum(dist[far] ** (1.0 - d)))
    return {
        "r": r, "annulus": annulus, "ball": ball, "inverse_distance_sum": s_y,
        "annulus_ratio": annulus * rho ** d / r ** (d - 1.0),
        "ball_ratio": ball * rho ** d / r ** float(d),
        "sum_ratio": s_y * rho ** d / len(net) ** (1.0 / d),
    }


# ---------------------------------------------------------------- I/O


def write_net_csv(net: Net, fh=None, extra_header: dict | None = None) -> str:
    buf = io.StringIO()
    if extra_header:
        for k, v in extra_header.items():
            buf.write(f"## {k}={v}\n")
    buf.write("# rho,K,d,count\n")
    buf.write(f"# {net.rho!r},{net.K},{net.d},{len(net)}\n")
    w = csv.writer(buf, lineterminator="\n")
    for p in net.points:
        w.writerow([repr(float(v)) for v in p])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_net_csv(text: str):
    lines = [ln for ln in text.splitlines() if not ln.startswith("##")]
    if lines[0].strip() != "# rho,K,d,count":
        raise UsageError("not a net CSV file")
    rho, K, d, count = lines[1].lstrip("# ").split(",")
    pts = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
    pts = pts.reshape(int(count), int(d))
    return float(rho), int(K), pts
