"""Coupled cover-time engines driven by one replayable line stream.

For a net ``A^rho`` a point ``x`` is *hit* by a line at distance <= 1 and
*singularly covered* (the ball ``B(x, rho)`` lies in one unit tube) at
distance <= 1 - rho. The discrete cover time is the last first-hit time and
the well cover time the last first-singular time; on a shared stream they
bracket the continuum cover time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import ResourceError, UsageError
from . import _kernels as kern
from .lineproc import LineBatches, TimedLine, Window, keyed_rng, sample_lines
from .measure import gamma, lines_hit_ball
from .net import GeometrySpec, Net, build_net

MAX_LINES = 10**9


def enclosing_window(points: np.ndarray, margin: float = 1.0) -> Window:
    """Ball around the bounding-box centre containing every point, inflated
    by ``margin`` so every line within distance 1 of a point hits it."""
    pts = np.atleast_2d(points)
    c = (pts.min(0) + pts.max(0)) / 2
    r = float(np.sqrt(np.max(np.sum((pts - c) ** 2, axis=1))))
    return Window(tuple(c), r * (1 + 1e-12) + 1e-12 + margin)


@dataclass(frozen=True, eq=False)
class CoverTarget:
    net: Net
    window: Window

    @classmethod
    def from_net(cls, net: Net, window: Window | None = None) -> "CoverTarget":
        if len(net) == 0:
            raise UsageError("net is empty")
        w = enclosing_window(net.points) if window is None else window
        c = np.asarray(w.center)
        if np.any(np.linalg.norm(net.points - c, axis=1) > w.radius - 1 + 1e-9):
            raise UsageError("window must contain every net point with margin 1")
        return cls(net, w)

    @property
    def rho(self) -> float:
        return self.net.rho


@dataclass(frozen=True, eq=False)
class CoverResult:
    t_d: float
    t_w: float
    first_hit: np.ndarray
    first_singular: np.ndarray
    lines_used: int
    seed: tuple = ()

    @property
    def n_points(self) -> int:
        return self.first_hit.size


def _batches_from_lines(lines: Iterable[TimedLine], size: int = 64):
    buf = []
    for tl in lines:
        buf.append(tl)
        if len(buf) == size:
            yield _pack(buf)
            buf = []
    if buf:
        yield _pack(buf)


def _pack(buf):
    times = np.array([tl.timestamp for tl in buf], float)
    dirs = np.array([tl.line.dir for tl in buf], float)
    offs = np.array([tl.line.offset for tl in buf], float)
    return times, dirs, offs


def first_times(points: np.ndarray, rho: float, source, until: float = math.inf,
                max_lines: int = MAX_LINES):
    """First-hit and first-singular times of each point.

    ``source`` is a :class:`LineBatches` or any time-ordered iterable of
    :class:`TimedLine`. Processing stops once every point is singularly
    covered or the stream passes ``until``; unreached times stay ``inf``.
    Returns ``(first_hit, first_singular, lines_used)``.
    """
    if not 0.0 <= rho < 1.0:
        raise UsageError("rho must lie in [0, 1)")
    pts = np.ascontiguousarray(points, dtype=float)
    n = pts.shape[0]
    hit = np.full(n, np.inf)
    sing = np.full(n, np.inf)
    active = np.arange(n, dtype=np.int64)
    n_active = n
    used = 0
    r2 = (1.0 - rho) ** 2
    if isinstance(source, LineBatches):
        batches = iter(source.next_batch, None)
    else:
        batches = _batches_from_lines(source)
    for times, dirs, offs in batches:
        if n_active == 0:
            break
        stop = times[-1] > until
        if stop:
            k = int(np.searchsorted(times, until, side="right"))
            times, dirs, offs = times[:k], dirs[:k], offs[:k]
        if times.size:
            if dirs.shape[1] != pts.shape[1]:
                raise UsageError("line and point dimensions differ")
            n_active, u = kern.cover_update(pts, active, n_active, hit, sing, times,
                                            np.ascontiguousarray(dirs),
                                            np.ascontiguousarray(offs), r2)
            used += u
        if stop:
            break
        if used > max_lines:
            raise ResourceError(f"cover not reached within {max_lines} lines")
    return hit, sing, used


def run_cover(target: CoverTarget, source=None, *, seed: int = 0, replicate: int = 0,
              max_lines: int = MAX_LINES) -> CoverResult:
    """Run one stream until every net point is singularly covered.

    ``source`` defaults to the stream keyed by ``(seed, replicate)`` on the
    target window; a replayed iterable of :class:`TimedLine` is also accepted.
    """
    if source is None:
        source = LineBatches(target.window, keyed_rng(seed, replicate, "lines"))
    elif isinstance(source, np.random.Generator):
        source = LineBatches(target.window, source)
    hit, sing, used = first_times(target.net.points, target.rho, source, max_lines=max_lines)
    if not np.all(np.isfinite(sing)):
        raise UsageError("replayed stream ended before every point was covered")
    return CoverResult(float(hit.max()), float(sing.max()), hit, sing, used, (seed, replicate))


@dataclass
class Bracket:
    rhos: np.ndarray
    t_d: np.ndarray
    t_w: np.ndarray
    counts: np.ndarray

    @property
    def lower(self) -> float:
        return float(self.t_d.max())

    @property
    def upper(self) -> float:
        return float(self.t_w.min())

    @property
    def empty(self) -> bool:
        return self.lower > self.upper


def bracket_nets(spec: GeometrySpec, rhos: Sequence[float], K: int = 8):
    """Nets for several rho on the lattice step of the smallest rho.

    Sharing the candidate lattice makes every net cover every other net's
    points within its own rho, so ``max t_d <= min t_w`` holds pathwise.
    """
    rhos = sorted(set(float(r) for r in rhos), reverse=True)
    step = min(rhos) / K
    nets = [build_net(spec, r, K, spacing=step) for r in rhos]
    allpts = np.concatenate([n.points for n in nets])
    return nets, enclosing_window(allpts)


def bracket_cover_time(spec: GeometrySpec, rhos: Sequence[float], K: int = 8, *,
                       seed: int = 0, replicate: int = 0, nets=None) -> Bracket:
    if nets is None:
        nets, window = bracket_nets(spec, rhos, K)
    else:
        nets, window = nets
    td, tw = [], []
    for net in nets:
        res = run_cover(CoverTarget(net, window), seed=seed, replicate=replicate)
        td.append(res.t_d)
        tw.append(res.t_w)
    return Bracket(np.array([n.rho for n in nets]), np.array(td), np.array(tw),
                   np.array([len(n) for n in nets]))


def uncovered_threshold(n_points: int, eps: float, rho: float, d: int, mode: str = "well") -> float:
    if not 0.0 < eps < 1.0:
        raise UsageError("eps must lie in (0, 1)")
    base = (1.0 - eps) * math.log(n_points)
    if mode == "well":
        return base / gamma(rho, d)
    if mode == "discrete":
        return base
    raise UsageError("mode must be 'well' or 'discrete'")


def uncovered_set(target: CoverTarget, eps: float, source, mode: str = "well") -> np.ndarray:
    """Net points not yet covered at the threshold time.

    ``mode='well'``: not singularly covered by ``(1-eps) log|A^rho| / gamma(rho)``.
    ``mode='discrete'``: not hit by ``(1-eps) log|A^rho|``.
    ``source`` is a :class:`CoverResult`, a :class:`LineBatches` or an
    iterable of :class:`TimedLine` (a stream prefix).
    """
    net = target.net
    thr = uncovered_threshold(len(net), eps, net.rho, net.d, mode)
    if isinstance(source, CoverResult):
        hit, sing = source.first_hit, source.first_singular
    else:
        hit, sing, _ = first_times(net.points, net.rho, source, until=thr)
    t = sing if mode == "well" else hit
    return net.points[t > thr]


def g_membership(K_pts, net: Net, eps: float):
    """Membership of ``K_pts`` in the family of good uncovered sets.

    Returns ``(ok, reasons)``; ``reasons`` lists the failed conditions
    ("cardinality", "separation").
    """
    K_pts = np.asarray(K_pts, float).reshape(-1, net.d)
    if K_pts.shape[0]:
        member = (K_pts[:, None, :] == net.points[None, :, :]).all(-1).any(1)
        if not member.all():
            raise UsageError("K must be a subset of the net")
    n = len(net)
    reasons = []
    if abs(K_pts.shape[0] - n ** eps) > n ** (2 * eps / 3):
        reasons.append("cardinality")
    if K_pts.shape[0] > 1:
        diff = K_pts[:, None, :] - K_pts[None, :, :]
        dist = np.sqrt(np.sum(diff ** 2, -1))
        dist = dist[np.triu_indices(K_pts.shape[0], 1)]
        if np.any(dist < n ** (1.0 / (2 * net.d))):
            reasons.append("separation")
    return not reasons, reasons


def _union_lines(balls, rate_t, rng):
    """Poisson lines up to the time encoded in ``rate_t`` hitting a union of
    balls: lines of ball j are kept only if they miss balls 0..j-1."""
    parts = []
    for j, (c, r) in enumerate(balls):
        w = Window(tuple(c), r)
        m = rng.poisson(rate_t * r ** (w.d - 1))
        dirs, offs = sample_lines(w, rng, m)
        keep = np.ones(m, bool)
        for c2, r2 in balls[:j]:
            keep &= ~lines_hit_ball(dirs, offs, c2, r2)
        parts.append((dirs[keep], offs[keep]))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def _near(dirs, offs, pts):
    """(lines, points) mask: line within distance 1 of point."""
    if len(pts) == 0:
        return np.zeros((dirs.shape[0], 0), bool)
    w = pts[None, :, :] - offs[:, None, :]
    al = np.einsum("lpd,ld->lp", w, dirs)
    return np.einsum("lpd,lpd->lp", w, w) - al * al <= 1.0


def pair_dependence_probe(K1, K2, t: float, n_reps: int, *, seed: int = 0) -> dict:
    """Monte Carlo check of the near-independence bound for cover events.

    ``E_i`` = every point of ``K_i`` is hit by time ``t``. Compares
    ``|P(E1 E2) - P(E1) P(E2)|`` with ``4 P(some line passes within 1 of
    both K1 and K2)``.
    """
    K1 = np.atleast_2d(np.asarray(K1, float))
    K2 = np.atleast_2d(np.asarray(K2, float)) if len(K2) else np.zeros((0, K1.shape[1]))
    balls = [(enclosing_window(K).center, enclosing_window(K).radius) for K in (K1, K2) if len(K)]
    e1 = np.empty(n_reps, bool)
    e2 = np.empty(n_reps, bool)
    both = np.empty(n_reps, bool)
    rng = keyed_rng(seed, 0, "pair_dependence")
    for i in range(n_reps):
        dirs, offs = _union_lines(balls, t, rng)
        h1 = _near(dirs, offs, K1)
        h2 = _near(dirs, offs, K2)
        e1[i] = h1.any(0).all()
        e2[i] = h2.any(0).all()
        both[i] = bool(np.any(h1.any(1) & h2.any(1)))
    p1, p2, p12, pb = e1.mean(), e2.mean(), (e1 & e2).mean(), both.mean()
    lhs = abs(p12 - p1 * p2)
    # delta-method standard error of p12 - p1 p2 under multinomial sampling
    g = (e1 & e2).astype(float) - p2 * e1 - p1 * e2
    se_lhs = float(g.std(ddof=1) / math.sqrt(n_reps)) if n_reps > 1 else math.inf
    bound = 4 * pb
    se_bound = 4 * math.sqrt(pb * (1 - pb) / n_reps)
    return {"lhs": float(lhs), "lhs_se": se_lhs, "bound": float(bound), "bound_se": se_bound,
            "p1": float(p1), "p2": float(p2), "p12": float(p12), "p_shared": float(pb),
            "violation": bool(lhs > bound + 3 * math.hypot(se_lhs, se_bound))}
