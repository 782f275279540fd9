"""Affine lines in R^d and exact sampling of the time-stamped Poisson line
process restricted to the lines hitting a ball window.

Lines are stored as ``(dir, offset)`` with ``offset`` orthogonal to ``dir``.
The invariant line measure is normalised so that the lines hitting the unit
ball have measure one; the lines hitting ``B(c, R)`` then have measure
``R**(d-1)``, which is the arrival rate of the restricted stream.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import UsageError

UNIT_TOL = 1e-12
ORTHO_TOL = 1e-10
FIRST_BATCH = 16  # batch sizes double up to MAX_BATCH; the schedule is fixed so
MAX_BATCH = 4096  # replay from a seed is bit-identical for every consumer


def keyed_rng(seed: int, replicate: int = 0, purpose: str = "lines") -> np.random.Generator:
    """Independent generator for ``(seed, replicate, purpose)``.

    Streams for different keys are statistically independent and do not depend
    on the order in which replicates are run.
    """
    tag = zlib.crc32(purpose.encode())
    ss = np.random.SeedSequence([int(seed), int(replicate), tag])
    return np.random.Generator(np.random.PCG64(ss))


def canonical_direction(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    n = np.linalg.norm(u)
    if u.ndim != 1 or u.size < 2 or not np.isfinite(n) or n == 0:
        raise UsageError("direction must be a nonzero vector in R^d, d >= 2")
    if abs(n - 1.0) > UNIT_TOL:
        u = u / n
    for c in u:
        if abs(c) > UNIT_TOL:
            return u if c > 0 else -u
    return u  # unreachable for a unit vector


@dataclass(frozen=True, eq=False)
class Line:
    dir: np.ndarray
    offset: np.ndarray

    @classmethod
    def through(cls, point, direction) -> "Line":
        """The line ``{point + s * direction}``, stored in canonical form."""
        u = canonical_direction(direction)
        p = np.asarray(point, dtype=float)
        if p.shape != u.shape:
            raise UsageError("point and direction dimensions differ")
        return cls(u, p - np.dot(p, u) * u)

    @property
    def d(self) -> int:
        return self.dir.size

    def same_as(self, other: "Line", tol: float = 1e-9) -> bool:
        return (abs(abs(np.dot(self.dir, other.dir)) - 1.0) < tol
                and np.allclose(self.offset, other.offset, atol=tol))


@dataclass(frozen=True, eq=False)
class TimedLine:
    line: Line
    timestamp: float


@dataclass(frozen=True)
class Window:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise UsageError("window radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) < 2:
            raise UsageError("window must live in R^d with d >= 2")

    @property
    def d(self) -> int:
        return len(self.center)


def distance_point_line(x, line: Line) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != line.dir.shape:
        raise UsageError(f"dimension mismatch: point has {x.size}, line has {line.d}")
    w = x - line.offset
    return float(np.linalg.norm(w - np.dot(w, line.dir) * line.dir))


def covers(line: Line, x, rho: float = 0.0) -> bool:
    """True iff the closed ball ``B(x, rho)`` lies in the unit tube around ``line``."""
    if not 0.0 <= rho < 1.0:
        raise UsageError("rho must lie in [0, 1)")
    return distance_point_line(x, line) <= 1.0 - rho


def complement_basis(u) -> np.ndarray:
    """Rows form an orthonormal basis of the hyperplane orthogonal to ``u``.

    Uses the Householder reflection that maps ``u`` to ``-sign(u_k) e_k``,
    with ``k`` the largest coordinate of ``u``, which avoids cancellation.
    The remaining ``d - 1`` columns span the complement.
    """
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    d = u.size
    k = int(np.argmax(np.abs(u)))
    v = u.copy()
    v[k] += 1.0 if u[k] >= 0 else -1.0
    h = np.eye(d) - 2.0 * np.outer(v, v) / np.dot(v, v)
    return np.delete(h, k, axis=1).T.copy()


def window_intensity(window: Window) -> float:
    return float(window.radius) ** (window.d - 1)


def sample_lines(window: Window, rng: np.random.Generator, n: int):
    """``n`` i.i.d. lines hitting ``window``: arrays ``(dirs, offsets)``, shape (n, d).

    Directions are normalised Gaussians. The projection of the window onto the
    hyperplane orthogonal to a direction is a (d-1)-ball of the same radius, so
    a uniform offset in that ball gives the restricted law exactly.
    """
    d = window.d
    c = np.asarray(window.center)
    g = rng.standard_normal((n, d))
    dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    h = rng.standard_normal((n, d))
    h -= np.sum(h * dirs, axis=1, keepdims=True) * dirs
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    rad = window.radius * rng.random(n) ** (1.0 / (d - 1))
    base = c - (dirs @ c)[:, None] * dirs
    return dirs, base + rad[:, None] * h


def sample_line_hitting(window: Window, rng: np.random.Generator) -> Line:
    dirs, offs = sample_lines(window, rng, 1)
    u = canonical_direction(dirs[0])
    return Line(u, offs[0])


class LineBatches:
    """Lazy, replayable stream of the Poisson line process on a window.

    ``next_batch`` returns ``(times, dirs, offsets)`` with strictly
    increasing times. Batch sizes follow a fixed doubling schedule.
    """

    def __init__(self, window: Window, rng: np.random.Generator):
        self.window = window
        self.rng = rng
        self.rate = window_intensity(window)
        self.t = 0.0
        self.count = 0
        self.size = FIRST_BATCH

    def next_batch(self):
        n = self.size
        self.size = min(2 * n, MAX_BATCH)
        gaps = self.rng.exponential(1.0 / self.rate, n)
        times = self.t + np.cumsum(gaps)
        # a zero gap would break strict monotonicity; probability ~ 2**-53
        for i in np.flatnonzero(np.diff(times) <= 0) + 1:
            if times[i] <= times[i - 1]:
                times[i] = np.nextafter(times[i - 1], np.inf)
        dirs, offs = sample_lines(self.window, self.rng, n)
        self.t = float(times[-1])
        self.count += n
        return times, dirs, offs


def line_stream(window: Window, rng: np.random.Generator) -> Iterator[TimedLine]:
    batches = LineBatches(window, rng)
    while True:
        times, dirs, offs = batches.next_batch()
        for s, u, y in zip(times, dirs, offs):
            yield TimedLine(Line(canonical_direction(u), y), float(s))
