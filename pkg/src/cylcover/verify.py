"""Statistical and analytic verification harness.

Statistical thresholds (KS levels, band widths, drift limits) are design
choices of this toolkit; every report separates them from the inequalities
and limit statements they probe.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import UsageError
from .cover import CoverTarget, enclosing_window, first_times, run_cover
from .lineproc import LineBatches, keyed_rng
from .measure import (alpha_ratio, beta_ratio, dim_constants, gamma, pair_hit_measure,
                      pair_union_measure)
from .net import GeometrySpec, Net, Scaled, build_net, net_count

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


# ---------------------------------------------------------------- ECDF / KS


@dataclass(frozen=True, eq=False)
class Ecdf:
    values: np.ndarray

    def __init__(self, sample):
        v = np.sort(np.asarray(sample, float).ravel())
        if v.size == 0:
            raise UsageError("empty sample")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.n


def gumbel_cdf(z):
    return np.exp(-np.exp(-np.asarray(z, float)))


def exp_cdf(rate: float) -> Callable:
    return lambda t: -np.expm1(-rate * np.maximum(np.asarray(t, float), 0.0))


def ks_distance(sample, cdf: Callable) -> float:
    e = sample if isinstance(sample, Ecdf) else Ecdf(sample)
    f = cdf(e.values)
    i = np.arange(1, e.n + 1)
    return float(max(np.max(np.abs(i / e.n - f)), np.max(np.abs((i - 1) / e.n - f))))


def quantile_band(x, qs=QUANTILES) -> dict:
    return {f"q{int(round(100 * q)):02d}": float(v) for q, v in zip(qs, np.quantile(x, qs))}


def jsonable(x):
    """Plain-JSON view of nested results (numpy arrays and scalars included)."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    rows: list
    summary: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)  # n -> {column: array}
    labels: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self, include_samples: bool = False) -> dict:
        out = {"kind": self.kind, "config": self.config, "rows": self.rows,
               "summary": self.summary, "labels": self.labels, "warnings": self.warnings}
        if include_samples:
            out["samples"] = self.samples
        return jsonable(out)

    def sample_rows(self, columns=("centered_td", "centered_tw")):
        """``(n, rep, *columns)`` rows in ``n``-then-replicate order."""
        for n in sorted(self.samples):
            s = self.samples[n]
            for i in range(len(s[columns[0]])):
                yield (n, i, *(float(s[c][i]) for c in columns))


# ---------------------------------------------------------------- assumptions


@dataclass
class AssumptionReport:
    a1: bool
    a2: bool
    a3: bool
    a4: bool
    a5: bool
    inputs: dict
    margins: dict

    @property
    def all(self) -> bool:
        return self.a1 and self.a2 and self.a3 and self.a4 and self.a5

    def to_dict(self):
        return asdict(self)


def _power(n: int, e: float) -> float:
    """``n**e`` for counts beyond float range (Python ints are unbounded)."""
    if n < 2 ** 1000:
        return float(n) ** e
    try:
        return math.exp(e * math.log(n))
    except OverflowError:
        return math.inf


def check_assumptions(rho: float, d: int, net_count: int) -> AssumptionReport:
    """The five standing assumptions on ``(rho, |A^rho|)``, evaluated as written."""
    if not rho > 0 or net_count < 1:
        raise UsageError("need rho > 0 and net_count >= 1")
    k = dim_constants(d)
    n = int(net_count)
    logn = math.log(n)
    lim1 = min((d - 1) / (6 * d), k.C_d / 5)
    a2_lhs = _power(n, 1 / (2 * d))
    a3_lhs, a3_rhs = rho * logn, _power(n, rho / 200)
    a5_lhs, a5_rhs = rho ** (-d) * logn ** d, _power(n, k.C_tilde_d / 2)
    return AssumptionReport(
        a1=0 < rho < lim1,
        a2=a2_lhs > 4,
        a3=a3_lhs <= a3_rhs,
        a4=a3_rhs >= 2,
        a5=a5_lhs <= a5_rhs,
        inputs={"rho": rho, "d": d, "net_count": n, "C_d": k.C_d, "C_tilde_d": k.C_tilde_d},
        margins={"a1": lim1 - rho, "a2": a2_lhs - 4, "a3": a3_rhs - a3_lhs,
                 "a4": a3_rhs - 2, "a5": a5_rhs - a5_lhs},
    )


def rho_schedule(a1_count: int, D: float) -> dict:
    """``rho_n = D / log|A_n^1|`` and whether ``D`` meets the schedule's condition."""
    if a1_count < 2:
        raise UsageError("A1_count must be >= 2")
    return {"rho": D / math.log(a1_count),
            "D_valid": bool(D >= 1 and D * math.exp(-D / 200) <= 0.5)}


# ---------------------------------------------------------------- experiments


def _cover_chunk(net, window, seed, tag, reps):
    target = CoverTarget(net, window)
    out = np.empty((len(reps), 3))
    for j, i in enumerate(reps):
        r = run_cover(target, LineBatches(window, keyed_rng(seed, i, tag)))
        out[j] = r.t_d, r.t_w, r.lines_used
    return out


def cover_table(net: Net, reps: int, seed: int, window=None, tag: str = "lines",
                workers: int = 1) -> np.ndarray:
    """Rows ``(t_d, t_w, lines_used)`` for ``reps`` independently keyed replicates.

    Replicate ``i`` always uses the stream keyed by ``(seed, i)``, so the
    result does not depend on ``workers``.
    """
    window = CoverTarget.from_net(net, window).window
    if workers <= 1 or reps < 2 * workers:
        out = _cover_chunk(net, window, seed, tag, range(reps))
    else:
        from concurrent.futures import ProcessPoolExecutor
        chunks = np.array_split(np.arange(reps), workers)
        with ProcessPoolExecutor(workers) as ex:
            parts = ex.map(_cover_chunk, *zip(*[(net, window, seed, tag, c.tolist())
                                                 for c in chunks]))
            out = np.concatenate(list(parts))
    return out


def cover_samples(net: Net, reps: int, seed: int, window=None, tag: str = "lines",
                  workers: int = 1):
    """``(t_d, t_w)`` arrays; see :func:`cover_table`."""
    out = cover_table(net, reps, seed, window, tag, workers)
    return out[:, 0].copy(), out[:, 1].copy()


def gumbel_experiment(family: Callable[[int], GeometrySpec], rho: float, n_list: Sequence[int],
                      reps: int, *, K: int = 8, seed: int = 0, d: int | None = None,
                      workers: int = 1) -> ExperimentReport:
    """Centred discrete and well cover times against the Gumbel law, per n.

    ``t_d - log|A^rho|`` and ``gamma(rho) t_w - log|A^rho|``.
    """
    rows = []
    samples = {}
    warn = []
    for n in n_list:
        spec = family(n)
        dd = spec.d if d is None else d
        net = build_net(spec, rho, K)
        N = len(net)
        rep = check_assumptions(rho, dd, N)
        if not rep.a1:
            warn.append(f"n={n}: rho={rho} violates A1 (limit theorem hypothesis)")
        td, tw = cover_samples(net, reps, seed + 7919 * n, workers=workers)
        ctd = td - math.log(N)
        ctw = gamma(rho, dd) * tw - math.log(N)
        samples[n] = {"centered_td": ctd, "centered_tw": ctw}
        rows.append({"n": n, "net_count": N, "ks_td": ks_distance(ctd, gumbel_cdf),
                     "ks_tw": ks_distance(ctw, gumbel_cdf),
                     "error_exponent": N ** (-rho / 600), "assumptions": rep.to_dict()})
    ks = [r["ks_td"] for r in rows]
    return ExperimentReport(
        "gumbel", {"rho": rho, "K": K, "n_list": list(n_list), "reps": reps, "seed": seed},
        rows, {"ks_td_decreasing": bool(all(a > b for a, b in zip(ks, ks[1:])))}, samples,
        {"convergence": "theory", "ks_thresholds": "design-chosen"}, warn)


def tightness_experiment(A: GeometrySpec, dim_B: float, c_A: float | None, D: float,
                         n_list: Sequence[int], reps: int, *, K: int = 8, seed: int = 0,
                         alpha_bar: float | None = None,
                         workers: int = 1) -> ExperimentReport:
    """Coupled ``[t_d, t_w]`` brackets for ``nA`` with ``rho_n = D / log|(nA)^1|``.

    Centring ``dim_B (log n + log log n)``; with ``c_A`` also the conjectured
    constant ``-log(dim_B**dim_B * c_A)``; the control centring ``dim_B log n``
    omits ``log log n``.
    """
    if dim_B <= 0:
        raise UsageError("dim_B must be positive")
    if list(n_list) != sorted(n_list) or min(n_list) < 2:
        raise UsageError("n_list must be increasing with n >= 2")
    alpha_bar = alpha_bar if alpha_bar is not None else math.floor(dim_B) + 1.0
    rows, samples = [], {}
    for n in n_list:
        spec = Scaled(A, n)
        a1 = net_count(spec, 1.0, K)
        sched = rho_schedule(a1, D)
        rho = sched["rho"]
        if not rho < 1:
            raise UsageError(f"schedule gives rho={rho:.3f} >= 1 at n={n}; lower D")
        net = build_net(spec, rho, K)
        td, tw = cover_samples(net, reps, seed + 104729 * n, workers=workers)
        shift = dim_B * (math.log(n) + math.log(math.log(n)))
        s = {"t_d": td, "t_w": tw, "centered_td": td - shift, "centered_tw": tw - shift,
             "control_td": td - dim_B * math.log(n), "control_tw": tw - dim_B * math.log(n)}
        row = {"n": n, "a1_count": a1, "rho": rho, "D_valid": sched["D_valid"],
               "net_count": len(net),
               "band_td": quantile_band(s["centered_td"]),
               "band_tw": quantile_band(s["centered_tw"]),
               "control_median_td": float(np.median(s["control_td"])),
               "control_median_tw": float(np.median(s["control_tw"])),
               "alpha_bar": alpha_bar,
               "p_alpha_td": float(np.mean(td - alpha_bar * math.log(n) <= 0)),
               "p_alpha_tw": float(np.mean(tw - alpha_bar * math.log(n) <= 0)),
               "assumptions": check_assumptions(rho, A.d, len(net)).to_dict()}
        if c_A is not None:
            C = -math.log(dim_B ** dim_B * c_A)
            row["conjecture_C"] = C
            row["conjecture_ks_td"] = ks_distance(s["centered_td"] + C, gumbel_cdf)
            row["conjecture_ks_tw"] = ks_distance(s["centered_tw"] + C, gumbel_cdf)
        rows.append(row)
        samples[n] = s
    return ExperimentReport(
        "tightness", {"dim_B": dim_B, "c_A": c_A, "D": D, "K": K, "n_list": list(n_list),
                      "reps": reps, "seed": seed, "alpha_bar": alpha_bar},
        rows, tightness_summary(rows, dim_B), samples,
        {"tightness": "theory", "drift_and_width_limits": "design-chosen",
         "conjecture": "conjecture probe, not acceptance"})


def _drift(x, track):
    """Net change if the track is monotone (else 0), the raw net change, and
    the change of the least-squares line in ``x`` over the range."""
    d = np.diff(track)
    total = float(track[-1] - track[0])
    mono = bool(np.all(d >= 0) or np.all(d <= 0))
    trend = float(np.polyfit(x, track, 1)[0] * (x[-1] - x[0])) if len(x) > 1 else 0.0
    return {"monotone_drift": total if mono else 0.0, "net_change": total, "trend": trend}


def tightness_summary(rows, dim_B, drift_limit=0.5, width_limit=6.0) -> dict:
    out = {}
    for end in ("td", "tw"):
        bands = [r[f"band_{end}"] for r in rows]
        x = np.log([r["n"] for r in rows])
        drifts = {q: _drift(x, np.array([b[q] for b in bands])) for q in ("q05", "q50", "q95")}
        lo = min(b["q05"] for b in bands)
        hi = max(b["q95"] for b in bands)
        ctrl = [r[f"control_median_{end}"] for r in rows]
        expected = dim_B * (math.log(math.log(rows[-1]["n"])) - math.log(math.log(rows[0]["n"])))
        out[end] = {"drifts": drifts,
                    "max_monotone_drift": max(abs(v["monotone_drift"]) for v in drifts.values()),
                    "envelope": [lo, hi], "envelope_width": hi - lo,
                    "control_drift": ctrl[-1] - ctrl[0], "control_expected": expected}
        out[end]["no_drift"] = out[end]["max_monotone_drift"] <= drift_limit
        out[end]["width_ok"] = out[end]["envelope_width"] <= width_limit
        out[end]["control_ok"] = abs(out[end]["control_drift"] - expected) <= 0.5
    return out


def mean_uncovered(net: Net, eps: float, reps: int, *, seed: int = 0, mode: str = "well") -> dict:
    """Replicate mean of the uncovered count at the threshold time vs ``|A^rho|**eps``."""
    from .cover import uncovered_threshold
    N = len(net)
    thr = uncovered_threshold(N, eps, net.rho, net.d, mode)
    target = CoverTarget.from_net(net)
    counts = np.empty(reps)
    for i in range(reps):
        hit, sing, _ = first_times(net.points, net.rho,
                                   LineBatches(target.window, keyed_rng(seed, i, "uncovered")),
                                   until=thr)
        counts[i] = np.count_nonzero((sing if mode == "well" else hit) > thr)
    mean = counts.mean()
    se = counts.std(ddof=1) / math.sqrt(reps)
    return {"mean": float(mean), "se": float(se), "expected": N ** eps,
            "z": float((mean - N ** eps) / se) if se > 0 else math.inf, "counts": counts}


# ---------------------------------------------------------------- inequalities


def _case(name, source, margins, tol, skipped=0, **extra):
    margins = np.asarray(margins, float)
    if margins.size == 0:
        return {"name": name, "source": source, "status": "out_of_range", "n_checked": 0,
                "n_skipped": skipped, **extra}
    worst = float(margins.min())
    return {"name": name, "source": source, "status": "pass" if worst >= -tol else "fail",
            "worst_margin": worst, "n_checked": int(margins.size), "n_skipped": skipped, **extra}


def check_smallbeta(d: int, n_grid: int = 100, tol: float = 1e-6) -> dict:
    cd = dim_constants(d).C_d
    r = np.linspace(0, 2 * cd, n_grid)
    m = [(1 - x / 12) - pair_hit_measure(x, d).value for x in r]
    return _case(f"smallbeta[d={d}]", "pair measure <= 1 - r/12 for r <= 2 C_d", m, tol,
                 boundary_margin=float(m[-1]))


def check_boundbeta(d: int, rhos, ks, tol: float = 1e-6) -> dict:
    cd = dim_constants(d).C_d
    m, skip = [], 0
    for rho in rhos:
        for k in ks:
            if not (0 < rho < 2 / 3 and 2 ** k * rho / (1 - rho) <= 2 * cd):
                skip += 1
                continue
            b = beta_ratio(rho, k, d)
            m.append(min(b - (1 + 2 ** k * rho / 12), 2 - b))
    return _case(f"boundbeta[d={d}]", "1 + 2^k rho/12 < beta < 2", m, tol, skip)


def check_boundalpha(d: int, rhos, ks, tol: float = 1e-6) -> dict:
    cd = dim_constants(d).C_d
    m, skip = [], 0
    for rho in rhos:
        for k in ks:
            if not (0 < rho < 2 / 3 and 2 ** k * rho <= 2 * cd):
                skip += 1
                continue
            a = alpha_ratio(rho, k, d)
            m.append(min(a - (1 + 2 ** k * rho / 12), 2 - a))
    return _case(f"boundalpha[d={d}]", "1 + 2^k rho/12 <= alpha <= 2", m, tol, skip)


def logexp_lhs(z, b, sign: int):
    """``|(1 - e^-z / b)^(b + sign b^(2/3)) - exp(-e^-z)|`` in a stable form."""
    a = math.exp(-z)
    p = (b + sign * b ** (2 / 3)) * math.log1p(-a / b)
    return abs(math.exp(p) - math.exp(-a))


def check_logexp(b_values, z_per_b: int, z_max: float = 20.0, tol: float = 1e-6):
    pos, neg, skip = [], [], 0
    for b in b_values:
        if b < 16:  # |A^rho|^(rho/200) = b^(1/4) >= 2 is the standing hypothesis
            skip += z_per_b
            continue
        for z in np.linspace(-math.log(b) / 4, z_max, z_per_b):
            pos.append(3 * b ** (-1 / 12) - logexp_lhs(z, b, +1))
            neg.append(b ** (-1 / 12) - logexp_lhs(z, b, -1))
    return [_case("logexp[+]", "<= 3 |A^rho|^(-eps/12)", pos, tol, skip),
            _case("logexp[-]", "<= |A^rho|^(-eps/12)", neg, tol, skip)]


def check_ddbound(d_max: int = 10, tol: float = 1e-6) -> dict:
    m = [2 - dim_constants(d).D_d for d in range(2, d_max + 1)]
    return _case("Ddbound", "D_d <= 2", m, tol)


def check_calc(n: int = 100_001, tol: float = 1e-12) -> list:
    x = np.linspace(0, 0.5, n)
    lg = np.log1p(-x)
    c1 = np.minimum(lg - (-x - x ** 2), -x - lg)
    y = np.linspace(0, 50, n)
    c2 = y - (-np.expm1(-y))
    return [_case("calc1", "-x - x^2 <= log(1-x) <= -x on [0,1/2]", c1, tol),
            _case("calc2", "1 - exp(-x) <= x for x >= 0", c2, tol)]


def measure_window(d: int, rs=(4, 8, 16, 32, 64, 128, 256)) -> dict:
    """Observed range of ``r^(d-1) * pair measure`` over ``r >= 4``."""
    v = np.array([r ** (d - 1) * pair_hit_measure(r, d).value for r in rs])
    ok = bool(np.all(v > 0) and np.all(np.isfinite(v)))
    return {"name": f"measurebounds_org[d={d}]", "source": "c1 <= r^(d-1) mu <= c2, r >= 4",
            "status": "pass" if ok else "fail", "observed_c1": float(v.min()),
            "observed_c2": float(v.max()), "n_checked": len(rs), "values": v.tolist()}


def pair_probabilities(net: Net, eps: float, mode: str = "well") -> dict:
    """Exact ``sum_{x != y} P(x, y both uncovered at the threshold)`` for a net,
    split by distance into ``[rho, C_d)``, ``[C_d, log N)``, ``[log N, inf)``."""
    from .cover import uncovered_threshold
    pts, d, rho = net.points, net.d, net.rho
    N = len(net)
    thr = uncovered_threshold(N, eps, rho, d, mode)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff ** 2, -1))[np.triu_indices(N, 1)]
    keys, inv = np.unique(np.round(dist, 12), return_inverse=True)
    r_ball = 0.0 if mode == "discrete" else rho
    mu = np.array([pair_union_measure(r, d, r_ball).value for r in keys])
    p = 2 * np.exp(-thr * mu)[inv]  # ordered pairs
    cd = dim_constants(d).C_d
    logn = math.log(N)
    parts = {"I1": float(p[dist < cd].sum()),
             "I2": float(p[(dist >= cd) & (dist < logn)].sum()),
             "I3": float(p[dist >= logn].sum())}
    total = sum(parts.values())
    return {**parts, "I": total, "N": N, "eps": eps, "shape_main": N ** (2 * eps),
            "observed_constant": (total - N ** (2 * eps)) * N ** eps}


def check_boundsumofpairs(net: Net, eps: float) -> dict:
    rep = check_assumptions(net.rho, net.d, len(net))
    in_hyp = rep.a1 and rep.a3 and rep.a5 and net.rho / 1000 < eps < net.rho / 36
    diag = pair_probabilities(net, eps)
    if not in_hyp:
        return {"name": "boundsumofpairs", "status": "out_of_range", "n_checked": 0,
                "source": "I < c N^-eps + N^2eps", "diagnostic": diag}
    ok = diag["observed_constant"] < math.inf
    return {"name": "boundsumofpairs", "status": "pass" if ok else "fail", "n_checked": 1,
            "source": "I < c N^-eps + N^2eps", "diagnostic": diag}


def inequality_suite(d_list: Sequence[int] = (2, 3, 4, 5), *, n_r: int = 100,
                     rhos=None, ks=range(0, 8), logexp_b=None, logexp_z: int = 25,
                     tol: float = 1e-6) -> ExperimentReport:
    rhos = np.linspace(0.005, 0.66, 24) if rhos is None else rhos
    logexp_b = np.logspace(math.log10(16), 12, 40) if logexp_b is None else logexp_b
    cases = []
    for d in d_list:
        cases.append(check_smallbeta(d, n_r, tol))
        cases.append(check_boundbeta(d, rhos, ks, tol))
        cases.append(check_boundalpha(d, rhos, ks, tol))
        cases.append(measure_window(d))
    cases += check_logexp(logexp_b, logexp_z, tol=tol)
    cases.append(check_ddbound(10, tol))
    cases += check_calc()
    failed = [c["name"] for c in cases if c["status"] == "fail"]
    config = {"d_list": list(d_list), "n_r": n_r, "rhos": list(map(float, rhos)),
              "ks": list(ks), "logexp_b": list(map(float, logexp_b)), "logexp_z": logexp_z,
              "tolerance": tol}
    return ExperimentReport("inequalities", config, cases,
                            {"failed": failed, "passed": not failed,
                             "out_of_range": [c["name"] for c in cases
                                              if c["status"] == "out_of_range"]},
                            labels={"inequalities": "theory"})
