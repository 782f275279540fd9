"""Command-line front end.

Every run writes a JSON report (stdout, or ``--out PREFIX`` -> ``PREFIX.json``)
and, for sampling commands, a CSV sample file ``PREFIX.csv``. Both embed the
tool version, the resolved config, the seed and the net rule. Output depends
only on (command, config, seed).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import ResourceError, UsageError, __version__
from .measure import (alpha_ratio, beta_ratio, dim_constants, gamma, mc_pair_oracle,
                      pair_hit_measure, pair_union_measure)
from .net import (Ball, Box, Points, Scaled, box_dimension_fit, build_net,
                  content_constant, integer_grid, read_net_csv, write_net_csv)
from .cover import bracket_nets
from .verify import (check_assumptions, cover_table, gumbel_experiment, inequality_suite,
                     jsonable, tightness_experiment)

COMMANDS = ("measure", "net", "dim", "cover", "gumbel", "tightness", "verify")
EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_VERIFY = 0, 1, 2, 3


@dataclass
class Config:
    command: str
    d: int | None = None
    box: list | None = None       # lo..., hi...
    ball: list | None = None      # center..., radius
    grid: int | None = None       # integer grid [0, grid-1]^d
    points_file: str | None = None
    family: str = "grid"          # gumbel: "grid" ([0,n-1]^d on Z^d) or "box" (n * box)
    rho: float | None = None
    rhos: list | None = None
    D: float | None = None
    K: int = 8
    n_list: list | None = None
    reps: int = 100
    seed: int = 0
    dim_b: float | None = None
    c_a: float | None = None
    pair_hit: bool = False
    union: bool = False
    beta: bool = False
    alpha: bool = False
    constants: bool = False
    assumptions: bool = False
    r: float | None = None
    k: int | None = None
    net_count: int | None = None
    mc_samples: int = 0
    d_list: list | None = None
    out: str | None = None
    workers: int | None = None

    def resolved(self) -> dict:
        return asdict(self)


FIELD_NAMES = {f.name for f in fields(Config)}


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cylcover", description="Poisson cylinder cover-time toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with config keys; flags override it")
        s.add_argument("--d", type=int, action="append", dest="d_flags",
                       help="dimension (repeatable for verify)")
        s.add_argument("--box", type=_floats, help="lo1,..,lod,hi1,..,hid")
        s.add_argument("--ball", type=_floats, help="c1,..,cd,radius")
        s.add_argument("--grid", type=int, help="integer grid [0,N-1]^d")
        s.add_argument("--points-file", help="net CSV or plain CSV of points")
        s.add_argument("--family", choices=("grid", "box"))
        s.add_argument("--rho", type=float)
        s.add_argument("--rhos", type=_floats)
        s.add_argument("--D", type=float, help="rho schedule constant: rho_n = D/log|A_n^1|")
        s.add_argument("--K", type=int)
        s.add_argument("--n-list", type=_ints)
        s.add_argument("--reps", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--dim-b", type=float)
        s.add_argument("--c-a", type=float)
        s.add_argument("--r", type=float)
        s.add_argument("--k", type=int)
        s.add_argument("--net-count", type=int)
        s.add_argument("--mc-samples", type=int)
        for flag in ("pair-hit", "union", "beta", "alpha", "constants", "assumptions"):
            s.add_argument(f"--{flag}", action="store_true", default=None)
        s.add_argument("--out", help="output prefix: writes PREFIX.json (+ PREFIX.csv)")
        s.add_argument("--workers", type=int)
    return p


def parse_config(argv, config_file: str | None = None) -> Config:
    """Flags override config-file values; unknown keys are rejected."""
    ns = build_parser().parse_args(list(argv))
    if ns.command is None:
        raise UsageError("a command is required: " + ", ".join(COMMANDS))
    values: dict = {}
    path = config_file or ns.config
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config file: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(data) - FIELD_NAMES)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        if "command" in data and data["command"] != ns.command:
            raise UsageError("config file command differs from the command line")
        values.update(data)
    flags = {k: v for k, v in vars(ns).items()
             if v is not None and k not in ("config", "d_flags", "command")}
    if ns.d_flags:
        if ns.command == "verify":
            flags["d_list"] = ns.d_flags
        elif len(ns.d_flags) > 1:
            raise UsageError("--d given more than once")
        else:
            flags["d"] = ns.d_flags[0]
    values.update(flags)
    values["command"] = ns.command
    cfg = Config(**values)
    validate(cfg)
    return cfg


def _need(cfg, name):
    if getattr(cfg, name) is None:
        raise UsageError(f"missing required field: {name}")


def validate(cfg: Config) -> None:
    c = cfg.command
    if c not in COMMANDS:
        raise UsageError(f"unknown command {c!r}")
    if cfg.d is not None and cfg.d < 2:
        raise UsageError("field d must be >= 2")
    if cfg.rho is not None and (cfg.D is not None or cfg.rhos is not None):
        raise UsageError("rho conflicts with the rho schedule (D) / rho list (rhos)")
    if cfg.reps < 1:
        raise UsageError("field reps must be >= 1")
    if cfg.K < 2:
        raise UsageError("field K must be >= 2")
    if cfg.workers is not None and cfg.workers < 1:
        raise UsageError("field workers must be >= 1")
    if c == "verify":
        if not cfg.d_list:
            cfg.d_list = [cfg.d] if cfg.d is not None else None
        if not cfg.d_list:
            raise UsageError("missing required field: d")
        return
    _need(cfg, "d")
    if c == "measure":
        modes = [m for m in ("pair_hit", "union", "beta", "alpha", "constants", "assumptions")
                 if getattr(cfg, m)]
        if len(modes) != 1:
            raise UsageError("measure needs exactly one of --pair-hit --union --beta "
                             "--alpha --constants --assumptions")
        if modes[0] in ("pair_hit", "union"):
            _need(cfg, "r")
        if modes[0] in ("union", "beta", "alpha", "assumptions"):
            _need(cfg, "rho")
        if modes[0] in ("beta", "alpha"):
            _need(cfg, "k")
        if modes[0] == "assumptions":
            _need(cfg, "net_count")
        return
    if c in ("net", "dim", "cover", "tightness"):
        if sum(x is not None for x in (cfg.box, cfg.ball, cfg.grid, cfg.points_file)) != 1:
            raise UsageError("give exactly one geometry: --box, --ball, --grid or --points-file")
    if c == "net":
        _need(cfg, "rho")
    if c == "dim":
        _need(cfg, "rhos")
    if c == "cover" and cfg.rho is None and cfg.rhos is None:
        raise UsageError("missing required field: rho")
    if c == "gumbel":
        _need(cfg, "rho")
        _need(cfg, "n_list")
        if cfg.family == "box":
            _need(cfg, "box")
    if c == "tightness":
        _need(cfg, "dim_b")
        _need(cfg, "n_list")
        if cfg.D is None:
            raise UsageError("missing required field: D (tightness uses the rho schedule)")


def geometry(cfg: Config):
    d = cfg.d
    if cfg.box is not None:
        if len(cfg.box) != 2 * d:
            raise UsageError(f"--box needs {2 * d} numbers for d={d}")
        return Box(tuple(cfg.box[:d]), tuple(cfg.box[d:]))
    if cfg.ball is not None:
        if len(cfg.ball) != d + 1:
            raise UsageError(f"--ball needs {d + 1} numbers for d={d}")
        return Ball(tuple(cfg.ball[:d]), cfg.ball[d])
    if cfg.grid is not None:
        return integer_grid(cfg.grid, d)
    try:
        with open(cfg.points_file) as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read points file: {e}") from None
    if text.lstrip("#").startswith(" rho") or "# rho,K,d,count" in text:
        pts = read_net_csv(text)[2]
    else:
        pts = np.loadtxt(io.StringIO(text), delimiter=",", comments="#", ndmin=2)
    if pts.shape[1] != d:
        raise UsageError(f"points file has dimension {pts.shape[1]}, expected d={d}")
    return Points(pts)


def _header(cfg: Config, rule: dict | None) -> dict:
    return {"version": __version__, "config": cfg.resolved(), "seed": cfg.seed,
            "net_rule": rule}


def _workers(cfg):
    return cfg.workers if cfg.workers is not None else (os.cpu_count() or 1)


def run(cfg: Config):
    """Dispatch; returns ``(report, csv_text or None, exit_code)``."""
    c = cfg.command
    rule = {"rule": "greedy-lattice", "K": cfg.K, "ordering": "lexicographic"}
    if c == "measure":
        return _measure(cfg), None, EXIT_OK
    if c == "verify":
        rep = inequality_suite(cfg.d_list)
        body = rep.to_dict()
        return body, None, EXIT_OK if rep.summary["passed"] else EXIT_VERIFY
    spec = geometry(cfg) if c != "gumbel" else None
    if c == "net":
        net = build_net(spec, cfg.rho, cfg.K)
        rule = net.rule()
        head = {k: json.dumps(jsonable(v), sort_keys=True) for k, v in _header(cfg, rule).items()}
        return {"count": len(net), "rho": net.rho, "d": net.d}, write_net_csv(net, None, head), EXIT_OK
    if c == "dim":
        fit = box_dimension_fit(spec, cfg.rhos, cfg.K)
        body = {"slope": fit.slope, "intercept": fit.intercept, "rhos": fit.rhos,
                "counts": fit.counts, "local_slopes": fit.local_slopes, "residual": fit.residual}
        if cfg.dim_b is not None:
            body["content"] = content_constant(spec, cfg.dim_b, cfg.rhos, cfg.K)
        return body, None, EXIT_OK
    if c == "cover":
        return _cover(cfg, spec)
    if c == "gumbel":
        d = cfg.d
        if cfg.family == "grid":
            family = lambda n: integer_grid(n, d)  # noqa: E731
        else:
            base = geometry(cfg)
            family = lambda n: Scaled(base, n)  # noqa: E731
        rep = gumbel_experiment(family, cfg.rho, cfg.n_list, cfg.reps, K=cfg.K, seed=cfg.seed,
                                d=d, workers=_workers(cfg))
        return rep.to_dict(), _rows_csv(cfg, rule, ("n", "rep", "centered_td", "centered_tw"),
                                        rep.sample_rows()), EXIT_OK
    if c == "tightness":
        rep = tightness_experiment(spec, cfg.dim_b, cfg.c_a, cfg.D, cfg.n_list, cfg.reps,
                                   K=cfg.K, seed=cfg.seed, workers=_workers(cfg))
        return rep.to_dict(), _rows_csv(cfg, rule, ("n", "rep", "centered_td", "centered_tw"),
                                        rep.sample_rows()), EXIT_OK
    raise UsageError(f"unknown command {c!r}")


def _measure(cfg: Config) -> dict:
    d = cfg.d
    if cfg.pair_hit:
        out = pair_hit_measure(cfg.r, d).to_dict()
        if cfg.mc_samples:
            out["monte_carlo"] = mc_pair_oracle(cfg.r, d, cfg.mc_samples, seed=cfg.seed).to_dict()
        return out
    if cfg.union:
        return pair_union_measure(cfg.r, d, cfg.rho).to_dict()
    if cfg.beta:
        return {"value": beta_ratio(cfg.rho, cfg.k, d), "method": "quadrature"}
    if cfg.alpha:
        return {"value": alpha_ratio(cfg.rho, cfg.k, d), "method": "quadrature"}
    if cfg.constants:
        out = asdict(dim_constants(d))
        if cfg.rho is not None:
            out["gamma"] = gamma(cfg.rho, d)
        return out
    return check_assumptions(cfg.rho, d, cfg.net_count).to_dict()


def _cover(cfg: Config, spec):
    rhos = [cfg.rho] if cfg.rho is not None else sorted(set(cfg.rhos), reverse=True)
    nets, window = bracket_nets(spec, rhos, cfg.K)
    rows, summary = [], []
    for net in nets:
        tab = cover_table(net, cfg.reps, cfg.seed, window, workers=_workers(cfg))
        rows += [(cfg.seed, net.rho, len(net), td, tw, int(u)) for td, tw, u in tab]
        summary.append({"rho": net.rho, "n_points": len(net),
                        "mean_t_d": float(tab[:, 0].mean()), "mean_t_w": float(tab[:, 1].mean()),
                        "bracket_ok": bool(np.all(tab[:, 0] <= tab[:, 1]))})
    text = _rows_csv(cfg, nets[0].rule(),
                     ("seed", "rho", "n_points", "t_d", "t_w", "lines_used"), rows)
    return {"window": {"center": window.center, "radius": window.radius}, "nets": summary}, \
        text, EXIT_OK


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _rows_csv(cfg, rule, columns, rows) -> str:
    buf = io.StringIO()
    for k, v in _header(cfg, rule).items():
        buf.write(f"## {k}={json.dumps(jsonable(v), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def execute(cfg: Config, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        body, text, code = run(cfg)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, MemoryError) as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    rule = {"rule": "greedy-lattice", "K": cfg.K, "ordering": "lexicographic"}
    doc = json.dumps(jsonable({**_header(cfg, rule), "result": body}), sort_keys=True, indent=1)
    if cfg.out:
        with open(cfg.out + ".json", "w") as fh:
            fh.write(doc + "\n")
        if text is not None:
            with open(cfg.out + ".csv", "w") as fh:
                fh.write(text)
    else:
        stdout.write(doc + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
