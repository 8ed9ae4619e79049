"""Command-line front end: reproducible experiments, CSV/JSON/SVG reports.

Subcommands: moments, renewal, simulate, mc, rrt, gauss, verify.  A JSON
config file can mirror any flag; explicit flags win.  Exit codes: 0 ok,
1 a gated verification check failed, 2 usage error.

All numeric CSV output uses 17 significant digits so files round-trip and
identical (config, seed) pairs give byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import cmj, gauss, renewal, rrt, verify
from .dist import RngStream, parse_law
from .plot import Series, emit_plot

_G17 = "{:.17g}".format


@dataclass
class ExperimentConfig:
    """Resolved invocation: everything needed to reproduce an experiment."""

    subcommand: str
    law: str | None = None
    eta: str | None = None
    k: int = 1
    levels: int = 3
    t: float = 100.0
    n: int = 100
    h: float = 0.01
    replicas: int = 100
    seed: int = 0
    grid: str | None = None
    out: str | None = None
    fmt: str = "csv"
    suite: str = "fast"
    checks: str | None = None
    plot: str | None = None
    mode: str = "yule"
    enumerate_n: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)


_DEFAULTS = ExperimentConfig("_")


def _resolve(args: argparse.Namespace) -> ExperimentConfig:
    """Merge CLI flags over config-file values over built-in defaults."""
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
    cfg = ExperimentConfig(args.subcommand)
    for name in vars(cfg):
        if name == "subcommand":
            continue
        cli_val = getattr(args, name, None)
        if cli_val is not None:
            setattr(cfg, name, cli_val)
        elif name in file_cfg:
            setattr(cfg, name, file_cfg[name])
    return cfg


def _parse_grid(spec: str) -> np.ndarray:
    kind, _, body = spec.partition(":")
    kv = {}
    for item in body.split(","):
        if item:
            key, _, val = item.partition("=")
            kv[key.strip()] = float(val)
    if kind == "geometric":
        start = kv.get("start", math.e**2)
        base = kv.get("base", 1.5)
        count = int(kv.get("count", 10))
        return start * base ** np.arange(count)
    if kind == "linear":
        return np.linspace(kv["start"], kv["stop"], int(kv.get("count", 10)))
    raise ValueError(f"unknown grid kind {kind!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _cmd_moments(cfg: ExperimentConfig) -> int:
    law = parse_law(cfg.law)
    m = law.moments()
    out = {"mu": m.mean, "m2": m.second_moment, "var": m.variance}
    if m.variance > 0:
        out["a"] = [renewal.lil_constant(k, m.mean, m.sigma) for k in range(1, cfg.levels + 1)]
    _emit(_json(out), cfg.out)
    return 0


def _cmd_renewal(cfg: ExperimentConfig) -> int:
    law = parse_law(cfg.law)
    if not hasattr(law, "pmf"):
        raise ValueError("exact tables need a lattice law")
    if cfg.eta:
        eta = parse_law(cfg.eta)
        if not hasattr(eta, "pmf"):
            raise ValueError("perturbation law must be lattice")
        u = renewal.renewal_sequence(law, cfg.n)
        table = renewal.perturbed_table(u, law.span, eta, cfg.n, law.moments().mean)
        table = renewal.convolve_levels(table, cfg.levels)
    else:
        table = renewal.renewal_table(law, cfg.levels, cfg.n)
    if cfg.fmt == "json":
        m = law.moments()
        eta_mean = parse_law(cfg.eta).moments().mean if cfg.eta else None
        consts = [
            renewal.AsymptoticConstants.from_moments(k, m, span=law.span, eta_mean=eta_mean).to_dict()
            for k in range(1, cfg.levels + 1)
        ]
        _emit(_json({"constants": consts}), cfg.out)
    else:
        if not cfg.out:
            raise ValueError("CSV table needs --out")
        renewal.write_table_csv(table, cfg.out)
    return 0


def _sim_config(cfg: ExperimentConfig) -> cmj.SimConfig:
    grid = _parse_grid(cfg.grid) if cfg.grid else None
    return cmj.SimConfig(
        parse_law(cfg.law),
        levels=cfg.levels,
        horizon=cfg.t,
        eta=parse_law(cfg.eta) if cfg.eta else None,
        grid=grid,
        seed=cfg.seed,
        replicas=cfg.replicas,
    )


def _cmd_simulate(cfg: ExperimentConfig) -> int:
    config = _sim_config(cfg)
    sim = cmj.simulate_generations(config, 0)
    if config.grid is not None and cfg.fmt == "svg":
        if not cfg.out:
            raise ValueError("SVG output needs --out")
        series = [
            Series(config.grid, sim.path[k], f"generation {k + 1}")
            for k in range(config.levels)
        ]
        emit_plot(series, cfg.out, title="generation counts", x_label="t", y_label="count")
        return 0
    if config.grid is not None:
        lines = ["t," + ",".join(f"Y{k}" for k in range(1, config.levels + 1))]
        for j, t in enumerate(config.grid):
            lines.append(",".join([_G17(t)] + [str(int(sim.path[k, j])) for k in range(config.levels)]))
        _emit("\n".join(lines) + "\n", cfg.out)
    else:
        _emit(_json({"t": config.horizon, "counts": [int(c) for c in sim.counts]}), cfg.out)
    return 0


def _cmd_mc(cfg: ExperimentConfig) -> int:
    config = _sim_config(cfg)
    summary = cmj.monte_carlo(config)
    if cfg.fmt == "json":
        _emit(_json(summary.to_dict()), cfg.out)
        return 0
    t = config.horizon
    lines = ["replica,k,t,Y,clt_stat,lil_stat"]
    for r in range(config.replicas):
        for k in range(1, config.levels + 1):
            y = int(summary.counts[r, k - 1])
            clt = _G17(summary.clt[r, k - 1]) if summary.clt is not None else ""
            lil = _G17(summary.lil[r, k - 1]) if summary.lil is not None else ""
            lines.append(f"{r},{k},{_G17(t)},{y},{clt},{lil}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def _cmd_rrt(cfg: ExperimentConfig) -> int:
    if cfg.enumerate_n is not None:
        pmf = rrt.enumerate_profiles(cfg.enumerate_n, cfg.levels)
        encoded = {",".join(str(v) for v in key): p for key, p in sorted(pmf.items())}
        _emit(_json(encoded), cfg.out)
        return 0
    n = cfg.n
    lines = ["n,k,X,statistic"]
    for r in range(cfg.replicas):
        stream = RngStream(cfg.seed, r)
        trace = (rrt.grow_yule if cfg.mode == "yule" else rrt.grow_discrete)(n, cfg.levels, stream)
        counts = trace.counts(cfg.levels)
        for k in range(1, cfg.levels + 1):
            stat = ""
            if n > rrt.MIN_STAT_N:
                stat = _G17(rrt.rrt_lil_statistic(float(counts[k - 1]), n, k))
            lines.append(f"{n},{k},{int(counts[k - 1])},{stat}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def _cmd_gauss(cfg: ExperimentConfig) -> int:
    k, t, h = cfg.k, cfg.t, cfg.h
    if k < 2:
        raise ValueError("the weighted integrals need k >= 2")
    if cfg.law:
        law = parse_law(cfg.law)
        if hasattr(law, "pmf"):
            table = renewal.renewal_table(law, max(1, k - 1), int(math.ceil(t / law.span)))
            fk = gauss.FkTable.from_renewal(table, k)
        elif law.family == "exp":
            fk = gauss.FkTable.exponential(k, law.params["rate"])
        else:
            raise ValueError("remainder weight needs a lattice or exponential law")
    else:
        fk = gauss.FkTable.exponential(k)
    b1 = gauss.b1k_ensemble(k, t, h, cfg.replicas, RngStream(cfg.seed, 0))
    b2 = gauss.b2k_ensemble(fk, t, h, cfg.replicas, RngStream(cfg.seed, 1))
    if cfg.fmt == "json":
        out = {
            "k": k,
            "t": t,
            "h": h,
            "b1_variance": float(b1.var(ddof=1)),
            "b1_variance_target": t ** (2 * k - 1) / (2 * k - 1),
            "b2_variance": float(b2.var(ddof=1)),
            "b2_variance_target": gauss.variance_b2k(fk, t) if fk.kind == "lattice" else 0.0,
        }
        _emit(_json(out), cfg.out)
        return 0
    lines = ["replica,t,B1k,B2k"]
    for r in range(cfg.replicas):
        lines.append(f"{r},{_G17(t)},{_G17(b1[r])},{_G17(b2[r])}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def _cmd_verify(cfg: ExperimentConfig) -> int:
    if cfg.checks:
        report = verify.VerificationReport("custom", cfg.seed)
        for name in cfg.checks.split(","):
            report.checks.extend(verify.run_check(name.strip(), cfg.seed))
    else:
        report = verify.run_suite(cfg.suite, cfg.seed)
    text = report.to_json() if cfg.fmt == "json" else report.to_text()
    _emit(text, cfg.out)
    if cfg.plot:
        grid, stats = verify.lil_extrema_series(cfg.seed)
        series = [
            Series(grid, stats.max(axis=0), "running max", "line"),
            Series(grid, stats.min(axis=0), "running min", "line"),
        ]
        emit_plot(
            series,
            cfg.plot,
            title="level-1 fluctuation band on a geometric grid",
            x_label="log10 t",
            y_label="normalized statistic",
            ref_lines=(-1.0, 1.0),
            log_x=True,
        )
    return 0 if report.passed else 1


_COMMANDS = {
    "moments": _cmd_moments,
    "renewal": _cmd_renewal,
    "simulate": _cmd_simulate,
    "mc": _cmd_mc,
    "rrt": _cmd_rrt,
    "gauss": _cmd_gauss,
    "verify": _cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iterlog",
        description="Renewal tables, branching-generation Monte Carlo, tree profiles",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name: str, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", help="JSON file mirroring flags; flags override")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", dest="fmt", choices=("csv", "json", "text", "svg"))
        p.add_argument("--seed", type=int)
        p.add_argument("--dump-config", dest="dump_config", help="write the resolved config JSON")
        return p

    p = add("moments", help="closed-form moments and statistic constants of a law")
    p.add_argument("--law", required=True)
    p.add_argument("--K", dest="levels", type=int)

    p = add("renewal", help="exact lattice tables and expansion constants")
    p.add_argument("--law", required=True)
    p.add_argument("--eta", help="perturbation law (same lattice)")
    p.add_argument("--K", dest="levels", type=int)
    p.add_argument("--N", dest="n", type=int)

    p = add("simulate", help="one replica of the branching process")
    p.add_argument("--law", required=True)
    p.add_argument("--eta")
    p.add_argument("--K", dest="levels", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--grid", help="geometric:start=..,base=..,count=.. or linear:start=..,stop=..,count=..")

    p = add("mc", help="Monte Carlo ensemble of generation counts")
    p.add_argument("--law", required=True)
    p.add_argument("--eta")
    p.add_argument("--K", dest="levels", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--replicas", type=int)
    p.add_argument("--grid")

    p = add("rrt", help="random recursive tree profiles (n = non-root vertices)")
    p.add_argument("--n", type=int)
    p.add_argument("--K", dest="levels", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--mode", choices=("yule", "discrete"))
    p.add_argument("--enumerate", dest="enumerate_n", type=int, help="exact pmf by enumeration")

    p = add("gauss", help="weighted Brownian sums and variance identities")
    p.add_argument("--law", help="lattice or exponential law for the remainder weight")
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--replicas", type=int)

    p = add("verify", help="run the named verification checks")
    p.add_argument("--suite", choices=("fast", "full"))
    p.add_argument("--checks", help="comma list of check names instead of a suite")
    p.add_argument("--plot", help="also write the fluctuation-band SVG to this path")
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = _resolve(args)
        if getattr(args, "dump_config", None):
            with open(args.dump_config, "w", encoding="utf-8") as fh:
                fh.write(_json(cfg.to_dict()))
        return _COMMANDS[args.subcommand](cfg)
    except (ValueError, OSError) as exc:
        print(f"iterlog: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
