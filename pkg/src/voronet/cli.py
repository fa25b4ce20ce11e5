"""Command-line front end: solve | sweep | simulate | figures.

Configuration is a flat key=value text file; --set flags override file
values.  Every CSV starts with '#' comment lines carrying the resolved
config hash, master seed and artifact version, and floats are printed
with 17 significant digits so identical configs give bit-identical files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import math
import sys

import numpy as np

from . import __version__
from .model import NetworkParams, ParameterError, TrafficParams, c_constant
from .coverage import CoverageEvaluator, closed_coverage
from . import equilibrium as eq
from . import geomsim

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_INFEASIBLE = 4

DEFAULTS = {
    "seed": "12345",
    "workers": "1",
    "out": "-",
    "window": "16",
    "slots": "10000",
    "replications": "4",
    "warmup_frac": "0.1",
    "mode": "meanfield_adaptive",
    "p_min": "0.01",
    "p_max": "0.3",
    "p_steps": "30",
    "K_list": "0,1,2,4,8,inf",
}


class ConfigError(ValueError):
    pass


def parse_config(path: str | None, overrides) -> dict:
    cfg = dict(DEFAULTS)
    if path:
        try:
            with open(path) as fh:
                lines = fh.readlines()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}")
        for i, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{i}: expected key=value, got {line!r}")
            key, val = line.split("=", 1)
            cfg[key.strip()] = val.strip()
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        cfg[key.strip()] = val.strip()
    return cfg


def config_hash(cfg: dict) -> str:
    blob = "\n".join(f"{k}={cfg[k]}" for k in sorted(cfg))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _float(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: not a number: {cfg[key]!r}")


def parse_buffer(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity", "-1"):
        return math.inf
    try:
        k = int(text)
    except ValueError:
        raise ConfigError(f"buffer size must be an integer or 'inf', got {text!r}")
    if k < 0:
        raise ConfigError("buffer size must be nonnegative")
    return k


def build_coverage(cfg: dict):
    """Coverage function from config: closed form if C is given directly,
    otherwise the quadrature evaluator over the physical parameters."""
    if "C" in cfg:
        C = _float(cfg, "C")
        if C <= 0:
            raise ConfigError("need C > 0")
        return closed_coverage(C), C, None
    params = build_network(cfg)
    ev = CoverageEvaluator(params)
    return ev.coverage, params.c_value, params


def build_network(cfg: dict) -> NetworkParams:
    try:
        return NetworkParams(
            lambda0=_float(cfg, "lambda0", 1.0), lambda1=_float(cfg, "lambda1", 1.0),
            d=int(_float(cfg, "d", 2)), beta=_float(cfg, "beta", 4.0),
            kappa=_float(cfg, "kappa", 0.0), mu=_float(cfg, "mu", 1.0),
            sigma2=_float(cfg, "sigma2", 0.0), T=_float(cfg, "T", 1.0))
    except ParameterError as e:
        raise ConfigError(str(e))


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def write_csv(out: str, columns, rows, meta: dict):
    lines = [f"# {k}={v}" for k, v in meta.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    text = "\n".join(lines) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _meta(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "seed": cfg["seed"],
            "version": __version__}


def _echo_params(cfg):
    if "C" in cfg:
        return ["C"], [float(cfg["C"])]
    params = build_network(cfg)
    return (["kappa", "sigma2", "T", "delta", "w"],
            [params.kappa, params.sigma2, params.T, params.delta, params.w])


def _k_cell(K) -> tuple[float, str]:
    return (-1, "inf") if K == math.inf else (int(K), str(int(K)))


def _solve_cell(p: float, K, coverage, check_minimal: bool = True):
    """One sweep cell -> row fragment [q*, coverage, thr, loss, delay, ld,
    converged, feasible, iterations]."""
    if K == 0:
        v = coverage(p)
        return [p, v, v, 1.0 - v / p, 0.0, 0.0, True, True, 0]
    if K == math.inf:
        res = eq.solve_busy_infinite(p, coverage)
        if isinstance(res, eq.InfeasibleResult):
            return [math.nan, math.nan, math.nan, math.nan, math.nan, math.nan,
                    True, False, res.iterations]
        v = res.u_star * res.q_star
        return [res.q_star, v, res.throughput, res.loss_probability, res.delay,
                res.ld_product, res.converged, True, res.iterations]
    try:
        sol = eq.solve_busy(TrafficParams(p=p, buffer=K), coverage,
                            check_minimal=check_minimal)
    except eq.ConvergenceError as e:
        return [math.nan, math.nan, math.nan, math.nan, math.nan, math.nan,
                False, True, len(e.trace)]
    v = sol.u_star * sol.q_star
    return [sol.q_star, v, sol.throughput, sol.loss_probability, sol.delay,
            sol.ld_product, sol.converged, True, sol.iterations]


def cmd_solve(cfg: dict) -> int:
    coverage, C, _ = build_coverage(cfg)
    p = _float(cfg, "p")
    if not 0.0 < p < 1.0:
        raise ConfigError("need 0 < p < 1")
    K = parse_buffer(cfg.get("K", "1"))
    cell = _solve_cell(p, K, coverage)
    knum, klabel = _k_cell(K)
    echo_cols, echo_vals = _echo_params(cfg)
    if K == math.inf and not cell[7]:
        res = eq.solve_busy_infinite(p, coverage)
        print(f"infeasible: p = {fmt(p)} exceeds the critical rate "
              f"p_c = {fmt(res.p_c)}; no steady state for K = inf", file=sys.stderr)
        return EXIT_INFEASIBLE
    if not cell[6]:
        print(f"non-convergence after {cell[8]} iterations at p={fmt(p)}, "
              f"K={klabel}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    print(f"p={fmt(p)} K={klabel}: q*={fmt(cell[0])} V={fmt(cell[1])} "
          f"throughput={fmt(cell[2])} loss={fmt(cell[3])} delay={fmt(cell[4])} "
          f"LD={fmt(cell[5])} iterations={cell[8]} converged={cell[6]}")
    columns = ["p", "K", "k_label", "q_star", "coverage", "throughput",
               "loss_prob", "delay", "ld_product", "converged", "feasible",
               "iterations"] + echo_cols
    write_csv(cfg["out"], columns, [[p, knum, klabel] + cell + echo_vals], _meta(cfg))
    return EXIT_OK


def _p_grid(cfg):
    p_min = _float(cfg, "p_min")
    p_max = _float(cfg, "p_max")
    steps = int(_float(cfg, "p_steps"))
    if not (0.0 < p_min <= p_max < 1.0) or steps < 1:
        raise ConfigError("need 0 < p_min <= p_max < 1 and p_steps >= 1")
    return np.linspace(p_min, p_max, steps)


def _parse_k_list(text):
    return [parse_buffer(tok) for tok in text.split(",") if tok.strip()]


def cmd_sweep(cfg: dict) -> int:
    coverage, C, _ = build_coverage(cfg)
    ps = _p_grid(cfg)
    Ks = _parse_k_list(cfg["K_list"])
    echo_cols, echo_vals = _echo_params(cfg)
    cells = [(K, float(p)) for K in Ks for p in ps]
    workers = int(_float(cfg, "workers"))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_solve_cell, [p for _, p in cells],
                                    [K for K, _ in cells],
                                    [coverage] * len(cells), chunksize=8))
    else:
        results = [_solve_cell(p, K, coverage) for K, p in cells]
    rows = []
    for (K, p), cell in zip(cells, results):
        knum, klabel = _k_cell(K)
        rows.append([p, knum, klabel] + cell + echo_vals)
    columns = ["p", "K", "k_label", "q_star", "coverage", "throughput",
               "loss_prob", "delay", "ld_product", "converged", "feasible",
               "iterations"] + echo_cols
    write_csv(cfg["out"], columns, rows, _meta(cfg))
    return EXIT_OK


def _one_replication(args):
    (cfg, rep) = args
    params = build_network(cfg)
    master = int(cfg["seed"])
    p = float(cfg["p"])
    traffic = TrafficParams(p=p, buffer=parse_buffer(cfg.get("K", "0")))
    mode = cfg["mode"]
    coverage = None
    if mode == "meanfield_adaptive":
        coverage = CoverageEvaluator(params).coverage
    q = float(cfg["sim_q"]) if "sim_q" in cfg else None
    scenario = geomsim.sample_scenario(params, _float(cfg, "window"),
                                       seed=master + 1000 * rep)
    stats = geomsim.run(scenario, traffic, mode, int(_float(cfg, "slots")),
                        seed=master, q=q, coverage=coverage,
                        warmup_frac=_float(cfg, "warmup_frac"))
    kpi = geomsim.estimate_kpis(stats, p)
    return [rep, master + 1000 * rep, stats.slots_total, stats.coverage_rate,
            stats.conditional_success_rate, stats.loss_count / max(stats.arrivals, 1),
            stats.mean_buffer, kpi.delay, stats.interferer_busy_fraction,
            kpi.se_coverage, kpi.se_delay]


def cmd_simulate(cfg: dict) -> int:
    params = build_network(cfg)
    p = _float(cfg, "p")
    traffic = TrafficParams(p=p, buffer=parse_buffer(cfg.get("K", "0")))
    mode = cfg["mode"]
    if mode not in geomsim.MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    if mode == "exact" and traffic.rho(params) >= 1.0:
        raise ConfigError(
            f"exact mode needs rho = p*lambda0/lambda1 < 1, got {traffic.rho(params)}")
    if mode == "meanfield_fixed" and "sim_q" not in cfg:
        raise ConfigError("meanfield_fixed needs sim_q")
    reps = int(_float(cfg, "replications"))
    workers = int(_float(cfg, "workers"))
    jobs = [(cfg, r) for r in range(reps)]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_one_replication, jobs))
    else:
        rows = [_one_replication(j) for j in jobs]
    agg = ["mean", -1, rows[0][2]] + [
        float(np.mean([r[i] for r in rows])) for i in range(3, 9)] + [
        float(np.std([r[3] for r in rows], ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
        float(np.std([r[7] for r in rows], ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0]
    columns = ["replication", "seed", "slots", "coverage_rate",
               "conditional_success_rate", "loss_prob", "mean_buffer", "delay",
               "interferer_busy_fraction", "se_coverage", "se_delay"]
    write_csv(cfg["out"], columns, rows + [agg], _meta(cfg))
    return EXIT_OK


FIGURE_IDS = (1, 2, 3, 4, 5, 6)


def cmd_figures(cfg: dict) -> int:
    fig = int(_float(cfg, "figure"))
    if fig not in FIGURE_IDS:
        raise ConfigError(f"unknown figure id {fig}; expected 1..6")
    C = _float(cfg, "C", 4.0)
    coverage = closed_coverage(C)
    meta = _meta(cfg)
    meta["figure"] = fig
    out = cfg["out"]

    if fig == 1:
        ps = np.linspace(0.01, 0.95, 95)
        rows = []
        for p in ps:
            cell = _solve_cell(float(p), 1, coverage)
            rows.append([p, cell[0], cell[2], cell[3], cell[4]])
        write_csv(out, ["p", "q_star", "throughput", "loss_prob", "delay"], rows, meta)
    elif fig == 2:
        rows = []
        for K in (0, 1, 2, 4, 8, math.inf):
            knum, klabel = _k_cell(K)
            for p in np.linspace(0.005, 0.3, 60):
                cell = _solve_cell(float(p), K, coverage)
                rows.append([knum, klabel, p, cell[0], cell[1], cell[7]])
        write_csv(out, ["K", "k_label", "p", "q_star", "coverage", "feasible"],
                  rows, meta)
    elif fig == 3:
        rows = []
        for K in (1, 2, 4, 8, math.inf):
            knum, klabel = _k_cell(K)
            for p in np.linspace(0.005, 0.3, 60):
                cell = _solve_cell(float(p), K, coverage)
                rows.append([knum, klabel, p, cell[3], cell[4], cell[5], cell[7]])
        write_csv(out, ["K", "k_label", "p", "loss_prob", "delay", "ld_product",
                        "feasible"], rows, meta)
    elif fig == 4:
        rows = []
        for p in (0.05, 0.09, 0.12, 0.15, 0.18):
            for K in range(1, 17):
                cell = _solve_cell(p, K, coverage)
                rows.append([p, K, cell[3], cell[4]])
        write_csv(out, ["p", "K", "loss_prob", "delay"], rows, meta)
    elif fig == 5:
        rows = []
        for kappa, sigma2 in ((0.0, 0.0), (0.0, 1.0), (0.005, 0.0), (0.1, 0.0),
                              (1.0, 0.0), (0.1, 1.0)):
            ev = CoverageEvaluator(_figure_params(kappa, sigma2))
            for q in np.linspace(0.01, 1.0, 100):
                rows.append([kappa, sigma2, q, ev.coverage(float(q))])
        write_csv(out, ["kappa", "sigma2", "q", "coverage"], rows, meta)
    else:
        rows = []
        for kappa in (0.0, 0.005):
            ev = CoverageEvaluator(_figure_params(kappa, 0.0))
            for p in np.linspace(0.01, 0.3, 30):
                # the balance map is monotone here, so the minimal-root
                # scan (expensive under quadrature coverage) is skipped
                cell = _solve_cell(float(p), 1, ev.coverage, check_minimal=False)
                rows.append([kappa, p, cell[2]])
        write_csv(out, ["kappa", "p", "throughput"], rows, meta)
    return EXIT_OK


def _figure_params(kappa: float, sigma2: float) -> NetworkParams:
    # mu = T = 1, delta = 2, w = 10 family used by the general-coverage plots
    return NetworkParams(lambda0=10.0, lambda1=1.0, d=2, beta=4.0, kappa=kappa,
                         mu=1.0, sigma2=sigma2, T=1.0)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="voronet",
        description="coverage / buffer-equilibrium solver and Monte Carlo "
                    "simulator for downlink Poisson-Voronoi networks")
    parser.add_argument("command", choices=["solve", "sweep", "simulate", "figures"])
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config value")
    parser.add_argument("--out", help="output CSV path ('-' for stdout)")
    parser.add_argument("--workers", type=int, help="worker process count")
    parser.add_argument("--seed", type=int, help="master RNG seed")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, args.overrides)
        if args.out is not None:
            cfg["out"] = args.out
        if args.workers is not None:
            cfg["workers"] = str(args.workers)
        if args.seed is not None:
            cfg["seed"] = str(args.seed)
        handler = {"solve": cmd_solve, "sweep": cmd_sweep,
                   "simulate": cmd_simulate, "figures": cmd_figures}[args.command]
        return handler(cfg)
    except (ConfigError, ParameterError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except eq.ConvergenceError as e:
        print(f"non-convergence: {e}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
