"""Command-line experiment runner.

Every subcommand is seeded and writes CSV whose leading ``#`` lines echo the
effective configuration.  Settings come from flags, then an optional flat
``key=value`` file given with ``--config``, then built-in defaults.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

from weldroute import __version__
from weldroute.classical.embedding import column_uniformity, estimate_game3, resolve_strategy
from weldroute.classical.flooding import run_flooding_baseline
from weldroute.classical.trees import TREE_BUILDERS
from weldroute.csvio import write_csv
from weldroute.distsim import run_traversal, traversal_plan
from weldroute.errors import WeldRouteError
from weldroute.groverwalk import hitting_range, sweep_T
from weldroute.rng import stream
from weldroute.weldedgraph import MAX_N, build_instance, num_edges_for, serialize

DEFAULTS: dict[str, object] = {
    "n_range": "4",
    "t": "8",
    "b": 16,
    "epsilon": 0.1,
    "trials": 10_000,
    "seed": 1,
    "seeds": 1,
    "backend": "fast",
    "log_base_range": "2",
    "log_base_eps": "e",
    "strategy": "paths",
    "tree_t": 4,
    "lb_trials": 10_000,
    "threads": 1,
    "summary": False,
    "out": None,
}

# commands that override a generic default
COMMAND_DEFAULTS: dict[str, dict[str, object]] = {
    "walk-sweep": {"n_range": "2..10"},
    "uniformity": {"n_range": "3..4", "trials": 100_000},
    "gap-table": {"n_range": "4..10", "trials": 200, "lb_trials": 2_000},
}

# keys echoed into each command's CSV header
ECHO: dict[str, tuple[str, ...]] = {
    "walk-sweep": ("n_range", "seed", "seeds", "log_base_range"),
    "traversal": ("n_range", "b", "epsilon", "trials", "seed", "backend", "log_base_range", "log_base_eps", "summary"),
    "flood": ("n_range", "b", "seed"),
    "lower-bound": ("n_range", "t", "strategy", "trials", "seed"),
    "uniformity": ("n_range", "trials", "seed", "tree_t"),
    "gap-table": (
        "n_range", "b", "epsilon", "trials", "lb_trials", "t", "seed", "backend", "log_base_range", "log_base_eps",
    ),
}

_INT_KEYS = {"b", "trials", "seed", "seeds", "tree_t", "lb_trials", "threads"}
_FLOAT_KEYS = {"epsilon"}
_BOOL_KEYS = {"summary"}
_LOG_BASES = ("2", "e")


class UsageError(Exception):
    pass


def parse_n_range(spec: str) -> list[int]:
    """``"4"`` or ``"A..B"`` (inclusive; empty when ``A > B``)."""
    spec = str(spec).strip()
    try:
        if ".." in spec:
            a, b = spec.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(spec)
    except ValueError:
        raise UsageError(f"bad n range {spec!r}; use N or A..B") from None
    ns = list(range(lo, hi + 1))
    for n in ns:
        if not 1 <= n <= MAX_N:
            raise UsageError(f"n must lie in 1..{MAX_N}, got {n}")
    return ns


def parse_int_list(spec) -> list[int]:
    try:
        out = [int(x) for x in str(spec).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {spec!r}") from None
    if not out or any(x < 0 for x in out):
        raise UsageError(f"need non-negative integers, got {spec!r}")
    return out


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key = key.strip().replace("-", "_")
        if key == "n":
            key = "n_range"
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = val.strip()
    return out


def _coerce(key: str, val):
    if val is None:
        return None
    try:
        if key in _INT_KEYS:
            return int(val)
        if key in _FLOAT_KEYS:
            return float(val)
    except ValueError:
        raise UsageError(f"bad value for {key}: {val!r}") from None
    if key in _BOOL_KEYS:
        if isinstance(val, bool):
            return val
        return str(val).strip().lower() in ("1", "true", "yes", "on")
    return val


def effective_config(command: str, cli: dict[str, object]) -> dict[str, object]:
    cfg = dict(DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(command, {}))
    if cli.get("config"):
        cfg.update(read_config_file(str(cli["config"])))
    cfg.update({k: v for k, v in cli.items() if k in DEFAULTS and v is not None})
    cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    if cfg["b"] < 1:
        raise UsageError("--b must be >= 1")
    if cfg["trials"] < 0 or cfg["lb_trials"] < 0:
        raise UsageError("trial counts must be >= 0")
    if cfg["seeds"] < 0:
        raise UsageError("--seeds must be >= 0")
    if cfg["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    if not 0 < cfg["epsilon"] < 1:
        raise UsageError("--epsilon must lie in (0, 1)")
    for key in ("log_base_range", "log_base_eps"):
        if str(cfg[key]) not in _LOG_BASES:
            raise UsageError(f"{key} must be one of {_LOG_BASES}")
    if cfg["backend"] not in ("fast", "register"):
        raise UsageError("--backend must be fast or register")
    parse_n_range(cfg["n_range"])
    return cfg


def _pool_map(fn: Callable, jobs: list, threads: int) -> list:
    # order of results follows order of jobs
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _echo(command: str, cfg: dict) -> dict:
    out = {"command": command, "version": __version__}
    out.update({k: cfg[k] for k in ECHO[command]})
    return out


# --- gen-graph -------------------------------------------------------------

def cmd_gen_graph(cfg: dict, stdout, stderr) -> int:
    ns = parse_n_range(cfg["n_range"])
    if len(ns) != 1:
        raise UsageError("gen-graph needs a single --n")
    n = ns[0]
    inst = build_instance(n, cfg["seed"])
    data = serialize(inst)
    if cfg["out"]:
        try:
            with open(cfg["out"], "wb") as fh:
                fh.write(data)
        except OSError as e:
            raise WeldRouteError(f"cannot write {cfg['out']}: {e.strerror}") from None
        report = stdout
    else:
        stdout.write(data.decode("ascii"))
        report = stderr
    report.write(f"n={n} vertices={inst.num_vertices} edges={num_edges_for(n)}\n")
    return 0


# --- walk-sweep ------------------------------------------------------------

def walk_sweep_rows(cfg: dict):
    base = cfg["log_base_range"]
    for n in parse_n_range(cfg["n_range"]):
        lo, hi = hitting_range(n, base)
        if lo > hi:
            continue
        for i in range(cfg["seeds"]):
            seed = cfg["seed"] + i
            sw = sweep_T(build_instance(n, seed), lo, hi)
            for T, p in sw.rows():
                yield n, seed, T, p, sw.threshold, p > sw.threshold, sw.crossed


WALK_HEADER = ("n", "seed", "T", "p", "threshold", "above", "crossed")


# --- traversal -------------------------------------------------------------

def _traversal_trial(job):
    n, seed, eps, b, backend, rbase, ebase = job
    inst = build_instance(n, seed)
    out = run_traversal(inst, n, eps, b, stream(seed, "traversal", n), backend, rbase, ebase)
    return out.success, out.calls, out.rounds, out.total_cost, out.final_T


def traversal_results(cfg: dict, n: int, trials: int) -> list[tuple]:
    jobs = [
        (n, cfg["seed"] + i, cfg["epsilon"], cfg["b"], cfg["backend"], cfg["log_base_range"], cfg["log_base_eps"])
        for i in range(trials)
    ]
    return _pool_map(_traversal_trial, jobs, cfg["threads"])


def worst_case_cost(n: int, eps: float, b: int, rbase="2", ebase="e") -> int:
    Ts, reps = traversal_plan(n, eps, rbase, ebase)
    return (b + 1) * sum(Ts) * reps


TRAVERSAL_HEADER = ("n", "trial", "seed", "success", "calls", "rounds", "qubits", "final_T")
TRAVERSAL_SUMMARY_HEADER = (
    "n", "trials", "successes", "success_rate", "stderr", "mean_qubits", "max_qubits", "worst_case_qubits",
)


def traversal_rows(cfg: dict):
    for n in parse_n_range(cfg["n_range"]):
        res = traversal_results(cfg, n, cfg["trials"])
        if not cfg["summary"]:
            for i, (ok, calls, rounds, cost, T) in enumerate(res):
                yield n, i, cfg["seed"] + i, ok, calls, rounds, cost, T
            continue
        if not res:
            continue
        k = len(res)
        wins = sum(r[0] for r in res)
        rate = wins / k
        costs = [r[3] for r in res]
        yield (
            n, k, wins, rate, math.sqrt(rate * (1 - rate) / k), float(np.mean(costs)), max(costs),
            worst_case_cost(n, cfg["epsilon"], cfg["b"], cfg["log_base_range"], cfg["log_base_eps"]),
        )


# --- flood -----------------------------------------------------------------

FLOOD_HEADER = ("n", "b", "bits")


def flood_rows(cfg: dict):
    for n in parse_n_range(cfg["n_range"]):
        yield n, cfg["b"], run_flooding_baseline(build_instance(n, cfg["seed"]), cfg["b"]).bits_sent


# --- lower-bound -----------------------------------------------------------

GAME3_HEADER = ("n", "t", "strategy", "trials", "wins", "rate", "stderr")


def lower_bound_rows(cfg: dict):
    ts = parse_int_list(cfg["t"])
    names = [s.strip() for s in str(cfg["strategy"]).split(",") if s.strip()]
    for name in names:
        try:
            resolve_strategy(name)
        except ValueError as e:
            raise UsageError(str(e)) from None
    if cfg["trials"] == 0:
        return
    for n in parse_n_range(cfg["n_range"]):
        for t in ts:
            for name in names:
                est = estimate_game3(n, t, name, cfg["trials"], stream(cfg["seed"], "game3", n, t, name), workers=cfg["threads"])
                yield n, t, name, est.trials, est.wins, est.rate, est.stderr


# --- uniformity ------------------------------------------------------------

UNIFORMITY_HEADER = ("n", "tree", "node", "k", "chi2", "dof", "pvalue")


def uniformity_rows(cfg: dict):
    if cfg["trials"] == 0:
        return
    t = cfg["tree_t"]
    for n in parse_n_range(cfg["n_range"]):
        inst = build_instance(n, cfg["seed"])
        for name, builder in TREE_BUILDERS.items():
            tree = builder(t, 3)
            rng = stream(cfg["seed"], "uniformity", n, name)
            for row in column_uniformity(inst, tree, tree.t, cfg["trials"], rng, tree_name=name):
                yield row.n, row.tree, row.node, row.k, row.chi2, row.dof, row.pvalue


# --- gap-table -------------------------------------------------------------

GAP_HEADER = (
    "n", "b", "traversal_trials", "traversal_success_rate", "quantum_qubits_mean", "flood_bits",
    "game3_t", "game3_trials", "game3_rate", "game3_stderr",
)


def gap_rows(cfg: dict):
    t = parse_int_list(cfg["t"])[0]
    for n in parse_n_range(cfg["n_range"]):
        res = traversal_results(cfg, n, cfg["trials"])
        rate = sum(r[0] for r in res) / len(res) if res else None
        mean_q = float(np.mean([r[3] for r in res])) if res else None
        bits = run_flooding_baseline(build_instance(n, cfg["seed"]), cfg["b"]).bits_sent
        if cfg["lb_trials"]:
            est = estimate_game3(n, t, "paths", cfg["lb_trials"], stream(cfg["seed"], "game3", n, t, "paths"), workers=cfg["threads"])
            g_rate, g_err = est.rate, est.stderr
        else:
            g_rate = g_err = None
        yield n, cfg["b"], len(res), rate, mean_q, bits, t, cfg["lb_trials"], g_rate, g_err


TABLES = {
    "walk-sweep": (WALK_HEADER, walk_sweep_rows),
    "traversal": (None, traversal_rows),
    "flood": (FLOOD_HEADER, flood_rows),
    "lower-bound": (GAME3_HEADER, lower_bound_rows),
    "uniformity": (UNIFORMITY_HEADER, uniformity_rows),
    "gap-table": (GAP_HEADER, gap_rows),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # defaults stay None so that config-file values are not masked
    common.add_argument("--config", metavar="FILE", help="flat key=value file (flags win over it)")
    g = common.add_mutually_exclusive_group()
    g.add_argument("--n", dest="n_range", metavar="N", help="welded-trees height")
    g.add_argument("--n-range", dest="n_range", metavar="A..B", help="inclusive range of heights")
    common.add_argument("--t", metavar="T[,T...]", help="game length(s)")
    common.add_argument("--b", type=int, help="payload bits (default 16)")
    common.add_argument("--epsilon", type=float, help="Traversal failure bound (default 0.1)")
    common.add_argument("--trials", type=int, help="trials per point (default 10000)")
    common.add_argument("--seed", type=int, help="base seed (default 1)")
    common.add_argument("--seeds", type=int, help="walk-sweep: number of instance seeds")
    common.add_argument("--backend", choices=("fast", "register"))
    common.add_argument("--log-base-range", choices=_LOG_BASES, help="log base for the T range (default 2)")
    common.add_argument("--log-base-eps", choices=_LOG_BASES, help="log base in the repetition count (default e)")
    common.add_argument("--strategy", help="lower-bound: tree strategies, comma separated")
    common.add_argument("--tree-t", type=int, help="uniformity: tree size")
    common.add_argument("--lb-trials", type=int, help="gap-table: Game 3 trials per n")
    common.add_argument("--summary", action="store_const", const=True, help="traversal: one row per n")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--threads", type=int, metavar="K", help="worker processes")

    p = argparse.ArgumentParser(prog="weldroute", description="Welded-trees routing experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "gen-graph": "write a random welded-trees instance",
        "walk-sweep": "hitting probability p(T) over the T range",
        "traversal": "run Traversal trials",
        "flood": "flooding baseline bit counts",
        "lower-bound": "Monte Carlo tree-embedding game",
        "uniformity": "column-uniformity chi-square tests",
        "gap-table": "quantum vs classical cost per n",
    }
    for name, h in helps.items():
        sub.add_parser(name, parents=[common], help=h, description=h)
    return p


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    cli = vars(args)
    command = cli.pop("command")
    try:
        cfg = effective_config(command, cli)
        if command == "gen-graph":
            return cmd_gen_graph(cfg, stdout, stderr)
        header, rows = TABLES[command]
        if header is None:
            header = TRAVERSAL_SUMMARY_HEADER if cfg["summary"] else TRAVERSAL_HEADER
        if cfg["out"]:
            with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
                write_csv(fh, _echo(command, cfg), header, rows(cfg))
        else:
            write_csv(stdout, _echo(command, cfg), header, rows(cfg))
    except UsageError as e:
        parser.print_usage(stderr)
        stderr.write(f"weldroute: error: {e}\n")
        return 2
    except (WeldRouteError, OSError) as e:
        stderr.write(f"weldroute: error: {e}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
