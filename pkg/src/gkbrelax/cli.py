"""Command-line experiment runner: ``gkbrelax {solve,compare,generate}``.

Configuration comes from an optional JSON file (``--config``) whose keys
mirror the long flag names with dashes replaced by underscores; flags given
on the command line override the file.
"""

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import GkbError
from .gkb import GkbOptions, gkb_solve
from .inner import make_inner_solver
from .linalg import DENSE_CAP
from .mmio import mm_write
from .problems import (GENERATORS, dense_solve, gen_mac_stokes_channel, gen_mixed_poisson_rt0,
                       gen_random_saddle, load_system, save_system)
from .relaxation import KINDS, RelaxPolicy, simoncini_constant
from .transforms import augment, deflate

DEFAULTS = {
    "problem": "mixed-poisson",
    "load": None,
    "n": 16,
    "m": None,
    "nx": None,
    "ny": None,
    "length": 20.0,
    "cond": 1e4,
    "seed": 0,
    "eta": None,
    "k_defl": 0,
    "inner": "cg",
    "inner_maxit": None,
    "outer_tol": 1e-7,
    "tau": 1e-8,
    "delay": 3,
    "maxit": None,
    "cap": 0.1,
    "policy": ["constant"],
    "c": 0.05,
    "epsilon": None,
    "m_star": 100,
    "l": None,
    "reference": False,
    "log": None,
    "out": None,
}

SAVINGS_HEADER = ["policy", "cum_inner", "savings_percent", "converged", "final_lower_bound"]


class ConfigError(GkbError):
    pass


# -- configuration -----------------------------------------------------------

def _policy_list(value):
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    names = [v.strip().lower() for v in value]
    bad = [v for v in names if v not in KINDS]
    if bad:
        raise ConfigError(f"policy: unknown {', '.join(bad)}; valid: {', '.join(KINDS)}")
    if not names:
        raise ConfigError("policy: at least one policy is required")
    return names


def load_config(args):
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if "policies" in data:
            data["policy"] = data.pop("policies")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"{args.config}: unknown field(s) {', '.join(unknown)}")
        cfg.update(data)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            cfg[key] = value
    cfg["policy"] = _policy_list(cfg["policy"])
    if cfg["epsilon"] is None:
        cfg["epsilon"] = cfg["outer_tol"]
    return cfg


# -- problem construction ----------------------------------------------------

def build_problem(cfg):
    """Return (system, w_ref or None, description)."""
    if cfg["load"]:
        path = cfg["load"]
        if not os.path.isdir(path):
            raise ConfigError(f"load: no such directory: {path}")
        return load_system(path), None, f"loaded from {path}"
    name = cfg["problem"]
    if name not in GENERATORS:
        raise ConfigError(f"problem: unknown generator {name!r}; valid: {', '.join(sorted(GENERATORS))}")
    if name == "mixed-poisson":
        prob = gen_mixed_poisson_rt0(int(cfg["n"]), int(cfg["seed"]))
    elif name == "mac-stokes":
        length = float(cfg["length"])
        ny = int(cfg["ny"] or cfg["n"])
        nx = int(cfg["nx"] or max(4, round((length + 1.0) * ny / 2.0)))
        prob = gen_mac_stokes_channel(nx, ny, length)
    else:
        n = int(cfg["n"])
        m = int(cfg["m"] or (5 * n) // 2)
        prob = gen_random_saddle(m, n, float(cfg["cond"]), int(cfg["seed"]))
    return prob.system, prob.u_exact, prob.description


def prepare(cfg):
    """System after the configured transforms, plus deflation basis and reference."""
    system, w_ref, desc = build_problem(cfg)
    if cfg["eta"]:
        system = augment(system, float(cfg["eta"]))
        desc += f", AL eta={float(cfg['eta']):g}"
    if cfg["reference"]:
        w_ref = dense_solve(system)[0]
    basis = None
    if int(cfg["k_defl"]) > 0:
        basis, _ = deflate(system, int(cfg["k_defl"]))
        desc += f", {basis.count} deflated directions"
    return system, basis, w_ref, desc


def make_policy(kind, cfg, system, m_star=None):
    l = 1.0
    if kind == "simoncini":
        if cfg["l"] is not None:
            l = float(cfg["l"])
        else:
            l = simoncini_constant(system, int(m_star))[0]
    return RelaxPolicy(kind, tau=float(cfg["tau"]), cap=float(cfg["cap"]), c=float(cfg["c"]),
                       epsilon=float(cfg["epsilon"]), l=l)


def run_one(kind, cfg, system, basis, w_ref, m_star=None):
    options = GkbOptions(outer_tol=float(cfg["outer_tol"]), delay=int(cfg["delay"]),
                         maxit=None if cfg["maxit"] is None else int(cfg["maxit"]),
                         tau=float(cfg["tau"]), tol_cap=float(cfg["cap"]),
                         inner_maxit=cfg["inner_maxit"])
    inner = make_inner_solver(cfg["inner"], system.M, maxit=cfg["inner_maxit"], cap=DENSE_CAP)
    policy = make_policy(kind, cfg, system, m_star)
    return gkb_solve(system, options, policy, inner, w_star=w_ref, deflation=basis)


# -- savings table -----------------------------------------------------------

def savings_percent(cum_inner, cum_inner_constant):
    return 100.0 * (1.0 - cum_inner / cum_inner_constant)


@dataclass
class SavingsRow:
    policy: str
    cum_inner: int
    converged: bool
    final_lower_bound: float | None
    savings_percent: float | None = None


@dataclass
class SavingsTable:
    rows: list = field(default_factory=list)

    @classmethod
    def from_totals(cls, totals, converged=None, lower_bounds=None):
        """Build from ``{policy: cum_inner}``; the 'constant' entry is the baseline."""
        converged = converged or {}
        lower_bounds = lower_bounds or {}
        base = totals.get("constant")
        if base is None:
            raise ValueError("the savings table needs a 'constant' entry")
        table = cls()
        for name, cum in totals.items():
            ok = converged.get(name, True)
            pct = savings_percent(cum, base) if ok else None
            table.rows.append(SavingsRow(name, int(cum), ok, lower_bounds.get(name), pct))
        return table

    def savings(self, name):
        for row in self.rows:
            if row.policy == name:
                return row.savings_percent
        raise KeyError(name)

    def _cells(self, row):
        pct = "-" if row.savings_percent is None else f"{row.savings_percent:.2f}"
        lb = "" if row.final_lower_bound is None else repr(float(row.final_lower_bound))
        return [row.policy, str(row.cum_inner), pct, "true" if row.converged else "false", lb]

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SAVINGS_HEADER)
        for row in self.rows:
            writer.writerow(self._cells(row))

    def format(self):
        cells = [SAVINGS_HEADER] + [self._cells(r) for r in self.rows]
        widths = [max(len(c[i]) for c in cells) for i in range(len(SAVINGS_HEADER))]
        return "\n".join("  ".join(c[i].ljust(widths[i]) for i in range(len(c))).rstrip() for c in cells)


# -- commands ----------------------------------------------------------------

def _summary(kind, result, elapsed):
    lb = result.log.final_lower_bound
    return (f"policy={kind} status={result.status} outer_iterations={result.log.outer_iterations} "
            f"cum_inner={result.cum_inner} final_lower_bound={lb:.3e} wall_time={elapsed:.3f}s")


def cmd_solve(cfg, out=None):
    out = out or sys.stdout
    system, basis, w_ref, desc = prepare(cfg)
    kind = cfg["policy"][0]
    print(f"# {desc}", file=out)
    t0 = time.perf_counter()
    m_star = cfg["m_star"] if cfg["m_star"] != "auto" else 100
    result = run_one(kind, cfg, system, basis, w_ref, m_star)
    elapsed = time.perf_counter() - t0
    log_path = cfg["log"] or "run_log.csv"
    result.log.to_csv(log_path)
    print(_summary(kind, result, elapsed), file=out)
    print(f"# log written to {log_path}", file=out)
    return 0 if result.converged else 2


def cmd_compare(cfg, out=None):
    out = out or sys.stdout
    kinds = list(cfg["policy"])
    if "constant" not in kinds:
        kinds.insert(0, "constant")
    if len(kinds) < 2:
        raise ConfigError("policy: compare needs at least two policies")
    system, basis, w_ref, desc = prepare(cfg)
    print(f"# {desc}", file=out)

    results = {}
    m_star = cfg["m_star"]
    order = sorted(kinds, key=lambda k: k != "constant")  # the baseline fixes m_star=auto
    for kind in order:
        if kind == "simoncini" and m_star == "auto":
            base = results.get("constant")
            m_star = base.log.outer_iterations if base is not None and base.log.outer_iterations else 100
        t0 = time.perf_counter()
        try:
            results[kind] = run_one(kind, cfg, system, basis, w_ref, m_star)
            print(_summary(kind, results[kind], time.perf_counter() - t0), file=out)
        except GkbError as exc:
            results[kind] = None
            print(f"policy={kind} status=error message={exc}", file=out)

    if results.get("constant") is None:
        raise GkbError("the constant baseline run failed; no savings table")
    totals = {k: results[k].cum_inner for k in kinds if results[k] is not None}
    conv = {k: results[k].converged for k in totals}
    lbs = {k: results[k].log.final_lower_bound for k in totals}
    table = SavingsTable.from_totals(totals, conv, lbs)
    for k in kinds:
        if results[k] is None:
            table.rows.append(SavingsRow(k, 0, False, None, None))
    print(table.format(), file=out)

    out_path = cfg["out"] or "savings.csv"
    with open(out_path, "w", newline="") as fh:
        table.write_csv(fh)
    if cfg["log"]:
        os.makedirs(cfg["log"], exist_ok=True)
        for k in kinds:
            if results[k] is not None:
                results[k].log.to_csv(os.path.join(cfg["log"], f"{k}.csv"))
    print(f"# savings table written to {out_path}", file=out)
    return 0 if all(r is not None and r.converged for r in results.values()) else 2


def cmd_generate(cfg, out=None):
    out = out or sys.stdout
    if cfg["load"]:
        raise ConfigError("load: generate creates problems; drop --load")
    name = cfg["problem"]
    if name not in GENERATORS:
        raise ConfigError(f"problem: unknown generator {name!r}; valid: {', '.join(sorted(GENERATORS))}")
    system, w_ref, desc = build_problem(cfg)
    target = cfg["out"] or f"{name}-system"
    save_system(system, target)
    if w_ref is not None:
        mm_write(os.path.join(target, "w_exact.mtx"), w_ref)
    print(f"# {desc}", file=out)
    print(f"# wrote m={system.m} n={system.n} eta={system.eta:g} to {target}", file=out)
    return 0


COMMANDS = {"solve": cmd_solve, "compare": cmd_compare, "generate": cmd_generate}


def build_parser():
    parser = argparse.ArgumentParser(prog="gkbrelax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--problem", help=f"generator: {', '.join(sorted(GENERATORS))}")
        p.add_argument("--load", help="directory with M.mtx, A.mtx, g.mtx, r.mtx, meta.txt")
        p.add_argument("--n", type=int, help="grid size (mixed-poisson), cells across (mac-stokes), constraints (random)")
        p.add_argument("--m", type=int, help="rows of A for the random generator")
        p.add_argument("--nx", type=int, help="cells along the channel (mac-stokes)")
        p.add_argument("--ny", type=int, help="cells across the channel (mac-stokes)")
        p.add_argument("--length", type=float, help="channel length L (mac-stokes)")
        p.add_argument("--cond", type=float, help="condition number of M (random)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path")
        if name == "generate":
            continue
        p.add_argument("--eta", type=float, help="augmented Lagrangian parameter")
        p.add_argument("--k-defl", dest="k_defl", type=int, help="number of deflated Schur eigendirections")
        p.add_argument("--inner", choices=["cg", "exact"])
        p.add_argument("--inner-maxit", dest="inner_maxit", type=int)
        p.add_argument("--policy", help=f"comma-separated list of: {', '.join(KINDS)}")
        p.add_argument("--tau", type=float, help="base inner tolerance")
        p.add_argument("--c", type=float, help="parameter of the optimal policy")
        p.add_argument("--epsilon", type=float, help="outer target for bouras/simoncini (default: outer tol)")
        p.add_argument("--m-star", dest="m_star", type=_m_star, help="outer iteration budget for simoncini, or 'auto'")
        p.add_argument("--l", type=float, help="simoncini constant (skips the dense computation)")
        p.add_argument("--cap", type=float, help="largest inner tolerance")
        p.add_argument("--outer-tol", dest="outer_tol", type=float)
        p.add_argument("--delay", type=int)
        p.add_argument("--maxit", type=int)
        p.add_argument("--reference", action="store_true", help="dense reference solve for the true-error column")
        p.add_argument("--log", help="RunLog CSV (solve) or directory of per-policy logs (compare)")
    return parser


def _m_star(text):
    if text == "auto":
        return text
    return int(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (GkbError, OSError, ValueError) as exc:
        print(f"gkbrelax {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
