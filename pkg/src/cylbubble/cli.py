"""Command-line entry point: ``cylbubble <subcommand> [options]``.

Exit codes: 0 success, 1 stage or check failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, kernels
from .config import (as_dict, exponents_from_config, float_list, get_float, get_int,
                     load_config)
from .constants import build_constant_table
from .energy import Potentials, eval_I, interaction_integral
from .errors import ConfigError, CylBubbleError
from .exponents import validate_parameters
from .geometry import build_configuration, dump_csv
from .ground_state import export_profile, solve_ground_state
from .reduced import find_critical_point, minmax_estimate
from .verify import Context, format_table, run_all

OUT_DIR_ENV = "CYLBUBBLE_OUT_DIR"
DEFAULT_OUT_DIR = "cylbubble-out"


@dataclass
class RunManifest:
    command: list
    config: dict
    overrides: list
    seed: int
    versions: dict
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        self.outputs = sorted(set(self.outputs))
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def _versions() -> dict:
    return {"cylbubble": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "backend": kernels.BACKEND}


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


class Runner:
    def __init__(self, args):
        self.args = args
        self.cp = load_config(args.config, args.set or [])
        if args.seed is not None:
            self.cp.set("run", "seed", str(args.seed))
        self.seed = get_int(self.cp, "run", "seed")
        self.es = exponents_from_config(self.cp)
        out = args.out_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR
        self.out_dir = Path(out)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.workers = args.workers or os.cpu_count() or 1
        self.manifest = RunManifest(["cylbubble"] + list(args.argv), as_dict(self.cp),
                                    list(args.set or []), self.seed, _versions())
        self._gs = None
        self._table = None

    # -- shared stages
    def stage(self, name, fn, *a, **kw):
        t = time.perf_counter()
        res = fn(*a, **kw)
        self.manifest.timings[name] = round(time.perf_counter() - t, 6)
        return res

    @property
    def gs(self):
        if self._gs is None:
            self._gs = self.stage("ground_state", solve_ground_state, self.es,
                                  r_max=get_float(self.cp, "ground_state", "r_max"),
                                  tol=get_float(self.cp, "ground_state", "tol"),
                                  n_nodes=get_int(self.cp, "ground_state", "n_nodes"))
        return self._gs

    @property
    def table(self):
        if self._table is None:
            case = self.cp.get("constants", "case", fallback="").strip() or None
            self._table = self.stage("constants", build_constant_table, self.gs, self.es, case)
        return self._table

    def write(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        self.manifest.outputs.append(name)
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True,
                                           default=_json_default) + "\n")

    def write_csv(self, name: str, rows: list[dict]) -> Path:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for k, v in r.items()})
        return self.write(name, buf.getvalue())

    def vartheta(self):
        return (get_float(self.cp, "geometry", "vartheta1"),
                get_float(self.cp, "geometry", "vartheta2"))

    def configuration(self):
        s = "energy"
        return build_configuration(get_int(self.cp, s, "k"), get_float(self.cp, s, "r"),
                                   get_float(self.cp, s, "h"), get_float(self.cp, s, "Lambda"),
                                   self.es, self.cp.getboolean(s, "test_mode"))

    def finish(self) -> None:
        self.manifest.write(self.out_dir)


# ------------------------------------------------------------------ commands

def cmd_validate(run: Runner) -> int:
    rep = validate_parameters(run.es)
    text = rep.to_csv()
    run.write("validate.csv", text)
    print(text, end="")
    if not rep.passed:
        print("failed: " + ", ".join(c.name for c in rep.failures()), file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_ground_state(run: Runner) -> int:
    gs = run.gs
    export_profile(gs, run.out_dir / "profile.txt")
    run.manifest.outputs.append("profile.txt")
    summary = {"N": gs.N, "p": gs.p, "q": gs.q, "shoot_a": gs.shoot_a, "b_u": gs.b_u,
               "b_v": gs.b_v, "diagnostics": gs.diagnostics}
    run.write_json("ground_state.json", summary)
    print(json.dumps(summary, indent=2, default=_json_default))
    return 0


def cmd_constants(run: Runner) -> int:
    d = run.table.to_dict()
    run.write_json("constants.json", d)
    print(json.dumps(d, indent=2, default=_json_default))
    return 0


def cmd_geometry(run: Runner) -> int:
    text = dump_csv(run.configuration())
    run.write("geometry.csv", text)
    print(text, end="")
    return 0


def cmd_energy(run: Runner) -> int:
    cfg = run.configuration()
    pot = Potentials.from_exponents(run.es)
    method = run.cp.get("energy", "method")
    n = get_int(run.cp, "energy", "n_samples")
    e = run.stage("energy", eval_I, cfg, pot, run.gs, method, n, run.seed)
    d = e.to_dict()
    run.write_json("energy.json", d)
    row = {"k": cfg.k, "r": cfg.r, "h": cfg.h, "Lambda": cfg.Lambda, "method": method,
           "total": e.total, **{t: getattr(e, t) for t in e.TERMS}, "stderr": e.stderr}
    run.write_csv("energy.csv", [row])
    print(json.dumps(d, indent=2, default=_json_default))
    return 1 if e.details.get("degenerate") else 0


def _far_field_row(args):
    gs, d, L, B0 = args
    J = interaction_integral(gs, d, L)
    lead = B0 / (L * d) ** (gs.N - 2)
    return {"d": d, "Lambda": L, "interaction": J.value, "quad_error": J.error,
            "leading": lead, "abs_error": abs(J.value - lead)}


def _pool_map(run: Runner, fn, items):
    if run.workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(run.workers, len(items))) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def cmd_lemma_a1(run: Runner) -> int:
    ds = float_list(run.cp, "lemma_a1", "distances")
    L = get_float(run.cp, "lemma_a1", "Lambda")
    gs, B0 = run.gs, run.table.B0
    rows = run.stage("lemma_a1", _pool_map, run, _far_field_row, [(gs, d, L, B0) for d in ds])
    slope = float(np.polyfit(np.log(ds), np.log([r["abs_error"] for r in rows]), 1)[0])
    for r in rows:
        r["fitted_slope"] = slope
    path = run.write_csv("lemma_a1.csv", rows)
    print(path.read_text(), end="")
    return 0


def _reduced_row(args):
    k, table, es, v1, v2 = args
    row = {"k": k}
    try:
        cp = find_critical_point(k, table, es, v2)
        row.update({"r_star": cp.r, "h_star": cp.h, "Lambda_star": cp.Lambda,
                    "interior": cp.interior, "residual": cp.residual,
                    "margin_r": cp.diagnostics["margin_r"], "margin_h": cp.diagnostics["margin_h"],
                    "margin_Lambda": cp.diagnostics["margin_Lambda"]})
    except CylBubbleError as exc:
        row.update({"r_star": math.nan, "h_star": math.nan, "Lambda_star": math.nan,
                    "interior": False, "residual": math.nan, "margin_r": math.nan,
                    "margin_h": math.nan, "margin_Lambda": math.nan, "error": str(exc)})
    mm = minmax_estimate(k, table, es, vartheta1=v1, vartheta2=v2)
    row.update({"c": mm["c_estimate"], "t1": mm["t1"], "t2": mm["t2"], "c_shift": mm["c_shift"],
                "t1_shift": mm["t1_shift"], "t2_shift": mm["t2_shift"]})
    row.setdefault("error", "")
    return row


def cmd_reduced(run: Runner) -> int:
    v1, v2 = run.vartheta()
    if run.args.action == "find":
        ks = [run.args.k] if run.args.k else [int(v) for v in float_list(run.cp, "reduced", "k_values")][:1]
    else:
        ks = [int(v) for v in float_list(run.cp, "reduced", "k_values")]
    table = run.table
    rows = run.stage("reduced", _pool_map, run, _reduced_row,
                     [(k, table, run.es, v1, v2) for k in ks])
    path = run.write_csv(f"reduced_{run.args.action}.csv", rows)
    print(path.read_text(), end="")
    return 0 if all(r["interior"] for r in rows) else 1


def cmd_verify_all(run: Runner) -> int:
    v1, v2 = run.vartheta()
    ctx = Context(run.es, v1, v2, gs=run.gs, table=run.table)
    crit = [int(c) for c in run.args.criteria.split(",")] if run.args.criteria else None
    results = run.stage("verify_all", run_all, ctx, crit)
    table = format_table(results)
    run.write("verify.txt", table + "\n")
    run.write_json("verify.json", [asdict(r) for r in results])
    print(table)
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"validate": cmd_validate, "ground-state": cmd_ground_state,
            "constants": cmd_constants, "geometry": cmd_geometry, "energy": cmd_energy,
            "lemma-a1": cmd_lemma_a1, "reduced": cmd_reduced, "verify-all": cmd_verify_all}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file layered over the shipped defaults")
    common.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or "
                                          f"./{DEFAULT_OUT_DIR})")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="Monte-Carlo seed")
    common.add_argument("--workers", type=int, help="worker processes (default: all cores)")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config value (repeatable)")
    p = argparse.ArgumentParser(prog="cylbubble", parents=[common])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="parameter constraint margins (CSV)")
    sub.add_parser("ground-state", parents=[common], help="solve and export the ground state")
    sub.add_parser("constants", parents=[common], help="expansion constants (JSON)")
    g = sub.add_parser("geometry", parents=[common], help="bubble centers and distances")
    g.add_argument("action", choices=["dump"])
    e = sub.add_parser("energy", parents=[common], help="evaluate I(W1, W2)")
    e.add_argument("action", choices=["eval"])
    sub.add_parser("lemma-a1", parents=[common], help="interaction integrals vs leading term")
    r = sub.add_parser("reduced", parents=[common], help="reduced-energy critical points")
    r.add_argument("action", choices=["find", "sweep"])
    r.add_argument("--k", type=int, help="bubble count for 'find'")
    v = sub.add_parser("verify-all", parents=[common], help="run the acceptance checks")
    v.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,5")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    args.argv = argv
    try:
        run = Runner(args)
        code = COMMANDS[args.command](run)
        run.finish()
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CylBubbleError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
