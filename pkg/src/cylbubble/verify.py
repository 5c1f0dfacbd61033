"""Acceptance checks: one function per criterion, each returning a CheckResult."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .constants import ConstantTable, b1_partial, build_constant_table, h_star
from .energy import (Potentials, eval_I, interaction_integral, nonlinear_remainder,
                     norm_sample_points, residual_norm, weight, weighted_norm)
from .errors import CylBubbleError
from .exponents import ExponentSet, default_exponents, residual_rate_exponent
from .geometry import DEFAULT_VARTHETA1, DEFAULT_VARTHETA2, build_configuration
from .ground_state import GroundStateProfile, moment, solve_ground_state
from .reduced import (F_expansion, SkBox, boundary_checks, dF_dh, dF_dLambda,
                      find_critical_point, minmax_estimate)


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.criterion:2d} [{status}] {self.name}: {self.summary()}"

    def summary(self) -> str:
        parts = []
        for k, v in self.detail.items():
            if isinstance(v, float):
                parts.append(f"{k}={v:.4g}")
            elif isinstance(v, (int, bool, str)):
                parts.append(f"{k}={v}")
        return ", ".join(parts)


class Context:
    """Lazily built shared inputs (ground state, constants) for the checks."""

    def __init__(self, es: ExponentSet | None = None, vartheta1: float = DEFAULT_VARTHETA1,
                 vartheta2: float = DEFAULT_VARTHETA2, gs: GroundStateProfile | None = None,
                 table: ConstantTable | None = None):
        self.es = es or default_exponents()
        self.vartheta1 = vartheta1
        self.vartheta2 = vartheta2
        self._gs = gs
        self._table = table

    @property
    def gs(self) -> GroundStateProfile:
        if self._gs is None:
            self._gs = solve_ground_state(self.es)
        return self._gs

    @property
    def table(self) -> ConstantTable:
        if self._table is None:
            self._table = build_constant_table(self.gs, self.es)
        return self._table


def _timed(fn):
    def wrapper(*a, **kw):
        t = time.perf_counter()
        res = fn(*a, **kw)
        res.seconds = time.perf_counter() - t
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def check_scalar_reduction(ctx: Context | None = None) -> CheckResult:
    """p = q = 7/3, N = 5: profile vs (1 + r^2/15)^(-3/2) on [0, 100], within 10 s."""
    t = time.perf_counter()
    es = ExponentSet(N=5, p=7 / 3, q=7 / 3)
    gs = solve_ground_state(es)
    elapsed = time.perf_counter() - t
    r = np.linspace(0.0, 100.0, 4001)
    exact = (1 + r * r / 15) ** -1.5
    err = max(np.max(np.abs(gs.U(r) / exact - 1)), np.max(np.abs(gs.V(r) / exact - 1)))
    return CheckResult(1, "scalar reduction", bool(err <= 1e-6 and elapsed <= 10.0),
                       {"max_rel_err": float(err), "solve_s": elapsed})


@_timed
def check_ibp_identity(ctx: Context) -> CheckResult:
    gs = ctx.gs
    pv = moment(gs, "V", gs.p + 1)
    pu = moment(gs, "U", gs.q + 1)
    rel = abs(pv - pu) / pu
    return CheckResult(2, "integration-by-parts identity", bool(rel <= 1e-6), {"rel_diff": rel})


@_timed
def check_hyperbola_identity(ctx: Context) -> CheckResult:
    gs, tab = ctx.gs, ctx.table
    other = 4.0 / gs.N * moment(gs, "V", gs.p + 1)
    rel = abs(tab.A1 - other) / tab.A1
    return CheckResult(3, "hyperbola identity for A1", bool(rel <= 1e-8), {"rel_diff": rel})


@_timed
def check_far_field_rate(ctx: Context, distances=(10.0, 20.0, 40.0, 80.0),
                        Lambda: float = 1.0) -> CheckResult:
    """Log-log slope of |J(d) - B0 (Lambda d)^-(N-2)| must be -(N-1) +- 0.5."""
    gs, tab = ctx.gs, ctx.table
    N = gs.N
    t = time.perf_counter()
    d = np.asarray(distances, dtype=float)
    vals = np.array([interaction_integral(gs, x, Lambda).value for x in d])
    err = np.abs(vals - tab.B0 / (Lambda * d) ** (N - 2))
    slope = float(np.polyfit(np.log(d), np.log(err), 1)[0])
    elapsed = time.perf_counter() - t
    target = -(N - 1)
    return CheckResult(4, "interaction-integral rate",
                       bool(abs(slope - target) <= 0.5 and elapsed <= 120.0),
                       {"slope": slope, "target": float(target), "seconds": elapsed,
                        "errors": err.tolist()})


@_timed
def check_lattice_b1(ctx: Context | None = None, k: int = 4000) -> CheckResult:
    direct = b1_partial(5, k)
    ref = float(zeta(3) / (4 * math.pi ** 3))
    rel = abs(direct - ref) / ref
    return CheckResult(5, "lattice constant B1", bool(rel <= 0.01),
                       {"B1_direct": direct, "B1_ref": ref, "rel_diff": rel})


def interaction_vs_bracket(ctx: Context, k: int, r: float) -> dict:
    """Interaction part of I (K = 1, test mode, Lambda0, H(k)) against the B4/B5 bracket."""
    gs, tab, es = ctx.gs, ctx.table, ctx.es
    N = es.N
    L = tab.Lambda0
    h = h_star(k, tab)
    s = math.sqrt(1 - h * h)
    cfg = build_configuration(k, r, h, L, es, test_mode=True)
    e = eval_I(cfg, Potentials.flat(es), gs, n_samples=0)
    inter = -(e.term_same_layer + e.term_cross_layer)
    bracket = k / L ** (N - 2) * (tab.B4 * k ** (N - 2) / (r * s) ** (N - 2)
                                  + tab.B5 * k / (r ** (N - 2) * h ** (N - 3) * s))
    return {"k": k, "r": r, "interaction": inter, "bracket": bracket,
            "rel_err": abs(inter / bracket - 1), "ratio_to_kA1": inter / (k * tab.A1)}


def moderate_radius(ctx: Context, k: int, fraction: float = 1e-3) -> float:
    """r at which the B4 term of the bracket equals ``fraction`` * k*A1."""
    tab = ctx.table
    N = ctx.es.N
    h = h_star(k, tab)
    s = math.sqrt(1 - h * h)
    return (tab.B4 * k ** (N - 2) / (fraction * tab.A1)) ** (1 / (N - 2)) / (tab.Lambda0 * s)


@_timed
def check_energy_expansion(ctx: Context, ks=(8, 16, 32), r_factors=(1.0, 2.0, 4.0)) -> CheckResult:
    rows = []
    ok_tol = ok_mono = True
    for k in ks:
        r1 = moderate_radius(ctx, k)
        errs = []
        for f in r_factors:
            row = interaction_vs_bracket(ctx, k, r1 * f)
            rows.append(row)
            errs.append(row["rel_err"])
        ok_tol &= errs[0] <= 0.10
        ok_mono &= all(b < a for a, b in zip(errs, errs[1:]))
    worst = max(r["rel_err"] for r in rows if r["r"] in
                [moderate_radius(ctx, k) for k in ks])
    return CheckResult(6, "energy expansion vs direct interaction", bool(ok_tol and ok_mono),
                       {"worst_rel_err": worst, "within_10pct": bool(ok_tol),
                        "monotone_in_r": bool(ok_mono), "rows": rows})


@_timed
def check_gradients(ctx: Context, ks=(10, 20, 40), n_points: int = 20, step: float = 1e-5,
                    seed: int = 0x5EED) -> CheckResult:
    tab, es = ctx.table, ctx.es
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in ks:
        box = SkBox.build(k, tab, es, ctx.vartheta2)
        for x in box.sample(n_points, rng):
            for axis, fn in ((2, dF_dLambda), (1, dF_dh)):
                xp, xm = x.copy(), x.copy()
                xp[axis] += step
                xm[axis] -= step
                fd = (F_expansion(*xp, k, tab, es).shifted
                      - F_expansion(*xm, k, tab, es).shifted) / (2 * step)
                exact = fn(*x, k, tab, es)
                worst = max(worst, abs(fd - exact) / abs(exact))
    return CheckResult(7, "gradient consistency", bool(worst <= 1e-6), {"worst_rel_err": worst})


def _strictly_decreasing(v, floor: float = 0.0) -> bool:
    """Strict decrease, or every value at or below ``floor`` (already at the limit)."""
    if all(x <= floor for x in v):
        return True
    return all(b < a for a, b in zip(v, v[1:]))


@_timed
def check_critical_point(ctx: Context, ks=(10, 20, 40)) -> CheckResult:
    tab, es = ctx.table, ctx.es
    rows, interior, signs = [], True, True
    failed_faces = []
    for k in ks:
        try:
            cp = find_critical_point(k, tab, es, ctx.vartheta2)
            rows.append(cp.as_row())
            interior &= cp.interior
        except CylBubbleError as exc:
            rows.append({"k": k, "error": str(exc)})
            interior = False
        bc = boundary_checks(k, tab, es, ctx.vartheta1, ctx.vartheta2)
        signs &= bc["all_hold"]
        failed_faces += [f"k={k}:{name}" for name, v in bc.items()
                         if isinstance(v, dict) and not v["holds"]]
    dl = [r.get("dist_Lambda", math.inf) for r in rows]
    dh = [r.get("dist_h", math.inf) for r in rows]
    trend = _strictly_decreasing(dl) and _strictly_decreasing(dh, floor=1e-12)
    return CheckResult(8, "interior critical point", bool(interior and trend and signs),
                       {"interior": bool(interior), "trend": bool(trend),
                        "boundary_signs": bool(signs), "failed_faces": ";".join(failed_faces),
                        "rows": rows})


@_timed
def check_minmax(ctx: Context, ks=(10, 20)) -> CheckResult:
    tab, es = ctx.table, ctx.es
    sandwich = faces = True
    rows = []
    for k in ks:
        mm = minmax_estimate(k, tab, es, vartheta1=ctx.vartheta1, vartheta2=ctx.vartheta2)
        c1 = boundary_checks(k, tab, es, ctx.vartheta1, ctx.vartheta2)["case_I"]
        sandwich &= mm["sandwich"]
        faces &= c1["holds"]
        rows.append({"k": k, "t1_shift": mm["t1_shift"], "c_shift": mm["c_shift"],
                     "t2_shift": mm["t2_shift"], "face_margin": c1["margin"]})
    return CheckResult(9, "min-max sandwich", bool(sandwich and faces),
                       {"sandwich": bool(sandwich), "faces_below_t1": bool(faces), "rows": rows})


@_timed
def check_residual_decay(ctx: Context, k: int = 3, h: float = 0.5, Lambda: float = 1.0,
                         radii=(10.0, 20.0, 40.0, 80.0, 160.0, 320.0),
                         eps_values=(1e-1, 1e-2, 1e-3)) -> CheckResult:
    """Residual norm along growing separation, and the nonlinear-remainder exponent."""
    gs, es = ctx.gs, ctx.es
    flat = Potentials.flat(es)
    norms = []
    for r in radii:
        cfg = build_configuration(k, r, h, Lambda, es, test_mode=True)
        norms.append(residual_norm(cfg, flat, gs, es.tau))
    fit = -float(np.polyfit(np.log(radii), np.log(norms), 1)[0])
    predicted = residual_rate_exponent(es)
    decreasing = all(b < a for a, b in zip(norms, norms[1:]))
    ok_rate = abs(fit - predicted) <= 0.3 * predicted
    cfg = build_configuration(k, radii[1], h, Lambda, es, test_mode=True)
    pts = norm_sample_points(cfg)
    nk = []
    for eps in eps_values:
        phi = eps * weight(pts, cfg, "star", es.tau)
        vals = nonlinear_remainder(pts, cfg, flat, gs, phi)
        nk.append(weighted_norm(lambda _: vals, cfg, "dblstar", es.tau, points=pts).value)
    nk_fit = float(np.polyfit(np.log(eps_values), np.log(nk), 1)[0])
    nk_target = min(es.p, 2.0) - 0.1
    return CheckResult(10, "residual decay", bool(decreasing and ok_rate and nk_fit >= nk_target),
                       {"fit_exponent": fit, "predicted": predicted, "decreasing": bool(decreasing),
                        "nk_exponent": nk_fit, "nk_target": nk_target,
                        "norms": [float(v) for v in norms]})


CHECKS = {1: check_scalar_reduction, 2: check_ibp_identity, 3: check_hyperbola_identity,
          4: check_far_field_rate, 5: check_lattice_b1, 6: check_energy_expansion,
          7: check_gradients, 8: check_critical_point, 9: check_minmax,
          10: check_residual_decay}


def run_check(n: int, ctx: Context) -> CheckResult:
    try:
        return CHECKS[n](ctx)
    except CylBubbleError as exc:
        return CheckResult(n, CHECKS[n].__name__, False, {"error": f"{type(exc).__name__}: {exc}"})


def run_all(ctx: Context | None = None, criteria=None) -> list[CheckResult]:
    ctx = ctx or Context()
    return [run_check(n, ctx) for n in (criteria or sorted(CHECKS))]


def format_table(results) -> str:
    return "\n".join(r.line() for r in results)
