"""Reduced energy F(r, h, Lambda): expansion, exact partials, gradient flow,
min-max sandwich and the interior critical-point search.

F is dominated by the constant k*A1; every routine works with the shifted value
F - k*A1 (``F_shift``), whose size is k*mu^-m, so that differences and finite
differences keep full precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import ConstantTable, h_star
from .errors import DomainError, ResolutionError, SearchFailure
from .exponents import ExponentSet, mu as mu_scale
from .geometry import DEFAULT_VARTHETA1, DEFAULT_VARTHETA2, region_contains, sk_region


@dataclass(frozen=True)
class FValue:
    """F_expansion at one point.

    ``value`` is F itself, ``shifted`` is F - k*A1 (exact, not recovered by
    subtraction), ``budget`` the size of the dropped remainders with unit
    coefficients.
    """

    value: float
    shifted: float
    terms: dict
    budget: float


def _pieces(k, table: ConstantTable, es: ExponentSet):
    N = es.N
    mu = mu_scale(k, es)
    a = 2 * (N - 3) / (N - 1)
    H = h_star(k, table)
    return N, mu, a, H


def F_expansion(r, h, Lambda, k, table: ConstantTable, es: ExponentSet) -> FValue:
    """Reduced energy with the unknown-coefficient remainders set to zero."""
    if not h > 0:
        raise DomainError("h must be positive")
    if not Lambda > 0:
        raise DomainError("Lambda must be positive")
    N, mu, a, H = _pieces(k, table, es)
    m, m1, m2 = es.m, es.m1, es.m2
    x = 1.0 - h / H
    pm = mu ** -m
    ka = float(k) ** -a
    t_b4 = -k * Lambda ** (2 - N) * pm * table.B4
    t_b6 = -k * Lambda ** (2 - N) * pm * table.B6 * ka
    t_b7 = -k * Lambda ** (2 - N) * pm * table.B7 * ka * x * x
    t_a2 = k * (table.A2 * mu ** -m2 * Lambda ** -m2 + table.A2bar * mu ** -m1 * Lambda ** -m1)
    t_a3 = k * (table.A3 * mu ** -m2 * Lambda ** (2 - m2)
                + table.A3bar * mu ** -m1 * Lambda ** (2 - m1)) * (mu - r) ** 2
    terms = {"leading": k * table.A1, "B4": t_b4, "B6": t_b6, "B7": t_b7, "A2": t_a2, "A3": t_a3}
    shifted = t_b4 + t_b6 + t_b7 + t_a2 + t_a3
    theta = es.theta
    budget = k * pm * (abs(mu - r) ** (theta + 2) + ka * float(k) ** -theta + ka * abs(x) ** 3)
    return FValue(k * table.A1 + shifted, shifted, terms, budget)


def dF_dLambda(r, h, Lambda, k, table: ConstantTable, es: ExponentSet,
               displayed: bool = False) -> float:
    """Exact Lambda-partial of F_expansion.

    ``displayed=True`` keeps only the B4, A2 and (mu - r)^2 pieces, i.e. drops
    the Lambda-derivatives of the B6 and B7 terms.
    """
    N, mu, a, H = _pieces(k, table, es)
    m, m1, m2 = es.m, es.m1, es.m2
    x = 1.0 - h / H
    bracket = table.B4 if displayed else table.B4 + float(k) ** -a * (table.B6 + table.B7 * x * x)
    out = k * (N - 2) * Lambda ** (1 - N) * mu ** -m * bracket
    out -= k * (m2 * table.A2 * mu ** -m2 * Lambda ** (-m2 - 1)
                + m1 * table.A2bar * mu ** -m1 * Lambda ** (-m1 - 1))
    out -= k * ((m2 - 2) * table.A3 * mu ** -m2 * Lambda ** (1 - m2)
                + (m1 - 2) * table.A3bar * mu ** -m1 * Lambda ** (1 - m1)) * (mu - r) ** 2
    return out


def dF_dh(r, h, Lambda, k, table: ConstantTable, es: ExponentSet,
          displayed: bool = False) -> float:
    """Exact h-partial of F_expansion; ``displayed=True`` omits the 1/B' factor."""
    N, mu, a, H = _pieces(k, table, es)
    x = 1.0 - h / H
    scale = 1.0 if displayed else 1.0 / table.Bprime
    return (k * Lambda ** (2 - N) * mu ** -es.m * 2 * table.B7
            * float(k) ** (-(N - 3) / (N - 1)) * scale * x)


def dF_dr(r, h, Lambda, k, table: ConstantTable, es: ExponentSet) -> float:
    N, mu, a, H = _pieces(k, table, es)
    return -2 * k * (table.A3 * mu ** -es.m2 * Lambda ** (2 - es.m2)
                     + table.A3bar * mu ** -es.m1 * Lambda ** (2 - es.m1)) * (mu - r)


def gradient(r, h, Lambda, k, table, es) -> np.ndarray:
    return np.array([dF_dr(r, h, Lambda, k, table, es), dF_dh(r, h, Lambda, k, table, es),
                     dF_dLambda(r, h, Lambda, k, table, es)])


def energy_scale(k, es: ExponentSet) -> float:
    """k*mu^-m, the size of every non-constant term of F."""
    return k * mu_scale(k, es) ** -es.m


# ------------------------------------------------------------ S_k and t1, t2

@dataclass(frozen=True)
class SkBox:
    """S_k in normalized coordinates: (r, h, Lambda) = center + u * widths, u in [-1, 1]^3."""

    k: int
    center: np.ndarray
    widths: np.ndarray
    vartheta2: float

    @classmethod
    def build(cls, k, table, es, vartheta2=DEFAULT_VARTHETA2) -> "SkBox":
        reg = sk_region(k, table, es, vartheta2)
        return cls(int(k), np.array(reg.center, dtype=float), np.array(reg.half_widths, dtype=float), vartheta2)

    def to_phys(self, u):
        return self.center + np.asarray(u, dtype=float) * self.widths

    def to_unit(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.widths

    def sample(self, n: int, rng, min_lambda_fraction: float = 0.5) -> np.ndarray:
        """n uniform points of S_k with Lambda >= min_lambda_fraction * Lambda0."""
        out = []
        lo = (min_lambda_fraction - 1.0) * self.center[2] / self.widths[2]
        while len(out) < n:
            u = rng.uniform(-1.0, 1.0, 3)
            if u[2] >= lo:
                out.append(self.to_phys(u))
        return np.array(out)


def t_levels(k, table: ConstantTable, es: ExponentSet, vartheta1=DEFAULT_VARTHETA1,
             vartheta2=DEFAULT_VARTHETA2) -> dict:
    """t1, t2 for Fbar = -F, as values and shifted by +k*A1 (the units of -F_shift)."""
    N = es.N
    L0 = table.Lambda0
    pm = mu_scale(k, es) ** -es.m
    a2 = table.a2_effective()
    t1_shift = k * pm * (table.B4 * L0 ** (2 - N) - a2 * L0 ** -es.m
                         - float(k) ** (-2.5 * vartheta2))
    t2_shift = k * vartheta1
    kA1 = k * table.A1
    return {"t1": t1_shift - kA1, "t2": t2_shift - kA1, "t1_shift": t1_shift,
            "t2_shift": t2_shift}


# ------------------------------------------------------------------ states

@dataclass
class ReducedState:
    r: float
    h: float
    Lambda: float
    k: int
    gradient: np.ndarray = field(default_factory=lambda: np.zeros(3))
    F_value: float = float("nan")
    F_shift: float = float("nan")
    region_margins: dict = field(default_factory=dict)
    boundary: bool = False

    @property
    def x(self) -> np.ndarray:
        return np.array([self.r, self.h, self.Lambda])


def make_state(x, k, table, es, box: SkBox | None = None) -> ReducedState:
    r, h, L = (float(v) for v in x)
    fv = F_expansion(r, h, L, k, table, es)
    g = gradient(r, h, L, k, table, es)
    margins, boundary = {}, False
    if box is not None:
        u = box.to_unit(x)
        margins = {n: float(1 - abs(v)) for n, v in zip(("r", "h", "Lambda"), u)}
        boundary = min(margins.values()) <= 1e-12
    return ReducedState(r, h, L, int(k), g, fv.value, fv.shifted, margins, boundary)


@dataclass
class FlowReport:
    trajectory: np.ndarray
    terminal: ReducedState
    converged: bool
    reached_t1: bool
    left_region: bool
    exit_face: str | None
    contradiction: bool
    c_estimate: float
    t1: float
    t2: float
    n_steps: int
    monotone: bool

    def summary(self) -> dict:
        return {"converged": self.converged, "reached_t1": self.reached_t1,
                "left_region": self.left_region, "exit_face": self.exit_face,
                "contradiction": self.contradiction, "n_steps": self.n_steps,
                "monotone": self.monotone}


def _fbar_unit(u, box, k, table, es):
    x = box.to_phys(u)
    return -F_expansion(x[0], x[1], x[2], k, table, es).shifted


def _grad_fbar_unit(u, box, k, table, es):
    x = box.to_phys(u)
    return -gradient(x[0], x[1], x[2], k, table, es) * box.widths


def gradient_flow(init: ReducedState, table: ConstantTable, es: ExponentSet,
                  vartheta1=DEFAULT_VARTHETA1, vartheta2=DEFAULT_VARTHETA2,
                  grad_tol: float = 1e-12, max_steps: int = 20000,
                  stop_at_t1: bool = True) -> FlowReport:
    """Descent flow of Fbar = -F from ``init`` in normalized S_k coordinates.

    Explicit Euler with step doubling on success and halving with backtracking
    whenever Fbar would increase. Stops when the normalized gradient falls below
    ``grad_tol`` times the energy scale, when Fbar <= t1 (if ``stop_at_t1``), or
    when the trajectory crosses a face of S_k. Leaving S_k through a face while
    Fbar > t1 is flagged as a contradiction.
    """
    k = init.k
    box = SkBox.build(k, table, es, vartheta2)
    lv = t_levels(k, table, es, vartheta1, vartheta2)
    t1s = lv["t1_shift"]  # level in units of Fbar + k*A1
    scale = energy_scale(k, es)
    u = box.to_unit(init.x)
    f = _fbar_unit(u, box, k, table, es)
    step = 1e-2 / scale
    traj = [np.concatenate([box.to_phys(u), [f]])]
    converged = reached = left = False
    monotone_ok = True
    face = None
    n = 0
    for n in range(1, max_steps + 1):
        g = _grad_fbar_unit(u, box, k, table, es)
        gn = float(np.linalg.norm(g))
        if gn <= grad_tol * scale:
            converged = True
            break
        # trust region: at most 5% of the box per step
        step = min(step, 0.05 / float(np.max(np.abs(g))))
        while True:
            trial = u - step * g
            xt = box.to_phys(trial)
            ft = _fbar_unit(trial, box, k, table, es) if xt[1] > 0 and xt[2] > 0 else np.inf
            if ft <= f or step * gn < 1e-15:
                break
            step *= 0.5
        if ft > f:
            monotone_ok = monotone_ok and (ft - f) <= 1e-14 * abs(f)
            converged = True
            break
        out = np.abs(trial) > 1.0
        if np.any(out):
            # stop at the face crossing
            s = min((1.0 - abs(u[i])) / abs(trial[i] - u[i]) for i in np.where(out)[0])
            trial = u + s * (trial - u)
            trial = np.clip(trial, -1.0, 1.0)
            ft = _fbar_unit(trial, box, k, table, es)
            idx = int(np.argmax(np.abs(trial)))
            face = ("r", "h", "Lambda")[idx] + ("+" if trial[idx] > 0 else "-")
            left = True
        u, f = trial, ft
        traj.append(np.concatenate([box.to_phys(u), [f]]))
        if stop_at_t1 and f <= t1s:
            reached = True
            break
        if left:
            break
        step *= 2.0
    term = make_state(box.to_phys(u), k, table, es, box)
    return FlowReport(np.array(traj), term, converged, reached, left, face,
                      left and not reached and f > t1s, float("nan"), lv["t1"], lv["t2"], n,
                      monotone_ok)


# -------------------------------------------------------------- boundary signs

def _face_grid(n):
    return np.linspace(-1.0, 1.0, n)


def _lambda_window_max(r, h, k, table, es, box):
    """max over Lambda in the S_k window of Fbar_shift at fixed (r, h)."""
    lo, hi = box.center[2] - box.widths[2], box.center[2] + box.widths[2]
    f = lambda L: -F_expansion(r, h, L, k, table, es).shifted
    grid = np.linspace(lo, hi, 65)
    vals = [f(L) for L in grid]
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda L: -f(L), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-14 * max(1.0, hi)})
    return max(vals[i], -res.fun)


def boundary_checks(k, table: ConstantTable, es: ExponentSet, vartheta1=DEFAULT_VARTHETA1,
                    vartheta2=DEFAULT_VARTHETA2, n_grid: int = 9) -> dict:
    """Signs on the faces of S_k.

    Case I: sup of Fbar on the r-faces is below t1.
    Case II: dFbar/dh < 0 on the face h = H(1 - w), > 0 on h = H(1 + w).
    Case III: dFbar/dLambda > 0 on Lambda = Lambda0 + w, < 0 on Lambda0 - w.
    Each entry reports the worst margin (positive means the sign holds).
    """
    box = SkBox.build(k, table, es, vartheta2)
    lv = t_levels(k, table, es, vartheta1, vartheta2)
    g = _face_grid(n_grid)
    scale = energy_scale(k, es)
    out = {}
    # Case I
    if box.center[2] - box.widths[2] <= 0:
        out["case_I"] = {"margin": -np.inf, "holds": False, "sup_fbar_shift": np.inf,
                         "t1_shift": lv["t1_shift"], "reason": "Lambda window reaches 0"}
    else:
        worst = -np.inf
        for sr in (-1.0, 1.0):
            r = box.center[0] + sr * box.widths[0]
            for uh in g:
                h = box.center[1] + uh * box.widths[1]
                worst = max(worst, _lambda_window_max(r, h, k, table, es, box))
        margin1 = lv["t1_shift"] - worst
        out["case_I"] = {"margin": margin1 / scale, "holds": bool(margin1 > 0),
                         "sup_fbar_shift": worst, "t1_shift": lv["t1_shift"]}

    def face_vals(fixed_axis, fixed_u, deriv):
        vals = []
        others = [i for i in range(3) if i != fixed_axis]
        for a in g:
            for b in g:
                u = np.zeros(3)
                u[fixed_axis] = fixed_u
                u[others[0]], u[others[1]] = a, b
                x = box.to_phys(u)
                if x[2] <= 0:
                    continue
                vals.append(-deriv(x[0], x[1], x[2], k, table, es))
        return np.array(vals)

    def entry(vals, sign):
        if vals.size == 0:
            return {"margin": -np.inf, "holds": False, "reason": "face lies at Lambda <= 0"}
        v = sign * vals
        e = {"margin": float(np.min(v)) / scale, "holds": bool(np.all(v > 0))}
        if vals.size < n_grid * n_grid:
            e["reason"] = "face clipped to Lambda > 0"
        return e

    # Case II: h = H(1 - w) is u_h = -1, where Fbar_h < 0
    out["case_II_low"] = entry(face_vals(1, -1.0, dF_dh), -1.0)
    out["case_II_high"] = entry(face_vals(1, 1.0, dF_dh), 1.0)
    out["case_III_high"] = entry(face_vals(2, 1.0, dF_dLambda), 1.0)
    out["case_III_low"] = entry(face_vals(2, -1.0, dF_dLambda), -1.0)
    out["all_hold"] = all(v["holds"] for v in out.values() if isinstance(v, dict))
    return out


# ------------------------------------------------------------------ min-max

def _inner_min(r, k, table, es, box):
    """min over (h, Lambda) in S_k of Fbar_shift at fixed r; Fbar is convex-like in both."""
    fh = lambda h, L: -F_expansion(r, h, L, k, table, es).shifted
    hlo, hhi = box.center[1] - box.widths[1], box.center[1] + box.widths[1]
    llo, lhi = box.center[2] - box.widths[2], box.center[2] + box.widths[2]
    llo = max(llo, 1e-3 * box.center[2])  # Fbar -> +inf as Lambda -> 0
    h_opt = min(max(box.center[1], hlo), hhi)
    best = np.inf
    L_opt = box.center[2]
    for _ in range(3):
        resL = minimize_scalar(lambda L: fh(h_opt, L), bounds=(llo, lhi), method="bounded",
                               options={"xatol": 1e-13})
        L_opt = resL.x
        resh = minimize_scalar(lambda h: fh(h, L_opt), bounds=(hlo, hhi), method="bounded",
                               options={"xatol": 1e-13})
        h_opt = resh.x
        best = min(best, resh.fun, resL.fun)
    return best, h_opt, L_opt


def minmax_estimate(k, table: ConstantTable, es: ExponentSet, resolution: int = 33,
                    vartheta1=DEFAULT_VARTHETA1, vartheta2=DEFAULT_VARTHETA2,
                    rel_tol: float = 1e-6) -> dict:
    """c = max over r of min over (h, Lambda) of Fbar on S_k.

    The grid maximum is refined by bounded scalar search; the estimate at
    ``resolution`` and at twice the resolution must agree to ``rel_tol``
    (relative to the energy scale), otherwise ResolutionError.
    """
    box = SkBox.build(k, table, es, vartheta2)
    lv = t_levels(k, table, es, vartheta1, vartheta2)
    scale = energy_scale(k, es)

    def outer(nres):
        rs = box.center[0] + np.linspace(-1, 1, nres) * box.widths[0]
        vals = [_inner_min(r, k, table, es, box)[0] for r in rs]
        i = int(np.argmax(vals))
        a, b = rs[max(i - 1, 0)], rs[min(i + 1, nres - 1)]
        res = minimize_scalar(lambda r: -_inner_min(r, k, table, es, box)[0], bounds=(a, b),
                              method="bounded", options={"xatol": 1e-9 * box.widths[0]})
        if -res.fun >= vals[i]:
            return -res.fun, res.x
        return vals[i], rs[i]

    c1, r1 = outer(resolution)
    c2, r2 = outer(2 * resolution - 1)
    if abs(c1 - c2) > rel_tol * scale:
        raise ResolutionError(f"c estimate moved by {abs(c1 - c2) / scale:.3g} (scaled) "
                              f"under grid refinement")
    _, h_opt, L_opt = _inner_min(r2, k, table, es, box)
    kA1 = k * table.A1
    return {"c_estimate": c2 - kA1, "c_shift": c2, "t1": lv["t1"], "t2": lv["t2"],
            "t1_shift": lv["t1_shift"], "t2_shift": lv["t2_shift"],
            "argmax": (float(r2), float(h_opt), float(L_opt)),
            "sandwich": bool(lv["t1_shift"] < c2 < lv["t2_shift"]),
            "scale": scale}


def face_sup_below_t1(k, table, es, vartheta1=DEFAULT_VARTHETA1,
                      vartheta2=DEFAULT_VARTHETA2, n_grid: int = 9) -> dict:
    return boundary_checks(k, table, es, vartheta1, vartheta2, n_grid)["case_I"]


# ------------------------------------------------------ critical point search

@dataclass
class CriticalPoint:
    r: float
    h: float
    Lambda: float
    k: int
    interior: bool
    residual: float
    diagnostics: dict

    def as_row(self) -> dict:
        return {"k": self.k, "r": self.r, "h": self.h, "Lambda": self.Lambda,
                "interior": self.interior, "residual": self.residual, **self.diagnostics}


def _newton(u0, box, k, table, es, tol, max_iter=60):
    """Damped Newton on the normalized gradient with a finite-difference Hessian."""
    u = np.array(u0, dtype=float)
    def gfun(v):
        x = box.to_phys(v)
        if x[2] <= 0:
            return np.full(3, np.inf)
        return _grad_fbar_unit(v, box, k, table, es)

    g = gfun(u)
    if not np.all(np.isfinite(g)):
        return u, g, False
    for _ in range(max_iter):
        if np.linalg.norm(g) <= tol:
            return u, g, True
        H = np.empty((3, 3))
        eps = 1e-6
        for j in range(3):
            e = np.zeros(3)
            e[j] = eps
            H[:, j] = (gfun(u + e) - gfun(u - e)) / (2 * eps)
        H = 0.5 * (H + H.T)
        if not np.all(np.isfinite(H)):
            return u, g, False
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            return u, g, False
        if not np.all(np.isfinite(step)):
            return u, g, False
        lam = 1.0
        gn = np.linalg.norm(g)
        while lam > 1e-6:
            trial = u + lam * step
            gt = gfun(trial)
            if np.linalg.norm(gt) < gn:
                break
            lam *= 0.5
        else:
            return u, g, False
        u, g = trial, gt
        if np.max(np.abs(u)) > 50:
            return u, g, False
    return u, g, np.linalg.norm(g) <= tol


def find_critical_point(k, table: ConstantTable, es: ExponentSet,
                        vartheta2=DEFAULT_VARTHETA2, n_starts: int = 3,
                        res_tol: float = 1e-10) -> CriticalPoint:
    """Interior critical point of F on S_k by multi-start Newton.

    Starts form an n^3 grid in normalized coordinates. A candidate is accepted
    when |grad F| <= res_tol * |F - k*A1| in normalized units and it lies inside
    S_k. Raises SearchFailure when no start converges to an interior point.
    """
    box = SkBox.build(k, table, es, vartheta2)
    starts = [np.array(s) for s in np.array(np.meshgrid(*[np.linspace(-0.5, 0.5, n_starts)] * 3))
              .reshape(3, -1).T]
    starts.insert(0, np.zeros(3))
    best = None
    for s in starts:
        if box.to_phys(s)[2] <= 0:
            continue
        fs = abs(_fbar_unit(s, box, k, table, es))
        u, g, ok = _newton(s, box, k, table, es, tol=res_tol * fs)
        if not ok or np.max(np.abs(u)) > 1.0:
            continue
        resid = float(np.linalg.norm(g)) / max(abs(_fbar_unit(u, box, k, table, es)), 1e-300)
        if best is None or resid < best[1]:
            best = (u, resid)
        if resid <= res_tol:
            break
    if best is None:
        raise SearchFailure(f"no interior critical point of F in S_k for k={k}")
    u, resid = best
    x = box.to_phys(u)
    H = h_star(k, table)
    mu = mu_scale(k, es)
    reg = sk_region(k, table, es, vartheta2)
    mem = region_contains(reg, x[0], x[1], x[2])
    diag = {"dist_r": float(abs(x[0] - mu)), "dist_h": float(abs(1 - x[1] / H)),
            "dist_Lambda": float(abs(x[2] - table.Lambda0)),
            "margin_r": mem.margins["r"] / box.widths[0],
            "margin_h": mem.margins["h"] / box.widths[1],
            "margin_Lambda": mem.margins["Lambda"] / box.widths[2],
            "Lambda_halfwidth": float(box.widths[2])}
    return CriticalPoint(float(x[0]), float(x[1]), float(x[2]), int(k),
                         bool(mem.inside and min(1 - abs(u)) > 0), resid, diag)


def with_table(table: ConstantTable, **kw) -> ConstantTable:
    """Copy of the table with overridden values (e.g. B7=0 for the degenerate check)."""
    return replace(table, **kw)
