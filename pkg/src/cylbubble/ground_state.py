"""Radial ground state of the critical Lane-Emden system by shooting on V(0)."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .errors import ConvergenceError, DomainError, SolverError, TailQualityError
from .exponents import ExponentSet
from .quadrature import QuadResult, radial_edges, radial_integral, sphere_area, sphere_moment

FORMAT_VERSION = 1
R_START = 1e-8


@dataclass(frozen=True)
class ProfileTable:
    """Interpolation data for one radial function (see ``kernels.profile_eval``)."""

    vals: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    r_min: float
    r_max: float
    log_ratio: float
    f0: float
    f1: float
    f2: float
    b: float
    npow: float

    def args(self):
        return (self.vals, self.d1, self.d2, self.r_min, self.r_max, self.log_ratio,
                self.f0, self.f1, self.f2, self.b, self.npow)

    def __call__(self, r, deriv: int = 0):
        r = np.asarray(r, dtype=float)
        return kernels.profile_eval(np.ascontiguousarray(r.ravel()), *self.args(),
                                    deriv).reshape(r.shape)


@dataclass(frozen=True, eq=False)
class GroundStateProfile:
    """Ground state (U, V) on a graded radial grid.

    ``radii[0] = 0`` and ``radii[1:]`` is geometric. Beyond ``r_max`` both
    components follow their power tails b / r^{N-2}.
    """

    N: int
    p: float
    q: float
    radii: np.ndarray
    U_vals: np.ndarray
    V_vals: np.ndarray
    dU_vals: np.ndarray
    dV_vals: np.ndarray
    shoot_a: float
    b_u: float
    b_v: float
    diagnostics: dict = field(default_factory=dict)
    moment_cache: dict = field(default_factory=dict)

    def __post_init__(self):
        N, p, q, a = self.N, self.p, self.q, self.shoot_a
        r = self.radii[1:]
        lr = math.log(r[-1] / r[0]) / (len(r) - 1)
        U, V, dU, dV = self.U_vals[1:], self.V_vals[1:], self.dU_vals[1:], self.dV_vals[1:]
        ddU = -(N - 1) / r * dU - np.abs(V) ** p
        ddV = -(N - 1) / r * dV - np.abs(U) ** q
        d3U = -(N - 1) * (ddU / r - dU / r ** 2) - p * np.abs(V) ** (p - 1) * dV
        d3V = -(N - 1) * (ddV / r - dV / r ** 2) - q * np.abs(U) ** (q - 1) * dU
        fU2, fV2 = -a ** p / (2 * N), -1.0 / (2 * N)
        n = N - 2
        r0, r1 = r[0], r[-1]
        tabs = {
            "U": ProfileTable(U.copy(), dU.copy(), ddU, r0, r1, lr, 1.0, 0.0, fU2, self.b_u, n),
            "V": ProfileTable(V.copy(), dV.copy(), ddV, r0, r1, lr, a, 0.0, fV2, self.b_v, n),
            "dU": ProfileTable(dU.copy(), ddU, d3U, r0, r1, lr, 0.0, 2 * fU2, 0.0,
                               -n * self.b_u, n + 1),
            "dV": ProfileTable(dV.copy(), ddV, d3V, r0, r1, lr, 0.0, 2 * fV2, 0.0,
                               -n * self.b_v, n + 1),
        }
        object.__setattr__(self, "_tables", tabs)
        object.__setattr__(self, "_lock", threading.Lock())

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    def table(self, name: str) -> ProfileTable:
        return self._tables[name]

    def U(self, r):
        return self._tables["U"](r)

    def V(self, r):
        return self._tables["V"](r)

    def dU(self, r):
        return self._tables["dU"](r)

    def dV(self, r):
        return self._tables["dV"](r)

    def component(self, name: str):
        return {"U": self.U, "V": self.V}[name]

    def exponent_of(self, name: str) -> float:
        """Power the *other* equation raises this component to (q for U, p for V)."""
        return {"U": self.q, "V": self.p}[name]

    def tail_coefficient(self, name: str) -> float:
        return {"U": self.b_u, "V": self.b_v}[name]

    def moment(self, component: str, power: float, axis_weight: float = 0.0) -> float:
        return moment(self, component, power, axis_weight)


def _rhs(N, p, q):
    def f(r, y):
        U, dU, V, dV = y
        return [dU, -(N - 1) / r * dU - np.abs(V) ** (p - 1) * V,
                dV, -(N - 1) / r * dV - np.abs(U) ** (q - 1) * U]
    return f


def _initial(N, p, a, r):
    return [1 - a ** p * r * r / (2 * N), -a ** p * r / N, a - r * r / (2 * N), -r / N]


def _harmonic_events(N):
    # c = f + r f'/(N-2) is non-increasing along solutions; once negative the
    # component is bound to cross zero, so the sign of c separates the two regimes.
    def eU(r, y):
        return y[0] + r * y[1] / (N - 2)

    def eV(r, y):
        return y[2] + r * y[3] / (N - 2)

    for e in (eU, eV):
        e.terminal, e.direction = True, -1
    return [eU, eV]


def classify_shot(es: ExponentSet, a: float, r_end: float = 1e5, rtol: float = 1e-10):
    """Classify the trajectory with V(0)=a.

    Returns
    -------
    (label, radius)
        ``'U'`` when U is bound to cross zero first (a too large), ``'V'`` when V
        is (a too small), ``'none'`` when neither happens before ``r_end``.
    """
    N = es.N
    sol = solve_ivp(_rhs(N, es.p, es.q), (R_START, r_end), _initial(N, es.p, a, R_START),
                    method="DOP853", rtol=rtol, atol=1e-40, events=_harmonic_events(N))
    if len(sol.t_events[0]):
        return "U", float(sol.t_events[0][0])
    if len(sol.t_events[1]):
        return "V", float(sol.t_events[1][0])
    return "none", float(sol.t[-1])


def shooting_bracket(es: ExponentSet, lo: float = 0.5, hi: float = 2.0, max_expand: int = 40,
                     rtol: float = 1e-10):
    """Find a < a' with labels 'V' and 'U' respectively."""
    for _ in range(max_expand):
        cl, ch = classify_shot(es, lo, rtol=rtol)[0], classify_shot(es, hi, rtol=rtol)[0]
        if cl == "V" and ch == "U":
            return lo, hi
        if cl == "U":
            lo /= 2.0
        if ch == "V":
            hi *= 2.0
        if cl == "none" or ch == "none":
            break
    raise SolverError(f"no shooting bracket found (labels {cl!r}, {ch!r})")


def bracket_labels(es: ExponentSet, a_grid) -> list[str]:
    """Labels over a coarse grid; uniqueness means a single V->U switch."""
    return [classify_shot(es, float(a))[0] for a in a_grid]


def _richardson_tail(r, f, N, gamma):
    """b from two samples of r^{N-2} f(r) assuming a correction ~ r^-gamma."""
    g1, g2 = r[0] ** (N - 2) * f[0], r[1] ** (N - 2) * f[1]
    w1, w2 = r[0] ** gamma, r[1] ** gamma
    return (g2 * w2 - g1 * w1) / (w2 - w1)


def solve_ground_state(es: ExponentSet, r_max: float = 1e3, tol: float = 4e-16,
                       n_nodes: int = 4000, r_min: float = 1e-5, shoot_rtol: float = 1e-12,
                       profile_rtol: float = 3e-14, max_iter: int = 200) -> GroundStateProfile:
    """Solve -Delta U = V^p, -Delta V = U^q radially with U(0)=1.

    Parameters
    ----------
    r_max : float
        Outer end of the stored grid; beyond it the power tails are used.
    tol : float
        Target relative width of the shooting bracket.

    Raises
    ------
    SolverError
        No bracket.
    ConvergenceError
        Bracket not reduced to ``tol`` or the tuned trajectory departs before ``r_max``.
    """
    N, p, q = es.N, es.p, es.q
    if abs(1 / (p + 1) + 1 / (q + 1) - (N - 2) / N) > 1e-10:
        raise DomainError("(p, q) not on the critical hyperbola")
    lo, hi = shooting_bracket(es, rtol=shoot_rtol)
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) <= tol * mid:
            break
        lab, _ = classify_shot(es, mid, rtol=shoot_rtol)
        if lab == "V":
            lo = mid
        elif lab == "U":
            hi = mid
        else:
            lo = hi = mid
            break
        it += 1
    a = 0.5 * (lo + hi)
    if (hi - lo) > max(tol * a, 4 * np.finfo(float).eps * a):
        raise ConvergenceError(f"shooting bracket width {hi - lo:.3g} after {it} iterations")

    radii = np.concatenate([[0.0], np.geomspace(r_min, r_max, n_nodes - 1)])
    sol = solve_ivp(_rhs(N, p, q), (R_START, r_max), _initial(N, p, a, R_START),
                    method="DOP853", rtol=profile_rtol, atol=1e-40, dense_output=True,
                    events=_harmonic_events(N))
    if sol.status != 0:
        raise ConvergenceError(
            f"tuned trajectory departs at r={sol.t[-1]:.4g} < r_max={r_max:g}; reduce r_max")
    y = sol.sol(radii[1:])
    U = np.concatenate([[1.0], y[0]])
    dU = np.concatenate([[0.0], y[1]])
    V = np.concatenate([[a], y[2]])
    dV = np.concatenate([[0.0], y[3]])
    if np.any(U <= 0) or np.any(V <= 0):
        raise ConvergenceError("profile lost positivity before r_max")

    # tail coefficients: Richardson over the last decade
    rr = np.array([r_max / 10.0, r_max])
    ys = sol.sol(rr)
    gam_u, gam_v = (N - 2) * p - N, (N - 2) * q - N
    b_u = float(_richardson_tail(rr, ys[0], N, gam_u))
    b_v = float(_richardson_tail(rr, ys[2], N, gam_v))

    rad = radii[1:]
    logd = -rad * y[1] / y[0]
    ok = np.abs(logd - (N - 2)) <= 0.005 * (N - 2)
    bad = np.nonzero(~ok)[0]
    r_tail = float(rad[bad[-1] + 1]) if len(bad) and bad[-1] + 1 < len(rad) else (
        float(rad[0]) if not len(bad) else math.inf)
    diag = {"bracket": (lo, hi), "iterations": it, "r_tail": r_tail,
            "b_u_richardson": b_u, "b_v_richardson": b_v}
    gs = GroundStateProfile(N, p, q, radii, U, V, dU, dV, a, b_u, b_v, diag)
    if not math.isfinite(r_tail):
        raise TailQualityError("tail regime r|U'|/U ~ N-2 not reached before r_max")
    return gs


def green_tail_coefficients(gs: GroundStateProfile) -> tuple[float, float]:
    """b_u = int V^p / ((N-2)|S^{N-1}|) and b_v likewise with U^q."""
    N = gs.N
    c = (N - 2) * sphere_area(N)
    return moment(gs, "V", gs.p) / c, moment(gs, "U", gs.q) / c


def tail_coefficients(gs: GroundStateProfile, rel_tol: float = 1e-2) -> tuple[float, float]:
    """Return (b_u, b_v), cross-checked against the Green representation.

    Raises
    ------
    TailQualityError
        When either coefficient disagrees with its Green value by more than ``rel_tol``.
    """
    gu, gv = green_tail_coefficients(gs)
    du, dv = abs(gs.b_u / gu - 1), abs(gs.b_v / gv - 1)
    gs.diagnostics["green_b_u"], gs.diagnostics["green_b_v"] = gu, gv
    gs.diagnostics["tail_disagreement"] = max(du, dv)
    if max(du, dv) > rel_tol:
        raise TailQualityError(f"tail coefficients disagree with Green values: {du:.3g}, {dv:.3g}")
    return gs.b_u, gs.b_v


def radial_moment(gs: GroundStateProfile, component: str, power: float,
                  axis_weight: float = 0.0) -> QuadResult:
    """int_0^inf r^{N-1+a} f(r)^s dr with the analytic power tail."""
    N = gs.N
    if not power * (N - 2) - axis_weight > N:
        raise DomainError("moment not integrable: need s(N-2) - a > N")
    f = gs.component(component)
    b = gs.tail_coefficient(component)
    edges = radial_edges(gs.r_max, 1e-3, per_decade=8)
    return radial_integral(lambda r: np.abs(f(r)) ** power, N, axis_weight, tol=1e-13,
                           r_max=gs.r_max, tail=(b ** power, power * (N - 2)), edges=edges)


def moment(gs: GroundStateProfile, component: str, power: float,
           axis_weight: float = 0.0) -> float:
    """int_{R^N} |y_1|^a f(|y|)^s dy for f in {U, V}; cached."""
    key = (component, float(power), float(axis_weight))
    with gs._lock:
        if key in gs.moment_cache:
            return gs.moment_cache[key]
    res = radial_moment(gs, component, power, axis_weight)
    val = float(sphere_moment(gs.N, axis_weight) * res.value)
    with gs._lock:
        gs.moment_cache[key] = val
        gs.moment_cache[key + ("error",)] = float(sphere_moment(gs.N, axis_weight) * res.error)
    return val


def gradient_pairing(gs: GroundStateProfile) -> float:
    """int grad U . grad V over R^N."""
    N = gs.N
    bu, bv = gs.b_u, gs.b_v
    edges = radial_edges(gs.r_max, 1e-3, per_decade=8)
    res = radial_integral(lambda r: gs.dU(r) * gs.dV(r), N, 0.0, tol=1e-13, r_max=gs.r_max,
                          tail=((N - 2) ** 2 * bu * bv, 2 * (N - 1)), edges=edges)
    return sphere_area(N) * res.value


def ode_residual(gs: GroundStateProfile, r) -> np.ndarray:
    """Scaled residual of both radial equations at radii r (max over components)."""
    N, p, q = gs.N, gs.p, gs.q
    r = np.asarray(r, dtype=float)
    eU = gs.table("dU")(r, 1) + (N - 1) / r * gs.dU(r) + gs.V(r) ** p
    eV = gs.table("dV")(r, 1) + (N - 1) / r * gs.dV(r) + gs.U(r) ** q
    return np.maximum(np.abs(eU) / gs.V(r) ** p, np.abs(eV) / gs.U(r) ** q)


def export_profile(gs: GroundStateProfile, path) -> None:
    """Write the versioned plain-text profile format."""
    with open(path, "w") as fh:
        fh.write(f"# cylbubble-profile {FORMAT_VERSION}\n")
        for key, val in (("N", gs.N), ("p", gs.p), ("q", gs.q), ("shoot_a", gs.shoot_a),
                         ("b_u", gs.b_u), ("b_v", gs.b_v)):
            fh.write(f"# {key} = {val!r}\n")
        fh.write("# columns: r U V dU dV\n")
        data = np.column_stack([gs.radii, gs.U_vals, gs.V_vals, gs.dU_vals, gs.dV_vals])
        np.savetxt(fh, data, fmt="%.17e")


def import_profile(path) -> GroundStateProfile:
    """Read a profile written by ``export_profile``."""
    header = {}
    with open(path) as fh:
        first = fh.readline().split()
        if len(first) < 3 or first[1] != "cylbubble-profile":
            raise ValueError("not a profile file")
        if int(first[2]) != FORMAT_VERSION:
            raise ValueError(f"unsupported profile format version {first[2]}")
        for line in fh:
            if not line.startswith("#"):
                break
            if "=" in line:
                k, v = line[1:].split("=", 1)
                header[k.strip()] = float(v)
    data = np.loadtxt(path, comments="#")
    return GroundStateProfile(int(header["N"]), header["p"], header["q"], data[:, 0].copy(),
                              data[:, 1].copy(), data[:, 2].copy(), data[:, 3].copy(),
                              data[:, 4].copy(), header["shoot_a"], header["b_u"], header["b_v"])
