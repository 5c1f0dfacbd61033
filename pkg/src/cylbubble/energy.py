"""The functional I(W1, W2) on the multi-bubble ansatz, its interaction integrals,
the residual R_k, weighted norms and the nonlinear remainder."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, DomainError
from .exponents import ExponentSet
from .geometry import Configuration
from .ground_state import GroundStateProfile, moment
from .quadrature import (DEFAULT_SEED, BipolarKernel, HeavyTailMixture, QuadResult,
                         bipolar_integral, mc_integral, shell_integral)

K_FLOOR = 0.1


@dataclass(frozen=True)
class Potentials:
    """K_i(s) = 1 - c_i phi_i(|s - r0|).

    phi_i(x) = x^{m_i} for x <= delta/2, then a C^2 monotone cubic-Hermite blend
    of the derivative that reaches a constant level at x = delta.
    """

    c1: float
    c2: float
    m1: float
    m2: float
    r0: float = 1.0
    delta: float = 0.5
    theta1: float = 0.5
    theta2: float = 0.5

    def __post_init__(self):
        for i in (1, 2):
            if self.min_value(i) < K_FLOOR:
                raise ConfigError(
                    f"K{i} saturates at {self.min_value(i):.4g} < {K_FLOOR}; reduce c{i} or delta")

    @classmethod
    def from_exponents(cls, es: ExponentSet) -> "Potentials":
        return cls(es.c1, es.c2, es.m1, es.m2, es.r0, es.delta, es.theta1, es.theta2)

    @classmethod
    def flat(cls, es: ExponentSet) -> "Potentials":
        """K_1 = K_2 = 1."""
        return cls(0.0, 0.0, es.m1, es.m2, es.r0, es.delta, es.theta1, es.theta2)

    def params(self, i: int) -> tuple[float, float]:
        return (self.c1, self.m1) if i == 1 else (self.c2, self.m2)

    def saturation_level(self, i: int) -> float:
        """phi_i at and beyond x = delta."""
        _, m = self.params(i)
        s1 = 0.5 * self.delta
        alpha = m - 1.0  # (m-1)(s2-s1)/s1 with s2 = 2 s1
        return s1 ** m + m * s1 ** (m - 1) * s1 * (0.5 + alpha / 12.0)

    def min_value(self, i: int) -> float:
        c, _ = self.params(i)
        return 1.0 - c * self.saturation_level(i)

    def phi(self, i: int, x):
        _, m = self.params(i)
        x = np.abs(np.asarray(x, dtype=float))
        s1 = 0.5 * self.delta
        alpha = m - 1.0
        out = np.empty_like(x)
        inner = x <= s1
        out[inner] = x[inner] ** m
        outer = ~inner
        t = np.clip((x[outer] - s1) / s1, 0.0, 1.0)
        integ = _blend_int(t, alpha)
        out[outer] = s1 ** m + m * s1 ** (m - 1) * s1 * integ
        return out

    def breakpoints(self, i: int) -> tuple[float, ...]:
        """Radii (in units of the potential argument) where K_i is not smooth."""
        c, _ = self.params(i)
        if c == 0.0:
            return ()
        r0, d = self.r0, self.delta
        return tuple(v for v in (r0 - d, r0 - d / 2, r0, r0 + d / 2, r0 + d) if v > 0)

    def value(self, i: int, s):
        c, _ = self.params(i)
        s = np.asarray(s, dtype=float)
        if c == 0.0:
            return np.ones_like(s)
        return 1.0 - c * self.phi(i, s - self.r0)


def _blend_int(t, alpha):
    """int_0^t (1-u)^2 (1 + (2+alpha) u) du."""
    a = 2.0 + alpha
    # (1-u)^2 (1 + a u) = 1 + (a-2) u + (1-2a) u^2 + a u^3
    return t + (a - 2) * t ** 2 / 2 + (1 - 2 * a) * t ** 3 / 3 + a * t ** 4 / 4


def potential_value(pot: Potentials, component: int, radius):
    """K_component at the given radius (radius >= 0)."""
    r = np.asarray(radius, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be >= 0")
    return pot.value(component, r)


# --------------------------------------------------------------------- bubbles

@dataclass(frozen=True)
class IntegralResult:
    value: float
    error: float


def _scaled(gs: GroundStateProfile, name: str, Lambda: float):
    """Callable t -> Lambda^{N/(s+1)} f(Lambda t) with s the conjugate power of f."""
    N = gs.N
    s = gs.q if name == "U" else gs.p
    amp = Lambda ** (N / (s + 1))
    f = gs.component(name)
    return lambda t: amp * f(Lambda * t)


def interaction_integral(gs: GroundStateProfile, d: float, Lambda: float = 1.0,
                         kind: str = "Uq_U", tol: float = 1e-10) -> IntegralResult:
    """int U_{0,Lambda}^q U_{x,Lambda} with |x| = d (kind 'Uq_U'), or the V^p V analogue.

    By scaling this equals J(Lambda d) with J(D) = int U^q(z) U(z - D e) dz.
    """
    if not d > 0:
        raise DomainError("interaction distance must be positive")
    D = float(Lambda) * float(d)
    if kind == "Uq_U":
        f, s = gs.U, gs.q
    elif kind == "Vp_V":
        f, s = gs.V, gs.p
    else:
        raise ValueError(f"unknown kind {kind!r}")
    kern = BipolarKernel(D, gs.N, lambda a, b: np.abs(f(a)) ** s * f(b))
    res = bipolar_integral(kern, tol=tol, core=1.0)
    return IntegralResult(res.value, res.error)


def far_field_leading(table_B0: float, d: float, Lambda: float, N: int) -> float:
    return table_B0 / (Lambda ** (N - 2) * d ** (N - 2))


# ------------------------------------------------------------------ energy

@dataclass
class EnergyBreakdown:
    """I(W1, W2) split into named terms; ``total`` is their sum plus the remainder."""

    total: float
    term_leading: float
    term_same_layer: float
    term_cross_layer: float
    term_K1_deviation: float
    term_K2_deviation: float
    term_quadratic_in_r: float
    remainder_budget: float
    stderr: float = 0.0
    method: str = "semi_analytic"
    details: dict = field(default_factory=dict)

    TERMS = ("term_leading", "term_same_layer", "term_cross_layer", "term_K1_deviation",
             "term_K2_deviation", "term_quadratic_in_r", "remainder_budget")

    def bookkeeping_gap(self) -> float:
        return self.total - sum(getattr(self, t) for t in self.TERMS)

    @property
    def interaction(self) -> float:
        return self.term_same_layer + self.term_cross_layer

    def to_dict(self) -> dict:
        return asdict(self)


def single_bubble_constants(gs: GroundStateProfile) -> dict:
    p, q = gs.p, gs.q
    PV = moment(gs, "V", p + 1)
    PU = moment(gs, "U", q + 1)
    return {"PV": PV, "PU": PU,
            "half_A1": (1 - 1 / (p + 1)) * PV - PU / (q + 1)}


def _pair_distances(cfg: Configuration, brute_force: bool):
    """List of (distance, layer-tag, multiplicity) over ordered pairs i != j."""
    if cfg.is_symmetric and not brute_force:
        n = cfg.n_bubbles
        out = [(float(d), "same", n) for d in cfg.same_layer[1:]]
        out += [(float(d), "cross", n) for d in cfg.cross_layer]
        return out
    C = cfg.all_centers
    ntop = cfg.centers_top.shape[0]
    out = []
    for i in range(C.shape[0]):
        for j in range(C.shape[0]):
            if i != j:
                tag = "same" if (i < ntop) == (j < ntop) else "cross"
                out.append((float(np.linalg.norm(C[i] - C[j])), tag, 1))
    return out


def pairwise_interaction(cfg: Configuration, gs: GroundStateProfile,
                         brute_force: bool = False, cache: dict | None = None) -> dict:
    """sum over ordered pairs i != j of int U_i^q U_j, split by layer.

    With the symmetric configuration only bubble 1's partners are integrated
    and the sum is multiplied by 2k; ``brute_force`` integrates every pair.
    """
    cache = {} if cache is None else cache
    sums = {"same": 0.0, "cross": 0.0}
    errs = {"same": 0.0, "cross": 0.0}
    for d, tag, mult in _pair_distances(cfg, brute_force):
        key = round(cfg.Lambda * d, 12)
        if key not in cache:
            cache[key] = interaction_integral(gs, d, cfg.Lambda)
        res = cache[key]
        sums[tag] += mult * res.value
        errs[tag] += mult * res.error
    return {"same": sums["same"], "cross": sums["cross"], "err_same": errs["same"],
            "err_cross": errs["cross"]}


def potential_deviation(gs: GroundStateProfile, pot: Potentials, component: int,
                        center_norm: float, Lambda: float, mu: float) -> QuadResult:
    """int (K_i(|y|/mu) - 1) f_{x,Lambda}^{s+1} dy for one bubble at |x| = center_norm.

    Component 1 pairs K_1 with V^{p+1}; component 2 pairs K_2 with U^{q+1}.
    """
    c, _ = pot.params(component)
    if c == 0.0:
        return QuadResult(0.0, 0.0)
    name, s = ("V", gs.p) if component == 1 else ("U", gs.q)
    g = _scaled(gs, name, Lambda)
    breaks = [mu * b for b in pot.breakpoints(component)]
    return shell_integral(lambda rho: pot.value(component, rho / mu) - 1.0,
                          lambda t: np.abs(g(t)) ** (s + 1), center_norm, gs.N,
                          rho_breaks=breaks, core=1.0 / Lambda)


class _Fields:
    """Per-point sums over the bubbles of U_i, V_i and their powers."""

    def __init__(self, pts, cfg: Configuration, gs: GroundStateProfile, want_layers=False):
        N, p, q, L = gs.N, gs.p, gs.q, cfg.Lambda
        au, av = L ** (N / (q + 1)), L ** (N / (p + 1))
        n = pts.shape[0]
        C = cfg.all_centers
        ntop = cfg.centers_top.shape[0]
        self.W1 = np.zeros(n)
        self.W2 = np.zeros(n)
        self.Uq = np.zeros(n)
        self.Vp = np.zeros(n)
        self.Uq1 = np.zeros(n)
        self.Vp1 = np.zeros(n)
        self.UqU_same = np.zeros(n)
        self.UqU_cross = np.zeros(n)
        self.Umax = np.zeros(n)
        self.Vmax = np.zeros(n)
        self.VpVmax = np.zeros(n)  # V_*^p of the dominant bubble
        self.Vmax_arg = np.full(n, -1)
        Ulist = []
        for idx, c in enumerate(C):
            t = L * np.sqrt(((pts - c) ** 2).sum(axis=1))
            u = au * gs.U(t)
            v = av * gs.V(t)
            if want_layers:
                Ulist.append(u)
            self.W1 += u
            self.W2 += v
            uq = u ** q
            vp = v ** p
            self.Uq += uq
            self.Vp += vp
            self.Uq1 += uq * u
            self.Vp1 += vp * v
            big = v > self.Vmax
            self.Vmax = np.where(big, v, self.Vmax)
            self.Vmax_arg = np.where(big, idx, self.Vmax_arg)
            self.Umax = np.maximum(self.Umax, u)
        if want_layers:
            U = np.array(Ulist)
            top_sum = U[:ntop].sum(axis=0)
            bot_sum = U[ntop:].sum(axis=0)
            for idx in range(U.shape[0]):
                uq = U[idx] ** q
                own_same = top_sum if idx < ntop else bot_sum
                other = bot_sum if idx < ntop else top_sum
                self.UqU_same += uq * (own_same - U[idx])
                self.UqU_cross += uq * other


def _excess_power(total, parts_pow, parts_pow1, dom, s):
    """W^{s+1} - sum f_i^{s+1} - (s+1) sum f_i^s (W - f_i), cancellation-safe around the
    dominant bubble value ``dom``."""
    eps = total - dom
    x = np.where(dom > 0, eps / np.where(dom > 0, dom, 1.0), 0.0)
    small = np.abs(x) < 1e-3
    e = s + 1.0
    series = (e * (e - 1) / 2 * x ** 2 + e * (e - 1) * (e - 2) / 6 * x ** 3
              + e * (e - 1) * (e - 2) * (e - 3) / 24 * x ** 4)
    direct = np.expm1(e * np.log1p(x)) - e * x
    head = dom ** e * np.where(small, series, direct)
    # remaining bubbles j != dominant: -(f_j^{s+1} + (s+1) f_j^s (W - f_j))
    rest_pow1 = parts_pow1 - dom ** e
    rest_pow = parts_pow - dom ** s
    rest = -(rest_pow1 + e * (total * rest_pow - rest_pow1))
    return head + rest


def _remainder_integrand(pts, cfg, pot, gs):
    """Three-center K terms plus the nonlinear remainder of both power terms."""
    p, q, mu = gs.p, gs.q, cfg.mu
    F = _Fields(pts, cfg, gs)
    rad = np.sqrt((pts ** 2).sum(axis=1)) / mu
    K1 = pot.value(1, rad)
    K2 = pot.value(2, rad)
    S1 = F.W2 * F.Vp - F.Vp1
    S2 = F.W1 * F.Uq - F.Uq1
    R2 = _excess_power(F.W2, F.Vp, F.Vp1, F.Vmax, p)
    R1 = _excess_power(F.W1, F.Uq, F.Uq1, F.Umax, q)
    return -(K1 - 1) * S1 - (K2 - 1) * S2 - K1 * R2 / (p + 1) - K2 * R1 / (q + 1)


def default_sampler(cfg: Configuration, gs: GroundStateProfile) -> HeavyTailMixture:
    return HeavyTailMixture(cfg.all_centers, scale=2.0 / cfg.Lambda, nu=gs.N - 2)


def eval_I(cfg: Configuration, pot: Potentials, gs: GroundStateProfile,
           method: str = "semi_analytic", n_samples: int = 200_000,
           seed: int = DEFAULT_SEED, brute_force: bool = False,
           interaction_cache: dict | None = None) -> EnergyBreakdown:
    """Evaluate I(W1, W2) for the configuration.

    Parameters
    ----------
    method : {'semi_analytic', 'monte_carlo'}
        ``semi_analytic`` integrates pair interactions and single-bubble potential
        terms by two-center quadrature and samples only the three-center and
        nonlinear remainders. ``monte_carlo`` samples everything beyond the
        isolated-bubble constants.
    """
    N, p, q = gs.N, gs.p, gs.q
    M = cfg.n_bubbles
    sb = single_bubble_constants(gs)
    leading = M * sb["half_A1"]
    sampler = default_sampler(cfg, gs)
    if method == "semi_analytic":
        pw = pairwise_interaction(cfg, gs, brute_force, interaction_cache)
        norms = np.linalg.norm(cfg.all_centers, axis=1)
        dev = {1: 0.0, 2: 0.0}
        dev_mu = {1: 0.0, 2: 0.0}
        rounded = np.round(norms, 12)
        for nv in np.unique(rounded):
            mult = int(np.sum(rounded == nv))
            for i, s in ((1, p), (2, q)):
                dev[i] += mult * potential_deviation(gs, pot, i, nv, cfg.Lambda, cfg.mu).value / (s + 1)
        if cfg.test_mode:
            dev_mu = dict(dev)
        else:
            for i, s in ((1, p), (2, q)):
                dev_mu[i] = M * potential_deviation(gs, pot, i, cfg.mu, cfg.Lambda, cfg.mu).value / (s + 1)
        quad_r = -(dev[1] - dev_mu[1]) - (dev[2] - dev_mu[2])
        if n_samples > 0 and M > 1:
            rem = mc_integral(lambda x: _remainder_integrand(x, cfg, pot, gs), sampler,
                              n_samples, seed)
            rem_val, rem_se, degenerate = rem.value, rem.stderr, rem.degenerate
        else:
            rem_val = rem_se = 0.0
            degenerate = False
        terms = dict(term_leading=leading, term_same_layer=-pw["same"],
                     term_cross_layer=-pw["cross"], term_K1_deviation=-dev_mu[1],
                     term_K2_deviation=-dev_mu[2], term_quadratic_in_r=quad_r,
                     remainder_budget=rem_val)
        total = sum(terms.values())
        return EnergyBreakdown(total=total, stderr=rem_se, method=method,
                               details={"quadrature_error": pw["err_same"] + pw["err_cross"],
                                        "degenerate": degenerate, **sb}, **terms)
    if method != "monte_carlo":
        raise ValueError(f"unknown method {method!r}")

    def integrand(x):
        F = _Fields(x, cfg, gs, want_layers=True)
        rad = np.sqrt((x ** 2).sum(axis=1)) / cfg.mu
        K1 = pot.value(1, rad)
        K2 = pot.value(2, rad)
        G = (F.W2 * F.Vp - F.Vp1
             - (K1 * F.W2 ** (p + 1) - F.Vp1) / (p + 1)
             - (K2 * F.W1 ** (q + 1) - F.Uq1) / (q + 1))
        same = -F.UqU_same
        cross = -F.UqU_cross
        d1 = (K1 - 1) * F.Vp1 / (p + 1)
        d2 = (K2 - 1) * F.Uq1 / (q + 1)
        rest = G - same - cross + d1 + d2
        return np.column_stack([G, same, cross, -d1, -d2, rest])

    res = mc_integral(integrand, sampler, n_samples, seed)
    G, same, cross, d1, d2, rest = res
    total = leading + G.value
    return EnergyBreakdown(total=total, term_leading=leading, term_same_layer=same.value,
                           term_cross_layer=cross.value, term_K1_deviation=d1.value,
                           term_K2_deviation=d2.value, term_quadratic_in_r=0.0,
                           remainder_budget=rest.value, stderr=G.stderr, method=method,
                           details={"stderr_terms": [r.stderr for r in res],
                                    "degenerate": any(r.degenerate for r in res), **sb})


# --------------------------------------------------------- residual and norms

def _bubble_table_sum(pts, cfg, gs, name, power):
    N = gs.N
    s = gs.q if name == "U" else gs.p
    amp = cfg.Lambda ** (N / (s + 1))
    return kernels.bubble_sum(np.ascontiguousarray(pts, dtype=float), cfg.all_centers,
                              cfg.Lambda, amp, float(power), *gs.table(name).args())


def residual_Rk(y, cfg: Configuration, pot: Potentials, gs: GroundStateProfile):
    """(R1, R2) = (K1 W2^p - sum V_j^p, K2 W1^q - sum U_j^q) at points y."""
    pts = np.atleast_2d(np.asarray(y, dtype=float))
    rad = np.sqrt((pts ** 2).sum(axis=1)) / cfg.mu
    W1 = _bubble_table_sum(pts, cfg, gs, "U", 1.0)
    W2 = _bubble_table_sum(pts, cfg, gs, "V", 1.0)
    Uq = _bubble_table_sum(pts, cfg, gs, "U", gs.q)
    Vp = _bubble_table_sum(pts, cfg, gs, "V", gs.p)
    R1 = pot.value(1, rad) * W2 ** gs.p - Vp
    R2 = pot.value(2, rad) * W1 ** gs.q - Uq
    return R1, R2


def weight(pts, cfg: Configuration, which: str, tau: float) -> np.ndarray:
    """sum_j (1 + |y - x_j|)^-e with e = (N-2)/2 + tau ('star') or (N+2)/2 + tau ('dblstar')."""
    N = cfg.N
    e = (N - 2) / 2 + tau if which == "star" else (N + 2) / 2 + tau
    pts = np.atleast_2d(pts)
    acc = np.zeros(pts.shape[0])
    for c in cfg.all_centers:
        acc += (1.0 + np.sqrt(((pts - c) ** 2).sum(axis=1))) ** (-e)
    return acc


def _directions(N: int, n: int = 64) -> np.ndarray:
    base = [np.eye(N)[i] * s for i in range(N) for s in (1.0, -1.0)]
    rng = np.random.default_rng(12345)
    extra = rng.standard_normal((max(n - len(base), 0), N))
    extra /= np.linalg.norm(extra, axis=1)[:, None]
    return np.vstack([np.array(base), extra])[:n]


def norm_sample_points(cfg: Configuration, n_dirs: int = 64, budget: int | None = None) -> np.ndarray:
    """Dyadic rings about x1_top and x1_bottom, segments to the nearest partners and
    far-field rays. Every bubble is equivalent under the symmetry group, so the
    rings about bubble 1 cover a fundamental domain."""
    N = cfg.N
    dirs = _directions(N, n_dirs)
    far = 4.0 * max(cfg.r, 1.0)
    radii = np.concatenate([[0.0], 2.0 ** np.arange(-4, math.ceil(math.log2(far)) + 1)])
    pts = []
    anchors = [cfg.centers_top[0]] + ([cfg.centers_bottom[0]] if cfg.centers_bottom.shape[0] else [])
    for a in anchors:
        pts.append((a[None, None, :] + radii[:, None, None] * dirs[None, :, :]).reshape(-1, N))
    partners = list(cfg.centers_top[1:3]) + list(cfg.centers_bottom[:2])
    s = np.linspace(0.0, 1.0, 129)
    for b in partners:
        pts.append(cfg.centers_top[0][None, :] + s[:, None] * (b - cfg.centers_top[0])[None, :])
    pts.append(np.zeros((1, N)))
    out = np.vstack(pts)
    if budget is not None and out.shape[0] > budget:
        idx = np.linspace(0, out.shape[0] - 1, budget).astype(int)
        out = out[idx]
    return out


@dataclass(frozen=True)
class NormEstimate:
    value: float
    argmax: np.ndarray
    n_points: int


def weighted_norm(field_fn, cfg: Configuration, which: str = "star", tau: float = 0.31,
                  sample_budget: int | None = None, points=None) -> NormEstimate:
    """Structured-sample estimate of sup |field| / weight (a lower bound of the true sup)."""
    pts = norm_sample_points(cfg, budget=sample_budget) if points is None else np.atleast_2d(points)
    vals = np.abs(np.asarray(field_fn(pts), dtype=float))
    ratio = vals / weight(pts, cfg, which, tau)
    i = int(np.argmax(ratio))
    return NormEstimate(float(ratio[i]), pts[i].copy(), pts.shape[0])


def residual_norm(cfg: Configuration, pot: Potentials, gs: GroundStateProfile, tau: float,
                  sample_budget: int | None = None) -> float:
    """||R_1||_** + ||R_2||_**."""
    pts = norm_sample_points(cfg, budget=sample_budget)
    R1, R2 = residual_Rk(pts, cfg, pot, gs)
    n1 = weighted_norm(lambda _: R1, cfg, "dblstar", tau, points=pts).value
    n2 = weighted_norm(lambda _: R2, cfg, "dblstar", tau, points=pts).value
    return n1 + n2


def nonlinear_remainder(y, cfg: Configuration, pot: Potentials, gs: GroundStateProfile,
                        phi2_value, w2_value=None):
    """K1(|y|/mu) ((W2+phi2)^p - W2^p - p W2^{p-1} phi2)."""
    pts = np.atleast_2d(np.asarray(y, dtype=float))
    phi = np.asarray(phi2_value, dtype=float) * np.ones(pts.shape[0])
    W = _bubble_table_sum(pts, cfg, gs, "V", 1.0) if w2_value is None else \
        np.asarray(w2_value, dtype=float) * np.ones(pts.shape[0])
    if np.any(W + phi < 0):
        raise DomainError("W2 + phi2 < 0: outside the positivity domain")
    p = gs.p
    x = np.where(W > 0, phi / np.where(W > 0, W, 1.0), np.inf)
    small = np.abs(x) < 1e-3
    series = p * (p - 1) / 2 * x ** 2 + p * (p - 1) * (p - 2) / 6 * x ** 3
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        direct = np.where(np.isfinite(x), np.expm1(p * np.log1p(x)) - p * x, 0.0)
        val = np.where(small, series, direct) * W ** p
    val = np.where(np.isfinite(x), val, np.abs(phi) ** p)
    rad = np.sqrt((pts ** 2).sum(axis=1)) / cfg.mu
    out = pot.value(1, rad) * val
    return out if np.ndim(y) > 1 else out[0]
