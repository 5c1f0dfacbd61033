"""Integration engines: radial panels with power tails, two-center (prolate) reduction,
and importance-sampled Monte Carlo with heavy-tailed bubble-centred proposals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

DEFAULT_SEED = 0x5EED


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def sphere_moment(N: int, a: float) -> float:
    """Integral of |omega_1|^a over the unit sphere S^{N-1}.

    Uses the Beta-function identity
    2 pi^{(N-1)/2} Gamma((a+1)/2) / Gamma((N+a)/2).
    """
    if a <= -1:
        raise DomainError("sphere moment diverges for a <= -1")
    return 2.0 * math.exp(0.5 * (N - 1) * math.log(math.pi)
                          + gammaln(0.5 * (a + 1)) - gammaln(0.5 * (N + a)))


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[n]


def _panel_values(g, a, b, order):
    x, w = gauss_legendre(order)
    h = b - a
    pts = a[:, None] + h[:, None] * x[None, :]
    vals = g(pts.ravel()).reshape(pts.shape)
    return (vals * w[None, :]).sum(axis=1) * h


def _adaptive_panels(g, edges, tol, order=20, max_rounds=12):
    """Panel-adaptive Gauss-Legendre; error from comparing each panel with its halves."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    for _ in range(max_rounds):
        mid = 0.5 * (a + b)
        whole = _panel_values(g, a, b, order)
        halves = _panel_values(g, a, mid, order) + _panel_values(g, mid, b, order)
        err = np.abs(whole - halves)
        total = halves.sum()
        bad = err > tol * max(abs(total), 1e-300) / max(len(a), 1) ** 0.5
        if err.sum() <= tol * abs(total) or not bad.any():
            return float(total), float(err.sum())
        na = np.concatenate([a[~bad], a[bad], mid[bad]])
        nb = np.concatenate([b[~bad], mid[bad], b[bad]])
        order_idx = np.argsort(na)
        a, b = na[order_idx], nb[order_idx]
    return float(total), float(err.sum())


def radial_edges(r_max: float, r_first: float = 1e-4, per_decade: int = 6) -> np.ndarray:
    n = max(int(math.ceil(per_decade * math.log10(r_max / r_first))), 1)
    return np.concatenate([[0.0], np.geomspace(r_first, r_max, n + 1)])


def radial_integral(f: Callable, N: int, a: float = 0.0, tol: float = 1e-12,
                    r_max: float = 1e3, tail: tuple[float, float] | None = None,
                    edges=None) -> QuadResult:
    """Integrate r^{N-1+a} f(r) over [0, inf).

    Parameters
    ----------
    f : callable
        Vectorized radial function.
    tail : (coef, power), optional
        Known asymptotics f ~ coef * r^-power beyond ``r_max``. When omitted the
        local power law at ``r_max`` is fitted from two samples.

    Notes
    -----
    The angular factor is not included.
    """
    w = N - 1 + a

    def g(r):
        return r ** w * f(r)

    if edges is None:
        edges = radial_edges(r_max)
    val, err = _adaptive_panels(g, edges, tol)
    if tail is None:
        f1, f2 = float(f(np.array([r_max / 1.1]))[0]), float(f(np.array([r_max]))[0])
        if f2 == 0.0:
            return QuadResult(val, err)
        if f1 == 0.0 or np.sign(f1) != np.sign(f2):
            raise DomainError("cannot fit a power tail at r_max")
        power = math.log(f1 / f2) / math.log(1.1)
        coef = f2 * r_max ** power
    else:
        coef, power = tail
    if coef == 0.0:
        return QuadResult(val, err)
    if power <= N + a:
        raise DomainError(f"non-integrable tail: decay r^-{power:.4g} with weight r^{w:.4g}")
    tail_val = coef * r_max ** (N + a - power) / (power - N - a)
    return QuadResult(val + tail_val, err + (abs(tail_val) * 1e-3 if tail is None else 0.0))


@dataclass(frozen=True)
class BipolarKernel:
    """Two-focus integrand F(s, t), s and t the distances to foci at separation d."""

    d: float
    N: int
    integrand: Callable


def _graded_breaks(lo, hi, smallest, ratio=2.5, interior=4):
    """Breakpoints geometrically graded towards ``lo``."""
    pts = [lo]
    x = smallest
    while lo + x < hi / ratio:
        pts.append(lo + x)
        x *= ratio
    tail = np.linspace(pts[-1], hi, interior + 1)[1:]
    return np.concatenate([pts, tail])


def _prolate_breaks(d, core, far):
    # theta panels graded to both ends (the two foci)
    eps_th = min(1e-6, 1e-3 * math.sqrt(core / d) if d > core else 1e-6)
    half = _graded_breaks(0.0, 0.5 * math.pi, eps_th, interior=3)
    theta = np.concatenate([half, math.pi - half[::-1][1:]])
    # w from 0 (focal segment) outwards, graded at 0 and log-spaced for the far field
    w_far = math.acosh(max(2.0 * far / d, 1.0 + 1e-12))
    w_core = max(2.0 * math.sqrt(core / d), 1e-6) if d > core else 1.0
    inner = _graded_breaks(0.0, min(w_core, w_far), min(1e-6, 1e-3 * w_core), interior=3)
    outer = np.linspace(inner[-1], w_far, max(int(math.ceil((w_far - inner[-1]) / 0.35)), 1) + 1)
    w = np.concatenate([inner, outer[1:]])
    return w, theta


def _prolate_sum(kern, wb, tb, order):
    d, N = kern.d, kern.N
    x, wt = gauss_legendre(order)
    W = (wb[:-1, None] + np.diff(wb)[:, None] * x[None, :]).ravel()
    WW = (np.diff(wb)[:, None] * wt[None, :]).ravel()
    T = (tb[:-1, None] + np.diff(tb)[:, None] * x[None, :]).ravel()
    TW = (np.diff(tb)[:, None] * wt[None, :]).ravel()
    ch, sh = np.cosh(W)[:, None], np.sinh(W)[:, None]
    ct, st = np.cos(T)[None, :], np.sin(T)[None, :]
    s = 0.5 * d * (ch + ct)
    t = 0.5 * d * (ch - ct)
    jac = (sh * st) ** (N - 2) * (ch * ch - ct * ct)
    vals = kern.integrand(s, t) * jac
    total = WW @ vals @ TW
    return sphere_area(N - 1) * (0.5 * d) ** N * total


def bipolar_integral(kern: BipolarKernel, tol: float = 1e-10, core: float = 1.0,
                     far: float | None = None, order: int = 12) -> QuadResult:
    """Integrate F(|y-a|, |y-b|) over R^N with |a-b| = d.

    Works in prolate coordinates s = d(cosh w + cos th)/2, t = d(cosh w - cos th)/2,
    where the volume element is
    |S^{N-2}| (d/2)^N (sinh w sin th)^{N-2} (cosh^2 w - cos^2 th) dw dth.
    Panels are graded towards both foci; the error estimate is the change under
    doubling the number of points per panel direction.

    Parameters
    ----------
    core : float
        Length scale of the integrand cores (sets the grading depth).
    far : float, optional
        Outer cutoff radius; defaults to ``1e6 * max(d, core)``.
    """
    d = float(kern.d)
    if not d > 0:
        raise DomainError("degenerate foci: use radial_integral for d <= 0")
    if far is None:
        far = 1e6 * max(d, core)
    wb, tb = _prolate_breaks(d, core, far)
    v1 = _prolate_sum(kern, wb, tb, order)
    v2 = _prolate_sum(kern, wb, tb, order + order // 2)
    return QuadResult(float(v2), float(abs(v2 - v1)))


class HeavyTailMixture:
    """Uniform mixture of isotropic multivariate Student-t laws.

    Parameters
    ----------
    centers : (M, N) array
    scale : float
        Common scale of each component.
    nu : float
        Degrees of freedom; the density tail decays like |x|^-(nu+N).
    """

    def __init__(self, centers, scale: float, nu: float):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.scale = float(scale)
        self.nu = float(nu)
        M, N = self.centers.shape
        self.N = N
        self._logc = (gammaln(0.5 * (nu + N)) - gammaln(0.5 * nu)
                      - 0.5 * N * math.log(nu * math.pi) - N * math.log(self.scale))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        M, N = self.centers.shape
        idx = rng.integers(0, M, size=n)
        z = rng.standard_normal((n, N))
        chi = rng.chisquare(self.nu, size=n)
        return self.centers[idx] + self.scale * z * np.sqrt(self.nu / chi)[:, None]

    def pdf(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        acc = np.zeros(x.shape[0])
        for c in self.centers:
            r2 = ((x - c) ** 2).sum(axis=1) / (self.nu * self.scale ** 2)
            acc += np.exp(self._logc - 0.5 * (self.nu + self.N) * np.log1p(r2))
        return acc / len(self.centers)


@dataclass(frozen=True)
class MCResult:
    value: float
    stderr: float
    ess: float
    n: int
    degenerate: bool

    @property
    def values(self):
        return np.atleast_1d(self.value)


def mc_integral(integrand: Callable, sampler: HeavyTailMixture, n_samples: int,
                seed: int = DEFAULT_SEED, batch: int = 1 << 16):
    """Importance-sampling estimate of one or several integrals sharing a proposal.

    ``integrand(points)`` returns an array of shape (n,) or (n, j). The estimate is
    the mean of f/g under the normalized proposal g; the standard error is the
    sample standard deviation over sqrt(n). The result is flagged degenerate
    when the effective sample size (sum|w|)^2 / sum w^2 of any column falls
    below 1% of ``n``.

    Returns
    -------
    MCResult or list of MCResult
    """
    rng = np.random.default_rng(seed)
    s1 = s2 = sa = None
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        x = sampler.sample(m, rng)
        fx = np.asarray(integrand(x), dtype=float)
        w = fx / (sampler.pdf(x) if fx.ndim == 1 else sampler.pdf(x)[:, None])
        if s1 is None:
            s1, s2, sa = w.sum(axis=0), (w * w).sum(axis=0), np.abs(w).sum(axis=0)
        else:
            s1 = s1 + w.sum(axis=0)
            s2 = s2 + (w * w).sum(axis=0)
            sa = sa + np.abs(w).sum(axis=0)
        done += m
    n = n_samples
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    se = np.sqrt(var / n)
    ess = np.where(s2 > 0, sa * sa / np.where(s2 > 0, s2, 1.0), float(n))
    res = [MCResult(float(mv), float(sv), float(ev), n, bool(ev < 0.01 * n))
           for mv, sv, ev in zip(np.atleast_1d(mean), np.atleast_1d(se), np.atleast_1d(ess))]
    return res[0] if np.ndim(mean) == 0 else res


def shell_integral(f_origin: Callable, g_focus: Callable, d: float, N: int,
                   rho_breaks=(), core: float = 1.0, order: int = 16,
                   far: float | None = None) -> QuadResult:
    """Integrate f(|y|) g(|y - b|) over R^N with |b| = d.

    Outer integral over shells rho = |y| with panels aligned to ``rho_breaks``
    (kinks of f) and graded around rho = d (the core of g); inner integral over
    the polar angle theta between y and b, graded towards theta = 0. Suited to
    integrands where f has kinks on spheres about the origin.
    """
    d = float(d)
    if far is None:
        far = d + 1e5 * core
    br = [0.0, far]
    br += [b for b in rho_breaks if 0.0 < b < far]
    # grading around the focus sphere rho = d
    if d > 0:
        for s in core * np.geomspace(1e-4, 1e3, 22):
            for v in (d - s, d + s):
                if 0.0 < v < far:
                    br.append(v)
        br.append(d)
    for s in core * np.geomspace(1e-3, 1e5, 25):
        if s < far:
            br.append(s)
    br = np.unique(np.asarray(br))
    x, w = gauss_legendre(order)
    rho = (br[:-1, None] + np.diff(br)[:, None] * x[None, :]).ravel()
    wr = (np.diff(br)[:, None] * w[None, :]).ravel()
    th_min = min(1e-3, 1e-3 * core / d) if d > 0 else 1e-3
    tb = np.unique(np.concatenate([[0.0], np.geomspace(th_min, 0.5, 18), np.linspace(0.5, np.pi, 9)]))
    th = (tb[:-1, None] + np.diff(tb)[:, None] * x[None, :]).ravel()
    wt = (np.diff(tb)[:, None] * w[None, :]).ravel()

    def run(rho, wr, th, wt):
        R, C = rho[:, None], np.cos(th)[None, :]
        t = np.sqrt(np.maximum(R * R + d * d - 2 * R * d * C, 0.0))
        inner = (g_focus(t) * np.sin(th)[None, :] ** (N - 2)) @ wt
        return sphere_area(N - 1) * float(np.sum(wr * f_origin(rho) * rho ** (N - 1) * inner))

    v1 = run(rho, wr, th, wt)
    x2, w2 = gauss_legendre(order + order // 2)
    rho2 = (br[:-1, None] + np.diff(br)[:, None] * x2[None, :]).ravel()
    wr2 = (np.diff(br)[:, None] * w2[None, :]).ravel()
    th2 = (tb[:-1, None] + np.diff(tb)[:, None] * x2[None, :]).ravel()
    wt2 = (np.diff(tb)[:, None] * w2[None, :]).ravel()
    v2 = run(rho2, wr2, th2, wt2)
    return QuadResult(v2, abs(v2 - v1))
