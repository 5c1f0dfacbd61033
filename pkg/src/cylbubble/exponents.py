"""Exponent and potential parameters, their admissibility constraints and the scale mu."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

from .errors import DomainError

DEFAULT_EPS = 1e-9


def conjugate_exponent(N: int, p: float) -> float:
    """Return q with 1/(p+1) + 1/(q+1) = (N-2)/N.

    The relation is symmetric, so the same function maps q back to p.
    """
    if N < 3:
        raise DomainError(f"dimension N={N} must be >= 3")
    denom = (N - 2) / N - 1.0 / (p + 1.0)
    if not denom > 0:
        raise DomainError(f"p={p} too small for N={N}: no conjugate exponent")
    return 1.0 / denom - 1.0


@dataclass(frozen=True)
class ExponentSet:
    """Dimension, exponent pair and potential shape parameters.

    Attributes
    ----------
    N : int
        Space dimension.
    p, q : float
        Exponents on the critical hyperbola.
    m1, m2 : float
        Flatness orders of the potentials K1, K2 at their peak.
    theta1, theta2 : float
        Remainder exponents of the potentials (recorded, not used numerically).
    c1, c2 : float
        Potential depth coefficients.
    r0 : float
        Radius of the potential peak.
    delta : float
        Half-width of the window where K_i has its exact power form.
    tau : float
        Weighted-norm exponent.
    """

    N: int = 5
    p: float = field(default_factory=lambda: conjugate_exponent(5, 2.45))
    q: float = 2.45
    m1: float = 2.5
    m2: float = 2.5
    theta1: float = 0.5
    theta2: float = 0.5
    c1: float = 1.0
    c2: float = 1.0
    r0: float = 1.0
    delta: float = 0.5
    tau: float = 0.31

    @property
    def m(self) -> float:
        return min(self.m1, self.m2)

    @property
    def theta(self) -> float:
        return min(self.theta1, self.theta2)

    @classmethod
    def from_q(cls, q: float, N: int = 5, **kw) -> "ExponentSet":
        """Build a set with p taken from the hyperbola."""
        return cls(N=N, p=conjugate_exponent(N, q), q=q, **kw)

    def with_(self, **kw) -> "ExponentSet":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("N", "p", "q", "m1", "m2", "theta1", "theta2",
                 "c1", "c2", "r0", "delta", "tau")}


def default_exponents() -> ExponentSet:
    return ExponentSet()


def tau_lower_bound(es: ExponentSet) -> tuple[float, float]:
    """Lower bound on tau from the norm-weight constraint.

    Returns
    -------
    (raw, floor) : tuple of float
        The raw bound and ``max(raw, 0)``, the usable floor.
    """
    if not es.p > 1:
        raise DomainError("tau bound requires p > 1")
    N, m, p = es.N, es.m, es.p
    raw = (N - 2 - m) / (N - 2) + 2.0 / (p - 1.0) - (N - 2) / 2.0
    return raw, max(raw, 0.0)


def p_lower_bounds(es: ExponentSet) -> tuple[float, float, float]:
    N, m, tau = es.N, es.m, es.tau
    b1 = (N + 1) / (N - 2)
    b2 = N * (N - 2) / ((N - 2) ** 2 - (N - 2 - m))
    b3 = ((m + 1) / (2 * m) + tau / (N - 2) + (N + 2) / (2 * (N - 2))
          + (N - 3) * (N - 2 - m) / (2 * m * (N - 1) * (N - 2)))
    return b1, b2, b3


def q_lower_bounds(es: ExponentSet) -> tuple[float, float]:
    N, m = es.N, es.m
    crit = (N + 2) / (N - 2)
    return (crit + (N - 2 - m) / (N - 2) ** 2,
            crit + 2 * (N - 2 - m) / (m * (N - 1) * (N - 2)))


def m_plus_bounds(es: ExponentSet) -> tuple[float, float, float]:
    """(two lower bounds, upper bound) on m coupled to tau."""
    N, tau = es.N, es.tau
    lo1 = (2 * N * N - 4 * N + 4) / (5 * N - 7 - 2 * (N - 1) * tau)
    lo2 = 2 * (N - 2) ** 2 / (N * N - 2 * N - 1)
    hi = (N - 2) * (N * N - N + 2 - 2 * (N - 1) * tau) / (N * N - 4 * N + 5)
    return lo1, lo2, hi


def beta_window(es: ExponentSet) -> tuple[float, float]:
    """Open interval of admissible residual-decay exponents beta.

    The interval may be empty (``lo >= hi``).
    """
    N, m, p, tau = es.N, es.m, es.p, es.tau
    g = (N - 3) * (N - 2 - m) / ((N - 1) * (N - 2))
    lo = max(m / 2 + g, (m + 1) / 2 + g / 2)
    hi = min(m, p * (N - 2) - (N + 2) / 2 - tau)
    return lo, hi


def residual_rate_exponent(es: ExponentSet) -> float:
    """Exponent of k/mu in the residual bound: p(N-2) - (N+2)/2 - tau."""
    return es.p * (es.N - 2) - (es.N + 2) / 2 - es.tau


@dataclass(frozen=True)
class ConstraintMargin:
    name: str
    margin: float
    strict: bool
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    margins: tuple[ConstraintMargin, ...]
    eps: float

    def failures(self) -> list[ConstraintMargin]:
        return [c for c in self.margins if not c.passed]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["constraint", "margin", "strict", "passed"])
        for c in self.margins:
            w.writerow([c.name, repr(float(c.margin)), int(c.strict), int(c.passed)])
        return buf.getvalue()


def validate_parameters(es: ExponentSet, eps: float = DEFAULT_EPS) -> ValidationReport:
    """Evaluate every admissibility constraint and report signed margins.

    Strict inequalities pass when their margin exceeds ``eps``; non-strict ones
    when the margin is at least ``-eps``.
    """
    out: list[ConstraintMargin] = []

    def add(name, margin, strict=True):
        margin = float(margin)
        ok = math.isfinite(margin) and (margin > eps if strict else margin >= -eps)
        out.append(ConstraintMargin(name, margin, strict, ok))

    N, p, q, m = es.N, es.p, es.q, es.m
    crit = (N + 2) / (N - 2) if N > 2 else math.inf
    add("dimension N>=5", N - 5, strict=False)
    add("finite fields", 0.0 if all(math.isfinite(v) for v in es.as_dict().values()) else -1.0,
        strict=False)
    if N < 3 or not (p > 1 and q > 1):
        add("p,q>1", min(p, q) - 1)
        return ValidationReport(False, tuple(out), eps)
    add("hyperbola", 1e-12 - abs(1 / (p + 1) + 1 / (q + 1) - (N - 2) / N), strict=False)
    add("p<=(N+2)/(N-2)", crit - p, strict=False)
    add("q>=(N+2)/(N-2)", q - crit, strict=False)
    for i, b in enumerate(p_lower_bounds(es), 1):
        add(f"p>bound{i}", p - b)
    for i, b in enumerate(q_lower_bounds(es), 1):
        add(f"q>bound{i}", q - b)
    if N in (5, 6):
        add("m>=2", m - 2, strict=False)
    else:
        add("m>2(N-2)^2/(2N-3)", m - 2 * (N - 2) ** 2 / (2 * N - 3))
    add("m<N-2", N - 2 - m)
    for name, mi in (("m1", es.m1), ("m2", es.m2)):
        add(f"{name}>=2", mi - 2, strict=False)
        add(f"{name}<N-2", N - 2 - mi)
    lo1, lo2, hi = m_plus_bounds(es)
    add("m>m+bound1", m - lo1)
    add("m>m+bound2", m - lo2)
    add("m<m+upper", hi - m)
    add("tau>=lower", es.tau - tau_lower_bound(es)[0], strict=False)
    add("tau>0", es.tau)
    add("c1>0", es.c1)
    add("c2>0", es.c2)
    add("r0>0", es.r0)
    add("delta>0", es.delta)
    add("theta>0", es.theta)
    passed = all(c.passed for c in out)
    return ValidationReport(passed, tuple(out), eps)


def mu(k: float, es: ExponentSet) -> float:
    """Scale k^{(N-2)/(N-2-m)} tying the cylinder radius to the bubble count."""
    if k < 1:
        raise DomainError("k must be >= 1")
    gap = es.N - 2 - es.m
    if gap <= 0:
        raise DomainError("m >= N-2: scale exponent blows up")
    return float(k) ** ((es.N - 2) / gap)
