"""Named constants of the reduced-energy expansion.

Moment constants come from quadrature on the ground state, the lattice
constants B1, B2 from extrapolated polygon sums, the rest from closed formulas.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy.special import gamma, zeta

from . import kernels
from .errors import AmbiguityError, DiagnosticsError, DomainError
from .exponents import ExponentSet
from .ground_state import GroundStateProfile, moment

LATTICE_KS = (500, 1000, 2000, 4000)
CASE_M1, CASE_M2, CASE_EQUAL = "m1<m2", "m2<m1", "m1=m2"


@dataclass(frozen=True)
class Provenance:
    method: str
    error: float = 0.0
    note: str = ""


@dataclass(frozen=True)
class ConstantTable:
    """All expansion constants; ``None`` marks a value not yet derived."""

    N: int
    B0: float | None = None
    B1: float | None = None
    B2: float | None = None
    B4: float | None = None
    B5: float | None = None
    B6: float | None = None
    B7: float | None = None
    Bprime: float | None = None
    A1: float | None = None
    A2: float | None = None
    A2bar: float | None = None
    A3: float | None = None
    A3bar: float | None = None
    Lambda0: float | None = None
    lambda0_case: str | None = None
    provenance: dict = field(default_factory=dict, compare=False)

    VALUE_FIELDS = ("B0", "B1", "B2", "B4", "B5", "B6", "B7", "Bprime",
                    "A1", "A2", "A2bar", "A3", "A3bar", "Lambda0")

    def is_complete(self) -> bool:
        return all(getattr(self, f) is not None for f in self.VALUE_FIELDS)

    def with_(self, **kw) -> "ConstantTable":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "provenance"}
        out["provenance"] = {k: asdict(v) for k, v in self.provenance.items()}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ConstantTable":
        prov = {k: Provenance(**v) for k, v in d.get("provenance", {}).items()}
        kw = {k: v for k, v in d.items() if k != "provenance"}
        return cls(provenance=prov, **kw)

    def a2_effective(self, case: str | None = None) -> float:
        """Coefficient of the leading potential term at order mu^-m."""
        case = case or self.lambda0_case
        return {CASE_M1: self.A2bar, CASE_M2: self.A2,
                CASE_EQUAL: self.A2 + self.A2bar}[case]

    def a3_effective(self, case: str | None = None) -> float:
        case = case or self.lambda0_case
        return {CASE_M1: self.A3bar, CASE_M2: self.A3,
                CASE_EQUAL: self.A3 + self.A3bar}[case]


def compute_base_constants(gs: GroundStateProfile, es: ExponentSet) -> ConstantTable:
    """Quadrature constants B0, A1, A2, A2bar, A3, A3bar.

    B0 is the far-field interaction coefficient b_u * int U^q, so that
    int U^q(z) U(z - D e) dz ~ B0 / D^{N-2}; the bare integral is kept in
    the provenance record.
    """
    N, p, q = es.N, es.p, es.q
    err = gs.moment_cache

    def mom(c, s, a=0.0):
        v = moment(gs, c, s, a)
        return v, err.get((c, float(s), float(a), "error"), 0.0)

    intUq, eUq = mom("U", q)
    PV, ePV = mom("V", p + 1)
    PU, ePU = mom("U", q + 1)
    A1 = 2.0 * ((1 - 1 / (p + 1)) * PV - PU / (q + 1))
    A1_identity = 4.0 / N * PV
    mU2, e2 = mom("U", q + 1, es.m2)
    mV1, e1 = mom("V", p + 1, es.m1)
    mU2b, e2b = mom("U", q + 1, es.m2 - 2)
    mV1b, e1b = mom("V", p + 1, es.m1 - 2)
    A2 = 2 * es.c2 / (q + 1) * mU2
    A2bar = 2 * es.c1 / (p + 1) * mV1
    A3 = es.c2 * es.m2 * (es.m2 - 1) / (q + 1) * mU2b
    A3bar = es.c1 * es.m1 * (es.m1 - 1) / (p + 1) * mV1b
    B0 = gs.b_u * intUq
    prov = {
        "B0": Provenance("quadrature", B0 * (eUq / intUq + 1e-10),
                         f"b_u={float(gs.b_u)!r}; int U^q={float(intUq)!r}"),
        "A1": Provenance("quadrature", float(abs(A1 - A1_identity) + ePV + ePU),
                         f"hyperbola identity (4/N) int V^(p+1) = {float(A1_identity)!r}"),
        "A2": Provenance("quadrature", 2 * es.c2 / (q + 1) * e2),
        "A2bar": Provenance("quadrature", 2 * es.c1 / (p + 1) * e1),
        "A3": Provenance("quadrature", abs(es.c2 * es.m2 * (es.m2 - 1) / (q + 1)) * e2b),
        "A3bar": Provenance("quadrature", abs(es.c1 * es.m1 * (es.m1 - 1) / (p + 1)) * e1b),
    }
    return ConstantTable(N=N, B0=B0, A1=A1, A2=A2, A2bar=A2bar, A3=A3, A3bar=A3bar,
                         provenance=prov)


def b1_closed_form(N: int) -> float:
    """2 zeta(N-2) / (2 pi)^{N-2}: nearest-neighbour asymptotics of the polygon sum."""
    return 2.0 * zeta(N - 2) / (2 * math.pi) ** (N - 2)


def b2_closed_form(N: int) -> float:
    """Continuum limit of the cross-layer sum: Gamma((N-3)/2) / (2^{N-2} sqrt(pi) Gamma((N-2)/2))."""
    return gamma((N - 3) / 2) / (2 ** (N - 2) * math.sqrt(math.pi) * gamma((N - 2) / 2))


def b1_partial(N: int, k: int) -> float:
    return kernels.polygon_sum(int(k), 0.0, float(N - 2), False) / float(k) ** (N - 2)


def b2_partial(N: int, k: int, h: float) -> float:
    s = kernels.polygon_sum(int(k), float(h), float(N - 2), True)
    return s * h ** (N - 3) * math.sqrt(1 - h * h) / k


def _richardson(ks, vals, rate):
    """Pairwise Richardson estimates for v(k) = v + c k^-rate."""
    out = []
    for (k1, v1), (k2, v2) in zip(zip(ks, vals), zip(ks[1:], vals[1:])):
        w = (k2 / k1) ** rate
        out.append((w * v2 - v1) / (w - 1))
    return out


@dataclass(frozen=True)
class LatticeResult:
    B1: float
    B2: float
    Bprime_ratio: float
    diagnostics: dict


def lattice_constants(N: int, ks=LATTICE_KS, rel_tol: float = 5e-3,
                      c_tol: float = 1e-2) -> LatticeResult:
    """B1 and B2 from direct polygon sums with Richardson extrapolation.

    B2 is evaluated along h = c k^{-(N-3)/(N-1)} for three values of c centred
    on B', after one self-consistent pass that fixes B'.

    Raises
    ------
    DiagnosticsError
        When successive extrapolants differ by more than ``rel_tol`` or the
        three c-branches of B2 disagree by more than ``c_tol``.
    """
    if N < 5:
        raise DomainError("lattice constants need N >= 5")
    ks = tuple(int(k) for k in ks)
    b1_raw = [b1_partial(N, k) for k in ks]
    b1_ext = _richardson(ks, b1_raw, 2.0)
    spread1 = max(abs(a / b - 1) for a, b in zip(b1_ext, b1_ext[1:])) if len(b1_ext) > 1 else 0.0
    B1 = b1_ext[-1]
    e = (N - 3) / (N - 1)
    rate2 = 2 * e

    def b2_along(c):
        raw = [b2_partial(N, k, c * k ** -e) for k in ks]
        ext = _richardson(ks, raw, rate2)
        spread = max(abs(a / b - 1) for a, b in zip(ext, ext[1:])) if len(ext) > 1 else 0.0
        return ext[-1], raw, spread

    b2_first, _, _ = b2_along(1.0)
    ratio = ((N - 3) * b2_first / ((N - 2) * B1)) ** (1 / (N - 1))
    branches = {}
    for c in (0.5 * ratio, ratio, 2.0 * ratio):
        branches[c] = b2_along(c)
    vals = [v[0] for v in branches.values()]
    B2 = vals[1]
    c_spread = (max(vals) - min(vals)) / B2
    spread2 = max(v[2] for v in branches.values())
    ratio = ((N - 3) * B2 / ((N - 2) * B1)) ** (1 / (N - 1))
    diag = {"ks": ks, "B1_raw": b1_raw, "B1_richardson": b1_ext, "B1_spread": spread1,
            "B2_branches": {repr(c): v[0] for c, v in branches.items()},
            "B2_spread": spread2, "B2_c_spread": c_spread,
            "B1_closed_form": float(b1_closed_form(N)),
            "B2_closed_form": float(b2_closed_form(N))}
    if spread1 > rel_tol or spread2 > rel_tol:
        raise DiagnosticsError(f"lattice extrapolation not converged: {spread1:.3g}, {spread2:.3g}")
    if c_spread > c_tol:
        raise DiagnosticsError(f"B2 depends on the h-scaling: spread {c_spread:.3g}")
    return LatticeResult(B1, B2, ratio, diag)


def select_case(es: ExponentSet, tol: float = 1e-9) -> str:
    if es.m1 == es.m2:
        return CASE_EQUAL
    if abs(es.m1 - es.m2) <= tol:
        raise AmbiguityError(
            f"m1={es.m1!r} and m2={es.m2!r} agree within {tol:g}; pass the case explicitly")
    return CASE_M1 if es.m1 < es.m2 else CASE_M2


def lambda0(B4: float, A2: float, A2bar: float, N: int, m: float, case: str) -> float:
    a = {CASE_M1: A2bar, CASE_M2: A2, CASE_EQUAL: A2 + A2bar}[case]
    return ((N - 2) * B4 / (m * a)) ** (1 / (N - 2 - m))


def derive_constants(base: ConstantTable, es: ExponentSet, case: str | None = None,
                     lattice: LatticeResult | None = None) -> ConstantTable:
    """Fill B4-B7, B', Lambda0 from the base constants and the lattice sums."""
    N = es.N
    if lattice is None and (base.B1 is None or base.B2 is None):
        lattice = lattice_constants(N)
    prov = dict(base.provenance)
    B1 = base.B1 if lattice is None else lattice.B1
    B2 = base.B2 if lattice is None else lattice.B2
    if lattice is not None:
        d = lattice.diagnostics
        prov["B1"] = Provenance("lattice-sum", abs(B1) * d["B1_spread"],
                                f"closed form {float(d['B1_closed_form'])!r}")
        prov["B2"] = Provenance("lattice-sum", abs(B2) * max(d["B2_spread"], d["B2_c_spread"]),
                                f"closed form {float(d['B2_closed_form'])!r}")
    for name in ("B0", "A1", "A2", "A2bar", "A3", "A3bar"):
        if getattr(base, name) is None:
            raise DomainError(f"base constant {name} missing")
    if case is None:
        case = select_case(es)
    B0 = base.B0
    B4 = 2 * B0 * B1
    B5 = 2 * B0 * B2
    Bp = ((N - 3) * B5 / ((N - 2) * B4)) ** (1 / (N - 1))
    B6 = (N - 2) * B4 * Bp ** 2 / 2
    B7 = (N - 2) / 2 * (B4 * Bp ** 2 + (N - 3) * B5 / Bp ** (N - 3))
    L0 = lambda0(B4, base.A2, base.A2bar, N, es.m, case)
    for name in ("B4", "B5", "Bprime", "B6", "B7", "Lambda0"):
        prov[name] = Provenance("closed-form")
    tab = replace(base, B1=B1, B2=B2, B4=B4, B5=B5, B6=B6, B7=B7, Bprime=Bp, Lambda0=L0,
                  lambda0_case=case, provenance=prov)
    check_positive(tab)
    return tab


def check_positive(tab: ConstantTable) -> None:
    bad = [f for f in ConstantTable.VALUE_FIELDS
           if f not in ("A2", "A2bar", "A3", "A3bar") and getattr(tab, f) is not None
           and not getattr(tab, f) > 0]
    if bad:
        raise DomainError(f"constants not positive: {bad}")


def h_star(k: float, table: ConstantTable) -> float:
    """Optimal height B' k^{-(N-3)/(N-1)}."""
    N = table.N
    return table.Bprime * float(k) ** (-(N - 3) / (N - 1))


def build_constant_table(gs: GroundStateProfile, es: ExponentSet,
                         case: str | None = None) -> ConstantTable:
    return derive_constants(compute_base_constants(gs, es), es, case)
