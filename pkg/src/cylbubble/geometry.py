"""Double-polygon bubble configurations on a cylinder and the parameter regions."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import ConstantTable, h_star
from .errors import DomainError
from .exponents import ExponentSet, mu as mu_scale

DEFAULT_SIGMA_HAT = 0.1
DEFAULT_VARTHETA1 = 0.05
DEFAULT_VARTHETA2 = 0.2


def polygon_centers(k: int, r: float, h: float, N: int, sign: float = 1.0) -> np.ndarray:
    """Centers r(sqrt(1-h^2) cos t_j, sqrt(1-h^2) sin t_j, sign*h, 0...) with t_j = 2 pi j / k."""
    t = 2.0 * np.pi * np.arange(k) / k
    c = np.zeros((k, N))
    s = math.sqrt(1.0 - h * h)
    c[:, 0] = r * s * np.cos(t)
    c[:, 1] = r * s * np.sin(t)
    c[:, 2] = sign * r * h
    return c


@dataclass(frozen=True, eq=False)
class Configuration:
    """2k bubble centers with common concentration rate Lambda.

    ``mu`` is the scale entering the potentials K_i(|y|/mu). In test mode it is
    set to r so that the bubble centers sit on the potential peak r0 = 1.
    """

    k: int
    r: float
    h: float
    Lambda: float
    mu: float
    N: int
    test_mode: bool
    centers_top: np.ndarray
    centers_bottom: np.ndarray
    same_layer: np.ndarray = field(repr=False)
    cross_layer: np.ndarray = field(repr=False)

    @property
    def all_centers(self) -> np.ndarray:
        return np.vstack([self.centers_top, self.centers_bottom])

    @property
    def n_bubbles(self) -> int:
        return self.centers_top.shape[0] + self.centers_bottom.shape[0]

    @property
    def is_symmetric(self) -> bool:
        """True for the full two-layer family where all bubbles are equivalent."""
        return self.centers_bottom.shape[0] == self.k and self.centers_top.shape[0] == self.k


def _distances(top, bottom):
    x1 = top[0]
    same = np.sqrt(((top - x1) ** 2).sum(axis=1))
    cross = np.sqrt(((bottom - x1) ** 2).sum(axis=1)) if bottom.shape[0] else np.zeros(0)
    return same, cross


def build_configuration(k: int, r: float, h: float, Lambda: float, es: ExponentSet,
                        test_mode: bool = False) -> Configuration:
    """Two k-gons at heights +-r h on the sphere of radius r."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if not 0.0 < h < 1.0:
        raise DomainError(f"h={h} outside (0, 1)")
    if not r > 0 or not Lambda > 0:
        raise DomainError("r and Lambda must be positive")
    N = es.N
    top = polygon_centers(k, r, h, N, 1.0)
    bot = polygon_centers(k, r, h, N, -1.0)
    same, cross = _distances(top, bot)
    m = r if test_mode else mu_scale(k, es)
    return Configuration(int(k), float(r), float(h), float(Lambda), float(m), N, bool(test_mode),
                         top, bot, same, cross)


def isolated_configuration(es: ExponentSet, Lambda: float = 1.0, center=None,
                           mu: float = 1.0) -> Configuration:
    """A single bubble (degenerate configuration) used by oracle checks."""
    N = es.N
    c = np.zeros((1, N)) if center is None else np.asarray(center, dtype=float).reshape(1, N)
    r = float(np.linalg.norm(c[0]))
    return Configuration(1, r, 0.0, float(Lambda), float(mu), N, True, c, np.zeros((0, N)),
                         np.zeros(1), np.zeros(0))


def distance_profile(cfg: Configuration) -> tuple[np.ndarray, np.ndarray]:
    """(|x1 - x_j| for the same layer, |x1 - x_j| for the other layer), j = 1..k."""
    return cfg.same_layer.copy(), cfg.cross_layer.copy()


def dump_csv(cfg: Configuration) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["layer", "j"] + [f"y{i + 1}" for i in range(cfg.N)]
               + ["dist_to_top1"])
    same, cross = distance_profile(cfg)
    for layer, cs, ds in (("top", cfg.centers_top, same), ("bottom", cfg.centers_bottom, cross)):
        for j, (c, d) in enumerate(zip(cs, ds), 1):
            w.writerow([layer, j] + [repr(float(v)) for v in c] + [repr(float(d))])
    return buf.getvalue()


@dataclass(frozen=True)
class ParameterRegion:
    """Box in (r, h, Lambda) for a fixed k."""

    kind: str
    k: int
    r_bounds: tuple[float, float]
    h_bounds: tuple[float, float]
    L_bounds: tuple[float, float]
    center: tuple[float, float, float]
    params: dict = field(default_factory=dict)

    @property
    def half_widths(self) -> tuple[float, float, float]:
        return tuple(0.5 * (b[1] - b[0]) for b in (self.r_bounds, self.h_bounds, self.L_bounds))


@dataclass(frozen=True)
class RegionMembership:
    inside: bool
    margins: dict

    @property
    def min_margin(self) -> float:
        return min(self.margins.values())


def wpk_region(k: int, table: ConstantTable, es: ExponentSet,
               sigma_hat: float = DEFAULT_SIGMA_HAT) -> ParameterRegion:
    m = mu_scale(k, es)
    H = h_star(k, table)
    L0 = table.Lambda0
    return ParameterRegion("wpk", int(k), (m - sigma_hat, m + sigma_hat),
                           (H * (1 - sigma_hat), H * (1 + sigma_hat)),
                           (L0 - sigma_hat, L0 + sigma_hat), (m, H, L0),
                           {"sigma_hat": sigma_hat})


def sk_region(k: int, table: ConstantTable, es: ExponentSet,
              vartheta2: float = DEFAULT_VARTHETA2) -> ParameterRegion:
    m = mu_scale(k, es)
    H = h_star(k, table)
    L0 = table.Lambda0
    wr = float(k) ** -vartheta2
    wl = float(k) ** (-1.5 * vartheta2)
    return ParameterRegion("sk", int(k), (m - wr, m + wr), (H * (1 - wr), H * (1 + wr)),
                           (L0 - wl, L0 + wl), (m, H, L0), {"vartheta2": vartheta2})


def region_contains(region: ParameterRegion, r: float, h: float, Lambda: float,
                    k: int | None = None) -> RegionMembership:
    """Membership with signed per-coordinate margins (distance to the nearer face)."""
    if k is not None and int(k) != region.k:
        raise DomainError(f"region built for k={region.k}, queried with k={k}")
    mr = min(r - region.r_bounds[0], region.r_bounds[1] - r)
    mh = min(h - region.h_bounds[0], region.h_bounds[1] - h)
    ml = min(Lambda - region.L_bounds[0], region.L_bounds[1] - Lambda)
    margins = {"r": float(mr), "h": float(mh), "Lambda": float(ml)}
    return RegionMembership(all(v >= 0 for v in margins.values()), margins)
