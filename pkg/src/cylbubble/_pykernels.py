"""Numpy reference implementation of the hot kernels.

Used when the compiled extension is unavailable and as the oracle the
compiled kernels are tested against.
"""
import numpy as np


def profile_eval(r, vals, d1, d2, r_min, r_max, log_ratio, f0, f1, f2, b, npow, deriv=0):
    """Evaluate a radial profile stored on a geometric grid.

    Quintic Hermite interpolation (values, first and second derivatives) between
    nodes ``r_min * exp(i*log_ratio)``, Taylor core ``f0 + f1 r + f2 r^2`` below
    ``r_min`` and power tail ``b r^-npow`` beyond ``r_max``.
    """
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    n = vals.shape[0]
    core = r < r_min
    tail = r > r_max
    mid = ~(core | tail)
    if deriv:
        out[core] = f1 + 2.0 * f2 * r[core]
        out[tail] = -npow * b * r[tail] ** (-npow - 1.0)
    else:
        out[core] = f0 + r[core] * (f1 + f2 * r[core])
        out[tail] = b * r[tail] ** (-npow)
    rm = r[mid]
    if rm.size:
        x = np.log(rm / r_min) / log_ratio
        i = np.clip(np.floor(x).astype(np.int64), 0, n - 2)
        ra = r_min * np.exp(i * log_ratio)
        hgt = ra * (np.exp(log_ratio) - 1.0)
        t = (rm - ra) / hgt
        ya, yb = vals[i], vals[i + 1]
        da, db = d1[i] * hgt, d1[i + 1] * hgt
        ea, eb = d2[i] * hgt * hgt, d2[i + 1] * hgt * hgt
        t2 = t * t
        t3 = t2 * t
        t4 = t3 * t
        if deriv:
            out[mid] = ((-30 * t2 + 60 * t3 - 30 * t4) * (ya - yb)
                        + (1 - 18 * t2 + 32 * t3 - 15 * t4) * da
                        + (t - 4.5 * t2 + 6 * t3 - 2.5 * t4) * ea
                        + (-12 * t2 + 28 * t3 - 15 * t4) * db
                        + (1.5 * t2 - 4 * t3 + 2.5 * t4) * eb) / hgt
        else:
            t5 = t4 * t
            h5 = 10 * t3 - 15 * t4 + 6 * t5
            out[mid] = (ya + h5 * (yb - ya)
                        + (t - 6 * t3 + 8 * t4 - 3 * t5) * da
                        + (0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5) * ea
                        + (-4 * t3 + 7 * t4 - 3 * t5) * db
                        + (0.5 * t3 - t4 + 0.5 * t5) * eb)
    return out


def bubble_sum(points, centers, lam, amp, power, vals, d1, d2, r_min, r_max,
               log_ratio, f0, f1, f2, b, npow):
    """Return sum_j (amp * f(lam |y - c_j|))**power for every row y of points."""
    points = np.ascontiguousarray(points, dtype=float)
    centers = np.ascontiguousarray(centers, dtype=float)
    acc = np.zeros(points.shape[0])
    for c in centers:
        d = np.sqrt(((points - c) ** 2).sum(axis=1))
        f = profile_eval(lam * d, vals, d1, d2, r_min, r_max, log_ratio, f0, f1, f2, b, npow)
        acc += (amp * np.abs(f)) ** power
    return acc


def polygon_sum(k, h, power, cross):
    """Lattice sum over one regular k-gon pair on the unit sphere.

    Same layer (``cross`` false): sum_{j=1}^{k-1} (2 sqrt(1-h^2) sin(pi j/k))^-power.
    Cross layer: sum_{j=0}^{k-1} (4(1-h^2) sin^2(pi j/k) + 4h^2)^(-power/2).
    """
    if cross:
        s = np.sin(np.pi * np.arange(k) / k)
        return float(np.sum((4 * (1 - h * h) * s * s + 4 * h * h) ** (-0.5 * power)))
    s = np.sin(np.pi * np.arange(1, k) / k)
    return float(np.sum((2 * np.sqrt(1 - h * h) * s) ** (-power)))
