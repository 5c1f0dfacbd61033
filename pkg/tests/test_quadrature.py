import math

import numpy as np
import pytest
from scipy.special import beta

from cylbubble.errors import DomainError
from cylbubble.quadrature import (BipolarKernel, HeavyTailMixture, bipolar_integral, mc_integral,
                                  radial_integral, shell_integral, sphere_area, sphere_moment)


def test_sphere_moment_beta_identity():
    for N, a in [(5, 0.0), (5, 2.0), (6, 2.45), (7, 0.3)]:
        ref = sphere_area(N - 1) * beta(0.5 * (a + 1), 0.5 * (N - 1))
        assert sphere_moment(N, a) == pytest.approx(ref, rel=1e-13)
    assert sphere_moment(5, 0.0) == pytest.approx(sphere_area(5), rel=1e-14)


def test_sphere_moment_domain():
    with pytest.raises(DomainError):
        sphere_moment(5, -1.0)


def test_radial_gaussian_moment():
    # int_{R^N} |y|^2 exp(-|y|^2) dy = (N/2) pi^{N/2}
    res = radial_integral(lambda r: np.exp(-r * r), 5, 2.0, r_max=30.0)
    assert sphere_area(5) * res.value == pytest.approx(2.5 * math.pi ** 2.5, rel=1e-11)


def test_radial_power_tail_fit():
    f = lambda r: (1 + r * r) ** -4
    a = radial_integral(f, 5, r_max=1e3)
    ref = 0.5 * beta(2.5, 1.5)
    assert a.value == pytest.approx(ref, rel=1e-8)


def test_radial_non_integrable_tail():
    with pytest.raises(DomainError):
        radial_integral(lambda r: (1 + r) ** -3.0, 5, r_max=1e3)


def _gauss_pair(d, N=5):
    return BipolarKernel(d, N, lambda s, t: np.exp(-s * s - t * t))


@pytest.mark.parametrize("d", [0.5, 2.0, 5.0])
def test_bipolar_gaussian_product(d):
    ref = (math.pi / 2) ** 2.5 * math.exp(-d * d / 2)
    res = bipolar_integral(_gauss_pair(d), core=1.0)
    assert res.value == pytest.approx(ref, rel=1e-9)


def test_bipolar_volume_of_one_focus_independent_of_d():
    vals = [bipolar_integral(BipolarKernel(d, 5, lambda s, t: np.exp(-s * s)), core=1.0).value
            for d in (0.3, 3.0, 30.0)]
    ref = math.pi ** 2.5
    for v in vals:
        assert v == pytest.approx(ref, rel=1e-8)


def test_bipolar_swap_symmetry():
    f = lambda s, t: np.exp(-s) * (1 + t * t) ** -3
    g = lambda s, t: f(t, s)
    a = bipolar_integral(BipolarKernel(4.0, 5, f)).value
    b = bipolar_integral(BipolarKernel(4.0, 5, g)).value
    assert a == pytest.approx(b, rel=1e-9)


def test_bipolar_degenerate():
    with pytest.raises(DomainError):
        bipolar_integral(_gauss_pair(0.0))


def test_shell_matches_bipolar():
    d = 3.0
    ref = (math.pi / 2) ** 2.5 * math.exp(-d * d / 2)
    g = lambda r: np.exp(-r * r)
    assert shell_integral(g, g, d, 5).value == pytest.approx(ref, rel=1e-8)


def test_shell_handles_kink():
    # indicator of the unit ball against a unit Gaussian at distance 0 is radial
    f = lambda r: (r < 1.0).astype(float)
    g = lambda r: np.exp(-r * r)
    val = shell_integral(f, g, 0.0, 5, rho_breaks=(1.0,)).value
    ref = sphere_area(5) * radial_integral(lambda r: np.exp(-r * r) * (r < 1), 5,
                                           edges=np.array([0.0, 1.0, 2.0]), r_max=2.0).value
    assert val == pytest.approx(ref, rel=1e-10)


def test_mixture_pdf_normalized():
    mix = HeavyTailMixture(np.array([[0.0] * 3, [4.0, 0, 0]]), 1.5, 3.0)
    # integrating the proposal density against itself is exact
    est = mc_integral(lambda x: mix.pdf(x), mix, 20000, seed=1)
    assert est.value == pytest.approx(1.0, abs=1e-12)
    assert est.stderr <= 1e-12


def test_mc_against_radial():
    f = lambda x: np.exp(-(x * x).sum(axis=1))
    mix = HeavyTailMixture(np.zeros((1, 5)), 1.0, 3.0)
    est = mc_integral(f, mix, 40000, seed=7)
    ref = math.pi ** 2.5
    assert abs(est.value - ref) <= 3 * est.stderr
    assert not est.degenerate


def test_mc_stderr_scaling():
    f = lambda x: np.exp(-(x * x).sum(axis=1))
    mix = HeavyTailMixture(np.zeros((1, 5)), 1.0, 3.0)
    a = mc_integral(f, mix, 20000, seed=3).stderr
    b = mc_integral(f, mix, 40000, seed=3).stderr
    assert a / b == pytest.approx(math.sqrt(2), rel=0.1)


def test_mc_multiple_columns_and_seed_reproducible():
    f = lambda x: np.column_stack([np.exp(-(x * x).sum(axis=1)), np.exp(-2 * (x * x).sum(axis=1))])
    mix = HeavyTailMixture(np.zeros((1, 5)), 1.0, 3.0)
    r1 = mc_integral(f, mix, 5000, seed=11)
    r2 = mc_integral(f, mix, 5000, seed=11)
    assert len(r1) == 2
    assert [r.value for r in r1] == [r.value for r in r2]
