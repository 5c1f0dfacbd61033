import math

import numpy as np
import pytest

from cylbubble.energy import (K_FLOOR, Potentials, eval_I, interaction_integral,
                              far_field_leading, nonlinear_remainder, potential_value,
                              residual_Rk, weight, weighted_norm)
from cylbubble.errors import ConfigError, DomainError
from cylbubble.geometry import build_configuration, isolated_configuration
from cylbubble.ground_state import moment


def test_potential_examples(es):
    pot = Potentials(1.0, 1.0, 2.0, 2.0, delta=0.5)
    assert potential_value(pot, 1, 1.0) == 1.0
    assert potential_value(pot, 1, 1.1) == pytest.approx(0.99, rel=1e-14)
    far = potential_value(pot, 2, 50.0)
    assert far == pytest.approx(pot.min_value(2), rel=1e-14) and far > 0
    with pytest.raises(DomainError):
        potential_value(pot, 1, -0.1)


def test_potential_is_c2_at_joins():
    pot = Potentials(1.0, 1.0, 2.5, 2.5)
    for x0 in (0.25, 0.5):
        h = 1e-4
        xs = np.array([x0 - 2 * h, x0 - h, x0, x0 + h, x0 + 2 * h])
        f = pot.phi(1, xs)
        d2l = (f[0] - 2 * f[1] + f[2]) / h ** 2
        d2r = (f[2] - 2 * f[3] + f[4]) / h ** 2
        assert abs(d2l - d2r) <= 1e-2 * max(abs(d2l), 1.0)
    xs = np.linspace(0, 2, 400)
    assert np.all(np.diff(pot.phi(1, xs)) >= 0)


def test_potential_floor():
    with pytest.raises(ConfigError):
        Potentials(20.0, 1.0, 2.5, 2.5)
    assert Potentials(1.0, 1.0, 2.5, 2.5).min_value(1) > K_FLOOR


def test_interaction_lambda_scaling(gs):
    d, L = 8.0, 2.0
    a = interaction_integral(gs, d, L).value
    b = interaction_integral(gs, L * d, 1.0).value
    assert a == pytest.approx(b, rel=1e-12)
    # relative correction to the far-field law decays like D^-((N-2)p-N)
    far = [interaction_integral(gs, 200.0, lam).value * lam ** 3 for lam in (1.0, 2.0)]
    assert far[0] == pytest.approx(far[1], rel=5e-3)


def test_interaction_kinds_and_bound(gs):
    near = interaction_integral(gs, 0.1).value
    assert near <= moment(gs, "U", gs.q + 1) * (1 + 1e-9)
    assert interaction_integral(gs, 5.0, kind="Vp_V").value > 0
    with pytest.raises(DomainError):
        interaction_integral(gs, 0.0)


def test_isolated_bubble_is_half_a1(es, gs, table, flat):
    cfg = isolated_configuration(es)
    b = eval_I(cfg, flat, gs)
    assert b.total == pytest.approx(0.5 * table.A1, rel=1e-8)
    assert b.total == pytest.approx(2 / 5 * moment(gs, "V", gs.p + 1), rel=1e-8)


def test_two_bubble_pair(es, gs, table, flat):
    r, h = 20.0, 0.5
    D = 2 * r * h
    cfg = build_configuration(1, r, h, 1.0, es, test_mode=True)
    b = eval_I(cfg, flat, gs, n_samples=20000)
    ref = table.A1 - 2 * far_field_leading(table.B0, D, 1.0, 5)
    budget = 2 * abs(interaction_integral(gs, D).value - far_field_leading(table.B0, D, 1.0, 5))
    assert abs(b.total - ref) <= budget + 3 * b.stderr


def test_zero_coupling_is_flat(es, gs):
    cfg = build_configuration(2, 6.0, 0.5, 1.0, es, test_mode=True)
    zero = Potentials(0.0, 0.0, es.m1, es.m2)
    a = eval_I(cfg, zero, gs, n_samples=5000)
    b = eval_I(cfg, Potentials.flat(es), gs, n_samples=5000)
    assert a.total == b.total
    assert a.term_K1_deviation == 0.0 and a.term_K2_deviation == 0.0


@pytest.mark.parametrize("k", [2, 3])
def test_symmetry_reduction_matches_brute_force(es, gs, pot, k):
    cfg = build_configuration(k, 5.0, 0.4, 1.2, es, test_mode=True)
    a = eval_I(cfg, pot, gs, n_samples=0)
    b = eval_I(cfg, pot, gs, n_samples=0, brute_force=True)
    assert abs(a.total - b.total) <= 1e-10 * abs(a.total)


def test_monte_carlo_agrees_with_semi_analytic(es, gs, pot):
    cfg = build_configuration(2, 6.0, 0.5, 1.0, es, test_mode=True)
    a = eval_I(cfg, pot, gs, n_samples=20000)
    m = eval_I(cfg, pot, gs, method="monte_carlo", n_samples=40000)
    assert abs(a.total - m.total) <= 3 * math.hypot(a.stderr, m.stderr)
    assert not m.details["degenerate"]


def test_bookkeeping_identity(es, gs, pot):
    cfg = build_configuration(3, 8.0, 0.3, 1.0, es)
    for method in ("semi_analytic", "monte_carlo"):
        b = eval_I(cfg, pot, gs, method=method, n_samples=5000)
        assert abs(b.bookkeeping_gap()) <= 1e-9 * abs(b.total)
    with pytest.raises(ValueError):
        eval_I(cfg, pot, gs, method="bogus")


def test_residual_vanishes_for_one_bubble(es, gs, flat):
    cfg = isolated_configuration(es)
    pts = np.random.default_rng(0).normal(scale=5.0, size=(200, 5))
    R1, R2 = residual_Rk(pts, cfg, flat, gs)
    assert np.max(np.abs(R1)) <= 1e-12 * np.max(gs.V(0.0) ** gs.p)
    assert np.max(np.abs(R2)) <= 1e-12


def test_residual_at_center_binomial(es, gs, flat):
    r, h = 30.0, 0.5
    cfg = build_configuration(1, r, h, 1.0, es, test_mode=True)
    R1, _ = residual_Rk(cfg.centers_top[0], cfg, flat, gs)
    V0 = float(gs.V(0.0))
    approx = gs.p * V0 ** (gs.p - 1) * float(gs.V(2 * r * h))
    assert R1[0] > 0
    assert R1[0] == pytest.approx(approx, rel=1e-2)


def test_residual_potential_part_vanishes_at_peak(es, gs, pot):
    cfg = isolated_configuration(es, center=[2.0, 0, 0, 0, 0], mu=2.0)
    R1, R2 = residual_Rk(cfg.centers_top[0], cfg, pot, gs)
    assert abs(R1[0]) <= 1e-12 and abs(R2[0]) <= 1e-12


def test_weighted_norm_of_weight_is_one(es):
    cfg = build_configuration(4, 10.0, 0.3, 1.0, es, test_mode=True)
    tau = 0.31
    n = weighted_norm(lambda y: weight(y, cfg, "star", tau), cfg, "star", tau)
    assert n.value == pytest.approx(1.0, abs=1e-12)
    base = weighted_norm(lambda y: np.sin(y[:, 0]), cfg, "dblstar", tau)
    tripled = weighted_norm(lambda y: 3 * np.sin(y[:, 0]), cfg, "dblstar", tau)
    assert tripled.value == pytest.approx(3 * base.value, rel=1e-14)


def test_nonlinear_remainder_zero_and_taylor(es, gs, flat):
    cfg = build_configuration(2, 5.0, 0.4, 1.0, es, test_mode=True)
    y = cfg.centers_top[0] + 0.7
    assert nonlinear_remainder(y, cfg, flat, gs, 0.0) == 0.0
    W = 0.8
    phi = 1e-3
    val = nonlinear_remainder(y, cfg, flat, gs, phi, w2_value=W)
    ref = gs.p * (gs.p - 1) * W ** (gs.p - 2) * phi ** 2 / 2
    assert val == pytest.approx(ref, rel=0.1)
    with pytest.raises(DomainError):
        nonlinear_remainder(y, cfg, flat, gs, -2.0, w2_value=1.0)
