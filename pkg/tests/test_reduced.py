import numpy as np
import pytest

from cylbubble.constants import h_star
from cylbubble.errors import DomainError, SearchFailure
from cylbubble.exponents import mu
from cylbubble.reduced import (F_expansion, SkBox, dF_dh, dF_dLambda, dF_dr, energy_scale,
                               find_critical_point, gradient, gradient_flow, make_state,
                               minmax_estimate, t_levels, with_table)


@pytest.fixture(scope="module", params=[10, 20])
def k(request):
    return request.param


def _center(k, table, es):
    return mu(k, es), h_star(k, table), table.Lambda0


def test_structure_at_center(k, table, es):
    r, H, L0 = _center(k, table, es)
    fv = F_expansion(r, H, L0, k, table, es)
    assert fv.terms["B7"] == 0.0 and fv.terms["A3"] == 0.0
    N, m = 5, es.m
    a = 2 * (N - 3) / (N - 1)
    kpow = float(k) ** (-m * (N - 2) / (N - 2 - m))
    hand = (k * table.A1 - k * L0 ** (2 - N) * (table.B4 + table.B6 * k ** -a) * kpow
            + k * table.a2_effective() * L0 ** -m * kpow)
    assert fv.value == pytest.approx(hand, rel=1e-13)
    assert fv.shifted == pytest.approx(hand - k * table.A1, rel=1e-9)


def test_domain_errors(table, es):
    with pytest.raises(DomainError):
        F_expansion(1.0, 0.0, 1.0, 10, table, es)
    with pytest.raises(DomainError):
        F_expansion(1.0, 0.1, -1.0, 10, table, es)


def test_lambda_derivative_zero_and_sign_change(k, table, es):
    r, H, L0 = _center(k, table, es)
    term = k * 3 * L0 ** -4 * mu(k, es) ** -es.m * table.B4
    assert abs(dF_dLambda(r, H, L0, k, table, es, displayed=True)) <= 1e-12 * term
    lo = dF_dLambda(r, H, L0 - 0.1, k, table, es, displayed=True)
    hi = dF_dLambda(r, H, L0 + 0.1, k, table, es, displayed=True)
    assert lo > 0 > hi
    # the full partial changes sign across the B6-shifted root instead
    a = 2 * 2 / 4
    Ls = L0 * (1 + table.B6 * k ** -a / table.B4) ** (1 / (3 - es.m))
    assert dF_dLambda(r, H, Ls - 0.05, k, table, es) > 0 > dF_dLambda(r, H, Ls + 0.05, k, table, es)


def test_h_derivative_sign(k, table, es):
    r, H, L0 = _center(k, table, es)
    assert dF_dh(r, H, L0, k, table, es) == 0.0
    assert dF_dh(r, 0.9 * H, L0, k, table, es) > 0
    assert dF_dh(r, 1.1 * H, L0, k, table, es) < 0


def test_gradients_match_finite_differences(k, table, es):
    box = SkBox.build(k, table, es)
    step = 1e-5
    for x in box.sample(5, np.random.default_rng(2)):
        for axis, fn in ((2, dF_dLambda), (1, dF_dh)):
            e = np.zeros(3)
            e[axis] = step
            fd = (F_expansion(*(x + e), k, table, es).shifted
                  - F_expansion(*(x - e), k, table, es).shifted) / (2 * step)
            exact = fn(*x, k, table, es)
            assert abs(fd - exact) <= 1e-6 * abs(exact)


def test_r_derivative_linear_in_offset(k, table, es):
    r, H, L0 = _center(k, table, es)
    assert dF_dr(r, H, L0, k, table, es) == 0.0
    a = dF_dr(r - 0.1, H, L0, k, table, es)
    b = dF_dr(r - 0.2, H, L0, k, table, es)
    assert b == pytest.approx(2 * a, rel=1e-9)


def test_flow_moves_lambda_inward(k, table, es):
    r, H, L0 = _center(k, table, es)
    L = L0 + k ** (-1.5 * 0.2)
    rep = gradient_flow(make_state([r, H, L], k, table, es), table, es, stop_at_t1=False,
                        max_steps=50)
    assert rep.terminal.Lambda < L
    assert rep.monotone and not rep.contradiction


def test_flow_moves_h_inward(k, table, es):
    r, H, L0 = _center(k, table, es)
    h = H * (1 + k ** -0.2)
    assert -dF_dh(r, h, L0, k, table, es) > 0
    rep = gradient_flow(make_state([r, h, L0], k, table, es), table, es, stop_at_t1=False,
                        max_steps=50)
    assert rep.terminal.h < h
    assert np.all(np.diff(rep.trajectory[:, 3]) <= 1e-14 * np.abs(rep.trajectory[1:, 3]))


def test_t_levels_ordered(k, table, es):
    lv = t_levels(k, table, es)
    assert lv["t2"] - lv["t1"] > 0


def test_minmax_sandwich(k, table, es):
    # compared in units of Fbar + k A1; the constant k A1 swamps the rest in absolute terms
    est = minmax_estimate(k, table, es)
    assert est["t1_shift"] < est["c_shift"] < est["t2_shift"]
    assert est["sandwich"]


def test_critical_point_interior_residual(k, table, es):
    cp = find_critical_point(k, table, es)
    assert cp.interior
    assert cp.residual <= 1e-10
    assert cp.diagnostics["dist_r"] == 0.0
    # exact position of the Lambda-critical point
    N, m = 5, es.m
    a = 2 * (N - 3) / (N - 1)
    ref = table.Lambda0 * (1 + table.B6 * k ** -a / table.B4) ** (1 / (N - 2 - m))
    assert cp.Lambda == pytest.approx(ref, rel=1e-8)


def test_no_h_critical_point_without_b7(table, es):
    with pytest.raises(SearchFailure):
        find_critical_point(20, with_table(table, B7=0.0), es)
