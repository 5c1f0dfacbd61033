import math

import numpy as np
import pytest

from cylbubble.errors import DomainError
from cylbubble.exponents import ExponentSet
from cylbubble.ground_state import (bracket_labels, classify_shot, export_profile,
                                    gradient_pairing, green_tail_coefficients, import_profile,
                                    moment, ode_residual, tail_coefficients)
from cylbubble.quadrature import sphere_area


def test_scalar_case_closed_form(scalar_gs):
    r = np.logspace(-3, 2.5, 40)
    exact = (1 + r ** 2 / 15) ** -1.5
    assert np.max(np.abs(scalar_gs.U(r) - exact)) <= 1e-7
    assert np.max(np.abs(scalar_gs.V(r) - exact)) <= 1e-7
    assert scalar_gs.b_u == pytest.approx(15 ** 1.5, rel=1e-6)


def test_normalization_and_monotone(gs):
    assert gs.U(0.0) == pytest.approx(1.0, abs=1e-14)
    r = np.linspace(0, 200, 2001)
    assert np.all(np.diff(gs.U(r)) < 0)
    assert np.all(np.diff(gs.V(r)) < 0)
    assert np.all(gs.V(r) > 0)


def test_three_way_identity(gs):
    g = gradient_pairing(gs)
    a = moment(gs, "V", gs.p + 1)
    b = moment(gs, "U", gs.q + 1)
    assert abs(g - a) / a <= 1e-6
    assert abs(g - b) / b <= 1e-6


def test_ode_residual_small(gs):
    r = np.logspace(-2, math.log10(gs.r_max) - 0.01, 200)
    assert np.max(ode_residual(gs, r)) <= 1e-5


def test_tail_agrees_with_green(gs):
    bu, bv = tail_coefficients(gs, rel_tol=1e-3)
    gu, gv = green_tail_coefficients(gs)
    assert bu == pytest.approx(gu, rel=1e-3)
    assert bv == pytest.approx(gv, rel=1e-3)


def test_tail_continuity(gs):
    r = gs.r_max * np.array([0.999, 1.001])
    u = gs.U(r)
    assert u[1] == pytest.approx(gs.b_u / r[1] ** 3, rel=1e-12)
    assert abs(u[0] / u[1] - (r[1] / r[0]) ** 3) < 1e-3


def test_moment_axis_weight_consistent(gs):
    # average of |y_1|^2 over the sphere is r^2/N
    full = moment(gs, "V", gs.p + 1, 2.0)
    from cylbubble.ground_state import radial_moment
    radial = radial_moment(gs, "V", gs.p + 1, 2.0).value
    assert full == pytest.approx(sphere_area(5) * radial / 5, rel=1e-12)


def test_moment_domain_error(gs):
    with pytest.raises(DomainError):
        moment(gs, "U", 1.0)


def test_export_import_round_trip(gs, tmp_path):
    path = tmp_path / "gs.txt"
    export_profile(gs, path)
    back = import_profile(path)
    r = np.logspace(-3, 3.5, 50)
    assert np.max(np.abs(back.U(r) - gs.U(r)) / gs.U(r)) <= 1e-12
    assert np.max(np.abs(back.V(r) - gs.V(r)) / gs.V(r)) <= 1e-12
    assert back.b_u == gs.b_u


def test_import_rejects_other_version(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# cylbubble-profile 99\n")
    with pytest.raises(ValueError):
        import_profile(path)


def test_shooting_labels_switch_once(es, gs):
    grid = np.linspace(0.8 * gs.shoot_a, 1.2 * gs.shoot_a, 9)
    labels = bracket_labels(es, grid)
    switches = sum(a != b for a, b in zip(labels, labels[1:]))
    assert switches == 1
    assert labels[0] != labels[-1]


def test_classify_shot_far_from_root(es, gs):
    lo, _ = classify_shot(es, 0.5 * gs.shoot_a)
    hi, _ = classify_shot(es, 2.0 * gs.shoot_a)
    assert {lo, hi} == {"U", "V"}
