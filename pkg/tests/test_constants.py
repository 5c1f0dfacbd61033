import math

import pytest

from cylbubble.constants import (CASE_M1, CASE_M2, ConstantTable, b1_closed_form, b1_partial,
                                 derive_constants, h_star, lambda0, lattice_constants,
                                 select_case)
from cylbubble.errors import AmbiguityError
from cylbubble.ground_state import moment


def test_algebraic_invariants(table):
    N = table.N
    t = table
    assert t.B4 == pytest.approx(2 * t.B0 * t.B1, rel=1e-12)
    assert t.B5 == pytest.approx(2 * t.B0 * t.B2, rel=1e-12)
    assert t.Bprime == pytest.approx(((N - 3) * t.B5 / ((N - 2) * t.B4)) ** (1 / (N - 1)), rel=1e-12)
    assert t.B6 == pytest.approx((N - 2) * t.B4 * t.Bprime ** 2 / 2, rel=1e-12)
    assert t.B7 == pytest.approx((N - 2) / 2 * (t.B4 * t.Bprime ** 2
                                                + (N - 3) * t.B5 / t.Bprime ** (N - 3)), rel=1e-12)
    assert t.is_complete()


def test_b0_and_a1(table, gs):
    assert table.B0 == pytest.approx(gs.b_u * moment(gs, "U", gs.q), rel=1e-12)
    assert table.A1 > 0
    assert table.A1 == pytest.approx(0.8 * moment(gs, "V", gs.p + 1), rel=1e-8)


def test_lambda0_stationarity(table, es):
    N, m, L = table.N, es.m, table.Lambda0
    a = table.a2_effective()
    assert (N - 2) * table.B4 / L ** (N - 1) == pytest.approx(m * a / L ** (m + 1), rel=1e-10)


def test_lambda0_fixed_point():
    N, m = 5, 2.45
    B4 = 2.0
    Abar = (N - 2) * B4 / m
    assert lambda0(B4, 123.0, Abar, N, m, CASE_M1) == pytest.approx(1.0, rel=1e-14)
    assert lambda0(B4, Abar, 123.0, N, m, CASE_M2) == pytest.approx(1.0, rel=1e-14)


def _base(**kw):
    vals = dict(N=5, B0=1.0, A1=1.0, A2=1.0, A2bar=1.0, A3=1.0, A3bar=1.0)
    vals.update(kw)
    return ConstantTable(**vals)


def test_bprime_equal_lattice(es):
    tab = derive_constants(_base(B1=0.3, B2=0.3), es)
    assert tab.Bprime == pytest.approx((2 / 3) ** 0.25, rel=1e-14)


def test_b6_example(es):
    # B4 = 1 and B' = 1 require B1 = 1/2 and B2 = 3 B4 / (2 B0) / 2
    tab = derive_constants(_base(B1=0.5, B2=0.75), es)
    assert tab.B4 == 1.0 and tab.Bprime == pytest.approx(1.0, rel=1e-14)
    assert tab.B6 == pytest.approx(1.5, rel=1e-14)


def test_h_star(table):
    assert h_star(1, table) == table.Bprime
    assert h_star(16, table.with_(Bprime=0.9)) == pytest.approx(0.225, rel=1e-14)
    assert h_star(10, table) > h_star(11, table)


def test_case_selection(es):
    assert select_case(es.with_(m1=2.0, m2=2.5)) == CASE_M1
    assert select_case(es.with_(m1=2.5, m2=2.0)) == CASE_M2
    with pytest.raises(AmbiguityError):
        select_case(es.with_(m1=2.45, m2=2.45 + 1e-12))


def test_a2_vanishes_without_c2(gs, es):
    from cylbubble.constants import compute_base_constants
    base = compute_base_constants(gs, es.with_(c2=0.0))
    assert base.A2 == 0.0 and base.A3 == 0.0


def test_b1_zeta_oracle():
    assert b1_closed_form(5) == pytest.approx(1.2020569031595942 / (4 * math.pi ** 3), rel=1e-14)
    assert b1_partial(5, 4000) == pytest.approx(b1_closed_form(5), rel=1e-2)


def test_lattice_constants_converge():
    res = lattice_constants(5)
    assert res.B1 == pytest.approx(b1_closed_form(5), rel=1e-2)
    assert res.B2 > 0 and math.isfinite(res.B2)
    assert res.diagnostics["B2_c_spread"] <= 1e-2


def test_table_round_trip(table):
    assert ConstantTable.from_dict(table.to_dict()) == table
