import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylbubble.errors import DomainError
from cylbubble.exponents import (ExponentSet, beta_window, conjugate_exponent, default_exponents,
                                 m_plus_bounds, mu, tau_lower_bound, validate_parameters)


def test_conjugate_symmetric_points():
    assert conjugate_exponent(5, 7 / 3) == pytest.approx(7 / 3, rel=1e-14)
    assert conjugate_exponent(6, 2.0) == pytest.approx(2.0, rel=1e-14)


def test_conjugate_default_pair():
    # 1/(p+1) = 3/5 - 1/3.45 by hand
    p = 1.0 / (0.6 - 1.0 / 3.45) - 1.0
    assert conjugate_exponent(5, 2.45) == pytest.approx(p, rel=1e-14)
    assert p == pytest.approx(2.2242990654, rel=1e-9)


def test_conjugate_domain_error():
    with pytest.raises(DomainError):
        conjugate_exponent(5, 0.5)


@given(st.floats(min_value=1.6, max_value=7 / 3))
@settings(max_examples=50, deadline=None)
def test_conjugate_lies_on_hyperbola(p):
    q = conjugate_exponent(5, p)
    assert abs(1 / (p + 1) + 1 / (q + 1) - 3 / 5) <= 1e-12
    assert conjugate_exponent(5, q) == pytest.approx(p, rel=1e-12)


def test_tau_bound_examples():
    es = ExponentSet(N=5, p=7 / 3, q=7 / 3)
    raw, floor = tau_lower_bound(es)
    assert raw == pytest.approx(1 / 6, abs=1e-14)
    es = ExponentSet(N=5, p=2.2249, q=2.45)
    assert tau_lower_bound(es)[0] == pytest.approx(0.2995, abs=1e-4)


def test_tau_bound_large_p_floor():
    es = ExponentSet(N=5, p=1e12, q=2.45)
    raw, floor = tau_lower_bound(es)
    assert raw == pytest.approx(0.5 / 3 - 1.5, abs=1e-9)
    assert floor == 0.0


def test_default_set_validates():
    rep = validate_parameters(default_exponents())
    assert rep.passed, rep.failures()
    assert all(c.margin > 0 or not c.strict for c in rep.margins)


def test_m_plus_lower_bound_fails_for_m2():
    es = default_exponents().with_(m1=2.0, m2=2.0, tau=1 / 3)
    lo1 = m_plus_bounds(es)[0]
    assert lo1 == pytest.approx(34 / (18 - 8 / 3), rel=1e-12)
    rep = validate_parameters(es)
    assert not rep.passed
    assert "m>m+bound1" in [c.name for c in rep.failures()]


def test_dimension_four_fails():
    es = ExponentSet(N=4, p=2.5, q=conjugate_exponent(4, 2.5))
    rep = validate_parameters(es)
    assert "dimension N>=5" in [c.name for c in rep.failures()]


def test_tau_shrink_monotone():
    es = default_exponents()
    lo = tau_lower_bound(es)[0]
    for tau in np.linspace(es.tau, lo + 1e-6, 6):
        rep = validate_parameters(es.with_(tau=float(tau)))
        assert {c.name: c.passed for c in rep.margins}["tau>=lower"]


def test_mu_values():
    es = default_exponents()
    assert mu(10, es) == pytest.approx(1e6, rel=1e-12)
    assert mu(1, es) == 1.0
    es6 = ExponentSet(N=6, p=2.0, q=2.0, m1=2.0, m2=2.0)
    assert mu(16, es6) == pytest.approx(256.0, rel=1e-12)


def test_mu_monotone():
    es = default_exponents()
    ks = np.arange(1, 50)
    vals = [mu(k, es) for k in ks]
    assert np.all(np.diff(vals[1:]) > 0)
    ms = np.linspace(2.0, 2.9, 10)
    vals = [mu(7, es.with_(m1=m, m2=m)) for m in ms]
    assert np.all(np.diff(vals) > 0)


def test_mu_domain_error():
    with pytest.raises(DomainError):
        mu(10, default_exponents().with_(m1=3.0, m2=3.0))


def test_report_csv_header():
    text = validate_parameters(default_exponents()).to_csv()
    assert text.splitlines()[0] == "constraint,margin,strict,passed"


def test_beta_window_reported():
    lo, hi = beta_window(default_exponents())
    assert math.isfinite(lo) and math.isfinite(hi)


def test_tau_030_is_just_below_the_bound():
    rep = validate_parameters(default_exponents().with_(tau=0.30))
    assert [c.name for c in rep.failures()] == ["tau>=lower"]
    assert default_exponents().tau == 0.31
