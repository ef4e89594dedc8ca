import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochrates import (ConfigError, DomainError, SiccFunction, sicc_combine, sicc_from_name,
                        sicc_log, sicc_power, verify_sicc)


def test_power_identity():
    f = sicc_power(1)
    assert f(4) == 4
    assert f.psi(0.5) == 0.5
    assert f.kappa(0.1) == 0.1


def test_power_sqrt():
    f = sicc_power(0.5)
    assert f(4) == pytest.approx(2.0, abs=1e-15)
    assert f.kappa(0.1) == pytest.approx(0.01, rel=1e-14)
    assert f.psi(0.25) == pytest.approx(math.sqrt(0.25), rel=1e-15)


@pytest.mark.parametrize("q", [0, -0.5, 1.5])
def test_power_rejects_exponent(q):
    with pytest.raises(DomainError):
        sicc_power(q)


def test_log_base_two():
    f = sicc_log(2)
    assert f(1) == pytest.approx(1.0, rel=1e-15)
    assert f.kappa(1) == pytest.approx(1.0, rel=1e-15)
    for c in (1.5, 2, 10):
        assert sicc_log(c).psi(0.3) == 0.3


def test_log_rejects_base():
    with pytest.raises(DomainError):
        sicc_log(1)


def test_negative_input_rejected():
    with pytest.raises(DomainError):
        sicc_power(0.5)(-1.0)


def test_sum_of_identities():
    ident = sicc_power(1)
    f = sicc_combine("sum", ident, ident, 0.5, 0.5)
    assert f(3) == pytest.approx(3.0)


def test_compose_sqrt_sqrt():
    s = sicc_power(0.5)
    f = sicc_combine("compose", s, s)
    assert f(16) == pytest.approx(2.0, rel=1e-15)
    assert f.kappa(0.1) == pytest.approx(1e-4, rel=1e-12)


def test_min_sqrt_id():
    f = sicc_combine("min", sicc_power(0.5), sicc_power(1))
    assert f(4) == pytest.approx(2.0)
    assert f(0.25) == pytest.approx(0.25)


def test_sum_rejects_weights():
    with pytest.raises(DomainError):
        sicc_combine("sum", sicc_power(1), sicc_power(1), 0.0, 1.0)


def test_verify_catalog_functions_pass():
    for f in (sicc_power(0.5), sicc_log(2), sicc_power(1), sicc_power(0.25)):
        rep = verify_sicc(f, 10_000, seed=1)
        assert rep.passed, (f.label, rep.failures(), rep.worst)


def test_verify_detects_convex_square():
    sq = SiccFunction(lambda x: np.power(x, 2.0), lambda a: np.power(a, 2.0),
                      lambda e: np.sqrt(e), "square")
    rep = verify_sicc(sq, 10_000, seed=0)
    assert not rep.checks["concave"]
    # the documented witness: midpoint of 0 and 2
    assert sq.eval(1.0) < (sq.eval(0.0) + sq.eval(2.0)) / 2


def test_verify_rejects_zero_samples():
    with pytest.raises(DomainError):
        verify_sicc(sicc_power(1), 0)


def test_parse_catalog_names():
    assert sicc_from_name("id")(3.0) == 3.0
    assert sicc_from_name("power:1/2")(9.0) == pytest.approx(3.0)
    assert sicc_from_name("log:2")(3.0) == pytest.approx(2.0)
    f = sicc_from_name("sum(0.5*id, 0.5*power:0.5)")
    assert f(4.0) == pytest.approx(3.0)
    g = sicc_from_name("compose(sqrt, min(id, log:2))")
    assert g(1.0) == pytest.approx(1.0)


@pytest.mark.parametrize("bad", ["power:2", "cube", "sum(id)", "log:x"])
def test_parse_rejects(bad):
    with pytest.raises(ConfigError):
        sicc_from_name(bad)


leaves = st.one_of(
    st.floats(0.05, 1.0).map(sicc_power),
    st.floats(1.1, 20.0).map(sicc_log),
)


def _combos(children):
    w = st.floats(0.1, 5.0)
    return st.one_of(
        st.tuples(children, children, w, w).map(lambda t: sicc_combine("sum", *t)),
        st.tuples(children, children).map(lambda t: sicc_combine("compose", *t)),
        st.tuples(children, children).map(lambda t: sicc_combine("min", *t)),
    )


sicc_functions = st.recursive(leaves, _combos, max_leaves=4)


@settings(max_examples=40, deadline=None)
@given(sicc_functions, st.integers(0, 2 ** 31))
def test_closure_preserves_properties(f, seed):
    rep = verify_sicc(f, 2_000, domain_bound=100.0, seed=seed)
    assert rep.passed, (f.label, rep.failures(), rep.worst)


@settings(max_examples=60, deadline=None)
@given(sicc_functions, st.floats(1e-3, 10.0), st.floats(1e-3, 10.0))
def test_kappa_nondecreasing(f, e1, e2):
    lo, hi = min(e1, e2), max(e1, e2)
    with np.errstate(over="ignore", under="ignore"):
        assert f.kappa(lo) <= f.kappa(hi) * (1 + 1e-12)
