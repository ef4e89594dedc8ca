import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochrates import ConfigError, DomainError
from stochrates.montecarlo import MCConfig, quasi_fejer_profile, rm_condition_check
from stochrates.processes import (RandomSource, StarPoint, build_model, counterexample_model,
                                  counterexample_sqrt_mean, dvoretzky_map, frechet_mean_star,
                                  km_model, prox_model, prox_resolvent, rm_linear_marginal,
                                  rm_linear_second_moment, rm_model, splitting_model,
                                  splitting_step_fraction, star_distance, star_geodesic)

from oracles import (counterexample_paths, frechet_grid, prox_step_grid, random_star_point,
                     star_dist, star_geo)

SRC = RandomSource(0, 0)


# -- star tree --------------------------------------------------------------------

def test_star_distance_examples():
    assert star_distance(StarPoint(1, 2.0), StarPoint(1, 0.5)) == 1.5
    assert star_distance(StarPoint(1, 2.0), StarPoint(2, 1.0)) == 3.0


def test_star_geodesic_examples():
    x, y = StarPoint(1, 2.0), StarPoint(2, 1.0)
    p = star_geodesic(x, y, 2 / 3)
    assert p.t == pytest.approx(0.0, abs=1e-15)
    q = star_geodesic(x, y, 5 / 6)
    assert q.leg == 2 and q.t == pytest.approx(0.5)


def test_star_rejects():
    with pytest.raises(DomainError):
        StarPoint(0, -1.0)
    with pytest.raises(DomainError):
        star_distance(StarPoint(4, 1.0), StarPoint(0, 1.0), legs=3)
    with pytest.raises(DomainError):
        star_geodesic(StarPoint(0, 1.0), StarPoint(1, 1.0), 1.5)


def test_star_origin_is_leg_free():
    assert StarPoint(2, 0.0) == StarPoint(0, 0.0)


def test_star_geometry_matches_oracle():
    rng = np.random.default_rng(3)
    for _ in range(2000):
        a, b = random_star_point(rng, 4), random_star_point(rng, 4)
        s = float(rng.uniform())
        pa, pb = StarPoint(*a), StarPoint(*b)
        assert star_distance(pa, pb) == pytest.approx(star_dist(a, b), abs=1e-12)
        g, o = star_geodesic(pa, pb, s), star_geo(a, b, s)
        assert star_dist((g.leg, g.t), o) <= 1e-12


def test_cn_inequality():
    rng = np.random.default_rng(11)
    lams = np.linspace(0, 1, 11)
    worst = -math.inf
    for _ in range(10_000):
        x, y, w = (StarPoint(*random_star_point(rng, 3)) for _ in range(3))
        dxy, dxw, dyw = star_distance(x, y), star_distance(x, w), star_distance(y, w)
        for lam in lams:
            m = star_geodesic(x, y, float(lam))
            lhs = star_distance(m, w) ** 2
            rhs = (1 - lam) * dxw ** 2 + lam * dyw ** 2 - lam * (1 - lam) * dxy ** 2
            worst = max(worst, lhs - rhs)
    assert worst <= 1e-10


def test_frechet_mean_symmetric():
    anchors = [StarPoint(i, 1.0) for i in range(3)]
    z, _ = frechet_mean_star(anchors, [1 / 3] * 3, 3)
    assert z.t == pytest.approx(0.0, abs=1e-12)


def test_frechet_mean_weighted_against_grid():
    anchors = [StarPoint(i, 1.0) for i in range(3)]
    z, val = frechet_mean_star(anchors, [0.8, 0.1, 0.1], 3)
    assert z.leg == 0 and z.t == pytest.approx(0.6)
    g, gval = frechet_grid([(i, 1.0) for i in range(3)], [0.8, 0.1, 0.1], 3)
    assert g[0] == 0 and abs(g[1] - 0.6) <= 1e-4
    assert val <= gval + 1e-12


# -- product martingale ---------------------------------------------------------------

def test_counterexample_certified_values():
    m = counterexample_model()
    assert m.certified["E_sqrtY"] == pytest.approx(math.sqrt(2) / 2)
    assert counterexample_sqrt_mean(9) == pytest.approx(0.03125)


@pytest.mark.parametrize("n", [0, 3, 9])
def test_counterexample_enumeration(n):
    ex, esq = counterexample_paths(n)
    assert ex == pytest.approx(1.0)
    assert esq == pytest.approx(counterexample_sqrt_mean(n))


def test_counterexample_step_doubles_or_kills():
    m = counterexample_model()
    outs = {float(m.step(np.array([1.0]), n, RandomSource(5, t))[0])
            for n in range(5) for t in range(20)}
    assert outs == {0.0, 2.0}


# -- Robbins-Monro -----------------------------------------------------------------

def test_rm_deterministic_steps():
    lin = rm_model("linear", 0.0, "const:0.5", x0=1.0)
    assert lin.step(np.array([1.0]), 0, SRC)[0] == 0.5
    cub = rm_model("cubic", 0.0, "const:0.1", x0=2.0)
    assert cub.step(np.array([2.0]), 0, SRC)[0] == pytest.approx(1.2)


def test_rm_rejects():
    with pytest.raises(ConfigError):
        rm_model("quadratic", 1.0, "harmonic:1,1")
    with pytest.raises(ConfigError):
        rm_model("linear", -1.0, "harmonic:1,1")


def test_rm_linear_condition_holds():
    m = rm_model("linear", 1.0, "harmonic:1,2", x0=1.0)
    states = np.array([[0.0], [0.5], [-2.0], [4.0]])
    c, d = m.certified["c"], m.certified["d"]
    rows = rm_condition_check(m, states, 200_000, seed=1, c=c, d=d)
    assert all(r["passed"] for r in rows)
    # the conditional second moment is exactly x^2 + sd^2
    for r, x in zip(rows, states[:, 0]):
        assert r["mean"] == pytest.approx(x * x + 1.0, abs=4 * r["std_err"] + 1e-12)


def test_rm_condition_detects_too_small_c():
    m = rm_model("linear", 1.0, "harmonic:1,2", x0=1.0)
    rows = rm_condition_check(m, np.array([[4.0]]), 100_000, seed=2, c=0.5, d=1.0)
    assert not rows[0]["passed"]


def test_rm_marginal_matches_second_moment():
    m = rm_model("linear", 1.0, "harmonic:1,3", x0=2.0)
    for n in (1, 50, 10 ** 6, 10 ** 40):
        v = rm_linear_marginal(m, n, 0, 0, 100_000)
        se = v.std(ddof=1) / math.sqrt(v.size)
        assert abs(v.mean() - rm_linear_second_moment(m, n)) <= 4 * se


def test_rm_marginal_matches_stepping():
    m = rm_model("linear", 0.7, "harmonic:1,2", x0=1.5)
    cfg = MCConfig(trials=40_000, horizon=60, master_seed=4)
    from stochrates.montecarlo import estimate_mean_functional
    sim = estimate_mean_functional(m, "dist_map", 60, cfg)
    assert abs(sim.mean - rm_linear_second_moment(m, 60)) <= 4 * sim.std_err


# -- Krasnoselskii-Mann and proximal point ---------------------------------------------

def test_km_euclidean_step_and_F():
    m = km_model(0.5, "const:0.5", "const:0", x0=4.0)
    assert m.step(np.array([4.0]), 0, SRC)[0] == 3.0
    assert m.F(np.array([4.0])) == 2.0


def test_km_star_midpoint():
    m = km_model(0.0, "const:0.5", "const:0", space="star", legs=3, x0=StarPoint(2, 1.0))
    p = m.step(StarPoint(2, 1.0), 0, SRC)
    assert p == StarPoint(2, 0.5)


def test_km_rejects():
    with pytest.raises(ConfigError):
        km_model(1.0, "const:0.5", "const:0")
    with pytest.raises(ConfigError):
        km_model(0.5, "const:0.5", "const:0", space="torus")


def test_prox_step():
    m = prox_model("const:1", "const:0", z=0.0, x0=2.0)
    assert m.step(np.array([2.0]), 0, SRC)[0] == 1.0
    assert prox_resolvent(2.0, 1.0) == 1.0


def test_prox_resolvent_inequality():
    x, g, lam = 3.0, 2.0, 0.5
    left = abs(prox_resolvent(x, lam * g) - x)
    right = (2 - lam) * abs(prox_resolvent(x, g) - x)
    assert left == pytest.approx(1.5) and right == pytest.approx(3.0)
    assert left <= right


@settings(max_examples=200)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(1e-3, 50), st.floats(-5, 5))
def test_prox_firmly_nonexpansive(x, y, g, z):
    jx, jy = prox_resolvent(x, g, z), prox_resolvent(y, g, z)
    lhs = (jx - jy) ** 2 + ((x - jx) - (y - jy)) ** 2
    assert lhs <= (x - y) ** 2 * (1 + 1e-12) + 1e-12


# -- splitting ---------------------------------------------------------------------

def test_splitting_euclidean_step():
    m = splitting_model([1.0], [1.0], "const:0.5", x0=0.0)
    assert m.step(np.array([0.0]), 0, SRC)[0] == pytest.approx(0.5)
    assert splitting_step_fraction(0.5, 1.0) == 0.5


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 1), st.floats(0.01, 2))
def test_splitting_step_is_prox(x, a, w, lam):
    s = splitting_step_fraction(lam, w)
    y = x + s * (a - x)
    grid = prox_step_grid(x, a, w, lam)
    assert abs(y - grid) <= abs(a - x) / 20_000 + 1e-12


def test_splitting_star_target():
    m = splitting_model([(i, 1.0) for i in range(3)], [0.8, 0.1, 0.1], "harmonic:1,1",
                        space="star", legs=3, x0=[0, 0.0])
    assert m.target[0] == 0 and m.target[1] == pytest.approx(0.6)


def test_splitting_rejects_weights():
    with pytest.raises(ConfigError):
        splitting_model([0.0, 1.0], [0.5, 0.4], "harmonic:1,1")


# -- shrinkage ------------------------------------------------------------------------

def test_dvoretzky_map_examples():
    assert dvoretzky_map(np.array([5.0]), np.array([0.0]), 1.0)[0] == 4.0
    assert dvoretzky_map(np.array([0.5]), np.array([0.0]), 1.0)[0] == 0.0


@settings(max_examples=300)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=3), st.floats(0, 5),
       st.floats(0, 2), st.floats(0, 5))
def test_dvoretzky_map_bound(x, a, b, c):
    x = np.array(x)
    z = np.zeros_like(x)
    d = float(np.linalg.norm(x))
    out = float(np.linalg.norm(dvoretzky_map(x, z, c)))
    assert out == pytest.approx(max(d - c, 0.0), abs=1e-12)
    assert out <= max(a, (1 + b) * d - c) + 1e-12


# -- quasi-Fejer profiles ------------------------------------------------------------

def test_km_quasi_fejer_profile():
    m = km_model(0.5, "const:0.5", "0.1*geometric:1,0.5", x0=1.0)
    lam, sd = m.schedules
    xi = lambda k: float(lam.value(k)) * 3.0 * float(sd.value(k))
    prof = quasi_fejer_profile(m, range(0, 40, 2), xi, MCConfig(trials=20_000, horizon=40))
    assert all(p["nonincreasing"] for p in prof)


def test_splitting_quasi_fejer_profile():
    m = splitting_model([(i, 1.0) for i in range(3)], [0.8, 0.1, 0.1], "harmonic:1,1",
                        space="star", legs=3, x0=[1, 1.5])
    (lam,) = m.schedules
    lip = m.certified["L_lip"]
    xi = lambda k: 4.0 * float(lam.value(k)) ** 2 * lip ** 2
    prof = quasi_fejer_profile(m, range(0, 60, 3), xi, MCConfig(trials=20_000, horizon=60))
    assert all(p["nonincreasing"] for p in prof)


# -- catalog construction ---------------------------------------------------------

def test_build_model_names():
    assert build_model("counterexample", {}).name == "counterexample"
    assert build_model("rm:linear", {"steps": "harmonic:1,2"}).name == "rm:linear"
    with pytest.raises(ConfigError):
        build_model("km", {"lambda": "const:0.5"})
    with pytest.raises(ConfigError):
        build_model("nope", {})
