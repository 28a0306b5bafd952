import cmath
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discrest import (
    AliasingError,
    ParameterError,
    PointSet,
    eval_sum,
    fit_exponent,
    gen_lattice_paraboloid,
    gen_separated_sample,
    lp_average_ball,
    lp_norm_torus_grid,
    strichartz_norm,
)

from oracles import lp_torus_direct

TWO = PointSet([(0, 0), (1, 1)], 2, "paraboloid")
P11 = gen_lattice_paraboloid(2, 1)


def test_eval_sum_examples():
    assert eval_sum(PointSet([(0, 0)], 2), [1], (0.3, -7.1)) == 1
    assert abs(eval_sum(TWO, [1, 1], (0.5, 0))) < 1e-15
    assert eval_sum(P11, [0, 0, 0], (0.1, 0.2)) == 0


def test_eval_sum_against_cmath():
    ps = gen_separated_sample("paraboloid", 3, F(1, 16), seed=1)
    rng = np.random.default_rng(0)
    a = rng.normal(size=len(ps)) + 1j * rng.normal(size=len(ps))
    x = (0.37, -1.2, 2.5)
    expected = sum(c * cmath.exp(2j * math.pi * sum(float(p) * t for p, t in zip(pt, x))) for c, pt in zip(a, ps))
    assert eval_sum(ps, a, x) == pytest.approx(expected, abs=1e-12)


def test_eval_sum_dimension_mismatch():
    with pytest.raises(ParameterError):
        eval_sum(TWO, [1, 1], (0.0, 0.0, 0.0))
    with pytest.raises(ParameterError):
        eval_sum(TWO, [1], (0.0, 0.0))


@pytest.mark.parametrize("method", ["monte_carlo", "grid"])
def test_ball_single_point(method):
    est = lp_average_ball(PointSet([(F(1, 3), F(1, 9))], 2), [1], 2, 50, method=method, samples=2000, seed=0)
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_ball_plancherel_two_points():
    est = lp_average_ball(TWO, [1, 1], 2, 200, samples=100_000, seed=0)
    assert est.value == pytest.approx(math.sqrt(2), rel=0.05)
    assert est.error > 0 and est.method == "monte_carlo"


def test_ball_zero_coefficients():
    est = lp_average_ball(TWO, [0, 0], 3, 10, samples=1000, seed=0)
    assert est.value == 0 and est.error == 0


def test_ball_grid_warns():
    est = lp_average_ball(TWO, [1, 1], 2, 50, method="grid", samples=20_000)
    assert est.error == 0 and est.warnings


def test_ball_errors():
    with pytest.raises(ParameterError):
        lp_average_ball(TWO, [1, 1], 0.5, 10)
    with pytest.raises(ParameterError):
        lp_average_ball(TWO, [1, 1], 2, 0)
    with pytest.raises(ParameterError):
        lp_average_ball(TWO, [1, 1], 2, 10, samples=50)


def test_ball_seed_determinism_and_workers():
    ps = gen_separated_sample("paraboloid", 3, F(1, 16), seed=4)
    a = np.ones(len(ps))
    one = lp_average_ball(ps, a, 4, 30, samples=50_000, seed=9, chunk_size=4096, n_jobs=1)
    four = lp_average_ball(ps, a, 4, 30, samples=50_000, seed=9, chunk_size=4096, n_jobs=4)
    again = lp_average_ball(ps, a, 4, 30, samples=50_000, seed=9, chunk_size=4096, n_jobs=1)
    assert one.value == four.value == again.value
    assert one.error == four.error
    other = lp_average_ball(ps, a, 4, 30, samples=50_000, seed=10, chunk_size=4096)
    assert other.value != one.value


@settings(max_examples=15, deadline=None)
@given(phase=st.floats(0, 2 * math.pi), p=st.sampled_from([1.5, 2.0, 3.0, 4.0]))
def test_unimodular_invariance(phase, p):
    ps = gen_separated_sample("paraboloid", 2, F(1, 16), seed=3)
    rng = np.random.default_rng(1)
    a = rng.normal(size=len(ps)) + 1j * rng.normal(size=len(ps))
    u = cmath.exp(1j * phase)
    base = lp_average_ball(ps, a, p, 20, samples=5000, seed=2).value
    rot = lp_average_ball(ps, a * u, p, 20, samples=5000, seed=2).value
    assert rot == pytest.approx(base, rel=1e-12, abs=1e-12)
    t0 = lp_norm_torus_grid(P11, [1, 2j, -1], 4).value
    t1 = lp_norm_torus_grid(P11, np.array([1, 2j, -1]) * u, 4).value
    assert t1 == pytest.approx(t0, rel=1e-12)


def test_ball_center_large_R():
    a = [1, 1]
    base = lp_average_ball(TWO, a, 2, 500, samples=100_000, seed=0)
    moved = lp_average_ball(TWO, a, 2, 500, center=(37.5, -12.25), samples=100_000, seed=0)
    assert abs(base.value - moved.value) <= base.error + moved.error


def test_torus_examples():
    est = lp_norm_torus_grid(P11, [1, 1, 1], 4, 16)
    assert est.value ** 4 == pytest.approx(15, rel=1e-12)
    assert est.error == 0 and est.method == "torus_grid"
    assert lp_norm_torus_grid(P11, [1, 1, 1], 2).value == pytest.approx(math.sqrt(3), rel=1e-12)
    for p in (2, 4, 6):
        assert lp_norm_torus_grid(PointSet([(3, 9)], 2), [1], p).value == pytest.approx(1.0, rel=1e-12)


def test_torus_matches_direct_loop():
    a = [0.5, -1j, 2.0]
    for p in (2, 4, 6):
        est = lp_norm_torus_grid(P11, a, p, 13)
        assert est.value == pytest.approx(lp_torus_direct(P11.points, a, p, 13), rel=1e-10)


def test_torus_aliasing():
    with pytest.raises(AliasingError):
        lp_norm_torus_grid(P11, [1, 1, 1], 4, 4)
    lp_norm_torus_grid(P11, [1, 1, 1], 4, 5)


def test_torus_center_free():
    shifted = PointSet([(x, y) for x, y in P11], 2)
    assert lp_norm_torus_grid(shifted, None, 4, 9).value == lp_norm_torus_grid(P11, None, 4, 9).value


def test_torus_odd_p_falls_back():
    est = lp_norm_torus_grid(P11, [1, 1, 1], 3, samples=20_000, seed=0)
    assert est.method == "monte_carlo" and est.error > 0 and est.warnings
    exact_l3 = lp_torus_direct(P11.points, [1, 1, 1], 3, 64)
    assert abs(est.value - exact_l3) <= 2 * est.error


def test_torus_needs_integers():
    with pytest.raises(ParameterError):
        lp_norm_torus_grid(PointSet([(F(1, 2), F(1, 4))], 2), [1], 4)


def test_strichartz_single_coefficient():
    est = strichartz_norm({(2,): 3 - 4j}, [1.3], 4, 2.7, time_steps=64)
    assert est.value == pytest.approx(5 * 2.7 ** 0.25, rel=1e-12)


def test_strichartz_zero():
    assert strichartz_norm({(0,): 0, (1,): 0}, [1.0], 4, 1.0).value == 0


def test_strichartz_theta_one_matches_torus():
    coeffs = {(-1,): 1, (0,): 1, (1,): 1}
    est = strichartz_norm(coeffs, [1.0], 4, 1.0)
    torus = lp_norm_torus_grid(P11, [1, 1, 1], 4)
    assert est.value == pytest.approx(torus.value, rel=1e-6)
    assert est.extras["rescaled_value"] == pytest.approx(est.value, rel=1e-6)


def test_strichartz_irrational_theta_error_bar():
    coeffs = {(-1, 0): 1, (0, 1): 0.5j, (1, 1): -1, (0, 0): 1}
    coarse = strichartz_norm(coeffs, [1.3, 0.7], 4, 1.9, time_steps=64)
    fine = strichartz_norm(coeffs, [1.3, 0.7], 4, 1.9, time_steps=4096)
    assert abs(coarse.value - fine.value) <= 10 * coarse.error + 1e-12
    assert fine.extras["rescaled_value"] == pytest.approx(fine.value, rel=1e-6)


def test_strichartz_theta_range():
    with pytest.raises(ParameterError):
        strichartz_norm({(0,): 1}, [0.5], 4, 1.0)
    with pytest.raises(ParameterError):
        strichartz_norm({(0,): 1}, [1.0], 3, 1.0)


def test_fit_exact_line():
    pairs = [(s, s ** -0.5) for s in (1, 2, 4, 8, 16)]
    fit = fit_exponent(pairs)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.residual == pytest.approx(0, abs=1e-12)


def test_fit_constant():
    assert fit_exponent([(1, 3), (10, 3), (100, 3)]).slope == pytest.approx(0, abs=1e-12)


def test_fit_noisy_recovery():
    rng = np.random.default_rng(2024)
    scales = np.geomspace(1, 1e4, 25)
    values = 2.0 * scales ** 0.3 * (1 + rng.uniform(-0.01, 0.01, size=scales.size))
    assert fit_exponent(zip(scales, values)).slope == pytest.approx(0.3, abs=0.02)


def test_fit_errors():
    with pytest.raises(ParameterError):
        fit_exponent([(1, 1)])
    with pytest.raises(ParameterError):
        fit_exponent([(1, 1), (1, 2)])
    with pytest.raises(ParameterError):
        fit_exponent([(1, 1), (2, 0)])
    with pytest.raises(ParameterError):
        fit_exponent([(-1, 1), (2, 1)])


def test_fit_predict():
    fit = fit_exponent([(1, 2), (4, 4), (16, 8)])
    assert fit.predict(64) == pytest.approx(16)
