import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullrec import (
    DegenerateWindowError,
    ParamVector,
    SufficientStats,
    accumulate_stats,
    log_likelihood_ratio,
    mle,
    naive_estimator,
    one_step,
    restricted_mle,
    simulate_path,
)
from nullrec.errors import DegenerateSampleError
from nullrec.model import mu_moment_matrix


def stats_of(y, j, t=1.0, window=None, x0=0.0):
    return SufficientStats(y=np.asarray(y, float), j=np.asarray(j, float),
                           t=t, window=window, x0=x0)


def random_spd(rng, p):
    a = rng.normal(size=(p, p))
    return a @ a.T + 0.1 * np.eye(p)


# -------------------------------------------------------------------- mle

def test_mle_identity_solve():
    est = mle(stats_of([1.0, 0.0], np.eye(2)))
    np.testing.assert_allclose(est.theta_hat, [1.0, 0.0])
    assert est.j_invertible


def test_mle_zero_matrix_gate():
    est = mle(stats_of([1.0, 2.0], np.zeros((2, 2))))
    assert not est.j_invertible
    np.testing.assert_array_equal(est.theta_hat, [0.0, 0.0])


def test_mle_construct_then_solve():
    rng = np.random.default_rng(42)
    for _ in range(20):
        j = random_spd(rng, 2)
        truth = np.array([0.3, -0.2])
        est = mle(stats_of(j @ truth, j))
        np.testing.assert_allclose(est.theta_hat, truth, atol=1e-12)


@settings(max_examples=40)
@given(data=st.data())
def test_mle_error_representation(data):
    seed = data.draw(st.integers(min_value=0, max_value=2**31))
    rng = np.random.default_rng(seed)
    p = data.draw(st.integers(min_value=1, max_value=4))
    j = random_spd(rng, p)
    y = rng.normal(size=p)
    theta = rng.normal(size=p)
    st_ = stats_of(y, j)
    est = mle(st_)
    resid = (est.theta_hat - theta) - np.linalg.solve(j, y - j @ theta)
    assert np.abs(resid).max() < 1e-10


def test_mle_conditioning_reported():
    est = mle(stats_of([1.0], [[4.0]]))
    assert est.conditioning == pytest.approx(4.0)


# -------------------------------------------------------- restricted mle

def test_restricted_needs_window():
    with pytest.raises(DegenerateWindowError):
        restricted_mle(stats_of([1.0], [[1.0]], window=None))


def test_restricted_x0_interior():
    st_ = stats_of([1.0], [[1.0]], window=(1.0, 2.0), x0=0.0)
    with pytest.raises(DegenerateWindowError):
        restricted_mle(st_)
    ok = restricted_mle(stats_of([1.0], [[1.0]], window=(-1.0, 2.0), x0=0.0))
    np.testing.assert_allclose(ok.theta_hat, [1.0])


def test_restricted_whole_line_equals_mle(spec_sinc, theta_sinc):
    p = simulate_path(spec_sinc, theta_sinc, 20.0, 1e-2, 3)
    plain = accumulate_stats(spec_sinc, p)
    capped = accumulate_stats(spec_sinc, p, window=(-np.inf, np.inf))
    np.testing.assert_array_equal(restricted_mle(capped).theta_hat,
                                  mle(plain).theta_hat)


def test_restricted_gate_zero():
    est = restricted_mle(stats_of([0.0], [[0.0]], window=(-1.0, 1.0), x0=0.0))
    assert not est.j_invertible
    np.testing.assert_array_equal(est.theta_hat, [0.0])


def test_restricted_monte_carlo_consistency(spec_sinc):
    # windowed estimates concentrate around the truth on long paths; medians,
    # not means, since the error laws carry no finite variance
    from nullrec import run_ensemble

    truth = ParamVector(0.0, (0.3,))
    horizon, reps = 1000.0, 200
    res = run_ensemble(spec_sinc, truth, horizon, 1e-2, 55, reps,
                       window=(-2.0, 2.0))
    ests = []
    for i in range(reps):
        st_ = stats_of(res.y_win[i], res.j_win[i], t=horizon,
                       window=(-2.0, 2.0), x0=0.0)
        est = restricted_mle(st_)
        if est.j_invertible:
            ests.append(est.theta_hat)
    ests = np.array(ests)
    assert len(ests) >= 0.9 * reps
    med = np.median(ests, axis=0)
    med_se = 1.2533 * ests.std(axis=0, ddof=1) / np.sqrt(len(ests))
    for c, target in enumerate(truth.as_array()):
        assert abs(med[c] - target) <= 3.0 * med_se[c]


# ------------------------------------------------------------------ naive

def test_naive_matches_mle_first_coord_when_m0(spec_plain):
    st_ = stats_of([0.8], [[2.0]])
    check, bias = naive_estimator(st_)
    assert check == pytest.approx(mle(st_).theta_hat[0])
    assert bias is None


def test_naive_zero_bias_without_secondary(spec_plain):
    _, bias = naive_estimator(stats_of([0.8], [[2.0]]), spec_plain,
                              ParamVector(0.2))
    assert bias == 0.0


def test_naive_bias_prediction_quadrature(spec_sinc):
    th = ParamVector(0.0, (0.5,))
    _, bias = naive_estimator(stats_of([0.8, 0.1], np.eye(2)), spec_sinc, th)
    lam = mu_moment_matrix(spec_sinc, th)
    assert bias == pytest.approx(0.5 * lam[0, 1] / lam[0, 0], rel=1e-12)


def test_naive_degenerate():
    with pytest.raises(DegenerateSampleError):
        naive_estimator(stats_of([1.0], [[0.0]]))


# ------------------------------------------------------------ likelihood

def test_llr_same_point_zero():
    st_ = stats_of([0.4, -0.2], random_spd(np.random.default_rng(5), 2))
    v = np.array([0.3, 1.0])
    assert log_likelihood_ratio(st_, v, v) == 0.0


def test_llr_hand_value():
    st_ = stats_of([1.0, 0.0], np.eye(2))
    got = log_likelihood_ratio(st_, np.array([1.0, 0.0]), np.zeros(2))
    assert got == pytest.approx(0.5)


def test_llr_maximized_at_mle():
    rng = np.random.default_rng(7)
    st_ = stats_of(rng.normal(size=3), random_spd(rng, 3))
    peak = mle(st_).theta_hat
    base = np.zeros(3)
    at_peak = log_likelihood_ratio(st_, peak, base)
    for _ in range(30):
        other = peak + rng.normal(scale=0.5, size=3)
        assert log_likelihood_ratio(st_, other, base) <= at_peak + 1e-12


@settings(max_examples=40)
@given(seed=st.integers(min_value=0, max_value=2**31))
def test_llr_cocycle(seed):
    rng = np.random.default_rng(seed)
    st_ = stats_of(rng.normal(size=2), random_spd(rng, 2))
    a, b, c = rng.normal(size=(3, 2))
    lhs = log_likelihood_ratio(st_, c, a)
    rhs = log_likelihood_ratio(st_, c, b) + log_likelihood_ratio(st_, b, a)
    assert lhs == pytest.approx(rhs, abs=1e-10)


@settings(max_examples=40)
@given(seed=st.integers(min_value=0, max_value=2**31))
def test_llr_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    st_ = stats_of(rng.normal(size=2), random_spd(rng, 2))
    a, b = rng.normal(size=(2, 2))
    assert log_likelihood_ratio(st_, a, b) == pytest.approx(
        -log_likelihood_ratio(st_, b, a), abs=1e-10)


# --------------------------------------------------------------- one step

def test_one_step_fixed_point():
    rng = np.random.default_rng(11)
    st_ = stats_of(rng.normal(size=2), random_spd(rng, 2))
    peak = mle(st_).theta_hat
    np.testing.assert_allclose(one_step(st_, peak).theta_hat, peak, atol=1e-12)


@settings(max_examples=40)
@given(seed=st.integers(min_value=0, max_value=2**31))
def test_one_step_reproduces_mle(seed):
    rng = np.random.default_rng(seed)
    st_ = stats_of(rng.normal(size=3), random_spd(rng, 3))
    prelim = rng.normal(scale=3.0, size=3)
    step = one_step(st_, prelim)
    np.testing.assert_allclose(step.theta_hat, mle(st_).theta_hat, atol=1e-12)


def test_one_step_singular_returns_preliminary():
    prelim = np.array([0.7, -0.4])
    step = one_step(stats_of([0.0, 0.0], np.zeros((2, 2))), prelim)
    assert not step.j_invertible
    np.testing.assert_array_equal(step.theta_hat, prelim)


def test_one_step_rejects_nonfinite():
    with pytest.raises(ValueError):
        one_step(stats_of([0.0], [[1.0]]), np.array([np.nan]))
