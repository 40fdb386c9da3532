import math

import numpy as np
import pytest

from gatenoise.errors import NotPositiveSemidefiniteError, ValidationError
from gatenoise.noise import (
    ConstantSource,
    OUSource,
    PsdSource,
    ZeroSource,
    franklin_trajectory,
    ou_covariance,
    ou_step,
    percival_lag0_variance,
    percival_trajectory,
)
from gatenoise.psd import NoisePsd


# --------------------------------------------------------------------- #
# ou_step

def test_ou_step_noiseless_decay():
    eta = 1.37
    out = ou_step(eta, dt=0.2, tau_c=0.5, c=3.0, u=0.0)
    assert out == pytest.approx(eta * math.exp(-0.4), rel=1e-14)


def test_ou_step_stationary_resampling_limit():
    c, tau = 5.0, 0.3
    out = ou_step(2.0, dt=1e3 * tau, tau_c=tau, c=c, u=1.0)
    assert out == pytest.approx(math.sqrt(0.5 * c * tau), rel=1e-12)


def test_ou_step_rejects_bad_arguments():
    with pytest.raises(ValidationError):
        ou_step(0.0, dt=-1.0, tau_c=1.0, c=1.0, u=0.0)
    with pytest.raises(ValidationError):
        ou_step(0.0, dt=1.0, tau_c=0.0, c=1.0, u=0.0)


def test_ou_step_lag_autocovariance_monte_carlo():
    # ensemble lag-tau autocovariance -> c tau / (2 e)
    c, tau, dt = 2.0, 1.0, 0.1
    n = 100000
    rng = np.random.default_rng(42)
    eta = math.sqrt(0.5 * c * tau) * rng.standard_normal(n)
    eta0 = eta.copy()
    for _ in range(10):
        eta = ou_step(eta, dt, tau, c, rng.standard_normal(n))
    target = 0.5 * c * tau / math.e
    got = (eta0 * eta).mean()
    se = (eta0 * eta).std(ddof=1) / math.sqrt(n)
    assert abs(got - target) < 3 * se


def test_ou_step_composition_is_distribution_identical():
    # two steps of dt match one step of 2dt in mean and variance
    c, tau, dt = 3.0, 0.7, 0.25
    n = 100000
    rng = np.random.default_rng(7)
    eta0 = math.sqrt(0.5 * c * tau) * rng.standard_normal(n)
    two = ou_step(ou_step(eta0, dt, tau, c, rng.standard_normal(n)),
                  dt, tau, c, rng.standard_normal(n))
    one = ou_step(eta0, 2 * dt, tau, c, rng.standard_normal(n))
    for stat in (np.mean, np.var):
        a, b = stat(two), stat(one)
        se = math.sqrt(2.0) * np.var(two) / math.sqrt(n)  # generous scale
        assert abs(a - b) < 4 * max(se, 4 * np.std(two) / math.sqrt(n))


# --------------------------------------------------------------------- #
# franklin_trajectory

def test_franklin_identity_covariance():
    u = np.array([0.3, -1.2, 0.77])
    np.testing.assert_allclose(franklin_trajectory(np.eye(3), u), u)


def test_franklin_scaled_identity():
    u = np.array([1.0, -2.0])
    np.testing.assert_allclose(franklin_trajectory(4.0 * np.eye(2), u), 2.0 * u)


def test_franklin_factorization_roundtrip():
    times = np.linspace(0, 3.0, 64)
    cov = ou_covariance(times, 2.0, 0.5)
    L = np.linalg.cholesky(cov)
    assert np.abs(L @ L.T - cov).max() <= 1e-8 * np.abs(cov).max()


def test_franklin_rejects_indefinite():
    bad = np.array([[1.0, 0.0], [0.0, -0.5]])
    with pytest.raises(NotPositiveSemidefiniteError):
        franklin_trajectory(bad, np.zeros(2))


def test_franklin_handles_near_singular():
    # rank-deficient covariance (perfectly correlated samples)
    cov = np.ones((16, 16))
    u = np.random.default_rng(1).standard_normal(16)
    out = franklin_trajectory(cov, u)
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out, out[0] * np.ones(16), atol=1e-5)


def test_franklin_ou_autocovariance_monte_carlo():
    c, tau = 2.0, 1.0
    times = np.linspace(0, 16 * tau, 256)
    cov = ou_covariance(times, c, tau)
    rng = np.random.default_rng(11)
    traj = franklin_trajectory(cov, rng.standard_normal((10000, 256)))
    dt = times[1] - times[0]
    for lag_steps in (0, 8, 16):
        prods = traj[:, : traj.shape[1] - lag_steps] * traj[:, lag_steps:]
        got = prods.mean()
        se = prods.mean(axis=1).std(ddof=1) / math.sqrt(traj.shape[0])
        target = 0.5 * c * tau * math.exp(-lag_steps * dt / tau)
        assert abs(got - target) < 3 * se


# --------------------------------------------------------------------- #
# percival_trajectory

def test_percival_zero_psd_gives_zero_trajectory():
    psd = NoisePsd.ou(0.0, 1.0)
    traj = percival_trajectory(psd, 16, 0.0, 1.0, np.ones(18))
    np.testing.assert_allclose(traj.values, 0.0)


def test_percival_rejects_odd_count():
    psd = NoisePsd.ou(1.0, 1.0)
    with pytest.raises(ValidationError):
        percival_trajectory(psd, 15, 0.0, 1.0, np.ones(40))
    with pytest.raises(ValidationError):
        percival_trajectory(psd, 16, 1.0, 1.0, np.ones(40))


def test_percival_flat_psd_parseval():
    # flat two-sided density: ensemble variance matches the discrete
    # Parseval sum of sampled densities
    psd = NoisePsd.tabulated([1e-6, 1e6], [2.5, 2.5], 2.5, 2.5)
    m_f, span = 128, 10.0
    rng = np.random.default_rng(3)
    n_traj = 10000
    acc = np.empty(n_traj)
    for i in range(n_traj):
        traj = percival_trajectory(psd, m_f, 0.0, span, rng.standard_normal(m_f + 2))
        acc[i] = (traj.values**2).mean()
    target = percival_lag0_variance(psd, m_f, span)
    se = acc.std(ddof=1) / math.sqrt(n_traj)
    assert abs(acc.mean() - target) < 3 * se


def test_percival_ou_lag0_matches_process_variance():
    c, tau = 2.0, 1.0
    psd = NoisePsd.ou(c, tau)
    m_f, span = 512, 50.0 * tau
    rng = np.random.default_rng(5)
    acc = np.empty(10000)
    for i in range(10000):
        traj = percival_trajectory(psd, m_f, 0.0, span, rng.standard_normal(m_f + 2))
        acc[i] = (traj.values**2).mean()
    assert acc.mean() == pytest.approx(0.5 * c * tau, rel=0.05)


def test_percival_and_franklin_agree_on_ou_autocovariance():
    c, tau = 1.5, 1.0
    psd = NoisePsd.ou(c, tau)
    times = np.linspace(0, 32 * tau, 128, endpoint=False)
    cov = ou_covariance(times, c, tau)
    rng = np.random.default_rng(9)
    n = 6000
    fr = franklin_trajectory(cov, rng.standard_normal((n, 128)))
    pv = np.empty((n, 128))
    for i in range(n):
        pv[i] = percival_trajectory(psd, 128, 0.0, 32 * tau,
                                    rng.standard_normal(130)).values
    lag = 4
    a = (fr[:, :-lag] * fr[:, lag:]).mean(axis=1)
    b = (pv[:, :-lag] * pv[:, lag:]).mean(axis=1)
    se = math.hypot(a.std(ddof=1) / math.sqrt(n), b.std(ddof=1) / math.sqrt(n))
    assert abs(a.mean() - b.mean()) < 3 * se


# --------------------------------------------------------------------- #
# noise sources

def test_sources_are_reproducible_and_stream_independent():
    src = OUSource(2.0, 0.5)
    a = src.increments_block(123, range(4, 8), 50, 0.01)
    b = src.increments_block(123, range(4, 8), 50, 0.01)
    np.testing.assert_array_equal(a, b)
    # same indices in different order give the same per-index rows
    c = src.increments_block(123, [6, 4], 50, 0.01)
    np.testing.assert_array_equal(c[0], a[2])
    np.testing.assert_array_equal(c[1], a[0])


def test_constant_and_zero_sources():
    const = ConstantSource(3.0)
    np.testing.assert_allclose(const.increments_block(0, range(2), 4, 0.5),
                               1.5 * np.ones((2, 4)))
    zero = ZeroSource()
    assert zero.increments_block(0, range(3), 5, 0.1).sum() == 0.0


def test_psd_source_variance():
    c, tau = 2.0, 1.0
    src = PsdSource(NoisePsd.ou(c, tau))
    dt = 0.05 * tau
    vals = src.increments_block(7, range(3000), 600, dt) / dt
    # discard nothing; stationary variance across the whole block
    assert vals.var() == pytest.approx(0.5 * c * tau, rel=0.05)
