"""Stationary Gaussian noise trajectory generators.

Three routes produce trajectories of the dephasing (or Rabi-rate) noise:

* exact Ornstein-Uhlenbeck updates, valid for any step size;
* Cholesky factorization of an autocovariance matrix (works for
  non-stationary windows too);
* a Fourier-series construction directly from the PSD for wide-sense
  stationary processes.

All generators are pure functions of their random draws; ensembles use one
counter-based stream per trajectory index so results are reproducible and
independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveSemidefiniteError, ValidationError
from .psd import NoisePsd


@dataclass
class NoiseTrajectory:
    """Sampled noise values on a uniform grid, with seed provenance."""

    dt: float
    values: np.ndarray
    seed: tuple | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size < 1:
            raise ValidationError("trajectory must contain at least one sample")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("trajectory contains non-finite values")


def trajectory_rng(seed, index):
    """Independent counter-based generator for one trajectory index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


# --------------------------------------------------------------------- #
# Ornstein-Uhlenbeck process

def ou_step(eta, dt, tau_c, c, u):
    """One exact update of an OU process.

    eta' = eta * exp(-dt/tau_c) + sqrt((c tau_c / 2)(1 - exp(-2 dt/tau_c))) * u

    Exact for any step size; ``u`` is a unit normal draw.
    """
    if dt <= 0 or tau_c <= 0 or c < 0:
        raise ValidationError(f"need dt > 0, tau_c > 0, c >= 0; got {dt}, {tau_c}, {c}")
    decay = math.exp(-dt / tau_c)
    sigma = math.sqrt(0.5 * c * tau_c * (1.0 - decay * decay))
    return eta * decay + sigma * u


def ou_covariance(times, c, tau_c):
    """Fully relaxed OU autocovariance matrix (c tau/2) exp(-|ti-tj|/tau)."""
    times = np.asarray(times, dtype=float)
    gaps = np.abs(times[:, None] - times[None, :])
    return 0.5 * c * tau_c * np.exp(-gaps / tau_c)


# --------------------------------------------------------------------- #
# covariance-based generation

def check_covariance(cov, tol_factor=1e-10):
    """Validate symmetry and (tolerant) positive semidefiniteness."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValidationError("covariance must be a square matrix")
    scale = np.abs(cov).max() or 1.0
    if np.abs(cov - cov.T).max() > 1e-12 * scale:
        raise ValidationError("covariance must be symmetric")
    min_eig = np.linalg.eigvalsh(cov)[0]
    if min_eig < -tol_factor * scale:
        raise NotPositiveSemidefiniteError(
            f"covariance has eigenvalue {min_eig:.3e} below -{tol_factor:.0e} * scale"
        )
    return cov


def franklin_trajectory(cov, u, dt=None, seed=None):
    """Trajectory from a covariance matrix: L @ u with cov = L L^T.

    Near-singular matrices get a diagonal jitter of 1e-12 * max|cov| before
    factorization; genuinely indefinite input raises.
    """
    cov = np.asarray(cov, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != cov.shape[0]:
        raise ValidationError("draw vector length must equal the grid size")
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        cov = check_covariance(cov)  # raises if indefinite beyond tolerance
        scale = np.abs(cov).max() or 1.0
        L = np.linalg.cholesky(cov + 1e-12 * scale * np.eye(cov.shape[0]))
    values = u @ L.T
    if dt is None:
        return values
    return NoiseTrajectory(dt=dt, values=values, seed=seed)


# --------------------------------------------------------------------- #
# PSD-based generation (stationary processes)

def percival_trajectory(psd, m_f, t0, tf, draws, seed=None):
    """Trajectory on ``m_f`` grid points from the PSD via a random Fourier series.

    Coefficients ``A_m = sqrt(S_m / 2) (u_1 + i u_2)`` with two independent
    unit normals per sampled frequency ``f_m = (m) / (tf - t0)``, assembled
    Hermitian-symmetrically so the output is exactly real.  ``S_m`` is the
    two-sided density at ``w = 2 pi f_m``, which makes the lag-0 covariance
    of the ensemble equal the trapezoid approximation of the PSD integral.

    Parameters
    ----------
    psd : NoisePsd
    m_f : int
        Even number of grid samples (>= 4).
    t0, tf : float
        Window; the grid spacing is (tf - t0) / m_f.
    draws : ndarray
        Unit normal draws, length >= m_f + 2 (two per frequency bin
        0..m_f/2 inclusive).
    """
    if m_f % 2 or m_f < 4:
        raise ValidationError(f"m_f must be even and >= 4, got {m_f}")
    if not tf > t0:
        raise ValidationError("need tf > t0")
    draws = np.asarray(draws, dtype=float)
    n_freq = m_f // 2 + 1
    if draws.size < 2 * n_freq:
        raise ValidationError(f"need at least {2 * n_freq} draws, got {draws.size}")
    span = tf - t0
    f0 = 1.0 / span
    freqs = f0 * np.arange(n_freq)
    S = np.asarray(psd.eval(2.0 * math.pi * freqs), dtype=float)
    amp = np.sqrt(0.5 * S)
    A = amp * (draws[0:2 * n_freq:2] + 1j * draws[1:2 * n_freq:2])

    nu = np.zeros(m_f, dtype=complex)
    nu[0] = math.sqrt(2.0) * A[0].real
    nu[1:m_f // 2] = A[1:m_f // 2]
    nu[m_f // 2] = math.sqrt(2.0) * A[m_f // 2].real
    nu[m_f // 2 + 1:] = np.conj(A[1:m_f // 2][::-1])

    # values[j] = sum_m nu_m exp(-2pi i m j / m_f) / sqrt(span) = FFT of nu
    values = np.fft.fft(nu) / math.sqrt(span)
    if np.abs(values.imag).max() > 1e-10 * max(np.abs(values.real).max(), 1e-300):
        raise ValidationError("Fourier assembly lost Hermitian symmetry")
    return NoiseTrajectory(dt=span / m_f, values=values.real.copy(), seed=seed)


def percival_lag0_variance(psd, m_f, span):
    """Exact ensemble variance of :func:`percival_trajectory` samples.

    The discrete Parseval sum ``f0 * (S_0 + 2 sum S_m + S_Nyq)``; converges
    to the process variance as the window grows.
    """
    f0 = 1.0 / span
    freqs = f0 * np.arange(m_f // 2 + 1)
    S = np.asarray(psd.eval(2.0 * math.pi * freqs), dtype=float)
    return f0 * (S[0] + 2.0 * S[1:-1].sum() + S[-1])


# --------------------------------------------------------------------- #
# noise sources for the Langevin integrator

class OUSource:
    """OU dephasing/amplitude noise with exact per-step updates.

    Produces integrated increments ``dt * eta(t_i)`` (accurate to O(dt^2)
    within the integrator); the initial value is drawn from the stationary
    distribution.
    """

    def __init__(self, c, tau_c):
        if c < 0 or tau_c <= 0:
            raise ValidationError("need c >= 0 and tau_c > 0")
        self.c = float(c)
        self.tau_c = float(tau_c)

    def increments_block(self, seed, indices, n_steps, dt):
        m = len(indices)
        normals = np.empty((m, n_steps + 1))
        for row, idx in enumerate(indices):
            normals[row] = trajectory_rng(seed, idx).standard_normal(n_steps + 1)
        decay = math.exp(-dt / self.tau_c)
        sigma = math.sqrt(0.5 * self.c * self.tau_c * (1.0 - decay * decay))
        stat = math.sqrt(0.5 * self.c * self.tau_c)
        values = np.empty((m, n_steps))
        eta = stat * normals[:, 0]
        for i in range(n_steps):
            values[:, i] = eta
            eta = eta * decay + sigma * normals[:, i + 1]
        return values * dt


class PsdSource:
    """Stationary noise drawn from an arbitrary PSD via the Fourier route.

    The trajectory is periodic over the simulation window, so spectral
    content below 1/(n_steps * dt) is absent; use windows spanning several
    correlation times of the spectrum.
    """

    def __init__(self, psd):
        if not isinstance(psd, NoisePsd):
            raise ValidationError("PsdSource needs a NoisePsd")
        self.psd = psd

    def increments_block(self, seed, indices, n_steps, dt):
        m_f = max(4, n_steps + (n_steps % 2))
        n_draws = m_f + 2
        values = np.empty((len(indices), n_steps))
        for row, idx in enumerate(indices):
            draws = trajectory_rng(seed, idx).standard_normal(n_draws)
            traj = percival_trajectory(self.psd, m_f, 0.0, m_f * dt, draws)
            values[row] = traj.values[:n_steps]
        return values * dt


class ConstantSource:
    """Deterministic constant offset (useful for detuning checks)."""

    def __init__(self, value):
        self.value = float(value)

    def increments_block(self, seed, indices, n_steps, dt):
        return np.full((len(indices), n_steps), self.value * dt)


class ZeroSource:
    """No noise at all."""

    def increments_block(self, seed, indices, n_steps, dt):
        return np.zeros((len(indices), n_steps))
