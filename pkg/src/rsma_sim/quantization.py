"""Additive quantization noise model for low-resolution DACs and ADCs.

A b-bit converter is linearized as ``output = alpha * input + q`` with
``q`` uncorrelated Gaussian distortion. ``beta = 1 - alpha`` is the
normalized mean-squared error of the optimal scalar quantizer for a
unit-variance Gaussian input. Infinite resolution (``math.inf`` bits)
means a distortion-free converter and shares the same code path.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidResolution, InvalidUser

# Distortion of the minimum-MSE scalar quantizer of a unit-variance Gaussian,
# 1 through 5 bits. Above 5 bits the closed-form high-resolution
# approximation (pi*sqrt(3)/2) * 2^(-2b) takes over.
BETA_TABLE = {1: 0.3634, 2: 0.1175, 3: 0.03454, 4: 0.009497, 5: 0.002499}


def beta_of_bits(bits):
    """Normalized quantization distortion for a b-bit converter.

    Tabulated for 1..5 bits, closed-form ``(pi*sqrt(3)/2) * 4^-b`` above,
    exactly zero for infinite resolution.
    """
    if bits == math.inf:
        return 0.0
    if not isinstance(bits, (int, np.integer)) or isinstance(bits, bool):
        raise InvalidResolution(f"resolution must be a positive integer or inf, got {bits!r}")
    if bits <= 0:
        raise InvalidResolution(f"resolution must be positive, got {bits}")
    if bits <= 5:
        return BETA_TABLE[int(bits)]
    return (math.pi * math.sqrt(3.0) / 2.0) * 2.0 ** (-2 * int(bits))


def _gains(bits_list):
    """Per-element (alpha, beta) with alpha + beta == 1 exactly.

    alpha is computed first; beta is then re-derived as 1 - alpha, which is
    exact in floating point because alpha lies in [0.5, 1].
    """
    alpha = np.array([1.0 - beta_of_bits(b) for b in bits_list], dtype=float)
    beta = 1.0 - alpha
    return alpha, beta


@dataclass(frozen=True)
class QuantizerProfile:
    """Per-antenna DAC and per-user ADC resolutions with derived gains."""

    dac_bits: tuple
    adc_bits: tuple
    dac_alpha: np.ndarray
    dac_beta: np.ndarray
    adc_alpha: np.ndarray
    adc_beta: np.ndarray

    @classmethod
    def from_bits(cls, dac_bits, adc_bits):
        """Build a profile from resolution lists (ints or ``math.inf``)."""
        dac_bits = tuple(dac_bits)
        adc_bits = tuple(adc_bits)
        dac_alpha, dac_beta = _gains(dac_bits)
        adc_alpha, adc_beta = _gains(adc_bits)
        return cls(dac_bits, adc_bits, dac_alpha, dac_beta, adc_alpha, adc_beta)

    @property
    def n_antennas(self):
        return len(self.dac_bits)

    @property
    def n_users(self):
        return len(self.adc_bits)

    def is_unquantized(self):
        return all(b == math.inf for b in self.dac_bits) and all(
            b == math.inf for b in self.adc_bits
        )


def ideal_profile(n_antennas, n_users):
    """Profile with infinite resolution everywhere (no quantization)."""
    return QuantizerProfile.from_bits(
        [math.inf] * n_antennas, [math.inf] * n_users
    )


def dac_noise_covariance(profile, f_matrix, power):
    """Covariance of the DAC distortion for a given precoder.

    Diagonal N x N matrix with entries
    ``alpha_n * beta_n * power * sum_i |F[n, i]|^2``; exactly zero when
    every DAC has infinite resolution.
    """
    f_matrix = np.asarray(f_matrix, dtype=complex)
    if f_matrix.ndim != 2 or f_matrix.shape[0] != profile.n_antennas:
        raise DimensionMismatch(
            f"precoder has {f_matrix.shape} but profile covers {profile.n_antennas} antennas"
        )
    row_power = np.sum(np.abs(f_matrix) ** 2, axis=1)
    return np.diag(profile.dac_alpha * profile.dac_beta * power * row_power)


def adc_noise_variance(profile, k, channel, f_matrix, power, noise_power):
    """Variance of the ADC distortion observed by user k.

    Expands the distortion of the received analog signal in terms of the
    precoder columns:

        alpha_k * beta_k * (power * sum_i [ |h_k^H Phi_a f_i|^2
            + f_i^H Phi_a Phi_b diag(|h_k|^2) f_i ] + noise_power)

    Zero when user k's ADC has infinite resolution.
    """
    channel = np.asarray(channel, dtype=complex)
    f_matrix = np.asarray(f_matrix, dtype=complex)
    if not 0 <= k < profile.n_users:
        raise InvalidUser(f"user index {k} out of range for {profile.n_users} users")
    if channel.shape[0] != profile.n_antennas or f_matrix.shape[0] != profile.n_antennas:
        raise DimensionMismatch("channel/precoder rows must match the antenna count")
    if channel.shape[1] != profile.n_users:
        raise DimensionMismatch("channel columns must match the user count")

    h_k = channel[:, k]
    beam_gains = np.abs((h_k.conj() * profile.dac_alpha) @ f_matrix) ** 2
    diag_weights = profile.dac_alpha * profile.dac_beta * np.abs(h_k) ** 2
    diag_terms = diag_weights @ (np.abs(f_matrix) ** 2)
    total = power * (beam_gains.sum() + diag_terms.sum()) + noise_power
    return float(profile.adc_alpha[k] * profile.adc_beta[k] * total)
