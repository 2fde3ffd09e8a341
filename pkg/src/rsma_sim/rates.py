"""Exact SINRs and spectral efficiencies for the common and private streams.

The transmitter sends one common stream (precoder column 0), decoded by
every user with all private streams treated as noise, plus K private
streams decoded after the common stream is cancelled. Quantization
distortion from both converter stages stays in the interference budget
of both stream types because cancellation removes only the quantized
common signal, not its distortion.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

_LN2 = np.log(2.0)


@dataclass(frozen=True)
class RateReport:
    """Per-user SINRs/rates and the resulting sum spectral efficiency."""

    common_sinrs: np.ndarray      # (K,)
    common_rates: np.ndarray      # (K,) bits/s/Hz supportable by each user
    common_rate: float            # min over users (exact, no smoothing)
    private_rates: np.ndarray     # (K,) bits/s/Hz
    sum_se: float                 # common_rate + sum(private_rates)


def _stream_terms(k, channel, f_matrix, profile, power, noise_power):
    """Per-stream received powers and the total interference budget for user k.

    Returns (gains, total) where gains[i] = |h_k^H Phi_a f_i|^2 and
    total = sum_i gains[i] + sum_i f_i^H Phi_a Phi_b diag(|h_k|^2) f_i
    + noise_power / power.
    """
    channel = np.asarray(channel, dtype=complex)
    f_matrix = np.asarray(f_matrix, dtype=complex)
    if channel.ndim != 2 or f_matrix.ndim != 2:
        raise DimensionMismatch("channel and precoder must be matrices")
    if channel.shape[0] != f_matrix.shape[0]:
        raise DimensionMismatch(
            f"channel rows {channel.shape[0]} != precoder rows {f_matrix.shape[0]}"
        )
    if channel.shape != (profile.n_antennas, profile.n_users):
        raise DimensionMismatch("channel shape inconsistent with quantizer profile")
    if f_matrix.shape[1] != profile.n_users + 1:
        raise DimensionMismatch(
            f"expected {profile.n_users + 1} precoder columns, got {f_matrix.shape[1]}"
        )
    if not 0 <= k < profile.n_users:
        raise DimensionMismatch(f"user index {k} out of range")

    h_k = channel[:, k]
    gains = np.abs((h_k.conj() * profile.dac_alpha) @ f_matrix) ** 2
    diag_weights = profile.dac_alpha * profile.dac_beta * np.abs(h_k) ** 2
    distortion = diag_weights @ (np.abs(f_matrix) ** 2)
    total = gains.sum() + distortion.sum() + noise_power / power
    return gains, total


def sinr_common(k, channel, f_matrix, profile, power, noise_power):
    """SINR of the common stream at user k."""
    gains, total = _stream_terms(k, channel, f_matrix, profile, power, noise_power)
    alpha_k = profile.adc_alpha[k]
    denom = total - alpha_k * gains[0]
    return float(alpha_k * gains[0] / denom)


def sinr_private(k, channel, f_matrix, profile, power, noise_power):
    """SINR of user k's private stream after the common stream is cancelled."""
    gains, total = _stream_terms(k, channel, f_matrix, profile, power, noise_power)
    alpha_k = profile.adc_alpha[k]
    denom = total - alpha_k * (gains[0] + gains[k + 1])
    return float(alpha_k * gains[k + 1] / denom)


def rate_report(channel, f_matrix, profile, power, noise_power):
    """Evaluate all stream rates for a precoder.

    The common rate is the exact minimum over users of the rates at which
    each could decode the common stream; the sum spectral efficiency adds
    the K private rates.
    """
    n_users = profile.n_users
    common_sinrs = np.empty(n_users)
    private_sinrs = np.empty(n_users)
    for k in range(n_users):
        common_sinrs[k] = sinr_common(k, channel, f_matrix, profile, power, noise_power)
        private_sinrs[k] = sinr_private(k, channel, f_matrix, profile, power, noise_power)
    common_rates = np.log2(1.0 + common_sinrs)
    private_rates = np.log2(1.0 + private_sinrs)
    common_rate = float(common_rates.min())
    return RateReport(
        common_sinrs=common_sinrs,
        common_rates=common_rates,
        common_rate=common_rate,
        private_rates=private_rates,
        sum_se=common_rate + float(private_rates.sum()),
    )


def check_power(f_matrix, profile):
    """Transmit power used by a precoder, normalized to the power budget.

    Equals ``tr(Phi_a F F^H)``; the DAC distortion returns the power it
    removes from the signal path, so the full constraint collapses to
    this weighted trace being at most 1.
    """
    f_matrix = np.asarray(f_matrix, dtype=complex)
    if f_matrix.shape[0] != profile.n_antennas:
        raise DimensionMismatch("precoder rows must match the antenna count")
    row_power = np.sum(np.abs(f_matrix) ** 2, axis=1)
    return float(profile.dac_alpha @ row_power)


def lse_min(values, tau):
    """Smoothed minimum ``-tau * ln(sum_i exp(-x_i / tau))``.

    Lies in [min - tau*ln(len(values)), min] and tightens as tau -> 0.
    Computed in min-shifted form so small tau cannot underflow.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DimensionMismatch("lse_min needs a nonempty list")
    if not tau > 0:
        raise DimensionMismatch(f"tau must be positive, got {tau}")
    low = values.min()
    return float(low - tau * np.log(np.sum(np.exp(-(values - low) / tau))))


def softmin_weights(values, tau):
    """Weights ``exp(-x_k/tau) / sum_l exp(-x_l/tau)``, min-shifted.

    These are the gradient weights of :func:`lse_min`; the smallest entry
    dominates as tau -> 0.
    """
    values = np.asarray(values, dtype=float)
    shifted = np.exp(-(values - values.min()) / tau)
    return shifted / shifted.sum()
