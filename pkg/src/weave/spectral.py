"""Band-power quality metrics over Welch periodograms.

All ratios are integrated band power relative to a broad reference band,
clamped to [0, 1]. A signal with zero total reference power scores 0 rather
than raising: downstream consumers need a number, not an exception.
"""

from __future__ import annotations

import numpy as np
from scipy import signal as _signal

from .errors import (
    InvalidBandError,
    NonFiniteInputError,
    NyquistViolationError,
    WindowTooShortError,
)

# Welch parameters: 1 s Hann segments, 50% overlap. Deterministic and gives
# 1 Hz bins for integer sampling rates.
SEGMENT_SECONDS = 1.0


def welch_psd(samples: np.ndarray, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """Welch PSD with the engine's fixed estimator parameters."""
    nperseg = int(round(fs * SEGMENT_SECONDS))
    return _signal.welch(
        samples, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg // 2
    )


def _check_samples(samples, fs: float) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        x = x.ravel()
    if fs <= 0:
        raise InvalidBandError(f"sampling rate must be positive, got {fs}")
    if x.size < 2 * fs:
        raise WindowTooShortError(
            f"need at least {int(2 * fs)} samples (2 s at {fs} Hz), got {x.size}"
        )
    if not np.all(np.isfinite(x)):
        raise NonFiniteInputError("samples contain NaN or infinite values")
    return x


def band_power_ratio(
    samples,
    fs: float,
    band: tuple[float, float],
    reference: tuple[float, float],
) -> float:
    """Integrated Welch power in `band` over integrated power in `reference`.

    Both bands are inclusive in frequency. Clamped to [0, 1]; zero reference
    power yields 0.
    """
    x = _check_samples(samples, fs)
    freqs, pxx = welch_psd(x, fs)
    num = float(pxx[(freqs >= band[0]) & (freqs <= band[1])].sum())
    ref = float(pxx[(freqs >= reference[0]) & (freqs <= reference[1])].sum())
    if ref <= 0.0:
        return 0.0
    return min(1.0, max(0.0, num / ref))


def estimate_powerline(samples, fs: float, line_freq: float) -> float:
    """Relative power in a +/-1 Hz band around `line_freq`.

    Reference band is [1, fs/2 - 1] Hz. Requires fs > 2 * line_freq and at
    least 2 s of finite samples.
    """
    if fs <= 2 * line_freq:
        raise NyquistViolationError(
            f"line frequency {line_freq} Hz not resolvable at fs={fs} Hz"
        )
    return band_power_ratio(
        samples, fs, (line_freq - 1.0, line_freq + 1.0), (1.0, fs / 2 - 1.0)
    )


def estimate_band_ratio(samples, fs: float, band_lo: float, band_hi: float) -> float:
    """Relative power of [band_lo, band_hi] against [0.5, fs/2 - 1]."""
    if not (0 <= band_lo < band_hi <= fs / 2):
        raise InvalidBandError(
            f"band [{band_lo}, {band_hi}] invalid for fs={fs} Hz"
        )
    return band_power_ratio(samples, fs, (band_lo, band_hi), (0.5, fs / 2 - 1.0))
