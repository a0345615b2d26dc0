"""Spectral SNR of coefficient grids."""

import math

import numpy as np

SSNR_INF = math.inf


def ssnr(c, s) -> float:
    """Spectral signal-to-noise ratio in dB.

    ``-10 * log10(|| |c| - s || / || s ||)``; the ratio of norms is not
    squared. Returns ``inf`` when the magnitudes match exactly.
    """
    c = np.asarray(c)
    s = np.asarray(s, dtype=float)
    if c.shape != s.shape:
        raise ValueError(f"grid shape {c.shape} does not match target shape {s.shape}")
    ref = np.linalg.norm(s)
    if ref == 0:
        raise ValueError("ssnr is undefined for an all-zero target")
    err = np.linalg.norm(np.abs(c) - s)
    if err == 0:
        return SSNR_INF
    return float(-10.0 * math.log10(err / ref))
