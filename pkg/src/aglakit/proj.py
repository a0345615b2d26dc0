"""Projections onto the consistent set and the magnitude set, and distances.

The consistent set is the range of the analysis operator; the magnitude set
holds every grid whose entrywise modulus equals the target ``s``.
"""

from __future__ import annotations

import numpy as np

from .frame import GaborSystem, analyze, synthesize

ZERO_TOL = 1e-300


def _check_pair(c, s):
    c = np.asarray(c)
    s = np.asarray(s)
    if c.shape != s.shape:
        raise ValueError(f"grid shape {c.shape} does not match target shape {s.shape}")
    return c, s


def check_target(s) -> np.ndarray:
    """Validate a magnitude target: finite, nonnegative, not all zero."""
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("magnitude target has non-finite entries")
    if np.any(s < 0):
        raise ValueError("magnitude target has negative entries")
    if not np.any(s > 0):
        raise ValueError("magnitude target is identically zero")
    return s


def proj_range(c, sys: GaborSystem) -> np.ndarray:
    """Orthogonal projection ``T T^+ c`` onto the range of the transform."""
    return analyze(synthesize(c, sys), sys)


def proj_magnitude(c, s) -> np.ndarray:
    """Rescale every entry of ``c`` to modulus ``s``, keeping its phase.

    Entries with (numerically) zero modulus are replaced by the real value
    ``s_i``.
    """
    c, s = _check_pair(c, s)
    mag = np.abs(c)
    zero = mag < ZERO_TOL
    # s / |c| is exactly 1 when the modulus already matches, so such entries
    # pass through bitwise
    scale = np.divide(s, mag, out=np.zeros_like(mag), where=~zero)
    return np.where(zero, s, c * scale)


def reflect_range(c, sys: GaborSystem) -> np.ndarray:
    return 2.0 * proj_range(c, sys) - c


def reflect_magnitude(c, s) -> np.ndarray:
    return 2.0 * proj_magnitude(c, s) - np.asarray(c)


def dist_magnitude(c, s) -> float:
    """Euclidean distance from ``c`` to the magnitude set, ``|| |c| - s ||``."""
    c, s = _check_pair(c, s)
    return float(np.linalg.norm(np.abs(c) - s))


def objective(c, s) -> float:
    """Half the squared distance to the magnitude set.

    The indicator of the consistent set is not evaluated; iterates that must
    be consistent are produced by :func:`proj_range`.
    """
    return 0.5 * dist_magnitude(c, s) ** 2
