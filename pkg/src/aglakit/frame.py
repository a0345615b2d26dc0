"""Discrete Gabor transform on a periodic signal model.

Coefficient grids are complex arrays of shape ``(n_channels, n_frames)``
with ``n_frames = signal_len // hop``. The analysis convention is the
frequency-invariant one::

    c[m, k] = sum_l x[l] * conj(g[(l - k*hop) mod L]) * exp(-2j*pi*m*l/M)

Windows are given in zero-phase FIR layout: entry 0 is the window centre,
the second half of the vector holds the negative time offsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

NUTTALL_COEFFS = (0.355768, 0.487396, 0.144232, 0.012604)

DENSE_MAX_ENTRIES = 2**16
SINGULAR_TOL = 1e-12


class FrameError(ValueError):
    """Window/hop combination does not form a usable (painless) frame."""


def nuttall_window(win_len: int) -> np.ndarray:
    """Periodic 4-term Nuttall window, zero-phase and unit L2 norm.

    Parameters
    ----------
    win_len : int
        Number of taps, at least 2.

    Returns
    -------
    ndarray, shape (win_len,)
        ``w[k] == w[win_len - k]``, peak at index 0.
    """
    if win_len < 2:
        raise ValueError(f"win_len must be >= 2, got {win_len}")
    a0, a1, a2, a3 = NUTTALL_COEFFS
    x = 2.0 * np.pi * np.arange(win_len) / win_len
    # the periodic form rotated by win_len/2 flips the sign of the odd terms
    w = a0 + a1 * np.cos(x) + a2 * np.cos(2 * x) + a3 * np.cos(3 * x)
    return w / np.linalg.norm(w)


def fir2long(window: np.ndarray, length: int) -> np.ndarray:
    """Zero-pad a zero-phase FIR window to ``length`` samples."""
    window = np.asarray(window, dtype=float)
    n = window.size
    if n > length:
        raise ValueError(f"window of {n} taps does not fit in length {length}")
    out = np.zeros(length)
    head = (n + 1) // 2
    out[:head] = window[:head]
    if n > head:
        out[length - (n - head):] = window[head:]
    return out


@dataclass(frozen=True)
class GaborSystem:
    """Painless Gabor frame on C^L.

    Parameters
    ----------
    window : array_like
        Real zero-phase FIR window, ``len(window) <= n_channels``.
    hop : int
        Time shift between frames, in samples.
    n_channels : int
        Number of frequency channels (FFT length).
    signal_len : int
        Length L of the periodic signal; multiple of ``hop`` and
        ``n_channels``.
    """

    window: np.ndarray
    hop: int
    n_channels: int
    signal_len: int
    _block: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = np.asarray(self.window, dtype=float).copy()
        w.setflags(write=False)
        object.__setattr__(self, "window", w)
        a, M, L = self.hop, self.n_channels, self.signal_len
        if w.ndim != 1 or w.size == 0:
            raise ValueError("window must be a non-empty 1-D vector")
        if min(a, M, L) <= 0:
            raise ValueError("hop, n_channels and signal_len must be positive")
        if L % a:
            raise ValueError(f"hop {a} does not divide signal_len {L}")
        if L % M:
            raise ValueError(f"n_channels {M} does not divide signal_len {L}")
        if w.size > M:
            raise ValueError(
                f"window length {w.size} exceeds n_channels {M} (painless case only)"
            )
        if M <= a:
            raise ValueError(f"redundancy n_channels/hop = {M}/{a} must exceed 1")
        # Offsets -(win_len // 2) .. M - win_len//2 - 1 cover the window support.
        start = -(w.size // 2)
        frames = np.arange(L // a)[:, None] * a
        idx = (frames + start + np.arange(M)[None, :]) % L
        idx.setflags(write=False)
        object.__setattr__(self, "_block", idx)

    @property
    def n_frames(self) -> int:
        return self.signal_len // self.hop

    @property
    def shape(self) -> tuple[int, int]:
        """Coefficient grid shape ``(n_channels, n_frames)``."""
        return (self.n_channels, self.n_frames)

    @property
    def n_coefficients(self) -> int:
        return self.n_channels * self.n_frames

    @property
    def redundancy(self) -> float:
        return self.n_channels / self.hop

    @cached_property
    def long_window(self) -> np.ndarray:
        return fir2long(self.window, self.signal_len)

    @cached_property
    def frame_diagonal(self) -> np.ndarray:
        """Diagonal of the frame operator ``T* T`` (length L, hop-periodic)."""
        a, L = self.hop, self.signal_len
        g2 = np.abs(self.long_window) ** 2
        period = g2.reshape(L // a, a).sum(axis=0) * self.n_channels
        return np.tile(period, L // a)

    @cached_property
    def dual_window(self) -> np.ndarray:
        return canonical_dual_window(self)

    @cached_property
    def _window_block(self) -> np.ndarray:
        return self.long_window[self._block[0]]

    @cached_property
    def _dual_block(self) -> np.ndarray:
        return self.dual_window[self._block[0]]

    @cached_property
    def _residues(self) -> np.ndarray:
        return self._block % self.n_channels


def canonical_dual_window(sys: GaborSystem) -> np.ndarray:
    """Canonical dual window of a painless frame, length L.

    The frame operator is diagonal, so the dual is the long window divided
    pointwise by that diagonal.
    """
    diag = sys.frame_diagonal
    if np.min(diag) < SINGULAR_TOL:
        bad = int(np.argmin(diag))
        raise FrameError(
            f"frame operator vanishes at sample {bad}: "
            f"window of {sys.window.size} taps with hop {sys.hop} is not a frame"
        )
    return sys.long_window / diag


def _check_signal(x, sys: GaborSystem) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (sys.signal_len,):
        raise ValueError(f"signal has shape {x.shape}, expected ({sys.signal_len},)")
    return x


def _check_grid(c, sys: GaborSystem) -> np.ndarray:
    c = np.asarray(c)
    if c.shape != sys.shape:
        raise ValueError(f"coefficient grid has shape {c.shape}, expected {sys.shape}")
    return c


def analyze(x, sys: GaborSystem) -> np.ndarray:
    """Gabor coefficients ``T x`` as an ``(n_channels, n_frames)`` grid."""
    x = _check_signal(x, sys)
    idx = sys._block
    frames = x[idx] * sys._window_block
    # Each frame covers M consecutive samples, i.e. each residue mod M once.
    folded = np.empty(frames.shape, dtype=complex)
    np.put_along_axis(folded, sys._residues, frames, axis=1)
    return np.fft.fft(folded, axis=1).T


def synthesize(c, sys: GaborSystem) -> np.ndarray:
    """Dual-window overlap-add, equal to ``pinv(T) @ c``."""
    c = _check_grid(c, sys)
    M, L = sys.n_channels, sys.signal_len
    periodic = np.fft.ifft(c.T, axis=1) * M
    frames = np.take_along_axis(periodic, sys._residues, axis=1) * sys._dual_block
    flat = sys._block.ravel()
    re = np.bincount(flat, weights=frames.real.ravel(), minlength=L)
    im = np.bincount(flat, weights=frames.imag.ravel(), minlength=L)
    return re + 1j * im


def dense_operator(sys: GaborSystem) -> np.ndarray:
    """Explicit analysis matrix, rows ordered like ``analyze(x).ravel()``.

    Only meant for small test instances.
    """
    M, N, L = sys.n_channels, sys.n_frames, sys.signal_len
    if M * N * L > DENSE_MAX_ENTRIES:
        raise ValueError(
            f"dense operator would have {M * N * L} entries (limit {DENSE_MAX_ENTRIES})"
        )
    g = sys.long_window
    m = np.arange(M)[:, None, None]
    k = np.arange(N)[None, :, None]
    l = np.arange(L)[None, None, :]
    T = np.conj(g[(l - k * sys.hop) % L]) * np.exp(-2j * np.pi * m * l / M)
    return T.reshape(M * N, L)
