"""Audio I/O, synthetic test signals, trace CSV files and SVG plots."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np
from scipy.io import wavfile

logger = logging.getLogger(__name__)

SIGNAL_KINDS = ("multitone", "linear_chirp", "am_noise", "doppler_like")
MIN_GEN_LEN = 256
PEAK = 0.9

# Tone frequencies in cycles/sample, snapped to DFT bins of the full signal.
# Spaced wider than the main lobe of a 256-tap Nuttall window.
MULTITONE_FREQS = (0.05, 0.1, 0.16, 0.23, 0.31)
MULTITONE_AMPS = (1.0, 0.8, 0.6, 0.5, 0.4)

TRACE_COLUMNS = ("iter", "ssnr_db", "objective", "proj_count", "elapsed_ns")


class SignalFormatError(ValueError):
    """Unsupported audio file layout."""


class TraceParseError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


@dataclass
class Signal:
    samples: np.ndarray
    sample_rate: int = 16000
    name: str = ""

    def __len__(self):
        return self.samples.size


# ---------------------------------------------------------------- audio


def read_wav(path) -> Signal:
    """Read a mono PCM16 or float32 WAV file, scaled to [-1, 1]."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise SignalFormatError(f"{path}: {exc}") from exc
    if data.ndim != 1:
        raise SignalFormatError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(float) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(float)
    else:
        raise SignalFormatError(
            f"{path}: unsupported sample format {data.dtype} (need int16 or float32)"
        )
    return Signal(samples, int(rate), Path(path).stem)


def write_wav(path, signal: Signal, fmt: str = "pcm16") -> int:
    """Write the real part of ``signal`` as mono WAV.

    Samples outside [-1, 1] are clipped; returns the number of clipped
    samples.
    """
    x = np.real(np.asarray(signal.samples))
    clipped = int(np.count_nonzero(np.abs(x) > 1.0))
    if clipped:
        logger.warning("%s: clipped %d of %d samples", path, clipped, x.size)
    x = np.clip(x, -1.0, 1.0)
    if fmt == "pcm16":
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    elif fmt == "float32":
        data = x.astype(np.float32)
    else:
        raise SignalFormatError(f"unsupported output format {fmt!r}")
    wavfile.write(path, int(signal.sample_rate), data)
    return clipped


# ---------------------------------------------------------------- generators


def gen_signal(kind: str, length: int, seed: int = 0, sample_rate: int = 16000) -> Signal:
    """Deterministic synthetic test signal, peak-normalised to 0.9.

    Kinds
    -----
    multitone
        Five sinusoids on exact DFT bins of a length-``length`` transform,
        seeded phases.
    linear_chirp
        Sweep from 0 to 0.4 x Nyquist over the signal.
    am_noise
        White Gaussian noise under a slow sinusoidal envelope.
    doppler_like
        Tone whose frequency glides down around the midpoint, with an
        exponentially decaying amplitude and a little noise.
    """
    if kind not in SIGNAL_KINDS:
        raise ValueError(f"unknown signal kind {kind!r}; choose from {SIGNAL_KINDS}")
    if length < MIN_GEN_LEN:
        raise ValueError(f"signal length must be >= {MIN_GEN_LEN}, got {length}")
    rng = np.random.default_rng(seed)
    n = np.arange(length)
    if kind == "multitone":
        x = np.zeros(length)
        for f, amp, ph in zip(MULTITONE_FREQS, MULTITONE_AMPS, rng.uniform(0, 2 * np.pi, 5)):
            x += amp * np.cos(2 * np.pi * multitone_bin(f, length) * n / length + ph)
    elif kind == "linear_chirp":
        f_end = 0.4 * 0.5
        phase = np.pi * f_end * n**2 / length
        x = np.sin(phase + rng.uniform(0, 2 * np.pi))
    elif kind == "am_noise":
        env = 1.0 + 0.8 * np.sin(2 * np.pi * 3.0 * n / length + rng.uniform(0, 2 * np.pi))
        x = env * rng.standard_normal(length)
    else:
        f0, depth = 0.08, 0.25
        centre, width = 0.5 * length, 0.08 * length
        inst = f0 * (1.0 - depth * np.tanh((n - centre) / width))
        phase = 2 * np.pi * np.cumsum(inst)
        x = np.exp(-2.0 * n / length) * np.sin(phase)
        x = x + 0.01 * rng.standard_normal(length)
    x = PEAK * x / np.max(np.abs(x))
    return Signal(x, sample_rate, f"{kind}_{length}_{seed}")


def multitone_bin(freq: float, length: int) -> int:
    return int(round(freq * length))


def parse_gen(spec: str) -> Signal:
    """Build a signal from ``kind:length:seed`` (seed optional)."""
    parts = spec.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"generator spec must be kind:length[:seed], got {spec!r}")
    seed = int(parts[2]) if len(parts) == 3 else 0
    return gen_signal(parts[0], int(parts[1]), seed)


# ---------------------------------------------------------------- traces


@dataclass
class TraceFile:
    """Header metadata plus one row per iteration.

    Header values are kept as strings so that files round-trip exactly.
    """

    header: dict = field(default_factory=dict)
    iters: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ssnr: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: np.ndarray = field(default_factory=lambda: np.zeros(0))
    proj_count: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    elapsed_ns: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self):
        return self.iters.size

    @property
    def label(self) -> str:
        return str(self.header.get("label") or self.header.get("algorithm", "trace"))

    @classmethod
    def from_run(cls, trace, header: dict) -> "TraceFile":
        return cls(
            {str(k): str(v) for k, v in header.items()},
            np.asarray(trace.iters, dtype=np.int64),
            np.asarray(trace.ssnr, dtype=float),
            np.asarray(trace.objective, dtype=float),
            np.asarray(trace.proj_count, dtype=np.int64),
            np.asarray(trace.elapsed_ns, dtype=np.int64),
        )

    def __eq__(self, other):
        if not isinstance(other, TraceFile):
            return NotImplemented
        return (
            self.header == other.header
            and np.array_equal(self.iters, other.iters)
            and np.array_equal(self.ssnr, other.ssnr)
            and np.array_equal(self.objective, other.objective)
            and np.array_equal(self.proj_count, other.proj_count)
            and np.array_equal(self.elapsed_ns, other.elapsed_ns)
        )


def format_float(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def write_trace_csv(path, trace: TraceFile) -> None:
    lines = [f"# {k}: {v}" for k, v in trace.header.items()]
    lines.append(",".join(TRACE_COLUMNS))
    for i, sn, ob, pc, el in zip(
        trace.iters, trace.ssnr, trace.objective, trace.proj_count, trace.elapsed_ns
    ):
        lines.append(f"{int(i)},{format_float(sn)},{format_float(ob)},{int(pc)},{int(el)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path) -> TraceFile:
    """Parse a trace CSV written by :func:`write_trace_csv`.

    Header values come back as strings.
    """
    header = {}
    rows = []
    seen_columns = False
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition(":")
            if not sep:
                raise TraceParseError(path, lineno, "header line without ':'")
            header[key.strip()] = value.strip()
            continue
        if not seen_columns:
            if tuple(line.strip().split(",")) != TRACE_COLUMNS:
                raise TraceParseError(path, lineno, f"expected column line {','.join(TRACE_COLUMNS)}")
            seen_columns = True
            continue
        fields = line.strip().split(",")
        if len(fields) != len(TRACE_COLUMNS):
            raise TraceParseError(path, lineno, f"expected 5 fields, got {len(fields)}")
        try:
            rows.append((int(fields[0]), float(fields[1]), float(fields[2]),
                         int(fields[3]), int(fields[4])))
        except ValueError as exc:
            raise TraceParseError(path, lineno, str(exc)) from None
    if not seen_columns:
        raise TraceParseError(path, 0, "missing column line")
    if not rows:
        raise TraceParseError(path, 0, "trace has no rows")
    cols = list(zip(*rows))
    return TraceFile(
        header,
        np.array(cols[0], dtype=np.int64),
        np.array(cols[1], dtype=float),
        np.array(cols[2], dtype=float),
        np.array(cols[3], dtype=np.int64),
        np.array(cols[4], dtype=np.int64),
    )


# ---------------------------------------------------------------- plots

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def write_plot_svg(path, traces: Sequence[TraceFile], title: str = "",
                   x_from: Optional[int] = None) -> None:
    """Line chart of SSNR (dB) against iteration, one polyline per trace.

    Infinite SSNR values are drawn at the top of the axis. ``x_from``
    restricts the plot to iterations >= that value.
    """
    if not traces:
        raise ValueError("write_plot_svg needs at least one trace")
    width, height = 720, 440
    left, right, top, bottom = 60, 170, 40, 50
    pw, ph = width - left - right, height - top - bottom

    series = []
    for tr in traces:
        it = tr.iters.astype(float)
        y = tr.ssnr.astype(float)
        if x_from is not None:
            keep = tr.iters >= x_from
            it, y = it[keep], y[keep]
        series.append((it, y))
    finite = np.concatenate([y[np.isfinite(y)] for _, y in series] + [np.zeros(0)])
    y_lo = float(finite.min()) if finite.size else 0.0
    y_hi = float(finite.max()) if finite.size else 1.0
    if y_hi - y_lo < 1e-9:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    x_all = np.concatenate([it for it, _ in series] + [np.zeros(0)])
    x_lo = float(x_all.min()) if x_all.size else 0.0
    x_hi = float(x_all.max()) if x_all.size else 1.0
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        if not np.isfinite(v):
            v = y_hi if v > 0 else y_lo
        return top + (1.0 - (v - y_lo) / (y_hi - y_lo)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="15">'
        f"{escape(title)}</text>",
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for i in range(6):
        yv = y_lo + (y_hi - y_lo) * i / 5
        xv = x_lo + (x_hi - x_lo) * i / 5
        out.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end" '
                   f'font-size="11">{yv:.1f}</text>')
        out.append(f'<text x="{sx(xv):.1f}" y="{top + ph + 16}" text-anchor="middle" '
                   f'font-size="11">{xv:.0f}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" '
               f'font-size="12">iteration</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">SSNR (dB)</text>')
    for i, (tr, (it, y)) in enumerate(zip(traces, series)):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(it, y) if not np.isnan(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}" font-size="11">'
                   f"{escape(tr.label)}</text>")
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
