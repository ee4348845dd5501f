"""Load per-frame RGB channel means and compose the pulse signal.

The camera pipeline upstream of this package reduces every video frame to
three channel means in [0, 256).  Composition turns the three channel series
into one dimensionless pulse signal: each channel is converted to a moving
z-score (centered window, 100 samples by default) and the three z-scores are
averaged with equal weight.  Validity of a finished sample is gated on
points per beat, recording duration and the externally supplied signal
quality index.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ParseError
from .numutil import median

CHANNEL_MAX = 256.0


@dataclass
class FrameSeries:
    """Per-frame channel means on a strictly increasing time base."""

    t: np.ndarray
    r_mean: np.ndarray
    g_mean: np.ndarray
    b_mean: np.ndarray
    nominal_fps: float

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.r_mean = np.asarray(self.r_mean, dtype=float)
        self.g_mean = np.asarray(self.g_mean, dtype=float)
        self.b_mean = np.asarray(self.b_mean, dtype=float)
        n = len(self.t)
        if n < 2:
            raise InvalidInputError("frame series needs at least 2 frames")
        if any(len(ch) != n for ch in (self.r_mean, self.g_mean, self.b_mean)):
            raise InvalidInputError("channel arrays must match the time base")
        if not np.all(np.diff(self.t) > 0):
            raise InvalidInputError("frame times must be strictly increasing")
        for name, ch in (("r", self.r_mean), ("g", self.g_mean), ("b", self.b_mean)):
            if not np.all(np.isfinite(ch)):
                raise InvalidInputError(f"{name} channel contains non-finite values")
            if np.any(ch < 0.0) or np.any(ch >= CHANNEL_MAX):
                raise InvalidInputError(f"{name} channel outside [0, {CHANNEL_MAX:g})")

    def __len__(self):
        return len(self.t)

    def channels(self):
        return self.r_mean, self.g_mean, self.b_mean


@dataclass
class CompositeSignal:
    """Z-scored composite pulse signal with an effective sample rate."""

    t: np.ndarray
    z: np.ndarray
    fs: float

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        if len(self.t) != len(self.z):
            raise InvalidInputError("time and value arrays must match")
        if not np.all(np.isfinite(self.z)):
            raise InvalidInputError("composite signal contains non-finite values")

    def __len__(self):
        return len(self.z)

    @property
    def duration_s(self):
        return float(self.t[-1] - self.t[0])


@dataclass
class ValidityReport:
    points_per_beat: float
    duration_s: float
    sqi: float
    is_valid: bool
    reasons: list = field(default_factory=list)


def load_frames(path) -> FrameSeries:
    """Parse a frames CSV (header ``t,r_mean,g_mean,b_mean``)."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "r_mean", "g_mean", "b_mean"]:
            raise ParseError(f"{path}: expected header t,r_mean,g_mean,b_mean")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if len(rows) < 2:
        raise ParseError(f"{path}: fewer than 2 data rows")
    arr = np.asarray(rows, dtype=float)
    dt = np.diff(arr[:, 0])
    if not np.all(dt > 0):
        raise InvalidInputError(f"{path}: frame times must be strictly increasing")
    fps = 1.0 / float(np.median(dt))
    return FrameSeries(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], nominal_fps=fps)


def write_signal_csv(path, signal: CompositeSignal):
    """Emit the composite signal as a ``t,z`` CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,z\n")
        for t, z in zip(signal.t, signal.z):
            fh.write(f"{t!r},{z!r}\n")


def _moving_zscore(x, window):
    """Per-sample z-score against a centered ``window``-sample mean/SD.

    Samples whose centered window would run off the edge reuse the nearest
    full window, so the statistics are defined everywhere.  Windows with a
    vanishing SD emit 0 so downstream segmentation stays total.
    """
    n = len(x)
    half = window // 2
    views = np.lib.stride_tricks.sliding_window_view(x, window)
    means = views.mean(axis=1)
    sds = views.std(axis=1)
    starts = np.clip(np.arange(n) - half, 0, n - window)
    mu = means[starts]
    sd = sds[starts]
    z = np.zeros(n, dtype=float)
    ok = sd > 1e-12
    z[ok] = (x[ok] - mu[ok]) / sd[ok]
    return z


def compose_signal(frames: FrameSeries, window: int = 100) -> CompositeSignal:
    """Average the three channels' moving z-scores into one pulse signal."""
    n = len(frames)
    if n < window:
        raise InvalidInputError(f"series of {n} frames is shorter than window {window}")
    z = np.zeros(n, dtype=float)
    for ch in frames.channels():
        z += _moving_zscore(np.asarray(ch, dtype=float), window)
    z /= 3.0
    fs = (n - 1) / float(frames.t[-1] - frames.t[0])
    return CompositeSignal(frames.t.copy(), z, fs)


def validate_sample(signal: CompositeSignal, beats, sqi: float,
                    min_points_per_beat: float = 15.0,
                    min_duration_s: float = 100.0,
                    min_sqi: float = 0.8) -> ValidityReport:
    """Check the three validity gates; always returns a report."""
    if beats is not None and len(beats.beats) > 0:
        spans = [b.end_idx - b.start_idx for b in beats.beats]
        ppb = median(spans)
    else:
        ppb = 0.0
    duration = signal.duration_s
    reasons = []
    if ppb < min_points_per_beat:
        reasons.append("points_per_beat")
    if duration < min_duration_s:
        reasons.append("duration")
    if not sqi > min_sqi:
        reasons.append("sqi")
    return ValidityReport(
        points_per_beat=float(ppb),
        duration_s=float(duration),
        sqi=float(sqi),
        is_valid=not reasons,
        reasons=reasons,
    )
