"""Beat segmentation, per-beat amplitude normalization and HR filtering.

Onsets are derivative peaks: strict local maxima of the first derivative
whose value exceeds the 70th percentile of all derivative samples, pruned so
no two onsets sit closer than one period at the maximum plausible heart rate
(the same 150 bpm constant the HR filter uses).  Each beat then spans
foot-to-foot: an onset's foot is the signal minimum between the previous
onset and the onset itself, which places the left valley inside the beat and
makes the detrending chord connect the two feet.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError, NoBeatsError, TooFewSamplesError
from .ingest import CompositeSignal
from .numutil import gradient_nonuniform, local_maxima, percentile


@dataclass
class Beat:
    """One beat-to-beat interval.

    ``samples`` covers the inclusive index range [start_idx, end_idx] of the
    source signal; consecutive beats share their boundary foot sample.
    """

    start_idx: int
    peak_idx: int
    end_idx: int
    samples: np.ndarray
    t: np.ndarray
    hr_bpm: float
    normalized: bool = False

    def __post_init__(self):
        if not (self.start_idx < self.peak_idx < self.end_idx):
            raise InvalidInputError("beat indices must satisfy start < peak < end")
        if self.hr_bpm <= 0:
            raise InvalidInputError("beat HR must be positive")

    def __len__(self):
        return len(self.samples)


@dataclass
class BeatSeries:
    beats: list
    fs: float
    dropped: list = field(default_factory=list)  # (start_idx, reason) pairs

    def __len__(self):
        return len(self.beats)


def first_derivative(signal: CompositeSignal) -> np.ndarray:
    """Central-difference derivative of the composite signal."""
    if len(signal) < 3:
        raise TooFewSamplesError("derivative needs at least 3 samples")
    return gradient_nonuniform(signal.t, signal.z)


def _onset_indices(signal: CompositeSignal, deriv, percentile_q, min_gap_s):
    threshold = percentile(deriv, percentile_q)
    candidates = [i for i in local_maxima(deriv)
                  if deriv[i] > 0.0 and deriv[i] > threshold]
    if not candidates:
        return []
    # prune by descending height so the strongest peak in each refractory
    # window wins; ties resolve to the earlier index
    order = sorted(candidates, key=lambda i: (-deriv[i], i))
    kept = []
    for i in order:
        if all(abs(signal.t[i] - signal.t[j]) >= min_gap_s for j in kept):
            kept.append(i)
    return sorted(kept)


def segment_beats(signal: CompositeSignal, derivative_percentile: float = 70.0,
                  min_onset_gap_s: float = 0.4) -> BeatSeries:
    """Split the signal into foot-to-foot beats anchored at derivative peaks."""
    deriv = first_derivative(signal)
    onsets = _onset_indices(signal, deriv, derivative_percentile, min_onset_gap_s)
    if len(onsets) < 2:
        raise NoBeatsError(f"found {len(onsets)} onsets; need at least 2")

    z = signal.z
    feet = []
    prev = 0
    for onset in onsets:
        lo = max(prev, 0)
        seg = z[lo:onset + 1]
        feet.append(lo + int(np.argmin(seg)))
        prev = onset
    beats = []
    dropped = []
    for a, b in zip(feet[:-1], feet[1:]):
        if b - a < 3:
            dropped.append((a, "too_short"))
            continue
        interior = z[a + 1:b]
        peak = a + 1 + int(np.argmax(interior))
        duration = float(signal.t[b] - signal.t[a])
        beats.append(Beat(
            start_idx=a,
            peak_idx=peak,
            end_idx=b,
            samples=z[a:b + 1].copy(),
            t=signal.t[a:b + 1].copy(),
            hr_bpm=60.0 / duration,
            normalized=False,
        ))
    if not beats:
        raise NoBeatsError("no beat spans at least 3 samples")
    return BeatSeries(beats=beats, fs=signal.fs, dropped=dropped)


def normalize_amplitude(series: BeatSeries, signal: CompositeSignal = None) -> BeatSeries:
    """Detrend each beat against its foot-to-foot chord, then map to [0, 1].

    Subtracting the chord between the beat's first and last sample removes
    the baseline drift the feet ride on; the affine map then pins the beat
    minimum to 0 and the peak to 1.  Beats whose detrended range vanishes
    are dropped with a logged reason.
    """
    out = []
    dropped = list(series.dropped)
    for beat in series.beats:
        s = beat.samples
        if len(s) < 3:
            dropped.append((beat.start_idx, "too_short"))
            continue
        frac = (beat.t - beat.t[0]) / (beat.t[-1] - beat.t[0])
        detrended = s - (s[0] + (s[-1] - s[0]) * frac)
        lo = detrended.min()
        hi = detrended.max()
        if hi - lo <= 1e-12:
            dropped.append((beat.start_idx, "flat"))
            continue
        norm = (detrended - lo) / (hi - lo)
        peak = beat.start_idx + int(np.argmax(norm[1:-1])) + 1
        out.append(replace(beat, samples=norm, peak_idx=peak, normalized=True))
    return BeatSeries(beats=out, fs=series.fs, dropped=dropped)


def filter_hr(series: BeatSeries, max_bpm: float = 150.0) -> BeatSeries:
    """Remove beats whose implied HR strictly exceeds ``max_bpm``."""
    kept = [b for b in series.beats if b.hr_bpm <= max_bpm]
    dropped = list(series.dropped)
    dropped += [(b.start_idx, "hr") for b in series.beats if b.hr_bpm > max_bpm]
    return BeatSeries(beats=kept, fs=series.fs, dropped=dropped)


def beats_to_json(series: BeatSeries) -> str:
    """Beats as a JSON array of index/HR records, dropped beats included."""
    records = [
        {"start_idx": b.start_idx, "peak_idx": b.peak_idx,
         "end_idx": b.end_idx, "hr_bpm": b.hr_bpm}
        for b in series.beats
    ]
    records += [
        {"start_idx": idx, "dropped_reason": reason}
        for idx, reason in series.dropped
    ]
    records.sort(key=lambda r: r["start_idx"])
    return json.dumps(records, indent=2, sort_keys=True)
