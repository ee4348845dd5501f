"""Power spectrum, harmonic band segmentation and the PSD feature set.

The periodogram of the mean-removed signal is segmented into six harmonic
bands.  Band k is bounded by the midpoints between consecutive harmonic
peaks, where peak k is the highest spectral local maximum within half a
fundamental of k times the fundamental; the lower edge of band 1 sits at
half the fundamental.  Band strengths are trapezoidal areas normalized to
sum to one; the non-harmonic fraction is one minus the first band and the
first band over the inflection-point area gives the harmonic-to-area index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpectrumError
from .ingest import CompositeSignal
from .numutil import local_maxima

MIN_SAMPLES = 256
N_BANDS = 6


@dataclass
class SpectralBands:
    freqs: np.ndarray
    power: np.ndarray
    band_edges: np.ndarray          # 7 strictly increasing frequencies
    psd: np.ndarray                 # 6 normalized band strengths, sum 1
    nha: float
    ihar: float
    missing_harmonics: list         # harmonic numbers that fell back to k*f0


def power_spectrum(signal: CompositeSignal, min_samples: int = MIN_SAMPLES,
                   hann: bool = False):
    """One-sided periodogram |FFT|^2 / (N fs) of the mean-removed signal."""
    x = np.asarray(signal.z, dtype=float)
    n = len(x)
    if n < min_samples:
        raise SpectrumError(f"signal of {n} samples is shorter than {min_samples}")
    x = x - x.mean()
    if hann:
        x = x * np.hanning(n)
    spec = np.fft.rfft(x)
    power = (spec.real ** 2 + spec.imag ** 2) / (n * signal.fs)
    freqs = np.fft.rfftfreq(n, d=1.0 / signal.fs)
    return freqs, power


def segment_harmonics(freqs, power, f0: float):
    """Band edges from midpoints between the first seven harmonic peaks.

    Returns (edges, missing) where ``missing`` lists harmonics whose search
    window held no local maximum and therefore fell back to k*f0 itself.
    """
    freqs = np.asarray(freqs, dtype=float)
    power = np.asarray(power, dtype=float)
    if f0 <= 0:
        raise SpectrumError("fundamental must be positive")
    if freqs[-1] < 7.0 * f0:
        raise SpectrumError(
            f"spectrum reaches {freqs[-1]:.3g} Hz; needs at least {7 * f0:.3g} Hz")
    maxima = local_maxima(power)
    peak_freqs = []
    missing = []
    for k in range(1, 8):
        lo, hi = (k - 0.5) * f0, (k + 0.5) * f0
        in_window = [i for i in maxima if lo <= freqs[i] <= hi]
        if in_window:
            best = max(in_window, key=lambda i: (power[i], -i))
            peak_freqs.append(freqs[best])
        else:
            peak_freqs.append(k * f0)
            missing.append(k)
    edges = np.empty(N_BANDS + 1, dtype=float)
    edges[0] = 0.5 * f0
    for k in range(1, N_BANDS + 1):
        edges[k] = 0.5 * (peak_freqs[k - 1] + peak_freqs[k])
    if not np.all(np.diff(edges) > 0):
        raise SpectrumError("band edges are not strictly increasing")
    return edges, missing


def _band_area(freqs, power, lo, hi):
    """Trapezoidal area of the piecewise-linear spectrum over [lo, hi]."""
    grid = freqs[(freqs > lo) & (freqs < hi)]
    xs = np.concatenate(([lo], grid, [hi]))
    ys = np.interp(xs, freqs, power)
    return float(np.trapezoid(ys, xs))


def psd_features(freqs, power, band_edges, ipa: float,
                 missing_harmonics=()) -> SpectralBands:
    """Normalized band strengths and the derived NHA / IHAR indices."""
    if ipa <= 0:
        raise SpectrumError("IPA must be positive")
    raw = np.array([
        _band_area(freqs, power, band_edges[i], band_edges[i + 1])
        for i in range(N_BANDS)
    ])
    total = raw.sum()
    if total <= 0:
        raise SpectrumError("zero total band power")
    psd = raw / total
    nha = 1.0 - psd[0]
    ihar = psd[0] / ipa
    return SpectralBands(
        freqs=np.asarray(freqs, dtype=float),
        power=np.asarray(power, dtype=float),
        band_edges=np.asarray(band_edges, dtype=float),
        psd=psd,
        nha=float(nha),
        ihar=float(ihar),
        missing_harmonics=list(missing_harmonics),
    )


def spectral_features(signal: CompositeSignal, hr_bpm: float, ipa: float,
                      min_samples: int = MIN_SAMPLES, hann: bool = False) -> SpectralBands:
    """Full spectral stage: periodogram, segmentation, band features."""
    freqs, power = power_spectrum(signal, min_samples=min_samples, hann=hann)
    edges, missing = segment_harmonics(freqs, power, hr_bpm / 60.0)
    return psd_features(freqs, power, edges, ipa, missing_harmonics=missing)


def bands_as_dict(bands: SpectralBands) -> dict:
    out = {f"PSD{i + 1}": float(bands.psd[i]) for i in range(N_BANDS)}
    out["NHA"] = bands.nha
    out["IHAR"] = bands.ihar
    return out
