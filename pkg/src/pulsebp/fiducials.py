"""Locate waveform landmarks and acceleration extrema within one beat.

Landmark rules on a normalized beat (feet at the ends, systolic peak between
them):

* ESP  - the beat's global maximum (earliest on ties).
* LV   - minimum at or before ESP; RV - minimum strictly after ESP.
* DP   - first strict local maximum in (ESP, RV).  When no local maximum
         exists the beat has no second peak; DP falls back to the point of
         minimum second derivative in (ESP, RV).
* DN   - lowest point between ESP and DP (equal to DP on monotone decays).
* IP   - last sign change of the second derivative in (ESP, DN]; when the
         decay carries no inflection, IP coincides with DN.  Without a
         second peak IP is DN by definition.

Acceleration landmarks are windowed extrema of the second-derivative
series: F = min over (ESP, RV), E = max over (ESP, F), A = max before ESP,
B = min over [A, E], H = deepest local minimum in (F, RV) (F itself is the
global minimum, so the plain window minimum would merely hug F's shoulder),
G = max over (F, H).

The ISP is the intersection of the tangent at the steepest upstroke point
with the line through DP and RV; its height substitutes for the systolic
peak height when exposure clipping has flattened the peak.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .beats import Beat
from .errors import DegenerateBeatError, EmptyWindowError, ParallelLinesError, TooFewSamplesError
from .numutil import gradient_nonuniform, intersect_lines, local_maxima, second_derivative

MIN_BEAT_SAMPLES = 15


class Landmark(NamedTuple):
    index: int
    t: float
    amplitude: float


class AccelPoint(NamedTuple):
    index: int
    value: float


class ISPoint(NamedTuple):
    t: float
    amplitude: float
    out_of_range: bool


@dataclass
class FiducialSet:
    """All landmarks of one beat; accel points and ISP fill in later stages."""

    lv: Landmark
    esp: Landmark
    ip: Landmark
    dn: Landmark
    dp: Landmark
    rv: Landmark
    has_second_peak: bool
    accel_series: np.ndarray
    a: AccelPoint = None
    b: AccelPoint = None
    e: AccelPoint = None
    f: AccelPoint = None
    g: AccelPoint = None
    h: AccelPoint = None
    isp: ISPoint = None


def _landmark(beat: Beat, idx: int) -> Landmark:
    return Landmark(int(idx), float(beat.t[idx]), float(beat.samples[idx]))


def detect_fiducials(beat: Beat, smooth_accel: bool = True) -> FiducialSet:
    """Locate LV, ESP, IP, DN, DP and RV on a normalized beat."""
    s = beat.samples
    n = len(s)
    if n < MIN_BEAT_SAMPLES:
        raise TooFewSamplesError(f"beat has {n} samples; need {MIN_BEAT_SAMPLES}")
    accel = second_derivative(beat.t, s, smooth=smooth_accel)

    esp = int(np.argmax(s))
    if esp == 0 or esp == n - 1:
        raise DegenerateBeatError("systolic peak sits on the beat boundary")
    lv = int(np.argmin(s[:esp + 1]))
    rv = esp + 1 + int(np.argmin(s[esp + 1:]))
    if not (s[esp] > s[lv] and s[esp] > s[rv]):
        raise DegenerateBeatError("systolic peak not strictly above both valleys")

    maxima = local_maxima(s, start=esp + 1, stop=rv)
    if maxima:
        has_second_peak = True
        dp = maxima[0]
        dn = esp + 1 + int(np.argmin(s[esp + 1:dp]))
        ip = _last_sign_change(accel, esp + 1, dn)
        if ip is None:
            ip = dn
    else:
        has_second_peak = False
        if rv - esp < 2:
            raise DegenerateBeatError("no interior between peak and right valley")
        dp = esp + 1 + int(np.argmin(accel[esp + 1:rv]))
        dn = esp + 1 + int(np.argmin(s[esp + 1:dp + 1]))
        ip = dn

    return FiducialSet(
        lv=_landmark(beat, lv),
        esp=_landmark(beat, esp),
        ip=_landmark(beat, ip),
        dn=_landmark(beat, dn),
        dp=_landmark(beat, dp),
        rv=_landmark(beat, rv),
        has_second_peak=has_second_peak,
        accel_series=accel,
    )


def _last_sign_change(accel, start, stop):
    """Largest index i in (start, stop] where accel crosses zero at i."""
    for i in range(stop, start, -1):
        if accel[i] == 0.0 or (accel[i - 1] < 0.0) != (accel[i] < 0.0):
            return i
    return None


def _argext(accel, lo, hi, kind):
    """Extremum index of accel over [lo, hi); earliest wins ties."""
    if hi <= lo:
        raise EmptyWindowError(f"empty landmark window [{lo}, {hi})")
    window = accel[lo:hi]
    pick = np.argmin(window) if kind == "min" else np.argmax(window)
    return lo + int(pick)


def detect_accel_points(beat: Beat, fid: FiducialSet) -> FiducialSet:
    """Fill the A, B, E, F, G, H acceleration landmarks."""
    accel = fid.accel_series
    esp, rv = fid.esp.index, fid.rv.index
    f_idx = _argext(accel, esp + 1, rv, "min")
    e_idx = _argext(accel, esp + 1, f_idx, "max")
    a_idx = _argext(accel, 0, esp, "max")
    b_idx = _argext(accel, a_idx, e_idx + 1, "min")
    minima = local_maxima(-accel, start=f_idx + 1, stop=rv)
    if not minima:
        raise EmptyWindowError("no local minimum of the acceleration after F")
    h_idx = min(minima, key=lambda i: (accel[i], i))
    g_idx = _argext(accel, f_idx + 1, h_idx, "max")
    point = lambda i: AccelPoint(int(i), float(accel[i]))
    return replace(fid, a=point(a_idx), b=point(b_idx), e=point(e_idx),
                   f=point(f_idx), g=point(g_idx), h=point(h_idx))


def construct_isp(beat: Beat, fid: FiducialSet) -> FiducialSet:
    """Intersect the max-upstroke tangent with the DP-RV extrapolation line."""
    if fid.dp.t >= fid.rv.t:
        raise DegenerateBeatError("DP does not precede RV in time")
    deriv = gradient_nonuniform(beat.t, beat.samples)
    lo, hi = fid.lv.index, fid.esp.index
    m = lo + int(np.argmax(deriv[lo:hi + 1]))
    slope_tangent = float(deriv[m])
    slope_line = (fid.rv.amplitude - fid.dp.amplitude) / (fid.rv.t - fid.dp.t)
    try:
        t_isp, a_isp = intersect_lines(
            slope_tangent, (beat.t[m], beat.samples[m]),
            slope_line, (fid.dp.t, fid.dp.amplitude),
        )
    except ValueError as exc:
        raise ParallelLinesError(str(exc)) from exc
    out_of_range = not (fid.lv.t <= t_isp <= fid.rv.t)
    return replace(fid, isp=ISPoint(t_isp, a_isp, out_of_range))


def locate_all(beat: Beat, smooth_accel: bool = True) -> FiducialSet:
    """Run landmark, acceleration and ISP detection for one beat."""
    fid = detect_fiducials(beat, smooth_accel=smooth_accel)
    fid = detect_accel_points(beat, fid)
    return construct_isp(beat, fid)


def fiducials_to_json(fid: FiducialSet) -> str:
    """One beat's landmarks as JSON (named points, indices, times, flags)."""
    doc = {"has_second_peak": fid.has_second_peak}
    for name in ("lv", "esp", "ip", "dn", "dp", "rv"):
        p = getattr(fid, name)
        doc[name] = {"index": p.index, "t": p.t, "amplitude": p.amplitude}
    for name in ("a", "b", "e", "f", "g", "h"):
        p = getattr(fid, name)
        if p is not None:
            doc[name] = {"index": p.index, "accel": p.value}
    if fid.isp is not None:
        doc["isp"] = {"t": fid.isp.t, "amplitude": fid.isp.amplitude,
                      "out_of_range": fid.isp.out_of_range}
    return json.dumps(doc, indent=2, sort_keys=True)
