"""Synthetic smartphone-PPG sessions with closed-form ground truth.

A beat template is a sum of Gaussian lobes over one period (systolic lobe
plus a diastolic lobe by default).  Every landmark the detector looks for
has an analytic counterpart here: extrema come from bracketed root finding
on the closed-form derivative, acceleration landmarks from a 100x
oversampled grid search on the closed-form second derivative.  Sessions
render the template into RGB channel means with per-beat period jitter,
baseline drift and noise; an exposure model with a tracking gain and hard
[0, 256) clipping reproduces the flattened systolic peaks a real camera
produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidInputError
from .ingest import CHANNEL_MAX, FrameSeries
from .numutil import intersect_lines, polygon_area

CLIP_HI = np.nextafter(CHANNEL_MAX, 0.0)


@dataclass(frozen=True)
class BeatTemplate:
    """Sum of Gaussian lobes (center_s, width_s, amplitude) over one period."""

    lobes: tuple
    period: float

    def __post_init__(self):
        if self.period <= 0:
            raise InvalidInputError("template period must be positive")
        for c, w, a in self.lobes:
            if a <= 0 or w <= 0:
                raise InvalidInputError("lobe amplitudes and widths must be positive")
            if not 0.0 <= c < self.period:
                raise InvalidInputError("lobe centers must lie within one period")

    def _terms(self, tau):
        tau = np.asarray(tau, dtype=float)
        for c, w, a in self.lobes:
            for k in (-1.0, 0.0, 1.0):  # neighbouring periods keep tails periodic
                yield a, w, tau - (c + k * self.period)
    def value(self, tau):
        out = np.zeros_like(np.asarray(tau, dtype=float))
        for a, w, d in self._terms(tau):
            out = out + a * np.exp(-d * d / (2.0 * w * w))
        return out

    def d1(self, tau):
        out = np.zeros_like(np.asarray(tau, dtype=float))
        for a, w, d in self._terms(tau):
            out = out - a * d / (w * w) * np.exp(-d * d / (2.0 * w * w))
        return out

    def d2(self, tau):
        out = np.zeros_like(np.asarray(tau, dtype=float))
        for a, w, d in self._terms(tau):
            w2 = w * w
            out = out + a * (d * d / w2 - 1.0) / w2 * np.exp(-d * d / (2.0 * w * w))
        return out


def default_template(sys_center=0.30, sys_width=0.07, sys_amp=1.0,
                     dias_center=0.55, dias_width=0.10, dias_amp=0.45,
                     period=0.8, third_lobe=None) -> BeatTemplate:
    """Two-lobe template; ``third_lobe`` adds a late-systolic component."""
    lobes = [(sys_center, sys_width, sys_amp), (dias_center, dias_width, dias_amp)]
    if third_lobe is not None:
        lobes.append(tuple(third_lobe))
    return BeatTemplate(tuple(lobes), period)


def _d1_roots(template: BeatTemplate, lo, hi, n_grid=4096):
    """All first-derivative roots in (lo, hi), bracketed to 1e-12."""
    grid = np.linspace(lo, hi, n_grid)
    vals = template.d1(grid)
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(float(brentq(template.d1, grid[i], grid[i + 1], xtol=1e-12)))
    return roots


def _grid_extremum(fun, lo, hi, kind, n=20000):
    """Dense-grid extremum of ``fun`` over [lo, hi] (the grid-search oracle)."""
    grid = np.linspace(lo, hi, n)
    vals = fun(grid)
    idx = int(np.argmin(vals)) if kind == "min" else int(np.argmax(vals))
    return float(grid[idx]), float(vals[idx])


def _grid_deepest_local_min(fun, lo, hi, floor, n=20000):
    """Deepest interior local minimum of ``fun`` over (lo, hi).

    ``floor`` is the function value at the left boundary (a global minimum);
    candidates within numerical reach of it belong to that boundary basin
    and are excluded.
    """
    grid = np.linspace(lo, hi, n)
    vals = fun(grid)
    interior = (vals[1:-1] < vals[:-2]) & (vals[1:-1] <= vals[2:])
    idxs = np.nonzero(interior)[0] + 1
    guard = floor + 1e-9 * (1.0 + abs(floor))
    idxs = [i for i in idxs if vals[i] > guard]
    if len(idxs) == 0:
        raise InvalidInputError("no interior local minimum in the window")
    best = idxs[int(np.argmin(vals[idxs]))]
    return float(grid[best]), float(vals[best])


class TemplateTruth(dict):
    """Analytic landmark times/amplitudes and features of one template."""


def analyze_template(template: BeatTemplate) -> TemplateTruth:
    """Closed-form ground truth under the detector's landmark rules.

    Times are relative to the beat foot (the inter-beat minimum of the
    periodic waveform); amplitudes are normalized so the foot maps to 0 and
    the systolic peak to 1, mirroring the pipeline's per-beat normalization.
    """
    T = template.period
    roots = _d1_roots(template, 0.0, T * (1.0 - 1e-9))
    if not roots:
        raise InvalidInputError("template has no stationary points")
    heights = template.value(np.array(roots))
    curv = template.d2(np.array(roots))
    t_esp = roots[int(np.argmax(heights))]
    minima = [r for r, c in zip(roots, curv) if c > 0]
    if not minima:
        raise InvalidInputError("template has no minimum (foot)")
    t_foot = min(minima, key=lambda r: float(template.value(r)))

    # beat frame: [t_foot, t_foot + T]; shift so tau=0 at the foot
    def shift(t):
        return (t - t_foot) % T

    m = float(template.value(t_foot))
    M = float(template.value(t_esp))
    if M <= m:
        raise InvalidInputError("template peak does not rise above the foot")
    amp = lambda t: (float(template.value(t)) - m) / (M - m)

    # maxima after ESP within the beat frame, ordered by time from the foot
    later_max = sorted(
        (r for r, c in zip(roots, curv) if c < 0 and shift(r) > shift(t_esp)),
        key=shift,
    )
    later_min = sorted(
        (r for r, c in zip(roots, curv) if c > 0 and r != t_foot and shift(r) > shift(t_esp)),
        key=shift,
    )
    if not later_max:
        raise InvalidInputError("template has no second peak; oracle expects one")
    t_dp = later_max[0]
    dn_candidates = [r for r in later_min if shift(r) < shift(t_dp)]
    if not dn_candidates:
        raise InvalidInputError("template has no dicrotic notch before the second peak")
    t_dn = min(dn_candidates, key=lambda r: float(template.value(r)))

    # IP: last zero of the second derivative in (ESP, DN]
    t_ip = t_dn
    span_lo, span_hi = shift(t_esp), shift(t_dn)
    grid = np.linspace(span_lo, span_hi, 4096)
    vals = template.d2(t_foot + grid)
    for i in range(len(grid) - 2, -1, -1):
        if vals[i] * vals[i + 1] < 0:
            t_ip = t_foot + float(brentq(lambda u: float(template.d2(u)),
                                         t_foot + grid[i], t_foot + grid[i + 1],
                                         xtol=1e-12))
            break

    # acceleration landmarks: windowed extrema of d2 in the beat frame
    d2in = lambda u: template.d2(t_foot + np.asarray(u))
    u_esp, u_dn, u_dp, u_ip = shift(t_esp), shift(t_dn), shift(t_dp), shift(t_ip)
    u_f, v_f = _grid_extremum(d2in, u_esp, T, "min")
    u_e, v_e = _grid_extremum(d2in, u_esp, u_f, "max")
    u_a, v_a = _grid_extremum(d2in, 0.0, u_esp, "max")
    u_b, v_b = _grid_extremum(d2in, u_a, u_e, "min")
    u_h, v_h = _grid_deepest_local_min(d2in, u_f, T, floor=v_f)
    u_g, v_g = _grid_extremum(d2in, u_f, u_h, "max")

    # ISP: tangent at the steepest upstroke point against the DP-RV line
    d1in = lambda u: template.d1(t_foot + np.asarray(u))
    u_m, _ = _grid_extremum(d1in, 0.0, u_esp, "max")
    slope_tan = float(d1in(u_m)) / (M - m)
    a_dp = amp(t_dp)
    a_rv = 0.0  # the right valley is the next foot
    slope_line = (a_rv - a_dp) / (T - u_dp)
    t_isp, a_isp = intersect_lines(slope_tan, (u_m, amp(t_foot + u_m)),
                                   slope_line, (u_dp, a_dp))

    ba = abs(v_b / v_a)
    ea = v_e / v_a
    ppt = u_dp - u_esp
    ct = u_esp
    nt = u_dn
    dt = T - u_esp
    ri = a_dp / 1.0
    eri = a_dp / a_isp
    a_dnb = 0.0
    a1 = polygon_area([(0.0, 0.0), (u_esp, 1.0), (u_dn, amp(t_dn)), (u_dn, a_dnb)])
    a2 = polygon_area([(u_ip, amp(t_ip)), (u_dn, amp(t_dn)), (T, 0.0)])

    return TemplateTruth(
        period=T,
        t_foot=float(t_foot),
        landmarks={
            "lv": (0.0, 0.0),
            "esp": (u_esp, 1.0),
            "ip": (u_ip, amp(t_ip)),
            "dn": (u_dn, amp(t_dn)),
            "dp": (u_dp, a_dp),
            "rv": (float(T), 0.0),
        },
        accel={
            "a": (u_a, v_a), "b": (u_b, v_b), "e": (u_e, v_e),
            "f": (u_f, v_f), "g": (u_g, v_g), "h": (u_h, v_h),
        },
        isp=(float(t_isp), float(a_isp)),
        features={
            "PPT": ppt, "RI": ri, "ERI": eri,
            "ARI": eri if ba <= 1.0 else ri,
            "CT": ct, "NT": nt, "DT": dt,
            "RCA": ct / nt, "RDA": nt / (ct + dt),
            "IPA": a2 / a1,
            "BA": ba, "EA": ea,
            "FA": abs(v_f / v_a), "GA": v_g / v_a, "HA": abs(v_h / v_a),
            "AI": ba - ea,
        },
    )


def generate_beat(template: BeatTemplate, fs: float):
    """Sample one foot-to-foot beat; returns (t, normalized samples, truth)."""
    truth = analyze_template(template)
    T = template.period
    n = int(math.floor(T * fs)) + 1
    t = np.arange(n) / fs
    m = template.value(truth["t_foot"])
    M = template.value(truth["t_foot"] + truth["landmarks"]["esp"][0])
    samples = (template.value(truth["t_foot"] + t) - m) / (M - m)
    return t, samples, truth


@dataclass
class AutoExposure:
    enabled: bool = False
    gain: float = 1.0
    setpoint: float = 128.0
    rate: float = 0.0


@dataclass
class SessionSpec:
    """One synthetic recording session."""

    duration_s: float = 120.0
    fps: float = 30.0
    hr_bpm: float = 75.0
    hr_sd_bpm: float = 0.0
    template: BeatTemplate = field(default_factory=default_template)
    pulse_amplitude: float = 40.0
    channel_gains: tuple = (0.6, 1.0, 0.3)
    baselines: tuple = (170.0, 150.0, 60.0)
    drift_amplitude: float = 0.0
    drift_freq_hz: float = 0.05
    noise_sd: float = 0.0
    autoexposure: AutoExposure = field(default_factory=AutoExposure)
    seed: int = 0

    def __post_init__(self):
        if self.fps < 15:
            raise InvalidInputError("session fps must be at least 15")
        if self.duration_s <= 0:
            raise InvalidInputError("session duration must be positive")


def generate_session(spec: SessionSpec):
    """Render a session; returns (FrameSeries, truth record).

    Deterministic for a given seed: the generator draws beat periods, the
    drift phase and the three channels' noise, in that order.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    truth_t = analyze_template(spec.template)
    T_ref = spec.template.period

    n_beats = int(math.ceil(spec.duration_s / (60.0 / max(spec.hr_bpm, 1.0)))) + 3
    if spec.hr_sd_bpm > 0:
        hrs = rng.normal(spec.hr_bpm, spec.hr_sd_bpm, size=n_beats)
        hrs = np.clip(hrs, 40.0, 180.0)
    else:
        hrs = np.full(n_beats, spec.hr_bpm)
    periods = 60.0 / hrs
    starts = np.concatenate(([0.0], np.cumsum(periods)[:-1]))
    while starts[-1] < spec.duration_s:
        hrs = np.append(hrs, hrs[-1])
        periods = np.append(periods, periods[-1])
        starts = np.append(starts, starts[-1] + periods[-2])

    n = int(round(spec.duration_s * spec.fps))
    t = np.arange(n) / spec.fps
    beat_of = np.searchsorted(starts, t, side="right") - 1
    u = (t - starts[beat_of]) / periods[beat_of]  # phase in [0, 1)
    m = float(spec.template.value(truth_t["t_foot"]))
    M = float(spec.template.value(truth_t["t_foot"] + truth_t["landmarks"]["esp"][0]))
    pulse = (spec.template.value(truth_t["t_foot"] + u * T_ref) - m) / (M - m)

    phase = rng.uniform(0.0, 2.0 * math.pi)
    drift = spec.drift_amplitude * np.sin(2.0 * math.pi * spec.drift_freq_hz * t + phase)

    channels = []
    clipped = 0
    for base, gain in zip(spec.baselines, spec.channel_gains):
        noise = rng.normal(0.0, spec.noise_sd, size=n) if spec.noise_sd > 0 else 0.0
        raw = base + gain * spec.pulse_amplitude * pulse + drift + noise
        clipped += int(np.sum((raw < 0.0) | (raw > CLIP_HI)))
        channels.append(np.clip(raw, 0.0, CLIP_HI))

    frames = FrameSeries(t, channels[0], channels[1], channels[2], nominal_fps=spec.fps)
    if spec.autoexposure.enabled:
        frames = apply_autoexposure(frames, spec.autoexposure)

    truth = {
        "template": truth_t,
        "beat_start_s": starts.tolist(),
        "beat_period_s": periods.tolist(),
        "hr_bpm": hrs.tolist(),
        "clipped_fraction": clipped / (3.0 * n),
    }
    return frames, truth


def apply_autoexposure(frames: FrameSeries, params: AutoExposure) -> FrameSeries:
    """Exposure gain tracking each channel's running mean toward a setpoint.

    The gain multiplies the channel, the result is hard-clipped to [0, 256),
    and an exponentially weighted running mean of the clipped output steers
    the gain toward the setpoint at ``rate``.  Zero rate with unit gain is
    the identity on in-range input.
    """
    out = []
    for ch in frames.channels():
        ch = np.asarray(ch, dtype=float)
        y = np.empty_like(ch)
        gain = params.gain
        mean = params.setpoint
        for i, x in enumerate(ch):
            v = min(max(gain * x, 0.0), CLIP_HI)
            y[i] = v
            if params.rate > 0.0:
                mean += params.rate * (v - mean)
                gain *= 1.0 + params.rate * (params.setpoint - mean) / CHANNEL_MAX
        out.append(y)
    return FrameSeries(frames.t.copy(), out[0], out[1], out[2],
                       nominal_fps=frames.nominal_fps)
