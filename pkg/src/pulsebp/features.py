"""Per-beat waveform features and their per-sample median aggregation.

All heights are measured above the left-valley amplitude so ratios do not
depend on the normalization floor.  Acceleration ratios divide the second
derivative at B, E, F, G, H by its value at A; BA, FA and HA are stored as
absolute values and the aging index is their post-absolute difference
AI = BA - EA.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoValidBeatsError, ZeroAreaError, ZeroDenominatorError
from .fiducials import FiducialSet
from .numutil import median, polygon_area

EPS = 1e-12

#: Table layout of the per-sample feature vector (metadata, then features).
FEATURE_COLUMNS = [
    "Height", "HR", "Age",
    "SI", "RI", "ERI", "ARI", "PPT", "AI", "CT", "NT", "DT", "IPA", "RCA", "RDA",
    "BA", "EA", "FA", "GA", "HA",
    "PSD1", "PSD2", "PSD3", "PSD4", "PSD5", "PSD6", "NHA", "IHAR",
]
WAVEFORM_COLUMNS = FEATURE_COLUMNS[3:]
TARGET_COLUMNS = ["SBP", "DBP", "PP"]
CSV_COLUMNS = ["sample_id", "subject_id"] + FEATURE_COLUMNS + ["SBP", "DBP"]

#: per-beat fields aggregated by median into the sample vector
BEAT_FIELDS = ["PPT", "RI", "ERI", "ARI", "SI", "CT", "NT", "DT", "RCA", "RDA",
               "IPA", "BA", "EA", "FA", "GA", "HA", "AI"]


@dataclass
class BeatFeatures:
    """Feature values for one beat; missing entries were excluded with a reason."""

    values: dict = field(default_factory=dict)
    exclusions: dict = field(default_factory=dict)  # field -> reason

    def get(self, name):
        return self.values.get(name)


@dataclass
class SampleFeatures:
    """The 28-entry per-recording feature vector plus provenance counters."""

    values: dict
    n_beats_used: int
    exclusion_counts: dict = field(default_factory=dict)


def accel_features(fid: FiducialSet) -> dict:
    """BA, EA, FA, GA, HA ratios against the A-wave, plus AI = BA - EA."""
    a = fid.a.value
    if abs(a) <= EPS:
        raise ZeroDenominatorError("second derivative vanishes at A")
    ba = abs(fid.b.value / a)
    ea = fid.e.value / a
    fa = abs(fid.f.value / a)
    ga = fid.g.value / a
    ha = abs(fid.h.value / a)
    return {"BA": ba, "EA": ea, "FA": fa, "GA": ga, "HA": ha, "AI": ba - ea}


def time_altitude_features(fid: FiducialSet, height_cm: float, ba: float = None) -> dict:
    """Interval and height-ratio features of one beat.

    ``ba`` selects the adaptive reflection index: ARI is ERI while BA stays
    at or below 1 and falls back to RI above it.  When ``ba`` is omitted it
    is taken from the fiducial set's acceleration points.
    """
    if ba is None:
        ba = accel_features(fid)["BA"]
    base = fid.lv.amplitude
    esph = fid.esp.amplitude - base
    dph = fid.dp.amplitude - base
    ppt = fid.dp.t - fid.esp.t
    ct = fid.esp.t - fid.lv.t
    nt = fid.dn.t - fid.lv.t
    dt = fid.rv.t - fid.esp.t
    if ppt <= EPS:
        raise ZeroDenominatorError("PPT vanished")
    if nt <= EPS:
        raise ZeroDenominatorError("NT vanished")
    if esph <= EPS:
        raise ZeroDenominatorError("ESP height vanished")
    if fid.isp is None:
        raise ZeroDenominatorError("ISP not constructed")
    isph = fid.isp.amplitude - base
    if isph <= EPS:
        raise ZeroDenominatorError("ISP height vanished")
    ri = dph / esph
    eri = dph / isph
    return {
        "PPT": ppt,
        "RI": ri,
        "ERI": eri,
        "ARI": eri if ba <= 1.0 else ri,
        "SI": height_cm / ppt,
        "CT": ct,
        "NT": nt,
        "DT": dt,
        "RCA": ct / nt,
        "RDA": nt / (ct + dt),
    }


def area_features(fid: FiducialSet) -> float:
    """Inflection-point area ratio from the polygon approximation.

    Systole is the polygon LV, ESP, DN, DNB with DNB the projection of DN
    onto the left-valley baseline; diastole is the triangle IP, DN, RV.
    """
    dnb = (fid.dn.t, fid.lv.amplitude)
    a1 = polygon_area([
        (fid.lv.t, fid.lv.amplitude),
        (fid.esp.t, fid.esp.amplitude),
        (fid.dn.t, fid.dn.amplitude),
        dnb,
    ])
    if a1 <= EPS:
        raise ZeroAreaError("systole polygon degenerated")
    a2 = polygon_area([
        (fid.ip.t, fid.ip.amplitude),
        (fid.dn.t, fid.dn.amplitude),
        (fid.rv.t, fid.rv.amplitude),
    ])
    return a2 / a1


def beat_features(fid: FiducialSet, height_cm: float) -> BeatFeatures:
    """All per-beat features; failures exclude only the fields they affect."""
    out = BeatFeatures()
    ba = None
    try:
        accel = accel_features(fid)
        out.values.update(accel)
        ba = accel["BA"]
    except ZeroDenominatorError as exc:
        for name in ("BA", "EA", "FA", "GA", "HA", "AI"):
            out.exclusions[name] = str(exc)
    try:
        ta = time_altitude_features(fid, height_cm, ba=ba if ba is not None else 0.0)
        if ba is None:
            ta.pop("ARI")
            out.exclusions["ARI"] = "BA unavailable"
        out.values.update(ta)
    except ZeroDenominatorError as exc:
        for name in ("PPT", "RI", "ERI", "ARI", "SI", "CT", "NT", "DT", "RCA", "RDA"):
            out.exclusions[name] = str(exc)
    try:
        out.values["IPA"] = area_features(fid)
    except ZeroAreaError as exc:
        out.exclusions["IPA"] = str(exc)
    return out


def aggregate_sample(per_beat, spectral: dict, meta: dict) -> SampleFeatures:
    """Median-aggregate per-beat features into the sample vector.

    ``spectral`` supplies PSD1..PSD6, NHA and IHAR; ``meta`` supplies
    Height, Age and the per-beat HR list.  Each waveform entry is the median
    over the beats where that field survived; a field missing from every
    beat stays absent.
    """
    if not per_beat:
        raise NoValidBeatsError("no beats to aggregate")
    values = {}
    counts = {}
    for name in BEAT_FIELDS:
        present = [bf.values[name] for bf in per_beat if name in bf.values]
        excluded = sum(1 for bf in per_beat if name in bf.exclusions)
        if excluded:
            counts[name] = excluded
        if present:
            values[name] = median(present)
    if not values:
        raise NoValidBeatsError("every field was excluded on every beat")
    values["Height"] = float(meta["height_cm"])
    values["Age"] = float(meta["age_years"])
    values["HR"] = median(meta["hr_bpm"])
    values.update(spectral)
    return SampleFeatures(values=values, n_beats_used=len(per_beat),
                          exclusion_counts=counts)
