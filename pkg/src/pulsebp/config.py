"""Resolved pipeline configuration.

A single flat namespace of dotted keys holds every tunable of the pipeline.
Values resolve in three layers: built-in defaults, then an optional config
file (``key = value`` lines, ``#`` comments), then explicit overrides from
the command line.  ``config-dump`` prints the fully resolved set so a run
can always be audited and reproduced from one artifact.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

from .errors import ParseError

ENV_CONFIG_PATH = "PULSEBP_CONFIG"


def _parse_scalar(text):
    text = text.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if "," in text:
        return tuple(_parse_scalar(part) for part in text.split(","))
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _format_scalar(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_scalar(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class PipelineConfig:
    """Every tunable of the pipeline, keyed by a flat dotted name."""

    # signal composition
    ingest_window: int = 100                    # samples in the moving z-score window
    # beat segmentation
    beats_derivative_percentile: float = 70.0   # onset threshold over derivative samples
    beats_max_hr_bpm: float = 150.0             # beats above this rate are discarded
    beats_min_onset_gap_s: float = 0.0          # 0 = derive from max HR (60 / max_hr)
    # sample validity gates
    validity_min_points_per_beat: float = 15.0
    validity_min_duration_s: float = 100.0
    validity_min_sqi: float = 0.8               # strict: sqi must exceed this
    # fiducial detection
    fiducials_smooth_accel: bool = True         # 3-point MA before second differences
    # spectral features
    spectral_min_samples: int = 256
    spectral_hann: bool = False
    # covariate normalisation references
    normalize_hr_reference_bpm: float = 75.0
    normalize_height_reference_cm: float = 170.0
    # outlier filtering
    outliers_iqr_multiplier: float = 1.5
    # correlation analysis
    stats_bonferroni_alpha: float = 0.05 / 28
    # collinearity pruning
    collinearity_threshold: float = 0.7
    collinearity_drop_ri_for_ari: bool = True
    # cross validation
    cv_k: int = 10
    cv_seed: int = 0
    # random forest
    rf_n_trees: int = 500
    rf_mtry: int = 0                            # 0 = max(1, p // 3)
    rf_min_leaf: int = 5
    rf_max_depth: int = 0                       # 0 = unlimited
    rf_seed: int = 0
    # agreement grading
    aami_thresholds_mmhg: tuple = (5.0, 10.0, 15.0)
    aami_min_percent: tuple = (50.0, 75.0, 90.0)
    # extraction metadata fallbacks
    extract_default_height_cm: float = 170.0
    extract_default_age_years: float = 25.0
    extract_default_sqi: float = 1.0
    extract_threads: int = 1

    _COMMENTS = {
        "ingest.window": "moving z-score window, samples",
        "beats.derivative_percentile": "onset threshold percentile over first-derivative samples",
        "beats.max_hr_bpm": "beats with implied HR above this are removed (strictly above)",
        "beats.min_onset_gap_s": "minimum onset separation; 0 derives it from beats.max_hr_bpm",
        "validity.min_points_per_beat": "median samples per beat required for a valid sample",
        "validity.min_duration_s": "minimum recording duration, seconds",
        "validity.min_sqi": "signal quality index must strictly exceed this",
        "fiducials.smooth_accel": "smooth the beat with a 3-point moving average before second differences",
        "spectral.min_samples": "minimum signal length for the periodogram",
        "spectral.hann": "apply a Hann window before the FFT",
        "normalize.hr_reference_bpm": "heart-rate reference all features are adjusted to",
        "normalize.height_reference_cm": "body-height reference all features are adjusted to (SI exempt)",
        "outliers.iqr_multiplier": "fence width in interquartile ranges",
        "stats.bonferroni_alpha": "per-test significance level (family level 0.05 over 28 features)",
        "collinearity.threshold": "absolute pairwise correlation above which one feature is dropped",
        "collinearity.drop_ri_for_ari": "after pruning, prefer ARI over RI when both survive",
        "cv.k": "number of cross-validation folds",
        "cv.seed": "seed for the fold partition",
        "rf.n_trees": "trees in the random forest",
        "rf.mtry": "candidate features per split; 0 = max(1, p // 3)",
        "rf.min_leaf": "minimum samples per leaf",
        "rf.max_depth": "maximum tree depth; 0 = unlimited",
        "rf.seed": "seed for bootstrap resampling and feature subsampling",
        "aami.thresholds_mmhg": "absolute-error thresholds for agreement grading",
        "aami.min_percent": "minimum percentage of errors within each threshold",
        "extract.default_height_cm": "height used when no metadata is supplied",
        "extract.default_age_years": "age used when no metadata is supplied",
        "extract.default_sqi": "signal quality index used when none is supplied",
        "extract.threads": "parallel workers for batch extraction",
    }

    @staticmethod
    def _attr_for(key: str) -> str:
        return key.replace(".", "_")

    @classmethod
    def keys(cls):
        return [f.name.replace("_", ".", 1) for f in fields(cls) if not f.name.startswith("_")]

    def get(self, key: str):
        return getattr(self, self._attr_for(key))

    def set(self, key: str, value):
        attr = self._attr_for(key)
        if not hasattr(self, attr):
            raise ParseError(f"unknown config key: {key}")
        current = getattr(self, attr)
        if isinstance(current, bool):
            value = value if isinstance(value, bool) else _parse_scalar(str(value))
        elif isinstance(current, int) and not isinstance(value, bool):
            value = int(value)
        elif isinstance(current, float):
            value = float(value)
        elif isinstance(current, tuple) and not isinstance(value, tuple):
            value = tuple(float(v) for v in str(value).split(","))
        if isinstance(current, tuple) and isinstance(value, tuple):
            value = tuple(float(v) for v in value)
        setattr(self, attr, value)

    def onset_gap_s(self) -> float:
        if self.beats_min_onset_gap_s > 0:
            return self.beats_min_onset_gap_s
        return 60.0 / self.beats_max_hr_bpm

    def rf_params(self, n_features: int) -> dict:
        mtry = self.rf_mtry if self.rf_mtry > 0 else max(1, n_features // 3)
        depth = self.rf_max_depth if self.rf_max_depth > 0 else None
        return {
            "n_trees": self.rf_n_trees,
            "mtry": mtry,
            "min_leaf": self.rf_min_leaf,
            "max_depth": depth,
            "seed": self.rf_seed,
        }

    def dump(self) -> str:
        """Render the resolved configuration as the config-file format."""
        lines = []
        for key in self.keys():
            comment = self._COMMENTS.get(key, "")
            if comment:
                lines.append(f"# {comment}")
            lines.append(f"{key} = {_format_scalar(self.get(key))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        cfg = cls()
        cfg.update_from_file(path)
        return cfg

    def update_from_file(self, path: str):
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ParseError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                self.set(key.strip(), _parse_scalar(value))

    def update_from_pairs(self, pairs):
        """Apply ``key=value`` override strings (command-line layer)."""
        for pair in pairs:
            if "=" not in pair:
                raise ParseError(f"override must look like key=value, got {pair!r}")
            key, _, value = pair.partition("=")
            self.set(key.strip(), _parse_scalar(value))


def load_config(path=None, overrides=()) -> PipelineConfig:
    """Defaults, then the config file (argument or env var), then overrides."""
    cfg = PipelineConfig()
    path = path or os.environ.get(ENV_CONFIG_PATH)
    if path:
        cfg.update_from_file(path)
    cfg.update_from_pairs(overrides or ())
    return cfg
