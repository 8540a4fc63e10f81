"""Pipeline configuration: one JSON document, every constant a defaulted key.

Schema (all keys optional)::

    {
      "seed": 0,
      "source": "simulate",            # or "dataset": use traces already in paths.dataset_dir
      "geometry":   {"wavelength": 0.06, "separation": 1.2},
      "simulation": {"n_subjects": 14, "classes": ["happy", "sad", "anger", "fear"],
                     "reps_per_class": 60, "subject_variation": 0.1, "rep_jitter": 0.05,
                     "duration": 2.0, "base_zone": 8, "n_subcarriers": 30,
                     "subcarrier_spacing": 312500.0, "center_frequency": null,
                     "los_amplitude": 20.0, "reflection_coefficient": 0.7,
                     "noise_std": 0.5, "write_traces": true},
      "filter":     {"cutoff_hz": 15.0, "sample_rate": 100.0, "order": 4, "zero_phase": true},
      "features":   {"n_bins": 16, "mode": "concat"},
      "classifier": {"kind": "knn", "k": 5},
      "protocols":  {"names": ["inset", "ten-fold", "person-dependent", "person-independent"],
                     "train_fraction": 0.5, "group_by": null},
      "paths":      {"dataset_dir": "dataset", "output_dir": "reports"}
    }
"""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from .classify import ClassifierSpec
from .evaluation import PROTOCOLS
from .fresnel import TransceiverGeometry
from .preprocess import FilterSpec
from .sim import DEFAULT_CLASSES, GestureSpec, SimConfig

CONFIG_ENV = "CSISENSE_CONFIG"

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "source": "simulate",
    "geometry": {"wavelength": 0.06, "separation": 1.2},
    "simulation": {
        "n_subjects": 14,
        "classes": list(DEFAULT_CLASSES),
        "reps_per_class": 60,
        "subject_variation": 0.1,
        "rep_jitter": 0.05,
        "duration": 2.0,
        "base_zone": 8,
        "n_subcarriers": 30,
        "subcarrier_spacing": 312500.0,
        "center_frequency": None,
        "los_amplitude": 20.0,
        "reflection_coefficient": 0.7,
        "noise_std": 0.5,
        "write_traces": True,
    },
    "filter": {"cutoff_hz": 15.0, "sample_rate": 100.0, "order": 4, "zero_phase": True},
    "features": {"n_bins": 16, "mode": "concat"},
    "classifier": {"kind": "knn", "k": 5},
    "protocols": {
        "names": ["inset", "ten-fold", "person-dependent", "person-independent"],
        "train_fraction": 0.5,
        "group_by": None,
    },
    "paths": {"dataset_dir": "dataset", "output_dir": "reports"},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where}{key!r} must be an object")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class PipelineConfig:
    raw: Dict[str, Any]

    @classmethod
    def from_dict(cls, data: Optional[dict] = None) -> "PipelineConfig":
        cfg = cls(_merge(DEFAULTS, data or {}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path=None) -> "PipelineConfig":
        """Read a JSON config; ``None`` falls back to $CSISENSE_CONFIG, then to defaults."""
        path = path or os.environ.get(CONFIG_ENV)
        if path is None:
            return cls.from_dict({})
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {p} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **sections) -> "PipelineConfig":
        return PipelineConfig.from_dict(_merge(self.raw, sections))

    def validate(self) -> None:
        try:
            self.geometry
            self.sim_config
            self.gesture_spec
            self.filter_spec
            self.classifier_spec
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from None
        if self.raw["source"] not in ("simulate", "dataset"):
            raise ConfigError("source must be 'simulate' or 'dataset'")
        if self.raw["features"]["mode"] not in ("concat", "mean"):
            raise ConfigError("features.mode must be 'concat' or 'mean'")
        if int(self.raw["features"]["n_bins"]) < 1:
            raise ConfigError("features.n_bins must be >= 1")
        unknown = [p for p in self.protocols if p not in PROTOCOLS]
        if unknown:
            raise ConfigError(f"unknown protocols {unknown}; choose from {sorted(PROTOCOLS)}")
        if not 0 < self.raw["protocols"]["train_fraction"] <= 1:
            raise ConfigError("protocols.train_fraction must lie in (0, 1]")
        if self.filter_spec.sample_rate != self.gesture_spec.sample_rate:
            raise ConfigError("filter.sample_rate differs from the simulated trace rate")

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def geometry(self) -> TransceiverGeometry:
        g = self.raw["geometry"]
        return TransceiverGeometry.symmetric(float(g["separation"]), float(g["wavelength"]))

    @property
    def sim_config(self) -> SimConfig:
        s = self.raw["simulation"]
        return SimConfig(
            geometry=self.geometry,
            center_frequency=s["center_frequency"],
            n_subcarriers=int(s["n_subcarriers"]),
            subcarrier_spacing=float(s["subcarrier_spacing"]),
            los_amplitude=float(s["los_amplitude"]),
            reflection_coefficient=float(s["reflection_coefficient"]),
            noise_std=float(s["noise_std"]),
            seed=self.seed,
        )

    @property
    def gesture_spec(self) -> GestureSpec:
        s = self.raw["simulation"]
        return GestureSpec(
            n_subjects=int(s["n_subjects"]),
            classes=tuple(s["classes"]),
            reps_per_class=int(s["reps_per_class"]),
            subject_variation=float(s["subject_variation"]),
            rep_jitter=float(s["rep_jitter"]),
            duration=float(s["duration"]),
            sample_rate=float(self.raw["filter"]["sample_rate"]),
            base_zone=int(s["base_zone"]),
        )

    @property
    def filter_spec(self) -> FilterSpec:
        f = self.raw["filter"]
        return FilterSpec(float(f["cutoff_hz"]), float(f["sample_rate"]), int(f["order"]), bool(f["zero_phase"]))

    @property
    def classifier_spec(self) -> ClassifierSpec:
        c = self.raw["classifier"]
        return ClassifierSpec(c["kind"], int(c["k"]))

    @property
    def protocols(self) -> list:
        return list(self.raw["protocols"]["names"])

    @property
    def feature_mode(self) -> str:
        return self.raw["features"]["mode"]

    @property
    def n_bins(self) -> int:
        return int(self.raw["features"]["n_bins"])

    @property
    def dataset_dir(self) -> Path:
        return Path(self.raw["paths"]["dataset_dir"])

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["paths"]["output_dir"])

    def feature_hash(self) -> str:
        """Digest of every setting the feature cache depends on."""
        relevant = {"filter": self.raw["filter"], "features": self.raw["features"]}
        return hashlib.sha256(json.dumps(relevant, sort_keys=True).encode()).hexdigest()[:16]
