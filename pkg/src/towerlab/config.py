"""Experiment configuration: flat key = value sections, lossless round-trip.

A config is a dict of sections, each a dict of typed scalar values.  Files
use INI syntax.  Defaults per experiment kind carry every recognized key
with its type; file values are coerced to the default's type and unknown
keys are rejected by name.  The config hash covers experiment identity
(kind, parameters, seed) but not execution plumbing such as worker counts
or output paths, so reruns with different parallelism hash identically.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field

from .serialize import format_value

KINDS = ("return-tail", "meeting-tail", "approx-decay", "clt", "coboundary",
         "stationarity")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    sections: dict  # section -> {key: value}
    out_dir: str = "."
    workers: int = 1

    def get(self, section: str, key: str):
        return self.sections[section][key]

    def text(self) -> str:
        """Canonical serialization (hash input and file output)."""
        lines = ["[experiment]", f"kind = {self.kind}", f"seed = {self.seed}"]
        for sec in sorted(self.sections):
            lines.append("")
            lines.append(f"[{sec}]")
            for key in sorted(self.sections[sec]):
                lines.append(f"{key} = {format_value(self.sections[sec][key])}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.text().encode()).hexdigest()[:16]

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.text())


def _coerce(raw: str, template):
    if isinstance(template, bool):
        low = raw.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    return raw.strip()


def default_config(kind: str, seed: int = 20260809) -> ExperimentConfig:
    """Acceptance-scale defaults for each experiment kind."""
    if kind == "return-tail":
        sections = {
            "map": {"alpha": 0.5},
            "run": {"samples": 10_000_000, "cap": 10_000, "burn_in": 100_000,
                    "lanes": 4096, "mode": "orbit"},
            "fit": {"n_lo": 16, "n_hi": 1024, "min_survivors": 100,
                    "slope_target": -2.0, "slope_tol": 0.2},
        }
    elif kind == "meeting-tail":
        sections = {
            "tower": {"family": "poly", "beta": 3.0, "ratio": 0.5,
                      "cap": 10_000, "xi": 0.5},
            "run": {"runs": 1_000_000, "cap": 2048, "batch": 131_072},
            "fit": {"n_lo": 8, "n_hi": 512, "min_survivors": 100,
                    "slope_target": -2.0, "slope_tol": 0.3,
                    "spearman_max": 0.2, "check": "poly",
                    "r2_min": 0.98, "oracle_n": 12},
        }
    elif kind == "approx-decay":
        sections = {
            "tower": {"family": "poly", "beta": 3.0, "ratio": 0.5,
                      "cap": 10_000, "xi": 0.5},
            "run": {"ms": "4,8,16,32", "calibrate_m": 4, "samples": 4000,
                    "samples_large_m": 20_000, "outer": 32, "inner": 8,
                    "radius": 64, "r": 2, "meeting_runs": 1_000_000,
                    "meeting_cap": 256, "chunk": 250},
            "check": {"mc_error_fraction": 0.2},
        }
    elif kind == "clt":
        sections = {
            "tower": {"family": "lsv", "alpha": 0.4, "beta": 2.5, "ratio": 0.5,
                      "cap": 10_000, "xi": 0.5, "tail_samples": 2_000_000},
            "variance": {"replicates": 64, "replicate_length": 1_000_000,
                         "max_lag": 200, "block_length": 10_000},
            "clt": {"enabled": True, "n": 10_000, "replicates": 5000,
                    "ks_max": 0.03},
            "check": {"increment_max": 0.02, "gk_drift_max": 0.05,
                      "block_var_gap_max": 0.10, "mode": "clt"},
        }
    elif kind == "coboundary":
        sections = {
            "tower": {"roofs": "1,2,3", "weights": "0.5,0.3,0.2", "xi": 0.5},
            "run": {"length": 1_000_000, "gk_cutoff": 200,
                    "variance_fraction": 0.01},
        }
    elif kind == "stationarity":
        sections = {
            "tower": {"family": "poly", "beta": 3.0, "ratio": 0.5, "cap": 13,
                      "xi": 0.5},
            "run": {"steps": 10_000_000},
            "check": {"tv_max": 0.01, "kernel_tol": 1e-12,
                      "base_rate_rel_tol": 0.01},
        }
    else:
        raise ConfigError(f"unknown experiment kind {kind!r}; "
                          f"valid kinds: {', '.join(KINDS)}")
    return ExperimentConfig(kind=kind, seed=seed, sections=sections)


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if "experiment" not in parser:
        raise ConfigError("config needs an [experiment] section with a kind")
    exp = parser["experiment"]
    kind = exp.get("kind", base.kind if base else None)
    if kind is None:
        raise ConfigError("missing required key experiment.kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    cfg = default_config(kind)
    if base is not None and base.kind == kind:
        cfg = base
    for key in exp:
        if key == "kind":
            continue
        elif key == "seed":
            cfg.seed = int(exp[key])
        elif key == "workers":
            cfg.workers = int(exp[key])
        elif key == "out":
            cfg.out_dir = exp[key]
        else:
            raise ConfigError(f"unknown key experiment.{key}")
    for sec in parser.sections():
        if sec == "experiment":
            continue
        if sec not in cfg.sections:
            raise ConfigError(f"unknown section [{sec}] for kind {kind}")
        for key, raw in parser[sec].items():
            if key not in cfg.sections[sec]:
                raise ConfigError(f"unknown key {sec}.{key} for kind {kind}")
            try:
                cfg.sections[sec][key] = _coerce(raw, cfg.sections[sec][key])
            except ValueError as e:
                raise ConfigError(f"bad value for {sec}.{key}: {e}") from e
    return cfg


def parse_int_list(raw: str) -> list[int]:
    return [int(tok) for tok in str(raw).split(",") if tok.strip()]


def parse_float_list(raw: str) -> list[float]:
    return [float(tok) for tok in str(raw).split(",") if tok.strip()]
