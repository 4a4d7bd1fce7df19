"""End-to-end comparison harness: simulate, align, score, emit files.

A run is described by an INI config with sections [scenario], [sensors],
[alignment], [output]; every key is optional and unknown keys are
rejected. Outputs per run: one trace CSV per method, a summary.csv with
the end-of-run scores, and a manifest.txt carrying everything that may
legitimately vary between reruns (versions, timings) so the CSVs stay
byte-identical for a fixed config and seed.
"""

from __future__ import annotations

import configparser
import platform
import sys
import time as time_mod
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from . import earth as earth_mod
from .attitude import euler_from_quat
from .davenport import run_static_alignment
from .errors import AlignmentError, ConfigError
from .observations import ChainState, epochs_from_streams, write_pairs_csv
from .results import (
    SUMMARY_HEADER,
    MethodRun,
    error_series,
    summarize,
    truth_quats_at,
)
from .sensors import (
    sample_gnss,
    sensor_preset,
    synthesize_imu,
)
from .trajectory import (
    Circle,
    Stationary,
    StraightAccelerate,
    Swaying,
    simulate_trajectory,
)
from .ukf import NoiseConfig, UkfConfig, run_dynamic_alignment

__all__ = ["RunConfig", "load_config", "build_scenario", "run_comparison", "emit_outputs"]

METHOD_NAMES = ("q-full", "q-partial", "filter-full", "filter-partial")

PROFILE_KEYS = {
    "stationary": ("pitch_deg", "roll_deg", "yaw_deg"),
    "accelerate": ("accel", "top_speed", "yaw_deg"),
    "circle": ("radius", "speed", "yaw0_deg", "ccw"),
    "swaying": (
        "pitch_amp_deg", "roll_amp_deg", "yaw_amp_deg",
        "pitch_period", "roll_period", "yaw_period",
        "pitch_phase", "roll_phase", "yaw_phase", "yaw0_deg",
    ),
}


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one comparison run."""

    profile: str = "circle"
    duration: float = 250.0
    imu_rate: float = 100.0
    gnss_rate: float = 1.0
    latitude_deg: float = 30.0
    longitude_deg: float = 114.0
    height_m: float = 20.0
    profile_params: dict = field(default_factory=dict)
    preset: str = "navigation"
    seed: int = 1
    vel_noise: float = 0.0
    pos_noise: float = 0.0
    methods: tuple = METHOD_NAMES
    window_samples: int = 100
    smooth_window: int = 1
    kappa: float = -3.0
    equal_weights: bool = False
    write_pairs: bool = False
    outdir: str = "out"

    def __post_init__(self):
        if self.profile not in PROFILE_KEYS:
            raise ConfigError(f"unknown profile {self.profile!r}")
        bad = set(self.profile_params) - set(PROFILE_KEYS[self.profile])
        if bad:
            raise ConfigError(
                f"keys {sorted(bad)} not valid for profile {self.profile!r}"
            )
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ConfigError(f"unknown method {m!r}")
        if self.duration <= 0.0 or self.imu_rate <= 0.0 or self.gnss_rate <= 0.0:
            raise ConfigError("duration and rates must be positive")
        if self.window_samples < 1 or self.smooth_window < 1:
            raise ConfigError("window_samples and smooth_window must be >= 1")


_SCENARIO_KEYS = (
    "profile", "duration", "imu_rate", "gnss_rate",
    "latitude_deg", "longitude_deg", "height_m",
)
_SENSOR_KEYS = ("preset", "seed", "vel_noise", "pos_noise")
_ALIGN_KEYS = (
    "methods", "window_samples", "smooth_window", "kappa", "equal_weights",
)
_OUTPUT_KEYS = ("directory", "write_pairs")


def _get_typed(section, key, cast, current):
    raw = section.get(key)
    if raw is None:
        return current
    try:
        if cast is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def load_config(path) -> RunConfig:
    """Parse an INI run description, rejecting unknown sections/keys."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    known_sections = {"scenario", "sensors", "alignment", "output"}
    extra = set(parser.sections()) - known_sections
    if extra:
        raise ConfigError(f"unknown config sections {sorted(extra)}")

    kw = {}
    if parser.has_section("scenario"):
        sec = parser["scenario"]
        profile = sec.get("profile", RunConfig.profile).strip().lower()
        allowed = set(_SCENARIO_KEYS) | set(PROFILE_KEYS.get(profile, ()))
        bad = set(sec) - allowed
        if bad:
            raise ConfigError(f"unknown [scenario] keys {sorted(bad)}")
        kw["profile"] = profile
        for key, cast in (
            ("duration", float), ("imu_rate", float), ("gnss_rate", float),
            ("latitude_deg", float), ("longitude_deg", float), ("height_m", float),
        ):
            kw[key] = _get_typed(sec, key, cast, getattr(RunConfig, key))
        params = {}
        for key in PROFILE_KEYS.get(profile, ()):
            if key in sec:
                cast = bool if key == "ccw" else float
                params[key] = _get_typed(sec, key, cast, None)
        kw["profile_params"] = params
    if parser.has_section("sensors"):
        sec = parser["sensors"]
        bad = set(sec) - set(_SENSOR_KEYS)
        if bad:
            raise ConfigError(f"unknown [sensors] keys {sorted(bad)}")
        kw["preset"] = sec.get("preset", RunConfig.preset).strip().lower()
        kw["seed"] = _get_typed(sec, "seed", int, RunConfig.seed)
        kw["vel_noise"] = _get_typed(sec, "vel_noise", float, RunConfig.vel_noise)
        kw["pos_noise"] = _get_typed(sec, "pos_noise", float, RunConfig.pos_noise)
    if parser.has_section("alignment"):
        sec = parser["alignment"]
        bad = set(sec) - set(_ALIGN_KEYS)
        if bad:
            raise ConfigError(f"unknown [alignment] keys {sorted(bad)}")
        if "methods" in sec:
            methods = tuple(
                m.strip() for m in sec["methods"].split(",") if m.strip()
            )
            kw["methods"] = methods
        kw["window_samples"] = _get_typed(
            sec, "window_samples", int, RunConfig.window_samples
        )
        kw["smooth_window"] = _get_typed(
            sec, "smooth_window", int, RunConfig.smooth_window
        )
        kw["kappa"] = _get_typed(sec, "kappa", float, RunConfig.kappa)
        kw["equal_weights"] = _get_typed(
            sec, "equal_weights", bool, RunConfig.equal_weights
        )
    if parser.has_section("output"):
        sec = parser["output"]
        bad = set(sec) - set(_OUTPUT_KEYS)
        if bad:
            raise ConfigError(f"unknown [output] keys {sorted(bad)}")
        if "directory" in sec:
            kw["outdir"] = sec["directory"].strip()
        kw["write_pairs"] = _get_typed(
            sec, "write_pairs", bool, RunConfig.write_pairs
        )
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _build_profile(cfg: RunConfig):
    p = cfg.profile_params

    def rad(key, default=0.0):
        return np.radians(p.get(key, default))

    if cfg.profile == "stationary":
        return Stationary(pitch=rad("pitch_deg"), roll=rad("roll_deg"), yaw=rad("yaw_deg"))
    if cfg.profile == "accelerate":
        return StraightAccelerate(
            accel=p.get("accel", 1.0),
            top_speed=p.get("top_speed", 15.0),
            yaw=rad("yaw_deg"),
        )
    if cfg.profile == "circle":
        return Circle(
            radius=p.get("radius", 400.0),
            speed=p.get("speed", 10.0),
            yaw0=rad("yaw0_deg"),
            ccw=p.get("ccw", True),
        )
    kw = {}
    for key in ("pitch_amp", "roll_amp", "yaw_amp"):
        if key + "_deg" in p:
            kw[key] = np.radians(p[key + "_deg"])
    for key in (
        "pitch_period", "roll_period", "yaw_period",
        "pitch_phase", "roll_phase", "yaw_phase",
    ):
        if key in p:
            kw[key] = p[key]
    if "yaw0_deg" in p:
        kw["yaw0"] = np.radians(p["yaw0_deg"])
    return Swaying(**kw)


def build_scenario(cfg: RunConfig, earth=earth_mod.WGS84):
    """Simulate truth and synthesize the sensor streams for a config."""
    profile = _build_profile(cfg)
    origin = np.array([
        np.radians(cfg.latitude_deg),
        np.radians(cfg.longitude_deg),
        cfg.height_m,
    ])
    truth = simulate_trajectory(
        profile, cfg.duration, rate=cfg.imu_rate, origin=origin, earth=earth
    )
    spec = sensor_preset(cfg.preset)
    if abs(spec.sample_rate - cfg.imu_rate) > 1e-12:
        spec = replace(spec, sample_rate=cfg.imu_rate)
    imu = synthesize_imu(truth, spec, seed=cfg.seed)
    gnss = sample_gnss(
        truth,
        rate=cfg.gnss_rate,
        vel_noise_std=cfg.vel_noise,
        pos_noise_std=cfg.pos_noise,
        seed=cfg.seed + 1,
    )
    return truth, spec, imu, gnss


def run_comparison(cfg: RunConfig, earth=earth_mod.WGS84) -> dict:
    """Run every configured method over one synthesized scenario.

    A method raising an alignment error is recorded under "failures"
    without stopping the others.
    """
    truth, spec, imu, gnss = build_scenario(cfg, earth)
    epochs = epochs_from_streams(imu, gnss, dt=1.0 / cfg.gnss_rate)
    runs: list[MethodRun] = []
    timings: dict[str, float] = {}
    failures: dict[str, str] = {}

    for method in cfg.methods:
        t0 = time_mod.perf_counter()
        try:
            if method in ("q-full", "q-partial"):
                ests = run_static_alignment(
                    epochs,
                    mode="full" if method == "q-full" else "partial",
                    window_samples=cfg.window_samples,
                    earth=earth,
                    smooth_window=cfg.smooth_window,
                )
                runs.append(MethodRun(
                    method=method,
                    t=np.array([e.t for e in ests]),
                    quat=[e.quat for e in ests],
                ))
            else:
                noise = NoiseConfig.from_sensor(spec)
                ests = run_dynamic_alignment(
                    epochs,
                    noise,
                    pair_mode="full" if method == "filter-full" else "partial",
                    window_samples=cfg.window_samples,
                    earth=earth,
                    config=UkfConfig(
                        kappa=cfg.kappa, equal_weights=cfg.equal_weights
                    ),
                )
                runs.append(MethodRun(
                    method=method,
                    t=np.array([e.t for e in ests]),
                    quat=[e.quat for e in ests],
                    bias=np.array([e.bias for e in ests]),
                    cov=[e.cov for e in ests],
                    updated=np.array([e.updated for e in ests]),
                ))
        except AlignmentError as exc:
            failures[method] = f"{type(exc).__name__}: {exc}"
        timings[method] = time_mod.perf_counter() - t0

    summaries = []
    for run in runs:
        tq = truth_quats_at(truth, run.t)
        idx = np.clip(
            np.rint((run.t - truth.time[0]) * truth.rate).astype(int),
            0, len(truth.time) - 1,
        )
        true_bias = imu.true_gyro_bias[idx[-1]] if len(idx) else np.zeros(3)
        summaries.append(summarize(run, tq, true_bias=true_bias))

    return {
        "config": cfg,
        "truth": truth,
        "spec": spec,
        "imu": imu,
        "gnss": gnss,
        "epochs": epochs,
        "runs": runs,
        "summaries": summaries,
        "timings": timings,
        "failures": failures,
    }


def _write_trace(path, run: MethodRun, truth) -> None:
    tq = truth_quats_at(truth, run.t)
    err = np.degrees(error_series(run, tq))
    has_bias = run.bias is not None
    cols = ["time", "est_pitch_deg", "est_roll_deg", "est_yaw_deg",
            "err_pitch_deg", "err_roll_deg", "err_yaw_deg"]
    if has_bias:
        cols += ["bias_x", "bias_y", "bias_z", "updated"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i, t in enumerate(run.t):
            q = run.quat[i]
            if q is None:
                est = [np.nan] * 3
            else:
                est = list(np.degrees(euler_from_quat(q)))
            row = [t, *est, *err[i]]
            if has_bias:
                row += list(run.bias[i])
            text = ",".join(format(float(v), ".17g") for v in row)
            if has_bias:
                text += f",{int(run.updated[i])}"
            fh.write(text + "\n")


def _config_echo(cfg: RunConfig) -> list[str]:
    items = []
    for key in sorted(cfg.__dataclass_fields__):
        val = getattr(cfg, key)
        if key == "profile_params":
            val = ";".join(f"{k}={val[k]}" for k in sorted(val)) or "-"
        elif isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        items.append(f"{key} = {val}")
    return items


def emit_outputs(result: dict, outdir=None) -> list[str]:
    """Write trace CSVs, summary.csv and manifest.txt; returns paths."""
    import os

    cfg: RunConfig = result["config"]
    outdir = cfg.outdir if outdir is None else outdir
    os.makedirs(outdir, exist_ok=True)
    written = []

    for run in result["runs"]:
        path = os.path.join(outdir, f"trace_{run.method.replace('-', '_')}.csv")
        _write_trace(path, run, result["truth"])
        written.append(path)

    summary_path = os.path.join(outdir, "summary.csv")
    with open(summary_path, "w", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in result["summaries"]:
            fh.write(",".join(row.csv_fields()) + "\n")
    written.append(summary_path)

    if cfg.write_pairs:
        pairs = []
        chain = ChainState(result["truth"].earth)
        for epoch in result["epochs"]:
            chain.advance(epoch)
            pairs.append(chain.build_full_pair())
        pairs_path = os.path.join(outdir, "pairs.csv")
        write_pairs_csv(pairs, pairs_path)
        written.append(pairs_path)

    manifest_path = os.path.join(outdir, "manifest.txt")
    with open(manifest_path, "w") as fh:
        fh.write(f"obalign {__version__}\n")
        fh.write(f"python {sys.version.split()[0]} numpy {np.__version__}\n")
        fh.write(f"platform {platform.platform()}\n")
        fh.write("\n[config]\n")
        for line in _config_echo(cfg):
            fh.write(line + "\n")
        fh.write("\n[timings]\n")
        for method, secs in result["timings"].items():
            fh.write(f"{method} = {secs:.3f} s\n")
        if result["failures"]:
            fh.write("\n[failures]\n")
            for method, msg in result["failures"].items():
                fh.write(f"{method} = {msg}\n")
    written.append(manifest_path)
    return written
