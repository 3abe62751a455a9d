"""Scenario configuration, validation, flat-key serialization and presets.

A scenario is serialized as a flat, human-editable key-value text file
(one `section.field = value` per line, `#` comments).  Flat dotted keys
keep config diffs trivial to read.
"""
from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass, replace

from .audio import AudioPathConfig
from .clock import SimClock
from .errors import ScenarioValidationError
from .netsim import NetworkConfig
from .rig import MotionProfile, PipelineConfig, SensorConfig

# time for the sensor to move within half a level of its target,
# expressed as a multiple of the 10-90 rise time
_SETTLE_PER_RISE = math.log(14.0) / math.log(9.0)


def sampling_margin_ms(sensors: SensorConfig) -> float:
    """Strobe timing slack the 1 kHz capture needs on both sides.

    Each strobe burst must contain one sample taken after the sensor has
    settled to within half a level, and each dark gap must contain one
    sample taken after the decay has fallen below half a level.  That is
    one full sampling interval (plus boundary slack) plus the settle
    tail in either direction.
    """
    return 1.05 + sensors.rise_time_us * _SETTLE_PER_RISE / 1000.0


@dataclass(frozen=True)
class Scenario:
    motion: MotionProfile = MotionProfile()
    pipeline: PipelineConfig = PipelineConfig()
    # receiver-side pipeline for networked runs; None means same as pipeline
    pipeline_b: PipelineConfig | None = None
    sensors: SensorConfig = SensorConfig()
    clock_a: SimClock = SimClock(seed=1)
    clock_b: SimClock = SimClock(seed=2)
    net: NetworkConfig | None = None
    audio: AudioPathConfig | None = None
    duration_ms: float = 5000.0
    seed: int = 0
    angle_range_deg: float = 360.0
    start_utc_second: int = 100_000
    sync_lead_s: int = 2


def receiver_pipeline(scenario: Scenario) -> PipelineConfig:
    return scenario.pipeline_b if scenario.pipeline_b is not None else scenario.pipeline


def _check_pipeline(label: str, p: PipelineConfig, sensors: SensorConfig,
                    violations: list):
    if p.refresh_hz <= 0:
        violations.append(f"{label}.refresh_hz must be positive")
        return
    frame_ms = 1000.0 / p.refresh_hz
    margin_ms = sampling_margin_ms(sensors)
    if p.display_persistence_ms <= 0:
        violations.append(f"{label}.display_persistence_ms must be positive")
    elif p.display_persistence_ms < margin_ms:
        violations.append(
            f"{label}.display_persistence_ms={p.display_persistence_ms} is too "
            f"short for the capture to see a settled sample per strobe "
            f"(needs {margin_ms:.2f} ms at this sensor rise time)"
        )
    elif p.display_persistence_ms > frame_ms - margin_ms:
        violations.append(
            f"{label}.display_persistence_ms={p.display_persistence_ms} leaves "
            f"less than {margin_ms:.2f} ms dark per {frame_ms:.2f} ms frame; "
            "the decoder needs a settled dark sample between strobes"
        )
    if p.frame_delay_queue_len < 0 or int(p.frame_delay_queue_len) != p.frame_delay_queue_len:
        violations.append(f"{label}.frame_delay_queue_len must be a non-negative integer")
    for name in ("tracking_delay_ms", "render_compute_ms", "extrapolation_ms"):
        if getattr(p, name) < 0:
            violations.append(f"{label}.{name} must be >= 0")


def validate(scenario: Scenario) -> list:
    """Collect every configuration violation; empty list means valid."""
    v: list = []
    m = scenario.motion
    if m.kind != "sinusoidal":
        v.append(f"motion.kind {m.kind!r} is not supported")
    if m.amplitude_deg <= 0:
        v.append("motion.amplitude_deg must be positive")
    if m.period_ms <= 0:
        v.append("motion.period_ms must be positive")
    if scenario.angle_range_deg <= 0:
        v.append("angle_range_deg must be positive")
    elif m.amplitude_deg > 0:
        lo = m.center_deg - m.amplitude_deg
        hi = m.center_deg + m.amplitude_deg
        if lo < 0 or hi >= scenario.angle_range_deg:
            v.append(
                f"motion sweeps [{lo}, {hi}] degrees, outside "
                f"[0, {scenario.angle_range_deg})"
            )

    _check_pipeline("pipeline", scenario.pipeline, scenario.sensors, v)
    if scenario.pipeline_b is not None:
        _check_pipeline("pipeline_b", scenario.pipeline_b, scenario.sensors, v)

    s = scenario.sensors
    if s.rise_time_us < 0:
        v.append("sensors.rise_time_us must be >= 0")
    if s.pot_noise_sigma < 0 or s.photo_noise_sigma < 0:
        v.append("sensor noise sigmas must be >= 0")
    if s.adc_sample_hz != 1000.0:
        v.append("sensors.adc_sample_hz must be 1000 (the capture loop is fixed at 1 kHz)")
    if s.adc_conversion_us < 0 or s.adc_conversion_us * s.adc_sample_hz >= 1e6:
        v.append("sensors.adc_conversion_us must fit inside one capture interval")

    for label, c in (("clock_a", scenario.clock_a), ("clock_b", scenario.clock_b)):
        if abs(c.drift_ppm) > 1000:
            v.append(f"{label}.drift_ppm beyond +-1000 is outside the oscillator model")

    if scenario.net is not None:
        n = scenario.net
        if n.send_rate_hz <= 0:
            v.append("net.send_rate_hz must be positive")
        if n.one_way_delay_ms < 0:
            v.append("net.one_way_delay_ms must be >= 0")
        if n.jitter_ms < 0:
            v.append("net.jitter_ms must be >= 0")
        if n.phase_ms is not None and n.phase_ms < 0:
            v.append("net.phase_ms must be >= 0")

    if scenario.audio is not None:
        a = scenario.audio
        if a.tone_hz <= 0:
            v.append("audio.tone_hz must be positive")
        if a.path_delay_ms < 0:
            v.append("audio.path_delay_ms must be >= 0")
        if not (0.0 < a.threshold < 1.0):
            v.append("audio.threshold must lie strictly between 0 and 1")
        if a.sample_hz <= 0:
            v.append("audio.sample_hz must be positive")
        if not (0.0 < a.attenuation <= 1.0):
            v.append("audio.attenuation must lie in (0, 1]")
        if a.noise_sigma < 0:
            v.append("audio.noise_sigma must be >= 0")

    if scenario.duration_ms <= 0:
        v.append("duration_ms must be positive")
    if scenario.seed < 0 or int(scenario.seed) != scenario.seed:
        v.append("seed must be a non-negative integer")
    if scenario.start_utc_second <= 0:
        v.append("start_utc_second must be positive")
    if scenario.sync_lead_s < 1:
        v.append("sync_lead_s must be at least 1 second")
    return v


def raise_if_invalid(scenario: Scenario):
    violations = validate(scenario)
    if violations:
        raise ScenarioValidationError(violations)


# ---------------------------------------------------------------------------
# flat key-value serialization

_SECTIONS = {
    "motion": (MotionProfile, "motion"),
    "pipeline": (PipelineConfig, "pipeline"),
    "pipeline_b": (PipelineConfig, "pipeline_b"),
    "sensors": (SensorConfig, "sensors"),
    "clock_a": (SimClock, "clock_a"),
    "clock_b": (SimClock, "clock_b"),
    "net": (NetworkConfig, "net"),
    "audio": (AudioPathConfig, "audio"),
}
_OPTIONAL_SECTIONS = ("pipeline_b", "net", "audio")
_CLOCK_FIELDS = ("drift_ppm", "epoch_offset_us", "seed")  # sync_state is runtime-only

_TOP_FIELDS = {
    "duration_ms": float,
    "seed": int,
    "angle_range_deg": float,
    "start_utc_second": int,
    "sync_lead_s": int,
}


def _section_fields(cls):
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls)]
    if cls is SimClock:
        names = [n for n in names if n in _CLOCK_FIELDS]
    return {n: hints[n] for n in names}


def _coerce(value, hint, key):
    if isinstance(value, str):
        text = value.strip()
        if hint is float or hint == (float | None):
            return float(text)
        if hint is int:
            return int(text)
        if hint is str:
            return text
        if text.lower() == "none":
            return None
        try:
            return float(text) if "." in text or "e" in text.lower() else int(text)
        except ValueError:
            return text
    if hint is int and not isinstance(value, bool):
        return int(value)
    if hint is float:
        return float(value)
    return value


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines into a flat dict of raw string values."""
    flat = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioValidationError(
                [f"line {lineno}: expected 'key = value', got {raw!r}"]
            )
        key, value = line.split("=", 1)
        flat[key.strip()] = value.strip()
    return flat


def scenario_from_flat(flat: dict, base: Scenario | None = None) -> Scenario:
    """Build a scenario from flat dotted keys applied over a base."""
    sc = base if base is not None else Scenario()
    grouped: dict = {}
    top: dict = {}
    problems = []
    for key, value in flat.items():
        if "." in key:
            section, field = key.split(".", 1)
            if section not in _SECTIONS:
                problems.append(f"unknown config section in key {key!r}")
                continue
            cls, _ = _SECTIONS[section]
            fields = _section_fields(cls)
            if field not in fields:
                problems.append(f"unknown config key {key!r}")
                continue
            try:
                grouped.setdefault(section, {})[field] = _coerce(
                    value, fields[field], key
                )
            except (TypeError, ValueError):
                problems.append(f"cannot parse value for {key!r}: {value!r}")
        else:
            if key not in _TOP_FIELDS:
                problems.append(f"unknown config key {key!r}")
                continue
            try:
                top[key] = _coerce(value, _TOP_FIELDS[key], key)
            except (TypeError, ValueError):
                problems.append(f"cannot parse value for {key!r}: {value!r}")
    if problems:
        raise ScenarioValidationError(problems)

    updates: dict = dict(top)
    for section, values in grouped.items():
        cls, attr = _SECTIONS[section]
        current = getattr(sc, attr)
        if current is None:
            current = cls()
        updates[attr] = replace(current, **values)
    return replace(sc, **updates)


def scenario_to_flat(scenario: Scenario) -> dict:
    """Flat dotted-key view of a scenario (optional sections only if set)."""
    flat: dict = {}
    for section, (cls, attr) in _SECTIONS.items():
        obj = getattr(scenario, attr)
        if obj is None:
            continue
        for field in _section_fields(cls):
            value = getattr(obj, field)
            if value is None:
                continue
            flat[f"{section}.{field}"] = value
    for field in _TOP_FIELDS:
        flat[field] = getattr(scenario, field)
    return flat


def format_config(scenario: Scenario) -> str:
    lines = [f"{key} = {value}" for key, value in scenario_to_flat(scenario).items()]
    return "\n".join(lines) + "\n"


def load_config_text(text: str) -> Scenario:
    scenario = scenario_from_flat(parse_config_text(text))
    raise_if_invalid(scenario)
    return scenario


# ---------------------------------------------------------------------------
# presets

_VIVE_PIPELINE = {
    "pipeline.tracking_delay_ms": 2.0,
    "pipeline.render_compute_ms": 3.0,
    "pipeline.extrapolation_ms": 5.0,
    "pipeline.refresh_hz": 90.0,
    "pipeline.display_persistence_ms": 1.5,
    "pipeline.frame_delay_queue_len": 0,
}
_DEFAULT_NOISE = {
    "sensors.pot_noise_sigma": 0.001,
    "sensors.photo_noise_sigma": 0.01,
}

PRESETS: dict = {
    # 90 Hz headset-style pipeline with light pose prediction; the
    # measured motion-to-photon latency lands in the 3..10 ms band
    "vive-baseline": {**_VIVE_PIPELINE, **_DEFAULT_NOISE},
    "frame-delay-1": {**_VIVE_PIPELINE, **_DEFAULT_NOISE,
                      "pipeline.frame_delay_queue_len": 1},
    "frame-delay-5": {**_VIVE_PIPELINE, **_DEFAULT_NOISE,
                      "pipeline.frame_delay_queue_len": 5},
    "frame-delay-10": {**_VIVE_PIPELINE, **_DEFAULT_NOISE,
                       "pipeline.frame_delay_queue_len": 10},
    # no configured latency sources and a fast display, for pipeline
    # sanity checks: the estimate collapses to strobe/sampling alignment
    "zero-delay": {
        "pipeline.tracking_delay_ms": 0.0,
        "pipeline.render_compute_ms": 0.0,
        "pipeline.extrapolation_ms": 0.0,
        "pipeline.refresh_hz": 360.0,
        "pipeline.display_persistence_ms": 1.4,
        "pipeline.frame_delay_queue_len": 0,
    },
    # sender forwards its raw platform angle; the receiver renders it
    # through a headset-style pipeline without prediction
    "remote-default": {
        "pipeline.tracking_delay_ms": 0.0,
        "pipeline.render_compute_ms": 1.0,
        "pipeline.extrapolation_ms": 0.0,
        "pipeline_b.tracking_delay_ms": 2.0,
        "pipeline_b.render_compute_ms": 3.0,
        "pipeline_b.extrapolation_ms": 0.0,
        "net.send_rate_hz": 29.0,
        "net.one_way_delay_ms": 0.5,
        "net.jitter_ms": 0.0,
        "clock_a.drift_ppm": 25.0,
        "clock_b.drift_ppm": -25.0,
        **_DEFAULT_NOISE,
    },
    # exploratory: one-sided receiver extrapolation shortens one
    # direction of the remote path, which makes the two directions of a
    # bidirectional setup disagree
    "remote-asymmetric": {
        "pipeline.tracking_delay_ms": 0.0,
        "pipeline.render_compute_ms": 1.0,
        "pipeline_b.tracking_delay_ms": 2.0,
        "pipeline_b.render_compute_ms": 3.0,
        "pipeline_b.extrapolation_ms": 15.0,
        "net.send_rate_hz": 29.0,
        "net.one_way_delay_ms": 0.5,
        "clock_a.drift_ppm": 25.0,
        "clock_b.drift_ppm": -25.0,
        **_DEFAULT_NOISE,
    },
    "audio-local": {
        **_DEFAULT_NOISE,
        "audio.tone_hz": 4000.0,
        "audio.path_delay_ms": 100.0,
        "audio.threshold": 0.5,
    },
    "audio-remote": {
        **_DEFAULT_NOISE,
        "audio.tone_hz": 4000.0,
        "audio.path_delay_ms": 144.1,
        "audio.threshold": 0.5,
    },
}


def preset_names():
    return sorted(PRESETS)


def get_preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise ScenarioValidationError(
            [f"unknown preset {name!r}; available: {', '.join(preset_names())}"]
        )
    scenario = scenario_from_flat(PRESETS[name])
    raise_if_invalid(scenario)
    return scenario
