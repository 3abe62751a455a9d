"""Mouth-to-ear latency measurement.

A buzzer plays a square-wave tone; a rectifying threshold detector on the
far side of a configurable delay path reports the first polling interval
in which sound is present.  Latency is counted in whole 1 ms intervals,
so a measurement can never be early and exceeds the true path delay by
less than one interval.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DetectionTimeoutError

DEFAULT_HORIZON_MS = 10_000.0


@dataclass(frozen=True)
class AudioPathConfig:
    tone_hz: float = 4000.0
    path_delay_ms: float = 0.0
    threshold: float = 0.5
    sample_hz: float = 1000.0      # detector polling rate, matches the capture loop
    attenuation: float = 1.0
    noise_sigma: float = 0.0


@dataclass(frozen=True)
class MouthToEarResult:
    intervals: int
    latency_ms: float


def buzzer_waveform(cfg: AudioPathConfig, t_us):
    """Square wave: +1 in the first half period, -1 in the second."""
    period_us = 1e6 / cfg.tone_hz
    phase = np.mod(np.asarray(t_us, dtype=float), period_us)
    value = np.where(phase < period_us / 2.0, 1.0, -1.0)
    if np.ndim(t_us) == 0:
        return float(value)
    return value


def detect_first_crossing(cfg: AudioPathConfig, waveform, *, rng=None,
                          horizon_ms=DEFAULT_HORIZON_MS):
    """Earliest polling instant at which the delayed, rectified signal
    reaches the threshold.

    `waveform` is a callable t_us -> amplitude describing the source.
    The detector hears attenuation * waveform(t - path_delay), silence
    before the sound arrives, plus optional Gaussian noise per poll.
    Returns the crossing time in microseconds.
    """
    step_us = 1e6 / cfg.sample_hz
    delay_us = cfg.path_delay_ms * 1000.0
    n = int(np.floor(horizon_ms * 1000.0 / step_us)) + 1
    times = np.arange(n) * step_us
    heard = np.zeros(n)
    arrived = times >= delay_us
    if arrived.any():
        heard[arrived] = cfg.attenuation * np.asarray(
            waveform(times[arrived] - delay_us), dtype=float
        )
    if rng is not None and cfg.noise_sigma > 0:
        heard = heard + rng.normal(0.0, cfg.noise_sigma, size=n)
    hits = np.flatnonzero(np.abs(heard) >= cfg.threshold)
    if hits.size == 0:
        raise DetectionTimeoutError(
            f"no threshold crossing within {horizon_ms} ms"
        )
    return float(times[hits[0]])


def measure_mouth_to_ear(cfg: AudioPathConfig, seed=0,
                         horizon_ms=DEFAULT_HORIZON_MS) -> MouthToEarResult:
    """Count whole 1 ms polling intervals until the tone is detected."""
    rng = np.random.default_rng(seed) if cfg.noise_sigma > 0 else None
    crossing_us = detect_first_crossing(
        cfg, lambda t: buzzer_waveform(cfg, t), rng=rng, horizon_ms=horizon_ms
    )
    intervals = int(np.ceil(crossing_us / 1000.0))
    return MouthToEarResult(intervals=intervals, latency_ms=float(intervals))
