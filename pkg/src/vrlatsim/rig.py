"""Single measurement-station simulation.

The simulated station reproduces the physical signal chain end to end:

  platform angle -> potentiometer -> 1 kHz ADC          (reference channel)
  platform angle -> render pipeline -> strobed display
                 -> photosensors -> 1 kHz ADC            (display channel)

The render pipeline samples the tracked angle a configurable time before
each frame's photons appear (tracking delay plus render compute), can
linearly extrapolate the motion, and can hold frames in a FIFO queue.
The display lights the four code fields only for the persistence window
at the start of each refresh interval and is black otherwise.  Each
photosensor is a first-order low-pass whose 10-90% rise time is
configurable; its output is integrated on a fixed 50 us internal grid,
twenty times finer than the capture interval.

The capture loop runs off the station's local clock, so oscillator drift
skews the true spacing of the 1 ms samples exactly as real hardware
would.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import codec
from .clock import SimClock
from .errors import SimulationError

INTERNAL_STEP_US = 50.0
# 10-90% rise of a first-order lag spans ln(9) time constants
RISE_LN9 = math.log(9.0)


@dataclass(frozen=True)
class MotionProfile:
    """Sinusoidal platform motion around a center angle."""

    amplitude_deg: float = 40.0
    period_ms: float = 1000.0
    center_deg: float = 180.0
    kind: str = "sinusoidal"


@dataclass(frozen=True)
class PipelineConfig:
    tracking_delay_ms: float = 0.0
    frame_delay_queue_len: int = 0
    refresh_hz: float = 90.0
    display_persistence_ms: float = 1.5
    extrapolation_ms: float = 0.0
    render_compute_ms: float = 0.0

    @property
    def frame_ms(self) -> float:
        return 1000.0 / self.refresh_hz


@dataclass(frozen=True)
class SensorConfig:
    rise_time_us: float = 260.0
    pot_noise_sigma: float = 0.0
    photo_noise_sigma: float = 0.0
    adc_sample_hz: float = 1000.0
    adc_conversion_us: float = 800.0   # total conversion budget per interval


@dataclass(frozen=True)
class RawCapture:
    """One station's synchronized capture of both channels."""

    station_id: str
    start_utc_us: int
    interval_ms: float
    pot: np.ndarray           # shape (n,), normalized potentiometer readings
    photo: np.ndarray         # shape (n, 4), one column per code field

    def __post_init__(self):
        if self.pot.shape[0] != self.photo.shape[0]:
            raise ValueError("pot and photo channels must have equal length")
        if self.photo.ndim != 2 or self.photo.shape[1] != codec.DIGIT_COUNT:
            raise ValueError(f"photo must have {codec.DIGIT_COUNT} columns")

    def __len__(self):
        return self.pot.shape[0]


class CallableAngleHistory:
    """Angle source defined analytically for every instant (true time, us)."""

    def __init__(self, fn):
        self._fn = fn

    def __call__(self, t_us):
        return np.asarray(self._fn(np.asarray(t_us, dtype=float)), dtype=float)


class SteppedAngleHistory:
    """Zero-order hold over timestamped angle samples.

    Queries before the first sample raise unless backfill is enabled, in
    which case they return the first value.  Network receivers enable
    backfill because their warm-up updates arrive before capture starts.
    """

    def __init__(self, times_us, angles_deg, backfill=False):
        self._times = np.asarray(times_us, dtype=float)
        self._angles = np.asarray(angles_deg, dtype=float)
        if self._times.size == 0:
            raise SimulationError("angle history needs at least one sample")
        if np.any(np.diff(self._times) < 0):
            raise SimulationError("angle history timestamps must be sorted")
        self._backfill = backfill

    def __call__(self, t_us):
        t = np.asarray(t_us, dtype=float)
        idx = np.searchsorted(self._times, t, side="right") - 1
        if not self._backfill and np.any(idx < 0):
            raise SimulationError(
                "angle history does not cover the requested sample time"
            )
        values = self._angles[np.maximum(idx, 0)]
        if np.ndim(t_us) == 0:
            return float(values)
        return values


def platform_angle(profile: MotionProfile, t_ms):
    """Platform angle in degrees at time t_ms (defined for all t)."""
    if profile.kind != "sinusoidal":
        raise ValueError(f"unknown motion profile kind: {profile.kind!r}")
    t = np.asarray(t_ms, dtype=float)
    angle = profile.center_deg + profile.amplitude_deg * np.sin(
        2.0 * np.pi * t / profile.period_ms
    )
    if np.ndim(t_ms) == 0:
        return float(angle)
    return angle


def potentiometer_read(angle_deg, angle_range_deg, sensors: SensorConfig, rng=None):
    """Normalized potentiometer reading: angle/range plus noise, clamped."""
    value = np.asarray(angle_deg, dtype=float) / angle_range_deg
    if rng is not None and sensors.pot_noise_sigma > 0:
        value = value + rng.normal(0.0, sensors.pot_noise_sigma, size=value.shape)
    clamped = np.clip(value, 0.0, 1.0)
    if np.ndim(angle_deg) == 0:
        return float(clamped)
    return clamped


def run_pipeline(pipeline: PipelineConfig, history, angle_range_deg,
                 frame_starts_us):
    """Displayed code for each frame of a schedule.

    For a frame whose photons appear at frame start F, the angle is taken
    from the history at F - render_compute - tracking_delay.  With
    extrapolation enabled, the last two per-frame samples define a slope
    that predicts the angle extrapolation_ms ahead.  A frame-delay queue
    of length q shows each code q frames late; the queue is pre-filled
    with the first code, so callers should extend the schedule q frames
    into the past if that warm-up matters.
    """
    frames = np.asarray(frame_starts_us, dtype=float)
    sample_us = frames - (pipeline.render_compute_ms
                          + pipeline.tracking_delay_ms) * 1000.0
    ang = np.asarray(history(sample_us), dtype=float)
    if pipeline.extrapolation_ms > 0.0:
        frame_us = pipeline.frame_ms * 1000.0
        prev = np.asarray(history(sample_us - frame_us), dtype=float)
        slope_per_ms = (ang - prev) / pipeline.frame_ms
        ang = ang + slope_per_ms * pipeline.extrapolation_ms
    fresh = codec.quantize_angle_clamped(ang, angle_range_deg)
    q = int(pipeline.frame_delay_queue_len)
    if q == 0:
        return fresh
    displayed = np.empty_like(fresh)
    displayed[:q] = fresh[0]
    displayed[q:] = fresh[:-q]
    return displayed


def display_emission(code: int, frame_start_ms: float, pipeline: PipelineConfig,
                     t_ms: float):
    """Luminance of the four code fields at time t within one frame.

    The strobe starts at the frame boundary and lasts for the persistence
    window; outside it the display is black.
    """
    offset = t_ms - frame_start_ms
    if 0.0 <= offset < pipeline.display_persistence_ms:
        return codec.digits_to_luminance(codec.encode(code)).astype(float)
    return np.zeros(codec.DIGIT_COUNT)


def photosensor_respond(times_us, incident, sensors: SensorConfig, *,
                        y_init=0.0, rng=None):
    """First-order low-pass response of the photosensors.

    The input is held constant over each step (zero-order hold on the
    left sample), and the recurrence uses the exact exponential update,
    so a step aligned to the grid reproduces the closed-form solution to
    machine precision.  The time constant is rise_time / ln(9), the
    10-90% rise of a first-order system.  Optional Gaussian noise models
    the ADC reading the sensor at each point.
    """
    t = np.asarray(times_us, dtype=float)
    x = np.asarray(incident, dtype=float)
    if t.shape[0] != x.shape[0]:
        raise ValueError("times and incident must share their first axis")
    tau = sensors.rise_time_us / RISE_LN9
    squeeze = x.ndim == 1
    x2 = x[:, None] if squeeze else x

    if tau == 0.0 or t.shape[0] < 2:
        y2 = x2.astype(float).copy()
        if t.shape[0] >= 1 and tau != 0.0:
            y2[0] = y_init
    else:
        dt = np.diff(t)
        if np.allclose(dt, dt[0], rtol=1e-9, atol=1e-9):
            alpha = math.exp(-dt[0] / tau)
            b = [0.0, 1.0 - alpha]
            a = [1.0, -alpha]
            zi = np.full((1, x2.shape[1]), float(y_init))
            y2, _ = lfilter(b, a, x2, axis=0, zi=zi)
        else:
            alphas = np.exp(-dt / tau)
            y2 = np.empty_like(x2, dtype=float)
            y2[0] = y_init
            for i in range(1, x2.shape[0]):
                y2[i] = x2[i - 1] + (y2[i - 1] - x2[i - 1]) * alphas[i - 1]

    if rng is not None and sensors.photo_noise_sigma > 0:
        y2 = y2 + rng.normal(0.0, sensors.photo_noise_sigma, size=y2.shape)
    return y2[:, 0] if squeeze else y2


def simulate_station(*, station_id: str, platform_fn, display_source,
                     pipeline: PipelineConfig, sensors: SensorConfig,
                     angle_range_deg: float, clock: SimClock,
                     true_start_us: float, start_utc_us: int,
                     duration_ms: float, rng) -> RawCapture:
    """Run one station's capture loop and return both channels.

    platform_fn(t_us) is the physical angle driving the potentiometer;
    display_source is the angle history feeding the render pipeline (the
    same function for a local loop, a network stream for a remote one).
    Sample instants follow the station's local clock, so drift stretches
    or compresses the true 1 ms grid.
    """
    n = int(round(duration_ms * sensors.adc_sample_hz / 1000.0))
    if n <= 0:
        raise SimulationError("duration must cover at least one sample")
    rate = 1.0 + clock.drift_ppm * 1e-6
    local_step_us = 1e6 / sensors.adc_sample_hz
    sample_true = true_start_us + np.arange(n) * (local_step_us / rate)

    # reference channel: potentiometer riding the physical platform
    pot = potentiometer_read(platform_fn(sample_true), angle_range_deg,
                             sensors, rng)
    pot = np.atleast_1d(np.asarray(pot, dtype=float))

    # frame schedule, extended backwards for warm-up and the delay queue
    frame_us = pipeline.frame_ms * 1000.0
    warm_us = max(3.0 * frame_us, 30_000.0)
    grid0 = sample_true[0] - warm_us
    grid_end = sample_true[-1]
    k_first = int(math.floor(grid0 / frame_us)) - (pipeline.frame_delay_queue_len + 2)
    k_last = int(math.ceil(grid_end / frame_us)) + 1
    frame_starts = np.arange(k_first, k_last + 1, dtype=float) * frame_us
    displayed = run_pipeline(pipeline, display_source, angle_range_deg,
                             frame_starts)

    # incident luminance on the internal integration grid
    m = int(math.ceil((grid_end - grid0) / INTERNAL_STEP_US)) + 1
    grid = grid0 + np.arange(m) * INTERNAL_STEP_US
    k_idx = np.floor((grid - frame_starts[0]) / frame_us).astype(np.int64)
    offset_us = grid - (frame_starts[0] + k_idx * frame_us)
    lit = offset_us < pipeline.display_persistence_ms * 1000.0
    frame_lum = codec.digits_to_luminance(codec.encode(displayed))
    incident = np.where(lit[:, None], frame_lum[k_idx], 0.0)

    sensed = photosensor_respond(grid, incident, sensors)
    j = np.clip(((sample_true - grid0) / INTERNAL_STEP_US).astype(np.int64),
                0, m - 1)
    photo = sensed[j]
    if sensors.photo_noise_sigma > 0:
        photo = photo + rng.normal(0.0, sensors.photo_noise_sigma,
                                   size=photo.shape)
    photo = np.clip(photo, 0.0, 1.0)

    return RawCapture(
        station_id=station_id,
        start_utc_us=int(start_utc_us),
        interval_ms=1000.0 / sensors.adc_sample_hz,
        pot=pot,
        photo=photo,
    )


def run_capture(scenario, station_id: str = "A", duration_ms=None) -> RawCapture:
    """Self-contained local measurement: the station observes its own
    platform on the potentiometer and its own display loop on the
    photosensors."""
    from .scenario import raise_if_invalid  # deferred, avoids an import cycle

    raise_if_invalid(scenario)
    duration = scenario.duration_ms if duration_ms is None else duration_ms
    clock = scenario.clock_a if station_id == "A" else scenario.clock_b
    rng = np.random.default_rng(
        np.random.SeedSequence((scenario.seed, 0 if station_id == "A" else 1))
    )

    def platform_fn(t_us):
        return platform_angle(scenario.motion, np.asarray(t_us, dtype=float) / 1000.0)

    return simulate_station(
        station_id=station_id,
        platform_fn=platform_fn,
        display_source=CallableAngleHistory(platform_fn),
        pipeline=scenario.pipeline,
        sensors=scenario.sensors,
        angle_range_deg=scenario.angle_range_deg,
        clock=clock,
        true_start_us=0.0,
        start_utc_us=scenario.start_utc_second * 1_000_000,
        duration_ms=duration,
        rng=rng,
    )
