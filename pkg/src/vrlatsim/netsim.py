"""Two-station networked measurement.

The sender transmits its tracked platform angle at a fixed update rate
over a link with constant one-way delay and optional jitter.  Updates
are delivered in order; the receiver holds the last delivered value and
renders it through its own pipeline.  Latency added by the network path
is therefore the one-way delay plus the staleness of the zero-order
hold, on average half an update interval.

Both stations schedule their capture start for the same UTC second via
GPS-synchronized clocks; the residual disagreement of those starts is
exactly the clock-sync error and stays far below the 1 ms lag
resolution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clock import (
    SimClock,
    generate_timepulses,
    schedule_start,
    sync_to_gps,
    utc_messages_for,
)
from .errors import SimulationError
from .rig import (
    CallableAngleHistory,
    SteppedAngleHistory,
    platform_angle,
    simulate_station,
)

SEND_WARMUP_MS = 300.0  # transmit this long before capture so the hold is warm


@dataclass(frozen=True)
class NetworkConfig:
    send_rate_hz: float = 29.0
    one_way_delay_ms: float = 0.5
    jitter_ms: float = 0.0
    phase_ms: float | None = None  # send-grid offset; None draws it per run


def sample_and_send(angle_fn, net: NetworkConfig, t_start_us, t_end_us, rng):
    """Sample an angle stream at the send rate and deliver it over the link.

    Returns (delivery_times_us, angles).  Jitter is Gaussian, clipped at
    zero, and deliveries are forced monotonic so packets never overtake
    each other.
    """
    interval_us = 1e6 / net.send_rate_hz
    if net.phase_ms is not None:
        phase_us = net.phase_ms * 1000.0
    else:
        phase_us = float(rng.uniform(0.0, interval_us))
    count = int(np.floor((t_end_us - t_start_us - phase_us) / interval_us)) + 1
    if count <= 0:
        raise SimulationError("send window too short for a single update")
    send_times = t_start_us + phase_us + np.arange(count) * interval_us
    delays_us = np.full(count, net.one_way_delay_ms * 1000.0)
    if net.jitter_ms > 0:
        delays_us = delays_us + np.maximum(
            0.0, rng.normal(0.0, net.jitter_ms * 1000.0, size=count)
        )
    deliveries = np.maximum.accumulate(send_times + delays_us)
    return deliveries, np.asarray(angle_fn(send_times), dtype=float)


def _synced_clock(base: SimClock, scenario_seed: int, sync_second: int) -> SimClock:
    pulse_seed = np.random.SeedSequence((scenario_seed, base.seed, 0xC10C))
    pulses = generate_timepulses(pulse_seed, sync_second, 1)
    messages = utc_messages_for(pulses)
    return sync_to_gps(base, pulses[0], messages[0])


def remote_capture(scenario, duration_ms=None, *, synchronize=True):
    """Run the sender and receiver stations of a networked scenario.

    Returns (sender_capture, receiver_capture).  The sender's display
    shows its own local render loop; the receiver's display shows the
    angle stream arriving over the network, rendered through the
    receiver pipeline.  The receiver platform is parked at the motion
    center so its potentiometer channel carries no signal.
    """
    from .scenario import raise_if_invalid, receiver_pipeline  # import cycle

    raise_if_invalid(scenario)
    if scenario.net is None:
        raise SimulationError("scenario has no network configuration")
    duration = scenario.duration_ms if duration_ms is None else duration_ms

    seed_root = np.random.SeedSequence(scenario.seed)
    rng_a, rng_b, rng_net = [np.random.default_rng(s) for s in seed_root.spawn(3)]

    sync_second = scenario.start_utc_second - scenario.sync_lead_s
    if synchronize:
        clock_a = _synced_clock(scenario.clock_a, scenario.seed, sync_second)
        clock_b = _synced_clock(scenario.clock_b, scenario.seed, sync_second)
    else:
        clock_a, clock_b = scenario.clock_a, scenario.clock_b
    start_true_a = schedule_start(clock_a, scenario.start_utc_second)
    start_true_b = schedule_start(clock_b, scenario.start_utc_second)
    nominal_start_us = scenario.start_utc_second * 1_000_000

    def sender_platform(t_us):
        return platform_angle(
            scenario.motion,
            (np.asarray(t_us, dtype=float) - nominal_start_us) / 1000.0,
        )

    # the sender transmits its tracked angle, i.e. the platform as seen
    # through its tracking delay
    tracking_us = scenario.pipeline.tracking_delay_ms * 1000.0

    def sender_tracked(t_us):
        return sender_platform(np.asarray(t_us, dtype=float) - tracking_us)

    send_start = min(start_true_a, start_true_b) - SEND_WARMUP_MS * 1000.0
    send_end = max(start_true_a, start_true_b) + duration * 1000.0 + 1e5
    deliveries, values = sample_and_send(
        sender_tracked, scenario.net, send_start, send_end, rng_net
    )
    received = SteppedAngleHistory(deliveries, values, backfill=True)

    sender = simulate_station(
        station_id="A",
        platform_fn=sender_platform,
        display_source=CallableAngleHistory(sender_platform),
        pipeline=scenario.pipeline,
        sensors=scenario.sensors,
        angle_range_deg=scenario.angle_range_deg,
        clock=clock_a,
        true_start_us=start_true_a,
        start_utc_us=nominal_start_us,
        duration_ms=duration,
        rng=rng_a,
    )

    center = scenario.motion.center_deg

    def receiver_platform(t_us):
        return np.full(np.shape(np.asarray(t_us, dtype=float)), center)

    receiver = simulate_station(
        station_id="B",
        platform_fn=receiver_platform,
        display_source=received,
        pipeline=receiver_pipeline(scenario),
        sensors=scenario.sensors,
        angle_range_deg=scenario.angle_range_deg,
        clock=clock_b,
        true_start_us=start_true_b,
        start_utc_us=nominal_start_us,
        duration_ms=duration,
        rng=rng_b,
    )
    return sender, receiver
