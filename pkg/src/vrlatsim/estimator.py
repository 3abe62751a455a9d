"""Trace decoding and cross-correlation latency estimation.

Both capture channels are reduced to code series on the common 1 ms
interval grid.  The potentiometer channel quantizes directly.  The
display channel sees light only during each frame's strobe, so decoding
groups consecutive lit intervals into bursts, classifies the most
settled sample of each burst (the one with the highest total luminance,
which rejects rise and decay transients of the sensor), and holds that
code until the next burst.  Dark intervals therefore repeat the last
valid code.

Latency is the lag, in whole milliseconds, that maximizes the Pearson
correlation between the reference and the delayed series.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import codec
from .errors import (
    AlignmentError,
    CorrelationUndefinedError,
    DecodeError,
    EstimationError,
)
from .rig import RawCapture

DEFAULT_MAX_LAG_MS = 500
MIN_LENGTH_FACTOR = 10           # traces must be >= 10x the lag search range
BLACK_THRESHOLD = codec.LEVEL_STEP / 2.0
PEAK_WARNING_LEVEL = 0.9         # noiseless runs peak above 0.99; below this
                                 # the estimate should not be trusted


@dataclass(frozen=True)
class DecodedTrace:
    values: np.ndarray           # one code per 1 ms interval
    source: str                  # "potentiometer" or "display"
    start_utc_us: int
    held_fraction: float = 0.0   # fraction of intervals without fresh light

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class CorrelationResult:
    lags_ms: np.ndarray
    coefficients: np.ndarray
    best_lag_ms: int
    peak_coefficient: float
    trace_length: int            # intervals actually compared


@dataclass(frozen=True)
class LatencyReport:
    motion_to_photon_ms: int | None = None
    mouth_to_ear_ms: int | None = None
    remote_direction: str | None = None
    remote_latency_ms: int | None = None
    peak_coefficient: float | None = None
    decode_error_rate: float | None = None
    trace_length: int | None = None
    warnings: tuple = field(default_factory=tuple)


def decode_pot_trace(capture: RawCapture) -> DecodedTrace:
    """Quantize the normalized potentiometer channel to the code scale."""
    codes = codec.quantize_angle_clamped(np.asarray(capture.pot, dtype=float), 1.0)
    return DecodedTrace(
        values=codes,
        source="potentiometer",
        start_utc_us=capture.start_utc_us,
        held_fraction=0.0,
    )


def decode_display_trace(capture: RawCapture, *,
                         black_threshold: float = BLACK_THRESHOLD) -> DecodedTrace:
    """Decode the photosensor channels into a held code series.

    An interval is lit when any field exceeds the black threshold (half
    a level).  Each maximal run of lit intervals is one strobe burst;
    its code comes from the sample with the highest summed luminance,
    which is the most settled one because the sensor rises monotonically
    while lit and only decays afterwards.  Intervals before the first
    burst are backfilled with the first code so the trace keeps its
    length.
    """
    lum = np.asarray(capture.photo, dtype=float)
    n = lum.shape[0]
    lit = lum.max(axis=1) >= black_threshold
    if not lit.any():
        raise DecodeError(
            f"photosensor trace never exceeds {black_threshold:.4f} "
            f"in {n} intervals; the display looks permanently dark"
        )
    padded = np.concatenate(([False], lit, [False]))
    edges = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)

    burst_codes = np.empty(starts.shape[0], dtype=np.int64)
    for i, (s, e) in enumerate(zip(starts, ends)):
        totals = lum[s:e].sum(axis=1)
        pick = s + int(np.argmax(totals))
        burst_codes[i] = codec.decode(codec.classify_luminance(lum[pick]))

    idx = np.searchsorted(starts, np.arange(n), side="right") - 1
    values = burst_codes[np.maximum(idx, 0)]
    return DecodedTrace(
        values=values,
        source="display",
        start_utc_us=capture.start_utc_us,
        held_fraction=float(1.0 - lit.mean()),
    )


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    ac = a - a.mean()
    bc = b - b.mean()
    denom = np.sqrt(np.dot(ac, ac) * np.dot(bc, bc))
    if denom == 0.0:
        return 0.0  # a constant window carries no alignment information
    return float(np.dot(ac, bc) / denom)


def cross_correlate(reference: DecodedTrace, delayed: DecodedTrace,
                    max_lag_ms: int = DEFAULT_MAX_LAG_MS,
                    allow_negative: bool = False) -> CorrelationResult:
    """Pearson correlation over integer-millisecond lags.

    A lag L >= 0 compares reference[0:N-L] against delayed[L:N]; negative
    lags (opt-in) shift the other way.  Ties resolve to the smallest lag.
    """
    if max_lag_ms <= 0:
        raise EstimationError("max_lag_ms must be positive")
    ref = np.asarray(reference.values, dtype=float)
    del_ = np.asarray(delayed.values, dtype=float)
    n = min(ref.shape[0], del_.shape[0])
    ref, del_ = ref[:n], del_[:n]
    if n < MIN_LENGTH_FACTOR * max_lag_ms:
        raise EstimationError(
            f"traces of {n} intervals are too short for a lag search of "
            f"{max_lag_ms} ms (need at least {MIN_LENGTH_FACTOR * max_lag_ms})"
        )
    if np.ptp(ref) == 0 or np.ptp(del_) == 0:
        raise CorrelationUndefinedError(
            "correlation is undefined for a constant trace"
        )
    first = -max_lag_ms if allow_negative else 0
    lags = np.arange(first, max_lag_ms + 1)
    coeffs = np.empty(lags.shape[0])
    for i, lag in enumerate(lags):
        if lag >= 0:
            coeffs[i] = _pearson(ref[: n - lag] if lag else ref, del_[lag:])
        else:
            coeffs[i] = _pearson(ref[-lag:], del_[:lag])
    coeffs = np.clip(coeffs, -1.0, 1.0)
    best = int(np.argmax(coeffs))  # first occurrence, i.e. the smallest lag
    return CorrelationResult(
        lags_ms=lags,
        coefficients=coeffs,
        best_lag_ms=int(lags[best]),
        peak_coefficient=float(coeffs[best]),
        trace_length=n,
    )


def estimate_remote(sender_pot: DecodedTrace, receiver_display: DecodedTrace,
                    max_lag_ms: int = DEFAULT_MAX_LAG_MS,
                    allow_negative: bool = False) -> CorrelationResult:
    """Cross-correlate traces from two stations on a common UTC grid.

    Start timestamps are aligned by integer-millisecond re-indexing: the
    earlier trace drops its head so both begin at the same UTC interval.
    """
    shift_ms = int(round(
        (receiver_display.start_utc_us - sender_pot.start_utc_us) / 1000.0
    ))
    ref_vals = np.asarray(sender_pot.values)
    del_vals = np.asarray(receiver_display.values)
    if shift_ms >= 0:
        ref_vals = ref_vals[shift_ms:]
    else:
        del_vals = del_vals[-shift_ms:]
    overlap = min(ref_vals.shape[0], del_vals.shape[0])
    if overlap < MIN_LENGTH_FACTOR * max_lag_ms:
        raise AlignmentError(
            f"traces overlap for only {overlap} intervals after alignment; "
            f"a lag search of {max_lag_ms} ms needs "
            f"{MIN_LENGTH_FACTOR * max_lag_ms}"
        )
    common_start = max(sender_pot.start_utc_us, receiver_display.start_utc_us)
    ref = DecodedTrace(ref_vals[:overlap], sender_pot.source, common_start,
                       sender_pot.held_fraction)
    dly = DecodedTrace(del_vals[:overlap], receiver_display.source, common_start,
                       receiver_display.held_fraction)
    return cross_correlate(ref, dly, max_lag_ms, allow_negative)


def build_report(*, local: CorrelationResult | None = None,
                 mouth_to_ear=None,
                 remote: CorrelationResult | None = None,
                 remote_direction: str | None = None,
                 display_trace: DecodedTrace | None = None) -> LatencyReport:
    """Assemble the consolidated latency report for one run.

    Diagnostics (peak coefficient, decode error rate, trace length) come
    from the primary estimate: the remote one when present, the local
    loop otherwise.
    """
    primary = remote if remote is not None else local
    warnings = []
    if primary is not None:
        if primary.peak_coefficient < PEAK_WARNING_LEVEL:
            warnings.append("low_peak_coefficient")
        if primary.best_lag_ms < 0:
            warnings.append("negative_lag")
    return LatencyReport(
        motion_to_photon_ms=None if local is None else local.best_lag_ms,
        mouth_to_ear_ms=None if mouth_to_ear is None else mouth_to_ear.intervals,
        remote_direction=remote_direction if remote is not None else None,
        remote_latency_ms=None if remote is None else remote.best_lag_ms,
        peak_coefficient=None if primary is None else primary.peak_coefficient,
        decode_error_rate=(
            None if display_trace is None else display_trace.held_fraction
        ),
        trace_length=None if primary is None else primary.trace_length,
        warnings=tuple(warnings),
    )
