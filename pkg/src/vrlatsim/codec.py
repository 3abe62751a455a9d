"""Octal brightness-code codec.

A rotation angle is quantized to a 12-bit code (0..4095) and shown on a
display as four square fields, each holding one octal digit as a grey
level.  Eight levels spaced 1/7 apart leave the widest possible margin
between neighbours; the decoder classifies each photosensor reading back
to the nearest level.

All functions accept scalars or numpy arrays and are pure.
"""
from __future__ import annotations

import numpy as np

CODE_COUNT = 4096
CODE_MAX = CODE_COUNT - 1
DIGIT_COUNT = 4
DIGIT_BASE = 8
DIGIT_MAX = DIGIT_BASE - 1
LEVEL_STEP = 1.0 / DIGIT_MAX          # luminance distance between adjacent levels

# place values of the four octal digits, most significant first
_PLACES = np.array([512, 64, 8, 1], dtype=np.int64)


def _as_int_result(values, scalar_input):
    if scalar_input:
        return int(values)
    return values


def quantize_angle(angle_deg, angle_range_deg):
    """Map an angle in [0, angle_range) onto the 0..4095 code scale.

    The top bin is closed so that angles infinitesimally below the range
    still land on code 4095.  Angles outside [0, angle_range) are a
    domain error because the caller is expected to normalize first.
    """
    if angle_range_deg <= 0:
        raise ValueError("angle_range_deg must be positive")
    a = np.asarray(angle_deg, dtype=float)
    if np.any(a < 0.0) or np.any(a >= angle_range_deg):
        raise ValueError(
            f"angle outside [0, {angle_range_deg}): {angle_deg!r}"
        )
    codes = np.minimum((a / angle_range_deg * CODE_COUNT).astype(np.int64), CODE_MAX)
    return _as_int_result(codes, np.ndim(angle_deg) == 0)


def quantize_angle_clamped(angle_deg, angle_range_deg):
    """Saturating variant used by synthesis paths.

    Render pipelines may extrapolate slightly past the mechanical range;
    a real application would clamp before encoding, so this does too.
    """
    a = np.asarray(angle_deg, dtype=float)
    codes = np.clip((a / angle_range_deg * CODE_COUNT).astype(np.int64), 0, CODE_MAX)
    return _as_int_result(codes, np.ndim(angle_deg) == 0)


def dequantize_angle(code, angle_range_deg):
    """Return the bin-center angle for a code (inverse of quantize_angle)."""
    c = np.asarray(code)
    if np.any(c < 0) or np.any(c > CODE_MAX):
        raise ValueError(f"code outside 0..{CODE_MAX}: {code!r}")
    angles = (c + 0.5) / CODE_COUNT * angle_range_deg
    if np.ndim(code) == 0:
        return float(angles)
    return angles


def encode(code):
    """Split a code into its four octal digits, most significant first.

    Array input of shape (...,) yields digits of shape (..., 4).
    """
    c = np.asarray(code, dtype=np.int64)
    if np.any(c < 0) or np.any(c > CODE_MAX):
        raise ValueError(f"code outside 0..{CODE_MAX}: {code!r}")
    return (c[..., None] // _PLACES) % DIGIT_BASE


def decode(digits):
    """Reassemble a code from four octal digits (inverse of encode)."""
    d = np.asarray(digits, dtype=np.int64)
    if d.shape[-1] != DIGIT_COUNT:
        raise ValueError(f"expected {DIGIT_COUNT} digits, got shape {d.shape}")
    if np.any(d < 0) or np.any(d > DIGIT_MAX):
        raise ValueError(f"digit outside 0..{DIGIT_MAX}: {digits!r}")
    codes = (d * _PLACES).sum(axis=-1)
    return _as_int_result(codes, codes.ndim == 0)


def digits_to_luminance(digits):
    """Grey level for each digit: k maps to k/7 so 0 is black and 7 is white."""
    d = np.asarray(digits, dtype=np.int64)
    if np.any(d < 0) or np.any(d > DIGIT_MAX):
        raise ValueError(f"digit outside 0..{DIGIT_MAX}: {digits!r}")
    return d / float(DIGIT_MAX)


def classify_luminance(luminance):
    """Nearest-level classification of measured grey values.

    Values are clamped to [0, 1] first since sensor noise can push a
    reading slightly outside the display range.  A value exactly halfway
    between two levels resolves to the lower one.
    """
    lum = np.clip(np.asarray(luminance, dtype=float), 0.0, 1.0)
    # ceil(7x - 0.5) picks the nearest level and sends exact midpoints down
    digits = np.ceil(lum * DIGIT_MAX - 0.5).astype(np.int64)
    return np.clip(digits, 0, DIGIT_MAX)
