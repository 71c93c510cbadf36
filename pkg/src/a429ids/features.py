"""Per-segment feature extraction: raw samples, generic statistics,
polynomial fits and hand-picked shape landmarks."""

from __future__ import annotations

from enum import Enum

import numpy as np

from .bus import DEFAULT_BIT_RATE, DEFAULT_SAMPLES_PER_BIT
from .segmentation import Segment, SegmentType, TRANSITION_TYPES

DEFAULT_SAMPLE_INTERVAL = 1.0 / (DEFAULT_BIT_RATE * DEFAULT_SAMPLES_PER_BIT)


class FeatureSet(Enum):
    RAW = "raw"
    GENERIC = "generic"
    POLYNOMIAL = "polynomial"
    HANDCRAFTED = "handcrafted"


class SegmentTooShort(ValueError):
    pass


class ExcludedSegmentType(ValueError):
    pass


# Raw vectors truncate each segment to the shortest length its type can
# produce, so every vector of a type has one fixed dimension.
RAW_LENGTHS = {
    SegmentType.LO: 20,
    SegmentType.HI: 20,
    SegmentType.NULL_HH: 17,
    SegmentType.NULL_HL: 17,
    SegmentType.NULL_LL: 17,
    SegmentType.NULL_LH: 17,
    SegmentType.UP_FROM_LO: 4,
    SegmentType.UP_FROM_NULL: 4,
    SegmentType.DOWN_FROM_HI: 4,
    SegmentType.DOWN_FROM_NULL: 4,
}

# Fit degrees: transitions are near-linear, the like-bit nulls are even
# bumps, everything else gets the full degree.
POLY_DEGREES = {
    SegmentType.LO: 7,
    SegmentType.HI: 7,
    SegmentType.NULL_HH: 6,
    SegmentType.NULL_HL: 7,
    SegmentType.NULL_LL: 6,
    SegmentType.NULL_LH: 7,
    SegmentType.UP_FROM_LO: 2,
    SegmentType.UP_FROM_NULL: 2,
    SegmentType.DOWN_FROM_HI: 2,
    SegmentType.DOWN_FROM_NULL: 2,
}

# Mixed-polarity nulls have no reliable overshoot to take landmarks from.
HANDCRAFTED_EXCLUDED = frozenset({SegmentType.NULL_LH, SegmentType.NULL_HL})

_HANDCRAFTED_LENGTHS = {
    SegmentType.LO: 10,
    SegmentType.HI: 10,
    SegmentType.NULL_HH: 2,
    SegmentType.NULL_HL: 0,
    SegmentType.NULL_LL: 2,
    SegmentType.NULL_LH: 0,
    SegmentType.UP_FROM_LO: 2,
    SegmentType.UP_FROM_NULL: 2,
    SegmentType.DOWN_FROM_HI: 2,
    SegmentType.DOWN_FROM_NULL: 2,
}


def feature_length(set_id: FeatureSet, seg_type: SegmentType) -> int | None:
    """Vector length for (set, segment type); None when the type is excluded."""
    if set_id is FeatureSet.RAW:
        return RAW_LENGTHS[seg_type]
    if set_id is FeatureSet.GENERIC:
        return 8
    if set_id is FeatureSet.POLYNOMIAL:
        return POLY_DEGREES[seg_type] + 2
    if set_id is FeatureSet.HANDCRAFTED:
        return _HANDCRAFTED_LENGTHS[seg_type] or None
    raise ValueError(f"unknown feature set {set_id!r}")


def extract_raw(segment: Segment, target_len: int | None = None) -> np.ndarray:
    """First ``target_len`` samples of the segment, verbatim."""
    if target_len is None:
        target_len = RAW_LENGTHS[segment.seg_type]
    x = np.asarray(segment.samples, dtype=np.float64)
    if len(x) < target_len:
        raise SegmentTooShort(
            f"{segment.seg_type.value} segment of {len(x)} samples is shorter "
            f"than the raw length {target_len}"
        )
    return x[:target_len].copy()


def extract_generic(segment: Segment) -> np.ndarray:
    """Mean, std, variance, skewness, kurtosis, RMS, maximum and energy.

    All moments use the population form (divisor N). A constant segment has
    zero spread, so its skewness and kurtosis are defined as 0.
    """
    x = np.asarray(segment.samples, dtype=np.float64)
    if len(x) < 2:
        raise SegmentTooShort("generic features need at least 2 samples")
    mu = x.mean()
    var = np.mean((x - mu) ** 2)
    sd = np.sqrt(var)
    if sd > 0.0:
        z = (x - mu) / sd
        skew = np.mean(z**3)
        kurt = np.mean(z**4)
    else:
        skew = 0.0
        kurt = 0.0
    mean_sq = np.mean(x**2)
    rms = np.sqrt(mean_sq)
    return np.array([mu, sd, var, skew, kurt, rms, x.max(), mean_sq])


def extract_polynomial(segment: Segment, degree: int | None = None) -> np.ndarray:
    """Least-squares polynomial coefficients plus the fit residual.

    The time axis is normalised to [0, 1]. Coefficients come back in
    ascending power order followed by the residual (sum of squared fit
    errors), solved with an orthogonal decomposition rather than normal
    equations: the degree-7 Vandermonde is badly conditioned.
    """
    if degree is None:
        degree = POLY_DEGREES[segment.seg_type]
    x = np.asarray(segment.samples, dtype=np.float64)
    n = len(x)
    if n <= degree:
        raise SegmentTooShort(
            f"cannot fit degree {degree} through {n} samples (underdetermined)"
        )
    t = np.linspace(0.0, 1.0, n)
    vand = np.vander(t, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(vand, x, rcond=None)
    residual = float(np.sum((vand @ coef - x) ** 2))
    return np.append(coef, residual)


def _next_extremum(x: np.ndarray, begin: int, sign: int) -> int | None:
    """Index of the first interior extremum at or after ``begin``.

    ``sign`` +1 finds a maximum, -1 a minimum. A plateau of equal samples
    counts once, at its first index, and only if the far side drops away.
    """
    n = len(x)
    i = max(begin, 1)
    while i < n - 1:
        if sign * (x[i] - x[i - 1]) > 0:
            j = i
            while j + 1 < n and x[j + 1] == x[i]:
                j += 1
            if j + 1 < n and sign * (x[j + 1] - x[i]) < 0:
                return i
            i = j + 1
        else:
            i += 1
    return None


def _landmarks(x: np.ndarray, dt: float, first_sign: int) -> np.ndarray:
    """(t, v) of the overshoot, the rebound and the second ripple, plus the
    offsets of points 2 and 3 from the overshoot.

    Missing extrema fall back to the global extremum (for the overshoot) or
    to duplicating the last found point, so the vector length never varies.
    """
    points: list[int] = []
    begin, sign = 1, first_sign
    for _ in range(3):
        idx = _next_extremum(x, begin, sign)
        if idx is None:
            break
        points.append(idx)
        begin, sign = idx + 1, -sign
    if not points:
        points = [int(np.argmax(x)) if first_sign > 0 else int(np.argmin(x))]
    while len(points) < 3:
        points.append(points[-1])
    (i1, i2, i3) = points
    t1, t2, t3 = i1 * dt, i2 * dt, i3 * dt
    v1, v2, v3 = x[i1], x[i2], x[i3]
    return np.array([t1, v1, t2, v2, t3, v3, t2 - t1, v2 - v1, t3 - t1, v3 - v1])


def extract_handcrafted(
    segment: Segment, dt: float = DEFAULT_SAMPLE_INTERVAL
) -> np.ndarray:
    """Shape landmarks; ``dt`` converts sample offsets into seconds.

    HI: overshoot maximum, following minimum, following maximum (times from
    the segment start) and the offsets of the later points from the first.
    LO is the mirror image. Like-bit nulls take only their overshoot
    extremum. Transitions take the mean slope and the mean deviation from
    the chord joining the endpoints.
    """
    seg_type = segment.seg_type
    if seg_type in HANDCRAFTED_EXCLUDED:
        raise ExcludedSegmentType(
            f"{seg_type.value} segments have no hand-crafted features"
        )
    x = np.asarray(segment.samples, dtype=np.float64)
    if seg_type in TRANSITION_TYPES:
        if len(x) < 2:
            raise SegmentTooShort("transition features need at least 2 samples")
        slope = np.mean(np.diff(x)) / dt
        chord = np.linspace(x[0], x[-1], len(x))
        return np.array([slope, np.mean(x - chord)])
    if seg_type is SegmentType.HI:
        return _landmarks(x, dt, +1)
    if seg_type is SegmentType.LO:
        return _landmarks(x, dt, -1)
    # NULL_HH dips below the settling level ("smile"), NULL_LL peaks above
    # it ("frown"); the overshoot is the corresponding extremum.
    sign = -1 if seg_type is SegmentType.NULL_HH else +1
    idx = _next_extremum(x, 1, sign)
    if idx is None:
        idx = int(np.argmin(x)) if sign < 0 else int(np.argmax(x))
    return np.array([idx * dt, x[idx]])


def extract(
    set_id: FeatureSet, segment: Segment, dt: float = DEFAULT_SAMPLE_INTERVAL
) -> np.ndarray | None:
    """Dispatch to the chosen extractor.

    Returns None (a "no vector" marker) for segment types the set excludes;
    the detector skips those segments instead of voting on them.
    """
    if set_id is FeatureSet.RAW:
        return extract_raw(segment)
    if set_id is FeatureSet.GENERIC:
        return extract_generic(segment)
    if set_id is FeatureSet.POLYNOMIAL:
        return extract_polynomial(segment)
    if set_id is FeatureSet.HANDCRAFTED:
        if segment.seg_type in HANDCRAFTED_EXCLUDED:
            return None
        return extract_handcrafted(segment, dt)
    raise ValueError(f"unknown feature set {set_id!r}")
