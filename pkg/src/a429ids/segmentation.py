"""Split BRTZ words into 127 typed sub-bit segments by threshold crossings.

Four positive thresholds and their negatives carve a word into ten segment
types. Each type has one start crossing and one end crossing; while a
segment is open, crossings of every other threshold are ignored, which is
what makes the scheme hysteretic (the paired thresholds sit 0.8 V apart, so
sample noise cannot re-trigger a boundary). A word is 32 pulses; the long
null after the last pulse belongs to no word and is dropped, leaving
32 * 4 - 1 = 127 segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .words import WORD_BITS


class SegmentType(Enum):
    LO = "LO"
    HI = "HI"
    NULL_HH = "NULL_HH"  # null between two 1 bits ("smile")
    NULL_HL = "NULL_HL"  # null between a 1 and a 0
    NULL_LL = "NULL_LL"  # null between two 0 bits ("frown")
    NULL_LH = "NULL_LH"  # null between a 0 and a 1
    UP_FROM_LO = "UP_FROM_LO"
    UP_FROM_NULL = "UP_FROM_NULL"
    DOWN_FROM_HI = "DOWN_FROM_HI"
    DOWN_FROM_NULL = "DOWN_FROM_NULL"


TRANSITION_TYPES = frozenset(
    {
        SegmentType.UP_FROM_LO,
        SegmentType.UP_FROM_NULL,
        SegmentType.DOWN_FROM_HI,
        SegmentType.DOWN_FROM_NULL,
    }
)

SEGMENTS_PER_WORD = 4 * WORD_BITS - 1


@dataclass(frozen=True)
class Thresholds:
    v_l1: float = 2.0
    v_l2: float = 2.8
    v_h1: float = 8.0
    v_h2: float = 7.2

    def validate(self) -> None:
        if not 0.0 < self.v_l1 < self.v_l2 < self.v_h2 < self.v_h1:
            raise ValueError(
                "thresholds must satisfy 0 < v_l1 < v_l2 < v_h2 < v_h1, got "
                f"{self.v_l1}, {self.v_l2}, {self.v_h2}, {self.v_h1}"
            )


class MalformedSignal(ValueError):
    """Crossing sequence inconsistent with any legal bit pattern."""

    def __init__(self, message: str, sample_index: int, word_index: int | None = None):
        self.message = message
        self.sample_index = int(sample_index)
        self.word_index = word_index
        where = f"word {word_index}, " if word_index is not None else ""
        super().__init__(f"{message} ({where}sample {self.sample_index})")


@dataclass
class Segment:
    seg_type: SegmentType
    samples: np.ndarray
    start_index: int  # sample index relative to the word start


# Crossing kinds. Rank (code % 10) orders simultaneous crossings along the
# direction of travel; rises and falls cannot share a sample index.
_R_NEG_H2, _R_NEG_L1, _R_L2, _R_H1 = 0, 1, 2, 3
_F_H2, _F_L1, _F_NEG_L2, _F_NEG_H1 = 10, 11, 12, 13


def _crossings(x: np.ndarray, th: Thresholds):
    """Sample indices and kind codes of all threshold crossings in ``x``.

    A crossing fires on the first sample strictly beyond the threshold when
    the previous sample was not (strict on the new sample, no interpolation).
    """
    prev, cur = x[:-1], x[1:]
    idx_parts, code_parts = [], []
    rises = ((_R_NEG_H2, -th.v_h2), (_R_NEG_L1, -th.v_l1), (_R_L2, th.v_l2), (_R_H1, th.v_h1))
    falls = ((_F_H2, th.v_h2), (_F_L1, th.v_l1), (_F_NEG_L2, -th.v_l2), (_F_NEG_H1, -th.v_h1))
    for code, thr in rises:
        hits = np.nonzero((cur > thr) & (prev <= thr))[0] + 1
        idx_parts.append(hits)
        code_parts.append(np.full(len(hits), code, dtype=np.int64))
    for code, thr in falls:
        hits = np.nonzero((cur < thr) & (prev >= thr))[0] + 1
        idx_parts.append(hits)
        code_parts.append(np.full(len(hits), code, dtype=np.int64))
    idx = np.concatenate(idx_parts)
    code = np.concatenate(code_parts)
    order = np.lexsort((code % 10, idx))
    return idx[order], code[order]


# State machine: maps (state, crossing) -> (segment type closed, next state).
# States name what is currently open; "null_h"/"null_l" are nulls whose type
# resolves only once the next pulse's polarity shows up.
_LEAD, _UP_NULL, _HI, _DOWN_HI, _NULL_H, _DOWN_NULL, _LO, _UP_LO, _NULL_L = range(9)

_STEP = {
    (_LEAD, _R_L2): (None, _UP_NULL),
    (_LEAD, _F_NEG_L2): (None, _DOWN_NULL),
    (_UP_NULL, _R_H1): (SegmentType.UP_FROM_NULL, _HI),
    (_HI, _F_H2): (SegmentType.HI, _DOWN_HI),
    (_DOWN_HI, _F_L1): (SegmentType.DOWN_FROM_HI, _NULL_H),
    (_NULL_H, _R_L2): (SegmentType.NULL_HH, _UP_NULL),
    (_NULL_H, _F_NEG_L2): (SegmentType.NULL_HL, _DOWN_NULL),
    (_DOWN_NULL, _F_NEG_H1): (SegmentType.DOWN_FROM_NULL, _LO),
    (_LO, _R_NEG_H2): (SegmentType.LO, _UP_LO),
    (_UP_LO, _R_NEG_L1): (SegmentType.UP_FROM_LO, _NULL_L),
    (_NULL_L, _R_L2): (SegmentType.NULL_LH, _UP_NULL),
    (_NULL_L, _F_NEG_L2): (SegmentType.NULL_LL, _DOWN_NULL),
}

# Closing a transition of these states completes one pulse.
_PULSE_CLOSERS = {SegmentType.DOWN_FROM_HI, SegmentType.UP_FROM_LO}


def segment_word(trace, word_start: int, thresholds: Thresholds | None = None,
                 word_index: int | None = None) -> list[Segment]:
    """Segment the word starting at ``word_start`` into its 127 pieces.

    Raises MalformedSignal when the crossings cannot be parsed as 32 pulses
    (for example a saturated or clipped stretch), reporting the absolute
    sample index where parsing gave up.
    """
    th = thresholds if thresholds is not None else Thresholds()
    th.validate()
    word_start = int(word_start)
    if not 0 <= word_start < len(trace.samples):
        raise ValueError(f"word_start {word_start} out of range")

    # One bit period beyond the word covers the closing transition; the
    # minimum 4-bit gap guarantees the window never reaches the next word.
    window = math.ceil((WORD_BITS + 1) * trace.samples_per_bit)
    x = trace.samples[word_start : word_start + window]

    idx, code = _crossings(x, th)
    segments: list[Segment] = []
    state = _LEAD
    open_at = None
    pulses = 0

    for i, c in zip(idx.tolist(), code.tolist()):
        action = _STEP.get((state, c))
        if action is None:
            continue  # hysteresis: not a boundary of the open segment
        closed, state = action
        if closed is not None:
            if i <= open_at:
                raise MalformedSignal(
                    f"degenerate {closed.value} segment", word_start + i, word_index
                )
            segments.append(Segment(closed, x[open_at:i].copy(), open_at))
            if closed in _PULSE_CLOSERS:
                pulses += 1
                if pulses == WORD_BITS:
                    return segments
        open_at = i

    last = word_start + (int(idx[-1]) if len(idx) else len(x) - 1)
    raise MalformedSignal(
        f"signal ended after {pulses} of {WORD_BITS} pulses", last, word_index
    )


def segment_stream(trace, thresholds: Thresholds | None = None) -> list[list[Segment]]:
    """Apply `segment_word` at every word marker of the trace."""
    out = []
    for wi, start in enumerate(trace.word_starts.tolist()):
        out.append(segment_word(trace, start, thresholds, word_index=wi))
    return out


def census(segments) -> dict[SegmentType, int]:
    """Count segments by type."""
    counts: dict[SegmentType, int] = {}
    for seg in segments:
        counts[seg.seg_type] = counts.get(seg.seg_type, 0) + 1
    return counts
