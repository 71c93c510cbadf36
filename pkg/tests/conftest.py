import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from a429ids import bus, segmentation
from a429ids.words import DEFAULT_WORD_SET


@pytest.fixture(scope="session")
def clean_profile():
    return bus.TransmitterProfile(noise_sigma=0.0, timing_jitter=0.0)


@pytest.fixture(scope="session")
def clean_segment_bank(clean_profile):
    """word value -> its 127 segments, from a noiseless jitter-free trace."""
    trace = bus.synthesize_stream(
        clean_profile, [bus.ReceiverLoad()], list(DEFAULT_WORD_SET), seed=7
    )
    per_word = segmentation.segment_stream(trace)
    return dict(zip(DEFAULT_WORD_SET, per_word))


@pytest.fixture(scope="session")
def noisy_word_bank():
    """(word values, per-word segments) for 5 cycles of the standard words
    at the default noise level."""
    values = [DEFAULT_WORD_SET[i % 6] for i in range(30)]
    trace = bus.synthesize_stream(
        bus.TransmitterProfile(), [bus.ReceiverLoad()], values, seed=11
    )
    return values, segmentation.segment_stream(trace)
