"""Hardware-fingerprinting intrusion detection for ARINC 429 buses.

Pipeline: synthesize device-specific BRTZ waveforms, segment each word into
127 typed sub-bit segments, extract one of four feature sets, score each
segment with a per-type local-outlier-factor model, vote the segments into
a per-word label, and feed labels through a suspicion counter. The markov
module analyses the counter exactly; the evaluation module reproduces the
full experimental protocol on synthetic device populations.
"""

from .bus import (
    ReceiverLoad,
    Trace,
    TransmitterProfile,
    decimate,
    read_trace,
    synthesize_stream,
    synthesize_word,
    write_trace,
)
from .detector import (
    SuspicionCounter,
    WordDetector,
    classify_word,
    classify_words,
    counter_step,
    load_detector,
    run_labels,
    run_stream,
    save_detector,
    train_detector,
)
from .features import (
    FeatureSet,
    extract,
    extract_generic,
    extract_handcrafted,
    extract_polynomial,
    extract_raw,
    feature_length,
)
from .lof import LofModel
from .markov import (
    alarm_probability,
    build_chain,
    flight_false_alarm,
    time_to_detect,
    time_to_detect_seconds,
)
from .evaluation import (
    BusSetup,
    ErrorCurves,
    Report,
    Scenario,
    build_report,
    compute_eer,
    fa_per_sec,
    run_counter_far,
    run_detection_time,
    run_single_word_eval,
)
from .segmentation import (
    MalformedSignal,
    Segment,
    SegmentType,
    Thresholds,
    segment_stream,
    segment_word,
)
from .words import (
    DEFAULT_WORD_SET,
    from_bits_msb_first,
    from_bits_wire_order,
    parse_word,
    to_bits_msb_first,
    to_bits_wire_order,
)

__version__ = "0.1.0"
