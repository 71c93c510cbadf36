"""Word-level intrusion detector: per-segment novelty votes feeding a
streaming suspicion counter.

Training pools the feature vectors of every segment type seen in the
normal words and fits one LOF model per type. Classification counts how
many of a word's segments vote "normal"; the word is anomalous when that
count does not exceed t_votes. Segment types the feature set excludes are
skipped outright - they shrink the voting universe instead of counting as
free normal votes. The suspicion counter then turns per-word labels into
an alarm: +1 on an anomaly, -1 on a normal word with a floor at zero, and
an absorbing alarm once it reaches t_suspicion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import features, lof
from .features import DEFAULT_SAMPLE_INTERVAL, FeatureSet
from .segmentation import SegmentType


@dataclass
class WordDetector:
    set_id: FeatureSet
    t_votes: int
    models: dict[SegmentType, lof.LofModel]
    sample_interval: float = DEFAULT_SAMPLE_INTERVAL


def train_detector(
    training_words,
    set_id: FeatureSet,
    t_votes: int,
    k: int = lof.DEFAULT_K,
    contamination: float = lof.DEFAULT_CONTAMINATION,
    sample_interval: float = DEFAULT_SAMPLE_INTERVAL,
) -> WordDetector:
    """Fit one per-type model from segmented normal words.

    ``training_words`` is a list of per-word segment lists. Types that never
    occur in the training words get no model (they cannot occur at test time
    either when the guarded bus replays the same word vocabulary); a type
    that occurs too rarely to fit is an error.
    """
    t_votes = int(t_votes)
    if not 0 <= t_votes <= 127:
        raise ValueError(f"t_votes must be in [0, 127], got {t_votes}")
    pools: dict[SegmentType, list[np.ndarray]] = {}
    for word in training_words:
        for seg in word:
            vec = features.extract(set_id, seg, dt=sample_interval)
            if vec is None:
                continue
            pools.setdefault(seg.seg_type, []).append(vec)
    if not pools:
        raise ValueError("no training segments")
    models = {}
    for seg_type, vecs in sorted(pools.items(), key=lambda kv: kv[0].value):
        if len(vecs) < k + 2:
            raise ValueError(
                f"only {len(vecs)} {seg_type.value} training segments; "
                f"need at least k + 2 = {k + 2}"
            )
        models[seg_type] = lof.fit(np.asarray(vecs), k=k, contamination=contamination)
    return WordDetector(
        set_id=set_id, t_votes=t_votes, models=models, sample_interval=sample_interval
    )


def classify_words(detector: WordDetector, words) -> tuple[np.ndarray, np.ndarray]:
    """Labels and normal-vote counts for a batch of segmented words.

    Returns (is_anomaly bool array, normal_votes int array). Segments are
    grouped by type so each model scores one matrix; per-word results are
    scattered back afterwards.
    """
    words = list(words)
    votes = np.zeros(len(words), dtype=np.int64)
    grouped: dict[SegmentType, tuple[list[int], list[np.ndarray]]] = {}
    for wi, word in enumerate(words):
        for seg in word:
            vec = features.extract(detector.set_id, seg, dt=detector.sample_interval)
            if vec is None:
                continue
            owners, vecs = grouped.setdefault(seg.seg_type, ([], []))
            owners.append(wi)
            vecs.append(vec)
    for seg_type, (owners, vecs) in grouped.items():
        model = detector.models.get(seg_type)
        if model is None:
            raise ValueError(
                f"no model for segment type {seg_type.value}; "
                "it never occurred in the training words"
            )
        anomalous = lof.classify(model, np.asarray(vecs))
        np.add.at(votes, np.asarray(owners), (~anomalous).astype(np.int64))
    labels = votes <= detector.t_votes
    return labels, votes


def classify_word(detector: WordDetector, word_segments) -> tuple[bool, int]:
    """Label one word: (is_anomaly, normal_votes)."""
    labels, votes = classify_words(detector, [word_segments])
    return bool(labels[0]), int(votes[0])


@dataclass(frozen=True)
class SuspicionCounter:
    t_suspicion: int
    value: int = 0
    alarmed: bool = False

    def __post_init__(self):
        if self.t_suspicion < 1:
            raise ValueError(f"t_suspicion must be >= 1, got {self.t_suspicion}")
        if not 0 <= self.value <= self.t_suspicion:
            raise ValueError(f"counter value {self.value} outside [0, {self.t_suspicion}]")


def counter_step(counter: SuspicionCounter, is_anomaly: bool) -> SuspicionCounter:
    """Advance the counter by one word. Stepping an alarmed counter is a no-op."""
    if counter.alarmed:
        return counter
    if is_anomaly:
        value = counter.value + 1
    else:
        value = max(counter.value - 1, 0)
    return replace(counter, value=value, alarmed=value >= counter.t_suspicion)


def run_labels(counter: SuspicionCounter, labels) -> int | None:
    """Feed per-word labels through the counter.

    Returns the 1-based index of the word that raised the alarm, or None if
    the stream ends unalarmed.
    """
    for i, is_anomaly in enumerate(labels, start=1):
        counter = counter_step(counter, bool(is_anomaly))
        if counter.alarmed:
            return i
    return None


def run_stream(detector: WordDetector, counter: SuspicionCounter, word_stream) -> int | None:
    """Classify a stream of segmented words and run the counter over it."""
    labels, _ = classify_words(detector, list(word_stream))
    return run_labels(counter, labels)


def detector_to_dict(detector: WordDetector) -> dict:
    return {
        "feature_set": detector.set_id.value,
        "t_votes": detector.t_votes,
        "sample_interval": detector.sample_interval,
        "models": {
            seg_type.value: lof.model_to_dict(model)
            for seg_type, model in detector.models.items()
        },
    }


def detector_from_dict(data: dict) -> WordDetector:
    try:
        return WordDetector(
            set_id=FeatureSet(data["feature_set"]),
            t_votes=int(data["t_votes"]),
            sample_interval=float(data["sample_interval"]),
            models={
                SegmentType(name): lof.model_from_dict(record)
                for name, record in data["models"].items()
            },
        )
    except KeyError as exc:
        raise ValueError(f"detector record missing key {exc}") from exc


def save_detector(detector: WordDetector, path) -> None:
    with open(path, "w") as fh:
        json.dump(detector_to_dict(detector), fh, sort_keys=True)


def load_detector(path) -> WordDetector:
    with open(path) as fh:
        return detector_from_dict(json.load(fh))
