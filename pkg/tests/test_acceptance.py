"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
come. Criterion 1's flight false-alarm bound is asserted exactly as stated
(< 1e-3); the exact chain value at p=0.4, T=50 is 2.29e-3, so that clause
is expected to fail - see the repository notes for the analysis.
"""

import time

import numpy as np
import pytest

from a429ids import bus, detector as det, evaluation as ev, features, lof, markov, segmentation
from a429ids.bus import ReceiverLoad, TransmitterProfile
from a429ids.detector import SuspicionCounter
from a429ids.features import FeatureSet
from a429ids.segmentation import Segment, SegmentType
from a429ids.words import DEFAULT_WORD_SET

from oracles import (
    brute_lof_fit,
    brute_lof_query,
    enumerate_alarm_probability,
    expected_segment_type_names,
    naive_generic,
)


def _report(number: int, name: str, ok: bool, detail: str, elapsed: float, budget: float):
    status = "PASS" if ok and elapsed < budget else "FAIL"
    print(
        f"[ACCEPTANCE] criterion {number} ({name}): {status} "
        f"[{elapsed:.2f}s of {budget:.0f}s] {detail}"
    )
    assert ok, f"criterion {number} ({name}): {detail}"
    assert elapsed < budget, f"criterion {number} exceeded its {budget:.0f}s budget"


# ---------------------------------------------------------------------------


def test_criterion_1_counter_analysis_quantitative():
    t0 = time.perf_counter()
    seconds = markov.time_to_detect_seconds(0.6, 100, target=0.99999, words_per_s=610.0)
    flight = markov.flight_false_alarm(0.4, 50)
    elapsed = time.perf_counter() - t0
    ok_time = 1.0 <= seconds <= 3.0
    ok_flight = flight < 1e-3
    _report(
        1, "counter analysis quantitative", ok_time and ok_flight,
        f"time_to_detect(0.6,100)={seconds:.3f}s (need [1,3]) "
        f"flight_false_alarm(0.4,50)={flight:.4e} (need <1e-3)",
        elapsed, 1.0,
    )


def test_criterion_2_counter_analysis_exactness():
    t0 = time.perf_counter()
    worst_enum = 0.0
    for p in (0.3, 0.7):
        for n in range(13):
            diff = abs(
                markov.alarm_probability(p, 3, n) - enumerate_alarm_probability(p, 3, n)
            )
            worst_enum = max(worst_enum, diff)

    # Monte Carlo: one floor-at-zero walk per p; the first time it touches
    # level L equals the absorption time of the counter with threshold L
    trials, worst_mc = 100_000, 0.0
    levels, checkpoints = (1, 3, 10), (10, 100, 1000)
    rng = np.random.default_rng(2024)
    for p in (0.1, 0.4, 0.6, 0.9):
        value = np.zeros(trials, dtype=np.int64)
        hit = {lvl: np.zeros(trials, dtype=np.int64) for lvl in levels}
        best = np.zeros(trials, dtype=np.int64)
        for step in range(1, max(checkpoints) + 1):
            move = np.where(rng.random(trials) < p, 1, -1)
            value = np.maximum(value + move, 0)
            reached = value > best
            if np.any(reached):
                rows = np.nonzero(reached)[0]
                for lvl in levels:
                    newly = rows[value[rows] == lvl]
                    hit[lvl][newly] = step
                best[reached] = value[reached]
            value = np.minimum(value, max(levels))
        for lvl in levels:
            for n in checkpoints:
                empirical = np.mean((hit[lvl] > 0) & (hit[lvl] <= n))
                analytic = markov.alarm_probability(p, lvl, n)
                worst_mc = max(worst_mc, abs(empirical - analytic))
    elapsed = time.perf_counter() - t0
    _report(
        2, "counter analysis exactness",
        worst_enum <= 1e-12 and worst_mc <= 0.01,
        f"enumeration diff={worst_enum:.2e} (<=1e-12), MC diff={worst_mc:.4f} (<=0.01)",
        elapsed, 30.0,
    )


def test_criterion_3_lof_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(50, 201))
        d = int(rng.integers(2, 21))
        x = rng.normal(size=(n, d)) * rng.uniform(0.3, 5.0, size=d) + rng.normal(size=d)
        model = lof.fit(x, k=20)
        want = np.asarray(brute_lof_fit(x.tolist(), 20))
        worst = max(worst, np.max(np.abs(model.train_scores - want) / np.abs(want)))
        queries = rng.normal(size=(5, d)) * 2.0
        got_q = lof.score(model, queries)
        want_q = np.asarray(brute_lof_query(x.tolist(), queries.tolist(), 20))
        worst = max(worst, np.max(np.abs(got_q - want_q) / np.abs(want_q)))
    elapsed = time.perf_counter() - t0
    _report(
        3, "lof oracle equivalence", worst <= 1e-9,
        f"20 datasets (n<=200, d<=20, k=20), worst relative diff={worst:.2e} (<=1e-9)",
        elapsed, 10.0,
    )


def test_criterion_4_segmentation_census():
    t0 = time.perf_counter()
    ok = True
    clean = TransmitterProfile(noise_sigma=0.0, timing_jitter=0.0)
    trace = bus.synthesize_stream(clean, [ReceiverLoad()], list(DEFAULT_WORD_SET), seed=1)
    for value, segments in zip(DEFAULT_WORD_SET, segmentation.segment_stream(trace)):
        ok = ok and len(segments) == 127
        ok = ok and [s.seg_type.value for s in segments] == expected_segment_type_names(value)

    noisy = TransmitterProfile(noise_sigma=0.2)
    for seed in range(100):
        trace = bus.synthesize_stream(noisy, [ReceiverLoad()], list(DEFAULT_WORD_SET), seed=seed)
        for value, segments in zip(DEFAULT_WORD_SET, segmentation.segment_stream(trace)):
            ok = ok and len(segments) == 127
            ok = ok and [s.seg_type.value for s in segments] == expected_segment_type_names(value)
    elapsed = time.perf_counter() - t0
    _report(
        4, "segmentation census", ok,
        "6 clean word values + 100 noisy seeds at sigma=0.2: all words give "
        "exactly 127 segments with oracle type sequences",
        elapsed, 10.0,
    )


def test_criterion_5_feature_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    ok = True

    # generic statistics against the naive formula evaluation
    for _ in range(200):
        samples = rng.normal(scale=rng.uniform(0.1, 5.0), size=int(rng.integers(4, 25)))
        got = features.extract_generic(Segment(SegmentType.HI, samples, 0))
        want = np.asarray(naive_generic(samples))
        ok = ok and np.allclose(got, want, rtol=1e-12, atol=1e-12)

    # polynomial recovery of planted polynomials, per type degree
    for seg_type, degree in features.POLY_DEGREES.items():
        for _ in range(20):
            n = int(rng.integers(degree + 2, degree + 18))
            coef = rng.uniform(-3, 3, size=degree + 1)
            t = np.linspace(0.0, 1.0, n)
            y = sum(c * t**j for j, c in enumerate(coef))
            out = features.extract_polynomial(Segment(seg_type, y, 0))
            ok = ok and np.allclose(out[:-1], coef, atol=1e-9)
            ok = ok and out[-1] < 1e-12

    # raw vectors are prefixes with the mandated per-type lengths
    lengths = {
        SegmentType.LO: 20, SegmentType.HI: 20,
        SegmentType.NULL_HH: 17, SegmentType.NULL_HL: 17,
        SegmentType.NULL_LL: 17, SegmentType.NULL_LH: 17,
        SegmentType.UP_FROM_LO: 4, SegmentType.UP_FROM_NULL: 4,
        SegmentType.DOWN_FROM_HI: 4, SegmentType.DOWN_FROM_NULL: 4,
    }
    for seg_type, want_len in lengths.items():
        samples = rng.normal(size=want_len + 4)
        out = features.extract_raw(Segment(seg_type, samples, 0))
        ok = ok and len(out) == want_len and np.array_equal(out, samples[:want_len])

    # hand-crafted landmarks on the scripted ripple
    dt = 2e-7
    ripple = [9.0, 11.0, 10.6, 9.4, 9.8, 10.2, 10.0, 10.0]
    out = features.extract_handcrafted(Segment(SegmentType.HI, np.array(ripple), 0), dt=dt)
    want = [1 * dt, 11.0, 3 * dt, 9.4, 5 * dt, 10.2, 2 * dt, -1.6, 4 * dt, -0.8]
    ok = ok and np.allclose(out, want, rtol=1e-12)
    elapsed = time.perf_counter() - t0
    _report(
        5, "feature correctness", ok,
        "generic=naive@1e-12, polynomial planted@1e-9/1e-12, raw prefix "
        "lengths, hand-crafted scripted ripple",
        elapsed, 5.0,
    )


# ---------------------------------------------------------------------------


def _tx_switch_scenario():
    guarded = ev.BusSetup(
        tx=TransmitterProfile(), loads=(ReceiverLoad(cutoff_freq=1.2e6),)
    )
    # separation: hi level moved 0.4 V = 8x the 0.05 V noise floor, rise and
    # fall times moved 150 ns = 7.5x the 20 ns edge jitter
    rogue = ev.BusSetup(
        tx=TransmitterProfile(
            hi_volts=10.4, lo_volts=-10.4, rise_time=1.85e-6, fall_time=1.85e-6,
            overshoot_frac=0.10,
        ),
        loads=(ReceiverLoad(cutoff_freq=1.2e6),),
    )
    return ev.Scenario(
        guarded=guarded, rogues=(rogue,), attack_kind="tx_switch",
        words_per_device=500, seed=20,
    )


def test_criterion_6_end_to_end_tx_switch():
    t0 = time.perf_counter()
    scenario = _tx_switch_scenario()
    values = ev._word_list(scenario)
    guarded, rogue = scenario.guarded, scenario.rogues[0]

    trace = bus.synthesize_stream(guarded.tx, guarded.loads, values, seed=201)
    segments = segmentation.segment_stream(trace)
    dt = 1.0 / trace.sample_rate
    trained = det.train_detector(segments[:300], FeatureSet.RAW, t_votes=100, sample_interval=dt)
    _, normal_votes = det.classify_words(trained, segments[300:])

    # extra fresh normal streams so the 100k-word replay cycles through
    # 1700 independently classified words
    for seed in (202, 203, 204):
        extra = bus.synthesize_stream(guarded.tx, guarded.loads, values, seed=seed)
        _, votes = det.classify_words(trained, segmentation.segment_stream(extra))
        normal_votes = np.concatenate([normal_votes, votes])

    rogue_trace = bus.synthesize_stream(rogue.tx, rogue.loads, values, seed=205)
    _, rogue_votes = det.classify_words(trained, segmentation.segment_stream(rogue_trace))

    far = np.cumsum(np.bincount(normal_votes, minlength=128)[:128]) / len(normal_votes)
    mdr = 1.0 - np.cumsum(np.bincount(rogue_votes, minlength=128)[:128]) / len(rogue_votes)
    eer = ev.compute_eer(ev.ErrorCurves(far=far, mdr=mdr))

    # 100 000 normal words through the counter: no alarm allowed
    normal_labels = normal_votes <= 100
    tiled = np.tile(normal_labels, 100_000 // len(normal_labels) + 1)[:100_000]
    false_alarm_at = det.run_labels(SuspicionCounter(t_suspicion=20), tiled)

    # 1000 cyclic-shift repetitions of the rogue stream: alarm within 30 words
    rogue_labels = rogue_votes <= 100
    rng = np.random.default_rng(206)
    worst_alarm = 0
    for _ in range(1000):
        rolled = np.roll(rogue_labels, -int(rng.integers(0, len(rogue_labels))))
        alarm = det.run_labels(SuspicionCounter(t_suspicion=20), rolled)
        worst_alarm = max(worst_alarm, alarm if alarm is not None else 10**9)

    elapsed = time.perf_counter() - t0
    _report(
        6, "end-to-end transmitter switch",
        eer == 0.0 and false_alarm_at is None and worst_alarm <= 30,
        f"RAW EER={eer} (need 0), 100k-word false alarm={false_alarm_at} "
        f"(need None), worst rogue alarm={worst_alarm} words (need <=30, "
        f"~{worst_alarm / 610 * 1000:.0f}ms at 610 words/s)",
        elapsed, 300.0,
    )


def _rx_switch_scenario():
    guarded = ev.BusSetup(
        tx=TransmitterProfile(noise_sigma=0.10, overshoot_frac=0.03),
        loads=(ReceiverLoad(cutoff_freq=1.2e6, gain=1.0),),
    )
    rogue = ev.rx_switch_variant(guarded, cutoff_factor=0.75, gain_factor=0.998)
    return ev.Scenario(
        guarded=guarded, rogues=(rogue,), attack_kind="rx_switch",
        words_per_device=500, seed=31,
    )


def test_criterion_7_end_to_end_rx_switch():
    t0 = time.perf_counter()
    scenario = _rx_switch_scenario()
    eer_raw = ev.compute_eer(ev.run_single_word_eval(scenario, FeatureSet.RAW))
    eer_poly = ev.compute_eer(ev.run_single_word_eval(scenario, FeatureSet.POLYNOMIAL))

    # counter false alarms on the polynomial detector; t_votes sits where
    # the per-word FAR is non-trivial so the knee behaviour is exercised
    counter_far = ev.run_counter_far(
        scenario, FeatureSet.POLYNOMIAL, t_votes=110, reps=1000,
        test_words=200, t_suspicion_grid=range(1, 51),
    )
    curve = [counter_far[t] for t in range(1, 51)]
    non_increasing = all(a >= b for a, b in zip(curve, curve[1:]))
    knee = next((t for t in range(1, 51) if all(counter_far[u] == 0.0 for u in range(t, 51))), None)

    elapsed = time.perf_counter() - t0
    _report(
        7, "end-to-end receiver switch",
        eer_poly <= eer_raw and non_increasing and knee is not None and knee <= 50,
        f"EER polynomial={eer_poly:.4f} <= raw={eer_raw:.4f}; counter FAR "
        f"non-increasing={non_increasing}, zero beyond t_suspicion={knee} "
        f"(need <=50; FAR at 1: {counter_far[1]:.3f})",
        elapsed, 300.0,
    )


def test_criterion_8_false_alarm_rate_arithmetic():
    t0 = time.perf_counter()
    a = ev.fa_per_sec(0.0012)
    b = ev.fa_per_sec(0.0032)
    elapsed = time.perf_counter() - t0
    _report(
        8, "false-alarms-per-second arithmetic",
        abs(a - 3.33) <= 0.01 and abs(b - 8.89) <= 0.01,
        f"fa_per_sec(0.0012)={a:.4f} (3.33+-0.01), fa_per_sec(0.0032)={b:.4f} (8.89+-0.01)",
        elapsed, 1.0,
    )


def test_criterion_9_detector_counter_matches_chain():
    t0 = time.perf_counter()
    rng = np.random.default_rng(909)
    trials = 10_000
    detail = []
    ok = True
    for p, t_suspicion, n in ((0.3, 5, 60), (0.7, 10, 40)):
        alarms = 0
        for _ in range(trials):
            labels = rng.random(n) < p
            if det.run_labels(SuspicionCounter(t_suspicion=t_suspicion), labels) is not None:
                alarms += 1
        empirical = alarms / trials
        analytic = markov.alarm_probability(p, t_suspicion, n)
        sigma = np.sqrt(max(analytic * (1.0 - analytic), 1e-12) / trials)
        ok = ok and abs(empirical - analytic) <= 3.0 * sigma
        detail.append(
            f"(p={p},T={t_suspicion},n={n}): |{empirical:.4f}-{analytic:.4f}|"
            f"<={3 * sigma:.4f}"
        )
    elapsed = time.perf_counter() - t0
    _report(9, "stream detector matches chain analysis", ok, "; ".join(detail), elapsed, 60.0)
