"""Exact analysis of the suspicion counter as an absorbing Markov chain.

The counter over a stream of i.i.d. per-word decisions (anomaly with
probability ``p``) is a birth-death chain on states 0..T: +1 on anomaly,
-1 on normal with a floor at 0, and an absorbing alarm state at T. All
quantities here are computed from powers of the dense transition matrix, so
they are exact up to double-precision rounding even for flight-length word
counts (tens of millions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_WORDS_PER_SECOND = 610.0
DEFAULT_FLIGHT_SECONDS = 36_000.0
DEFAULT_DETECT_TARGET = 0.99999

# time_to_detect gives up beyond this many words and reports the target as
# unreachable; anything larger has no physical meaning for a bus stream.
_MAX_DETECT_WORDS = 2**63


@dataclass(frozen=True)
class CounterChain:
    """Transition structure of the suspicion counter for one ``p``."""

    p: float
    t_suspicion: int
    transition: np.ndarray  # (T+1, T+1), row-stochastic


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"anomaly probability must be in [0, 1], got {p}")
    return p


def _check_t(t_suspicion: int) -> int:
    t = int(t_suspicion)
    if t < 1:
        raise ValueError(f"t_suspicion must be >= 1, got {t_suspicion}")
    return t


def build_chain(p: float, t_suspicion: int) -> CounterChain:
    """Build the (T+1)x(T+1) transition matrix of the counter.

    Interior states move up with probability ``p`` and down with ``1 - p``;
    state 0 floors (self-loop on a normal word) and state T is absorbing.
    """
    p = _check_p(p)
    t = _check_t(t_suspicion)
    matrix = np.zeros((t + 1, t + 1))
    for i in range(t):
        matrix[i, max(i - 1, 0)] += 1.0 - p
        matrix[i, i + 1] = p
    matrix[t, t] = 1.0
    return CounterChain(p=p, t_suspicion=t, transition=matrix)


def alarm_probability(p: float, t_suspicion: int, n: int) -> float:
    """Probability that the counter, started at 0, alarms within ``n`` words.

    Equals the mass of the absorbing state in the distribution after n
    steps; the matrix power uses repeated squaring, so large n is cheap.
    """
    n = int(n)
    if n < 0:
        raise ValueError(f"word count must be >= 0, got {n}")
    chain = build_chain(p, t_suspicion)
    power = np.linalg.matrix_power(chain.transition, n)
    return float(power[0, -1])


def time_to_detect(
    p: float,
    t_suspicion: int,
    target: float = DEFAULT_DETECT_TARGET,
) -> int | None:
    """Minimal word count n with ``alarm_probability(p, T, n) >= target``.

    Returns None when the target is unreachable (p == 0, or not reached
    within 2**63 words). Found by doubling followed by binary search;
    alarm_probability is non-decreasing in n because the alarm state is
    absorbing.
    """
    p = _check_p(p)
    t = _check_t(t_suspicion)
    if target <= 0.0:
        return 0
    if p == 0.0:
        return None

    hi = max(t, 1)
    while alarm_probability(p, t, hi) < target:
        hi *= 2
        if hi > _MAX_DETECT_WORDS:
            return None
    # valid bracket even when the doubling never ran: hi // 2 < t, and the
    # alarm probability is 0 for any word count below t
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if alarm_probability(p, t, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def time_to_detect_seconds(
    p: float,
    t_suspicion: int,
    target: float = DEFAULT_DETECT_TARGET,
    words_per_s: float = DEFAULT_WORDS_PER_SECOND,
) -> float | None:
    """`time_to_detect` converted to seconds at the given word rate."""
    n = time_to_detect(p, t_suspicion, target)
    if n is None:
        return None
    return n / float(words_per_s)


def flight_false_alarm(
    p: float,
    t_suspicion: int,
    duration_s: float = DEFAULT_FLIGHT_SECONDS,
    words_per_s: float = DEFAULT_WORDS_PER_SECOND,
) -> float:
    """Probability of at least one alarm over a whole flight of normal data."""
    n = round(float(duration_s) * float(words_per_s))
    return alarm_probability(p, t_suspicion, n)
