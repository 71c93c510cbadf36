"""Local outlier factor novelty detection.

Scores are density ratios: a point deep inside the training density gets a
score near 1, an isolated point gets a score far above 1. Fitting
standardises every dimension (raw voltages and mixed-unit statistics would
otherwise dominate the Euclidean metric), computes each training point's
k-distance, local reachability density and outlier factor, and places the
decision threshold at the (1 - contamination) quantile of the training
scores. Queries are scored novelty-style: their neighbours are drawn from
the training set only.

Neighbourhoods include every point tied at exactly the k-distance. When a
point's reachability distances all collapse to zero (duplicated training
points), its density is replaced by a large sentinel shared by fit and
query paths, so clusters of duplicates score 1 rather than dividing by
zero. Distance computations run in fixed-size chunks; memory stays bounded
for training sets of tens of thousands of points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

DEFAULT_K = 20
DEFAULT_CONTAMINATION = 0.10

# Stand-in density for duplicate collapse; ratios of sentinels are exactly 1.
_DUPLICATE_LRD = 1.0e12

# Cap on distance-matrix entries held at once.
_CHUNK_ELEMENTS = 2**24


@dataclass
class LofModel:
    """Fitted per-segment-type novelty detector."""

    train: np.ndarray  # standardized training matrix, (n, d)
    k: int
    kdist: np.ndarray  # per-point k-distance, (n,)
    lrd: np.ndarray  # per-point local reachability density, (n,)
    threshold: float  # scores strictly above this are anomalies
    mean: np.ndarray  # scaler offset, (d,)
    scale: np.ndarray  # scaler divisor, (d,)
    train_scores: np.ndarray  # training outlier factors, (n,)

    @property
    def dim(self) -> int:
        return self.train.shape[1]


def _chunk_rows(n_cols: int) -> int:
    return max(1, _CHUNK_ELEMENTS // max(1, n_cols))


def _neighbour_cache(dist, kd):
    """Padded neighbour candidates of each row: (indices, distances, valid).

    Neighbours are every column with distance <= the row's k-distance, ties
    included; rows with fewer neighbours than the pad width carry trailing
    invalid entries.
    """
    width = int((dist <= kd[:, None]).sum(axis=1).max())
    cand = np.argpartition(dist, width - 1, axis=1)[:, :width]
    cand_dist = np.take_along_axis(dist, cand, axis=1)
    return cand, cand_dist, cand_dist <= kd[:, None]


def _lrd_from_cache(nbr_dist, nbr_ok, nbr_kdist):
    """Local reachability density from a neighbour cache."""
    counts = nbr_ok.sum(axis=1)
    reach = np.maximum(nbr_dist, nbr_kdist)
    mean_reach = np.where(nbr_ok, reach, 0.0).sum(axis=1) / counts
    lrd = np.empty(len(mean_reach))
    collapsed = mean_reach == 0.0
    lrd[collapsed] = _DUPLICATE_LRD
    lrd[~collapsed] = 1.0 / mean_reach[~collapsed]
    return lrd, counts


def fit(points, k: int = DEFAULT_K, contamination: float = DEFAULT_CONTAMINATION) -> LofModel:
    """Fit a novelty model on training points (rows) of equal dimension."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"training points must be a 2-d array, got shape {x.shape}")
    n = x.shape[0]
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < k + 2:
        raise ValueError(f"need at least k + 2 = {k + 2} training points, got {n}")
    if not 0.0 < contamination < 1.0:
        raise ValueError(f"contamination must be in (0, 1), got {contamination}")

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    scale = np.where(std > 0.0, std, 1.0)
    z = (x - mean) / scale

    chunk = _chunk_rows(n)

    # one distance sweep: k-distances plus a padded neighbour cache (all
    # points tied at the k-distance included, self excluded via inf); the
    # cache makes the density and score stages cheap O(n*k) gathers
    kdist = np.empty(n)
    parts = []
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        dist = cdist(z[lo:hi], z)
        dist[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        kd = np.partition(dist, k - 1, axis=1)[:, k - 1]
        kdist[lo:hi] = kd
        parts.append(_neighbour_cache(dist, kd))
    width = max(cand.shape[1] for cand, _, _ in parts)
    nbr_idx = np.zeros((n, width), dtype=np.int64)
    nbr_dist = np.full((n, width), np.inf)
    nbr_ok = np.zeros((n, width), dtype=bool)
    row = 0
    for cand, cand_dist, ok in parts:
        nbr_idx[row : row + len(cand), : cand.shape[1]] = cand
        nbr_dist[row : row + len(cand), : cand.shape[1]] = cand_dist
        nbr_ok[row : row + len(ok), : ok.shape[1]] = ok
        row += len(ok)

    lrd, counts = _lrd_from_cache(nbr_dist, nbr_ok, kdist[nbr_idx])
    neighbour_lrd = np.where(nbr_ok, lrd[nbr_idx], 0.0).sum(axis=1) / counts
    scores = neighbour_lrd / lrd

    threshold = float(np.quantile(scores, 1.0 - contamination))
    return LofModel(
        train=z,
        k=k,
        kdist=kdist,
        lrd=lrd,
        threshold=threshold,
        mean=mean,
        scale=scale,
        train_scores=scores,
    )


def score(model: LofModel, queries) -> np.ndarray:
    """Novelty scores of query rows against the training set."""
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if q.shape[1] != model.dim:
        raise ValueError(f"query dimension {q.shape[1]} != model dimension {model.dim}")
    z = (q - model.mean) / model.scale
    m = len(z)
    out = np.empty(m)
    chunk = _chunk_rows(len(model.train))
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        dist = cdist(z[lo:hi], model.train)
        kd = np.partition(dist, model.k - 1, axis=1)[:, model.k - 1]
        nbr_idx, nbr_dist, nbr_ok = _neighbour_cache(dist, kd)
        lrd_q, counts = _lrd_from_cache(nbr_dist, nbr_ok, model.kdist[nbr_idx])
        neighbour_lrd = np.where(nbr_ok, model.lrd[nbr_idx], 0.0).sum(axis=1) / counts
        out[lo:hi] = neighbour_lrd / lrd_q
    return out


def score_one(model: LofModel, query) -> float:
    return float(score(model, np.asarray(query, dtype=np.float64)[None, :])[0])


def classify(model: LofModel, queries) -> np.ndarray:
    """Boolean anomaly flags: score strictly above the threshold."""
    return score(model, queries) > model.threshold


def classify_one(model: LofModel, query) -> bool:
    return bool(score_one(model, query) > model.threshold)


def model_to_dict(model: LofModel) -> dict:
    return {
        "k": model.k,
        "threshold": model.threshold,
        "scaler": {"mean": model.mean.tolist(), "scale": model.scale.tolist()},
        "train": model.train.tolist(),
        "kdist": model.kdist.tolist(),
        "lrd": model.lrd.tolist(),
        "train_scores": model.train_scores.tolist(),
    }


def model_from_dict(data: dict) -> LofModel:
    try:
        return LofModel(
            train=np.asarray(data["train"], dtype=np.float64),
            k=int(data["k"]),
            kdist=np.asarray(data["kdist"], dtype=np.float64),
            lrd=np.asarray(data["lrd"], dtype=np.float64),
            threshold=float(data["threshold"]),
            mean=np.asarray(data["scaler"]["mean"], dtype=np.float64),
            scale=np.asarray(data["scaler"]["scale"], dtype=np.float64),
            train_scores=np.asarray(data["train_scores"], dtype=np.float64),
        )
    except KeyError as exc:
        raise ValueError(f"model record missing key {exc}") from exc


def save_model(model: LofModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)


def load_model(path) -> LofModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
