"""Isolation forest and local outlier factor, with contamination thresholds.

Both detectors emit continuous anomaly scores (higher = more anomalous) and
binary flags cut at a quantile threshold. Scores are a pure function of
(data, config, seed). The isolation forest scores any dataset against a
fitted ensemble; LOF is transductive by nature but can also score unseen
rows against a fitted reference set for train/test workflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Context, DataError, Dataset

DETECTOR_KINDS = ("iforest", "lof")

_EULER_GAMMA = 0.5772156649015329
# duplicate rows give zero reachability distances; floor before inverting
_MIN_DISTANCE = 1e-12
# cap on distance-matrix cells held at once (~256 MB of float64)
_BLOCK_CELLS = 1 << 25
# difference-buffer tile, kept small enough to stay in cache (~32 MB)
_TILE_CELLS = 1 << 22


@dataclass(frozen=True)
class DetectorConfig:
    """Detector family plus its knobs.

    ``contamination`` is the assumed outlier fraction; it sets the score
    quantile used as the flagging threshold. ``n_trees``/``max_samples``
    apply to the isolation forest ("auto" resolves to min(256, n));
    ``k_neighbors`` applies to LOF.
    """

    kind: str
    contamination: float
    n_trees: int = 100
    max_samples: int | str = "auto"
    k_neighbors: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise DataError(f"unknown detector kind {self.kind!r}")
        if not 0.0 < self.contamination <= 0.5:
            raise DataError(f"contamination must be in (0, 0.5], got {self.contamination}")
        if self.n_trees < 1:
            raise DataError("n_trees must be >= 1")
        if self.max_samples != "auto" and int(self.max_samples) < 2:
            raise DataError("max_samples must be 'auto' or an integer >= 2")
        if self.k_neighbors < 1:
            raise DataError("k_neighbors must be >= 1")


@dataclass(frozen=True)
class DetectionResult:
    """Per-record anomaly scores, binary flags, and the realized threshold.

    flags[i] == 1 exactly when scores[i] > threshold, so the number of flags
    is round(contamination * n) up to ties sitting on the threshold.
    """

    scores: np.ndarray
    flags: np.ndarray
    threshold: float

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64)
        flags = np.array(self.flags, dtype=np.int64)
        scores.setflags(write=False)
        flags.setflags(write=False)
        if scores.shape != flags.shape:
            raise ValueError("scores and flags have different lengths")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "flags", flags)


def _threshold_and_flags(scores: np.ndarray, reference_scores: np.ndarray, contamination: float):
    threshold = float(np.quantile(reference_scores, 1.0 - contamination))
    flags = (scores > threshold).astype(np.int64)
    return threshold, flags


def write_detection_csv(result: DetectionResult, path) -> None:
    """Export a detection result as CSV: row_index, score, flag."""
    lines = ["row_index,score,flag"]
    for i, (score, flag) in enumerate(zip(result.scores, result.flags)):
        lines.append(f"{i},{score!r},{int(flag)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# isolation forest
# ---------------------------------------------------------------------------


def average_path_length(size: float) -> float:
    """Average unsuccessful-search depth of a binary search tree on ``size`` items.

    This is the standard normalizer c(n) for isolation-forest path lengths
    and the depth credit granted to truncated leaves.
    """
    if size <= 1:
        return 0.0
    if size == 2:
        return 1.0
    return 2.0 * (math.log(size - 1.0) + _EULER_GAMMA) - 2.0 * (size - 1.0) / size


class _IsolationTree:
    """Flat-array binary tree; leaves carry depth + c(leaf_size)."""

    __slots__ = ("feature", "threshold", "left", "right", "leaf_value")

    def __init__(self, feature, threshold, left, right, leaf_value):
        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold, dtype=np.float64)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.leaf_value = np.array(leaf_value, dtype=np.float64)
        for name in self.__slots__:
            getattr(self, name).setflags(write=False)

    def path_lengths(self, x: np.ndarray) -> np.ndarray:
        """Path length h(point) for every row of x, batched level by level."""
        n = x.shape[0]
        node = np.zeros(n, dtype=np.int64)
        out = np.zeros(n, dtype=np.float64)
        pending = np.arange(n)
        while pending.size:
            cur = node[pending]
            feat = self.feature[cur]
            at_leaf = feat < 0
            done = pending[at_leaf]
            out[done] = self.leaf_value[cur[at_leaf]]
            pending = pending[~at_leaf]
            if pending.size:
                cur = cur[~at_leaf]
                go_left = x[pending, self.feature[cur]] < self.threshold[cur]
                node[pending] = np.where(go_left, self.left[cur], self.right[cur])
        return out


def _build_tree(sample: np.ndarray, rng: np.random.Generator, height_limit: int) -> _IsolationTree:
    feature, threshold, left, right, leaf_value = [], [], [], [], []

    def grow(rows: np.ndarray, depth: int) -> int:
        node_id = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_value.append(0.0)
        sub = sample[rows]
        if depth >= height_limit or rows.size <= 1:
            leaf_value[node_id] = depth + average_path_length(rows.size)
            return node_id
        lows = sub.min(axis=0)
        highs = sub.max(axis=0)
        splittable = np.flatnonzero(highs > lows)
        if splittable.size == 0:
            # all remaining points identical: nothing can separate them
            leaf_value[node_id] = depth + average_path_length(rows.size)
            return node_id
        f = int(splittable[rng.integers(splittable.size)])
        cut = rng.uniform(lows[f], highs[f])
        mask = sub[:, f] < cut
        if not mask.any() or mask.all():
            leaf_value[node_id] = depth + average_path_length(rows.size)
            return node_id
        feature[node_id] = f
        threshold[node_id] = cut
        left[node_id] = grow(rows[mask], depth + 1)
        right[node_id] = grow(rows[~mask], depth + 1)
        return node_id

    grow(np.arange(sample.shape[0]), 0)
    return _IsolationTree(feature, threshold, left, right, leaf_value)


@dataclass(frozen=True)
class IsolationForestModel:
    """A fitted ensemble plus the training-score threshold for held-out flagging."""

    trees: tuple[_IsolationTree, ...]
    subsample_size: int
    m: int
    config: DetectorConfig
    train_scores: np.ndarray
    threshold: float

    def __post_init__(self):
        scores = np.array(self.train_scores, dtype=np.float64)
        scores.setflags(write=False)
        object.__setattr__(self, "train_scores", scores)

    def score_samples(self, x: np.ndarray) -> np.ndarray:
        """Anomaly score 2^(-E[h(x)] / c(subsample_size)), strictly in (0, 1)."""
        return _forest_scores(self.trees, self.subsample_size, x)


def _forest_scores(trees, subsample_size: int, x: np.ndarray) -> np.ndarray:
    depths = np.zeros(x.shape[0], dtype=np.float64)
    for tree in trees:
        depths += tree.path_lengths(x)
    depths /= len(trees)
    return np.exp2(-depths / average_path_length(subsample_size))


def iforest_fit(train: Dataset, cfg: DetectorConfig) -> IsolationForestModel:
    """Build an isolation forest on the training rows.

    Each tree grows on a uniform subsample of size min(max_samples, n)
    ("auto" = 256), splitting on a uniformly random attribute at a uniform
    random cut between that attribute's subsample min and max, down to
    height ceil(log2(subsample_size)) or single-point (or all-duplicate)
    nodes. The (1 - contamination) quantile of the training scores is stored
    as the flagging threshold for held-out data. Deterministic per seed.
    """
    if cfg.kind != "iforest":
        raise DataError(f"config is for {cfg.kind!r}, not iforest")
    n = train.n
    if n < 2:
        raise DataError("isolation forest needs at least 2 rows")
    resolved = 256 if cfg.max_samples == "auto" else int(cfg.max_samples)
    psi = min(resolved, n)
    height_limit = max(1, math.ceil(math.log2(psi)))
    trees = []
    for seq in np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees):
        rng = np.random.default_rng(seq)
        rows = rng.choice(n, size=psi, replace=False)
        trees.append(_build_tree(train.values[rows], rng, height_limit))
    train_scores = _forest_scores(trees, psi, train.values)
    threshold = float(np.quantile(train_scores, 1.0 - cfg.contamination))
    return IsolationForestModel(
        trees=tuple(trees),
        subsample_size=psi,
        m=train.m,
        config=cfg,
        train_scores=train_scores,
        threshold=threshold,
    )


def iforest_score(
    forest: IsolationForestModel, d: Dataset, transductive: bool = False
) -> DetectionResult:
    """Score a dataset against a fitted forest and flag outliers.

    By default the threshold is the (1 - contamination) quantile of the
    training scores (held-out flagging); in transductive mode it is taken
    from the scored set itself. Flags use strict ``score > threshold``.
    """
    if d.m != forest.m:
        raise DataError(f"dataset has m={d.m}, forest was fit on m={forest.m}")
    scores = forest.score_samples(d.values)
    if transductive:
        threshold, flags = _threshold_and_flags(scores, scores, forest.config.contamination)
    else:
        threshold = forest.threshold
        flags = (scores > threshold).astype(np.int64)
    return DetectionResult(scores=scores, flags=flags, threshold=threshold)


# ---------------------------------------------------------------------------
# local outlier factor
# ---------------------------------------------------------------------------


def _distance_block(a: np.ndarray, b: np.ndarray, metric: str) -> np.ndarray:
    """Exact pairwise distances between two row sets.

    Differences are taken pair by pair rather than through the norm-expansion
    shortcut, which loses precision on near-duplicate rows. Work is tiled
    (row blocks by feature slices) so the difference buffer stays cache-sized.
    """
    if metric not in ("euclidean", "manhattan"):
        raise DataError(f"unknown distance metric {metric!r}")
    n_a, n_b, m = a.shape[0], b.shape[0], a.shape[1]
    step = min(32, m)
    rows_per = max(1, _TILE_CELLS // max(n_b * step, 1))
    out = np.zeros((n_a, n_b))
    buf = np.empty((min(rows_per, n_a), n_b, step))
    for r0 in range(0, n_a, rows_per):
        r1 = min(r0 + rows_per, n_a)
        acc = out[r0:r1]
        for f0 in range(0, m, step):
            f1 = min(f0 + step, m)
            diff = buf[: r1 - r0, :, : f1 - f0]
            np.subtract(a[r0:r1, None, f0:f1], b[None, :, f0:f1], out=diff)
            if metric == "euclidean":
                acc += np.einsum("ijk,ijk->ij", diff, diff)
            else:
                np.abs(diff, out=diff)
                acc += diff.sum(axis=2)
    if metric == "euclidean":
        np.sqrt(out, out=out)
    return out


def _neighborhoods(query: np.ndarray, ref: np.ndarray, k: int, metric: str, exclude_self: bool):
    """k-distances and padded neighbor index/distance tables for every query row.

    The neighborhood of a row is every reference point within its k-distance
    (distance ties included), never the row itself. Tables are padded to the
    widest neighborhood: indices with -1, distances with +inf. Distances are
    computed once, in row blocks, to bound memory.
    """
    n_q, n_ref = query.shape[0], ref.shape[0]
    block = max(1, _BLOCK_CELLS // max(n_ref, 1))
    kdist = np.empty(n_q)
    chunk_idx, chunk_dist, chunk_counts = [], [], []
    for start in range(0, n_q, block):
        stop = min(start + block, n_q)
        d = _distance_block(query[start:stop], ref, metric)
        if exclude_self:
            d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        kd = np.partition(d, k - 1, axis=1)[:, k - 1]
        kdist[start:stop] = kd
        mask = d <= kd[:, None]
        counts = mask.sum(axis=1)
        rows, cols = np.nonzero(mask)
        first = np.concatenate(([0], np.cumsum(counts)[:-1]))
        position = np.arange(rows.size) - first[rows]
        idx = np.full((stop - start, int(counts.max())), -1, dtype=np.int64)
        dist = np.full(idx.shape, np.inf)
        idx[rows, position] = cols
        dist[rows, position] = d[rows, cols]
        chunk_idx.append(idx)
        chunk_dist.append(dist)
        chunk_counts.append(counts)
    width = max(c.shape[1] for c in chunk_idx)
    idx = np.full((n_q, width), -1, dtype=np.int64)
    dist = np.full((n_q, width), np.inf)
    row = 0
    for ci, cd in zip(chunk_idx, chunk_dist):
        idx[row : row + ci.shape[0], : ci.shape[1]] = ci
        dist[row : row + ci.shape[0], : ci.shape[1]] = cd
        row += ci.shape[0]
    return kdist, idx, dist, np.concatenate(chunk_counts)


def _local_reachability_density(dist, idx, counts, kdist_ref):
    """1 / mean reachability distance over each row's neighbors.

    reach(p, o) = max(kdist(o), d(p, o)); the mean is floored so duplicate
    rows (all-zero distances) yield a large finite density instead of a
    division by zero.
    """
    valid = idx >= 0
    reach = np.maximum(dist, kdist_ref[np.where(valid, idx, 0)])
    mean_reach = np.where(valid, reach, 0.0).sum(axis=1) / counts
    return 1.0 / np.maximum(mean_reach, _MIN_DISTANCE)


def _mean_neighbor_lrd(idx, counts, lrd_ref):
    valid = idx >= 0
    return np.where(valid, lrd_ref[np.where(valid, idx, 0)], 0.0).sum(axis=1) / counts


def _lof_reference_stats(x: np.ndarray, k: int, metric: str):
    """k-distances, local reachability densities, and LOF values of a point set.

    Exact k-nearest-neighbor search by full pairwise distance; LOF(p) is the
    mean density of p's neighbors over p's own density.
    """
    n = x.shape[0]
    if n <= k:
        raise DataError(f"LOF needs more rows than neighbors: n={n}, k={k}")
    kdist, idx, dist, counts = _neighborhoods(x, x, k, metric, exclude_self=True)
    lrd = _local_reachability_density(dist, idx, counts, kdist)
    lof = _mean_neighbor_lrd(idx, counts, lrd) / lrd
    return kdist, lrd, lof


def _lof_query_scores(
    query: np.ndarray,
    reference: np.ndarray,
    kdist_ref: np.ndarray,
    lrd_ref: np.ndarray,
    k: int,
    metric: str,
) -> np.ndarray:
    """LOF of new points with respect to a fitted reference set."""
    kd_q, idx, dist, counts = _neighborhoods(query, reference, k, metric, exclude_self=False)
    lrd_q = _local_reachability_density(dist, idx, counts, kdist_ref)
    return _mean_neighbor_lrd(idx, counts, lrd_ref) / lrd_q


@dataclass(frozen=True)
class LofModel:
    """Reference-set LOF statistics for scoring unseen rows."""

    reference: np.ndarray
    kdist: np.ndarray
    lrd: np.ndarray
    train_scores: np.ndarray
    threshold: float
    config: DetectorConfig
    metric: str

    def __post_init__(self):
        for field in ("reference", "kdist", "lrd", "train_scores"):
            arr = np.array(getattr(self, field), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)


def _lof_metric(context: Context | None) -> str:
    return context.dist if context is not None else "euclidean"


def lof_fit_predict(
    d: Dataset, cfg: DetectorConfig, context: Context | None = None
) -> DetectionResult:
    """Transductive LOF: score and flag the rows of one dataset.

    Scores are LOF values (about 1 for inliers, well above 1 for outliers);
    the threshold is the (1 - contamination) quantile of those same scores.
    """
    if cfg.kind != "lof":
        raise DataError(f"config is for {cfg.kind!r}, not lof")
    _, _, lof = _lof_reference_stats(d.values, cfg.k_neighbors, _lof_metric(context))
    threshold, flags = _threshold_and_flags(lof, lof, cfg.contamination)
    return DetectionResult(scores=lof, flags=flags, threshold=threshold)


def lof_fit(
    train: Dataset, cfg: DetectorConfig, context: Context | None = None
) -> LofModel:
    """Compute reference LOF statistics on training rows for held-out scoring.

    The stored threshold is the (1 - contamination) quantile of the training
    LOF values.
    """
    if cfg.kind != "lof":
        raise DataError(f"config is for {cfg.kind!r}, not lof")
    metric = _lof_metric(context)
    kdist, lrd, lof = _lof_reference_stats(train.values, cfg.k_neighbors, metric)
    threshold = float(np.quantile(lof, 1.0 - cfg.contamination))
    return LofModel(
        reference=train.values,
        kdist=kdist,
        lrd=lrd,
        train_scores=lof,
        threshold=threshold,
        config=cfg,
        metric=metric,
    )


def lof_score(model: LofModel, d: Dataset) -> DetectionResult:
    """Score unseen rows against a fitted LOF reference, train-quantile threshold."""
    if d.m != model.reference.shape[1]:
        raise DataError(
            f"dataset has m={d.m}, reference was fit on m={model.reference.shape[1]}"
        )
    scores = _lof_query_scores(
        d.values, model.reference, model.kdist, model.lrd,
        model.config.k_neighbors, model.metric,
    )
    flags = (scores > model.threshold).astype(np.int64)
    return DetectionResult(scores=scores, flags=flags, threshold=model.threshold)
