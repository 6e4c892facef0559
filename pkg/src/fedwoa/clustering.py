"""Grouping prosumer nodes by the statistical fingerprint of their raw data.

Each node is summarized by seven numbers (datapoint count, load min/max/
mean/std, first and last timestamp); nodes are clustered with K-means on
the z-scored feature vectors and a 2-D PCA projection is emitted so the
clusters can be plotted. Raw timestamps enter as minutes since epoch, not
the display form, so distances are uniform in time.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .data import EnergySeries
from .errors import ConfigError, ValidationError

FEATURE_NAMES = (
    "length",
    "min_load",
    "max_load",
    "mean_load",
    "std_load",
    "min_time",
    "max_time",
)


@dataclass(frozen=True)
class NodeFeatures:
    node_id: str
    vector: np.ndarray  # (7,) in FEATURE_NAMES order


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    members: dict[int, tuple[str, ...]]  # cluster_id -> sorted node ids
    centroids: np.ndarray  # (k, 7) in standardized feature space
    wcss_history: tuple[float, ...]  # within-cluster sum of squares per Lloyd pass
    n_iter: int

    def cluster_of(self, node_id: str) -> int:
        for cid, ids in self.members.items():
            if node_id in ids:
                return cid
        raise KeyError(node_id)


def extract_features(series: EnergySeries) -> NodeFeatures:
    """Summary statistics over the raw (pre-normalization) loads."""
    if len(series) == 0:
        raise ValidationError(f"pod {series.pod_id}: empty series")
    loads = series.loads
    vector = np.array(
        [
            float(len(series)),
            float(loads.min()),
            float(loads.max()),
            float(loads.mean()),
            float(loads.std()),  # population std
            float(series.timestamps[0]),
            float(series.timestamps[-1]),
        ]
    )
    return NodeFeatures(node_id=series.pod_id, vector=vector)


def standardize(matrix: np.ndarray) -> np.ndarray:
    """Per-column z-score; constant columns become all zeros."""
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    return (matrix - mean) / safe


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted draws after a uniform first pick."""
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    sq_dist = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = sq_dist.sum()
        if total > 0:
            idx = rng.choice(n, p=sq_dist / total)
        else:
            idx = rng.integers(n)
        centroids[j] = points[idx]
        sq_dist = np.minimum(sq_dist, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _repair_empty(labels: np.ndarray, dists: np.ndarray, k: int) -> np.ndarray:
    """Give each empty cluster the point farthest from its current centroid."""
    for cid in range(k):
        if np.any(labels == cid):
            continue
        sizes = np.bincount(labels, minlength=k)
        own = dists[np.arange(len(labels)), labels].astype(float)
        own[sizes[labels] <= 1] = -np.inf  # never empty another cluster
        labels[int(np.argmax(own))] = cid
    return labels


def kmeans(
    features: list[NodeFeatures], k: int, seed: int = 0, max_iter: int = 100
) -> ClusterAssignment:
    """Lloyd's algorithm on standardized features, deterministic under seed.

    Converges when assignments stop changing. An empty cluster is repaired
    by stealing the point currently farthest from its own centroid.
    """
    if k < 1:
        raise ConfigError("k must be >= 1", field="clustering.k")
    if k > len(features):
        raise ConfigError(
            f"k={k} exceeds the number of nodes ({len(features)})", field="clustering.k"
        )
    node_ids = [f.node_id for f in features]
    points = standardize(np.vstack([f.vector for f in features]))
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(points, k, rng)

    labels = np.full(len(points), -1)
    wcss_history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dists = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = _repair_empty(dists.argmin(axis=1), dists, k)
        wcss_history.append(
            float(((points - centroids[new_labels]) ** 2).sum())
        )
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for cid in range(k):
            centroids[cid] = points[labels == cid].mean(axis=0)

    members = {
        cid: tuple(sorted(node_ids[i] for i in np.flatnonzero(labels == cid)))
        for cid in range(k)
    }
    return ClusterAssignment(
        k=k,
        members=members,
        centroids=centroids,
        wcss_history=tuple(wcss_history),
        n_iter=n_iter,
    )


def pca_components(features: list[NodeFeatures]) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose the standardized covariance; returns (eigenvalues, components).

    Eigenvalues are in descending order; components are the matching unit
    eigenvectors as columns, each flipped so its largest-magnitude loading
    is positive.
    """
    if len(features) < 2:
        raise ValidationError("PCA needs at least 2 nodes")
    points = standardize(np.vstack([f.vector for f in features]))
    cov = points.T @ points / (len(points) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    for j in range(eigvecs.shape[1]):
        lead = np.argmax(np.abs(eigvecs[:, j]))
        if eigvecs[lead, j] < 0:
            eigvecs[:, j] = -eigvecs[:, j]
    return eigvals, eigvecs


def pca_project(features: list[NodeFeatures]) -> list[tuple[str, float, float]]:
    """Project standardized feature vectors onto the top-2 principal axes."""
    _, components = pca_components(features)
    points = standardize(np.vstack([f.vector for f in features]))
    proj = points @ components[:, :2]
    return [
        (f.node_id, float(proj[i, 0]), float(proj[i, 1])) for i, f in enumerate(features)
    ]


def write_pca_csv(
    projection: list[tuple[str, float, float]], assignment: ClusterAssignment, path
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "pc1", "pc2", "cluster_id"])
        for node_id, x, y in projection:
            writer.writerow([node_id, repr(x), repr(y), assignment.cluster_of(node_id)])
