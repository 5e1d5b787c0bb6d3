"""NumPy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
reference the compiled versions are tested against.
"""
import numpy as np


def nearest_centroid(X, centroids):
    """Index of the closest centroid for each row, with the squared distance.

    Ties resolve to the lowest centroid index.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    n = X.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    best = np.full(n, np.inf)
    for j in range(centroids.shape[0]):
        diff = X - centroids[j]
        dist = np.einsum("ij,ij->i", diff, diff)
        closer = dist < best
        labels[closer] = j
        best[closer] = dist[closer]
    return labels, best


def centroid_sums(X, labels, k):
    """Per-cluster coordinate sums and member counts."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums, counts


def qini_prefix(y_sorted, t_sorted):
    """Qini value after each prefix of an already-ranked population.

    Returns an array of length N + 1 whose entry ``i`` is the Qini value of the
    top ``i`` units. The control term is dropped while no control unit has been
    seen.
    """
    y = np.asarray(y_sorted, dtype=np.float64)
    t = np.asarray(t_sorted, dtype=np.int64)
    treated = t == 1
    y_t = np.concatenate(([0.0], np.cumsum(np.where(treated, y, 0.0))))
    y_c = np.concatenate(([0.0], np.cumsum(np.where(treated, 0.0, y))))
    n_t = np.concatenate(([0], np.cumsum(treated)))
    n_c = np.arange(len(y) + 1) - n_t
    scale = np.divide(n_t, n_c, out=np.zeros(len(y) + 1), where=n_c > 0)
    return y_t - y_c * scale
