"""texture_global
Global texture analysis: persistence-weighted kernel densities of a
diagram quadrant, pairwise l2 distances and UPGMA trees.

kde(points, bounds, resolution, sigma) -> DensityGrid
shared_bounds(point_sets, sigma) -> Bounds
l2_distance(a, b) -> float
distance_matrix(grids) -> matrix
upgma(dist, labels) -> Dendrogram
cut(tree, height) -> [[label]]
to_newick(tree) -> str
"""

import itertools
import math
from typing import List, Sequence, Tuple

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from . import builtin, lang, system


# Densities


def kde(points: lang.WeightedPoints, bounds: lang.Bounds,
        resolution: lang.Resolution = (100, 100),
        sigma: float = builtin.KDE_SIGMA,
        normalize: bool = False) -> lang.DensityGrid:
    """Weighted Gaussian kernel density at every cell centre:
    sum_i w_i exp(-|u - y_i|^2 / (2 sigma^2)) / (2 pi sigma^2).
    With normalize, weights are scaled to sum to 1.
    """
    if not sigma > 0:
        raise builtin.ValidationError(f"sigma must be positive, got {sigma}")
    nb, nd = resolution
    if nb < 2 or nd < 2:
        raise builtin.ValidationError(f"resolution must be at least 2x2, got {resolution}")
    if len(points) == 0:
        raise builtin.EmptyPointSet("no points to estimate a density from")
    if points.d != 2:
        raise builtin.ValidationError(f"density points must be 2D, got {points.d}D")
    bs, ds = lang.cellCentres(bounds, resolution)
    w = points.w / points.w.sum() if normalize else points.w
    # The kernel separates over birth and death.
    eb = np.exp(-(bs[:, None] - points.y[None, :, 0])**2 / (2 * sigma**2))
    ed = np.exp(-(ds[:, None] - points.y[None, :, 1])**2 / (2 * sigma**2))
    values = (eb * w) @ ed.T / (2 * math.pi * sigma**2)
    return lang.DensityGrid(bounds, resolution, values)


def shared_bounds(point_sets: Sequence[lang.WeightedPoints],
                  sigma: float = builtin.KDE_SIGMA) -> lang.Bounds:
    """Bounding box of every point set, expanded by 3 sigma."""
    nonempty = [p.y for p in point_sets if len(p)]
    if not nonempty:
        raise builtin.EmptyPointSet("every point set is empty")
    y = np.vstack(nonempty)
    pad = 3 * sigma
    return (float(y[:, 0].min() - pad), float(y[:, 0].max() + pad),
            float(y[:, 1].min() - pad), float(y[:, 1].max() + pad))


# Distances


def l2_distance(a: lang.DensityGrid, b: lang.DensityGrid) -> float:
    """sqrt(sum (a - b)^2 * cell area) on a shared grid."""
    if a.bounds != b.bounds or a.resolution != b.resolution:
        raise builtin.GridMismatch(
            f"grids differ: {a.bounds} {a.resolution} vs {b.bounds} {b.resolution}")
    return float(math.sqrt(np.sum((a.values - b.values)**2) * a.cellArea))


def distance_matrix(grids: Sequence[lang.DensityGrid]) -> np.ndarray:
    """Symmetric matrix of pairwise l2 distances."""
    n = len(grids)
    pairs = list(itertools.combinations(range(n), 2))
    values = system.parallelMap(lambda ij: l2_distance(grids[ij[0]], grids[ij[1]]), pairs)
    dist = np.zeros((n, n))
    for (i, j), value in zip(pairs, values):
        dist[i, j] = dist[j, i] = value
    return dist


# Trees


def expectDistances(dist: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise builtin.NotSymmetric(f"distance matrix must be square, got {dist.shape}")
    if len(labels) != dist.shape[0]:
        raise builtin.ValidationError(
            f"{len(labels)} labels for {dist.shape[0]} rows")
    if not np.array_equal(dist, dist.T) or np.any(np.diag(dist) != 0):
        raise builtin.NotSymmetric("distance matrix must be symmetric with zero diagonal")
    if np.any(dist < 0):
        raise builtin.NegativeDistance("distance matrix has negative entries")
    return dist


def upgma(dist, labels: Sequence[str]) -> lang.Dendrogram:
    """Average-linkage clustering; merge heights are half the merge
    distance.
    """
    dist = expectDistances(dist, labels)
    n = len(labels)
    if n < 2:
        return lang.Dendrogram((), tuple(labels))
    matrix = linkage(squareform(dist, checks=False), method='average')
    merges = tuple(
        lang.Merge(int(left), int(right), float(d) / 2.0, n + k, int(size))
        for k, (left, right, d, size) in enumerate(matrix)
    )
    return lang.Dendrogram(merges, tuple(labels))


def cut(tree: lang.Dendrogram, height: float) -> List[List[str]]:
    """Clusters left after removing every merge above height, ordered by
    their first leaf.
    """
    if not height >= 0:
        raise builtin.ValidationError(f"cut height must be nonnegative, got {height}")
    n = len(tree.labels)
    if n < 2:
        return [list(tree.labels)]
    flat = fcluster(tree.linkageMatrix(), t=2.0 * height, criterion='distance')
    clusters: dict = {}
    for label, cluster in zip(tree.labels, flat):
        clusters.setdefault(int(cluster), []).append(label)
    return list(clusters.values())


def newickLabel(label: str) -> str:
    if any(c in label for c in " ():,;[]'"):
        return "'" + label.replace("'", "''") + "'"
    return label


def to_newick(tree: lang.Dendrogram) -> str:
    """Newick text with branch lengths (parent height - child height)."""
    n = len(tree.labels)
    if n == 0:
        return ';'
    if n == 1:
        return newickLabel(tree.labels[0]) + ';'
    heights = [0.0] * n + [m.height for m in tree.merges]
    children = {m.node: (m.left, m.right) for m in tree.merges}

    def render(node: int) -> str:
        if node < n:
            return newickLabel(tree.labels[node])
        parts = []
        for child in children[node]:
            length = heights[node] - heights[child]
            parts.append(f"{render(child)}:{length:.6g}")
        return '(' + ','.join(parts) + ')'

    return render(tree.merges[-1].node) + ';'


def cophenetic(tree: lang.Dendrogram) -> np.ndarray:
    """Matrix of merge heights at which each pair of leaves first joins."""
    n = len(tree.labels)
    members = {i: [i] for i in range(n)}
    result = np.zeros((n, n))
    for m in tree.merges:
        left, right = members.pop(m.left), members.pop(m.right)
        for i in left:
            for j in right:
                result[i, j] = result[j, i] = m.height
        members[m.node] = left + right
    return result


def merge_order(tree: lang.Dendrogram) -> List[Tuple[frozenset, float]]:
    """Leaf sets formed by each merge, with their heights."""
    n = len(tree.labels)
    members = {i: frozenset([tree.labels[i]]) for i in range(n)}
    order = []
    for m in tree.merges:
        joined = members[m.left] | members[m.right]
        members[m.node] = joined
        order.append((joined, m.height))
    return order
