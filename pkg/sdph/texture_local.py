"""texture_local
Local texture analysis: sampling ellipsoids, 15 diagram features per
ellipsoid, normalisation, clustering and texture composition.

sample_grid(dims, spacing, r_xy, rz_fraction) -> [Ellipsoid]
features15(local) -> FeatureVector
local_features(diagram, balls) -> (centres, matrix)
normalize(features) -> matrix
kmeans(features, k, seed) -> (labels, centroids, inertia)
cluster_gmm(features, k, seed) -> labels
cluster_clara(features, k, n_subsamples, subsample_size, seed) -> (labels, medoids)
composition(labels) -> TextureComposition
pca2(compositions) -> (embedding, components, explained_variance)
"""

from fractions import Fraction
from itertools import combinations
import math
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans
from sklearn.decomposition import PCA
from sklearn.preprocessing import StandardScaler

from . import builtin, diagram as dg, lang, mixture, system


# Sampling grid


def sample_grid(dims: lang.Dims, spacing: int = builtin.GRID_SPACING,
                r_xy: float = builtin.BALL_R_XY,
                rz_fraction: float = builtin.BALL_RZ_FRACTION) -> List[lang.Ellipsoid]:
    """Ellipsoids centred on the lattice i * spacing inside dims, in
    (z, y, x) ascending order.
    """
    if len(dims) != 3 or any(n < 1 for n in dims):
        raise builtin.ValidationError(f"dims must be 3 positive counts, got {dims}")
    if spacing < 1:
        raise builtin.ValidationError(f"grid spacing must be >= 1, got {spacing}")
    nx, ny, nz = dims
    r_z = rz_fraction * nz
    return [
        lang.Ellipsoid((x, y, z), r_xy, r_z)
        for z in range(0, nz, spacing)
        for y in range(0, ny, spacing)
        for x in range(0, nx, spacing)
    ]


# Features


def moments(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and population std; (0, 0) when empty."""
    if not values:
        return 0.0, 0.0
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())


def ratiosOf(points: Sequence[lang.QuadrantPoint], kind: str) -> List[float]:
    ratios = []
    for qp in points:
        try:
            ratios.append(dg.aspect_ratio(qp, kind))
        except builtin.DegenerateDenominator:
            continue
    return ratios


def features15(local: lang.Diagram) -> lang.FeatureVector:
    """The 15 texture features of a (persistence-filtered) local diagram.

    Sizes pool every quadrant they appear in:
    r0 from PH0SW and PH0NW births;
    r1 from PH0SW deaths, PH1SW births and PH1NW births;
    g2 from PH1NW deaths, PH1NE deaths and PH2NE births;
    g3 from PH2NE deaths.
    The last feature is sqrt(Var r1 + Var g2) over the PH1NW pairs.
    Empty categories give 0.
    """
    byQuadrant: Dict[str, List[lang.QuadrantPoint]] = {q: [] for q in builtin.QUADRANTS}
    for qp in dg.quadrant_points(local):
        byQuadrant[qp.quadrant].append(qp)

    def sizes(sources: Sequence[Tuple[str, int]]) -> List[float]:
        return [qp.sizes[i] for quadrant, i in sources for qp in byQuadrant[quadrant]]

    r0 = sizes([('PH0SW', 0), ('PH0NW', 0)])
    r1 = sizes([('PH0SW', 1), ('PH1SW', 0), ('PH1NW', 0)])
    g2 = sizes([('PH1NW', 1), ('PH1NE', 1), ('PH2NE', 0)])
    g3 = sizes([('PH2NE', 1)])

    values: List[float] = []
    for category in (r0, r1, g2, g3):
        values.extend(moments(category))
    for kind, quadrant in dg.RATIO_QUADRANT.items():
        values.extend(moments(ratiosOf(byQuadrant[quadrant], kind)))

    loops = byQuadrant['PH1NW']
    if loops:
        pairs = np.array([qp.sizes for qp in loops], dtype=np.float64)
        values.append(float(math.sqrt(pairs[:, 0].var() + pairs[:, 1].var())))
    else:
        values.append(0.0)
    return lang.FeatureVector(tuple(values))


def local_features(diagram: lang.Diagram,
                   balls: Sequence[lang.Ellipsoid]) -> Tuple[np.ndarray, np.ndarray]:
    """Ball-restricted features for every ellipsoid.
    Returns centres (m, 3) and the (m, 15) feature matrix, in ball order.
    """
    def run(ball: lang.Ellipsoid) -> np.ndarray:
        return features15(dg.restrict_to_ball(diagram, ball)).asArray()

    rows = system.parallelMap(run, balls)
    centres = np.array([ball.center for ball in balls], dtype=np.int64).reshape(-1, 3)
    matrix = np.array(rows, dtype=np.float64).reshape(-1, len(builtin.FEATURE_NAMES))
    return centres, matrix


# Normalisation and clustering


def asMatrix(features) -> np.ndarray:
    matrix = np.asarray(features, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2:
        raise builtin.ValidationError("features must be a matrix")
    return matrix


def normalize(features) -> np.ndarray:
    """Per-column z-score; constant columns become 0."""
    matrix = asMatrix(features)
    if matrix.shape[0] < 2:
        raise builtin.TooFewRows(f"need at least 2 rows, got {matrix.shape[0]}")
    return StandardScaler().fit_transform(matrix)


def expectK(k: int, rows: int) -> None:
    if not (1 <= k <= rows):
        raise builtin.InvalidK(f"k must lie in 1..{rows}, got {k}")


def canonicalLabels(labels: np.ndarray, k: int = 0) -> Tuple[np.ndarray, List[int]]:
    """Renumbers clusters by first occurrence; unused clusters go last.
    Returns the new labels and the old label of each new cluster.
    """
    order: List[int] = []
    for label in labels:
        if int(label) not in order:
            order.append(int(label))
    order += [c for c in range(k) if c not in order]
    mapping = {old: new for new, old in enumerate(order)}
    return np.array([mapping[int(label)] for label in labels], dtype=np.int64), order


def kmeans(features, k: int, seed: int,
           max_iter: int = builtin.KMEANS_MAX_ITER,
           tol: float = builtin.KMEANS_TOL,
           init: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray, float]:
    """Lloyd's k-means from a k-means++ start (or the given centroids).
    Labels are numbered by first occurrence.
    """
    matrix = asMatrix(features)
    expectK(k, matrix.shape[0])
    model = KMeans(
        n_clusters=k,
        init='k-means++' if init is None else np.asarray(init, dtype=np.float64),
        n_init=1,
        max_iter=max_iter,
        tol=tol,
        random_state=seed,
        algorithm='lloyd',
    ).fit(matrix)
    labels, order = canonicalLabels(model.labels_, k)
    centroids = model.cluster_centers_[order]
    return labels, centroids, float(model.inertia_)


def cluster_gmm(features, k: int, seed: int) -> np.ndarray:
    """Assigns every row to its most probable component of an
    unweighted Gaussian mixture.
    """
    matrix = asMatrix(features)
    expectK(k, matrix.shape[0])
    points = lang.WeightedPoints.unweighted(matrix)
    model = mixture.em_fit(points, k, seed)
    resp = mixture.e_step(model, points)
    labels, _ = canonicalLabels(np.argmax(resp.matrix, axis=1))
    return labels


def medoidCost(distances: np.ndarray, medoids: Sequence[int]) -> float:
    return float(distances[:, list(medoids)].min(axis=1).sum())


def pam(distances: np.ndarray, k: int) -> List[int]:
    """k-medoids of a dissimilarity matrix.
    Small problems are solved exactly by enumeration; larger ones with
    BUILD followed by SWAP.
    """
    n = distances.shape[0]
    if math.comb(n, k) <= builtin.EXHAUSTIVE_PAM_LIMIT:
        best = min(combinations(range(n), k),
                   key=lambda medoids: medoidCost(distances, medoids))
        return list(best)

    # BUILD
    medoids = [int(np.argmin(distances.sum(axis=1)))]
    while len(medoids) < k:
        nearest = distances[:, medoids].min(axis=1)
        gains = [
            -math.inf if i in medoids
            else float(np.maximum(nearest - distances[:, i], 0).sum())
            for i in range(n)
        ]
        medoids.append(int(np.argmax(gains)))

    # SWAP
    cost = medoidCost(distances, medoids)
    improved = True
    while improved:
        improved = False
        for slot in range(k):
            for candidate in range(n):
                if candidate in medoids:
                    continue
                trial = medoids.copy()
                trial[slot] = candidate
                trialCost = medoidCost(distances, trial)
                if trialCost < cost - 1e-12:
                    medoids, cost, improved = trial, trialCost, True
    return sorted(medoids)


def cluster_clara(features, k: int, n_subsamples: int = 5,
                  subsample_size: Optional[int] = None,
                  seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """CLARA: PAM on random subsamples, keeping the medoid set with the
    lowest total dissimilarity over all rows.
    Returns labels and the row indices of the medoids (ascending).
    """
    matrix = asMatrix(features)
    n = matrix.shape[0]
    expectK(k, n)
    if subsample_size is None:
        subsample_size = min(n, 40 + 2 * k)
    if not (k <= subsample_size <= n):
        raise builtin.InvalidK(
            f"subsample size {subsample_size} must lie in {k}..{n}")
    rng = np.random.default_rng(seed)
    best: Optional[Tuple[float, List[int]]] = None
    for _ in range(max(n_subsamples, 1)):
        rows = np.sort(rng.choice(n, size=subsample_size, replace=False))
        sub = matrix[rows]
        local = pam(cdist(sub, sub), k)
        medoids = sorted(int(rows[i]) for i in local)
        cost = float(cdist(matrix, matrix[medoids]).min(axis=1).sum())
        if best is None or cost < best[0]:
            best = (cost, medoids)
    assert best is not None
    medoids = best[1]
    labels = np.argmin(cdist(matrix, matrix[medoids]), axis=1).astype(np.int64)
    return labels, np.array(medoids, dtype=np.int64)


# Composition and embedding


def composition(labels: Sequence[Hashable], n_clusters: Optional[int] = None,
                sample_id: str = '') -> lang.TextureComposition:
    """Percentage of grid points in each cluster.
    With n_clusters, labels are 0..n_clusters-1; otherwise clusters are
    the sorted distinct labels.
    """
    labels = list(labels)
    if not labels:
        raise builtin.ValidationError("composition needs at least one label")
    if n_clusters is None:
        clusters = sorted(set(labels), key=str)
    else:
        clusters = list(range(n_clusters))
        if any(label not in clusters for label in labels):
            raise builtin.ValidationError(f"labels must lie in 0..{n_clusters - 1}")
    total = len(labels)
    percentages = [Fraction(100 * labels.count(c), total) for c in clusters]
    return lang.TextureComposition(sample_id, tuple(float(p) for p in percentages))


def pca2(compositions) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Projects rows onto their top two principal components.
    Each component's first nonzero loading is positive.
    """
    matrix = asMatrix(compositions)
    if matrix.shape[0] < 3:
        raise builtin.TooFewRows(f"need at least 3 rows, got {matrix.shape[0]}")
    if matrix.shape[1] < 2:
        raise builtin.ValidationError("need at least 2 columns to embed in 2D")
    pca = PCA(n_components=2, svd_solver='full').fit(matrix)
    components = pca.components_.copy()
    for row in components:
        nonzero = np.flatnonzero(np.abs(row) > 1e-12)
        if len(nonzero) and row[nonzero[0]] < 0:
            row *= -1
    embedding = (matrix - pca.mean_) @ components.T
    return embedding, components, pca.explained_variance_.copy()
