"""mixture
Persistence-weighted Gaussian mixture models of diagram quadrants.

A point y with persistence weight w contributes N(y | mu, Sigma / w), so
long-lived points pull harder on the fit.

gaussian_pdf(y, mu, sigma) -> float
e_step(model, points) -> Responsibilities
m_step(points, resp) -> MixtureModel
log_likelihood(model, points) -> float
em_fit(points, c, seed) -> MixtureModel
bic(model, points), aic(model, points) -> float
select_size(points, c_range, seed) -> SizeSelection
bootstrap_fit(points, c, B, seed) -> MixtureModel
integration_grid(models) -> IntegrationGrid
hellinger(f, g, grid), kl_divergence(f, g, grid) -> float
classify(sample_points, phase_models) -> (phase, distances)
split_points(points, seed) -> (train, test)
evaluate_sample(points, phase_models, B, seed) -> EvaluationRow
"""

import logging
import math
import time
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.special import logsumexp
from scipy.stats import multivariate_normal
from sklearn.cluster import kmeans_plusplus

from . import builtin, lang, system

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2 * math.pi)
MONOTONE_SLACK = 1e-9
EMPTY_MASS = 1e-12
MIN_GRID_MASS = 0.99
GRID_MARGIN = 5.0
CELLS_PER_STD = 4
MAX_CELLS = 1024


# Densities


def choleskyElseError(sigma: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    if sigma.shape[0] != sigma.shape[1] or not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
        raise builtin.NotSPD("covariance is not symmetric")
    try:
        return linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        raise builtin.NotSPD("covariance is not positive definite")


def gaussian_pdf(y, mu, sigma) -> float:
    """Multivariate normal density N(y | mu, sigma)."""
    choleskyElseError(sigma)
    return float(multivariate_normal(mean=np.atleast_1d(mu), cov=np.atleast_2d(sigma)).pdf(y))


def logDensity(points: lang.WeightedPoints, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """log N(y_j | mu, sigma / w_j) for every point."""
    chol = choleskyElseError(sigma)
    d = points.d
    diff = points.y - np.asarray(mu, dtype=np.float64).reshape(1, d)
    solved = linalg.solve_triangular(chol, diff.T, lower=True)
    maha = np.sum(solved**2, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    logw = np.log(points.w)
    return -0.5 * d * LOG_2PI - 0.5 * (logdet - d * logw) - 0.5 * points.w * maha


def weightedLogTerms(model: lang.MixtureModel, points: lang.WeightedPoints) -> np.ndarray:
    """(n, c) matrix of log alpha_m + log N(y_j | mu_m, sigma_m / w_j)."""
    if model.d != points.d:
        raise builtin.ValidationError(
            f"model is {model.d}D but points are {points.d}D")
    return np.column_stack([
        math.log(comp.alpha) + logDensity(points, comp.mu, comp.sigma)
        for comp in model.components
    ])


def mixtureDensity(model: lang.MixtureModel, nodes: np.ndarray) -> np.ndarray:
    """Mixture density at unit weight on an (m, d) array of nodes."""
    points = lang.WeightedPoints.unweighted(nodes)
    return np.exp(logsumexp(weightedLogTerms(model, points), axis=1))


def log_likelihood(model: lang.MixtureModel, points: lang.WeightedPoints) -> float:
    """Observed-data weighted log-likelihood."""
    if len(points) == 0:
        return 0.0
    return float(np.sum(logsumexp(weightedLogTerms(model, points), axis=1)))


# EM


def e_step(model: lang.MixtureModel, points: lang.WeightedPoints) -> lang.Responsibilities:
    """Posterior component memberships, normalised over all components."""
    terms = weightedLogTerms(model, points)
    if np.any(np.all(np.isneginf(terms), axis=1)):
        raise builtin.NumericalUnderflow("every component density underflows for some point")
    norm = logsumexp(terms, axis=1, keepdims=True)
    resp = np.exp(terms - norm)
    return lang.Responsibilities(resp / resp.sum(axis=1, keepdims=True))


def floorCovariance(sigma: np.ndarray, floor: float) -> np.ndarray:
    """Clips eigenvalues at floor."""
    sigma = 0.5 * (sigma + sigma.T)
    values, vectors = np.linalg.eigh(sigma)
    clipped = (vectors * np.maximum(values, floor)) @ vectors.T
    return 0.5 * (clipped + clipped.T)


def dataCovariance(points: lang.WeightedPoints, floor: float) -> np.ndarray:
    cov = np.atleast_2d(np.cov(points.y, rowvar=False, bias=True)) if len(points) > 1 \
        else np.zeros((points.d, points.d))
    return floorCovariance(cov.reshape(points.d, points.d), floor)


def updateComponents(points: lang.WeightedPoints, resp: lang.Responsibilities,
                     floor: float) -> Tuple[List[Optional[lang.Component]], List[int]]:
    """Closed-form M-step; empty components come back as None."""
    r = resp.matrix
    n = len(points)
    components: List[Optional[lang.Component]] = []
    empty = []
    for m in range(r.shape[1]):
        mass = float(r[:, m].sum())
        if mass < EMPTY_MASS:
            components.append(None)
            empty.append(m)
            continue
        rw = r[:, m] * points.w
        mu = rw @ points.y / rw.sum()
        diff = points.y - mu
        sigma = (diff * rw[:, None]).T @ diff / mass
        components.append(lang.Component(mass / n, mu, floorCovariance(sigma, floor)))
    return components, empty


def withAlphas(components: Sequence[lang.Component]) -> Tuple[lang.Component, ...]:
    """Renormalises weights to sum to 1."""
    total = sum(comp.alpha for comp in components)
    return tuple(lang.Component(comp.alpha / total, comp.mu, comp.sigma)
                 for comp in components)


def m_step(points: lang.WeightedPoints, resp: lang.Responsibilities,
           floor: float = builtin.COVARIANCE_FLOOR) -> lang.MixtureModel:
    """alpha_m = mean responsibility
    mu_m = sum r w y / sum r w
    sigma_m = sum r w (y - mu)(y - mu)^T / sum r, eigenvalues floored
    """
    components, empty = updateComponents(points, resp, floor)
    if empty:
        raise builtin.EmptyComponent(f"components {empty} received no responsibility")
    return lang.MixtureModel(withAlphas(components))  # type: ignore


def worstFit(resp: lang.Responsibilities) -> int:
    """Index of the point with the lowest maximum responsibility."""
    return int(np.argmin(resp.matrix.max(axis=1)))


def initialModel(points: lang.WeightedPoints, c: int, seed: int,
                 floor: float) -> lang.MixtureModel:
    means, _ = kmeans_plusplus(points.y, n_clusters=c, random_state=seed)
    sigma = dataCovariance(points, floor)
    return lang.MixtureModel(tuple(
        lang.Component(1.0 / c, mu, sigma.copy()) for mu in means
    ))


def expectPoints(points: lang.WeightedPoints, c: int) -> None:
    if c < 1:
        raise builtin.ValidationError(f"component count must be >= 1, got {c}")
    if len(points) < c:
        raise builtin.TooFewPoints(f"{len(points)} points for {c} components")


def parameterCount(c: int, d: int) -> int:
    return (c - 1) + c * d + c * d * (d + 1) // 2


def bic(model: lang.MixtureModel, points: lang.WeightedPoints) -> float:
    """p ln n - 2 log L."""
    p = parameterCount(model.c, model.d)
    return p * math.log(len(points)) - 2.0 * log_likelihood(model, points)


def aic(model: lang.MixtureModel, points: lang.WeightedPoints) -> float:
    """2p - 2 log L."""
    return 2.0 * parameterCount(model.c, model.d) - 2.0 * log_likelihood(model, points)


def em_fit(points: lang.WeightedPoints, c: int, seed: int,
           tol: float = builtin.EM_TOL, max_iter: int = builtin.EM_MAX_ITER,
           floor: float = builtin.COVARIANCE_FLOOR) -> lang.MixtureModel:
    """Weighted EM from a k-means++ start until the relative change in
    log-likelihood drops below tol.
    The log-likelihood must not decrease, except on iterations where an
    empty component was moved to the worst-fitting point.
    """
    expectPoints(points, c)
    model = initialModel(points, c, seed, floor)
    previous = log_likelihood(model, points)
    trace = [previous]
    reinitialized = 0
    iters = 0
    for iters in range(1, max_iter + 1):
        resp = e_step(model, points)
        components, empty = updateComponents(points, resp, floor)
        for m in empty:
            worst = worstFit(resp)
            logger.info("em_fit seed %d: component %d emptied, restarting at point %d",
                        seed, m, worst)
            components[m] = lang.Component(
                1.0 / len(points), points.y[worst].copy(), dataCovariance(points, floor))
        reinitialized += len(empty)
        model = lang.MixtureModel(withAlphas(components))  # type: ignore
        current = log_likelihood(model, points)
        trace.append(current)
        if not empty and current < previous - MONOTONE_SLACK * max(abs(previous), 1.0):
            raise builtin.MonotonicityViolation(
                f"log-likelihood fell from {previous!r} to {current!r} at iteration {iters}")
        change = abs(current - previous)
        previous = current
        if not empty and change <= tol * max(abs(current), 1e-300):
            break
    report = lang.FitReport(
        loglik=previous,
        bic=parameterCount(c, points.d) * math.log(len(points)) - 2.0 * previous,
        iters=iters,
        seed=seed,
        reinitialized=reinitialized,
        trace=tuple(trace),
    )
    return lang.MixtureModel(model.components, fit=report)


# Model size


def clampRange(c_range: Tuple[int, int], n: int) -> Tuple[int, int]:
    lo, hi = c_range
    if lo < 1 or hi < lo:
        raise builtin.ValidationError(f"invalid component range {c_range}")
    hi = min(hi, n)
    return min(lo, hi), hi


def select_size(points: lang.WeightedPoints,
                c_range: Tuple[int, int] = builtin.SIZE_RANGE,
                seed: int = 0, criterion: str = 'bic',
                floor: float = builtin.COVARIANCE_FLOOR,
                tol: float = builtin.EM_TOL,
                max_iter: int = builtin.EM_MAX_ITER) -> lang.SizeSelection:
    """Fits every size in c_range and keeps the lowest criterion,
    ties to the smaller size.
    """
    if criterion not in ('bic', 'aic'):
        raise builtin.ValidationError(f"criterion must be 'bic' or 'aic', got {criterion!r}")
    lo, hi = c_range
    if len(points) < lo:
        raise builtin.TooFewPoints(f"{len(points)} points for at least {lo} components")
    sizes = list(range(lo, hi + 1))
    seeds = [system.childSeed(rng) for rng in system.rngStreams(seed, len(sizes))]
    score = bic if criterion == 'bic' else aic

    def run(job) -> Tuple[lang.MixtureModel, float]:
        c, childSeed = job
        start = time.perf_counter()
        model = em_fit(points, c, childSeed, tol, max_iter, floor)
        return model, time.perf_counter() - start

    fits = system.parallelMap(run, zip(sizes, seeds))
    curve = {c: score(model, points) for c, (model, _) in zip(sizes, fits)}
    seconds = {c: elapsed for c, (_, elapsed) in zip(sizes, fits)}
    best = min(sizes, key=lambda c: (curve[c], c))
    logger.debug("select_size %s curve %s", criterion, curve)
    return lang.SizeSelection(best, fits[sizes.index(best)][0], curve, seconds, criterion)


# Bootstrap averaging


def alignTo(reference: lang.MixtureModel, model: lang.MixtureModel) -> List[int]:
    """Greedy nearest-mean matching: order[i] is the component of model
    matched to component i of reference.
    """
    distances = np.linalg.norm(
        reference.means[:, None, :] - model.means[None, :, :], axis=2)
    order = [-1] * reference.c
    free = set(range(model.c))
    for _ in range(reference.c):
        best = min(
            ((distances[i, j], i, j) for i in range(reference.c) if order[i] < 0
             for j in free),
        )
        _, i, j = best
        order[i] = j
        free.remove(j)
    return order


def bootstrap_fit(points: lang.WeightedPoints, c: int,
                  B: int = builtin.BOOTSTRAP_B, seed: int = 0,
                  floor: float = builtin.COVARIANCE_FLOOR,
                  tol: float = builtin.EM_TOL,
                  max_iter: int = builtin.EM_MAX_ITER) -> lang.MixtureModel:
    """Averages the parameters of B fits to bootstrap resamples, after
    aligning every fit's components to the first.
    """
    expectPoints(points, c)
    if B < 1:
        raise builtin.ValidationError(f"bootstrap count must be >= 1, got {B}")
    n = len(points)

    def run(rng: np.random.Generator) -> lang.MixtureModel:
        index = rng.integers(0, n, size=n)
        return em_fit(points.take(index), c, system.childSeed(rng), tol, max_iter, floor)

    fits = system.parallelMap(run, system.rngStreams(seed, B))
    logger.debug("bootstrap_fit: %d replicates of size %d", B, c)
    reference = fits[0]
    alphas = np.zeros(c)
    means = np.zeros((c, points.d))
    covs = np.zeros((c, points.d, points.d))
    for fit in fits:
        order = alignTo(reference, fit)
        alphas += fit.alphas[order]
        means += fit.means[order]
        covs += fit.covariances[order]
    alphas /= B
    means /= B
    covs /= B
    components = withAlphas([
        lang.Component(float(a), mu, floorCovariance(sigma, floor))
        for a, mu, sigma in zip(alphas, means, covs)
    ])
    model = lang.MixtureModel(components)
    loglik = log_likelihood(model, points)
    report = lang.FitReport(
        loglik=loglik,
        bic=parameterCount(c, points.d) * math.log(n) - 2.0 * loglik,
        iters=max(fit.fit.iters for fit in fits if fit.fit),
        seed=seed,
        reinitialized=sum(fit.fit.reinitialized for fit in fits if fit.fit),
        replicates=B,
    )
    return lang.MixtureModel(model.components, fit=report)


# Model distances


def integration_grid(models: Sequence[lang.MixtureModel],
                     margin: float = GRID_MARGIN) -> lang.IntegrationGrid:
    """Shared quadrature grid covering every mean +- margin * the largest
    std, with at least CELLS_PER_STD cells per smallest std and at most
    MAX_CELLS cells per axis.
    """
    if not models:
        raise builtin.ValidationError("need at least one model")
    if any(model.d != 2 for model in models):
        raise builtin.ValidationError("quadrature grids are two-dimensional")
    means = np.vstack([model.means for model in models])
    eigen = np.concatenate([
        np.linalg.eigvalsh(sigma) for model in models for sigma in model.covariances
    ])
    maxStd = math.sqrt(float(eigen.max()))
    minStd = math.sqrt(max(float(eigen.min()), 1e-300))
    lo = means.min(axis=0) - margin * maxStd
    hi = means.max(axis=0) + margin * maxStd
    cells = np.ceil((hi - lo) / minStd * CELLS_PER_STD).astype(int)
    cells = np.clip(cells, 2, MAX_CELLS)
    return lang.IntegrationGrid(
        (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])),
        (int(cells[0]), int(cells[1])),
    )


def densityOn(model: lang.MixtureModel, grid: lang.IntegrationGrid,
              name: str = 'f') -> np.ndarray:
    """Density of model at the grid's cell centres; the grid must hold
    at least MIN_GRID_MASS of it.
    """
    values = mixtureDensity(model, grid.nodes())
    mass = float(values.sum() * grid.cellArea)
    if mass < MIN_GRID_MASS:
        raise builtin.GridTooCoarse(
            f"grid holds only {mass:.4f} of the mass of {name}")
    return values


def hellingerOf(fv: np.ndarray, gv: np.ndarray, area: float) -> float:
    squared = 0.5 * float(np.sum((np.sqrt(fv) - np.sqrt(gv))**2) * area)
    return math.sqrt(min(max(squared, 0.0), 1.0))


def klOf(fv: np.ndarray, gv: np.ndarray, area: float) -> float:
    gv = np.maximum(gv, builtin.DENSITY_FLOOR)
    positive = fv > 0
    return float(np.sum(fv[positive] * np.log(fv[positive] / gv[positive])) * area)


def hellinger(f: lang.MixtureModel, g: lang.MixtureModel,
              grid: Optional[lang.IntegrationGrid] = None) -> float:
    """H = sqrt(1/2 integral (sqrt f - sqrt g)^2) by midpoint quadrature,
    clamped to [0, 1].
    """
    if grid is None:
        grid = integration_grid([f, g])
    return hellingerOf(densityOn(f, grid, 'f'), densityOn(g, grid, 'g'), grid.cellArea)


def kl_divergence(f: lang.MixtureModel, g: lang.MixtureModel,
                  grid: Optional[lang.IntegrationGrid] = None) -> float:
    """KL(f || g) = integral f log(f / g), g floored pointwise."""
    if grid is None:
        grid = integration_grid([f, g])
    return klOf(densityOn(f, grid, 'f'), densityOn(g, grid, 'g'), grid.cellArea)


# Classification


def phaseOrder(phase: str) -> Tuple[int, str]:
    if phase in builtin.PHASES:
        return (builtin.PHASES.index(phase), phase)
    return (len(builtin.PHASES), phase)


def expectClassifiable(phase_models: Mapping[str, lang.MixtureModel],
                       quadrant: Optional[str]) -> None:
    if not phase_models:
        raise builtin.ValidationError("need at least one phase model")
    quadrants = {quadrant} | {m.quadrant for m in phase_models.values()}
    for q in quadrants:
        if q in builtin.UNCLASSIFIABLE:
            raise builtin.ExcludedQuadrant(f"{q} points are not used for classification")


def approximate(points: lang.WeightedPoints, c_sample: Optional[int],
                size_range: Tuple[int, int], seed: int,
                floor: float) -> lang.MixtureModel:
    """The GMM approximation of one sample."""
    if len(points) == 0:
        raise builtin.TooFewPoints("sample has no points")
    if c_sample is not None:
        return em_fit(points, min(c_sample, len(points)), seed, floor=floor)
    lo, hi = clampRange(size_range, len(points))
    return select_size(points, (lo, hi), seed, floor=floor).model


def nearestPhase(distances: Mapping[str, float]) -> str:
    return min(distances, key=lambda phase: (distances[phase], phaseOrder(phase)))


def classify(sample_points: lang.WeightedPoints,
             phase_models: Mapping[str, lang.MixtureModel],
             c_sample: Optional[int] = None, seed: int = 0,
             size_range: Tuple[int, int] = builtin.SAMPLE_SIZE_RANGE,
             quadrant: Optional[str] = None,
             floor: float = builtin.COVARIANCE_FLOOR) -> Tuple[str, Dict[str, float]]:
    """Predicts the phase whose model is Hellinger-closest to the
    sample's GMM approximation; ties go to the earlier phase.
    """
    expectClassifiable(phase_models, quadrant)
    fit = approximate(sample_points, c_sample, size_range, seed, floor)
    phases = sorted(phase_models, key=phaseOrder)
    grid = integration_grid([fit] + [phase_models[p] for p in phases])
    distances = {p: hellinger(fit, phase_models[p], grid) for p in phases}
    return nearestPhase(distances), distances


def split_points(points: lang.WeightedPoints,
                 seed: int) -> Tuple[lang.WeightedPoints, lang.WeightedPoints]:
    """Seeded balanced split; the training half gets the odd point."""
    n = len(points)
    order = np.random.default_rng(seed).permutation(n)
    cut = (n + 1) // 2
    return points.take(np.sort(order[:cut])), points.take(np.sort(order[cut:]))


def evaluate_sample(points: lang.WeightedPoints,
                    phase_models: Mapping[str, lang.MixtureModel],
                    B: int = builtin.BOOTSTRAP_B, seed: int = 0,
                    sample_id: str = '', phase: Optional[str] = None,
                    c_sample: Optional[int] = None,
                    size_range: Tuple[int, int] = builtin.SAMPLE_SIZE_RANGE,
                    quadrant: Optional[str] = None,
                    floor: float = builtin.COVARIANCE_FLOOR) -> lang.EvaluationRow:
    """Sums Hellinger distances and KL divergences from B bootstrap
    approximations of the sample to every phase model. The predicted
    phase has the smallest Hellinger sum.
    """
    expectClassifiable(phase_models, quadrant)
    if B < 1:
        raise builtin.ValidationError(f"bootstrap count must be >= 1, got {B}")
    n = len(points)
    if n == 0:
        raise builtin.TooFewPoints("sample has no points")
    phases = sorted(phase_models, key=phaseOrder)

    def run(rng: np.random.Generator) -> Tuple[Dict[str, float], Dict[str, float]]:
        resample = points.take(rng.integers(0, n, size=n))
        fit = approximate(resample, c_sample, size_range, system.childSeed(rng), floor)
        grid = integration_grid([fit] + [phase_models[p] for p in phases])
        fv = densityOn(fit, grid)
        gvs = {p: densityOn(phase_models[p], grid, p) for p in phases}
        area = grid.cellArea
        return ({p: hellingerOf(fv, gvs[p], area) for p in phases},
                {p: klOf(fv, gvs[p], area) for p in phases})

    results = system.parallelMap(run, system.rngStreams(seed, B))
    hellingerSums = {p: float(sum(h[p] for h, _ in results)) for p in phases}
    klSums = {p: float(sum(k[p] for _, k in results)) for p in phases}
    return lang.EvaluationRow(sample_id, phase, hellingerSums, klSums,
                              nearestPhase(hellingerSums))
