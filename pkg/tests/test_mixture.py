import math
import unittest

import numpy as np
from scipy.stats import multivariate_normal

from sdph import builtin, lang, mixture, system
from tests import SLOW, trials

I2 = np.eye(2)


def single(mu, sigma=I2, **labels):
    return lang.MixtureModel((lang.Component(1.0, np.asarray(mu, float), np.asarray(sigma, float)),),
                             **labels)


def modelOf(alphas, means, sigmas=None, **labels):
    sigmas = sigmas or [I2] * len(alphas)
    return lang.MixtureModel(tuple(
        lang.Component(a, np.asarray(mu, float), np.asarray(s, float))
        for a, mu, s in zip(alphas, means, sigmas)
    ), **labels)


def sampleFrom(model, n, seed):
    rng = np.random.default_rng(seed)
    which = rng.choice(model.c, size=n, p=model.alphas)
    y = np.array([rng.multivariate_normal(model.means[m], model.covariances[m]) for m in which])
    return lang.WeightedPoints.unweighted(y)


def blobPoints(seed, centres, n=100, scale=0.3):
    rng = np.random.default_rng(seed)
    y = np.vstack([rng.normal(c, scale, size=(n, 2)) for c in centres])
    return lang.WeightedPoints.unweighted(y)


def matchedError(found, expected):
    """Largest distance between expected means and their nearest fitted
    means, after greedy matching.
    """
    reference = modelOf([1 / len(expected)] * len(expected), expected)
    order = mixture.alignTo(reference, found)
    return float(np.max(np.linalg.norm(found.means[order] - reference.means, axis=1)))


class DensityTestCase(unittest.TestCase):
    def test_mode(self):
        self.assertAlmostEqual(mixture.gaussian_pdf([0, 0], [0, 0], I2), 1 / (2 * math.pi))

    def test_unit_offset(self):
        self.assertAlmostEqual(mixture.gaussian_pdf([1, 0], [0, 0], I2),
                               math.exp(-0.5) / (2 * math.pi))

    def test_scaled(self):
        value = mixture.gaussian_pdf([2, 0], [0, 0], np.diag([4.0, 1.0]))
        self.assertAlmostEqual(value, math.exp(-0.5) / (4 * math.pi))

    def test_not_spd(self):
        with self.assertRaises(builtin.NotSPD):
            mixture.gaussian_pdf([0, 0], [0, 0], [[1.0, 2.0], [2.0, 1.0]])
        with self.assertRaises(builtin.NotSPD):
            mixture.gaussian_pdf([0, 0], [0, 0], [[1.0, 0.5], [0.0, 1.0]])


class EStepTestCase(unittest.TestCase):
    def test_single_component(self):
        points = blobPoints(0, [(0, 0)], n=10)
        resp = mixture.e_step(single([1.0, 1.0]), points)
        self.assertTrue(np.array_equal(resp.matrix, np.ones((10, 1))))

    def test_equidistant(self):
        model = modelOf([0.5, 0.5], [(-1, 0), (1, 0)])
        points = lang.WeightedPoints([[0.0, 3.0]], [2.5])
        self.assertTrue(np.allclose(mixture.e_step(model, points).matrix, [[0.5, 0.5]]))

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            c = int(rng.integers(1, 5))
            alphas = rng.dirichlet(np.ones(c))
            alphas /= alphas.sum()
            sigmas = [a @ a.T + 0.1 * I2 for a in rng.normal(size=(c, 2, 2))]
            model = modelOf(alphas.tolist(), rng.normal(0, 3, size=(c, 2)), sigmas)
            points = lang.WeightedPoints(rng.normal(0, 5, size=(20, 2)), rng.uniform(0.1, 10, 20))
            resp = mixture.e_step(model, points).matrix
            self.assertTrue(np.allclose(resp.sum(axis=1), 1.0, rtol=0, atol=1e-9))
            self.assertTrue(np.all((resp >= 0) & (resp <= 1)))

    def test_heavier_points_commit_harder(self):
        model = modelOf([0.5, 0.5], [(0, 0), (2, 0)])
        light = mixture.e_step(model, lang.WeightedPoints([[0.8, 0.0]], [1.0])).matrix
        heavy = mixture.e_step(model, lang.WeightedPoints([[0.8, 0.0]], [10.0])).matrix
        self.assertGreater(heavy[0, 0], light[0, 0])


class MStepTestCase(unittest.TestCase):
    def test_unweighted_mle(self):
        points = blobPoints(2, [(1, -1)], n=50, scale=1.0)
        resp = lang.Responsibilities(np.ones((50, 1)))
        (comp,) = mixture.m_step(points, resp).components
        self.assertTrue(np.allclose(comp.mu, points.y.mean(axis=0)))
        self.assertTrue(np.allclose(comp.sigma, np.cov(points.y, rowvar=False, bias=True)))
        self.assertEqual(comp.alpha, 1.0)

    def test_weighted_mean(self):
        points = lang.WeightedPoints([[0.0, 0.0], [4.0, 0.0]], [1.0, 3.0])
        (comp,) = mixture.m_step(points, lang.Responsibilities(np.ones((2, 1)))).components
        self.assertTrue(np.allclose(comp.mu, [3.0, 0.0]))
        # weighted scatter over total responsibility: (1*9 + 3*1) / 2
        self.assertAlmostEqual(comp.sigma[0, 0], 6.0)
        self.assertAlmostEqual(comp.sigma[1, 1], builtin.COVARIANCE_FLOOR)

    def test_empty_component(self):
        points = blobPoints(3, [(0, 0)], n=4)
        resp = lang.Responsibilities(np.column_stack([np.ones(4), np.zeros(4)]))
        with self.assertRaises(builtin.EmptyComponent):
            mixture.m_step(points, resp)

    def test_stationary(self):
        """Perturbing the M-step optimum never raises the expected
        complete log-likelihood.
        """
        rng = np.random.default_rng(4)
        points = lang.WeightedPoints(rng.normal(size=(40, 2)), rng.uniform(0.5, 3, 40))
        resp = mixture.e_step(modelOf([0.5, 0.5], [(-1, 0), (1, 0)]), points)

        def expected(components):
            model = lang.MixtureModel(tuple(components))
            terms = mixture.weightedLogTerms(model, points)
            return float(np.sum(resp.matrix * terms))

        best = mixture.m_step(points, resp).components
        optimum = expected(best)
        for _ in range(20):
            m = int(rng.integers(0, 2))
            step = rng.normal(size=2) * 1e-2
            shear = rng.normal(size=(2, 2)) * 1e-2
            comps = list(best)
            comps[m] = lang.Component(comps[m].alpha, comps[m].mu + step,
                                      comps[m].sigma + shear @ shear.T)
            self.assertLessEqual(expected(comps), optimum + 1e-12)


class LikelihoodTestCase(unittest.TestCase):
    def test_single_point(self):
        points = lang.WeightedPoints([[1.0, 2.0]], [1.0])
        self.assertAlmostEqual(mixture.log_likelihood(single([1.0, 2.0]), points),
                               math.log(1 / (2 * math.pi)))

    def test_duplicate_doubles(self):
        model = single([0.0, 0.0])
        once = lang.WeightedPoints([[0.5, -1.0]], [2.0])
        twice = lang.WeightedPoints([[0.5, -1.0], [0.5, -1.0]], [2.0, 2.0])
        self.assertAlmostEqual(mixture.log_likelihood(model, twice),
                               2 * mixture.log_likelihood(model, once))

    def test_direct_sum(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            model = modelOf([0.3, 0.7], rng.normal(size=(2, 2)),
                            [np.diag(rng.uniform(0.5, 2, 2)) for _ in range(2)])
            points = lang.WeightedPoints(rng.normal(size=(6, 2)), rng.uniform(0.2, 4, 6))
            direct = 0.0
            for y, w in zip(points.y, points.w):
                direct += math.log(sum(
                    comp.alpha * multivariate_normal(comp.mu, comp.sigma / w).pdf(y)
                    for comp in model.components))
            self.assertAlmostEqual(mixture.log_likelihood(model, points), direct, places=10)


class EMTestCase(unittest.TestCase):
    def test_monotone(self):
        for seed in range(trials(5, 20)):
            rng = np.random.default_rng(seed)
            points = lang.WeightedPoints(rng.normal(0, 2, size=(150, 2)), rng.uniform(0.1, 5, 150))
            fit = mixture.em_fit(points, 3, seed)
            trace = np.array(fit.fit.trace)
            if fit.fit.reinitialized == 0:
                slack = 1e-9 * np.maximum(np.abs(trace[:-1]), 1.0)
                self.assertTrue(np.all(np.diff(trace) >= -slack), seed)

    def test_single_component(self):
        points = lang.WeightedPoints([[0.0, 1.0], [2.0, 1.0], [4.0, 5.0]], [1.0, 1.0, 2.0])
        fit = mixture.em_fit(points, 1, seed=0)
        self.assertLessEqual(fit.fit.iters, 2)
        self.assertTrue(np.allclose(fit.means[0], [2.5, 3.0]))

    def test_recovers_three_components(self):
        truth = modelOf([0.3, 0.3, 0.4], [(0, 0), (6, 0), (0, 6)],
                        [0.5 * I2, np.diag([1.0, 0.4]), 0.8 * I2])
        points = sampleFrom(truth, 10_000, seed=11)
        fit = mixture.em_fit(points, 3, seed=0)
        self.assertLess(matchedError(fit, truth.means), 0.05)
        self.assertLess(mixture.hellinger(fit, truth), 0.05)

    def test_deterministic(self):
        points = blobPoints(6, [(0, 0), (3, 3)])
        a, b = mixture.em_fit(points, 2, 9), mixture.em_fit(points, 2, 9)
        self.assertTrue(np.array_equal(a.means, b.means))
        self.assertEqual(a.fit.loglik, b.fit.loglik)

    def test_too_few_points(self):
        with self.assertRaises(builtin.TooFewPoints):
            mixture.em_fit(blobPoints(0, [(0, 0)], n=2), 3, 0)

    def test_covariance_floor(self):
        points = lang.WeightedPoints.unweighted([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [5.0, 5.0]])
        fit = mixture.em_fit(points, 2, 0, floor=0.01)
        for sigma in fit.covariances:
            self.assertGreaterEqual(np.linalg.eigvalsh(sigma).min(), 0.01 - 1e-12)


class SizeTestCase(unittest.TestCase):
    def test_bic_formula(self):
        points = blobPoints(7, [(0, 0)], n=100, scale=1.0)
        model = single([0.0, 0.0])
        expected = 5 * math.log(100) - 2 * mixture.log_likelihood(model, points)
        self.assertAlmostEqual(mixture.bic(model, points), expected)

    def test_penalty_grows(self):
        counts = [mixture.parameterCount(c, 2) for c in range(1, 8)]
        self.assertEqual(counts, [6 * c - 1 for c in range(1, 8)])

    def test_aic_formula(self):
        points = blobPoints(7, [(0, 0)], n=30)
        model = single([0.0, 0.0])
        self.assertAlmostEqual(mixture.aic(model, points),
                               10 - 2 * mixture.log_likelihood(model, points))

    def test_three_blobs(self):
        votes = 0
        for seed in range(trials(3, 10)):
            points = blobPoints(seed, [(0, 0), (4, 0), (2, 4)], n=80, scale=0.4)
            votes += mixture.select_size(points, (1, 6), seed).best == 3
        self.assertGreater(votes, trials(3, 10) / 2)

    def test_four_blobs(self):
        points = blobPoints(8, [(0, 0), (5, 0), (0, 5), (5, 5)], n=60, scale=0.3)
        selection = mixture.select_size(points, (2, 8), seed=1)
        self.assertEqual(selection.best, 4)
        self.assertEqual(sorted(selection.curve), list(range(2, 9)))
        self.assertEqual(selection.model.c, 4)

    def test_single_gaussian(self):
        points = blobPoints(9, [(0, 0)], n=300, scale=1.0)
        self.assertEqual(mixture.select_size(points, (2, 5), seed=0).best, 2)

    def test_unknown_criterion(self):
        with self.assertRaises(builtin.ValidationError):
            mixture.select_size(blobPoints(0, [(0, 0)]), (2, 3), criterion='mdl')


class BootstrapTestCase(unittest.TestCase):
    def setUp(self):
        self.points = blobPoints(10, [(0, 0), (4, 0), (2, 4)], n=40, scale=0.2)

    def test_deterministic(self):
        a = mixture.bootstrap_fit(self.points, 3, B=3, seed=4)
        b = mixture.bootstrap_fit(self.points, 3, B=3, seed=4)
        self.assertTrue(np.array_equal(a.means, b.means))
        self.assertTrue(np.array_equal(a.covariances, b.covariances))

    def test_single_replicate(self):
        fit = mixture.bootstrap_fit(self.points, 3, B=1, seed=4)
        (rng,) = system.rngStreams(4, 1)
        index = rng.integers(0, len(self.points), size=len(self.points))
        direct = mixture.em_fit(self.points.take(index), 3, system.childSeed(rng))
        self.assertTrue(np.allclose(fit.means, direct.means))
        self.assertTrue(np.allclose(fit.alphas, direct.alphas))
        self.assertTrue(np.allclose(fit.covariances, direct.covariances))
        self.assertEqual(fit.fit.replicates, 1)

    def test_close_to_em(self):
        fit = mixture.bootstrap_fit(self.points, 3, B=trials(5, 50), seed=0)
        direct = mixture.em_fit(self.points, 3, seed=0)
        self.assertLess(matchedError(fit, direct.means), 0.05)

    def test_invalid_replicates(self):
        with self.assertRaises(builtin.ValidationError):
            mixture.bootstrap_fit(self.points, 3, B=0)


class DistanceTestCase(unittest.TestCase):
    def test_identical(self):
        f = modelOf([0.4, 0.6], [(0, 0), (3, 1)])
        self.assertLess(mixture.hellinger(f, f), 1e-8)
        self.assertLess(abs(mixture.kl_divergence(f, f)), 1e-8)

    def test_closed_form(self):
        h = mixture.hellinger(single([0, 0]), single([2, 0]))
        self.assertAlmostEqual(h, math.sqrt(1 - math.exp(-0.5)), places=3)
        self.assertAlmostEqual(h, 0.6273, places=3)

    def test_disjoint(self):
        self.assertAlmostEqual(mixture.hellinger(single([0, 0]), single([100, 0])), 1.0, delta=1e-6)

    def test_random_equal_covariances(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            s = rng.uniform(0.3, 2.0)
            a, b = rng.normal(0, 2, size=(2, 2))
            h = mixture.hellinger(single(a, s**2 * I2), single(b, s**2 * I2))
            expected = math.sqrt(1 - math.exp(-np.sum((a - b)**2) / (8 * s**2)))
            self.assertLess(abs(h - expected), 1e-3)

    def test_kl_closed_form(self):
        self.assertAlmostEqual(mixture.kl_divergence(single([0, 0]), single([1, 0])), 0.5, delta=0.01)

    def test_kl_asymmetric(self):
        f, g = single([0, 0], I2), single([0, 0], 4 * I2)
        self.assertGreater(abs(mixture.kl_divergence(f, g) - mixture.kl_divergence(g, f)), 0.1)

    def test_grid_too_coarse(self):
        grid = lang.IntegrationGrid((10.0, 11.0, 10.0, 11.0), (4, 4))
        with self.assertRaises(builtin.GridTooCoarse):
            mixture.hellinger(single([0, 0]), single([1, 0]), grid)

    def test_integration_grid_covers(self):
        grid = mixture.integration_grid([single([0, 0]), single([10, -4], 4 * I2)])
        bmin, bmax, dmin, dmax = grid.bounds
        self.assertLessEqual(bmin, -10)
        self.assertGreaterEqual(bmax, 20)
        self.assertLessEqual(dmin, -14)
        self.assertGreaterEqual(dmax, 10)


class ClassifyTestCase(unittest.TestCase):
    def setUp(self):
        self.models = {
            'O': modelOf([0.5, 0.5], [(-3, 1), (-1, 5)], phase='O', quadrant='PH1NW'),
            'I': modelOf([0.5, 0.5], [(-8, 9), (-3, 12)], phase='I', quadrant='PH1NW'),
            'II': modelOf([0.5, 0.5], [(-10, 2), (-12, 6)], phase='II', quadrant='PH1NW'),
        }

    def test_self_consistent(self):
        for seed in range(trials(3, 10)):
            for phase, model in self.models.items():
                points = sampleFrom(model, 200, seed)
                predicted, _ = mixture.classify(points, self.models, seed=seed)
                self.assertEqual(predicted, phase, (seed, phase))

    def test_single_model(self):
        points = sampleFrom(self.models['I'], 100, 0)
        predicted, distances = mixture.classify(points, {'II': self.models['II']}, c_sample=2)
        self.assertEqual(predicted, 'II')
        self.assertEqual(list(distances), ['II'])
        self.assertGreater(distances['II'], 0)

    def test_order_invariant(self):
        points = sampleFrom(self.models['O'], 100, 1)
        forward = mixture.classify(points, self.models, c_sample=2, seed=3)
        backward = mixture.classify(points, dict(reversed(list(self.models.items()))),
                                    c_sample=2, seed=3)
        self.assertEqual(forward, backward)

    def test_duplicated_sample(self):
        points = sampleFrom(self.models['II'], 80, 2)
        doubled = lang.WeightedPoints.concat([points, points])
        self.assertEqual(mixture.classify(points, self.models, seed=0)[0],
                         mixture.classify(doubled, self.models, seed=0)[0])

    def test_excluded_quadrant(self):
        points = sampleFrom(self.models['O'], 20, 0)
        with self.assertRaises(builtin.ExcludedQuadrant):
            mixture.classify(points, self.models, quadrant='PH0NW')
        excluded = {'O': self.models['O'].withLabels('O', 'PH2NW')}
        with self.assertRaises(builtin.ExcludedQuadrant):
            mixture.classify(points, excluded)

    def test_empty_sample(self):
        empty = lang.WeightedPoints(np.zeros((0, 2)), np.zeros(0))
        with self.assertRaises(builtin.TooFewPoints):
            mixture.classify(empty, self.models)


class EvaluationTestCase(unittest.TestCase):
    def setUp(self):
        self.models = {
            'O': modelOf([1.0], [(-3, 1)], phase='O'),
            'I': modelOf([1.0], [(-1, 5)], phase='I'),
        }

    def test_split(self):
        points = blobPoints(13, [(0, 0)], n=9)
        train, test = mixture.split_points(points, seed=1)
        self.assertEqual((len(train), len(test)), (5, 4))
        rows = sorted(map(tuple, np.vstack([train.y, test.y])))
        self.assertEqual(rows, sorted(map(tuple, points.y)))
        again, _ = mixture.split_points(points, seed=1)
        self.assertTrue(np.array_equal(train.y, again.y))

    def test_evaluate(self):
        points = sampleFrom(self.models['I'], 60, 3)
        row = mixture.evaluate_sample(points, self.models, B=2, seed=5,
                                      sample_id='s1', phase='I', c_sample=1)
        self.assertEqual(row.predicted, 'I')
        self.assertEqual(list(row.hellinger), ['O', 'I'])
        self.assertTrue(all(0 <= h <= 2 for h in row.hellinger.values()))
        self.assertTrue(all(k > -1e-6 for k in row.kl.values()))
        self.assertEqual((row.sample_id, row.phase), ('s1', 'I'))

    def test_evaluate_deterministic(self):
        points = sampleFrom(self.models['O'], 40, 4)
        a = mixture.evaluate_sample(points, self.models, B=2, seed=5, c_sample=1)
        b = mixture.evaluate_sample(points, self.models, B=2, seed=5, c_sample=1)
        self.assertEqual(a, b)

    def test_evaluate_matches_pairwise_divergences(self):
        points = sampleFrom(self.models['I'], 40, 8)
        row = mixture.evaluate_sample(points, self.models, B=1, seed=9, c_sample=1)
        (rng,) = system.rngStreams(9, 1)
        resample = points.take(rng.integers(0, len(points), size=len(points)))
        fit = mixture.em_fit(resample, 1, system.childSeed(rng), floor=builtin.COVARIANCE_FLOOR)
        grid = mixture.integration_grid([fit, self.models['O'], self.models['I']])
        for phase in ('O', 'I'):
            self.assertAlmostEqual(row.hellinger[phase],
                                   mixture.hellinger(fit, self.models[phase], grid), places=12)
            self.assertAlmostEqual(row.kl[phase],
                                   mixture.kl_divergence(fit, self.models[phase], grid), places=12)

    @unittest.skipUnless(SLOW, "long bootstrap evaluation")
    def test_evaluate_full_bootstrap(self):
        points = sampleFrom(self.models['O'], 100, 6)
        row = mixture.evaluate_sample(points, self.models, B=builtin.BOOTSTRAP_B, seed=0)
        self.assertEqual(row.predicted, 'O')
