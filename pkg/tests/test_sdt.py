import unittest

import numpy as np

from sdph import builtin, sdt
from tests import randomVolume, trials, volumeOf


class SignedDistanceTestCase(unittest.TestCase):
    def setUp(self):
        voxels = np.zeros((11, 11, 11), dtype=bool)
        voxels[5, 5, 5] = True
        self.single = volumeOf(voxels)

    def test_single_voxel_inside(self):
        field = sdt.signed_distance(self.single)
        self.assertEqual(field.values[5, 5, 5], -1.0)

    def test_single_voxel_outside(self):
        field = sdt.signed_distance(self.single)
        # (x, y, z) = (5, 5, 7)
        self.assertEqual(field.values[7, 5, 5], 2.0)

    def test_single_voxel_agrees(self):
        fast = sdt.signed_distance(self.single)
        slow = sdt.signed_distance_bruteforce(self.single)
        self.assertTrue(np.array_equal(fast.values, slow.values))

    def test_fully_occupied(self):
        vol = volumeOf(np.ones((3, 3, 3), dtype=bool))
        for transform in (sdt.signed_distance, sdt.signed_distance_bruteforce):
            field = transform(vol)
            self.assertEqual(field.values[1, 1, 1], -2.0)
            self.assertEqual(field.values[0, 0, 0], -1.0)

    def test_empty_volume(self):
        vol = volumeOf(np.zeros((4, 4, 4), dtype=bool))
        with self.assertRaises(builtin.EmptyVolume):
            sdt.signed_distance(vol)
        with self.assertRaises(builtin.EmptyVolume):
            sdt.signed_distance_bruteforce(vol)

    def test_sign_partition(self):
        vol = randomVolume(3, 12, p=0.3)
        field = sdt.signed_distance(vol)
        self.assertTrue(np.array_equal(field.values < 0, vol.voxels))
        self.assertFalse(np.any(field.values == 0))

    def test_lipschitz(self):
        vol = randomVolume(4, 12, p=0.4)
        values = sdt.signed_distance(vol).values
        inside = vol.voxels
        for axis in range(3):
            steps = np.abs(np.diff(values, axis=axis))
            # Neighbours across the boundary sit at -1 and +1
            samePhase = np.diff(inside.astype(np.int8), axis=axis) == 0
            self.assertLessEqual(steps[samePhase].max(), 1.0 + 1e-12)

    def test_seed_carried(self):
        vol = randomVolume(5, 6)
        vol = type(vol)(vol.dims, vol.spacing, vol.voxels, seed=99)
        self.assertEqual(sdt.signed_distance(vol).seed, 99)


class OracleTestCase(unittest.TestCase):
    def test_random_volumes_bitwise(self):
        for seed in range(trials(20, 100)):
            vol = randomVolume(seed, 20, p=0.1 + 0.8 * (seed % 5) / 4)
            fast = sdt.signed_distance(vol).values
            slow = sdt.signed_distance_bruteforce(vol).values
            self.assertTrue(np.array_equal(fast, slow), seed)

    def test_small_volumes_bitwise(self):
        for seed in range(50):
            vol = randomVolume(1000 + seed, 10)
            fast = sdt.signed_distance(vol).values
            slow = sdt.signed_distance_bruteforce(vol).values
            self.assertTrue(np.array_equal(fast, slow), seed)

    def test_anisotropic_volumes_bitwise(self):
        for seed in range(trials(30, 100)):
            base = randomVolume(2000 + seed, 10)
            vol = volumeOf(base.voxels, spacing=(0.3, 0.7, 2.1))
            fast = sdt.signed_distance(vol).values
            slow = sdt.signed_distance_bruteforce(vol).values
            self.assertTrue(np.array_equal(fast, slow), seed)

    def test_anisotropic_spacing(self):
        base = randomVolume(7, 10, p=0.3)
        vol = volumeOf(base.voxels, spacing=(1.0, 1.0, 2.5))
        fast = sdt.signed_distance(vol).values
        slow = sdt.signed_distance_bruteforce(vol).values
        self.assertTrue(np.array_equal(fast, slow))
        # z steps now cost 2.5
        voxels = np.zeros((9, 9, 9), dtype=bool)
        voxels[4, 4, 4] = True
        field = sdt.signed_distance(volumeOf(voxels, spacing=(1.0, 1.0, 2.5)))
        self.assertEqual(field.values[5, 4, 4], 2.5)
        self.assertEqual(field.values[4, 4, 5], 1.0)
        self.assertEqual(field.values[4, 4, 4], -1.0)
