"""sdt
Exact Euclidean signed distance transform of a binary volume.

signed_distance(vol) -> ScalarField
    Separable exact EDT, negative inside, positive outside

signed_distance_bruteforce(vol) -> ScalarField
    Exhaustive nearest-neighbour search; test oracle

The volume is surrounded by an infinite empty exterior, so a fully
occupied volume is well defined. Distances are measured between voxel
centres and scaled by the spacing per axis.
"""

import math
from typing import Tuple

import numpy as np
from scipy import ndimage

from . import builtin, lang

CHUNK = 256


def expectOccupied(vol: lang.BinaryVolume) -> None:
    if not vol.voxels.any():
        raise builtin.EmptyVolume("volume has no occupied voxel")


def arraySpacing(vol: lang.BinaryVolume) -> Tuple[float, float, float]:
    """Spacing in array axis order (z, y, x)."""
    sx, sy, sz = vol.spacing
    return (sz, sy, sx)


def offsetDistance(offsets: np.ndarray, spacing: Tuple[float, float, float]) -> np.ndarray:
    """Euclidean length of integer offsets (..., 3) in array axis order.
    Shared by both transforms so they agree bitwise.
    """
    scaled = offsets.astype(np.float64) * np.asarray(spacing, dtype=np.float64)
    return np.sqrt(np.sum(scaled * scaled, axis=-1))


def nearestDistance(features: np.ndarray, spacing: Tuple[float, float, float]) -> np.ndarray:
    """Distance from every element to the nearest False element."""
    _, indices = ndimage.distance_transform_edt(
        features, sampling=spacing, return_indices=True)
    positions = np.indices(features.shape)
    offsets = np.moveaxis(indices - positions, 0, -1)
    return offsetDistance(offsets, spacing)


def signed_distance(vol: lang.BinaryVolume) -> lang.ScalarField:
    """Signed distance field of vol; -d(p, empty) inside, +d(p, occupied)
    outside.
    """
    expectOccupied(vol)
    spacing = arraySpacing(vol)
    padded = np.pad(vol.voxels, 1, mode='constant', constant_values=False)
    inside = nearestDistance(padded, spacing)[1:-1, 1:-1, 1:-1]
    outside = nearestDistance(~padded, spacing)[1:-1, 1:-1, 1:-1]
    values = np.where(vol.voxels, -inside, outside)
    return lang.ScalarField(vol.dims, vol.spacing, values, seed=vol.seed)


def exteriorDistance(positions: np.ndarray, shape: Tuple[int, int, int],
                     spacing: Tuple[float, float, float]) -> np.ndarray:
    """Squared distance from each position (n, 3) to the nearest voxel
    centre outside the grid.
    """
    n = np.asarray(shape)
    steps = np.minimum(positions + 1, n - positions).astype(np.float64)
    scaled = steps * np.asarray(spacing, dtype=np.float64)
    return np.min(scaled * scaled, axis=1)


def minSquaredDistance(sources: np.ndarray, targets: np.ndarray,
                       spacing: Tuple[float, float, float]) -> np.ndarray:
    """For every source, the smallest squared distance to any target.
    Lengths come from integer offsets scaled per axis, the arithmetic of
    offsetDistance. Works through sources in chunks to bound memory.
    """
    result = np.full(len(sources), math.inf)
    if len(targets) == 0:
        return result
    scale = np.asarray(spacing, dtype=np.float64)
    for start in range(0, len(sources), CHUNK):
        chunk = sources[start:start + CHUNK]
        scaled = (chunk[:, None, :] - targets[None, :, :]).astype(np.float64) * scale
        result[start:start + CHUNK] = np.sum(scaled * scaled, axis=-1).min(axis=1)
    return result


def signed_distance_bruteforce(vol: lang.BinaryVolume) -> lang.ScalarField:
    """Same contract as signed_distance by exhaustive search over all
    voxel pairs.
    """
    expectOccupied(vol)
    spacing = arraySpacing(vol)
    shape = vol.voxels.shape
    occupied = np.argwhere(vol.voxels)
    empty = np.argwhere(~vol.voxels)

    insideSq = np.minimum(minSquaredDistance(occupied, empty, spacing),
                          exteriorDistance(occupied, shape, spacing))
    outsideSq = minSquaredDistance(empty, occupied, spacing)

    values = np.zeros(shape, dtype=np.float64)
    values[tuple(occupied.T)] = -np.sqrt(insideSq)
    if len(empty):
        values[tuple(empty.T)] = np.sqrt(outsideSq)
    return lang.ScalarField(vol.dims, vol.spacing, values, seed=vol.seed)
