"""phantom
Deterministic synthetic volumes standing in for segmented vasculature.

make_ball(dims, center, radius) -> BinaryVolume
    Lattice ball

make_torus(dims, center, ring_radius, tube_radius, axis) -> BinaryVolume
    Solid torus with a known loop

make_vessel_network(spec) -> BinaryVolume
    Union of capsules laid out on a jittered lattice
"""

from dataclasses import dataclass, field
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import builtin, lang

AXES = {'x': 0, 'y': 1, 'z': 2}

# Per-class layouts for the synthetic phases:
# thick vessels with wide gaps, thin vessels with narrow gaps,
# thin vessels with dilated gaps.
CLASS_DEFAULTS = {
    'thick-sparse': {
        'tube_radius_range': (3.5, 5.0),
        'gap_range': (10.0, 14.0),
        'n_tubes': 18,
    },
    'thin-dense': {
        'tube_radius_range': (1.5, 2.2),
        'gap_range': (4.0, 6.0),
        'n_tubes': 60,
    },
    'thin-dilated': {
        'tube_radius_range': (1.5, 2.2),
        'gap_range': (14.0, 20.0),
        'n_tubes': 18,
    },
}

DEFAULT_DIMS = (64, 64, 64)


# Helper functions


def voxelCentres(dims: lang.Dims) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns x, y, z coordinate grids, each indexed [z, y, x]."""
    zz, yy, xx = np.indices(lang.gridShape(dims), dtype=np.float64)
    return xx, yy, zz


def fitsElseError(dims: lang.Dims, low: Sequence[float], high: Sequence[float],
                  error: type, what: str) -> None:
    """Raises error unless low..high stays at least one voxel inside every
    face on every axis. Voxel i spans i - 0.5..i + 0.5, so the faces of an
    axis with n voxels sit at -0.5 and n - 0.5 and the allowed span is
    0.5..n - 1.5.
    """
    for axis, (n, lo, hi) in enumerate(zip(dims, low, high)):
        if lo < 0.5 or hi > n - 1.5:
            raise error(
                f"{what} spans {lo:g}..{hi:g} on axis {'xyz'[axis]}, "
                f"allowed 0.5..{n - 1.5:g}")


def expectDims(dims: Sequence[int]) -> lang.Dims:
    if len(dims) != 3 or any(int(n) < 1 for n in dims):
        raise builtin.ValidationError(f"dims must be 3 positive counts, got {tuple(dims)}")
    return (int(dims[0]), int(dims[1]), int(dims[2]))


def centreOf(dims: lang.Dims) -> Tuple[float, float, float]:
    return (float(dims[0] // 2), float(dims[1] // 2), float(dims[2] // 2))


# Primitives


def make_ball(dims: Sequence[int], center: Sequence[float],
              radius: float) -> lang.BinaryVolume:
    """Voxel occupied iff its centre lies within radius of center."""
    dims = expectDims(dims)
    if not radius > 0:
        raise builtin.BallOutOfBounds(f"radius must be positive, got {radius}")
    low = [c - radius for c in center]
    high = [c + radius for c in center]
    fitsElseError(dims, low, high, builtin.BallOutOfBounds, "ball")
    xx, yy, zz = voxelCentres(dims)
    cx, cy, cz = center
    dist2 = (xx - cx)**2 + (yy - cy)**2 + (zz - cz)**2
    return lang.BinaryVolume(dims, (1.0, 1.0, 1.0), dist2 <= radius**2)


def make_torus(dims: Sequence[int], center: Optional[Sequence[float]] = None,
               ring_radius: float = 10.0, tube_radius: float = 3.0,
               axis: str = 'z') -> lang.BinaryVolume:
    """Voxel occupied iff its centre is within tube_radius of the ring
    of radius ring_radius around axis through center.
    center defaults to the middle voxel.
    """
    dims = expectDims(dims)
    if axis not in AXES:
        raise builtin.InvalidGeometry(f"axis must be one of x, y, z, got {axis!r}")
    if not (ring_radius > tube_radius > 0):
        raise builtin.InvalidGeometry(
            f"need ring radius > tube radius > 0, got {ring_radius}, {tube_radius}")
    if center is None:
        center = centreOf(dims)
    axial = AXES[axis]
    extent = [ring_radius + tube_radius] * 3
    extent[axial] = tube_radius
    low = [c - e for c, e in zip(center, extent)]
    high = [c + e for c, e in zip(center, extent)]
    fitsElseError(dims, low, high, builtin.TorusOutOfBounds, "torus")

    coords = [g - c for g, c in zip(voxelCentres(dims), center)]
    h = coords[axial]
    u, v = (coords[i] for i in range(3) if i != axial)
    rho = np.sqrt(u**2 + v**2)
    return lang.BinaryVolume(dims, (1.0, 1.0, 1.0),
                             (rho - ring_radius)**2 + h**2 <= tube_radius**2)


# Vessel networks


@dataclass(frozen=True)
class PhantomSpec:
    """Parameters of a random vessel network.

    Attributes
    ----------
    - phantom_class
        one of builtin.PHANTOM_CLASSES
    - tube_radius_range
        (min, max) capsule radius in voxels
    - gap_range
        (min, max) clearance between neighbouring parallel tubes
    - n_tubes
        number of capsules to place
    - seed
        master seed
    - dims
        volume size
    - diagonal_fraction
        probability that a tube runs along a face diagonal
    """
    phantom_class: lang.PhantomClass
    tube_radius_range: Tuple[float, float]
    gap_range: Tuple[float, float]
    n_tubes: int
    seed: int
    dims: lang.Dims = DEFAULT_DIMS
    diagonal_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.phantom_class not in builtin.PHANTOM_CLASSES:
            raise builtin.DegenerateSpec(f"unknown phantom class {self.phantom_class!r}")
        for name in ('tube_radius_range', 'gap_range'):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise builtin.DegenerateSpec(f"{name} must satisfy 0 < min <= max, got {(lo, hi)}")
        if self.n_tubes < 1:
            raise builtin.DegenerateSpec(f"n_tubes must be >= 1, got {self.n_tubes}")
        if not (0 <= self.diagonal_fraction <= 1):
            raise builtin.DegenerateSpec("diagonal_fraction must lie in [0, 1]")
        if len(self.dims) != 3 or any(n < 1 for n in self.dims):
            raise builtin.DegenerateSpec(f"invalid dims {self.dims}")

    @classmethod
    def forClass(cls, phantom_class: str, seed: int,
                 dims: lang.Dims = DEFAULT_DIMS) -> "PhantomSpec":
        """The calibrated spec of a phantom class."""
        if phantom_class not in CLASS_DEFAULTS:
            raise builtin.DegenerateSpec(f"unknown phantom class {phantom_class!r}")
        return cls(phantom_class, seed=seed, dims=tuple(dims),  # type: ignore
                   **CLASS_DEFAULTS[phantom_class])  # type: ignore


@dataclass(frozen=True)
class Capsule:
    """Cylinder from a to b, (x, y, z) voxel coordinates, with
    hemispherical caps.
    """
    a: Tuple[float, float, float]
    b: Tuple[float, float, float]
    radius: float

    @property
    def length(self) -> float:
        return math.dist(self.a, self.b)

    @property
    def volume(self) -> float:
        r = self.radius
        return math.pi * r * r * self.length + 4.0 / 3.0 * math.pi * r**3


def latticePositions(rng: np.random.Generator, n: int, margin: float,
                     step: Tuple[float, float]) -> List[float]:
    """Positions along one axis, spaced by a random draw from step."""
    positions = [float(rng.uniform(margin, margin + step[1]))]
    while True:
        nxt = positions[-1] + float(rng.uniform(*step))
        if nxt > n - 1 - margin:
            return positions
        positions.append(nxt)


def clipLine(anchor: np.ndarray, direction: np.ndarray,
             low: np.ndarray, high: np.ndarray) -> Optional[Tuple[float, float]]:
    """Parameter interval of anchor + t * direction inside [low, high]."""
    t0, t1 = -math.inf, math.inf
    for a, d, lo, hi in zip(anchor, direction, low, high):
        if d == 0:
            if not (lo <= a <= hi):
                return None
            continue
        ta, tb = sorted(((lo - a) / d, (hi - a) / d))
        t0, t1 = max(t0, ta), min(t1, tb)
    if not t0 < t1:
        return None
    return t0, t1


def capsules(spec: PhantomSpec) -> List[Capsule]:
    """The capsules of a vessel network.

    Tube axes sit on a jittered lattice whose spacing is the mean tube
    diameter plus a gap drawn from gap_range, so parallel neighbours are
    separated by roughly the gap and crossing tubes close loops. A tube
    may be turned onto a face diagonal through its lattice anchor. Every
    capsule is clipped to keep one voxel clear of the faces.
    """
    rng = np.random.default_rng(spec.seed)
    dims = np.array(spec.dims, dtype=np.float64)
    rmin, rmax = spec.tube_radius_range
    meanDiameter = rmin + rmax
    step = (meanDiameter + spec.gap_range[0], meanDiameter + spec.gap_range[1])
    margin = rmax + 1.0
    positions = [latticePositions(rng, int(n), margin, step) for n in spec.dims]

    candidates = []
    for axis in range(3):
        others = [i for i in range(3) if i != axis]
        for p in positions[others[0]]:
            for q in positions[others[1]]:
                anchor = dims / 2.0 - 0.5
                anchor[others[0]] = p
                anchor[others[1]] = q
                candidates.append((axis, anchor))
    order = rng.permutation(len(candidates))[:spec.n_tubes]

    placed = []
    for index in order:
        axis, anchor = candidates[index]
        direction = np.zeros(3)
        direction[axis] = 1.0
        if rng.random() < spec.diagonal_fraction:
            other = int(rng.choice([i for i in range(3) if i != axis]))
            direction[other] = float(rng.choice([-1.0, 1.0]))
            direction /= math.sqrt(2.0)
        radius = float(rng.uniform(rmin, rmax))
        low = np.full(3, radius + 1.0)
        high = dims - 2.0 - radius
        interval = clipLine(anchor, direction, low, high)
        if interval is None:
            continue
        t0, t1 = interval
        a = anchor + t0 * direction
        b = anchor + t1 * direction
        placed.append(Capsule(tuple(a), tuple(b), radius))  # type: ignore
    return placed


def rasterize(dims: lang.Dims, parts: Sequence[Capsule]) -> np.ndarray:
    """Union of capsules as a bool array indexed [z, y, x]."""
    grid = np.zeros(lang.gridShape(dims), dtype=bool)
    for capsule in parts:
        a = np.array(capsule.a)
        b = np.array(capsule.b)
        r = capsule.radius
        lo = np.maximum(np.floor(np.minimum(a, b) - r), 0).astype(int)
        hi = np.minimum(np.ceil(np.maximum(a, b) + r), np.array(dims) - 1).astype(int)
        zz, yy, xx = np.mgrid[lo[2]:hi[2] + 1, lo[1]:hi[1] + 1, lo[0]:hi[0] + 1]
        pts = np.stack([xx, yy, zz], axis=-1).astype(np.float64)
        ab = b - a
        denom = float(ab @ ab)
        if denom > 0:
            s = np.clip(((pts - a) @ ab) / denom, 0.0, 1.0)
        else:
            s = np.zeros(pts.shape[:-1])
        nearest = a + s[..., None] * ab
        inside = np.sum((pts - nearest)**2, axis=-1) <= r * r
        grid[lo[2]:hi[2] + 1, lo[1]:hi[1] + 1, lo[0]:hi[0] + 1] |= inside
    return grid


def make_vessel_network(spec: PhantomSpec) -> lang.BinaryVolume:
    """Deterministic random vessel network; same spec, same volume."""
    parts = capsules(spec)
    if not parts:
        raise builtin.DegenerateSpec(
            f"no tube fits in dims {spec.dims} with radii {spec.tube_radius_range}")
    voxels = rasterize(spec.dims, parts)
    if voxels.all() or not voxels.any():
        raise builtin.DegenerateSpec("network must leave both occupied and empty voxels")
    return lang.BinaryVolume(spec.dims, (1.0, 1.0, 1.0), voxels, seed=spec.seed)
