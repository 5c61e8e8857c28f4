"""object.py

Defines the data objects passed between sdph stages.

Grids are stored as numpy arrays indexed [z, y, x], so a C-order ravel is
x-fastest row-major, the order used by every file format. Coordinates
exchanged with callers are always (x, y, z).

BinaryVolume, ScalarField
    Voxel grids with physical spacing

PersistencePoint, Diagram
    Persistence intervals with voxel anchors

QuadrantPoint, Ellipsoid
    Diagram decomposition and sampling balls

FeatureVector, TextureComposition
    Local texture summaries

DensityGrid, Dendrogram
    Global texture summaries

WeightedPoints, Component, MixtureModel, Responsibilities
    Phase mixture models
"""

from dataclasses import dataclass, field, replace
import math
from typing import (
    Dict,
    Iterator,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np

from .. import builtin
from . import types as t

__all__ = [
    'BinaryVolume',
    'Component',
    'Dendrogram',
    'DensityGrid',
    'Diagram',
    'Ellipsoid',
    'EvaluationRow',
    'FeatureVector',
    'FitReport',
    'IntegrationGrid',
    'Merge',
    'MixtureModel',
    'PersistencePoint',
    'QuadrantPoint',
    'Responsibilities',
    'ScalarField',
    'SizeSelection',
    'TextureComposition',
    'WeightedPoints',
    'cellCentres',
    'gridShape',
]


def gridShape(dims: t.Dims) -> Tuple[int, int, int]:
    """Array shape (nz, ny, nx) for dims (nx, ny, nz)."""
    nx, ny, nz = dims
    return (nz, ny, nx)


def _checkGrid(dims: t.Dims, spacing: t.Spacing, array: np.ndarray) -> None:
    if len(dims) != 3 or any(int(n) < 1 for n in dims):
        raise builtin.ValidationError(f"dims must be 3 positive counts, got {dims}")
    if len(spacing) != 3 or not all(s > 0 and math.isfinite(s) for s in spacing):
        raise builtin.ValidationError(f"spacing must be 3 positive reals, got {spacing}")
    if array.shape != gridShape(dims):
        raise builtin.ValidationError(
            f"grid of shape {array.shape} does not match dims {dims}")


@dataclass(eq=False)
class BinaryVolume:
    """3D occupancy grid; occupied voxels form the object A.

    Attributes
    ----------
    - dims
        (nx, ny, nz) voxel counts
    - spacing
        (sx, sy, sz) micrometres per voxel
    - voxels
        bool array indexed [z, y, x]
    - seed
        master seed the volume was generated from, if any
    """
    dims: t.Dims
    spacing: t.Spacing
    voxels: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        self.dims = tuple(int(n) for n in self.dims)  # type: ignore
        self.spacing = tuple(float(s) for s in self.spacing)  # type: ignore
        self.voxels = np.ascontiguousarray(self.voxels, dtype=bool)
        _checkGrid(self.dims, self.spacing, self.voxels)

    @classmethod
    def fromArray(cls, voxels: np.ndarray,
                  spacing: t.Spacing = (1.0, 1.0, 1.0),
                  seed: Optional[int] = None) -> "BinaryVolume":
        """Wraps an array indexed [z, y, x]."""
        nz, ny, nx = np.shape(voxels)
        return cls((nx, ny, nz), spacing, voxels, seed)

    def occupied(self, coord: t.Coord) -> bool:
        x, y, z = coord
        return bool(self.voxels[z, y, x])

    def count(self) -> int:
        """Number of occupied voxels."""
        return int(np.count_nonzero(self.voxels))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryVolume):
            return NotImplemented
        return (self.dims == other.dims
                and self.spacing == other.spacing
                and np.array_equal(self.voxels, other.voxels))


@dataclass(eq=False)
class ScalarField:
    """3D grid of finite reals; the signed distance function d(x).
    Negative strictly inside the object, positive strictly outside.
    """
    dims: t.Dims
    spacing: t.Spacing
    values: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        self.dims = tuple(int(n) for n in self.dims)  # type: ignore
        self.spacing = tuple(float(s) for s in self.spacing)  # type: ignore
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        _checkGrid(self.dims, self.spacing, self.values)
        if not np.all(np.isfinite(self.values)):
            raise builtin.ValidationError("field values must be finite")

    @classmethod
    def fromArray(cls, values: np.ndarray,
                  spacing: t.Spacing = (1.0, 1.0, 1.0),
                  seed: Optional[int] = None) -> "ScalarField":
        """Wraps an array indexed [z, y, x]."""
        nz, ny, nx = np.shape(values)
        return cls((nx, ny, nz), spacing, values, seed)

    def at(self, coord: t.Coord) -> float:
        x, y, z = coord
        return float(self.values[z, y, x])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScalarField):
            return NotImplemented
        return (self.dims == other.dims
                and self.spacing == other.spacing
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class PersistencePoint:
    """A persistence interval with the voxels that create and destroy it.
    Essential classes have death = +inf and no death_cell.
    """
    degree: int
    birth: float
    death: float
    birth_cell: t.OptCoord = None
    death_cell: t.OptCoord = None

    def __post_init__(self) -> None:
        if self.degree not in (0, 1, 2):
            raise builtin.ValidationError(f"degree must be 0, 1 or 2, got {self.degree}")
        if not (self.death >= self.birth):
            raise builtin.ValidationError(
                f"death {self.death} precedes birth {self.birth}")

    @property
    def essential(self) -> bool:
        return math.isinf(self.death)

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    def sortKey(self) -> tuple:
        return (self.degree, self.birth, self.death,
                self.birth_cell or (-1, -1, -1),
                self.death_cell or (-1, -1, -1))


@dataclass(frozen=True)
class Diagram:
    """A multiset of persistence points computed from one field (or one
    chunk of it).

    Attributes
    ----------
    - points
        points in canonical order (degree, birth, death, cells)
    - source_id
        free-text label of the source
    - dims, spacing
        copy of the source field's grid metadata
    - origin
        voxel offset of the chunk the diagram was computed on; anchors
        are always in whole-field coordinates
    - boundary_artifacts
        True when computed piecewise; chunk cuts create spurious PH0 NW
        points and essential classes
    """
    points: Tuple[PersistencePoint, ...]
    source_id: str = ''
    dims: t.Dims = (1, 1, 1)
    spacing: t.Spacing = (1.0, 1.0, 1.0)
    origin: t.Coord = (0, 0, 0)
    boundary_artifacts: bool = False
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.points, key=PersistencePoint.sortKey))
        object.__setattr__(self, 'points', ordered)

    def __iter__(self) -> Iterator[PersistencePoint]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def inDegree(self, degree: int) -> Tuple[PersistencePoint, ...]:
        return tuple(p for p in self.points if p.degree == degree)

    def finite(self) -> Tuple[PersistencePoint, ...]:
        return tuple(p for p in self.points if not p.essential)

    def essential(self) -> Tuple[PersistencePoint, ...]:
        return tuple(p for p in self.points if p.essential)

    def withPoints(self, points: Sequence[PersistencePoint]) -> "Diagram":
        """Returns a copy of the diagram holding the given points."""
        return replace(self, points=tuple(points))


@dataclass(frozen=True)
class QuadrantPoint:
    """A finite point labelled with its quadrant and critical sizes.
    sizes are the absolute values of (birth, death).
    """
    quadrant: t.Quadrant
    degree: int
    birth: float
    death: float
    sizes: Tuple[float, float]
    birth_cell: t.OptCoord = None
    death_cell: t.OptCoord = None

    @property
    def pairing(self) -> Tuple[str, str]:
        return builtin.PAIRINGS[self.quadrant]

    @property
    def weight(self) -> float:
        """Persistence w = d - b."""
        return self.death - self.birth

    def size(self, name: str) -> float:
        """Returns the critical size called name (e.g. 'r1')."""
        first, second = self.pairing
        if name == first:
            return self.sizes[0]
        if name == second:
            return self.sizes[1]
        raise KeyError(f"{self.quadrant} has no size {name!r}")


@dataclass(frozen=True)
class Ellipsoid:
    """Axis-aligned sampling ball: radius r_xy in the horizontal plane,
    r_z vertically.
    """
    center: t.Coord
    r_xy: float
    r_z: float

    def __post_init__(self) -> None:
        if not (self.r_xy > 0 and self.r_z > 0):
            raise builtin.ValidationError(
                f"ellipsoid radii must be positive, got {self.r_xy}, {self.r_z}")

    def contains(self, coords: np.ndarray) -> np.ndarray:
        """Vectorised membership test for an (n, 3) array of (x, y, z)."""
        coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
        cx, cy, cz = self.center
        horizontal = ((coords[:, 0] - cx)**2 + (coords[:, 1] - cy)**2) / self.r_xy**2
        vertical = (coords[:, 2] - cz)**2 / self.r_z**2
        return horizontal + vertical <= 1.0


@dataclass(frozen=True)
class FeatureVector:
    """The 15 local texture features, in builtin.FEATURE_NAMES order."""
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if len(values) != len(builtin.FEATURE_NAMES):
            raise builtin.ValidationError(
                f"expected {len(builtin.FEATURE_NAMES)} features, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise builtin.ValidationError("features must be finite")
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, name: str) -> float:
        return self.values[builtin.FEATURE_NAMES.index(name)]

    def asArray(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)


@dataclass(frozen=True)
class TextureComposition:
    """Percentage of a sample's grid points in each texture cluster."""
    sample_id: str
    percentages: Tuple[float, ...]

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.percentages):
            raise builtin.ValidationError("percentages must be nonnegative")
        if abs(sum(self.percentages) - 100.0) > 1e-9:
            raise builtin.ValidationError(
                f"percentages sum to {sum(self.percentages)}, not 100")


@dataclass(eq=False)
class DensityGrid:
    """Density values on a cell-centred grid over (birth, death).
    values[i, j] is the density at the centre of birth cell i and death
    cell j.
    """
    bounds: t.Bounds
    resolution: t.Resolution
    values: np.ndarray

    def __post_init__(self) -> None:
        self.bounds = tuple(float(b) for b in self.bounds)  # type: ignore
        self.resolution = tuple(int(r) for r in self.resolution)  # type: ignore
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        bmin, bmax, dmin, dmax = self.bounds
        if not (bmax > bmin and dmax > dmin):
            raise builtin.ValidationError(f"empty grid bounds {self.bounds}")
        if self.values.shape != self.resolution:
            raise builtin.ValidationError(
                f"values of shape {self.values.shape} do not match {self.resolution}")
        if np.any(self.values < 0):
            raise builtin.ValidationError("density values must be nonnegative")

    @property
    def cellArea(self) -> float:
        bmin, bmax, dmin, dmax = self.bounds
        nb, nd = self.resolution
        return ((bmax - bmin) / nb) * ((dmax - dmin) / nd)

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Cell centres along birth and death."""
        return cellCentres(self.bounds, self.resolution)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DensityGrid):
            return NotImplemented
        return (self.bounds == other.bounds
                and self.resolution == other.resolution
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class IntegrationGrid:
    """Cell-centred quadrature grid over (birth, death)."""
    bounds: t.Bounds
    resolution: t.Resolution

    @property
    def cellArea(self) -> float:
        bmin, bmax, dmin, dmax = self.bounds
        nb, nd = self.resolution
        return ((bmax - bmin) / nb) * ((dmax - dmin) / nd)

    def nodes(self) -> np.ndarray:
        """(nb * nd, 2) array of cell centres, birth-major."""
        bs, ds = cellCentres(self.bounds, self.resolution)
        bb, dd = np.meshgrid(bs, ds, indexing='ij')
        return np.column_stack([bb.ravel(), dd.ravel()])


def cellCentres(bounds: t.Bounds, resolution: t.Resolution) -> Tuple[np.ndarray, np.ndarray]:
    bmin, bmax, dmin, dmax = bounds
    nb, nd = resolution
    db = (bmax - bmin) / nb
    dd = (dmax - dmin) / nd
    return (bmin + (np.arange(nb) + 0.5) * db,
            dmin + (np.arange(nd) + 0.5) * dd)


@dataclass(frozen=True)
class Merge:
    """One UPGMA merge: nodes left and right join into node at height."""
    left: int
    right: int
    height: float
    node: int
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge list of an agglomerative clustering. Leaves are nodes
    0..n-1; merge i creates node n+i.
    """
    merges: Tuple[Merge, ...]
    labels: Tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.merges) != max(len(self.labels) - 1, 0):
            raise builtin.ValidationError(
                f"{len(self.labels)} leaves need {len(self.labels) - 1} merges")

    def linkageMatrix(self) -> np.ndarray:
        """scipy linkage matrix; distances are twice the heights."""
        return np.array(
            [[m.left, m.right, 2.0 * m.height, m.size] for m in self.merges],
            dtype=np.float64,
        ).reshape(-1, 4)


@dataclass(eq=False)
class WeightedPoints:
    """Points y (n, d) with positive weights w (n,)."""
    y: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.ndim == 1:
            self.y = self.y.reshape(-1, 1)
        self.w = np.asarray(self.w, dtype=np.float64).reshape(-1)
        if self.y.shape[0] != self.w.shape[0]:
            raise builtin.ValidationError(
                f"{self.y.shape[0]} points but {self.w.shape[0]} weights")
        if not np.all(np.isfinite(self.y)):
            raise builtin.ValidationError("point coordinates must be finite")
        if not np.all(self.w > 0) or not np.all(np.isfinite(self.w)):
            raise builtin.ValidationError("point weights must be positive")

    @classmethod
    def unweighted(cls, y: np.ndarray) -> "WeightedPoints":
        y = np.asarray(y, dtype=np.float64)
        return cls(y, np.ones(y.shape[0]))

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def d(self) -> int:
        return int(self.y.shape[1])

    def take(self, index: np.ndarray) -> "WeightedPoints":
        return WeightedPoints(self.y[index], self.w[index])

    @staticmethod
    def concat(parts: Sequence["WeightedPoints"], d: int = 2) -> "WeightedPoints":
        if not parts:
            return WeightedPoints(np.empty((0, d)), np.empty(0))
        return WeightedPoints(np.vstack([p.y for p in parts]),
                              np.concatenate([p.w for p in parts]))


@dataclass(frozen=True, eq=False)
class Component:
    """One Gaussian of a mixture."""
    alpha: float
    mu: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class FitReport:
    """How a mixture model was obtained."""
    loglik: float
    bic: float
    iters: int
    seed: Optional[int]
    reinitialized: int = 0
    trace: Tuple[float, ...] = ()
    replicates: int = 1


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """Weights, means and covariances of a Gaussian mixture, with the
    phase and quadrant it models.
    """
    components: Tuple[Component, ...]
    phase: Optional[t.Phase] = None
    quadrant: Optional[str] = None
    fit: Optional[FitReport] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.components:
            raise builtin.ValidationError("mixture needs at least one component")
        total = sum(comp.alpha for comp in self.components)
        if abs(total - 1.0) > 1e-12:
            raise builtin.ValidationError(f"mixture weights sum to {total}")
        if any(not (0 < comp.alpha <= 1) for comp in self.components):
            raise builtin.ValidationError("mixture weights must lie in (0, 1]")

    @property
    def c(self) -> int:
        return len(self.components)

    @property
    def d(self) -> int:
        return int(np.size(self.components[0].mu))

    @property
    def alphas(self) -> np.ndarray:
        return np.array([comp.alpha for comp in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([np.asarray(comp.mu, dtype=np.float64) for comp in self.components])

    @property
    def covariances(self) -> np.ndarray:
        return np.array([np.asarray(comp.sigma, dtype=np.float64) for comp in self.components])

    def withLabels(self, phase: Optional[t.Phase] = None,
                   quadrant: Optional[str] = None) -> "MixtureModel":
        return replace(self, phase=phase, quadrant=quadrant)


@dataclass(eq=False)
class Responsibilities:
    """(n, c) posterior component memberships."""
    matrix: np.ndarray

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise builtin.ValidationError("responsibilities must be a matrix")
        if self.matrix.size and not np.allclose(self.matrix.sum(axis=1), 1.0,
                                                rtol=0, atol=1e-9):
            raise builtin.ValidationError("responsibility rows must sum to 1")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape  # type: ignore


@dataclass(frozen=True, eq=False)
class SizeSelection:
    """Outcome of a model size sweep.

    Attributes
    ----------
    - best
        chosen component count
    - model
        the fit at that count
    - curve
        criterion value per component count
    - seconds
        wall-clock fitting time per component count
    - criterion
        'bic' or 'aic'
    """
    best: int
    model: MixtureModel
    curve: Dict[int, float]
    seconds: Dict[int, float]
    criterion: str = 'bic'


@dataclass(frozen=True)
class EvaluationRow:
    """Summed Hellinger distances and KL divergences from a test sample's
    bootstrap approximations to every phase model.
    """
    sample_id: str
    phase: Optional[str]
    hellinger: Dict[str, float]
    kl: Dict[str, float]
    predicted: str
