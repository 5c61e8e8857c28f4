"""cubical
Sublevel-set cubical persistent homology of a scalar field, degrees 0-2.

persistence(field) -> Diagram
    gudhi backend, with birth and death voxel anchors

persistence_bruteforce(field) -> Diagram
    Z/2 boundary matrix reduction over the full cubical complex

persistence_chunked(field, chunk_grid) -> [Diagram]
    Per-chunk diagrams with whole-field anchors

Voxels are the top-dimensional cells; every lower cell takes the minimum
value of the voxels it bounds. Zero-persistence pairs are not diagram
points.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Set, Tuple

import gudhi
import numpy as np

from . import builtin, lang, system

logger = logging.getLogger(__name__)


# Helper functions


def anchorOf(flat: int, shape: Tuple[int, int, int],
             origin: lang.Coord = (0, 0, 0)) -> lang.Coord:
    """Whole-field (x, y, z) of a flat C-order voxel index."""
    z, y, x = np.unravel_index(int(flat), shape)
    ox, oy, oz = origin
    return (int(x) + ox, int(y) + oy, int(z) + oz)


def intervalsMatch(left: Sequence[Tuple[float, float]],
                   right: Sequence[Tuple[float, float]]) -> bool:
    return sorted(left) == sorted(right)


def diagramOf(values: np.ndarray, origin: lang.Coord, field: lang.ScalarField,
              source_id: str, boundary_artifacts: bool = False) -> lang.Diagram:
    """Runs gudhi on values (indexed [z, y, x]) and anchors every pair."""
    flat = np.ascontiguousarray(values, dtype=np.float64).ravel()
    # gudhi reads cells first-index-fastest, so dimensions go (nx, ny, nz);
    # its cell indices are then C-order indices into values.
    complex_ = gudhi.CubicalComplex(dimensions=list(values.shape[::-1]),
                                    top_dimensional_cells=flat)
    complex_.persistence(homology_coeff_field=2, min_persistence=0)
    regular, essential = complex_.cofaces_of_persistence_pairs()

    points = []
    for degree in range(3):
        pairs = regular[degree] if degree < len(regular) else np.empty((0, 2), dtype=int)
        found = []
        for b, d in np.asarray(pairs, dtype=np.int64).reshape(-1, 2):
            birth, death = float(flat[b]), float(flat[d])
            if not death > birth:
                continue
            found.append((birth, death))
            points.append(lang.PersistencePoint(
                degree, birth, death,
                anchorOf(b, values.shape, origin),
                anchorOf(d, values.shape, origin),
            ))
        expected = [
            (float(b), float(d))
            for b, d in complex_.persistence_intervals_in_dimension(degree)
            if not math.isinf(d) and d > b
        ]
        if not intervalsMatch(found, expected):
            raise builtin.NumericError(
                f"degree {degree} cell anchors disagree with persistence intervals",
                source_id or None)
        cells = essential[degree] if degree < len(essential) else ()
        for b in np.asarray(cells, dtype=np.int64).reshape(-1):
            points.append(lang.PersistencePoint(
                degree, float(flat[b]), math.inf,
                anchorOf(b, values.shape, origin), None,
            ))
    return lang.Diagram(
        tuple(points),
        source_id=source_id,
        dims=field.dims,
        spacing=field.spacing,
        origin=origin,
        boundary_artifacts=boundary_artifacts,
        seed=field.seed,
    )


# Persistence


def persistence(field: lang.ScalarField, source_id: str = '') -> lang.Diagram:
    """Diagram of the sublevel filtration of field."""
    return diagramOf(field.values, (0, 0, 0), field, source_id)


def chunkBounds(n: int, parts: int) -> List[Tuple[int, int]]:
    """Near-equal [start, stop) ranges splitting n into parts."""
    sizes = [len(a) for a in np.array_split(np.arange(n), parts)]
    edges = [0] + [int(e) for e in np.cumsum(sizes)]
    return list(zip(edges[:-1], edges[1:]))


def persistence_chunked(field: lang.ScalarField,
                        chunk_grid: Tuple[int, int, int],
                        source_id: str = '') -> List[lang.Diagram]:
    """Splits field into a grid of axis-aligned chunks and computes one
    diagram per chunk, ordered x-fastest by chunk index.
    Cuts create spurious components and loops; diagrams of a real split
    are flagged with boundary_artifacts.
    """
    if len(chunk_grid) != 3:
        raise builtin.InvalidChunking(f"chunk grid needs 3 counts, got {chunk_grid}")
    for count, n, axis in zip(chunk_grid, field.dims, 'xyz'):
        if not (1 <= count <= n):
            raise builtin.InvalidChunking(
                f"{count} chunks along {axis} for {n} voxels")
    cx, cy, cz = (int(c) for c in chunk_grid)
    artifacts = (cx, cy, cz) != (1, 1, 1)
    if artifacts:
        logger.warning(
            "chunked persistence %s of %s: cut boundaries create spurious "
            "PH0 NW points and essential classes", (cx, cy, cz), field.dims)

    jobs = [
        (xr, yr, zr)
        for zr in chunkBounds(field.dims[2], cz)
        for yr in chunkBounds(field.dims[1], cy)
        for xr in chunkBounds(field.dims[0], cx)
    ]

    def run(job) -> lang.Diagram:
        (x0, x1), (y0, y1), (z0, z1) = job
        values = field.values[z0:z1, y0:y1, x0:x1]
        return diagramOf(values, (x0, y0, z0), field, source_id, artifacts)

    return system.parallelMap(run, jobs)


# Brute-force oracle


def cell_filtration(field: lang.ScalarField) -> Tuple[np.ndarray, np.ndarray]:
    """Values and dimensions of every cell of the cubical complex, as
    arrays over doubled coordinates indexed [z, y, x].
    Odd doubled coordinates span a voxel; a cell's dimension is its
    number of odd coordinates.
    """
    shape = tuple(2 * n + 1 for n in field.values.shape)
    values = np.full(shape, math.inf)
    values[1::2, 1::2, 1::2] = field.values
    for axis in range(3):
        padded = np.moveaxis(values, axis, 0)
        even = padded[0::2]
        lower = np.full_like(even, math.inf)
        upper = np.full_like(even, math.inf)
        lower[1:] = padded[1::2]
        upper[:-1] = padded[1::2]
        even[...] = np.minimum(even, np.minimum(lower, upper))
    grids = np.indices(shape)
    dims = np.sum(grids % 2, axis=0)
    return values, dims


def lowestVoxel(coord: Tuple[int, int, int], doubled: np.ndarray) -> Tuple[int, int, int]:
    """(z, y, x) voxel of lowest value among those incident to a cell,
    ties to the lexicographically smallest.
    """
    choices = []
    for c, n in zip(coord, doubled.shape):
        if c % 2:
            choices.append([c])
        else:
            choices.append([v for v in (c - 1, c + 1) if 0 < v < n])
    best: Optional[Tuple[float, Tuple[int, int, int]]] = None
    for z in choices[0]:
        for y in choices[1]:
            for x in choices[2]:
                key = (float(doubled[z, y, x]), (z, y, x))
                if best is None or key < best:
                    best = key
    assert best is not None
    z, y, x = best[1]
    return (z // 2, y // 2, x // 2)


def persistence_bruteforce(field: lang.ScalarField, source_id: str = '') -> lang.Diagram:
    """Same contract as persistence, by reducing the full boundary matrix
    with the twist optimisation.
    """
    total = math.prod(2 * n + 1 for n in field.dims)
    if total > builtin.BRUTEFORCE_MAX_CELLS:
        raise builtin.TooLarge(
            f"{total} cells exceed the oracle limit of {builtin.BRUTEFORCE_MAX_CELLS}")
    values, dims = cell_filtration(field)
    shape = values.shape
    flatValues = values.ravel()
    flatDims = dims.ravel()
    order = sorted(range(flatValues.size),
                   key=lambda i: (flatValues[i], flatDims[i], i))
    position = {cell: k for k, cell in enumerate(order)}

    def boundary(cell: int) -> Set[int]:
        coord = np.unravel_index(cell, shape)
        faces = set()
        for axis in range(3):
            if coord[axis] % 2:
                for step in (-1, 1):
                    face = list(coord)
                    face[axis] += step
                    faces.add(position[int(np.ravel_multi_index(face, shape))])
        return faces

    columns: Dict[int, Set[int]] = {}
    pivotOf: Dict[int, int] = {}
    cleared: Set[int] = set()
    for degree in (3, 2, 1):
        for k, cell in enumerate(order):
            if flatDims[cell] != degree or k in cleared:
                continue
            column = boundary(cell)
            while column:
                low = max(column)
                if low not in pivotOf:
                    break
                column ^= columns[pivotOf[low]]
            if column:
                low = max(column)
                pivotOf[low] = k
                columns[k] = column
                cleared.add(low)

    killed = set(pivotOf.values())
    points = []
    for k, cell in enumerate(order):
        degree = int(flatDims[cell])
        if degree > 2 or k in killed:
            continue
        coord = np.unravel_index(cell, shape)
        z, y, x = lowestVoxel(tuple(int(c) for c in coord), values)  # type: ignore
        birthCell = (x, y, z)
        birth = float(flatValues[cell])
        if k in pivotOf:
            killer = order[pivotOf[k]]
            death = float(flatValues[killer])
            if not death > birth:
                continue
            kc = np.unravel_index(killer, shape)
            dz, dy, dx = lowestVoxel(tuple(int(c) for c in kc), values)  # type: ignore
            points.append(lang.PersistencePoint(degree, birth, death, birthCell, (dx, dy, dz)))
        else:
            points.append(lang.PersistencePoint(degree, birth, math.inf, birthCell, None))
    return lang.Diagram(
        tuple(points),
        source_id=source_id,
        dims=field.dims,
        spacing=field.spacing,
        seed=field.seed,
    )
