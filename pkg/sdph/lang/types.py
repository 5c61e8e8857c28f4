"""types.py

Attribute types used in sdph objects.
"""

from typing import (
    Literal,
    Optional,
    Tuple,
)

__all__ = [
    'AspectKind',
    'Axis',
    'Bounds',
    'Coord',
    'Dims',
    'Phase',
    'PhantomClass',
    'Quadrant',
    'Resolution',
    'Spacing',
    'OptCoord',
]

Coord = Tuple[int, int, int]  # voxel (x, y, z)
OptCoord = Optional[Coord]
Dims = Tuple[int, int, int]  # (nx, ny, nz)
Spacing = Tuple[float, float, float]  # micrometres per voxel

Bounds = Tuple[float, float, float, float]  # (bmin, bmax, dmin, dmax)
Resolution = Tuple[int, int]  # (nb, nd)

Axis = Literal['x', 'y', 'z']
Quadrant = Literal['PH0SW', 'PH0NW', 'PH1SW', 'PH1NW', 'PH1NE',
                   'PH2NW', 'PH2NE']
Phase = Literal['O', 'I', 'II']
PhantomClass = Literal['thick-sparse', 'thin-dense', 'thin-dilated']
AspectKind = Literal['undulation', 'loop', 'waviness']
