"""lang
This package defines the entities and types used by sdph.

types.py contains attribute type aliases used in object.py.
object.py contains the data objects passed between pipeline stages.
"""

# Merge namespace
from .object import *
from .types import *

from . import (
    object as o,
    types as t,
)
