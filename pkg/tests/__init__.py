import contextlib
import io
import os
from typing import List, Sequence, Tuple

import numpy as np

import sdph
from sdph import lang

# Full-size acceptance runs are opt-in
SLOW = os.environ.get('SDPH_SLOW_TESTS') == '1'


def trials(fast: int, slow: int) -> int:
    """Number of random trials to run."""
    return slow if SLOW else fast


def volumeOf(voxels, spacing=(1.0, 1.0, 1.0)) -> lang.BinaryVolume:
    """BinaryVolume from a bool array indexed [z, y, x]."""
    voxels = np.asarray(voxels, dtype=bool)
    nz, ny, nx = voxels.shape
    return lang.BinaryVolume((nx, ny, nz), tuple(spacing), voxels)


def fieldOf(values, spacing=(1.0, 1.0, 1.0)) -> lang.ScalarField:
    """ScalarField from an array indexed [z, y, x]."""
    values = np.asarray(values, dtype=np.float64)
    nz, ny, nx = values.shape
    return lang.ScalarField((nx, ny, nz), tuple(spacing), values)


def randomVolume(seed: int, size: int, p: float = 0.5) -> lang.BinaryVolume:
    """Random cube with at least one occupied voxel."""
    rng = np.random.default_rng(seed)
    voxels = rng.random((size, size, size)) < p
    voxels[size // 2, size // 2, size // 2] = True
    return volumeOf(voxels)


def randomIntegerField(seed: int, size: int = 5) -> lang.ScalarField:
    rng = np.random.default_rng(seed)
    return fieldOf(rng.integers(-5, 6, size=(size, size, size)).astype(np.float64))


def intervals(diagram: lang.Diagram) -> List[Tuple[int, float, float]]:
    """Sorted (degree, birth, death) multiset of a diagram."""
    return sorted((p.degree, p.birth, p.death) for p in diagram)


def withDegree(diagram: lang.Diagram, degree: int) -> List[Tuple[float, float]]:
    return sorted((p.birth, p.death) for p in diagram.inDegree(degree))


def capture(argv: Sequence[str]) -> Tuple[int, str, str]:
    """
    Runs the sdph console entry point.

    Return
    ------
    exit code, captured stdout, captured stderr
    """
    out, err = io.StringIO(), io.StringIO()
    code = 0
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            sdph.main(list(argv))
        except SystemExit as exit:
            code = exit.code if isinstance(exit.code, int) else 1
    return code, out.getvalue(), err.getvalue()
