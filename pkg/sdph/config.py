"""config
Pipeline configuration: defaults, a flat TOML file, and flag overrides.

PipelineConfig
    Every tunable constant of the pipeline

loadConfig(path) -> PipelineConfig
    Reads a TOML file; unknown keys and bad values raise ConfigError
"""

from dataclasses import dataclass, field, fields, replace
import math
from pathlib import Path
import sys
from typing import Any, Dict, Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import builtin

CLUSTERINGS = ('kmeans', 'gmm', 'clara')


@dataclass(frozen=True)
class PipelineConfig:
    """Pipeline parameters. All randomness flows from seed."""
    seed: int = 42
    persistence_tau: float = builtin.PERSISTENCE_TAU
    kde_sigma: float = builtin.KDE_SIGMA
    kde_resolution: Tuple[int, int] = (100, 100)
    grid_spacing: int = builtin.GRID_SPACING
    ball_r_xy: float = builtin.BALL_R_XY
    ball_rz_fraction: float = builtin.BALL_RZ_FRACTION
    phase_sizes: Dict[str, int] = field(default_factory=lambda: dict(builtin.PHASE_SIZES))
    bootstrap_b: int = builtin.BOOTSTRAP_B
    quadrant: str = 'PH1NW'
    n_clusters: int = 3
    clustering: str = 'kmeans'
    covariance_floor: float = 0.05
    size_range: Tuple[int, int] = builtin.SAMPLE_SIZE_RANGE
    em_tol: float = builtin.EM_TOL
    em_max_iter: int = builtin.EM_MAX_ITER
    phantom_dims: Tuple[int, int, int] = (64, 64, 64)
    phantoms_per_class: int = 10
    chunk_grid: Tuple[int, int, int] = (1, 1, 1)
    cut_height: Optional[float] = None
    output_dir: str = 'sdph-out'

    def __post_init__(self) -> None:
        for name in ('kde_resolution', 'size_range', 'phantom_dims', 'chunk_grid'):
            object.__setattr__(self, name, tupleOf(name, getattr(self, name)))
        object.__setattr__(self, 'phase_sizes', sizesOf(self.phase_sizes))
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not (0 <= self.seed < 2**64):
            raise builtin.ConfigError("expected an integer in [0, 2^64)", 'seed')
        for name in ('persistence_tau', 'kde_sigma', 'ball_r_xy', 'ball_rz_fraction',
                     'covariance_floor', 'em_tol'):
            positiveElseError(name, getattr(self, name))
        for name in ('grid_spacing', 'bootstrap_b', 'n_clusters', 'em_max_iter',
                     'phantoms_per_class'):
            countElseError(name, getattr(self, name))
        for name in ('kde_resolution', 'phantom_dims', 'chunk_grid', 'size_range'):
            for value in getattr(self, name):
                countElseError(name, value)
        if min(self.kde_resolution) < 2:
            raise builtin.ConfigError("resolution must be at least 2x2", 'kde_resolution')
        if self.size_range[0] > self.size_range[1]:
            raise builtin.ConfigError("expected min <= max", 'size_range')
        if self.quadrant not in builtin.CLASSIFIABLE:
            raise builtin.ConfigError(
                f"expected one of {', '.join(builtin.CLASSIFIABLE)}", 'quadrant')
        if self.clustering not in CLUSTERINGS:
            raise builtin.ConfigError(f"expected one of {', '.join(CLUSTERINGS)}", 'clustering')
        if self.cut_height is not None:
            positiveElseError('cut_height', self.cut_height)

    def withOverrides(self, **overrides: Any) -> "PipelineConfig":
        """Copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise builtin.ConfigError("unknown key", sorted(unknown)[0])
        return replace(self, **changes)

    def asDict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def tupleOf(key: str, value: Any) -> tuple:
    if isinstance(value, (str, bytes)) or not hasattr(value, '__iter__'):
        raise builtin.ConfigError("expected a list", key)
    return tuple(value)


def sizesOf(value: Any) -> Dict[str, int]:
    if not isinstance(value, Mapping):
        raise builtin.ConfigError("expected a table of phase sizes", 'phase_sizes')
    sizes = {}
    for phase, size in value.items():
        if phase not in builtin.PHASES:
            raise builtin.ConfigError(f"unknown phase {phase!r}", 'phase_sizes')
        countElseError('phase_sizes', size)
        sizes[phase] = size
    return sizes


def positiveElseError(key: str, value: Any) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)) \
            or not math.isfinite(value) or value <= 0:
        raise builtin.ConfigError(f"expected a positive number, got {value!r}", key)


def countElseError(key: str, value: Any) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise builtin.ConfigError(f"expected an integer >= 1, got {value!r}", key)


def loadConfig(path: Optional[str] = None) -> PipelineConfig:
    """Reads a flat TOML file over the defaults; None gives the defaults."""
    if path is None:
        return PipelineConfig()
    try:
        with open(Path(path), 'rb') as f:
            data = tomllib.load(f)
    except OSError as err:
        raise builtin.ConfigError(f"cannot read {path}: {err.strerror}")
    except tomllib.TOMLDecodeError as err:
        raise builtin.ConfigError(f"{path}: {err}")
    known = {f.name for f in fields(PipelineConfig)}
    for key in data:
        if key not in known:
            raise builtin.ConfigError("unknown key", key)
    return PipelineConfig(**data)
