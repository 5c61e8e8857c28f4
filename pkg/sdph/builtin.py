"""Errors and constants used throughout sdph.
"""

# Errors

class SDPHError(Exception):
    """Base exception class for all sdph errors."""
    exitCode = 1

    def __init__(self, msg, source=None) -> None:
        super().__init__(msg)
        self.source = source

    def msg(self) -> str:
        return self.args[0]

    def report(self) -> str:
        """Returns the error source and message as a formatted string"""
        if self.source is None:
            return self.msg()
        return f"{self.source}: {self.msg()}"

class ValidationError(SDPHError):
    """Invalid input: bad arguments, files or configuration."""
    exitCode = 1

class NumericError(SDPHError):
    """A numerical procedure could not produce a valid result."""
    exitCode = 2


# phantom
class BallOutOfBounds(ValidationError):
    """Ball does not fit inside the volume with a one voxel margin."""

class TorusOutOfBounds(ValidationError):
    """Torus does not fit inside the volume with a one voxel margin."""

class InvalidGeometry(ValidationError):
    """Torus ring radius must exceed tube radius."""

class DegenerateSpec(ValidationError):
    """Phantom spec is invalid or produced no usable volume."""

# sdt
class EmptyVolume(ValidationError):
    """Volume has no occupied voxel."""

# cubical
class TooLarge(ValidationError):
    """Complex too large for the brute-force oracle."""

class InvalidChunking(ValidationError):
    """Chunk grid does not divide the field."""

# diagram
class EssentialPoint(ValidationError):
    """Operation needs a finite persistence point."""

class ZeroBoundary(ValidationError):
    """Birth or death is exactly zero."""

class ImpossibleQuadrant(ValidationError):
    """Degree and sign pattern cannot occur in a signed distance diagram."""

class WrongQuadrant(ValidationError):
    """Aspect ratio requested for a point in the wrong quadrant."""

class DegenerateDenominator(ValidationError):
    """Aspect ratio denominator is zero."""

class MissingAnchors(ValidationError):
    """Diagram points lack birth/death cells."""

# texture_local
class TooFewRows(ValidationError):
    """Matrix has too few rows for the operation."""

class InvalidK(ValidationError):
    """Cluster count is out of range."""

# texture_global
class EmptyPointSet(ValidationError):
    """No points to estimate a density from."""

class GridMismatch(ValidationError):
    """Density grids differ in bounds or resolution."""

class NotSymmetric(ValidationError):
    """Distance matrix is not square, symmetric with zero diagonal."""

class NegativeDistance(ValidationError):
    """Distance matrix has negative entries."""

# mixture
class TooFewPoints(ValidationError):
    """Fewer points than mixture components."""

class ExcludedQuadrant(ValidationError):
    """Quadrant is not used for classification."""

class NotSPD(NumericError):
    """Covariance is not symmetric positive definite."""

class NumericalUnderflow(NumericError):
    """Every component log-density is -inf for some point."""

class EmptyComponent(NumericError):
    """A mixture component received no responsibility."""

class GridTooCoarse(NumericError):
    """Integration grid does not hold the density mass."""

class MonotonicityViolation(NumericError):
    """EM log-likelihood decreased."""

# cli
class FormatError(ValidationError):
    """Input file does not parse."""

    def __init__(self, msg, file=None, line=None) -> None:
        super().__init__(msg, source=file)
        self.file = file
        self.line = line

    def report(self) -> str:
        where = str(self.file) if self.file is not None else "<input>"
        if self.line is not None:
            where += f":{self.line}"
        return f"{where}: {self.msg()}"

class ConfigError(ValidationError):
    """Invalid configuration value."""

    def __init__(self, msg, key=None) -> None:
        super().__init__(msg, source=key)
        self.key = key



# Quadrants
# Seven birth/death sign patterns of a signed distance diagram, with the
# critical sizes each pattern pairs.

QUADRANTS = (
    'PH0SW', 'PH0NW',
    'PH1SW', 'PH1NW', 'PH1NE',
    'PH2NW', 'PH2NE',
)

PAIRINGS = {
    'PH0SW': ('r0', 'r1'),
    'PH0NW': ('r0', 'g1'),
    'PH1SW': ('r1', 'r2'),
    'PH1NW': ('r1', 'g2'),
    'PH1NE': ('g1', 'g2'),
    'PH2NW': ('r2', 'g3'),
    'PH2NE': ('g2', 'g3'),
}

# Artifacts of piecewise computation / trapped bubbles
UNCLASSIFIABLE = ('PH0NW', 'PH2NW')

CLASSIFIABLE = tuple(q for q in QUADRANTS if q not in UNCLASSIFIABLE)

ASPECT_KINDS = ('undulation', 'loop', 'waviness')

# Phases, in tie-breaking order
PHASES = ('O', 'I', 'II')

PHANTOM_CLASSES = ('thick-sparse', 'thin-dense', 'thin-dilated')

# Phantom class standing in for each phase in the synthetic study
CLASS_PHASE = {
    'thick-sparse': 'O',
    'thin-dense': 'I',
    'thin-dilated': 'II',
}



# Defaults

PERSISTENCE_TAU = 0.5
KDE_SIGMA = 0.5
GRID_SPACING = 5
BALL_R_XY = 40.0
BALL_RZ_FRACTION = 0.2
PHASE_SIZES = {'O': 3, 'I': 4, 'II': 5}
BOOTSTRAP_B = 50
SIZE_RANGE = (2, 20)
SAMPLE_SIZE_RANGE = (2, 6)
COVARIANCE_FLOOR = 1e-6
EM_TOL = 1e-6
EM_MAX_ITER = 500
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-6
BRUTEFORCE_MAX_CELLS = 10**5
EXHAUSTIVE_PAM_LIMIT = 5000
DENSITY_FLOOR = 1e-300



# Features
# Order of the 15 local texture features.

FEATURE_NAMES = (
    'mean_r0', 'std_r0',
    'mean_r1', 'std_r1',
    'mean_g2', 'std_g2',
    'mean_g3', 'std_g3',
    'mean_undulation', 'std_undulation',
    'mean_loop', 'std_loop',
    'mean_waviness', 'std_waviness',
    'std_r1_g2',
)



# File magic

VOLUME_MAGIC = b"SDPHVOL1\n"
FIELD_MAGIC = b"SDPHFLD1\n"

DIAGRAM_HEADER = ('degree', 'birth', 'death',
                  'bx', 'by', 'bz', 'dx', 'dy', 'dz', 'essential')
QUADRANT_HEADER = ('degree', 'quadrant', 'birth', 'death',
                   'size1', 'size2', 'weight')
EVALUATION_HEADER = ('sample', 'phase',
                     'dist_O', 'dist_I', 'dist_II', 'predicted')
