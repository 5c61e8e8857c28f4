"""diagram
Quadrant decomposition of signed distance diagrams.

quadrant_of(point) -> QuadrantPoint
    Sign pattern, critical sizes and weight of a finite point

aspect_ratio(qp, kind) -> float
    Undulation, loop or waviness ratio

filter_persistence(diagram, tau) -> Diagram
    Drops short-lived points

restrict_to_ball(diagram, ball) -> Diagram
    Keeps points created and destroyed inside an ellipsoid

quadrant_points(diagram) -> [QuadrantPoint]
select_quadrant(diagram, quadrant) -> WeightedPoints
    Whole-diagram decomposition used by the texture and mixture stages
"""

import logging
from typing import Dict, List, Tuple

import numpy as np

from . import builtin, lang

logger = logging.getLogger(__name__)

# (degree, birth < 0, death < 0) -> quadrant
SIGN_PATTERNS: Dict[Tuple[int, bool, bool], str] = {
    (0, True, True): 'PH0SW',
    (0, True, False): 'PH0NW',
    (1, True, True): 'PH1SW',
    (1, True, False): 'PH1NW',
    (1, False, False): 'PH1NE',
    (2, True, False): 'PH2NW',
    (2, False, False): 'PH2NE',
}

# Quadrant each aspect ratio is defined on
RATIO_QUADRANT = {
    'undulation': 'PH0SW',
    'loop': 'PH1NW',
    'waviness': 'PH1NE',
}


def quadrant_of(point: lang.PersistencePoint) -> lang.QuadrantPoint:
    """Labels a finite point with its quadrant and critical sizes."""
    if point.essential:
        raise builtin.EssentialPoint(
            f"degree {point.degree} point born at {point.birth} never dies")
    if point.birth == 0 or point.death == 0:
        raise builtin.ZeroBoundary(
            f"point ({point.birth}, {point.death}) has a zero boundary")
    key = (point.degree, point.birth < 0, point.death < 0)
    if key not in SIGN_PATTERNS:
        raise builtin.ImpossibleQuadrant(
            f"degree {point.degree} point ({point.birth}, {point.death}) "
            "cannot occur in a signed distance diagram")
    return lang.QuadrantPoint(
        quadrant=SIGN_PATTERNS[key],  # type: ignore
        degree=point.degree,
        birth=point.birth,
        death=point.death,
        sizes=(abs(point.birth), abs(point.death)),
        birth_cell=point.birth_cell,
        death_cell=point.death_cell,
    )


def aspect_ratio(qp: lang.QuadrantPoint, kind: str) -> float:
    """undulation = 1 - r1/r0 on PH0SW
    loop = g2/r1 on PH1NW
    waviness = 1 - g1/g2 on PH1NE
    """
    if kind not in RATIO_QUADRANT:
        raise builtin.ValidationError(f"unknown aspect ratio {kind!r}")
    if qp.quadrant != RATIO_QUADRANT[kind]:
        raise builtin.WrongQuadrant(
            f"{kind} ratio needs a {RATIO_QUADRANT[kind]} point, got {qp.quadrant}")
    if kind == 'undulation':
        r0, r1 = qp.sizes
        if r0 == 0:
            raise builtin.DegenerateDenominator("r0 is zero")
        return 1.0 - r1 / r0
    if kind == 'loop':
        r1, g2 = qp.sizes
        if r1 == 0:
            raise builtin.DegenerateDenominator("r1 is zero")
        return g2 / r1
    g1, g2 = qp.sizes
    if g2 == 0:
        raise builtin.DegenerateDenominator("g2 is zero")
    return 1.0 - g1 / g2


def filter_persistence(diagram: lang.Diagram,
                       tau: float = builtin.PERSISTENCE_TAU) -> lang.Diagram:
    """Keeps points with persistence >= tau; essential points stay."""
    if not tau >= 0:
        raise builtin.ValidationError(f"tau must be nonnegative, got {tau}")
    return diagram.withPoints(
        [p for p in diagram if p.essential or p.persistence >= tau])


def anchorsOf(points) -> Tuple[np.ndarray, np.ndarray]:
    births = np.array([p.birth_cell for p in points], dtype=np.float64).reshape(-1, 3)
    deaths = np.array([p.death_cell for p in points], dtype=np.float64).reshape(-1, 3)
    return births, deaths


def restrict_to_ball(diagram: lang.Diagram, ball: lang.Ellipsoid) -> lang.Diagram:
    """Keeps finite points whose birth and death cells both lie in ball."""
    finite = diagram.finite()
    if any(p.birth_cell is None or p.death_cell is None for p in finite):
        raise builtin.MissingAnchors(
            "diagram points lack birth/death cells", diagram.source_id or None)
    if not finite:
        return diagram.withPoints(())
    births, deaths = anchorsOf(finite)
    keep = ball.contains(births) & ball.contains(deaths)
    return diagram.withPoints([p for p, k in zip(finite, keep) if k])


def quadrant_points(diagram: lang.Diagram) -> List[lang.QuadrantPoint]:
    """Quadrant decomposition of every finite point.
    Points with no quadrant are skipped and logged.
    """
    result = []
    skipped = 0
    for point in diagram.finite():
        try:
            result.append(quadrant_of(point))
        except (builtin.ZeroBoundary, builtin.ImpossibleQuadrant):
            skipped += 1
    if skipped:
        logger.debug("%s: skipped %d points outside the seven quadrants",
                     diagram.source_id or 'diagram', skipped)
    return result


def select_quadrant(diagram: lang.Diagram, quadrant: str) -> lang.WeightedPoints:
    """(birth, death) points of one quadrant weighted by persistence."""
    if quadrant not in builtin.QUADRANTS:
        raise builtin.ValidationError(f"unknown quadrant {quadrant!r}")
    chosen = [qp for qp in quadrant_points(diagram) if qp.quadrant == quadrant]
    y = np.array([(qp.birth, qp.death) for qp in chosen], dtype=np.float64).reshape(-1, 2)
    w = np.array([qp.weight for qp in chosen], dtype=np.float64)
    return lang.WeightedPoints(y, w)
