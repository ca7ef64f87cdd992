"""Borel set descriptors over C^n and dyadic box covers of preimages under + and x.

Membership is exact. The ball tests used by the cover are conservative: `ball_inside`
only answers True when the closed ball certainly lies in the region, `ball_disjoint`
only when it certainly misses it.
"""
import logging
import math

import numpy as np

from config import MAX_COVER_BOXES, MAX_COVER_DEPTH
from exceptions import DimensionMismatchError
from models import AtomicMeasure, BoxCover, MapDescriptor, Region
from engine.engine_maps import apply_map_points

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


def _pairs(values) -> list[tuple[float, float]]:
    return [(complex(v).real, complex(v).imag) for v in np.atleast_1d(values)]


def box(center: complex, delta: float) -> Region:
    """Half-open square I(z, delta): Re(z) - delta < Re(w) <= Re(z) + delta, same for Im."""
    return Region(kind='box', dim=1, center=_pairs(center), radius=delta)


def open_ball(center, radius: float) -> Region:
    center = _pairs(center)
    return Region(kind='open_ball', dim=len(center), center=center, radius=radius)


def closed_ball(center, radius: float) -> Region:
    center = _pairs(center)
    return Region(kind='closed_ball', dim=len(center), center=center, radius=radius)


def full(dim: int = 1) -> Region:
    return Region(kind='full', dim=dim)


def empty(dim: int = 1) -> Region:
    return Region(kind='empty', dim=dim)


def union(*regions: Region) -> Region:
    return Region(kind='union', dim=regions[0].dim, children=list(regions))


def intersection(*regions: Region) -> Region:
    return Region(kind='intersection', dim=regions[0].dim, children=list(regions))


def complement(region: Region) -> Region:
    return Region(kind='complement', dim=region.dim, children=[region])


def product(*regions: Region) -> Region:
    return Region(kind='product', dim=sum(r.dim for r in regions), children=list(regions))


def preimage(region: Region, mapping: MapDescriptor) -> Region:
    return Region(kind='preimage', dim=mapping.arity, children=[region], mapping=mapping)


def conjugate(region: Region) -> Region:
    """B* = {conj(z) : z in B}."""
    return Region(kind='conjugate', dim=region.dim, children=[region])


def shrinking_balls(center, count: int, start: int = 0) -> list[Region]:
    """Open balls of radius 2^-k around a point, k = start, ..., start + count - 1."""
    return [open_ball(center, 2.0 ** -k) for k in range(start, start + count)]


def _as_points(region: Region, points) -> tuple[np.ndarray, bool]:
    points = np.asarray(points, dtype=complex)
    single = points.ndim <= 1 and points.size == region.dim
    if points.ndim > 2 or (points.ndim == 2 and points.shape[1] != region.dim) or points.size % region.dim:
        raise DimensionMismatchError(f"region lives in C^{region.dim}, got points of shape {points.shape}")
    return points.reshape(-1, region.dim), single


def _split(region: Region, points: np.ndarray) -> list[np.ndarray]:
    bounds = np.cumsum([0] + [c.dim for c in region.children])
    return [points[:, bounds[i]:bounds[i + 1]] for i in range(len(region.children))]


def _contains(region: Region, points: np.ndarray) -> np.ndarray:
    k = len(points)
    if region.kind == 'box':
        (zr, zi), delta = region.center[0], region.radius
        re, im = points[:, 0].real, points[:, 0].imag
        return (zr - delta < re) & (re <= zr + delta) & (zi - delta < im) & (im <= zi + delta)
    if region.kind in ('open_ball', 'closed_ball'):
        distance = np.linalg.norm(points - region.center_value, axis=1)
        return distance < region.radius if region.kind == 'open_ball' else distance <= region.radius
    if region.kind == 'full':
        return np.ones(k, dtype=bool)
    if region.kind == 'empty':
        return np.zeros(k, dtype=bool)
    if region.kind == 'union':
        result = np.zeros(k, dtype=bool)
        for child in region.children:
            result |= _contains(child, points)
        return result
    if region.kind == 'intersection':
        result = np.ones(k, dtype=bool)
        for child in region.children:
            result &= _contains(child, points)
        return result
    if region.kind == 'complement':
        return ~_contains(region.children[0], points)
    if region.kind == 'product':
        result = np.ones(k, dtype=bool)
        for child, part in zip(region.children, _split(region, points)):
            result &= _contains(child, part)
        return result
    if region.kind == 'preimage':
        return _contains(region.children[0], apply_map_points(region.mapping, points))
    return _contains(region.children[0], points.conj())


def contains(region: Region, points):
    """Exact membership; a single point gives a bool, a k x dim array a bool array."""
    points, single = _as_points(region, points)
    result = _contains(region, points)
    return bool(result[0]) if single else result


def _boundary_distance(region: Region, points: np.ndarray) -> np.ndarray:
    k = len(points)
    if region.kind == 'box':
        (zr, zi), delta = region.center[0], region.radius
        dx = np.abs(points[:, 0].real - zr) - delta
        dy = np.abs(points[:, 0].imag - zi) - delta
        outside = np.hypot(np.maximum(dx, 0), np.maximum(dy, 0))
        inside = np.minimum(-dx, -dy)
        return np.where((dx <= 0) & (dy <= 0), inside, outside)
    if region.kind in ('open_ball', 'closed_ball'):
        return np.abs(np.linalg.norm(points - region.center_value, axis=1) - region.radius)
    if region.kind in ('full', 'empty'):
        return np.full(k, np.inf)
    if region.kind in ('union', 'intersection'):
        result = np.full(k, np.inf)
        for child in region.children:
            result = np.minimum(result, _boundary_distance(child, points))
        return result
    if region.kind == 'product':
        result = np.full(k, np.inf)
        for child, part in zip(region.children, _split(region, points)):
            result = np.minimum(result, _boundary_distance(child, part))
        return result
    if region.kind == 'complement':
        return _boundary_distance(region.children[0], points)
    if region.kind == 'preimage':
        # distance of the image to the target boundary
        return _boundary_distance(region.children[0], apply_map_points(region.mapping, points))
    return _boundary_distance(region.children[0], points.conj())


def boundary_distance(region: Region, points):
    """Distance to the region's boundary (an upper bound for unions and intersections)."""
    points, single = _as_points(region, points)
    result = _boundary_distance(region, points)
    return float(result[0]) if single else result


def bounding_box(region: Region) -> np.ndarray | None:
    """Rows (x_min, x_max, y_min, y_max) per coordinate, infinite where unbounded; None if empty."""
    unbounded = np.tile([-np.inf, np.inf, -np.inf, np.inf], (region.dim, 1))
    if region.kind == 'box':
        (zr, zi), delta = region.center[0], region.radius
        return np.array([[zr - delta, zr + delta, zi - delta, zi + delta]])
    if region.kind in ('open_ball', 'closed_ball'):
        r = region.radius
        return np.array([[zr - r, zr + r, zi - r, zi + r] for zr, zi in region.center])
    if region.kind == 'empty':
        return None
    if region.kind == 'union':
        boxes = [b for b in (bounding_box(c) for c in region.children) if b is not None]
        if not boxes:
            return None
        stacked = np.stack(boxes)
        return np.column_stack([stacked[:, :, 0].min(0), stacked[:, :, 1].max(0),
                                stacked[:, :, 2].min(0), stacked[:, :, 3].max(0)])
    if region.kind == 'intersection':
        result = unbounded
        for child in region.children:
            b = bounding_box(child)
            if b is None:
                return None
            result = np.column_stack([np.maximum(result[:, 0], b[:, 0]), np.minimum(result[:, 1], b[:, 1]),
                                      np.maximum(result[:, 2], b[:, 2]), np.minimum(result[:, 3], b[:, 3])])
        if np.any(result[:, 0] > result[:, 1]) or np.any(result[:, 2] > result[:, 3]):
            return None
        return result
    if region.kind == 'product':
        boxes = [bounding_box(c) for c in region.children]
        if any(b is None for b in boxes):
            return None
        return np.vstack(boxes)
    if region.kind == 'conjugate':
        b = bounding_box(region.children[0])
        return None if b is None else np.column_stack([b[:, 0], b[:, 1], -b[:, 3], -b[:, 2]])
    return unbounded


def _square_distance(region: Region, centers: np.ndarray) -> np.ndarray:
    (zr, zi), delta = region.center[0], region.radius
    dx = np.maximum(np.abs(centers.real - zr) - delta, 0)
    dy = np.maximum(np.abs(centers.imag - zi) - delta, 0)
    return np.hypot(dx, dy)


def ball_inside(region: Region, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """True where the closed ball B(c, r) in C certainly lies inside the region."""
    if region.dim != 1:
        raise DimensionMismatchError("ball tests need a region in C")
    k = len(centers)
    if region.kind == 'box':
        (zr, zi), delta = region.center[0], region.radius
        return ((zr - delta < centers.real - radii) & (centers.real + radii <= zr + delta)
                & (zi - delta < centers.imag - radii) & (centers.imag + radii <= zi + delta))
    if region.kind in ('open_ball', 'closed_ball'):
        reach = np.abs(centers - region.center_value[0]) + radii
        return reach < region.radius if region.kind == 'open_ball' else reach <= region.radius
    if region.kind == 'full':
        return np.ones(k, dtype=bool)
    if region.kind == 'empty':
        return np.zeros(k, dtype=bool)
    if region.kind == 'union':
        result = np.zeros(k, dtype=bool)
        for child in region.children:
            result |= ball_inside(child, centers, radii)
        return result
    if region.kind in ('intersection', 'product'):
        result = np.ones(k, dtype=bool)
        for child in region.children:
            result &= ball_inside(child, centers, radii)
        return result
    if region.kind == 'complement':
        return ball_disjoint(region.children[0], centers, radii)
    if region.kind == 'conjugate':
        return ball_inside(region.children[0], centers.conj(), radii)
    return np.zeros(k, dtype=bool)


def ball_disjoint(region: Region, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """True where the closed ball B(c, r) in C certainly misses the region."""
    if region.dim != 1:
        raise DimensionMismatchError("ball tests need a region in C")
    k = len(centers)
    if region.kind == 'box':
        return _square_distance(region, centers) > radii
    if region.kind in ('open_ball', 'closed_ball'):
        distance = np.abs(centers - region.center_value[0])
        return distance >= region.radius + radii if region.kind == 'open_ball' else distance > region.radius + radii
    if region.kind == 'full':
        return np.zeros(k, dtype=bool)
    if region.kind == 'empty':
        return np.ones(k, dtype=bool)
    if region.kind == 'union':
        result = np.ones(k, dtype=bool)
        for child in region.children:
            result &= ball_disjoint(child, centers, radii)
        return result
    if region.kind in ('intersection', 'product'):
        result = np.zeros(k, dtype=bool)
        for child in region.children:
            result |= ball_disjoint(child, centers, radii)
        return result
    if region.kind == 'complement':
        return ball_inside(region.children[0], centers, radii)
    if region.kind == 'conjugate':
        return ball_disjoint(region.children[0], centers.conj(), radii)
    return np.zeros(k, dtype=bool)


# sign patterns of the 16 children of a box in C^2 = R^4
_CHILD_OFFSETS = np.array([[a, b, c, e] for a in (-1, 1) for b in (-1, 1) for c in (-1, 1) for e in (-1, 1)], dtype=float)


def _level_zero(window: float) -> np.ndarray:
    """Level-0 boxes I(m, 1), m even, tiling [-window, window]^4 (edges on the odd integers)."""
    half = int(math.ceil((window + 1) / 2))
    ticks = np.arange(-2 * half, 2 * half + 1, 2, dtype=float)
    grid = np.stack(np.meshgrid(ticks, ticks, ticks, ticks, indexing='ij'), axis=-1)
    return grid.reshape(-1, 4)


def _image_balls(centers: np.ndarray, delta: float, mapping: str, norm_bound: float | None):
    """Image centers plus (safety radius, rigorous radius) per box."""
    z = centers[:, 0] + 1j * centers[:, 1]
    w = centers[:, 2] + 1j * centers[:, 3]
    reach = SQRT2 * delta
    if mapping == 'add':
        radius = 2 * reach * np.ones(len(centers))
        return z + w, radius, radius
    rigorous = reach * (np.abs(w) + reach) + reach * np.abs(z)
    safety = reach * (norm_bound + np.abs(z))
    return z * w, safety, rigorous


def _in_boxes(centers: np.ndarray, delta: float, points: np.ndarray) -> np.ndarray:
    """m x k membership of (z, w) points in the half-open boxes."""
    coords = np.column_stack([points[:, 0].real, points[:, 0].imag, points[:, 1].real, points[:, 1].imag])
    lower = centers[:, None, :] - delta < coords[None, :, :]
    upper = coords[None, :, :] <= centers[:, None, :] + delta
    return np.all(lower & upper, axis=2)


def dyadic_cover(target: Region, mapping: str, depth: int, norm_bound: float | None = None,
                 window: float | None = None, measure: AtomicMeasure | None = None) -> BoxCover:
    """Disjoint dyadic boxes in C^2 whose image under + (or x) lies safely inside `target`.

    Level L uses half-width 2^-L and cuts every undecided box of level L-1 into 16.
    With a `measure` on C^2 only boxes holding one of its preimage atoms are cut further,
    and the covered share of the preimage mass is reported per level.
    """
    if target.dim != 1:
        raise DimensionMismatchError("cover targets are regions in C")
    if mapping not in ('add', 'multiply'):
        raise ValueError(f"unknown cover map {mapping!r}")
    if not 0 <= depth <= MAX_COVER_DEPTH:
        raise ValueError(f"cover depth must lie in [0, {MAX_COVER_DEPTH}]")
    if mapping == 'multiply' and norm_bound is None:
        raise ValueError("the multiplicative cover needs a norm bound")
    if measure is not None and measure.dim != 2:
        raise DimensionMismatchError("cover measures live on C^2")

    focus = weights = None
    if measure is not None:
        images = measure.points[:, 0] + measure.points[:, 1] if mapping == 'add' else measure.points[:, 0] * measure.points[:, 1]
        hit = contains(target, images.reshape(-1, 1))
        focus, weights = measure.points[hit], measure.weights[hit]

    if window is None:
        if focus is not None and len(focus):
            window = float(np.max(np.abs(np.column_stack([focus.real, focus.imag]))))
        elif norm_bound is not None:
            window = float(norm_bound)
        else:
            bounds = bounding_box(target)
            if bounds is None:
                return BoxCover(boxes=np.zeros((0, 6)), depth=depth, target=target, mapping=mapping,
                                norm_bound=norm_bound, coverage=[1.0] * (depth + 1))
            window = float(np.max(np.abs(bounds)))
            if not np.isfinite(window):
                raise ValueError("cover window needs a bounded target, a norm bound or a measure")

    pending = _level_zero(window)
    emitted, coverage = [], []
    covered = np.zeros(0 if focus is None else len(focus), dtype=bool)
    truncated = False

    for level in range(depth + 1):
        delta = 2.0 ** -level
        if len(pending):
            images, safety, rigorous = _image_balls(pending, delta, mapping, norm_bound)
            inside = ball_inside(target, images, np.maximum(safety, rigorous))
            outside = ball_disjoint(target, images, rigorous)
            done = pending[inside]
            emitted.append(np.column_stack([done, np.full(len(done), delta), np.full(len(done), level)]))
            undecided = pending[~inside & ~outside]
        else:
            done = undecided = np.zeros((0, 4))

        if focus is not None:
            if len(done) and len(focus):
                covered |= _in_boxes(done, delta, focus).any(axis=0)
            coverage.append(float(weights[covered].sum() / weights.sum()) if weights.sum() > 0 else 1.0)
            if len(undecided) and len(focus):
                undecided = undecided[_in_boxes(undecided, delta, focus[~covered]).any(axis=1)]
        logger.debug("cover level %d: %d emitted, %d undecided", level, len(done), len(undecided))

        if level == depth:
            break
        if len(undecided) * 16 > MAX_COVER_BOXES:
            logger.warning("cover truncated at level %d (%d boxes pending)", level, len(undecided) * 16)
            truncated = True
            break
        pending = (undecided[:, None, :] + 0.5 * delta * _CHILD_OFFSETS[None, :, :]).reshape(-1, 4)

    boxes = np.vstack(emitted) if emitted else np.zeros((0, 6))
    order = np.lexsort((boxes[:, 3], boxes[:, 2], boxes[:, 1], boxes[:, 0], boxes[:, 5]))
    return BoxCover(boxes=boxes[order], depth=depth, target=target, mapping=mapping, norm_bound=norm_bound,
                    coverage=coverage, truncated=truncated)


def _ancestor(centers: np.ndarray, level: int) -> np.ndarray:
    """Center of the level-`level` box holding each (interior) point."""
    half = 2.0 ** -level
    # level-0 edges sit on the odd integers; finer edges on multiples of 2 * half
    return np.ceil((centers - 1) / (2 * half)) * (2 * half) + 1 - half


def verify_cover(cover: BoxCover) -> dict:
    """Exact disjointness, safety inclusion and corner images of every box."""
    boxes = cover.boxes
    keys = {tuple(row[[5, 0, 1, 2, 3]]) for row in boxes}
    overlaps = len(boxes) - len(keys)
    for row in boxes:
        level = int(row[5])
        for coarser in range(level):
            if (float(coarser), *_ancestor(row[:4], coarser)) in keys:
                overlaps += 1

    unsafe = corners_outside = 0
    for level in np.unique(boxes[:, 5]) if len(boxes) else []:
        rows = boxes[boxes[:, 5] == level]
        delta = 2.0 ** -level
        images, safety, rigorous = _image_balls(rows[:, :4], delta, cover.mapping, cover.norm_bound)
        unsafe += int(np.sum(~ball_inside(cover.target, images, np.maximum(safety, rigorous))))

        corners = rows[:, None, :4] + delta * _CHILD_OFFSETS[None, :, :]
        z = corners[:, :, 0] + 1j * corners[:, :, 1]
        w = corners[:, :, 2] + 1j * corners[:, :, 3]
        values = (z + w) if cover.mapping == 'add' else (z * w)
        corners_outside += int(np.sum(~contains(cover.target, values.reshape(-1, 1))))

    return {'boxes': len(boxes), 'overlaps': overlaps, 'unsafe': unsafe, 'corners_outside': corners_outside}
