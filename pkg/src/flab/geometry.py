"""Planar annulus geometry: circumcenters, two-annulus rectangles, and the
three-circle region bound.

The central object is the region

    W = {(x, b) in R^2 x [1/2, 2] : b - a <= |x - P| <= b + a for P in {A, B, C}},

the set of circle parameters whose circle passes within ``a`` of all three
points of a separated triangle.  For a triangle with pairwise separation
>= 2c and a < c^2/20, W is confined to a ball of radius 324*a/c^2 around the
circumcenter and to a radius window of the same width around the circumradius.
All inequalities here are closed, and all grid sampling is anchored at the
origin so results are reproducible bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTriangle, HypothesisViolated

# Constant from the rhombus estimate: diam of the planar section of W is at
# most THREE_CIRCLE_K * a / c^2; the full R^3 diameter at most twice that.
THREE_CIRCLE_K = 324.0

# Triangle degeneracy cutoff: |cross(B-A, C-A)| < DEGENERACY_TOL * diam^2.
DEGENERACY_TOL = 1e-12

_B_LO = 0.5
_B_HI = 2.0


def _as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(2)
    if not np.all(np.isfinite(a)):
        raise ValueError("point coordinates must be finite")
    return a


@dataclass(frozen=True)
class CircleParam:
    """A circle S(center, radius), i.e. a point z = (x, r) of R^2 x (0, inf)."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if len(self.center) != 2 or not all(math.isfinite(v) for v in self.center):
            raise ValueError("center must be a finite point of R^2")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("radius must be positive and finite")

    def in_reference_box(self) -> bool:
        """Whether (center, radius) lies in the reference parameter box:
        ||center|| <= 1/4 and radius in [1/2, 2]."""
        return math.hypot(*self.center) <= 0.25 and _B_LO <= self.radius <= _B_HI

    def as_array3(self) -> np.ndarray:
        return np.array([self.center[0], self.center[1], self.radius])


@dataclass(frozen=True)
class Annulus:
    """Closed annulus of halfwidth a around a circle: B(x, r+a) \\ B(x, r-a)."""

    circle: CircleParam
    halfwidth: float

    def __post_init__(self):
        object.__setattr__(self, "halfwidth", float(self.halfwidth))
        if not (0.0 < self.halfwidth < self.circle.radius):
            raise ValueError("need 0 < halfwidth < radius")


def annulus_contains(ann: Annulus, p) -> bool:
    """Closed membership test: radius - a <= ||p - center|| <= radius + a."""
    d = math.hypot(*(_as_point(p) - np.asarray(ann.circle.center)))
    return ann.circle.radius - ann.halfwidth <= d <= ann.circle.radius + ann.halfwidth


def circumcenter(A, B, C):
    """Circumcenter M and circumradius h of the triangle ABC.

    Raises DegenerateTriangle when |cross(B-A, C-A)| < 1e-12 * diam^2.
    """
    A, B, C = _as_point(A), _as_point(B), _as_point(C)
    u = B - A
    v = C - A
    cross = u[0] * v[1] - u[1] * v[0]
    diam = max(np.hypot(*u), np.hypot(*v), np.hypot(*(C - B)))
    if abs(cross) < DEGENERACY_TOL * diam * diam:
        raise DegenerateTriangle("collinear points within tolerance")
    # Perpendicular bisector equations 2(B-A).m = |B|^2-|A|^2 etc., solved in
    # the frame centered at A.
    bu = float(u @ u)
    bv = float(v @ v)
    mx = (bu * v[1] - bv * u[1]) / (2.0 * cross)
    my = (bv * u[0] - bu * v[0]) / (2.0 * cross)
    M = A + np.array([mx, my])
    h = float(np.hypot(mx, my))
    return M, h


@dataclass(frozen=True)
class TriangleFrame:
    """Three points with pairwise separation >= 2*sep_scale, plus the
    degeneracy flag computed at construction."""

    a: tuple
    b: tuple
    c: tuple
    sep_scale: float
    degenerate: bool

    @classmethod
    def create(cls, A, B, C, sep_scale: float) -> "TriangleFrame":
        A, B, C = _as_point(A), _as_point(B), _as_point(C)
        c = float(sep_scale)
        if not (0.0 < c < 1.0):
            raise HypothesisViolated("sep_scale must lie in (0, 1)")
        dmin = min(np.hypot(*(B - A)), np.hypot(*(C - A)), np.hypot(*(C - B)))
        if dmin < 2.0 * c:
            raise HypothesisViolated("pairwise separation below 2*sep_scale")
        u = B - A
        v = C - A
        cross = abs(u[0] * v[1] - u[1] * v[0])
        diam = max(np.hypot(*u), np.hypot(*v), np.hypot(*(C - B)))
        degenerate = cross < DEGENERACY_TOL * diam * diam
        return cls(tuple(A), tuple(B), tuple(C), c, bool(degenerate))

    def points(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)


@dataclass(frozen=True)
class SeparatedRectangle:
    """Rectangle bounding the intersection of two equal-radius annuli.

    Short half-extent (9/2)(a/c) along the segment AB, long half-extent 3
    along the perpendicular bisector.
    """

    center: tuple
    short_half: float
    long_half: float
    short_axis: tuple
    long_axis: tuple

    def contains(self, p) -> bool:
        d = _as_point(p) - np.asarray(self.center)
        return (
            abs(float(d @ np.asarray(self.short_axis))) <= self.short_half
            and abs(float(d @ np.asarray(self.long_axis))) <= self.long_half
        )

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        d = np.asarray(pts, dtype=float) - np.asarray(self.center)
        s = np.abs(d @ np.asarray(self.short_axis))
        l = np.abs(d @ np.asarray(self.long_axis))
        return (s <= self.short_half) & (l <= self.long_half)


def pairwise_rectangle(A, B, a: float, c: float) -> SeparatedRectangle:
    """Rectangle containing S^a(A,b) cap S^a(B,b) for every b in [1/2, 2]."""
    A, B = _as_point(A), _as_point(B)
    a = float(a)
    c = float(c)
    sep = float(np.hypot(*(B - A)))
    if not (0.0 < c < 1.0):
        raise HypothesisViolated("need 0 < c < 1")
    if sep < 2.0 * c:
        raise HypothesisViolated("need ||A-B|| >= 2c")
    if not (0.0 < a < c * c / 20.0):
        raise HypothesisViolated("need 0 < a < c^2/20")
    mid = 0.5 * (A + B)
    short_axis = (B - A) / sep
    long_axis = np.array([-short_axis[1], short_axis[0]])
    return SeparatedRectangle(
        center=tuple(mid),
        short_half=4.5 * a / c,
        long_half=3.0,
        short_axis=tuple(short_axis),
        long_axis=tuple(long_axis),
    )


def sample_two_annulus_points(A, B, a: float, n: int, rng, b_range=(_B_LO, _B_HI)):
    """Draw up to ``n`` points of union over b of S^a(A,b) cap S^a(B,b).

    Sampling is closed-form: draw b, then a radius around A in [b-a, b+a],
    then an angle inside the window where the distance-to-B constraint holds.
    Every returned point is verified against both annuli; draws whose window
    is empty are retried.  Returns (points, b_values); fewer than n rows come
    back only if the intersection is empty for every sampled b.
    """
    A, B = _as_point(A), _as_point(B)
    D = float(np.hypot(*(B - A)))
    phi_ab = math.atan2(B[1] - A[1], B[0] - A[0])
    out = np.empty((0, 2))
    bs = np.empty(0)
    rounds = 0
    while out.shape[0] < n and rounds < 64:
        rounds += 1
        m = 2 * (n - out.shape[0]) + 16
        b = rng.uniform(b_range[0], b_range[1], m)
        r = rng.uniform(b - a, b + a)
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.maximum((r * r + D * D - (b + a) ** 2) / (2.0 * r * D), -1.0)
            hi = np.minimum((r * r + D * D - (b - a) ** 2) / (2.0 * r * D), 1.0)
        good = (r > 0) & (lo <= hi)
        if not np.any(good):
            continue
        b, r, lo, hi = b[good], r[good], lo[good], hi[good]
        cos_psi = rng.uniform(lo, hi)
        sign = np.where(rng.random(cos_psi.size) < 0.5, 1.0, -1.0)
        psi = np.arccos(cos_psi) * sign
        px = A[0] + r * np.cos(phi_ab + psi)
        py = A[1] + r * np.sin(phi_ab + psi)
        da = np.hypot(px - A[0], py - A[1])
        db = np.hypot(px - B[0], py - B[1])
        ok = (
            (da >= b - a) & (da <= b + a) & (db >= b - a) & (db <= b + a)
        )
        out = np.vstack([out, np.column_stack([px[ok], py[ok]])])
        bs = np.concatenate([bs, b[ok]])
    return out[:n], bs[:n]


@dataclass(frozen=True)
class WRegionBound:
    """Confinement data for W: ball B(M, K a/c^2) and the radius window."""

    circumcenter: tuple
    circumradius: float
    diam_bound: float
    radius_interval: tuple | None  # None when the clipped window is empty


@dataclass(frozen=True)
class EmptyRegion:
    """Returned for degenerate frames: W(b) is empty for every b."""


def three_circle_bound(frame: TriangleFrame, a: float):
    """Confinement bound for W with K = 324, or EmptyRegion when degenerate."""
    a = float(a)
    c = frame.sep_scale
    if not (0.0 < a < c * c / 20.0):
        raise HypothesisViolated("need 0 < a < c^2/20")
    if frame.degenerate:
        return EmptyRegion()
    M, h = circumcenter(frame.a, frame.b, frame.c)
    bound = THREE_CIRCLE_K * a / (c * c)
    lo = max(h - bound, _B_LO)
    hi = min(h + bound, _B_HI)
    interval = (lo, hi) if lo <= hi else None
    return WRegionBound(
        circumcenter=tuple(M),
        circumradius=h,
        diam_bound=bound,
        radius_interval=interval,
    )


def w_region_membership(frame: TriangleFrame, a: float, b: float, x) -> bool:
    """Whether (x, b) satisfies all three closed annulus constraints."""
    x = _as_point(x)
    for P in (frame.a, frame.b, frame.c):
        d = math.hypot(x[0] - P[0], x[1] - P[1])
        if not (b - a <= d <= b + a):
            return False
    return True


# --- origin-anchored grid scan of W ----------------------------------------
#
# The planar grid is g*Z^2 and the b grid is {1/2 + m*g}.  Cells are pruned
# with interval bounds on the three distances; pruning is conservative, so the
# surviving grid points are exactly those a full scan would return.

_PRUNE_EPS = 1e-12


def _cell_distance_bounds(cx, cy, half, P):
    dx = np.abs(cx - P[0])
    dy = np.abs(cy - P[1])
    ox = np.maximum(dx - half, 0.0)
    oy = np.maximum(dy - half, 0.0)
    dmin = np.hypot(ox, oy)
    dmax = np.hypot(dx + half, dy + half)
    return dmin, dmax


def _prune_cells(cx, cy, half, pts, a):
    """Boolean mask of cells that may contain a planar point of W."""
    dmins = []
    dmaxs = []
    for P in pts:
        dmin, dmax = _cell_distance_bounds(cx, cy, half, P)
        dmins.append(dmin)
        dmaxs.append(dmax)
    dmins = np.stack(dmins)
    dmaxs = np.stack(dmaxs)
    hi_min = dmins.max(axis=0)  # lower bound for max_P d_P on the cell
    lo_max = dmaxs.min(axis=0)  # upper bound for min_P d_P on the cell
    keep = hi_min - lo_max <= 2.0 * a + _PRUNE_EPS
    keep &= hi_min - a <= _B_HI + _PRUNE_EPS
    keep &= lo_max + a >= _B_LO - _PRUNE_EPS
    return keep, hi_min, lo_max


def _root_cell(frame: TriangleFrame, a: float, g: float):
    A = np.asarray(frame.a)
    half = 2.0 + a + 2.0 * g
    return A[0], A[1], half


def _split_cells(cx, cy, half):
    q = half / 2.0
    cx4 = np.concatenate([cx - q, cx - q, cx + q, cx + q])
    cy4 = np.concatenate([cy - q, cy + q, cy - q, cy + q])
    return cx4, cy4, q


def _enumerate_members(cx, cy, half, frame, a, g):
    """Exact grid members inside the given (pre-pruned) cells."""
    pts3 = frame.points()
    xs_list = []
    for k in range(cx.size):
        ilo = math.ceil((cx[k] - half) / g)
        ihi = math.ceil((cx[k] + half) / g) - 1
        jlo = math.ceil((cy[k] - half) / g)
        jhi = math.ceil((cy[k] + half) / g) - 1
        if ihi < ilo or jhi < jlo:
            continue
        ii = np.arange(ilo, ihi + 1)
        jj = np.arange(jlo, jhi + 1)
        gx, gy = np.meshgrid(ii * g, jj * g, indexing="ij")
        xs_list.append(np.column_stack([gx.ravel(), gy.ravel()]))
    if not xs_list:
        return np.empty((0, 3))
    xy = np.concatenate(xs_list)
    d = np.stack([np.hypot(xy[:, 0] - P[0], xy[:, 1] - P[1]) for P in pts3])
    dmax = d.max(axis=0)
    dmin = d.min(axis=0)
    blo = np.maximum(dmax - a, _B_LO)
    bhi = np.minimum(dmin + a, _B_HI)
    ok = blo <= bhi
    if not np.any(ok):
        return np.empty((0, 3))
    xy = xy[ok]
    blo = blo[ok]
    bhi = bhi[ok]
    mlo = np.ceil((blo - _B_LO) / g - 1e-12).astype(np.int64)
    mhi = np.floor((bhi - _B_LO) / g + 1e-12).astype(np.int64)
    # The +-1e-12 index slack can admit a borderline b; re-check exactly below.
    counts = np.maximum(mhi - mlo + 1, 0)
    keep = counts > 0
    xy, mlo, counts = xy[keep], mlo[keep], counts[keep]
    if xy.shape[0] == 0:
        return np.empty((0, 3))
    reps = np.repeat(np.arange(xy.shape[0]), counts)
    offs = np.concatenate([np.arange(c) for c in counts])
    bvals = _B_LO + (mlo[reps] + offs) * g
    members = np.column_stack([xy[reps], bvals])
    d = np.stack(
        [np.hypot(members[:, 0] - P[0], members[:, 1] - P[1]) for P in pts3]
    )
    good = np.all(
        (d >= members[:, 2] - a) & (d <= members[:, 2] + a), axis=0
    ) & (members[:, 2] >= _B_LO) & (members[:, 2] <= _B_HI)
    return members[good]


def w_region_grid_members(frame: TriangleFrame, a: float, grid_step: float) -> np.ndarray:
    """All grid points (x1, x2, b) of W on the origin-anchored grid."""
    g = float(grid_step)
    a = float(a)
    cx0, cy0, half = _root_cell(frame, a, g)
    cx = np.array([cx0])
    cy = np.array([cy0])
    pts3 = frame.points()
    while half > 4.0 * g:
        keep, _, _ = _prune_cells(cx, cy, half, pts3, a)
        cx, cy = cx[keep], cy[keep]
        if cx.size == 0:
            return np.empty((0, 3))
        cx, cy, half = _split_cells(cx, cy, half)
    keep, _, _ = _prune_cells(cx, cy, half, pts3, a)
    cx, cy = cx[keep], cy[keep]
    if cx.size == 0:
        return np.empty((0, 3))
    return _enumerate_members(cx, cy, half, frame, a, g)


def _diameter(points: np.ndarray) -> float:
    """Exact max pairwise Euclidean distance (any dimension)."""
    n = points.shape[0]
    if n < 2:
        return 0.0
    cand = points
    if n > 4096:
        try:
            from scipy.spatial import ConvexHull

            cand = points[ConvexHull(points).vertices]
        except Exception:
            cand = points  # degenerate hull; fall back to blocked brute force
    m = cand.shape[0]
    best = 0.0
    block = 2048
    for i in range(0, m, block):
        a = cand[i : i + block]
        for j in range(i, m, block):
            b = cand[j : j + block]
            d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
            best = max(best, float(d2.max()))
    return math.sqrt(best)


def w_region_sample_diameter(frame: TriangleFrame, a: float, grid_step: float) -> float:
    """Max pairwise R^3 distance over the grid members of W (0 if <= 1)."""
    if grid_step > a / 4.0:
        raise HypothesisViolated("grid_step must be <= a/4")
    members = w_region_grid_members(frame, a, grid_step)
    return _diameter(members)


def w_region_diameter_within(
    frame: TriangleFrame, a: float, grid_step: float, bound: float
) -> bool:
    """Whether the sampled diameter of W is <= bound.

    Refines the pruned cell cover level by level; as soon as the reachable
    envelope of the surviving cells fits inside ``bound`` the answer is
    certified without enumeration.  Falls back to the exact scan otherwise,
    so the result always equals w_region_sample_diameter(...) <= bound.
    """
    g = float(grid_step)
    a = float(a)
    cx0, cy0, half = _root_cell(frame, a, g)
    cx = np.array([cx0])
    cy = np.array([cy0])
    pts3 = frame.points()
    while True:
        keep, hi_min, lo_max = _prune_cells(cx, cy, half, pts3, a)
        cx, cy = cx[keep], cy[keep]
        if cx.size == 0:
            return True
        blo = np.maximum(hi_min[keep] - a, _B_LO)
        bhi = np.minimum(lo_max[keep] + a, _B_HI)
        dx = (cx.max() + half) - (cx.min() - half)
        dy = (cy.max() + half) - (cy.min() - half)
        db = max(float(bhi.max() - blo.min()), 0.0)
        if math.sqrt(dx * dx + dy * dy + db * db) <= bound:
            return True
        if half <= 4.0 * g:
            break
        cx, cy, half = _split_cells(cx, cy, half)
    members = _enumerate_members(cx, cy, half, frame, a, g)
    return _diameter(members) <= bound
