"""Discretized measure-theoretic primitives.

Point clouds at dyadic resolution delta = 2^-k, (delta,q)-set extraction via
top-down dyadic selection, uniform discrete (Frostman-type) measures, and
two-sided Hausdorff-content estimation.

Content conventions: covers are recorded as (center, radius) pairs and a ball
contributes (2*radius)**s, i.e. diameter-based content.  The lower estimate is
a uniform-mass pigeonhole: a set of diameter d containing a data point holds
at most as many points as the fullest 2x2 block of side-d grid cells, so any
cover's cost is at least #P / max_d [blockcount(d) / d^s].  It is a lower
bound for the content of the delta-fattened cloud (up to the usual
small-cover regularization at scale delta) and is clamped to lower <= upper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput

_DIM_OFFSET = 1 << 30  # shifts cell indices positive before key packing


def _pack(idx: np.ndarray) -> np.ndarray:
    """Pack (n, d) integer cell indices into scalar int64 keys."""
    idx = idx + _DIM_OFFSET
    key = idx[:, 0].astype(np.int64)
    for axis in range(1, idx.shape[1]):
        key = key * (1 << 31) + idx[:, axis]
    return key


@dataclass
class PointCloud:
    """Finite point set at dyadic resolution delta = 2^-k (k >= 1)."""

    points: np.ndarray
    k: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] not in (2, 3):
            raise ValueError("points must be an (n, 2) or (n, 3) array")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("points must be finite")
        self.k = int(self.k)
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def delta(self) -> float:
        return 2.0 ** (-self.k)

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def create(cls, points, k: int, dedupe: bool = True) -> "PointCloud":
        """Build a cloud, deduplicating at resolution delta/4 (first wins)."""
        cloud = cls(np.asarray(points, dtype=float), k)
        if dedupe and len(cloud) > 1:
            step = cloud.delta / 4.0
            keys = _pack(np.floor(cloud.points / step).astype(np.int64))
            _, first = np.unique(keys, return_index=True)
            cloud = cls(cloud.points[np.sort(first)], k)
        return cloud


def save_csv(cloud: PointCloud, path) -> None:
    """Write the canonical cloud CSV: header line `dim,k`, the values, then
    one point per line with repr-exact coordinates."""
    with open(path, "w", newline="") as fh:
        fh.write("dim,k\n")
        fh.write(f"{cloud.dim},{cloud.k}\n")
        for row in cloud.points:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_csv(path) -> PointCloud:
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if header != "dim,k":
            raise ValueError(f"bad cloud header: {header!r}")
        dim_s, k_s = fh.readline().strip().split(",")
        dim, k = int(dim_s), int(k_s)
        pts = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = [float(v) for v in line.split(",")]
            if len(vals) != dim:
                raise ValueError("row arity does not match dim")
            pts.append(vals)
    points = np.array(pts, dtype=float).reshape(len(pts), dim)
    return PointCloud(points, k)


# --- (delta, q)-sets --------------------------------------------------------


@dataclass
class DeltaQSet:
    """delta-separated cloud with non-concentration exponent q.

    conc_measured is the audited supremum of #(P cap B(x,r)) / (r/delta)^q
    over dyadic radii r > delta.
    """

    cloud: PointCloud
    q: float
    conc_measured: float


def _cap(q: float, levels_below: int) -> int:
    return math.ceil(2.0 ** (q * levels_below))


def extract_delta_q_set(
    cloud: PointCloud, q: float, *, audit_trials: int = 256, seed: int = 0
) -> DeltaQSet:
    """Extract a delta-separated subset with q-dimensional non-concentration.

    Top-down dyadic selection: candidates are one representative per
    even-indexed delta-cube (even indices force delta-separation), each
    dyadic cube at level j keeps at most ceil(2^(q*(k-j))) points, and
    budgets flow to children in order of surviving mass.
    """
    if len(cloud) == 0:
        raise EmptyInput("cannot extract from an empty cloud")
    k = cloud.k
    delta = cloud.delta
    pts = cloud.points
    idx = np.floor(pts / delta).astype(np.int64)
    even = np.all(idx % 2 == 0, axis=1)
    if not np.any(even):
        # Fall back to a single point; a one-point set is vacuously a
        # (delta, q)-set.
        sel = pts[:1]
    else:
        pts_e = pts[even]
        idx_e = idx[even]
        order = np.lexsort(tuple(pts_e[:, d] for d in reversed(range(pts_e.shape[1]))))
        order = order[np.argsort(_pack(idx_e)[order], kind="stable")]
        keys_sorted = _pack(idx_e)[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = keys_sorted[1:] != keys_sorted[:-1]
        reps = pts_e[order[first]]
        rep_idx = idx_e[order[first]]

        # children[level j][cube] -> list of level-(j+1) sub-cubes; counts of
        # surviving candidates drive the greedy budget flow.
        counts = {k: {}}
        cubes = [tuple(r) for r in rep_idx]
        rep_of = dict(zip(cubes, range(len(cubes))))
        for c in cubes:
            counts[k][c] = 1
        for j in range(k - 1, -1, -1):
            counts[j] = {}
            for cube, cnt in counts[j + 1].items():
                parent = tuple(v >> 1 for v in cube)
                counts[j][parent] = counts[j].get(parent, 0) + cnt
        children = {j: {} for j in range(k)}
        for j in range(1, k + 1):
            for cube in counts[j]:
                parent = tuple(v >> 1 for v in cube)
                children[j - 1].setdefault(parent, []).append(cube)

        chosen = []

        def allocate(cube, level, budget):
            if budget <= 0:
                return 0
            if level == k:
                chosen.append(rep_of[cube])
                return 1
            got = 0
            kids = sorted(
                children[level].get(cube, []),
                key=lambda c: (-counts[level + 1][c], c),
            )
            cap_child = _cap(q, k - level - 1)
            for kid in kids:
                if got >= budget:
                    break
                got += allocate(kid, level + 1, min(cap_child, budget - got))
            return got

        for root in sorted(counts[0]):
            allocate(root, 0, _cap(q, k))
        sel = reps[np.array(sorted(chosen), dtype=int)]

    out = DeltaQSet(PointCloud(sel, k), float(q), 0.0)
    out.conc_measured = verify_non_concentration(out, audit_trials, seed=seed)
    return out


def verify_non_concentration(ds: DeltaQSet, trials: int, *, seed: int = 0) -> float:
    """Audited sup of #(P cap B(x,r)) / (r/delta)^q.

    Centers are all data points plus ``trials`` uniform points in the padded
    bounding box; radii are dyadic in (delta, 2*diam].
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    from scipy.spatial import cKDTree

    pts = ds.cloud.points
    delta = ds.cloud.delta
    q = ds.q
    rng = np.random.default_rng(seed)
    lo = pts.min(axis=0) - delta
    hi = pts.max(axis=0) + delta
    centers = np.vstack([pts, rng.uniform(lo, hi, size=(trials, pts.shape[1]))])
    diam = float(np.linalg.norm(hi - lo))
    r_top = max(2.0 * diam, 4.0 * delta)
    radii = []
    j = math.floor(math.log2(1.0 / delta))  # finest dyadic radius > delta
    while 2.0 ** (-j) <= r_top:
        r = 2.0 ** (-j)
        if r > delta:
            radii.append(r)
        j -= 1
    tree = cKDTree(pts)
    worst = 0.0
    for r in radii:
        cnt = tree.query_ball_point(centers, r, return_length=True)
        worst = max(worst, float(cnt.max()) / (r / delta) ** q)
    return worst


# --- discrete measures ------------------------------------------------------


@dataclass
class DiscreteMeasure:
    """Finitely many weighted atoms; total mass at most 1."""

    points: np.ndarray
    weights: np.ndarray
    uniform: bool = field(default=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if self.total_mass > 1.0 + 1e-12:
            raise ValueError("total mass must be <= 1")

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return self.points.shape[0]

    def measure_ball(self, z, r: float) -> float:
        """Mass of the closed ball B(z, r)."""
        z = np.asarray(z, dtype=float)
        d = np.linalg.norm(self.points - z, axis=1)
        inside = d <= r
        if self.uniform:
            return float(inside.sum()) / len(self)
        return float(self.weights[inside].sum())

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, self.weights * factor, uniform=False)


def frostman_measure(cloud: PointCloud) -> DiscreteMeasure:
    """The canonical probability measure with equal weights 1/#P."""
    n = len(cloud)
    if n == 0:
        raise EmptyInput("cannot build a measure on an empty cloud")
    return DiscreteMeasure(cloud.points, np.full(n, 1.0 / n), uniform=True)


# --- Hausdorff content estimation -------------------------------------------


@dataclass
class ContentEstimate:
    """Two-sided content estimate with the witnessing cover."""

    upper: float
    lower: float
    cover: list

    def cover_sum(self, s: float) -> float:
        return float(sum((2.0 * r) ** s for _, r in self.cover))


def normalize_to_unit_ball(points: np.ndarray):
    """Translate to the bounding-box center and shrink into the unit ball.

    Returns (scaled points, scale factor); scale is 1 when the centered set
    already fits.
    """
    pts = np.asarray(points, dtype=float)
    mid = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    centered = pts - mid
    rad = float(np.linalg.norm(centered, axis=1).max()) if len(pts) else 0.0
    scale = 1.0 if rad <= 1.0 else 1.0 / rad
    return centered * scale, scale


def _block_max_count(pts: np.ndarray, side: float) -> int:
    """Max points in any 2x2(x2) block of grid cells of ``side``.

    A set of diameter <= side has axis extents <= side, so it lies in one
    such block; the fullest block bounds any cover set's point count.
    """
    idx = np.floor(pts / side).astype(np.int64)
    dim = pts.shape[1]
    keys = _pack(idx)
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    uniq = np.ones(len(ks), dtype=bool)
    uniq[1:] = ks[1:] != ks[:-1]
    cells = ks[uniq]
    starts = np.nonzero(uniq)[0]
    counts = np.diff(np.append(starts, len(ks)))
    base = idx[order][uniq]
    total = np.zeros(len(cells), dtype=np.int64)
    for off in np.ndindex(*([2] * dim)):
        neigh = _pack(base + np.array(off, dtype=np.int64))
        pos = np.clip(np.searchsorted(cells, neigh), 0, len(cells) - 1)
        total += np.where(cells[pos] == neigh, counts[pos], 0)
    return int(total.max()) if len(total) else 0


def content_lower(points, s: float, delta: float) -> float:
    """Uniform-mass pigeonhole lower estimate for the s-content.

    A cover set U of diameter d that meets the cloud satisfies
    #(U cap P) <= cnt(d), with cnt(d) the exact max ball count
    max_p #(P cap B(p, d)) at small d and the 2x2 grid-block bound at large
    d; over quarter-octave diameter brackets any cover then costs at least
    #P / max_d [cnt(d) / d^s].
    """
    from scipy.spatial import cKDTree

    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n == 0:
        raise EmptyInput("no points")
    span = pts.max(axis=0) - pts.min(axis=0)
    diam_ub = float(np.linalg.norm(span))
    tree = cKDTree(pts)
    exact_cutoff = 8.0 * delta
    worst = 0.0
    m = 0
    while True:
        d = delta * 2.0 ** ((m + 1) / 4.0)
        if d >= diam_ub:
            cnt = n
        elif d <= exact_cutoff or n <= 4096:
            cnt = int(tree.query_ball_point(pts, d, return_length=True).max())
        else:
            cnt = min(n, _block_max_count(pts, d))
        ratio = cnt / (d * 2.0 ** (-0.25)) ** s
        worst = max(worst, ratio)
        if d * 2.0 ** (-0.25) > max(diam_ub, delta):
            break
        m += 1
    return n / worst


def _circumcircle2(p, q):
    c = 0.5 * (p + q)
    return c, float(np.linalg.norm(p - c))


def _circumcircle3(p, q, r):
    u = q - p
    v = r - p
    cross = u[0] * v[1] - u[1] * v[0]
    if abs(cross) < 1e-14 * max(u @ u, v @ v):
        return None
    bu = float(u @ u)
    bv = float(v @ v)
    cx = (bu * v[1] - bv * u[1]) / (2.0 * cross)
    cy = (bv * u[0] - bu * v[0]) / (2.0 * cross)
    c = p + np.array([cx, cy])
    return c, float(np.hypot(cx, cy))


def _min_enclosing_ball_2d(pts: np.ndarray):
    """Minimal enclosing ball (Welzl, move-to-front), hull-reduced, seeded."""
    cand = pts
    if pts.shape[0] > 16:
        try:
            from scipy.spatial import ConvexHull

            cand = pts[ConvexHull(pts).vertices]
        except Exception:
            cand = pts
    P = cand[np.random.default_rng(0).permutation(cand.shape[0])]
    eps = 1e-12

    def ball_with_2(points, p, q):
        c, r = _circumcircle2(p, q)
        for i in range(points.shape[0]):
            if np.linalg.norm(points[i] - c) > r * (1 + eps) + eps:
                res = _circumcircle3(p, q, points[i])
                if res is not None:
                    c, r = res
        return c, r

    def ball_with_1(points, p):
        c, r = p.copy(), 0.0
        for i in range(points.shape[0]):
            if np.linalg.norm(points[i] - c) > r * (1 + eps) + eps:
                c, r = ball_with_2(points[:i], p, points[i])
        return c, r

    c, r = P[0].copy(), 0.0
    for i in range(1, P.shape[0]):
        if np.linalg.norm(P[i] - c) > r * (1 + eps) + eps:
            c, r = ball_with_1(P[:i], P[i])
    # Guard against accumulated rounding: enforce actual enclosure.
    r = max(r, float(np.linalg.norm(pts - c, axis=1).max()))
    return c, r


def _enclosing_candidate(pts: np.ndarray, r_min: float):
    if pts.shape[1] == 2 and pts.shape[0] >= 2:
        c, rad = _min_enclosing_ball_2d(pts)
    else:
        c = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
        rad = float(np.linalg.norm(pts - c, axis=1).max())
    return tuple(c), max(rad, r_min)


def content_greedy(points, s: float, r_min: float, *, delta: float = None) -> ContentEstimate:
    """Two-sided content estimate.

    upper: density-greedy cover by balls of dyadic cells (radius >= ~r_min),
    or the single enclosing ball when that is cheaper.  lower: pigeonhole
    estimate, clamped to the upper value.
    """
    if isinstance(points, PointCloud):
        if delta is None:
            delta = points.delta
        pts = points.points
    else:
        pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise EmptyInput("no points")
    if not (0.0 < s <= 2.0):
        raise ValueError("need 0 < s <= 2")
    if delta is None:
        delta = r_min
    if r_min < delta:
        raise ValueError("need r_min >= delta")
    dim = pts.shape[1]
    rootd = math.sqrt(dim)
    j_max = max(math.floor(math.log2(1.0 / r_min)), 0)
    levels = list(range(0, j_max + 1))
    keys = np.stack(
        [_pack(np.floor(pts * (1 << j)).astype(np.int64)) for j in levels]
    )
    covered = np.zeros(pts.shape[0], dtype=bool)
    picks = []
    greedy_sum = 0.0
    while not covered.all():
        best = None  # (score, -(-level)...) choose max score, coarser, lower key
        live = ~covered
        for j in levels:
            u, c = np.unique(keys[j][live], return_counts=True)
            side = 2.0 ** (-j)
            w = (rootd * side) ** s
            scores = c / w
            i = int(np.argmax(scores))
            # argmax takes the first max, i.e. the lowest key: deterministic
            cand = (float(scores[i]), -j, int(u[i]))
            if best is None or (cand[0], cand[1], -cand[2]) > (
                best[0],
                best[1],
                -best[2],
            ):
                best = cand
        score, negj, key = best
        j = -negj
        side = 2.0 ** (-j)
        sel = live & (keys[j] == key)
        cell = np.floor(pts[sel][0] * (1 << j)) * side + side / 2.0
        picks.append((tuple(cell), rootd * side / 2.0))
        greedy_sum += (rootd * side) ** s
        covered |= sel
    center, rad = _enclosing_candidate(pts, r_min)
    enc_sum = (2.0 * rad) ** s
    if enc_sum <= greedy_sum:
        cover = [(center, rad)]
        upper = enc_sum
    else:
        cover = picks
        upper = greedy_sum
    lower = min(content_lower(pts, s, delta), upper)
    return ContentEstimate(upper=upper, lower=lower, cover=cover)
