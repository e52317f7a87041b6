"""Counting machinery: dyadic box counts, arc trisection, triple indices,
and annulus multiplicity fields.

Cells are half-open dyadic squares [i*2^-k, (i+1)*2^-k) anchored at the
origin; a cell is incident to an arc when it contains a cloud point of the
arc, and multiplicity is evaluated at cell centers.  All reductions are
accumulated in canonical (ascending atom / circle) order so results do not
depend on worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateFit, EmptyInput, InsufficientContent
from .fractal import DiscreteMeasure, PointCloud, _pack, content_greedy, content_lower
from .geometry import CircleParam

C0_DEFAULT = 4.0 * math.pi + 2.0  # pinned area constant in |S^delta(z)| <= c0*delta


# --- box counting ------------------------------------------------------------


@dataclass
class CoverGrid:
    """Occupied dyadic cells of side 2^-k, sorted lexicographically."""

    k: int
    cells: np.ndarray  # (n, dim) int64

    @property
    def count(self) -> int:
        return self.cells.shape[0]

    def occupied_set(self) -> set:
        return {tuple(row) for row in self.cells}


def box_count(cloud_or_points, k: int) -> CoverGrid:
    """Occupied origin-anchored dyadic cells of side 2^-k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    pts = cloud_or_points.points if isinstance(cloud_or_points, PointCloud) else np.asarray(
        cloud_or_points, dtype=float
    )
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise EmptyInput("no points to count")
    idx = np.floor(pts * (1 << k)).astype(np.int64)
    keys = _pack(idx)
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    uniq = np.ones(len(ks), dtype=bool)
    uniq[1:] = ks[1:] != ks[:-1]
    cells = idx[order][uniq]
    cells = cells[np.lexsort(tuple(cells[:, d] for d in reversed(range(cells.shape[1]))))]
    return CoverGrid(k=k, cells=cells)


class _UniqueAccumulator:
    """Running sorted-unique set of integer keys, merged in chunks."""

    def __init__(self, dtype, flush_at: int = 4_000_000):
        self._running = np.empty(0, dtype=dtype)
        self._buffer = []
        self._buffered = 0
        self._flush_at = flush_at

    def add(self, keys: np.ndarray) -> None:
        self._buffer.append(keys)
        self._buffered += keys.size
        if self._buffered >= self._flush_at:
            self._flush()

    def _flush(self) -> None:
        if not self._buffer:
            return
        u = np.unique(np.concatenate(self._buffer))
        self._buffer = []
        self._buffered = 0
        if self._running.size == 0:
            self._running = u
            return
        pos = np.searchsorted(self._running, u)
        fresh = np.ones(u.size, dtype=bool)
        inside = pos < self._running.size
        fresh[inside] = self._running[pos[inside]] != u[inside]
        u = u[fresh]
        if u.size:
            self._running = np.insert(self._running, np.searchsorted(self._running, u), u)

    @property
    def count(self) -> int:
        self._flush()
        return int(self._running.size)


def box_counts_streaming(chunks, ks, bbox=None) -> dict:
    """Box counts N(2^-k) for several k over a stream of 2-d point chunks.

    ``bbox = ((lox, loy), (hix, hiy))`` lets cell keys fit in int32, halving
    memory for very large clouds; points must then stay inside the box.
    """
    ks = sorted(set(int(k) for k in ks))
    accs = {}
    meta = {}
    for k in ks:
        if bbox is not None:
            (lox, loy), (hix, hiy) = bbox
            ix0 = math.floor(lox * (1 << k))
            iy0 = math.floor(loy * (1 << k))
            ny = math.floor(hiy * (1 << k)) - iy0 + 1
            nx = math.floor(hix * (1 << k)) - ix0 + 1
            if nx * ny < 2 ** 31:
                meta[k] = (ix0, iy0, ny)
                accs[k] = _UniqueAccumulator(np.int32)
                continue
        meta[k] = None
        accs[k] = _UniqueAccumulator(np.int64)
    for chunk in chunks:
        pts = np.asarray(chunk, dtype=float)
        if pts.size == 0:
            continue
        for k in ks:
            idx = np.floor(pts * (1 << k)).astype(np.int64)
            if meta[k] is not None:
                ix0, iy0, ny = meta[k]
                keys = ((idx[:, 0] - ix0) * ny + (idx[:, 1] - iy0)).astype(np.int32)
            else:
                keys = _pack(idx)
            accs[k].add(keys)
    return {k: accs[k].count for k in ks}


def dimension_slope(counts) -> float:
    """Least-squares slope of log2 N(2^-k) against k."""
    pairs = [(int(k), int(n)) for k, n in counts]
    if len(pairs) < 3 or len({k for k, _ in pairs}) < 2:
        raise DegenerateFit("need >= 3 scales with distinct k")
    ks = np.array([k for k, _ in pairs], dtype=float)
    ys = np.log2(np.array([n for _, n in pairs], dtype=float))
    return float(np.polyfit(ks, ys, 1)[0])


# --- arc trisection (three separated arcs carrying comparable content) -------


@dataclass
class ArcTriple:
    """Three disjoint angular intervals on S(z), each holding a bracketed
    share of the circle's content estimate, pairwise chord-separated by at
    least gamma/pi."""

    z: CircleParam
    intervals: tuple  # three (lo, hi) angle intervals, half-open
    gamma: float
    tau: float
    eta: float
    s_prime: float
    contents: tuple

    def min_chord_separation(self) -> float:
        """Smallest chord distance between any two of the three intervals."""
        r = self.z.radius
        best = math.inf
        for i in range(3):
            for j in range(i + 1, 3):
                lo_i, hi_i = self.intervals[i]
                lo_j, hi_j = self.intervals[j]
                gap1 = (lo_j - hi_i) % (2.0 * math.pi)
                gap2 = (lo_i - hi_j) % (2.0 * math.pi)
                gap = min(gap1, gap2)
                best = min(best, 2.0 * r * math.sin(min(gap, math.pi) / 2.0))
        return best


def circle_angles(z: CircleParam, pts: np.ndarray) -> np.ndarray:
    return np.mod(
        np.arctan2(pts[:, 1] - z.center[1], pts[:, 0] - z.center[0]), 2.0 * math.pi
    )


def auto_eta(z: CircleParam, pts: np.ndarray, s_prime: float, delta: float, k1: int) -> float:
    """Discretization-aware content threshold.

    Takes the classical (log 1/delta)^-2 = k1^-2 when the induced arc length
    gamma stays >= 2*delta, else raises eta just enough; fails when the
    circle's measured content cannot support that.
    """
    eta = max(1.0 / (k1 * k1), 16.0 * (2.0 * delta) ** s_prime)
    if eta > 1.0 + 1e-12:
        raise InsufficientContent("resolution too coarse for this exponent")
    # A subset's content bounds the set's from below, so a decimated
    # feasibility check is valid; fall back to the full cloud if it is shy.
    stride = max(1, -(-pts.shape[0] // 1024))
    lower = content_lower(pts[::stride], s_prime, delta)
    if lower < eta:
        lower = content_lower(pts, s_prime, delta)
    if lower < eta:
        raise InsufficientContent(
            f"content lower estimate {lower:.4g} below eta {eta:.4g}"
        )
    return eta


def extract_three_arcs(
    z: CircleParam,
    pts: np.ndarray,
    s_prime: float,
    eta: float,
    *,
    delta: float,
    content_check: bool = True,
) -> ArcTriple:
    """Scan arcs of length gamma = (eta/16)^(1/s') and cut out three
    separated groups whose cumulative per-arc content reaches eta/8.

    ``content_check=False`` skips the precondition re-check for callers that
    derived eta from the same cloud (e.g. via auto_eta).
    """
    if not (0.0 < eta <= 1.0):
        raise InsufficientContent("need 0 < eta <= 1")
    pts = np.asarray(pts, dtype=float)
    if pts.shape[0] == 0:
        raise InsufficientContent("empty circle cloud")
    if content_check:
        stride = max(1, -(-pts.shape[0] // 1024))
        lower = content_lower(pts[::stride], s_prime, delta)
        if lower < eta:
            lower = content_lower(pts, s_prime, delta)
        if lower < eta:
            raise InsufficientContent(
                f"content lower estimate {lower:.4g} below eta {eta:.4g}"
            )
    r = z.radius
    gamma = (eta / 16.0) ** (1.0 / s_prime)
    assert gamma <= 1.0 / 16.0 + 1e-12
    n_arcs = math.ceil(2.0 * math.pi * r / gamma)
    assert n_arcs >= 16
    w = gamma / r
    theta = circle_angles(z, pts)
    arc_of = np.minimum((theta / w).astype(np.int64), n_arcs - 1)
    order = np.argsort(arc_of, kind="stable")
    arc_sorted = arc_of[order]
    starts = np.searchsorted(arc_sorted, np.arange(n_arcs + 1))

    def arc_content(l: int) -> float:
        sel = order[starts[l] : starts[l + 1]]
        if sel.size == 0:
            return 0.0
        return content_greedy(pts[sel], s_prime, delta, delta=delta).upper

    target = eta / 8.0
    tol = gamma ** s_prime

    def scan(start: int, stop: int):
        """Smallest end arc in [start+1, stop] (at least two arcs) with
        cumulative content >= target."""
        cum = 0.0
        for l in range(start, stop + 1):
            cum += arc_content(l)
            if cum >= target and l >= start + 1:
                return l, cum
        raise InsufficientContent("arc scan exhausted the circle")

    e1, c1 = scan(0, n_arcs - 13)
    e2, c2 = scan(e1 + 2, n_arcs - 9)
    e3, c3 = scan(e2 + 2, n_arcs - 3)
    for c in (c1, c2, c3):
        if not (target - tol <= c <= 3.0 * eta / 16.0 + tol):
            raise InsufficientContent("arc content escaped the bracket")
    intervals = (
        (0.0, (e1 + 1) * w),
        ((e1 + 2) * w, (e2 + 1) * w),
        ((e2 + 2) * w, (e3 + 1) * w),
    )
    triple = ArcTriple(
        z=z,
        intervals=intervals,
        gamma=gamma,
        tau=gamma / math.pi,
        eta=eta,
        s_prime=s_prime,
        contents=(c1, c2, c3),
    )
    if triple.min_chord_separation() < gamma / math.pi - 1e-12:
        raise InsufficientContent("arc separation collapsed")
    return triple


def _interval_mask(theta: np.ndarray, interval) -> np.ndarray:
    lo, hi = interval
    return (theta >= lo) & (theta < hi)


def arc_cell_sets(triple: ArcTriple, pts: np.ndarray, k: int):
    """The occupied-cell index sets of the three arcs' cloud points."""
    theta = circle_angles(triple.z, pts)
    out = []
    for interval in triple.intervals:
        sub = pts[_interval_mask(theta, interval)]
        if sub.shape[0] == 0:
            out.append(set())
            continue
        idx = np.floor(sub * (1 << k)).astype(np.int64)
        out.append({tuple(row) for row in idx})
    return out


@dataclass
class TripleIndex:
    """Quadruples (cell+, cell-, cellx, circle index) of arc-cell incidences."""

    k: int
    entries: set

    @property
    def count(self) -> int:
        return len(self.entries)


def build_triple_index(arc_data, grid: CoverGrid) -> TripleIndex:
    """arc_data: iterable of (ArcTriple, circle cloud points) in circle order."""
    entries = set()
    for z_idx, (triple, pts) in enumerate(arc_data):
        if triple is None:
            continue
        cp, cm, cx = arc_cell_sets(triple, pts, grid.k)
        for a in cp:
            for b in cm:
                for c in cx:
                    entries.add((a, b, c, z_idx))
    return TripleIndex(k=grid.k, entries=entries)


def triple_upper_ratio(t_index: TripleIndex, grid: CoverGrid, tau: float) -> float:
    """#T * tau^6 / (#cells)^3; bounded by a constant via the three-circle
    confinement, reported as measured."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if grid.count == 0:
        raise EmptyInput("empty grid")
    return t_index.count * tau ** 6 / grid.count ** 3


def per_arc_cover_counts(arc_data, k: int) -> np.ndarray:
    """(n+, n-, nx) occupied-cell counts per circle; product equals the
    circle's entry count in the triple index."""
    rows = []
    for triple, pts in arc_data:
        if triple is None:
            rows.append((0, 0, 0))
            continue
        cp, cm, cx = arc_cell_sets(triple, pts, k)
        rows.append((len(cp), len(cm), len(cx)))
    return np.array(rows, dtype=np.int64)


def step4_reference_count(s_prime: float, k1: int) -> float:
    """The per-arc covering-count reference delta^-s' * (log 1/delta)^-2."""
    return 2.0 ** (k1 * s_prime) / (k1 * k1)


# --- multiplicity fields ------------------------------------------------------


@dataclass
class MultiplicityField:
    """Sparse multiplicity values m(w) at cell centers w, with the per-atom
    annulus cell lists needed for exact bookkeeping."""

    delta: float
    grid_k: int
    values: dict
    incidences: dict
    per_atom_counts: np.ndarray
    per_atom_cells: Optional[list]
    total_mass: float

    @property
    def sup(self) -> float:
        return max(self.values.values()) if self.values else 0.0


def _annulus_cells(cx: float, cy: float, r: float, delta: float, g: float) -> np.ndarray:
    """Cells whose center w satisfies | ||w - (cx,cy)|| - r | <= delta."""
    r_out = r + delta
    r_in = max(r - delta, 0.0)
    iy_lo = math.floor((cy - r_out) / g)
    iy_hi = math.floor((cy + r_out) / g)
    iy = np.arange(iy_lo, iy_hi + 1, dtype=np.int64)
    wy = (iy + 0.5) * g
    dy2 = (wy - cy) ** 2
    raw_out2 = r_out ** 2 - dy2
    out2 = np.maximum(raw_out2, 0.0)
    in2 = np.maximum(r_in ** 2 - dy2, 0.0)
    xhi = np.sqrt(out2)
    xlo = np.sqrt(in2)
    rows = []
    for j in range(iy.size):
        if raw_out2[j] < 0.0:
            continue
        # right branch [cx + xlo, cx + xhi], left branch mirrored
        for a, b in (
            (cx - xhi[j], cx - xlo[j]),
            (cx + xlo[j], cx + xhi[j]),
        ):
            ilo = math.floor(a / g) - 1
            ihi = math.floor(b / g) + 1
            ix = np.arange(ilo, ihi + 1, dtype=np.int64)
            rows.append(np.column_stack([ix, np.full_like(ix, iy[j])]))
    if not rows:
        return np.empty((0, 2), dtype=np.int64)
    cand = np.concatenate(rows)
    cand = np.unique(cand, axis=0)
    wx = (cand[:, 0] + 0.5) * g
    wyc = (cand[:, 1] + 0.5) * g
    dist = np.hypot(wx - cx, wyc - cy)
    keep = np.abs(dist - r) <= delta
    return cand[keep]


def multiplicity_field(
    measure: DiscreteMeasure,
    delta: float,
    grid_k: int,
    *,
    keep_cells: bool = True,
    workers: Optional[int] = None,
) -> MultiplicityField:
    """m(w) = sum of weights of atoms z = (x, r) with | ||w-x|| - r | <= delta,
    evaluated at the centers w of cells of side 2^-grid_k.

    Atom geometry may be computed by a worker pool (FLAB_THREADS); the
    accumulation happens in ascending atom order regardless of workers.
    """
    g = 2.0 ** (-grid_k)
    atoms = measure.points
    n = atoms.shape[0]

    def job(i):
        return _annulus_cells(atoms[i, 0], atoms[i, 1], atoms[i, 2], delta, g)

    if workers is not None and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as ex:
            cell_lists = list(ex.map(job, range(n)))
    else:
        cell_lists = [job(i) for i in range(n)]

    values: dict = {}
    incid: dict = {}
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        wgt = float(measure.weights[i])
        cells = cell_lists[i]
        counts[i] = cells.shape[0]
        for row in cells:
            key = (int(row[0]), int(row[1]))
            values[key] = values.get(key, 0.0) + wgt
            incid[key] = incid.get(key, 0) + 1
    return MultiplicityField(
        delta=delta,
        grid_k=grid_k,
        values=values,
        incidences=incid,
        per_atom_counts=counts,
        per_atom_cells=cell_lists if keep_cells else None,
        total_mass=measure.total_mass,
    )


@dataclass
class ThresholdParams:
    """Low-multiplicity thresholding parameters."""

    s_prime: float
    t_prime: float
    epsilon: float
    k1: int
    c0: float
    eta: float
    a_param: float
    lam: float
    threshold: float

    @classmethod
    def from_exponents(
        cls,
        s_prime: float,
        t_prime: float,
        epsilon: float,
        k1: int,
        *,
        c0: float = C0_DEFAULT,
        big_c: float = 1.0,
    ) -> "ThresholdParams":
        if not (0.5 < s_prime <= 1.0):
            raise ValueError("threshold route needs 1/2 < s' <= 1")
        if not (0.0 < t_prime <= 1.0 and epsilon > 0.0):
            raise ValueError("need t' in (0,1] and epsilon > 0")
        delta = 2.0 ** (-k1)
        eta = min(epsilon / (2.0 * t_prime), (2.0 * s_prime - 1.0) / 2.0)
        a_param = big_c * delta ** (-eta)
        lam = delta ** (1.0 - s_prime) / (2.0 * c0 * 4.0 ** s_prime * k1 * k1)
        threshold = a_param ** t_prime * lam ** (-2.0 * t_prime) * delta ** t_prime
        if not (0.0 < lam <= 1.0):
            raise ValueError("lambda escaped (0, 1]")
        return cls(
            s_prime=s_prime,
            t_prime=t_prime,
            epsilon=epsilon,
            k1=k1,
            c0=c0,
            eta=eta,
            a_param=a_param,
            lam=lam,
            threshold=threshold,
        )


@dataclass
class LowMultiplicityStats:
    """Reported statistics for one circle's low-multiplicity cells."""

    cells: np.ndarray
    s1_count: int
    s2_count: int
    area_ratio: float
    s1_area: float
    s1_area_reference: float
    threshold: float


def low_multiplicity_subset(
    atom_idx: int, field: MultiplicityField, params: ThresholdParams
) -> LowMultiplicityStats:
    """Cells of the atom's annulus with multiplicity strictly below the
    threshold, plus area statistics.  The 1/2 area ratio is a reported
    statistic, not an asserted invariant."""
    if field.per_atom_cells is None:
        raise ValueError("field was built with keep_cells=False")
    s1 = field.per_atom_cells[atom_idx]
    m = np.array([field.values[(int(r[0]), int(r[1]))] for r in s1])
    low = m < params.threshold
    g = 2.0 ** (-field.grid_k)
    delta = field.delta
    s1_area = s1.shape[0] * g * g
    reference = delta ** (2.0 - params.s_prime) / (
        4.0 ** params.s_prime * params.k1 * params.k1
    )
    return LowMultiplicityStats(
        cells=s1[low],
        s1_count=int(s1.shape[0]),
        s2_count=int(low.sum()),
        area_ratio=float(low.sum()) / s1.shape[0] if s1.shape[0] else 0.0,
        s1_area=s1_area,
        s1_area_reference=reference,
        threshold=params.threshold,
    )
