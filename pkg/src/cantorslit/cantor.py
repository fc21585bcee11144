"""Cantor set generators and distance oracles.

K(lam) is the attractor of the IFS {x -> lam*x, x -> lam*x + 1 - lam} on
[0,1]; its (n-1)-fold product gives the product Cantor set used by the slit
domains.  A variable-ratio variant removes a different middle proportion at
each construction step, which allows sets of full dimension but zero length.

All distances are resolved by recursive descent down the construction tree
and certified to an absolute tolerance ``tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 2.0 ** -40


@dataclass(frozen=True)
class CantorSpec:
    """Description of a one-dimensional Cantor set (and its product powers).

    kind          : "fixed" (single contraction ratio) or "variable"
                    (ratio sequence, one per construction step).
    lam           : contraction ratio in (0, 1/2), fixed kind only.
    ratios        : per-step ratios in (0, 1/2], variable kind only.
    ambient_codim : number of product factors (the set lives in
                    R^ambient_codim).
    max_depth     : recursion cutoff for membership / interval queries.
    """

    kind: str = "fixed"
    lam: float | None = None
    ratios: tuple[float, ...] = field(default_factory=tuple)
    ambient_codim: int = 1
    max_depth: int = 60

    def __post_init__(self):
        if self.kind not in ("fixed", "variable"):
            raise ValueError(f"unknown Cantor kind {self.kind!r}")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.ambient_codim < 1:
            raise ValueError("ambient_codim must be >= 1")
        if self.kind == "fixed":
            if self.lam is None or not (0.0 < self.lam < 0.5):
                raise ValueError("fixed-ratio spec needs lambda in (0, 1/2)")
        else:
            if not self.ratios:
                raise ValueError("variable-ratio spec needs a ratio sequence")
            for r in self.ratios:
                if not (0.0 < r <= 0.5):
                    raise ValueError("variable ratios must lie in (0, 1/2]")
            # retained length 2^d * prod(ratios) must be non-increasing
            prev = 1.0
            retained = 1.0
            for r in self.ratios:
                retained *= 2.0 * r
                if retained > prev + 1e-15:
                    raise ValueError("retained length must be non-increasing")
                prev = retained

    @property
    def depth(self) -> int:
        """Number of construction steps with an explicit ratio."""
        return self.max_depth if self.kind == "fixed" else len(self.ratios)

    def ratio_at(self, level: int) -> float:
        if self.kind == "fixed":
            return self.lam
        return self.ratios[level]


def _check_tol(tol: float):
    if not (tol > 0.0) or not math.isfinite(tol):
        raise ValueError("tol must be positive and finite")


def k_distance(x: float, spec: CantorSpec, tol: float = DEFAULT_TOL) -> float:
    """Distance from a real x to the 1-D Cantor set, within tol.

    Descends the construction tree: outside [0,1] the nearest point is the
    closest endpoint, inside the removed middle gap it is the closest gap
    endpoint, otherwise the query is rescaled into the surviving branch.
    The descent stops once the cell size drops below tol.
    """
    _check_tol(tol)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    scale = 1.0
    level = 0
    t = float(x)
    while True:
        if t <= 0.0:
            return scale * abs(t)
        if t >= 1.0:
            return scale * (t - 1.0)
        if scale < tol or level >= spec.depth:
            return 0.0
        lam = spec.ratio_at(level)
        if lam <= t <= 1.0 - lam:
            return scale * min(t - lam, (1.0 - lam) - t)
        if t < lam:
            t = t / lam
        else:
            t = (t - (1.0 - lam)) / lam
        scale *= lam
        level += 1


def k_distance_many(x, spec: CantorSpec, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorised k_distance over an array of reals."""
    _check_tol(tol)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    t = x.ravel().copy()
    out = np.full(t.shape, np.nan)
    scale = np.ones_like(t)
    active = np.ones(t.shape, dtype=bool)
    level = 0
    while np.any(active):
        ta = t[active]
        sa = scale[active]
        da = np.full(ta.shape, np.nan)

        left = ta <= 0.0
        right = ta >= 1.0
        da[left] = sa[left] * (-ta[left])
        da[right] = sa[right] * (ta[right] - 1.0)
        open_ = ~(left | right)

        exhausted = open_ & ((sa < tol) | (level >= spec.depth))
        da[exhausted] = 0.0
        open_ &= ~exhausted

        if np.any(open_):
            lam = spec.ratio_at(level)
            to = ta[open_]
            gap = (to >= lam) & (to <= 1.0 - lam)
            dgap = np.minimum(to - lam, (1.0 - lam) - to)
            dsub = np.where(gap, dgap * sa[open_], np.nan)
            da[open_] = dsub
            # descend into the surviving branches
            lo = to < lam
            hi = to > 1.0 - lam
            to = np.where(lo, to / lam, to)
            to = np.where(hi, (to - (1.0 - lam)) / lam, to)
            ta[open_] = to
            sa[open_] = sa[open_] * np.where(gap, 1.0, lam)

        done = ~np.isnan(da)
        idx = np.flatnonzero(active)
        out[idx[done]] = da[done]
        t[idx] = ta
        scale[idx] = sa
        active[idx[done]] = False
        level += 1
    return out.reshape(x.shape)


def k_nearest(x: float, spec: CantorSpec, tol: float = DEFAULT_TOL) -> float:
    """A point of the 1-D Cantor set within tol of the nearest one to x.

    Same descent as k_distance, but tracks the construction cell so the
    minimizing endpoint can be reported.
    """
    _check_tol(tol)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    offset = 0.0
    scale = 1.0
    level = 0
    t = float(x)
    while True:
        if t <= 0.0:
            return offset
        if t >= 1.0:
            return offset + scale
        if scale < tol or level >= spec.depth:
            return offset
        lam = spec.ratio_at(level)
        if lam <= t <= 1.0 - lam:
            if t - lam <= (1.0 - lam) - t:
                return offset + scale * lam
            return offset + scale * (1.0 - lam)
        if t < lam:
            t = t / lam
        else:
            t = (t - (1.0 - lam)) / lam
            offset += scale * (1.0 - lam)
        scale *= lam
        level += 1


def k_nearest_many(x, spec: CantorSpec, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorised k_nearest over an array of reals."""
    _check_tol(tol)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    t = x.ravel().copy()
    out = np.full(t.shape, np.nan)
    offset = np.zeros_like(t)
    scale = np.ones_like(t)
    active = np.ones(t.shape, dtype=bool)
    level = 0
    while np.any(active):
        ta = t[active]
        oa = offset[active]
        sa = scale[active]
        res = np.full(ta.shape, np.nan)

        left = ta <= 0.0
        right = ta >= 1.0
        res[left] = oa[left]
        res[right] = oa[right] + sa[right]
        open_ = ~(left | right)

        exhausted = open_ & ((sa < tol) | (level >= spec.depth))
        res[exhausted] = oa[exhausted]
        open_ &= ~exhausted

        if np.any(open_):
            lam = spec.ratio_at(level)
            to = ta[open_]
            gap = (to >= lam) & (to <= 1.0 - lam)
            near_left = to - lam <= (1.0 - lam) - to
            gap_pt = oa[open_] + sa[open_] * np.where(near_left, lam, 1.0 - lam)
            res[open_] = np.where(gap, gap_pt, np.nan)
            hi = to > 1.0 - lam
            to2 = np.where(to < lam, to / lam, to)
            to2 = np.where(hi, (to - (1.0 - lam)) / lam, to2)
            ta[open_] = to2
            oa[open_] = oa[open_] + np.where(hi, sa[open_] * (1.0 - lam), 0.0)
            sa[open_] = sa[open_] * np.where(gap, 1.0, lam)

        done = ~np.isnan(res)
        idx = np.flatnonzero(active)
        out[idx[done]] = res[done]
        t[idx] = ta
        offset[idx] = oa
        scale[idx] = sa
        active[idx[done]] = False
        level += 1
    return out.reshape(x.shape)


def k_gap_mid_many(x, spec: CantorSpec, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Midpoint of the construction gap around each x (vectorised).

    Returns -inf / +inf for points left of 0 / right of 1 (half-infinite
    gaps) and nan for points inside a construction cell at the recursion
    cutoff (no surrounding gap resolved).  The midpoint is where the local
    distance function to the set peaks, which certified boundary witnesses
    need in order not to overshoot the active cone of the nearest point.
    """
    _check_tol(tol)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    t = x.ravel().copy()
    out = np.full(t.shape, np.nan)
    offset = np.zeros_like(t)
    scale = np.ones_like(t)
    active = np.ones(t.shape, dtype=bool)
    level = 0
    while np.any(active):
        ta = t[active]
        oa = offset[active]
        sa = scale[active]
        res = np.full(ta.shape, np.nan)
        settled = np.zeros(ta.shape, dtype=bool)

        left = ta <= 0.0
        right = ta >= 1.0
        res[left] = -np.inf
        res[right] = np.inf
        settled |= left | right
        open_ = ~settled

        exhausted = open_ & ((sa < tol) | (level >= spec.depth))
        settled |= exhausted        # res stays nan: no resolved gap
        open_ &= ~exhausted

        if np.any(open_):
            lam = spec.ratio_at(level)
            to = ta[open_]
            gap = (to >= lam) & (to <= 1.0 - lam)
            res[open_] = np.where(gap, oa[open_] + sa[open_] * 0.5, np.nan)
            settled_open = np.zeros(to.shape, dtype=bool)
            settled_open |= gap
            idx_open = np.flatnonzero(open_)
            settled[idx_open[settled_open]] = True
            hi = to > 1.0 - lam
            to2 = np.where(to < lam, to / lam, to)
            to2 = np.where(hi, (to - (1.0 - lam)) / lam, to2)
            ta[open_] = to2
            oa[open_] = oa[open_] + np.where(hi, sa[open_] * (1.0 - lam), 0.0)
            sa[open_] = sa[open_] * np.where(gap, 1.0, lam)

        idx = np.flatnonzero(active)
        out[idx[settled]] = res[settled]
        t[idx] = ta
        offset[idx] = oa
        scale[idx] = sa
        active[idx[settled]] = False
        level += 1
    return out.reshape(x.shape)


def c_distance(x, spec: CantorSpec, tol: float = DEFAULT_TOL) -> float:
    """Euclidean distance to the product set prod K in R^(ambient_codim).

    Nearest-point coordinates decouple on a product set, so the distance is
    the l2 norm of the per-coordinate distances.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.ambient_codim,):
        raise ValueError(
            f"point has dimension {x.shape}, expected ({spec.ambient_codim},)"
        )
    per_tol = tol / math.sqrt(spec.ambient_codim)
    d = [k_distance(float(c), spec, per_tol) for c in x]
    return float(np.hypot.reduce(d)) if len(d) > 1 else d[0]


def c_distance_grid(axes: list[np.ndarray], spec: CantorSpec,
                    tol: float = DEFAULT_TOL) -> np.ndarray:
    """c_distance on a tensor grid given the per-axis coordinates."""
    if len(axes) != spec.ambient_codim:
        raise ValueError("axis count must equal ambient_codim")
    per_tol = tol / math.sqrt(spec.ambient_codim)
    d2 = 0.0
    shape = [len(a) for a in axes]
    for i, a in enumerate(axes):
        di = k_distance_many(a, spec, per_tol)
        reshape = [1] * len(axes)
        reshape[i] = shape[i]
        d2 = d2 + di.reshape(reshape) ** 2
    return np.sqrt(d2)


def cantor_dim(spec: CantorSpec, n: int) -> float:
    """Hausdorff dimension of the (n-1)-fold product set: -(n-1) ln2 / ln lam."""
    if spec.kind != "fixed":
        raise ValueError("closed-form dimension needs a fixed-ratio spec; "
                         "use the net-hierarchy estimator instead")
    if n < 2:
        raise ValueError("n must be >= 2")
    return -(n - 1) * math.log(2.0) / math.log(spec.lam)


def fat_thin_cantor(depth: int) -> CantorSpec:
    """Variable-ratio set removing middle proportion 1/(k+2) at step k.

    The removed proportions satisfy sum 1/(k+2) = inf (so the limit set has
    zero length) while 1/(k+2) -> 0 (so its box dimension is 1).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    ratios = tuple((1.0 - 1.0 / (k + 2)) / 2.0 for k in range(1, depth + 1))
    return CantorSpec(kind="variable", ratios=ratios, max_depth=depth)


def retained_measure(spec: CantorSpec, depth: int) -> float:
    """Total length of the depth-level construction intervals."""
    m = 1.0
    for k in range(depth):
        m *= 2.0 * spec.ratio_at(k)
    return m


def construction_intervals(spec: CantorSpec, depth: int) -> np.ndarray:
    """(2^depth, 2) array of [left, right] construction intervals."""
    if depth < 0 or depth > spec.depth:
        raise ValueError(f"depth must be in [0, {spec.depth}]")
    iv = np.array([[0.0, 1.0]])
    for k in range(depth):
        lam = spec.ratio_at(k)
        length = iv[:, 1] - iv[:, 0]
        left = np.stack([iv[:, 0], iv[:, 0] + lam * length], axis=1)
        right = np.stack([iv[:, 1] - lam * length, iv[:, 1]], axis=1)
        iv = np.concatenate([left, right])
        iv = iv[np.argsort(iv[:, 0])]
    return iv


def cell_left_endpoints(spec: CantorSpec, depth: int) -> np.ndarray:
    """Sorted left endpoints of the depth-level construction intervals."""
    return construction_intervals(spec, depth)[:, 0]


def cell_endpoints(spec: CantorSpec, depth: int) -> np.ndarray:
    """Sorted distinct endpoints of the depth-level construction intervals."""
    iv = construction_intervals(spec, depth)
    return np.unique(iv.ravel())


def membership(spec: CantorSpec, x: float, depth: int | None = None) -> bool:
    """Whether x lies in the depth-level approximation of the set.

    Descends the single construction cell containing x, so the cost is
    linear in the depth rather than in the 2^depth cell count.
    """
    depth = spec.depth if depth is None else min(depth, spec.depth)
    a, b = 0.0, 1.0
    if not a <= x <= b:
        return False
    for k in range(depth):
        lam = spec.ratio_at(k)
        cell = lam * (b - a)
        if x <= a + cell:
            b = a + cell
        elif x >= b - cell:
            a = b - cell
        else:
            return False
    return True


def interval_union_distance(x, spec: CantorSpec, depth: int) -> np.ndarray:
    """Distance from x to the union of depth-level construction intervals.

    Underestimates the distance to the limit set by at most the interval
    length at that depth.
    """
    iv = construction_intervals(spec, depth)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    left, right = iv[:, 0], iv[:, 1]
    j = np.searchsorted(left, x, side="right") - 1
    jc = np.clip(j, 0, len(iv) - 1)
    inside = (j >= 0) & (x <= right[jc])
    # distance to the previous interval's right end and next interval's left end
    d_prev = np.where(j >= 0, x - right[jc], np.inf)
    jn = np.clip(j + 1, 0, len(iv) - 1)
    d_next = np.where(j + 1 <= len(iv) - 1, left[jn] - x, np.inf)
    d = np.minimum(np.abs(d_prev), np.abs(d_next))
    return np.where(inside, 0.0, d)


def box_dimension_estimate(spec: CantorSpec, depth: int,
                           box_gens: range | None = None) -> float:
    """Box-counting dimension of the depth-level interval union.

    Counts dyadic boxes of size 2^-g meeting the union and fits the slope of
    log N against g * log 2.  The default box sizes straddle the interval
    length at the given depth, the finest scale at which the approximant
    still carries information about the limit set.
    """
    iv = construction_intervals(spec, depth)
    if box_gens is None:
        finest = int(round(-math.log2(float(iv[0, 1] - iv[0, 0]))))
        box_gens = range(max(2, finest), finest + 9)
    gens, counts = [], []
    for g in box_gens:
        eps = 2.0 ** -g
        lo = np.floor(iv[:, 0] / eps).astype(np.int64)
        hi = np.floor(iv[:, 1] / eps - 1e-12).astype(np.int64)
        boxes = set()
        for a, b in zip(lo, hi):
            boxes.update(range(a, b + 1))
        gens.append(g)
        counts.append(len(boxes))
    gens = np.asarray(gens, dtype=float)
    counts = np.asarray(counts, dtype=float)
    slope = np.polyfit(gens * math.log(2.0), np.log(counts), 1)[0]
    return float(slope)
