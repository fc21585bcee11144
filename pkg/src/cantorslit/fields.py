"""Grid fields, masked gradients and seminorms, and projection measures.

Scalar and vector quantities live on regular cell-centered grids with a
boolean membership mask.  Finite differences never couple cells across the
mask, so the two sides of a slit stay numerically independent.  The module
also measures axis projections of unions of boxes and balls (exactly via
interval unions in the plane) and runs the cube-level energy check that
compares masked gradient energy against the scale delta^((n-p)/n) l^(n-p).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .regions import RegionSpec, membership_grid


@dataclass
class GridField:
    """Cell-centered values over a box, with a region membership mask.

    values has shape grid_shape for scalars and grid_shape + (n,) for
    vectors.  flags marks cells where a gradient component could not be
    formed (no masked-in neighbour in some direction).
    """

    bbox: np.ndarray            # (2, n): lower and upper corners
    h: float
    values: np.ndarray
    mask: np.ndarray
    kind: str = "scalar"
    flags: np.ndarray | None = None
    region: RegionSpec | None = None

    @property
    def n(self) -> int:
        return self.bbox.shape[1]

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.mask.shape

    def axes(self) -> list[np.ndarray]:
        """Cell-center coordinates along each axis."""
        out = []
        for i, m in enumerate(self.grid_shape):
            out.append(self.bbox[0, i] + (np.arange(m) + 0.5) * self.h)
        return out

    def centers(self) -> np.ndarray:
        """(prod(shape), n) array of all cell centers in C order."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def cell_index(self, x) -> tuple[int, ...] | None:
        x = np.asarray(x, dtype=float)
        idx = np.floor((x - self.bbox[0]) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.array(self.grid_shape)):
            return None
        return tuple(idx)

    def value_at(self, x):
        idx = self.cell_index(x)
        if idx is None:
            raise ValueError(f"point {x} outside the field bbox")
        return self.values[idx]


def _grid_axes(bbox: np.ndarray, h: float) -> list[np.ndarray]:
    axes = []
    for i in range(bbox.shape[1]):
        span = bbox[1, i] - bbox[0, i]
        m = span / h
        mi = round(m)
        if abs(m - mi) > 1e-9 * max(1.0, abs(m)):
            raise ValueError(f"h={h} does not divide the bbox side {span}")
        axes.append(bbox[0, i] + (np.arange(mi) + 0.5) * h)
    return axes


def grid_sample(f, region: RegionSpec | None, h: float,
                bbox: np.ndarray | None = None) -> GridField:
    """Sample a function at cell centers, masked by region membership.

    f takes an (m, n) array of points and returns m values; scalars are
    broadcast.  Non-finite samples on masked-in cells are rejected.
    region None means an unmasked field over an explicit bbox.
    """
    if h <= 0:
        raise ValueError("spacing must be positive")
    if region is None:
        if bbox is None:
            raise ValueError("an explicit bbox is required without a region")
        bbox = np.asarray(bbox, dtype=float)
        axes = _grid_axes(bbox, h)
        mask = np.ones(tuple(len(a) for a in axes), dtype=bool)
    else:
        bbox = np.asarray(region.bbox if bbox is None else bbox, dtype=float)
        axes = _grid_axes(bbox, h)
        mask = membership_grid(region, axes)
    shape = mask.shape
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    vals = np.broadcast_to(np.asarray(f(pts), dtype=float), (pts.shape[0],))
    vals = vals.reshape(shape).copy()
    if not np.all(np.isfinite(vals[mask])):
        raise ValueError("sampled values are not finite on masked-in cells")
    vals[~mask] = 0.0
    return GridField(bbox=bbox, h=h, values=vals, mask=mask, kind="scalar",
                     region=region)


def gradient(u: GridField) -> GridField:
    """Masked finite-difference gradient.

    Central differences on cells whose two axis neighbours are masked in,
    one-sided where only one is, zero (and flagged) where neither is.  No
    stencil ever reaches across the mask.  When the field carries a region,
    two neighbours are additionally coupled only if the face midpoint
    between their centers is itself in the region, so slits thinner than
    the grid spacing still decouple the two sides.
    """
    if u.kind != "scalar":
        raise ValueError("gradient expects a scalar field")
    n = u.n
    vals, mask, h = u.values, u.mask, u.h
    axes = u.axes() if u.region is not None else None
    out = np.zeros(vals.shape + (n,))
    flags = np.zeros(vals.shape, dtype=bool)
    for ax in range(n):
        up = np.zeros_like(vals)
        dn = np.zeros_like(vals)
        m_up = np.zeros_like(mask)
        m_dn = np.zeros_like(mask)
        sl_c = [slice(None)] * n
        sl_p = [slice(None)] * n
        sl_c[ax], sl_p[ax] = slice(None, -1), slice(1, None)
        up[tuple(sl_c)] = vals[tuple(sl_p)]
        m_up[tuple(sl_c)] = mask[tuple(sl_p)]
        dn[tuple(sl_p)] = vals[tuple(sl_c)]
        m_dn[tuple(sl_p)] = mask[tuple(sl_c)]
        if axes is not None:
            mid_axes = list(axes)
            mid_axes[ax] = 0.5 * (axes[ax][:-1] + axes[ax][1:])
            face_ok = membership_grid(u.region, mid_axes)
            m_up[tuple(sl_c)] &= face_ok
            m_dn[tuple(sl_p)] &= face_ok
        both = mask & m_up & m_dn
        only_up = mask & m_up & ~m_dn
        only_dn = mask & m_dn & ~m_up
        neither = mask & ~m_up & ~m_dn
        comp = np.zeros_like(vals)
        comp[both] = (up[both] - dn[both]) / (2.0 * h)
        comp[only_up] = (up[only_up] - vals[only_up]) / h
        comp[only_dn] = (vals[only_dn] - dn[only_dn]) / h
        flags |= neither
        out[..., ax] = comp
    return GridField(bbox=u.bbox, h=h, values=out, mask=mask.copy(),
                     kind="vector", flags=flags, region=u.region)


def _pairwise_sum(a: np.ndarray) -> float:
    """Fixed binary-tree summation, independent of chunking or workers."""
    a = np.asarray(a, dtype=float).ravel()
    m = a.size
    if m == 0:
        return 0.0
    while m > 1:
        half = m // 2
        a = np.concatenate([a[:half] + a[half:2 * half], a[2 * half:m]])
        m = a.size
    return float(a[0])


def seminorm_p(g: GridField, p: float, submask: np.ndarray | None = None) -> float:
    """(sum |g|^p h^n)^(1/p) over masked-in cells, deterministic order."""
    if p < 1:
        raise ValueError("p must be >= 1")
    sel = g.mask if submask is None else (g.mask & submask)
    if not np.any(sel):
        warnings.warn("seminorm over an empty mask", stacklevel=2)
        return 0.0
    if g.kind == "vector":
        mag = np.sqrt(np.sum(g.values[sel] ** 2, axis=-1))
    else:
        mag = np.abs(g.values[sel])
    total = _pairwise_sum(mag ** p) * g.h ** g.n
    return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# unions of boxes and balls, and their axis projections


@dataclass
class BoxUnion:
    """Finite union of axis-aligned boxes and round balls in R^n."""

    n: int
    boxes: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    balls: list[tuple[np.ndarray, float]] = field(default_factory=list)

    def add_box(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != (self.n,) or hi.shape != (self.n,) or np.any(lo > hi):
            raise ValueError("box corners must be ordered n-vectors")
        self.boxes.append((lo, hi))

    def add_ball(self, center, radius: float):
        center = np.asarray(center, dtype=float)
        if center.shape != (self.n,) or radius < 0:
            raise ValueError("ball needs an n-vector center and radius >= 0")
        self.balls.append((center, float(radius)))

    def is_empty(self) -> bool:
        return not self.boxes and not self.balls

    def contains_many(self, X: np.ndarray) -> np.ndarray:
        """Boolean membership of points in the closed union."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0], dtype=bool)
        for lo, hi in self.boxes:
            out |= np.all((X >= lo) & (X <= hi), axis=1)
        for c, r in self.balls:
            out |= np.sum((X - c) ** 2, axis=1) <= r * r
        return out

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray] | None:
        if self.is_empty():
            return None
        los, his = [], []
        for lo, hi in self.boxes:
            los.append(lo)
            his.append(hi)
        for c, r in self.balls:
            los.append(c - r)
            his.append(c + r)
        return np.min(los, axis=0), np.max(his, axis=0)


def interval_union_measure(intervals: list[tuple[float, float]]) -> float:
    """Total length of a union of closed intervals (exact sweep)."""
    ivs = sorted((a, b) for a, b in intervals if b > a)
    total = 0.0
    cur_a = cur_b = None
    for a, b in ivs:
        if cur_b is None or a > cur_b:
            if cur_b is not None:
                total += cur_b - cur_a
            cur_a, cur_b = a, b
        else:
            cur_b = max(cur_b, b)
    if cur_b is not None:
        total += cur_b - cur_a
    return total


def _projected_intervals(F: BoxUnion, drop: int) -> list[tuple[float, float]]:
    out = []
    keep = 1 - drop
    for lo, hi in F.boxes:
        out.append((lo[keep], hi[keep]))
    for c, r in F.balls:
        out.append((c[keep] - r, c[keep] + r))
    return out


def projection_measure(F: BoxUnion, axis: int, h: float = 2.0 ** -12) -> float:
    """(n-1)-measure of the union projected along the given axis (1-based).

    Exact interval-union sweep in the plane; for n >= 3 the projected
    boxes/disks are rasterised on a grid of spacing h over their bounding
    box (over-approximation error is at most perimeter * h per member).
    """
    if not 1 <= axis <= F.n:
        raise ValueError("axis must be between 1 and n")
    if F.is_empty():
        return 0.0
    drop = axis - 1
    if F.n == 2:
        return interval_union_measure(_projected_intervals(F, drop))
    keep = [i for i in range(F.n) if i != drop]
    lo = np.min([b[0][keep] for b in F.boxes] +
                [c[keep] - r for c, r in F.balls], axis=0)
    hi = np.max([b[1][keep] for b in F.boxes] +
                [c[keep] + r for c, r in F.balls], axis=0)
    axes = [np.arange(lo[i], hi[i] + h, h) + h / 2 for i in range(F.n - 1)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    hit = np.zeros(pts.shape[0], dtype=bool)
    for blo, bhi in F.boxes:
        hit |= np.all((pts >= blo[keep]) & (pts <= bhi[keep]), axis=1)
    for c, r in F.balls:
        hit |= np.sum((pts - c[keep]) ** 2, axis=1) <= r * r
    return float(np.count_nonzero(hit)) * h ** (F.n - 1)


def pixel_projection_measure(F: BoxUnion, axis: int, h: float) -> float:
    """Pixel-counting oracle for the projected measure (1-D rasterisation)."""
    if F.n != 2:
        raise ValueError("the pixel oracle is planar")
    ivs = _projected_intervals(F, axis - 1)
    if not ivs:
        return 0.0
    lo = min(a for a, _ in ivs)
    hi = max(b for _, b in ivs)
    m = int(math.ceil((hi - lo) / h)) + 1
    t = lo + (np.arange(m) + 0.5) * h
    hit = np.zeros(m, dtype=bool)
    for a, b in ivs:
        hit |= (t >= a) & (t <= b)
    return float(np.count_nonzero(hit)) * h


# ---------------------------------------------------------------------------
# the cube-level energy check


class EnergyHypothesisError(ValueError):
    """Raised when a named hypothesis of the energy check fails."""

    def __init__(self, clause: str, detail: str):
        self.clause = clause
        super().__init__(f"hypothesis clause {clause!r} failed: {detail}")


def poincare_energy_check(Q, F: BoxUnion, f: GridField, delta: float,
                          p: float, zero_tol: float = 1e-9) -> dict:
    """Masked gradient energy on Q \\ F against delta^((n-p)/n) l(Q)^(n-p).

    Q is (lo, hi) corner arrays or any object exposing lo/hi.  Hypotheses
    checked numerically before the energy is formed: every axis projection
    of F is small relative to the projected cube face (clause
    "projection"), and both level sets {f = 0} and {f = 1} occupy at least
    delta l^n / 2^n of the concentric half cube (clause "level-set").
    """
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if hasattr(Q, "lo"):
        qlo, qhi = np.asarray(Q.lo, dtype=float), np.asarray(Q.hi, dtype=float)
    else:
        qlo, qhi = (np.asarray(v, dtype=float) for v in Q)
    n = f.n
    ell = float(qhi[0] - qlo[0])
    if not np.allclose(qhi - qlo, ell):
        raise ValueError("Q must be a cube")

    face = ell ** (n - 1)
    budget = delta / (2 * n * 2 ** n) * face
    for axis in range(1, n + 1):
        mu = projection_measure(F, axis) if not F.is_empty() else 0.0
        if mu > budget:
            raise EnergyHypothesisError(
                "projection",
                f"axis {axis}: measure {mu:.6g} exceeds budget {budget:.6g}")

    centers = f.centers().reshape(f.grid_shape + (n,))
    half_lo = qlo + ell / 4
    half_hi = qhi - ell / 4
    in_half = np.all((centers >= half_lo) & (centers <= half_hi), axis=-1)
    in_half &= f.mask
    cellvol = f.h ** n
    m_zero = float(np.count_nonzero(in_half & (np.abs(f.values) <= zero_tol))) * cellvol
    m_one = float(np.count_nonzero(in_half & (np.abs(f.values - 1.0) <= zero_tol))) * cellvol
    need = delta * ell ** n / 2 ** n
    if min(m_zero, m_one) <= need:
        raise EnergyHypothesisError(
            "level-set",
            f"min(m(f=0), m(f=1)) = {min(m_zero, m_one):.6g} <= {need:.6g}")

    in_q = np.all((centers >= qlo) & (centers <= qhi), axis=-1)
    if not F.is_empty():
        flat = centers.reshape(-1, n)
        in_q &= ~F.contains_many(flat).reshape(f.grid_shape)
    g = gradient(f)
    lhs = seminorm_p(g, p, submask=in_q) ** p
    scale = delta ** ((n - p) / n) * ell ** (n - p)
    return {"lhs": lhs, "scale": scale, "ratio": lhs / scale}
