"""Membership, boundary-distance, and component oracles for the slit domains.

The domains are built from a box D with a rectangular notch removed and a
"tent" region N(lam) pinched on the product Cantor set:

    D         = (0,1)^{n-2} x ((-2,1) x (-3/2,3/2) \\ [-1,0] x [-1,1])
    N(lam)    = {x in [0,1]^{n-1} x [-1,1] : |x_n| <= dist(x', C(lam))}
    Omega     = D \\ N(lam)
    Q0_tilde  = (0,1)^{n-2} x ((-2,1) x (-3/2,3/2) \\ [-1,1] x [-1,1])

with x' = (x_1, ..., x_{n-1}).  A planar variant Omega_2 replaces C(lam)
with a variable-ratio Cantor set of dimension 1 and length 0.

N(lam) is written with |x_n| and a symmetric slab so that the pinch set
C(lam) x {0} is approachable from both half-spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .cantor import (CantorSpec, DEFAULT_TOL, c_distance, c_distance_grid,
                     cell_left_endpoints, fat_thin_cantor,
                     interval_union_distance, k_distance)

REGION_KINDS = ("D", "N_lambda", "Omega_lambda", "Q0_tilde", "Omega2")

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class RegionSpec:
    kind: str
    n: int = 2
    cantor: CantorSpec | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("ambient dimension must be >= 2")
        if self.kind in ("N_lambda", "Omega_lambda") and self.cantor is None:
            raise ValueError(f"{self.kind} needs a Cantor spec")
        if self.kind == "Omega2" and self.n != 2:
            raise ValueError("Omega2 is planar")
        if self.cantor is not None and self.kind != "Omega2":
            if self.cantor.ambient_codim != self.n - 1:
                raise ValueError("cantor.ambient_codim must equal n - 1")

    @property
    def bbox(self) -> np.ndarray:
        """(2, n) array of [lower corner; upper corner] containing the closure."""
        n = self.n
        lo = np.zeros(n)
        hi = np.ones(n)
        if self.kind in ("D", "Omega_lambda", "Q0_tilde"):
            lo[n - 2], hi[n - 2] = -2.0, 1.0
            lo[n - 1], hi[n - 1] = -1.5, 1.5
        elif self.kind == "N_lambda":
            lo[n - 1], hi[n - 1] = -1.0, 1.0
        elif self.kind == "Omega2":
            lo[:], hi[:] = -1.0, 1.0
        return np.stack([lo, hi])


def region_spec(kind: str, lam: float | None = None, n: int = 2,
                cantor: CantorSpec | None = None) -> RegionSpec:
    """Convenience constructor; builds the Cantor spec from lam if needed."""
    if cantor is None and lam is not None:
        cantor = CantorSpec(lam=lam, ambient_codim=n - 1)
    return RegionSpec(kind=kind, n=n, cantor=cantor)


def _check_dim(spec: RegionSpec, x: np.ndarray):
    if x.shape != (spec.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({spec.n},)")


def _in_d_profile(a: float, b: float) -> bool:
    """2-D profile of D: (-2,1) x (-3/2,3/2) minus the closed notch."""
    if not (-2.0 < a < 1.0 and -1.5 < b < 1.5):
        return False
    return not (-1.0 <= a <= 0.0 and -1.0 <= b <= 1.0)


def _in_q0_profile(a: float, b: float) -> bool:
    if not (-2.0 < a < 1.0 and -1.5 < b < 1.5):
        return False
    return not (-1.0 <= a <= 1.0 and -1.0 <= b <= 1.0)


def _prefix_ok(x: np.ndarray, n: int) -> bool:
    return bool(np.all((x[: n - 2] > 0.0) & (x[: n - 2] < 1.0)))


def graph_height(spec: RegionSpec, xp: np.ndarray) -> float:
    """dist(x', C(lam)): the tent height over the first n-1 coordinates."""
    return c_distance(xp, spec.cantor, spec.tol)


def in_n_lambda(spec: RegionSpec, x: np.ndarray) -> bool:
    n = spec.n
    if not np.all((x[: n - 1] >= 0.0) & (x[: n - 1] <= 1.0)):
        return False
    if abs(x[n - 1]) > 1.0:
        return False
    return abs(x[n - 1]) <= graph_height(spec, x[: n - 1])


def region_membership(spec: RegionSpec, x) -> bool:
    """Membership in the open region (D, Omega, Q0) or closed region (N).

    Points within the distance tolerance of the tent graph are classified
    by the <= inequality on the tol-resolved distance.
    """
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    n = spec.n
    if spec.kind == "D":
        return _prefix_ok(x, n) and _in_d_profile(x[n - 2], x[n - 1])
    if spec.kind == "Q0_tilde":
        return _prefix_ok(x, n) and _in_q0_profile(x[n - 2], x[n - 1])
    if spec.kind == "N_lambda":
        return in_n_lambda(spec, x)
    if spec.kind == "Omega_lambda":
        if not (_prefix_ok(x, n) and _in_d_profile(x[n - 2], x[n - 1])):
            return False
        return not in_n_lambda(spec, x)
    if spec.kind == "Omega2":
        return omega2_membership(x, depth=None, cantor=spec.cantor)
    raise AssertionError(spec.kind)


def omega2_membership(x, depth: int | None = 12,
                      cantor: CantorSpec | None = None) -> bool:
    """Membership in Omega_2 = (-1,1)^2 minus the slit tent over [0,1].

    The Cantor set is the variable-ratio (dimension 1, length 0) set
    resolved at the given construction depth.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (2,):
        raise ValueError("Omega2 is planar")
    if cantor is None:
        cantor = fat_thin_cantor(depth if depth is not None else 12)
    depth = cantor.depth if depth is None else depth
    if depth > cantor.depth:
        raise ValueError(f"depth {depth} exceeds the spec depth {cantor.depth}")
    a, b = float(x[0]), float(x[1])
    if not (-1.0 < a < 1.0 and -1.0 < b < 1.0):
        return False
    if not (0.0 <= a <= 1.0):
        return True
    d = float(interval_union_distance([a], cantor, depth)[0])
    return abs(b) > d


def membership_grid(spec: RegionSpec, axes: list[np.ndarray]) -> np.ndarray:
    """Vectorised region membership on a tensor grid (cell centers)."""
    n = spec.n
    if len(axes) != n:
        raise ValueError("need one coordinate axis per dimension")
    shape = tuple(len(a) for a in axes)

    def broad(arr_1d, axis):
        rs = [1] * n
        rs[axis] = shape[axis]
        return np.asarray(arr_1d).reshape(rs)

    if spec.kind == "Omega2":
        cantor = spec.cantor if spec.cantor is not None else fat_thin_cantor(12)
        a, b = axes
        d = interval_union_distance(a, cantor, cantor.depth)
        in_sq = broad((a > -1) & (a < 1), 0) & broad((b > -1) & (b < 1), 1)
        on_slab = broad((a >= 0) & (a <= 1), 0)
        above = np.abs(broad(b, 1)) > broad(d, 0)
        return in_sq & (~on_slab | above)

    pre = np.ones(shape, dtype=bool)
    for i in range(n - 2):
        pre &= broad((axes[i] > 0) & (axes[i] < 1), i)
    a, b = axes[n - 2], axes[n - 1]

    if spec.kind in ("D", "Q0_tilde"):
        lo = -1.0 if spec.kind == "D" else -1.0
        hi = 0.0 if spec.kind == "D" else 1.0
        box = broad((a > -2) & (a < 1), n - 2) & broad((b > -1.5) & (b < 1.5), n - 1)
        notch = broad((a >= lo) & (a <= hi), n - 2) & broad((b >= -1) & (b <= 1), n - 1)
        return pre & box & ~notch

    g = c_distance_grid(axes[: n - 1], spec.cantor, spec.tol)
    in_slab = np.ones(shape, dtype=bool)
    for i in range(n - 1):
        in_slab &= broad((axes[i] >= 0) & (axes[i] <= 1), i)
    in_slab &= np.abs(broad(b, n - 1)) <= 1.0
    in_n = in_slab & (np.abs(broad(b, n - 1)) <= g[..., None])

    if spec.kind == "N_lambda":
        return in_n
    # Omega_lambda
    box = broad((a > -2) & (a < 1), n - 2) & broad((b > -1.5) & (b < 1.5), n - 1)
    notch = broad((a >= -1) & (a <= 0), n - 2) & broad((b >= -1) & (b <= 1), n - 1)
    return pre & box & ~notch & ~in_n


def region_membership_many(spec: RegionSpec, X) -> np.ndarray:
    """Vectorised region membership for an (m, n) array of points."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = spec.n
    if X.shape[1] != n:
        raise ValueError(f"points have dimension {X.shape[1]}, expected {n}")
    if spec.kind == "Omega2":
        return np.array([region_membership(spec, x) for x in X])
    pre = np.all((X[:, : n - 2] > 0.0) & (X[:, : n - 2] < 1.0), axis=1)
    a, b = X[:, n - 2], X[:, n - 1]
    if spec.kind in ("D", "Q0_tilde"):
        hi = 0.0 if spec.kind == "D" else 1.0
        box = (a > -2) & (a < 1) & (b > -1.5) & (b < 1.5)
        notch = (a >= -1.0) & (a <= hi) & (b >= -1.0) & (b <= 1.0)
        return pre & box & ~notch
    from .cantor import k_distance_many
    slab = np.all((X[:, : n - 1] >= 0.0) & (X[:, : n - 1] <= 1.0), axis=1)
    slab &= np.abs(b) <= 1.0
    per_tol = spec.tol / math.sqrt(n - 1)
    g2 = np.zeros(X.shape[0])
    for i in range(n - 1):
        g2 += k_distance_many(X[:, i], spec.cantor, per_tol) ** 2
    in_n = slab & (np.abs(b) <= np.sqrt(g2))
    if spec.kind == "N_lambda":
        return in_n
    box = (a > -2) & (a < 1) & (b > -1.5) & (b < 1.5)
    notch = (a >= -1.0) & (a <= 0.0) & (b >= -1.0) & (b <= 1.0)
    return pre & box & ~notch & ~in_n


def boundary_distance(spec: RegionSpec, x) -> tuple[float, float]:
    """Certified bracket [lo, hi] for dist(x, boundary of N(lam)).

    The tent boundary is contained in the graph {|x_n| = g(x')} of the
    1-Lipschitz height g, so |g(x') - |x_n|| / sqrt(2) is a valid lower
    bound; an explicit graph point above the clamped horizontal position
    gives the upper bound.
    """
    if spec.kind != "N_lambda":
        raise ValueError("boundary_distance is defined for N_lambda specs")
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    n = spec.n
    tol = spec.tol
    xp, xn = x[: n - 1], x[n - 1]
    g = graph_height(spec, xp)
    v = abs(g - abs(xn))
    lo = max(0.0, v - tol) / SQRT2
    # witness: graph point over the clamped horizontal position
    xc = np.clip(xp, 0.0, 1.0)
    gc = graph_height(spec, xc)
    sign = 1.0 if xn >= 0.0 else -1.0
    q = np.concatenate([xc, [sign * gc]])
    hi = float(np.linalg.norm(x - q)) + tol
    return lo, min(lo, hi) if hi < lo else hi


@dataclass
class ComponentMap:
    """Flood-fill labeling of region cells inside a ball window."""

    center: np.ndarray
    radius: float
    h: float
    origin: np.ndarray          # lower corner of the cell grid
    labels: np.ndarray          # -1 outside window/region, else component id
    count: int

    def label_at(self, x) -> int:
        """Component label of the cell containing x (-1 if none)."""
        x = np.asarray(x, dtype=float)
        idx = np.floor((x - self.origin) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.array(self.labels.shape)):
            return -1
        return int(self.labels[tuple(idx)])

    def cells_of(self, label: int) -> np.ndarray:
        """(m, n) array of centers of the cells carrying the given label."""
        idx = np.argwhere(self.labels == label)
        return self.origin + (idx + 0.5) * self.h


def component_label(spec: RegionSpec, center, radius: float, h: float) -> ComponentMap:
    """Deterministic flood-fill labeling of the region inside B(center, radius).

    Face adjacency (2n neighbours) is used so that the two sides of the slit
    are never connected through a grid corner.  Labels are assigned by the
    first cell of each component in lexicographic scan order.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if h > radius / 16:
        raise ValueError("grid spacing must satisfy h <= radius/16")
    center = np.asarray(center, dtype=float)
    _check_dim(spec, center)
    n = spec.n
    # cell centers on the lattice center + h*Z, so that a query point on a
    # pinch hyperplane gets a full row of centers exactly on that plane
    half = int(math.ceil(radius / h))
    m = 2 * half + 1
    origin = center - (half + 0.5) * h
    axes = [origin[i] + (np.arange(m) + 0.5) * h for i in range(n)]
    mask = membership_grid(spec, axes)
    rr = np.zeros([m] * n)
    for i in range(n):
        sh = [1] * n
        sh[i] = m
        rr = rr + (axes[i] - center[i]).reshape(sh) ** 2
    mask &= rr <= radius ** 2
    structure = ndimage.generate_binary_structure(n, 1)  # faces only
    raw, _ = ndimage.label(mask, structure=structure)
    # relabel components by first appearance in C-order scan
    flat = raw.ravel()
    order = {}
    for v in flat:
        if v != 0 and v not in order:
            order[v] = len(order)
    labels = np.full(raw.shape, -1, dtype=int)
    for v, new in order.items():
        labels[raw == v] = new
    return ComponentMap(center=center, radius=radius, h=h, origin=origin,
                        labels=labels, count=len(order))


@dataclass
class TwoSidedSample:
    """Construction-corner points on the pinch plane with side witnesses."""

    points: np.ndarray                  # (m, n), all with x_n = 0
    depth: int
    witness_labels: list[tuple[int, int]] = field(default_factory=list)
    verified: list[bool] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)


def two_sided_sample(spec: RegionSpec, depth: int, h_factor: int = 64) -> TwoSidedSample:
    """All depth-level lower-left Cantor cell corners, lifted to x_n = 0.

    Each point is checked for two-sidedness with flood fills at radii
    lam^depth and lam^depth / 2: both windows must show an upper and a lower
    component, and the small-radius components must nest into the large ones.
    """
    if spec.kind != "Omega_lambda":
        raise ValueError("two_sided_sample expects an Omega_lambda spec")
    cantor = spec.cantor
    if depth > cantor.depth:
        raise ValueError("depth exceeds the Cantor recursion cutoff")
    n = spec.n
    lefts = cell_left_endpoints(cantor, depth)
    grids = np.meshgrid(*([lefts] * (n - 1)), indexing="ij")
    pts = np.stack([g.ravel() for g in grids] + [np.zeros(grids[0].size)], axis=1)

    r = cantor.lam ** depth
    sample = TwoSidedSample(points=pts, depth=depth)
    for p in pts:
        maps = {}
        ok = True
        msg = []
        for rad in (r, r / 2):
            cm = component_label(spec, p, rad, rad / h_factor)
            h = cm.h
            # witnesses nudged off the pinch plane and off the lateral faces
            up = p + np.concatenate([np.full(n - 1, h), [4 * h]])
            dn = p + np.concatenate([np.full(n - 1, h), [-4 * h]])
            lu, ld = cm.label_at(up), cm.label_at(dn)
            if lu < 0 or ld < 0 or lu == ld:
                ok = False
                msg.append(f"r={rad:g}: witnesses not in distinct components")
            maps[rad] = (cm, lu, ld)
        if ok:
            cm_s, lu_s, ld_s = maps[r / 2]
            cm_l, lu_l, ld_l = maps[r]
            for lab_s, lab_l, side in ((lu_s, lu_l, "upper"), (ld_s, ld_l, "lower")):
                cells = cm_s.cells_of(lab_s)
                big = np.array([cm_l.label_at(c) for c in cells])
                # cells whose coarse container is masked out (tent boundary
                # misclassification at the coarser h) carry no information
                big = big[big >= 0]
                if big.size == 0 or not np.all(big == lab_l):
                    ok = False
                    msg.append(f"{side} component does not nest")
        sample.witness_labels.append((maps[r][1], maps[r][2]))
        sample.verified.append(ok)
        if not ok:
            sample.failures.append(f"point {p.tolist()}: " + "; ".join(msg))
    return sample
