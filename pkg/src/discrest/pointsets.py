"""Frequency point sets on the paraboloid and the sphere.

Coordinates are exact :class:`fractions.Fraction` values. A point is a plain
tuple of Fractions; :class:`PointSet` bundles the tuple of points with the
ambient dimension, the surface tag and an optional separation claim.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ._exact import cmp_sqrt, format_fraction, scaled_integers, sqrt_fraction, to_fraction
from .exceptions import GuardError, ParameterError, UnsupportedSurfaceError

SURFACES = ("paraboloid", "sphere", "none")

FrequencyPoint = tuple  # tuple[Fraction, ...]

MAX_LATTICE_DIM = 6
MIN_GAP_MAX_POINTS = 200
# dyadic snapping: parameters on 2^-10 so paraboloid heights have denominator <= 2^20
_PARABOLOID_SNAP = 2**10
_SPHERE_SNAP = 2**9
_FLAT_SNAP = 2**20


def as_point(coords) -> FrequencyPoint:
    return tuple(to_fraction(c) for c in coords)


def on_paraboloid(pt: FrequencyPoint) -> bool:
    return pt[-1] == sum(c * c for c in pt[:-1])


def on_sphere(pt: FrequencyPoint, tol: float | None = None) -> bool:
    r2 = sum(c * c for c in pt)
    if tol is None:
        return r2 == 1
    return abs(float(r2) - 1.0) <= tol


@dataclass(frozen=True)
class PointSet:
    """A finite set of distinct frequency points.

    ``delta``, when set, claims that every pair of points is at distance at
    least ``sqrt(delta)``; the claim is verified on construction. ``tol`` is the
    float-tolerance tag for sphere points that are not exactly rational.
    """

    points: tuple
    n: int
    surface: str = "none"
    delta: Fraction | None = None
    tol: float | None = None

    def __post_init__(self):
        pts = tuple(as_point(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if self.n < 2:
            raise ParameterError(f"ambient dimension must be >= 2, got {self.n}")
        if self.surface not in SURFACES:
            raise ParameterError(f"unknown surface {self.surface!r}")
        for p in pts:
            if len(p) != self.n:
                raise ParameterError(f"point {p} has dimension {len(p)}, expected {self.n}")
        if len(set(pts)) != len(pts):
            raise ParameterError("points must be distinct")
        if self.surface == "paraboloid":
            bad = [p for p in pts if not on_paraboloid(p)]
            if bad:
                raise ParameterError(f"point {bad[0]} is not on the paraboloid")
        elif self.surface == "sphere":
            bad = [p for p in pts if not on_sphere(p, self.tol)]
            if bad:
                raise ParameterError(f"point {bad[0]} is not on the unit sphere")
        if self.delta is not None:
            d = to_fraction(self.delta)
            if d <= 0:
                raise ParameterError("delta must be positive")
            object.__setattr__(self, "delta", d)
            if not check_separation(pts, d):
                raise ParameterError(f"points are not sqrt({d})-separated")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def to_array(self) -> np.ndarray:
        """Float64 copy of the coordinates, shape ``(len(self), n)``."""
        return np.array([[float(c) for c in p] for p in self.points], dtype=float).reshape(len(self), self.n)

    def projections(self) -> list[FrequencyPoint]:
        """Drop the last coordinate (the height on the paraboloid)."""
        return [p[:-1] for p in self.points]

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for p in self.points for c in p)

    def translated(self, v) -> "PointSet":
        v = as_point(v)
        pts = [tuple(a + b for a, b in zip(p, v)) for p in self.points]
        return PointSet(pts, self.n, "none", self.delta)

    def permuted(self, order: Sequence[int]) -> "PointSet":
        return PointSet([self.points[i] for i in order], self.n, self.surface, self.delta, self.tol)


@dataclass(frozen=True)
class Cap:
    """One cube of the cap cover, indexed on the grid ``(sqrt(delta)/2) Z^{n-1}``.

    The center is ``index * sqrt(delta) / 2``; it is exact when ``delta`` is a
    rational square and a float otherwise.
    """

    index: tuple
    delta: Fraction
    members: list = field(default_factory=list)

    @property
    def side(self):
        root = sqrt_fraction(self.delta)
        return root if root is not None else math.sqrt(self.delta)

    @property
    def center(self) -> tuple:
        half = self.side / 2
        return tuple(m * half for m in self.index)


class EnergyGap(NamedTuple):
    value: float
    value_sq: Fraction


def gen_lattice_paraboloid(n: int, N: int) -> PointSet:
    """All ``(xi, |xi|^2)`` with integer ``|xi_i| <= N``, i.e. ``(2N+1)^(n-1)`` points."""
    if not isinstance(n, (int, np.integer)) or not 2 <= n <= MAX_LATTICE_DIM:
        raise ParameterError(f"n must be an integer in [2, {MAX_LATTICE_DIM}], got {n!r}")
    if not isinstance(N, (int, np.integer)) or N < 0:
        raise ParameterError(f"N must be a non-negative integer, got {N!r}")
    rng = range(-N, N + 1)
    pts = [tuple(xi) + (sum(x * x for x in xi),) for xi in itertools.product(rng, repeat=n - 1)]
    return PointSet(pts, n, "paraboloid")


def _lift(params: np.ndarray, surface: str) -> list[FrequencyPoint]:
    """Snap float parameters to dyadic rationals and lift them onto the surface."""
    out = []
    for u in params:
        if surface == "paraboloid":
            xi = [Fraction(int(round(x * _PARABOLOID_SNAP)), _PARABOLOID_SNAP) for x in u]
            out.append(tuple(xi) + (sum(x * x for x in xi),))
        elif surface == "sphere":
            # inverse stereographic projection keeps rational points rational
            uu = [Fraction(int(round(x * _SPHERE_SNAP)), _SPHERE_SNAP) for x in u]
            r2 = sum(x * x for x in uu)
            out.append(tuple(2 * x / (r2 + 1) for x in uu) + ((r2 - 1) / (r2 + 1),))
        else:
            out.append(tuple(Fraction(int(round(x * _FLAT_SNAP)), _FLAT_SNAP) for x in u))
    return out


def gen_separated_sample(surface: str, n: int, delta, seed: int, *, max_net: int = 200_000) -> PointSet:
    """Greedy ``sqrt(delta)``-separated subset of a jittered net of the parameter box.

    The net has spacing ``sqrt(delta)`` on ``[-1/2, 1/2]^(n-1)`` (``^n`` for
    ``surface="none"``); every node is jittered by at most a quarter spacing,
    lifted onto the surface with rational coordinates, and kept if it is far
    enough from everything kept before it (visiting nodes in random order).
    """
    if surface not in SURFACES:
        raise ParameterError(f"unknown surface {surface!r}")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ParameterError(f"n must be an integer >= 2, got {n!r}")
    delta = to_fraction(delta)
    if not 0 < delta <= 1:
        raise ParameterError(f"delta must lie in (0, 1], got {delta}")
    dim = n if surface == "none" else n - 1
    s = math.sqrt(delta)
    m_max = int(math.floor(0.5 / s + 1e-12))
    axis = np.arange(-m_max, m_max + 1) * s
    if len(axis) ** dim > max_net:
        raise GuardError(f"net would have {len(axis) ** dim} nodes (limit {max_net})")
    net = np.array(list(itertools.product(axis, repeat=dim)), dtype=float).reshape(-1, dim)

    rng = np.random.default_rng(seed)
    jitter = rng.uniform(-s / 4, s / 4, size=net.shape)
    params = np.clip(net + jitter, -0.5, 0.5)
    order = rng.permutation(len(params))
    candidates = _lift(params[order], surface)

    kept: list[FrequencyPoint] = []
    for c in candidates:
        if c in kept:
            continue
        if all(sum((a - b) ** 2 for a, b in zip(c, k)) >= delta for k in kept):
            kept.append(c)
    ps = PointSet(kept, n, surface, delta)
    return ps


def _pairwise_sq_distances(points) -> tuple[np.ndarray, int]:
    X, scale = scaled_integers(points, fits=lambda m: 4 * m * m * len(points[0]) < 2**62)
    diff = X[:, None, :] - X[None, :, :]
    return (diff * diff).sum(axis=-1), scale


def check_separation(ps, delta) -> bool:
    """True iff every pair of points has squared distance ``>= delta`` (exact)."""
    pts = [as_point(p) for p in ps]
    delta = to_fraction(delta)
    if len(pts) < 2:
        return True
    D, scale = _pairwise_sq_distances(pts)
    iu = np.triu_indices(len(pts), k=1)
    smallest = int(D[iu].min())
    return Fraction(smallest, scale * scale) >= delta


def _min_cap_index(x: Fraction, delta: Fraction) -> int:
    # smallest m with x < (m + 1) * sqrt(delta) / 2, i.e. (m + 1) sqrt(delta) > 2x
    approx = math.ceil(2 * float(x) / math.sqrt(delta)) - 1
    m = approx - 2
    while cmp_sqrt(Fraction(m + 1), delta, 2 * x) <= 0:
        m += 1
    return m


def _max_grid_index(delta: Fraction) -> int:
    # largest m with m * sqrt(delta) / 2 <= 1/2, i.e. m sqrt(delta) <= 1
    m = int(1 / math.sqrt(delta)) + 2
    while cmp_sqrt(Fraction(m), delta, Fraction(1)) > 0:
        m -= 1
    return m


def cap_partition(ps: PointSet, delta) -> list[Cap]:
    """Assign every point to one cube ``c + [-sqrt(delta)/2, sqrt(delta)/2)^(n-1)``.

    Centers run over ``(sqrt(delta)/2) Z^(n-1)`` inside ``[-1/2, 1/2]^(n-1)``.
    Cubes are half-open on the upper side. Neighbouring cubes overlap; a point
    covered by several goes to the lexicographically smallest center. Empty caps are omitted and the result
    is sorted by center.
    """
    if ps.surface != "paraboloid":
        raise UnsupportedSurfaceError(f"cap partitions are only defined on the paraboloid, got {ps.surface!r}")
    delta = to_fraction(delta)
    if not 0 < delta <= 1:
        raise ParameterError(f"delta must lie in (0, 1], got {delta}")
    m_hi = _max_grid_index(delta)
    caps: dict[tuple, Cap] = {}
    for idx, pt in enumerate(ps.points):
        index = []
        for x in pt[:-1]:
            m = max(_min_cap_index(x, delta), -m_hi)
            # lower edge: (m - 1) sqrt(delta) <= 2x
            if m > m_hi or cmp_sqrt(Fraction(m - 1), delta, 2 * x) > 0:
                raise ParameterError(f"point {pt} lies outside the parameter box [-1/2, 1/2]^{ps.n - 1}")
            index.append(m)
        key = tuple(index)
        caps.setdefault(key, Cap(key, delta)).members.append(idx)
    return [caps[k] for k in sorted(caps)]


def cap_centers(n: int, delta) -> list[tuple]:
    """All candidate cap centers (as grid indices) for dimension ``n``."""
    m_hi = _max_grid_index(to_fraction(delta))
    return list(itertools.product(range(-m_hi, m_hi + 1), repeat=n - 1))


def min_energy_gap(ps: PointSet) -> EnergyGap | None:
    """Smallest nonzero Euclidean norm of ``a + b - c - d`` over points of ``ps``.

    Every such combination is a difference of two pair sums, so this is the
    closest-pair distance among the distinct pair sums. A k-d tree proposes
    candidates in floating point; the winner is settled on exact integers.
    """
    if len(ps) > MIN_GAP_MAX_POINTS:
        raise GuardError(f"min_energy_gap is limited to {MIN_GAP_MAX_POINTS} points, got {len(ps)}")
    if len(ps) < 2:
        return None
    X, scale = scaled_integers(ps.points, fits=lambda m: 16 * m * m * ps.n < 2**62)
    i, j = np.triu_indices(len(ps))
    sums = X[i] + X[j]
    uniq = np.unique(sums, axis=0) if sums.dtype != object else np.array(sorted(set(map(tuple, sums))), dtype=object)
    if len(uniq) < 2:
        return None
    tree = cKDTree(uniq.astype(float))
    dist, _ = tree.query(uniq.astype(float), k=2)
    d_float = float(dist[:, 1].min())
    pairs = tree.query_pairs(d_float * (1 + 1e-9) + 1e-300, output_type="ndarray")
    diff = uniq[pairs[:, 0]] - uniq[pairs[:, 1]]
    best = min(int(v) for v in (diff * diff).sum(axis=1))
    value_sq = Fraction(best, scale * scale)
    return EnergyGap(math.sqrt(value_sq), value_sq)


def read_pointset(path) -> PointSet:
    """Parse the text format: a ``n=.. surface=.. delta=..`` header, then one point per line."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParameterError(f"{path}: empty point file")
    header = {}
    for tok in lines[0].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise ParameterError(f"{path}: malformed header token {tok!r}")
        header[key] = val
    try:
        n = int(header["n"])
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"{path}: header needs n=<int>") from exc
    surface = header.get("surface", "none")
    delta_txt = header.get("delta", "none")
    delta = None if delta_txt == "none" else to_fraction(delta_txt)
    points = [as_point(ln.split()) for ln in lines[1:]]
    return PointSet(points, n, surface, delta)


def format_pointset(ps: PointSet) -> str:
    delta = "none" if ps.delta is None else format_fraction(ps.delta)
    out = [f"n={ps.n} surface={ps.surface} delta={delta}"]
    out += [" ".join(format_fraction(c) for c in p) for p in ps.points]
    return "\n".join(out) + "\n"


def write_pointset(ps: PointSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_pointset(ps))


def gen_lattice_subset(n: int, N: int, size: int, seed: int) -> PointSet:
    """First ``size`` points of a seeded shuffle of the lattice paraboloid.

    Prefixes are nested: growing ``size`` with a fixed seed only adds points.
    """
    full = gen_lattice_paraboloid(n, N)
    if not 0 <= size <= len(full):
        raise ParameterError(f"size must lie in [0, {len(full)}], got {size}")
    order = np.random.default_rng(seed).permutation(len(full))[:size]
    return PointSet([full.points[i] for i in order], n, "paraboloid")


def gen_sphere_rational(n: int, q: int, size: int, seed: int) -> PointSet:
    """Nested random prefixes of rational sphere points.

    The pool is the image of ``{a/q : a integer, |a| <= q}^(n-1)`` under inverse
    stereographic projection, which lands exactly on the unit sphere.
    """
    if n < 2 or q < 1:
        raise ParameterError("need n >= 2 and q >= 1")
    pool = []
    for a in itertools.product(range(-q, q + 1), repeat=n - 1):
        u = [Fraction(x, q) for x in a]
        r2 = sum(x * x for x in u)
        pool.append(tuple(2 * x / (r2 + 1) for x in u) + ((r2 - 1) / (r2 + 1),))
    if not 0 <= size <= len(pool):
        raise ParameterError(f"size must lie in [0, {len(pool)}], got {size}")
    order = np.random.default_rng(seed).permutation(len(pool))[:size]
    return PointSet([pool[i] for i in order], n, "sphere")
