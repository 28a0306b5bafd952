"""Exact incidence geometry behind the energy bounds.

Everything here is exact: rationals are cleared to integers before any
vectorised arithmetic, and the ``sqrt(3)`` coordinates of the ``E_3`` map
are carried symbolically as ``(u, v)`` meaning ``(u, v*sqrt(3))``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from ._exact import common_denominator, scaled_integers, to_fraction
from .exceptions import GuardError, ParameterError
from .pointsets import FrequencyPoint, PointSet, as_point, on_paraboloid

RIGHT_ANGLE_LIMIT = 2000
ANGLE_LIMIT = 500
LINE_LIMIT = 10**4
ST_CONSTANT = 4


class Circle(NamedTuple):
    center: tuple
    radius_sq: Fraction

    def contains(self, pt) -> bool:
        return sum((a - c) ** 2 for a, c in zip(pt, self.center)) == self.radius_sq


class Line2D(NamedTuple):
    """``a x + b y = c`` with coprime integers, first nonzero of ``(a, b)`` positive."""

    a: int
    b: int
    c: int

    @classmethod
    def from_coeffs(cls, a, b, c) -> "Line2D":
        a, b, c = (to_fraction(t) for t in (a, b, c))
        if a == 0 and b == 0:
            raise ParameterError("a line needs (a, b) != (0, 0)")
        den = math.lcm(a.denominator, b.denominator, c.denominator)
        ia, ib, ic = (int(t * den) for t in (a, b, c))
        g = math.gcd(ia, ib, ic)
        ia, ib, ic = ia // g, ib // g, ic // g
        if ia < 0 or (ia == 0 and ib < 0):
            ia, ib, ic = -ia, -ib, -ic
        return cls(ia, ib, ic)

    @classmethod
    def through(cls, p, q) -> "Line2D":
        p, q = as_point(p), as_point(q)
        if p == q:
            raise ParameterError("two distinct points are needed to determine a line")
        a = q[1] - p[1]
        b = p[0] - q[0]
        return cls.from_coeffs(a, b, a * p[0] + b * p[1])

    def contains(self, pt) -> bool:
        return self.a * pt[0] + self.b * pt[1] == self.c


@dataclass
class QuadrupleVerdict:
    concyclic: bool
    diametric: bool
    right_angle: bool | None  # None when P1, P2, P3 are not distinct


@dataclass
class IncidenceReport:
    n_points: int
    n_lines: int
    incidences: int
    st_bound: float
    wolff_bound: float
    related_pairs: list = field(default_factory=list)  # (line index, point index)
    max_related_per_line: int = 0
    nonrelated_incidences: int | None = None
    rich_lines: int | None = None
    cs_bound: float | None = None

    @property
    def st_ratio(self) -> float:
        return self.incidences / self.st_bound if self.st_bound else 0.0

    @property
    def within_wolff_bound(self) -> bool | None:
        if self.nonrelated_incidences is None:
            return None
        return self.nonrelated_incidences <= self.wolff_bound

    @property
    def within_cs_bound(self) -> bool | None:
        if self.nonrelated_incidences is None:
            return None
        return self.nonrelated_incidences <= self.cs_bound + 1e-9

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(st_ratio=self.st_ratio, within_wolff_bound=self.within_wolff_bound,
                 within_cs_bound=self.within_cs_bound)
        return d


def _check_p2(pt: FrequencyPoint):
    if len(pt) != 3 or not on_paraboloid(pt):
        raise ParameterError(f"{pt} is not a point of the paraboloid in R^3")


def circle_of_pair_sum(eta1, eta2) -> Circle:
    """The circle through the projections of ``eta1``, ``eta2`` determined by their sum.

    With ``(A, B, C) = eta1 + eta2`` both projections lie on the circle of
    center ``(A/2, B/2)`` and squared radius ``(2C - A^2 - B^2) / 4``.
    """
    eta1, eta2 = as_point(eta1), as_point(eta2)
    _check_p2(eta1)
    _check_p2(eta2)
    A, B, C = (x + y for x, y in zip(eta1, eta2))
    return Circle((A / 2, B / 2), (2 * C - A * A - B * B) / 4)


def verify_quadruple_geometry(q) -> QuadrupleVerdict:
    """Check the planar picture of an additive quadruple ``eta1 + eta2 = eta3 + eta4`` on P^2.

    Returns whether the four projections are concyclic, whether both pairs
    are diametrically opposite (``P1 + P2 == P3 + P4 == (A, B)``) and whether
    the angle at ``P3`` subtended by ``P1, P2`` is right.
    """
    e1, e2, e3, e4 = (as_point(e) for e in q)
    for e in (e1, e2, e3, e4):
        _check_p2(e)
    if tuple(a + b for a, b in zip(e1, e2)) != tuple(a + b for a, b in zip(e3, e4)):
        raise ParameterError("the quadruple does not satisfy eta1 + eta2 == eta3 + eta4")
    circle = circle_of_pair_sum(e1, e2)
    P = [e[:2] for e in (e1, e2, e3, e4)]
    concyclic = all(circle.contains(pt) for pt in P)
    AB = (e1[0] + e2[0], e1[1] + e2[1])
    diametric = (P[0][0] + P[1][0], P[0][1] + P[1][1]) == AB == (P[2][0] + P[3][0], P[2][1] + P[3][1])
    right = None
    if len({P[0], P[1], P[2]}) == 3:
        u = (P[0][0] - P[2][0], P[0][1] - P[2][1])
        v = (P[1][0] - P[2][0], P[1][1] - P[2][1])
        right = u[0] * v[0] + u[1] * v[1] == 0
    return QuadrupleVerdict(concyclic, diametric, right)


def verify_quadruples(ps: PointSet, quads: np.ndarray) -> dict:
    """Vectorised :func:`verify_quadruple_geometry` over index rows of ``ps``.

    Works on ``L * coordinates`` for the common denominator ``L``; the
    circle equation becomes ``(2X - XA)^2 + (2Y - XB)^2 == 2 L XC - XA^2 - XB^2``.
    Returns failure counts per verdict.
    """
    if ps.n != 3 or ps.surface != "paraboloid":
        raise ParameterError("quadruple geometry needs a point set on the paraboloid in R^3")
    quads = np.asarray(quads, dtype=np.int64).reshape(-1, 4)
    L = common_denominator(ps.points)
    X, _ = scaled_integers(ps.points, L, fits=lambda m: 64 * m * m < 2**62 and 8 * L * m < 2**62)
    E = [X[quads[:, j]] for j in range(4)]
    s12, s34 = E[0] + E[1], E[2] + E[3]
    if np.any(s12 != s34):
        raise ParameterError("some rows do not satisfy eta1 + eta2 == eta3 + eta4")
    A, B, C = s12[:, 0], s12[:, 1], s12[:, 2]
    rhs = 2 * L * C - A * A - B * B
    on_circle = np.ones(len(quads), dtype=bool)
    for e in E:
        on_circle &= (2 * e[:, 0] - A) ** 2 + (2 * e[:, 1] - B) ** 2 == rhs
    diametric = np.all(s12[:, :2] == s34[:, :2], axis=1)
    P = [e[:, :2] for e in E]
    distinct = ~(np.all(P[0] == P[1], axis=1) | np.all(P[0] == P[2], axis=1) | np.all(P[1] == P[2], axis=1))
    dot = ((P[0] - P[2]) * (P[1] - P[2])).sum(axis=1)
    right = dot == 0
    return {
        "checked": int(len(quads)),
        "concyclic_failures": int((~on_circle).sum()),
        "diametric_failures": int((~diametric).sum()),
        "right_angle_checked": int(distinct.sum()),
        "right_angle_failures": int((distinct & ~right).sum()),
    }


def _plane_ints(points, headroom):
    pts = [as_point(p) for p in points]
    return scaled_integers(pts, fits=lambda m: headroom(m) < 2**62)[0]


def count_right_angles(points) -> int:
    """Number of ``(apex, {p, q})`` with ``(p - apex) . (q - apex) == 0``, all three distinct."""
    pts = list(dict.fromkeys(as_point(p) for p in points))
    N = len(pts)
    if N > RIGHT_ANGLE_LIMIT:
        raise GuardError(f"count_right_angles is limited to {RIGHT_ANGLE_LIMIT} points, got {N}")
    if N < 3:
        return 0
    d = len(pts[0])
    if d not in (2, 3, 4) or any(len(p) != d for p in pts):
        raise ParameterError("points must share a dimension in {2, 3, 4}")
    X = _plane_ints(pts, lambda m: 4 * m * m * d)
    total = 0
    for i in range(N):
        V = np.delete(X, i, axis=0) - X[i]
        G = V @ V.T
        total += int((np.triu(G == 0, k=1)).sum())
    return total


class AngleKey(NamedTuple):
    """An angle in ``[0, pi]`` keyed exactly by the sign of its cosine and ``cos^2``."""

    sign: int
    cos_sq: Fraction

    @property
    def degrees(self) -> float:
        return math.degrees(math.acos(self.sign * math.sqrt(self.cos_sq)))


class AngleRepetition(NamedTuple):
    angle: AngleKey
    count: int
    ratio: float  # count / (N^2 log N)


def max_angle_repetition(points) -> AngleRepetition | None:
    """Most frequent nonzero angle ``p-apex-q`` over apexes and unordered pairs ``{p, q}``.

    Angles are keyed exactly by ``(sign(cos), cos^2)``. ``ratio`` compares the
    count with the ``N^2 log N`` repetition bound.
    """
    pts = list(dict.fromkeys(as_point(p) for p in points))
    N = len(pts)
    if N > ANGLE_LIMIT:
        raise GuardError(f"max_angle_repetition is limited to {ANGLE_LIMIT} points, got {N}")
    if N < 3:
        return None
    if any(len(p) != 2 for p in pts):
        raise ParameterError("max_angle_repetition needs planar points")
    X = _plane_ints(pts, lambda m: (2 * m) ** 4 * 4)
    counts: Counter = Counter()
    iu = np.triu_indices(N - 1, k=1)
    for i in range(N):
        V = np.delete(X, i, axis=0) - X[i]
        dots = (V @ V.T)[iu]
        norms = (V * V).sum(axis=1)
        den = norms[iu[0]] * norms[iu[1]]
        num = dots * dots
        sign = np.sign(dots)
        g = np.gcd(num, den) if X.dtype != object else np.array([math.gcd(int(a), int(b)) for a, b in zip(num, den)])
        keys = np.stack([sign, num // g, den // g], axis=1)
        # cos = 1 is the zero angle: p and q on the same ray from the apex
        keys = keys[~((keys[:, 0] == 1) & (keys[:, 1] == keys[:, 2]))]
        if len(keys) == 0:
            continue
        uk, uc = np.unique(keys.astype(np.int64) if X.dtype != object else keys, axis=0, return_counts=True)
        for k, c in zip(uk, uc):
            counts[(int(k[0]), int(k[1]), int(k[2]))] += int(c)
    if not counts:
        return None
    (s, a, b), best = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
    return AngleRepetition(AngleKey(s, Fraction(a, b)), best, best / (N * N * math.log(N)))


def _incidence_matrix(points, lines) -> np.ndarray:
    pts = [as_point(p) for p in points]
    lines = [ln if isinstance(ln, Line2D) else Line2D.from_coeffs(*ln) for ln in lines]
    if len(pts) > LINE_LIMIT or len(lines) > LINE_LIMIT:
        raise GuardError(f"incidence counts are limited to {LINE_LIMIT} points and lines")
    if any(len(p) != 2 for p in pts):
        raise ParameterError("incidences need planar points")
    if not pts or not lines:
        return np.zeros((len(lines), len(pts)), dtype=bool)
    X, L = scaled_integers(pts, fits=lambda m: m < 2**30)
    W = np.array([[ln.a, ln.b, ln.c] for ln in lines], dtype=object)
    big = max(abs(int(v)) for v in W.ravel())
    if X.dtype != object and big * L < 2**30:
        W = W.astype(np.int64)
    else:
        X = X.astype(object)
    out = np.zeros((len(lines), len(pts)), dtype=bool)
    step = max(1, 2**22 // len(pts))
    for s in range(0, len(lines), step):
        w = W[s:s + step]
        out[s:s + step] = (w[:, :1] * X[None, :, 0] + w[:, 1:2] * X[None, :, 1]) == w[:, 2:3] * L
    return out


def _bounds(n_points, n_lines):
    st = ST_CONSTANT * (n_lines + n_points + (n_lines * n_points) ** (2 / 3))
    return st, math.sqrt(n_lines) * n_points


def point_line_incidences(points, lines) -> IncidenceReport:
    """Exact incidence count with the Szemeredi-Trotter envelope ``4(|W| + |P| + (|W||P|)^(2/3))``."""
    M = _incidence_matrix(points, lines)
    n_lines, n_points = M.shape
    st, wolff = _bounds(n_points, n_lines)
    return IncidenceReport(n_points, n_lines, int(M.sum()), st, wolff)


def wolff_relation(points, lines) -> IncidenceReport:
    """Relate a line to a point when that point is the only one of ``points`` on it.

    ``nonrelated_incidences`` counts incidences on lines holding two or more
    points. Two bounds are reported for it: ``wolff_bound = sqrt(|W|) |P|``
    and ``cs_bound``, the root of ``I^2 = w (|P|^2 - |P| + I)`` with ``w`` the
    number of such rich lines, which is what Cauchy-Schwarz over the rich
    lines gives once distinct lines share at most one pair of points.
    The first can fail: three non-collinear points and their three lines give
    ``I = 6 > 3 sqrt(3)``.
    """
    M = _incidence_matrix(points, lines)
    n_lines, n_points = M.shape
    st, wolff = _bounds(n_points, n_lines)
    per_line = M.sum(axis=1)
    single = np.flatnonzero(per_line == 1)
    related = [(int(li), int(np.flatnonzero(M[li])[0])) for li in single]
    rich = per_line >= 2
    w = int(rich.sum())
    I = int(per_line[rich].sum())
    P = n_points
    cs = (w + math.sqrt(w * w + 4 * w * (P * P - P))) / 2
    related_per_line = Counter(li for li, _ in related)
    return IncidenceReport(
        n_points, n_lines, int(M.sum()), st, wolff,
        related_pairs=related,
        max_related_per_line=max(related_per_line.values(), default=0),
        nonrelated_incidences=I,
        rich_lines=w,
        cs_bound=cs,
    )


class E3Point(NamedTuple):
    """The point ``(u, v * sqrt(3))``."""

    u: Fraction
    v: Fraction


def _e3_sq_dist(p: E3Point, q: E3Point) -> Fraction:
    return (p.u - q.u) ** 2 + 3 * (p.v - q.v) ** 2


def e3_point(x1, x2) -> E3Point:
    x1, x2 = to_fraction(x1), to_fraction(x2)
    return E3Point(3 * (x1 + x2), x1 - x2)


def e3_circle_map(x1, x2, x3) -> tuple[E3Point, Circle, bool]:
    """Map a triple on the parabola to ``(3(x1 + x2), sqrt(3)(x1 - x2))`` and its circle.

    With ``n = x1 + x2 + x3`` and ``j = x1^2 + x2^2 + x3^2`` the circle has
    center ``(2n, 0)`` and squared radius ``6j - 2n^2``. The third value
    reports exact membership, ``(u - 2n)^2 + 3 v^2 == 6j - 2n^2``.
    """
    xs = [to_fraction(x) for x in (x1, x2, x3)]
    n = sum(xs)
    j = sum(x * x for x in xs)
    pt = e3_point(xs[0], xs[1])
    circle = Circle((2 * n, Fraction(0)), 6 * j - 2 * n * n)
    return pt, circle, (pt.u - 2 * n) ** 2 + 3 * pt.v**2 == circle.radius_sq


def equilateral_check(x1, x2, x3) -> tuple[bool, Fraction]:
    """Are the images of (x1, x2), (x2, x3), (x3, x1) an equilateral triangle? Returns the squared side too."""
    xs = [to_fraction(x) for x in (x1, x2, x3)]
    P = [e3_point(xs[i], xs[j]) for i, j in ((0, 1), (1, 2), (2, 0))]
    d = [_e3_sq_dist(P[0], P[1]), _e3_sq_dist(P[1], P[2]), _e3_sq_dist(P[2], P[0])]
    return d[0] == d[1] == d[2], d[0]


@dataclass
class E3CircleReport:
    n_points: int
    n_circles: int
    incidences: int
    max_circles_per_point: int
    energy_from_circles: int
    rich_histogram: dict  # dyadic level -> number of circles with ~2^level points

    def to_dict(self) -> dict:
        return asdict(self)


def e3_circle_incidences(xs) -> E3CircleReport:
    """Double-count the point set ``T`` of the ``E_3`` argument against its circles.

    ``T`` is the image of all ordered pairs ``(x1, x2)``; every ``x3`` adds the
    incidence of that point with the circle of ``(x1 + x2 + x3, x1^2 + x2^2 + x3^2)``.
    A point of ``T`` lies on at most ``|xs|`` circles, the circle of ``(n, j)``
    holds as many points as there are triples summing to ``(n, j)``, and so
    ``sum |C cap T|^2`` equals ``E_3`` of the points ``(x, x^2)``.
    """
    xs = [to_fraction(x) for x in xs]
    if len(set(xs)) != len(xs):
        raise ParameterError("parameters must be distinct")
    on_circle: dict = {}
    per_point: Counter = Counter()
    for x1, x2, x3 in itertools.product(xs, repeat=3):
        pt, circle, ok = e3_circle_map(x1, x2, x3)
        if not ok:
            raise AssertionError(f"{pt} not on {circle}")
        key = (x1 + x2 + x3, x1 * x1 + x2 * x2 + x3 * x3)
        on_circle.setdefault(key, set()).add(pt)
        per_point[pt] += 1
    sizes = [len(v) for v in on_circle.values()]
    hist = Counter(int(math.floor(math.log2(s))) for s in sizes)
    return E3CircleReport(
        len(xs),
        len(on_circle),
        sum(sizes),
        max(per_point.values(), default=0),
        sum(s * s for s in sizes),
        {int(k): v for k, v in sorted(hist.items())},
    )
