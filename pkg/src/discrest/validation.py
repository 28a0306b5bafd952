"""Input validation shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np

from .exceptions import ParameterError
from .pointsets import PointSet, as_point, on_paraboloid, on_sphere


def check_points(X, n: int | None = None) -> list[tuple]:
    """Coerce ``X`` (PointSet, array, nested sequence) to a list of exact points."""
    if isinstance(X, PointSet):
        pts = list(X.points)
    else:
        if isinstance(X, np.ndarray) and X.ndim != 2:
            raise ParameterError(f"expected a 2-d array of points, got shape {X.shape}")
        pts = [as_point(row) for row in X]
    if pts:
        dims = {len(p) for p in pts}
        if len(dims) != 1:
            raise ParameterError(f"points have mixed dimensions {sorted(dims)}")
        if n is not None and dims != {n}:
            raise ParameterError(f"expected points in R^{n}, got R^{dims.pop()}")
    return pts


def as_pointset(X, surface: str = "auto", delta=None) -> PointSet:
    """Build a :class:`PointSet`, detecting the surface when ``surface="auto"``."""
    if isinstance(X, PointSet):
        return X
    pts = check_points(X)
    if not pts:
        raise ParameterError("at least one point is required")
    n = len(pts[0])
    if surface == "auto":
        if all(on_paraboloid(p) for p in pts):
            surface = "paraboloid"
        elif all(on_sphere(p) for p in pts):
            surface = "sphere"
        else:
            surface = "none"
    return PointSet(pts, n, surface, delta)


def check_scales(X) -> np.ndarray:
    """1-d float array from ``X`` of shape ``(m,)`` or ``(m, 1)``."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ParameterError(f"expected a single feature, got shape {arr.shape}")
    return arr
