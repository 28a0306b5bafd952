"""Exponential sums ``F(x) = sum_xi a_xi e(xi . x)`` with ``e(t) = exp(2 pi i t)``.

Three ways to average ``|F|^p``:

* :func:`lp_average_ball` over a Euclidean ball, by Monte Carlo (with a 95%
  half-width) or a midpoint grid;
* :func:`lp_norm_torus_grid` over the torus ``[0, 1)^n`` for integer
  frequencies and even ``p``. ``|F|^p`` is then a trigonometric polynomial,
  and a uniform grid with more than ``p * max|xi_d|`` nodes per axis
  integrates it exactly;
* :func:`strichartz_norm` for the Schrodinger evolution on a (possibly
  irrational) torus, exact in space and trapezoidal in time.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import fft as sfft

from .exceptions import AliasingError, GuardError, ParameterError

Z95 = 1.959963984540054
MAX_TORUS_GRID = 2**27
DEFAULT_CHUNK = 2**14


@dataclass
class LpEstimate:
    p: float
    R: float | str
    center: list
    value: float
    error: float
    method: str
    samples: int
    warnings: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExponentFit:
    pairs: list  # (log scale, log value)
    slope: float
    intercept: float
    residual: float

    def to_dict(self) -> dict:
        return asdict(self)

    def predict(self, scale):
        return np.exp(self.intercept) * np.asarray(scale, dtype=float) ** self.slope


def _freqs(ps) -> np.ndarray:
    return ps.to_array()


def _coeffs(ps, a) -> np.ndarray:
    if a is None:
        return np.ones(len(ps), dtype=complex)
    a = np.asarray(a, dtype=complex).ravel()
    if len(a) != len(ps):
        raise ParameterError(f"{len(a)} coefficients for {len(ps)} points")
    if not np.all(np.isfinite(a)):
        raise ParameterError("coefficients must be finite")
    return a


def _check_p(p):
    if not (isinstance(p, (int, float, np.integer, np.floating)) and math.isfinite(p)):
        raise ParameterError(f"p must be a finite real >= 1, got {p!r}")
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")


def _even_int(p) -> bool:
    return float(p).is_integer() and int(p) >= 2 and int(p) % 2 == 0


def eval_sum(ps, a, x) -> complex:
    """``sum_xi a_xi e(xi . x)`` at one point, accumulated with ``math.fsum``."""
    a = _coeffs(ps, a)
    x = np.asarray(x, dtype=float).ravel()
    if len(x) != ps.n:
        raise ParameterError(f"x has dimension {len(x)}, expected {ps.n}")
    phase = _freqs(ps) @ x
    phase -= np.round(phase)
    terms = a * np.exp(2j * np.pi * phase)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def eval_sums(freqs: np.ndarray, a: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Vectorised evaluation at every row of ``X``."""
    phase = X @ freqs.T
    phase -= np.round(phase)
    return np.exp(2j * np.pi * phase) @ a


def _ball_sample(rng, n, R, center, count):
    out = np.empty((0, n))
    # ball/cube volume ratio is >= 0.3 for n <= 4; oversample accordingly
    while len(out) < count:
        cand = rng.uniform(-1.0, 1.0, size=(int(1.5 * (count - len(out)) / 0.3) + 16, n))
        out = np.vstack([out, cand[(cand * cand).sum(axis=1) <= 1.0]])
    return center + R * out[:count]


def _chunk_moments(freqs, a, p, n, R, center, seed_seq, count):
    rng = np.random.default_rng(seed_seq)
    X = _ball_sample(rng, n, R, center, count)
    f = np.abs(eval_sums(freqs, a, X)) ** p
    mean = f.mean()
    return count, mean, float(((f - mean) ** 2).sum())


def _combine(moments):
    """Ordered Chan-style merge of (count, mean, M2) triples."""
    n_tot, mean_tot, m2_tot = 0, 0.0, 0.0
    for n_b, mean_b, m2_b in moments:
        n_new = n_tot + n_b
        d = mean_b - mean_tot
        mean_tot += d * n_b / n_new
        m2_tot += m2_b + d * d * n_tot * n_b / n_new
        n_tot = n_new
    return n_tot, mean_tot, m2_tot


def lp_average_ball(
    ps,
    a=None,
    p: float = 2,
    R: float = 1.0,
    center=None,
    method: str = "monte_carlo",
    samples: int = 100_000,
    seed: int = 0,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    n_jobs: int = 1,
) -> LpEstimate:
    """Normalised average ``(|B_R|^-1 int_{B_R} |F|^p)^(1/p)``.

    Monte Carlo draws ``samples`` uniform points from the ball by rejection
    from its bounding cube. Samples are split into fixed ``chunk_size``
    blocks, each with its own child seed, and merged in block order, so the
    result depends on ``(seed, samples, chunk_size)`` but not on ``n_jobs``.
    ``error`` is the 95% half-width carried through the ``1/p`` power by the
    delta method.

    ``method="grid"`` averages over the midpoints of a cubic grid with about
    ``samples`` nodes in the bounding cube, restricted to the ball. It reports
    ``error = 0`` and a warning, since no error bound is available.
    """
    _check_p(p)
    if not (R > 0 and math.isfinite(R)):
        raise ParameterError(f"R must be a positive real, got {R!r}")
    a = _coeffs(ps, a)
    center = np.zeros(ps.n) if center is None else np.asarray(center, dtype=float).ravel()
    if len(center) != ps.n:
        raise ParameterError(f"center has dimension {len(center)}, expected {ps.n}")
    method = {"mc": "monte_carlo"}.get(method, method)
    if method not in ("monte_carlo", "grid"):
        raise ParameterError(f"unknown method {method!r}")
    if method == "monte_carlo" and samples < 100:
        raise ParameterError("monte_carlo needs samples >= 100")
    est = LpEstimate(float(p), float(R), center.tolist(), 0.0, 0.0, method, int(samples))
    if not np.any(a):
        return est
    freqs = _freqs(ps)

    if method == "grid":
        g = max(2, int(round(samples ** (1.0 / ps.n))))
        axis = -1 + (2 * np.arange(g) + 1) / g
        mesh = np.stack(np.meshgrid(*([axis] * ps.n), indexing="ij"), axis=-1).reshape(-1, ps.n)
        mesh = mesh[(mesh * mesh).sum(axis=1) <= 1.0]
        vals = np.concatenate([
            np.abs(eval_sums(freqs, a, center + R * mesh[i:i + chunk_size])) ** p
            for i in range(0, len(mesh), chunk_size)
        ])
        est.value = float(vals.mean() ** (1.0 / p))
        est.samples = len(mesh)
        est.warnings.append("grid quadrature: error bound not available, error set to 0")
        return est

    n_chunks = -(-samples // chunk_size)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    counts = [min(chunk_size, samples - i * chunk_size) for i in range(n_chunks)]
    work = lambda i: _chunk_moments(freqs, a, p, ps.n, R, center, children[i], counts[i])  # noqa: E731
    if n_jobs == 1:
        moments = [work(i) for i in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            moments = list(pool.map(work, range(n_chunks)))
    total, mean, m2 = _combine(moments)
    sd = math.sqrt(m2 / (total - 1))
    half = Z95 * sd / math.sqrt(total)
    est.value = mean ** (1.0 / p)
    est.error = (1.0 / p) * mean ** (1.0 / p - 1.0) * half if mean > 0 else 0.0
    return est


def _integer_freqs(ps) -> np.ndarray:
    if not ps.is_integral():
        raise ParameterError("torus norms need integer frequencies")
    return np.array([[int(c) for c in pt] for pt in ps.points], dtype=np.int64).reshape(len(ps), ps.n)


def _resolve_grid(grid_per_dim, need, n):
    if grid_per_dim is None:
        return tuple(int(sfft.next_fast_len(int(m) + 1)) for m in need)
    grid = (int(grid_per_dim),) * n if np.isscalar(grid_per_dim) else tuple(int(g) for g in grid_per_dim)
    if len(grid) != n:
        raise ParameterError(f"grid has {len(grid)} axes, expected {n}")
    for d, (g, m) in enumerate(zip(grid, need)):
        if g <= m:
            raise AliasingError(f"axis {d}: grid of {g} nodes aliases |F|^p (needs > {m})")
    return grid


def _torus_values(F: np.ndarray, a: np.ndarray, grid: tuple) -> np.ndarray:
    A = np.zeros(grid, dtype=complex)
    np.add.at(A, tuple((F % np.array(grid)).T), a)
    return sfft.ifftn(A) * float(np.prod(grid))


def lp_norm_torus_grid(
    ps, a=None, p: float = 4, grid_per_dim=None, *, samples: int = 100_000, seed: int = 0
) -> LpEstimate:
    """``||F||_{L^p([0,1)^n)}`` for integer frequencies.

    For even integer ``p`` the grid average is exact: an axis with fewer than
    ``p * max|xi_d| + 1`` nodes is refused with :class:`AliasingError` rather
    than silently aliased. ``grid_per_dim`` may be an int or one int per axis;
    by default the smallest safe size is used. Other ``p`` fall back to Monte
    Carlo on the torus with a 95% half-width.
    """
    _check_p(p)
    F = _integer_freqs(ps)
    a = _coeffs(ps, a)
    est = LpEstimate(float(p), "torus", [0.0] * ps.n, 0.0, 0.0, "torus_grid", 0)
    if not np.any(a):
        return est
    if not _even_int(p):
        rng = np.random.default_rng(seed)
        X = rng.uniform(0.0, 1.0, size=(samples, ps.n))
        f = np.concatenate([np.abs(eval_sums(F.astype(float), a, X[i:i + DEFAULT_CHUNK])) ** p
                            for i in range(0, samples, DEFAULT_CHUNK)])
        mean = f.mean()
        half = Z95 * f.std(ddof=1) / math.sqrt(samples)
        est.method, est.samples = "monte_carlo", samples
        est.value = mean ** (1.0 / p)
        est.error = (1.0 / p) * mean ** (1.0 / p - 1.0) * half
        est.warnings.append(f"p={p} is not an even integer: torus norm estimated by Monte Carlo")
        return est
    need = int(p) * np.abs(F).max(axis=0)
    grid = _resolve_grid(grid_per_dim, need, ps.n)
    total = int(np.prod(grid))
    if total > MAX_TORUS_GRID:
        raise GuardError(f"torus grid of {total} nodes exceeds {MAX_TORUS_GRID}")
    vals = np.abs(_torus_values(F, a, grid)) ** p
    est.value = float(vals.mean() ** (1.0 / p))
    est.samples = total
    est.extras["grid"] = list(grid)
    return est


def strichartz_norm(
    phi_coeffs: dict,
    thetas,
    p: int = 4,
    I_length: float = 1.0,
    grid_per_dim=None,
    time_steps: int | None = None,
    *,
    cross_check: bool = True,
    cross_check_limit: int = 5 * 10**7,
) -> LpEstimate:
    """``||e^{it Delta} phi||_{L^p(T^{n-1} x [0, I])}`` on the torus with weights ``thetas``.

    ``phi_coeffs`` maps integer frequency tuples to Fourier coefficients. The
    evolution is ``sum phi(xi) e(x . xi + t sum theta_i xi_i^2)``. Space is
    integrated exactly (uniform grid, even ``p``); time by the trapezoid rule
    with ``time_steps`` intervals, and ``error`` is the Richardson estimate
    ``|T_h - T_2h| / 3`` propagated through the ``1/p`` power.

    With ``cross_check`` the same integral is recomputed by direct summation
    in the rescaled variables ``eta_i = sqrt(theta_i) xi_i / (4N)``,
    ``y_i = 4N x_i / sqrt(theta_i)``, ``y_n = 16 N^2 t``, where the phase is
    ``y . (eta, |eta|^2)``; ``extras["rescaled_value"]`` holds the result.
    """
    if not _even_int(p):
        raise ParameterError(f"strichartz_norm needs an even integer p, got {p}")
    p = int(p)
    if not (I_length > 0 and math.isfinite(I_length)):
        raise ParameterError("I_length must be positive")
    thetas = np.asarray(thetas, dtype=float).ravel()
    if np.any(thetas <= 0.5) or np.any(thetas >= 2):
        raise ParameterError(f"every theta must lie in (1/2, 2), got {thetas.tolist()}")
    keys = list(phi_coeffs)
    d = len(thetas)
    est = LpEstimate(float(p), float(I_length), [0.0] * (d + 1), 0.0, 0.0, "strichartz_grid", 0)
    if not keys:
        return est
    F = np.array(keys, dtype=np.int64).reshape(len(keys), -1)
    if F.shape[1] != d:
        raise ParameterError(f"frequencies have {F.shape[1]} coordinates but {d} thetas were given")
    c = np.array([phi_coeffs[k] for k in keys], dtype=complex)
    if not np.any(c):
        return est
    N = max(1, int(np.abs(F).max()))
    grid = _resolve_grid(grid_per_dim, p * np.abs(F).max(axis=0), d)
    energy = (F.astype(float) ** 2) @ thetas
    omega = 0.5 * p * float(energy.max() - energy.min())
    if time_steps is None:
        time_steps = max(256, int(math.ceil(64 * omega * I_length)))
    M = int(time_steps) + int(time_steps) % 2
    if M * int(np.prod(grid)) > MAX_TORUS_GRID:
        raise GuardError(f"space-time grid of {M * int(np.prod(grid))} nodes exceeds {MAX_TORUS_GRID}")
    h = I_length / M
    ts = np.arange(M + 1) * h

    layer = np.empty(M + 1)
    for j, t in enumerate(ts):
        phase = t * energy
        phase -= np.round(phase)
        layer[j] = (np.abs(_torus_values(F, c * np.exp(2j * np.pi * phase), grid)) ** p).mean()

    def trapezoid(vals, step):
        return step * (vals.sum() - 0.5 * (vals[0] + vals[-1]))

    fine = trapezoid(layer, h)
    coarse = trapezoid(layer[::2], 2 * h)
    est.value = fine ** (1.0 / p)
    est.error = (1.0 / p) * fine ** (1.0 / p - 1.0) * abs(fine - coarse) / 3 if fine > 0 else 0.0
    est.samples = (M + 1) * int(np.prod(grid))
    est.extras.update(time_step=h, time_steps=M, grid=list(grid), N=N)

    if cross_check:
        work = est.samples * len(keys)
        if work > cross_check_limit:
            est.warnings.append(f"cross-check skipped: {work} terms exceed {cross_check_limit}")
        else:
            est.extras["rescaled_value"] = _rescaled_integral(F, c, thetas, N, grid, ts, h, p) ** (1.0 / p)
    return est


def _rescaled_integral(F, c, thetas, N, grid, ts, h, p):
    root = np.sqrt(thetas)
    eta = F * root / (4 * N)
    freqs = np.hstack([eta, (eta**2).sum(axis=1, keepdims=True)])
    axes = [np.arange(g) / g * 4 * N / r for g, r in zip(grid, root)]
    space = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(grid))
    weights = np.full(len(ts), h)
    weights[[0, -1]] *= 0.5
    acc = 0.0
    for t, w in zip(ts, weights):
        Y = np.hstack([space, np.full((len(space), 1), 16 * N * N * t)])
        acc += w * (np.abs(eval_sums(freqs, c, Y)) ** p).mean()
    # the Jacobian of (x, t) -> y cancels the volume of the y-box up to |I|
    return acc


def fit_exponent(pairs) -> ExponentFit:
    """Least-squares line through ``(log scale, log value)``.

    ``residual`` is the largest absolute deviation of a point from the line.
    """
    pairs = [(float(s), float(v)) for s, v in pairs]
    if any(s <= 0 or v <= 0 or not math.isfinite(s) or not math.isfinite(v) for s, v in pairs):
        raise ParameterError("fit_exponent needs positive finite scales and values")
    if len({s for s, _ in pairs}) < 2:
        raise ParameterError("fit_exponent needs at least two distinct scales")
    x = np.log([s for s, _ in pairs])
    y = np.log([v for _, v in pairs])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.abs(y - (slope * x + intercept)).max())
    return ExponentFit(list(zip(x.tolist(), y.tolist())), float(slope), float(intercept), residual)
