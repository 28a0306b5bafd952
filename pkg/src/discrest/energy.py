"""Exact k-fold additive energies.

``E_k(L)`` is the number of *ordered* 2k-tuples ``(l_1, ..., l_2k)`` of points
of ``L`` with ``l_1 + ... + l_k == l_{k+1} + ... + l_2k``. Ordered, so a set
of ``m`` points on a parabola has ``E_2 = 2 m^2 - m``, not ``m^2``.

Two independent routes are provided: :func:`energy_bruteforce` compares every
pair of k-tuple sums directly, :func:`energy_hashed` counts the multiplicity
``r(s)`` of each k-fold sum ``s`` and returns ``sum r(s)^2``. All arithmetic
is on integers obtained by clearing a common denominator.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ._exact import scaled_integers
from .exceptions import GuardError, ParameterError
from .expsum import ExponentFit, fit_exponent
from .pointsets import PointSet, gen_lattice_subset, gen_sphere_rational

BRUTEFORCE_LIMIT = 10**9
HASHED_LIMIT = 10**8
WITNESS_CAP = 10**5


@dataclass
class EnergyReport:
    k: int
    value: int
    n_points: int
    nontrivial_count: int
    method: str
    witnesses: np.ndarray | None = None
    witnesses_truncated: bool = False

    def to_dict(self) -> dict:
        d = {
            "k": self.k,
            "value": self.value,
            "n_points": self.n_points,
            "nontrivial_count": self.nontrivial_count,
            "method": self.method,
        }
        if self.witnesses is not None:
            d["witnesses"] = self.witnesses.tolist()
            d["witnesses_truncated"] = self.witnesses_truncated
        return d


def _check_k(k):
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise ParameterError(f"k must be an integer >= 2, got {k!r}")


def _integer_points(ps: PointSet, k: int) -> np.ndarray:
    X, _ = scaled_integers(ps.points, fits=lambda m: 2 * k * m < 2**62)
    return X


def _partitions(k: int, largest: int | None = None):
    if largest is None:
        largest = k
    if k == 0:
        yield ()
        return
    for part in range(min(k, largest), 0, -1):
        for rest in _partitions(k - part, part):
            yield (part,) + rest


def trivial_tuple_count(m: int, k: int) -> int:
    """Ordered 2k-tuples whose two halves are the same multiset of points.

    Sums ``(orderings of M)^2`` over size-k multisets ``M`` of ``m`` points,
    grouped by multiplicity pattern.
    """
    total = 0
    for lam in _partitions(k):
        r = len(lam)
        if r > m:
            continue
        orderings = math.factorial(k)
        for part in lam:
            orderings //= math.factorial(part)
        n_multisets = math.perm(m, r)
        for c in Counter(lam).values():
            n_multisets //= math.factorial(c)
        total += n_multisets * orderings * orderings
    return total


def _ktuples(m: int, k: int) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(m)] * k), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def energy_bruteforce(ps: PointSet, k: int = 2, collect_witnesses: bool = False) -> EnergyReport:
    """Count equal-sum ordered 2k-tuples by comparing every pair of k-tuple sums.

    With ``collect_witnesses`` the nontrivial solutions (halves that are
    different multisets) are returned as rows of 2k point indices, capped at
    ``WITNESS_CAP`` rows; the counts are exact regardless of the cap.
    """
    _check_k(k)
    m = len(ps)
    if m ** (2 * k) > BRUTEFORCE_LIMIT:
        raise GuardError(f"brute force needs |L|^(2k) <= {BRUTEFORCE_LIMIT}, got {m}^{2 * k}")
    if m == 0:
        return EnergyReport(k, 0, 0, 0, "bruteforce", np.zeros((0, 2 * k), dtype=np.int64) if collect_witnesses else None)
    X = _integer_points(ps, k)
    idx = _ktuples(m, k)
    S = X[idx].sum(axis=1)
    M = len(S)
    rows_per_chunk = max(1, 2**22 // (M * ps.n))
    value = 0
    found = []
    n_found = 0
    for start in range(0, M, rows_per_chunk):
        block = S[start:start + rows_per_chunk]
        eq = (block[:, None, :] == S[None, :, :]).all(axis=-1)
        value += int(eq.sum())
        if collect_witnesses and n_found < WITNESS_CAP:
            ra, rb = np.nonzero(eq)
            left, right = idx[ra + start], idx[rb]
            nontrivial = (np.sort(left, axis=1) != np.sort(right, axis=1)).any(axis=1)
            w = np.hstack([left[nontrivial], right[nontrivial]])
            found.append(w[: WITNESS_CAP - n_found])
            n_found += len(found[-1])
    trivial = trivial_tuple_count(m, k)
    report = EnergyReport(k, value, m, value - trivial, "bruteforce")
    if collect_witnesses:
        report.witnesses = np.vstack(found) if found else np.zeros((0, 2 * k), dtype=np.int64)
        report.witnesses_truncated = report.nontrivial_count > len(report.witnesses)
    return report


def _row_keys(S: np.ndarray) -> np.ndarray:
    """Collapse integer rows to scalar keys that are equal iff the rows are."""
    lo = S.min(axis=0)
    span = S.max(axis=0) - lo + 1
    if float(np.prod(span.astype(float))) < 2**62:
        strides = np.concatenate([[1], np.cumprod(span[:-1])]).astype(np.int64)
        return (S - lo) @ strides
    _, inv = np.unique(S, axis=0, return_inverse=True)
    return inv.ravel()


def ksum_multiplicities(ps: PointSet, k: int) -> np.ndarray:
    """Multiplicity ``r(s)`` of each distinct k-fold ordered sum ``s``."""
    X = _integer_points(ps, k)
    if X.dtype == object:
        counts = Counter()
        for tup in itertools.product(range(len(ps)), repeat=k):
            counts[tuple(sum(X[i, d] for i in tup) for d in range(ps.n))] += 1
        return np.array(list(counts.values()), dtype=np.int64)
    S = X
    for _ in range(k - 1):
        S = (S[:, None, :] + X[None, :, :]).reshape(-1, ps.n)
    _, counts = np.unique(_row_keys(S), return_counts=True)
    return counts


def energy_hashed(ps: PointSet, k: int = 2) -> EnergyReport:
    """Meet-in-the-middle count: ``E_k = sum_s r(s)^2``."""
    _check_k(k)
    m = len(ps)
    if m**k > HASHED_LIMIT:
        raise GuardError(f"hashed energy needs |L|^k <= {HASHED_LIMIT}, got {m}^{k}")
    if m == 0:
        return EnergyReport(k, 0, 0, 0, "hashed")
    counts = ksum_multiplicities(ps, k)
    value = sum(int(c) * int(c) for c in counts) if len(counts) < 4096 else int((counts.astype(np.int64) ** 2).sum())
    return EnergyReport(k, value, m, value - trivial_tuple_count(m, k), "hashed")


def additive_quadruples(ps: PointSet) -> np.ndarray:
    """All ordered ``(i, j, k, l)`` with ``p_i + p_j == p_k + p_l`` and ``{i, j} != {k, l}``.

    Returned as an ``int64`` array of shape ``(q, 4)``, rows in a fixed order.
    """
    m = len(ps)
    if m * m > HASHED_LIMIT:
        raise GuardError(f"additive_quadruples needs |L|^2 <= {HASHED_LIMIT}, got {m}^2")
    if m < 2:
        return np.zeros((0, 4), dtype=np.int64)
    X = _integer_points(ps, 2)
    pi, pj = (a.ravel() for a in np.meshgrid(np.arange(m), np.arange(m), indexing="ij"))
    if X.dtype == object:
        keymap: dict = {}
        keys = np.array([keymap.setdefault(tuple(X[a] + X[b]), len(keymap)) for a, b in zip(pi, pj)])
    else:
        keys = _row_keys(X[pi] + X[pj])
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    cuts = np.flatnonzero(np.diff(sk)) + 1
    starts = np.concatenate([[0], cuts])
    ends = np.concatenate([cuts, [len(sk)]])
    lo, hi = np.minimum(pi, pj), np.maximum(pi, pj)
    out = []
    for s, e in zip(starts, ends):
        if e - s < 3:  # {(i,j),(j,i)} or a lone diagonal pair: nothing nontrivial
            continue
        g = order[s:e]
        a, b = (t.ravel() for t in np.meshgrid(g, g, indexing="ij"))
        keep = (lo[a] != lo[b]) | (hi[a] != hi[b])
        out.append(np.stack([pi[a[keep]], pj[a[keep]], pi[b[keep]], pj[b[keep]]], axis=1))
    if not out:
        return np.zeros((0, 4), dtype=np.int64)
    return np.vstack(out).astype(np.int64)


GENERATORS = ("lattice_subset", "sphere_rational")


def make_generator(spec: dict):
    """Turn a generator spec into ``size -> PointSet``.

    ``{"kind": "lattice_subset", "n": 3, "N": 10, "seed": 0}`` takes nested
    random prefixes of the lattice paraboloid; ``{"kind": "sphere_rational",
    "n": 3, "q": 8, "seed": 0}`` does the same for rational sphere points.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "lattice_subset":
        return lambda size: gen_lattice_subset(spec["n"], spec["N"], size, spec.get("seed", 0))
    if kind == "sphere_rational":
        return lambda size: gen_sphere_rational(spec["n"], spec["q"], size, spec.get("seed", 0))
    raise ParameterError(f"unknown generator kind {kind!r}; expected one of {GENERATORS}")


@dataclass
class EnergySweep:
    k: int
    rows: list = field(default_factory=list)  # (size, energy)
    fit: ExponentFit | None = None

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "rows": [{"size": s, "energy": e} for s, e in self.rows],
            "fit": None if self.fit is None else self.fit.to_dict(),
        }


def energy_sweep(generator, sizes, k: int = 2) -> EnergySweep:
    """Compute ``E_k`` over growing sets and fit ``log E_k`` against ``log |L|``."""
    _check_k(k)
    sizes = list(sizes)
    if len(set(sizes)) < 2:
        raise ParameterError("energy_sweep needs at least two distinct sizes")
    gen = make_generator(generator) if isinstance(generator, dict) else generator
    sweep = EnergySweep(k)
    for size in sizes:
        ps = gen(size)
        sweep.rows.append((len(ps), energy_hashed(ps, k).value))
    sweep.fit = fit_exponent(sweep.rows)
    return sweep
