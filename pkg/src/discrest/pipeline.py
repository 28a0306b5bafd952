"""Config-driven experiment runner.

A config is one YAML (or JSON) document::

    seed: 0
    output_dir: out
    format: json
    pipeline:
      - {name: lam, op: gen_lattice_paraboloid, n: 2, N: 1}
      - {name: e2, op: energy, points: lam, k: 2}

Steps refer to earlier outputs by name through the ``points``, ``lines`` and
``pairs`` fields. Stochastic steps without an explicit ``seed`` get one
derived from the config seed and the step name.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import tempfile
import time
import zlib
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path

import numpy as np
import yaml

from . import energy as energy_mod
from . import expsum, incidence, pointsets
from ._exact import format_fraction
from .exceptions import ConfigError, DiscrestError, ParameterError
from .pointsets import PointSet, read_pointset

SCHEMA_VERSION = "1.0"
REF_FIELDS = ("points", "lines", "pairs")
FORMATS = ("json", "csv")


def derive_seed(base: int, name: str) -> int:
    return int(np.random.SeedSequence([int(base), zlib.crc32(name.encode())]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    pipeline: list
    seed: int = 0
    output_dir: str | None = None
    format: str = "json"
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(doc) - {"pipeline", "seed", "output_dir", "format"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        steps = doc.get("pipeline") or []
        if not isinstance(steps, list) or not all(isinstance(s, dict) for s in steps):
            raise ConfigError("pipeline must be a list of step mappings")
        fmt = doc.get("format", "json")
        if fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        try:
            seed = int(doc.get("seed", 0))
        except (TypeError, ValueError) as exc:
            raise ConfigError("seed must be an integer") from exc
        return cls([dict(s) for s in steps], seed, doc.get("output_dir"), fmt,
                   Path(base_dir) if base_dir else Path.cwd())

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from exc
        return cls.from_dict(doc or {}, path.parent)

    def echo(self) -> dict:
        return {"seed": self.seed, "output_dir": self.output_dir, "format": self.format, "pipeline": self.pipeline}


@dataclass
class RunReport:
    config: dict
    steps: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    partial: bool = False
    versions: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self, include_timings: bool = False) -> dict:
        d = {
            "schema_version": self.schema_version,
            "partial": self.partial,
            "versions": self.versions,
            "config": self.config,
            "steps": self.steps,
            "warnings": self.warnings,
        }
        if include_timings:
            d["timings"] = self.timings
        return d

    @property
    def exit_code(self) -> int:
        codes = [s.get("exit_code", 0) for s in self.steps.values()]
        return max(codes, default=0)


# --- step implementations ---------------------------------------------------

def pointset_payload(ps: PointSet) -> dict:
    return {
        "n": ps.n,
        "surface": ps.surface,
        "delta": None if ps.delta is None else format_fraction(ps.delta),
        "size": len(ps),
        "points": [[format_fraction(c) for c in p] for p in ps.points],
    }


def _need(step, *keys):
    missing = [k for k in keys if k not in step]
    if missing:
        raise ConfigError(f"step {step.get('name')!r}: missing {missing}")


def _op_gen_lattice(step, ctx):
    _need(step, "n", "N")
    return pointsets.gen_lattice_paraboloid(int(step["n"]), int(step["N"]))


def _op_gen_separated(step, ctx):
    _need(step, "surface", "n", "delta")
    return pointsets.gen_separated_sample(step["surface"], int(step["n"]), str(step["delta"]), ctx["seed"])


def _op_gen_lattice_subset(step, ctx):
    _need(step, "n", "N", "size")
    return pointsets.gen_lattice_subset(int(step["n"]), int(step["N"]), int(step["size"]), ctx["seed"])


def _op_gen_sphere(step, ctx):
    _need(step, "n", "q", "size")
    return pointsets.gen_sphere_rational(int(step["n"]), int(step["q"]), int(step["size"]), ctx["seed"])


def _op_energy(step, ctx):
    ps = ctx["points"]
    k = int(step.get("k", 2))
    if step.get("method", "hashed") == "bruteforce" or step.get("witnesses"):
        return energy_mod.energy_bruteforce(ps, k, bool(step.get("witnesses")))
    return energy_mod.energy_hashed(ps, k)


def _op_energy_sweep(step, ctx):
    _need(step, "generator", "sizes")
    gen = dict(step["generator"])
    gen.setdefault("seed", ctx["seed"])
    return energy_mod.energy_sweep(gen, [int(s) for s in step["sizes"]], int(step.get("k", 2)))


def _op_lpnorm(step, ctx):
    ps = ctx["points"]
    p = float(step.get("p", 2))
    method = step.get("method", "mc")
    if method == "torus":
        return expsum.lp_norm_torus_grid(ps, None, p, step.get("grid"), samples=int(step.get("samples", 100_000)),
                                         seed=ctx["seed"])
    _need(step, "R")
    return expsum.lp_average_ball(ps, None, p, float(step["R"]), step.get("center"), method,
                                  int(step.get("samples", 100_000)), ctx["seed"])


def _op_fit(step, ctx):
    pairs = ctx.get("pairs")
    if pairs is None:
        _need(step, "pairs")
        pairs = step["pairs"]
    return expsum.fit_exponent(pairs)


def _op_min_gap(step, ctx):
    gap = pointsets.min_energy_gap(ctx["points"])
    return None if gap is None else {"value": gap.value, "value_sq": format_fraction(gap.value_sq)}


def _op_caps(step, ctx):
    _need(step, "delta")
    caps = pointsets.cap_partition(ctx["points"], str(step["delta"]))
    return {"caps": [{"index": list(c.index), "members": c.members} for c in caps]}


def _op_incidence(step, ctx):
    return incidence_mode(step.get("mode", "quadruples"), ctx["points"], ctx.get("lines"))


OPS = {
    "gen_lattice_paraboloid": (_op_gen_lattice, False),
    "gen_separated_sample": (_op_gen_separated, True),
    "gen_lattice_subset": (_op_gen_lattice_subset, True),
    "gen_sphere_rational": (_op_gen_sphere, True),
    "energy": (_op_energy, False),
    "energy_sweep": (_op_energy_sweep, True),
    "lpnorm": (_op_lpnorm, True),
    "fit": (_op_fit, False),
    "min_energy_gap": (_op_min_gap, False),
    "cap_partition": (_op_caps, False),
    "incidence": (_op_incidence, False),
}


def incidence_mode(mode: str, ps: PointSet, lines=None) -> dict:
    """Run one ``incidence`` mode and return a JSON-ready payload."""
    if mode == "quadruples":
        quads = energy_mod.additive_quadruples(ps)
        return {"quadruples": int(len(quads)), **incidence.verify_quadruples(ps, quads)}
    planar = ps.projections() if ps.surface == "paraboloid" else list(ps.points)
    if mode == "angles":
        rep = incidence.max_angle_repetition(planar) if all(len(p) == 2 for p in planar) else None
        out = {"right_angles": incidence.count_right_angles(planar)}
        if rep is not None:
            out.update(max_angle_degrees=rep.angle.degrees, max_angle_sign=rep.angle.sign,
                       max_angle_cos_sq=format_fraction(rep.angle.cos_sq), max_angle_count=rep.count,
                       max_angle_ratio=rep.ratio)
        return out
    if mode in ("lines", "wolff"):
        if lines is None:
            raise ParameterError(f"incidence mode {mode!r} needs lines")
        fn = incidence.point_line_incidences if mode == "lines" else incidence.wolff_relation
        return fn(planar, lines).to_dict()
    if mode == "e3":
        xs = [p[0] for p in ps.points]
        rep = incidence.e3_circle_incidences(xs)
        failures = sum(not incidence.equilateral_check(a, b, c)[0] for a in xs for b in xs for c in xs)
        return {**rep.to_dict(), "equilateral_failures": failures}
    raise ParameterError(f"unknown incidence mode {mode!r}")


def read_lines(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split()
            if len(parts) != 3:
                raise ParameterError(f"{path}: expected 'a b c', got {ln!r}")
            out.append(incidence.Line2D.from_coeffs(*parts))
    return out


def payload(result):
    if result is None or isinstance(result, (dict, list)):
        return result
    if isinstance(result, PointSet):
        return pointset_payload(result)
    return result.to_dict()


def _pairs_of(result):
    if isinstance(result, energy_mod.EnergySweep):
        return result.rows
    if isinstance(result, list):
        return result
    raise ConfigError("'pairs' must name an energy_sweep step or be a list of [scale, value]")


# --- orchestration ------------------------------------------------------------

def plan(cfg: ExperimentConfig) -> list:
    """Validate the step graph and return step names in execution order."""
    names = []
    for step in cfg.pipeline:
        name = step.get("name")
        if not isinstance(name, str) or not name:
            raise ConfigError(f"every step needs a string 'name': {step}")
        if name in names:
            raise ConfigError(f"duplicate step name {name!r}")
        if step.get("op") not in OPS:
            raise ConfigError(f"step {name!r}: unknown op {step.get('op')!r}; expected one of {sorted(OPS)}")
        names.append(name)
    graph = TopologicalSorter()
    for step in cfg.pipeline:
        deps = [step[f] for f in REF_FIELDS if isinstance(step.get(f), str) and step[f] in names]
        graph.add(step["name"], *deps)
    try:
        order = list(graph.static_order())
    except CycleError as exc:
        raise ConfigError(f"cyclic step references: {exc.args[1]}") from exc
    # keep config order among independent steps
    rank = {n: i for i, n in enumerate(names)}
    done, out = set(), []
    pending = sorted(order, key=rank.get)
    by_name = {s["name"]: s for s in cfg.pipeline}
    while pending:
        for n in pending:
            deps = [by_name[n][f] for f in REF_FIELDS if isinstance(by_name[n].get(f), str) and by_name[n][f] in rank]
            if all(d in done for d in deps):
                out.append(n)
                done.add(n)
                pending.remove(n)
                break
    return out


def _versions() -> dict:
    from . import __version__

    return {"discrest": __version__, "numpy": np.__version__, "python": platform.python_version()}


def run_config(cfg: ExperimentConfig | dict) -> RunReport:
    """Execute every step in dependency order and collect a :class:`RunReport`.

    A step that raises a library error is marked failed with a structured
    warning; steps depending on it are skipped, independent steps still run,
    and the report is flagged partial.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    order = plan(cfg)
    by_name = {s["name"]: s for s in cfg.pipeline}
    report = RunReport(config=cfg.echo(), versions=_versions())
    results: dict = {}
    for name in order:
        step = by_name[name]
        fn, stochastic = OPS[step["op"]]
        ctx: dict = {}
        blocked = None
        for f in REF_FIELDS:
            ref = step.get(f)
            if isinstance(ref, str) and ref in by_name:
                if ref not in results:
                    blocked = ref
                    break
                ctx[f] = _pairs_of(results[ref]) if f == "pairs" else results[ref]
            elif f == "points" and isinstance(ref, str):
                ctx[f] = ref  # a file, read below
            elif f == "lines" and isinstance(ref, str):
                ctx[f] = ref
        if blocked is not None:
            report.steps[name] = {"op": step["op"], "status": "skipped", "reason": f"depends on failed step {blocked!r}"}
            report.partial = True
            continue
        ctx["seed"] = int(step["seed"]) if "seed" in step else (derive_seed(cfg.seed, name) if stochastic else None)
        t0 = time.perf_counter()
        try:
            if isinstance(ctx.get("points"), str):
                ctx["points"] = read_pointset(cfg.base_dir / ctx["points"])
            if isinstance(ctx.get("lines"), str):
                ctx["lines"] = read_lines(cfg.base_dir / ctx["lines"])
            if step["op"] in ("energy", "lpnorm", "min_energy_gap", "cap_partition", "incidence") and "points" not in ctx:
                raise ConfigError(f"step {name!r} needs 'points'")
            result = fn(step, ctx)
        except ConfigError:
            raise
        except (DiscrestError, OSError) as exc:
            code = getattr(exc, "exit_code", 2)
            kind = type(exc).__name__
            report.steps[name] = {"op": step["op"], "status": "failed", "error": kind, "message": str(exc), "exit_code": code}
            report.warnings.append({"step": name, "kind": kind, "message": str(exc)})
            report.partial = True
            continue
        finally:
            report.timings[name] = time.perf_counter() - t0
        results[name] = result
        entry = {"op": step["op"], "status": "ok", "result": payload(result)}
        if ctx["seed"] is not None:
            entry["seed"] = ctx["seed"]
        report.steps[name] = entry
        for w in getattr(result, "warnings", []) or []:
            report.warnings.append({"step": name, "kind": "numeric", "message": w})
    return report


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _scalars(prefix, obj):
    if isinstance(obj, dict):
        for k in obj:
            yield from _scalars(f"{prefix}.{k}" if prefix else str(k), obj[k])
    elif isinstance(obj, (int, float, str, bool)) or obj is None:
        yield prefix, obj


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def emit_report(report: RunReport, fmt: str = "json", out_dir=None) -> list[Path]:
    """Write the report under ``out_dir`` and return the paths written.

    JSON: ``report.json`` (schema-versioned, no timings) plus ``timings.json``.
    CSV: ``results.csv`` with one ``step,field,value`` row per scalar result,
    and ``<step>_sweep.csv`` (``size,k,energy,log_size,log_energy``) for every
    energy sweep. Point sets produced by generator steps are saved as
    ``<step>.pts`` either way.
    """
    if fmt not in FORMATS:
        raise ParameterError(f"format must be one of {FORMATS}")
    out = Path(out_dir or ".")
    written = []

    def put(name, text):
        path = out / name
        try:
            _atomic_write(path, text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
        written.append(path)

    if fmt == "json":
        put("report.json", json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    else:
        rows = []
        for name, entry in report.steps.items():
            result = entry.get("result")
            if isinstance(result, dict):
                for key, val in _scalars("", {k: v for k, v in result.items() if k != "points"}):
                    rows.append([name, key, "" if val is None else val])
            rows.append([name, "status", entry["status"]])
            if "message" in entry:
                rows.append([name, "error", f"{entry['error']}: {entry['message']}"])
        put("results.csv", _csv_text(["step", "field", "value"], rows))
    put("timings.json", json.dumps(report.timings, indent=2, sort_keys=True) + "\n")
    for name, entry in report.steps.items():
        result = entry.get("result")
        if entry.get("op") == "energy_sweep" and result:
            k = result["k"]
            rows = [[r["size"], k, r["energy"], repr(math.log(r["size"])), repr(math.log(r["energy"]))]
                    for r in result["rows"]]
            put(f"{name}_sweep.csv", _csv_text(["size", "k", "energy", "log_size", "log_energy"], rows))
        if isinstance(result, dict) and "points" in result and "surface" in result:
            lines = [f"n={result['n']} surface={result['surface']} delta={result['delta'] or 'none'}"]
            lines += [" ".join(p) for p in result["points"]]
            put(f"{name}.pts", "\n".join(lines) + "\n")
    return written
