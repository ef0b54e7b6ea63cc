"""Seeded, file-configured experiment runner.

``ergokit run <config.json>`` executes one experiment described by a strict
JSON config and writes a CSV or JSON result table atomically;
``ergokit report <result>`` prints per-quantity aggregates across seeds and
checks any tolerances stored in the result metadata.  Identical configs
produce byte-identical output apart from the wall_time metadata field.

Exit codes: 0 success, 2 validation or parse error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import cat0 as c0
from . import cocycle as cc
from . import dynsys as ds
from . import horofunctions as hf
from . import oseledets as osl
from . import symspace as sy
from ._rand import mix64
from .errors import DomainError, NumericalError, PreconditionError

EXPERIMENTS = (
    "lyapunov",
    "filtration",
    "splitting",
    "regularity",
    "busemann",
    "drift",
    "ncet",
    "tracking",
    "direct-integral",
    "mean-kingman",
    "mz-check",
)


class ConfigError(ValueError):
    pass


def _require(cfg: dict, keys: set, where: str, optional: set = frozenset()):
    unknown = set(cfg) - keys - optional
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = keys - set(cfg)
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} in {where}")


def _positive_int(cfg: dict, key: str, where: str) -> int:
    v = cfg.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
        raise ConfigError(f"field {key!r} in {where} must be a positive integer, got {v!r}")
    return v


def build_system(spec: dict, seed: int) -> ds.ErgodicSystem:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("system spec must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "circle-rotation":
        _require(spec, {"kind", "angle"}, "system")
        return ds.circle_rotation(float(spec["angle"]), seed=seed)
    if kind == "doubling-map":
        _require(spec, {"kind"}, "system")
        return ds.doubling_map(seed=seed)
    if kind == "bernoulli-shift":
        _require(spec, {"kind", "probabilities"}, "system")
        return ds.bernoulli_shift(spec["probabilities"], seed=seed)
    if kind == "markov-shift":
        _require(spec, {"kind", "transition"}, "system", optional={"stationary"})
        return ds.markov_shift(spec["transition"], spec.get("stationary"), seed=seed)
    raise ConfigError(f"unknown system kind {spec['kind']!r}")


def _check_matrix(m, d: int, where: str) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.shape != (d, d):
        raise ConfigError(f"matrix in {where} must be {d}x{d} row-major, got shape {a.shape}")
    return a


def build_cocycle(spec: dict, base: ds.ErgodicSystem) -> cc.MatrixCocycle:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("cocycle spec must be an object with a 'type'")
    d = _positive_int(spec, "dimension", "cocycle")
    tag = spec.get("structure_tag")
    if isinstance(tag, list):
        tag = tuple(tag)
    t = spec["type"]
    if t == "constant":
        _require(spec, {"type", "dimension", "matrix"}, "cocycle", optional={"structure_tag"})
        return cc.constant_cocycle(_check_matrix(spec["matrix"], d, "cocycle"), base, tag)
    if t == "symbol-matrices":
        _require(spec, {"type", "dimension", "matrices"}, "cocycle", optional={"structure_tag"})
        ms = [_check_matrix(m, d, "cocycle.matrices") for m in spec["matrices"]]
        return cc.symbol_cocycle(ms, base, tag)
    raise ConfigError(f"unknown cocycle type {t!r}")


def _initial(system: ds.ErgodicSystem, spec):
    if spec is None:
        return system.default_initial()
    if system.kind in ds.INTERVAL_KINDS:
        return float(spec)
    return int(spec)


# -- experiment implementations (rows are (quantity, index, value, stderr)) ----------


def _exp_lyapunov(cfg, seed):
    system = build_system(cfg["system"], seed)
    coc = build_cocycle(cfg["cocycle"], system)
    n = _positive_int(cfg, "N", "config")
    spec = osl.lyapunov_spectrum(
        coc, _initial(system, cfg.get("initial")), n, method=cfg.get("method", "qr")
    )
    rows = [("lambda", i, float(v), None) for i, v in enumerate(spec.exponents)]
    rows.append(("low_confidence", 0, float(spec.low_confidence), None))
    return rows


def _exp_filtration(cfg, seed):
    system = build_system(cfg["system"], seed)
    coc = build_cocycle(cfg["cocycle"], system)
    n = _positive_int(cfg, "N", "config")
    filt = osl.forward_filtration(coc, _initial(system, cfg.get("initial")), n)
    rows = []
    for j, (dim, lam) in enumerate(zip(filt.dims, filt.exponents_le)):
        rows.append(("dim", j, float(dim), None))
        rows.append(("exponent_le", j, float(lam), None))
        frame = filt.frames[j]
        for k, v in enumerate(frame.ravel(order="C")):
            rows.append((f"frame_{j}", k, float(v), None))
    return rows


def _exp_splitting(cfg, seed):
    system = build_system(cfg["system"], seed)
    coc = build_cocycle(cfg["cocycle"], system)
    dim_e = _positive_int(cfg, "dim_e", "config")
    sm = osl.splitting_map(
        coc,
        dim_e,
        _initial(system, cfg.get("initial")),
        max_terms=cfg.get("max_terms", 64),
        temper_horizon=cfg.get("N", 4096),
    )
    rows = [("tau", k, float(v), None) for k, v in enumerate(sm.tau.ravel(order="C"))]
    rows.append(("residual", 0, sm.residual, None))
    rows.append(("converged", 0, float(sm.converged), None))
    rows += [("tempered", n, v, None) for n, v in zip(sm.tempered_ns, sm.tempered_values)]
    return rows


def _exp_regularity(cfg, seed):
    system = build_system(cfg["system"], seed)
    coc = build_cocycle(cfg["cocycle"], system)
    n = _positive_int(cfg, "N", "config")
    seq = sy.pullback_metric_sequence(coc, _initial(system, cfg.get("initial")), n)
    rep = sy.regularity_report(seq)
    rows = [("theta", 0, rep.theta, None)]
    rows += [("step_ratio", m, v, None) for m, v in rep.step_ratios]
    rows += [("cartan_gap", m, v, None) for m, v in rep.cartan_gaps]
    rows += [("tracking", m, v, None) for m, v in rep.tracking_errors]
    rows.append(("cartan_oscillation", 0, rep.cartan_oscillation, None))
    return rows


def _exp_busemann(cfg, seed):
    alpha = np.asarray(cfg["alpha"], dtype=float)
    data = sy.BusemannData(alpha)
    t_max = float(cfg.get("t_max", 1000.0))
    count = _positive_int(cfg, "points", "config")
    scale = float(cfg.get("scale", 1.0))
    rng = np.random.default_rng(mix64(seed ^ 0xB0E5))
    rows = []
    for i in range(count):
        s = rng.normal(size=(data.n, data.n))
        s = 0.5 * (s + s.T)
        s -= (np.trace(s) / data.n) * np.eye(data.n)
        nrm = np.linalg.norm(s)
        if nrm > 0:
            s *= scale * rng.random() / nrm
        p = sy.SpdPoint(s)
        closed = sy.busemann_value(data, p)
        oracle = sy.busemann_limit_oracle(data, p, t_max)
        rows.append(("closed", i, closed, None))
        rows.append(("oracle", i, oracle.value, None))
        rows.append(("difference", i, abs(closed - oracle.value), None))
    return rows


def _build_space(spec: dict):
    kind = spec.get("kind")
    if kind == "euclidean":
        return c0.EuclideanCat0(int(spec["dim"]))
    if kind == "spd":
        return c0.SpdCat0(int(spec["n"]))
    if kind == "dmetric-line":
        return hf.DMetricLine(float(spec.get("p", 0.5)))
    raise ConfigError(f"unknown space kind {kind!r}")


def _build_map(spec: dict, space):
    t = spec.get("type")
    if t == "translation":
        v = np.asarray(spec["vector"], dtype=float)
        return hf.MappedSemicontraction(lambda x: np.asarray(x, float) + v)
    if t == "spd-congruence":
        return hf.SpdCongruence(np.asarray(spec["matrix"], dtype=float))
    if t == "contraction":
        f = float(spec["factor"])
        if not 0 <= f <= 1:
            raise ConfigError("contraction factor must lie in [0, 1]")
        return hf.MappedSemicontraction(lambda x: f * np.asarray(x, float))
    raise ConfigError(f"unknown map type {t!r}")


def _exp_drift(cfg, seed):
    space = _build_space(cfg["space"])
    fmap = _build_map(cfg["map"], space)
    n = _positive_int(cfg, "N", "config")
    rep = hf.drift(space, fmap, n, seed=seed)
    return [
        ("drift", 0, rep.drift, None),
        ("tail_slope", 0, rep.tail_slope, None),
        ("gap", 0, rep.gap, None),
    ]


def _exp_ncet(cfg, seed):
    system = build_system(cfg["system"], seed)
    coc = build_cocycle(cfg["cocycle"], system)
    ic = hf.spd_isometry_cocycle(coc)
    n = _positive_int(cfg, "N", "config")
    rep = hf.ncet_drift(ic, _initial(system, cfg.get("initial")), n)
    rows = [("drift", 0, rep.drift, None)]
    rows += [("trace", m, v, None) for m, v in zip(rep.ns, rep.trace)]
    rows.append(("step_integral", 0, rep.step_integral_mean, rep.step_integral_stderr))
    return rows


def _exp_tracking(cfg, seed):
    space = _build_space(cfg["space"])
    src = cfg["orbit"]
    n = _positive_int(src, "N", "orbit")
    t = src.get("type")
    if t == "spd-congruence-orbit":
        g = hf.SpdCongruence(np.asarray(src["matrix"], dtype=float))
        orbit = c0.semicontraction_orbit(space, g, n)
    elif t == "translation-orbit":
        v = np.asarray(src["vector"], dtype=float)
        f = hf.MappedSemicontraction(lambda x: np.asarray(x, float) + v)
        orbit = c0.semicontraction_orbit(space, f, n)
    elif t == "ray-with-noise":
        x = np.asarray(src["direction"], dtype=float)
        x = 0.5 * (x + x.T)
        x -= (np.trace(x) / x.shape[0]) * np.eye(x.shape[0])
        x /= np.linalg.norm(x)
        amp = float(src.get("noise", 0.0))
        rng = np.random.default_rng(mix64(seed ^ 0x0B17))
        orbit = [sy.SpdPoint.identity(x.shape[0])]
        for k in range(1, n + 1):
            xi = (2.0 * rng.random() - 1.0) * amp
            orbit.append(sy.SpdPoint((k + xi) * x))
    else:
        raise ConfigError(f"unknown orbit type {t!r}")
    rep = c0.km_tracking_ray(space, orbit)
    rows = [("drift", 0, rep.drift, None), ("degenerate", 0, float(rep.degenerate), None)]
    rows += [("tracking_error", k, v, None) for k, v in zip(rep.tracking_ns, rep.tracking_errors)]
    rows += [("record_time", i, float(r), None) for i, r in enumerate(rep.record_times)]
    for lvl, r, dev, bound in rep.deviations:
        rows.append(("deviation", lvl, dev, None))
        rows.append(("deviation_bound", lvl, bound, None))
    return rows


def _exp_direct_integral(cfg, seed):
    weights = [float(w) for w in cfg["weights"]]
    fibers = [_build_space(s) for s in cfg["fibers"]]
    di = c0.DirectIntegral(fibers, weights)
    s1 = [np.asarray(v, dtype=float) for v in cfg["section_a"]]
    s2 = [np.asarray(v, dtype=float) for v in cfg["section_b"]]
    d = c0.direct_integral_distance(di, s1, s2)
    mid = di.midpoint(s1, s2)
    rows = [("distance", 0, d, None)]
    rows += [
        ("midpoint_gap", i, abs(fib.distance(m, fib.geodesic(a, b, 0.5))), None)
        for i, (fib, m, a, b) in enumerate(zip(fibers, mid, s1, s2))
    ]
    return rows


def _exp_mean_kingman(cfg, seed):
    weights = [float(w) for w in cfg["weights"]]
    perm = [int(i) for i in cfg["perm"]]
    base = c0.FinitePermutationBase(weights, perm)
    n = _positive_int(cfg, "N", "config")
    fam = cfg["family"]
    m = len(weights)
    if fam.get("type") == "translation-cycle":
        ts = np.asarray(fam["offsets"], dtype=float)
        if len(ts) != m:
            raise ConfigError("offsets must match the number of base points")
        F = np.zeros((n, m))
        cur = np.zeros(m)
        idx = np.arange(m)
        for k in range(1, n + 1):
            cur = cur + ts[idx]
            idx = np.asarray(perm)[idx]
            F[k - 1] = np.abs(cur)
    elif fam.get("type") == "constant":
        F = np.outer(np.arange(1, n + 1), np.full(m, float(fam["value"])))
    else:
        raise ConfigError(f"unknown family type {fam.get('type')!r}")
    rep = c0.mean_kingman_check(base, F, n)
    rows = [("limit", 0, rep.limit, None)]
    rows += [("l2_error", k, v, None) for k, v in zip(rep.ns, rep.l2_errors)]
    return rows


_OBSERVABLES = {
    "coordinate": lambda x: x,
    "cos2pi": lambda x: np.cos(2 * np.pi * x),
    "cauchy-truncated": lambda x: np.clip(np.tan(np.pi * (x - 0.5)), -1e6, 1e6),
    "centered-sign": lambda x: np.sign(x - 0.5),
}


def _exp_mz_check(cfg, seed):
    system = build_system(cfg["system"], seed)
    p = float(cfg["p"])
    name = cfg["observable"]
    if name not in _OBSERVABLES:
        raise ConfigError(f"unknown observable {name!r}; choose from {sorted(_OBSERVABLES)}")
    n = _positive_int(cfg, "N", "config")
    rep = hf.dmetric_mz_check(p, system, _OBSERVABLES[name], _initial(system, cfg.get("initial")), n)
    rows = [("ratio", m, v, None) for m, v in zip(rep.ns, rep.values)]
    rows.append(("integral_mean", 0, rep.integral_mean, rep.integral_stderr))
    return rows


_RUNNERS = {
    "lyapunov": (_exp_lyapunov, {"system", "cocycle", "N"}, {"method", "initial"}),
    "filtration": (_exp_filtration, {"system", "cocycle", "N"}, {"initial"}),
    "splitting": (_exp_splitting, {"system", "cocycle", "dim_e"}, {"max_terms", "N", "initial"}),
    "regularity": (_exp_regularity, {"system", "cocycle", "N"}, {"initial"}),
    "busemann": (_exp_busemann, {"alpha", "points"}, {"t_max", "scale"}),
    "drift": (_exp_drift, {"space", "map", "N"}, set()),
    "ncet": (_exp_ncet, {"system", "cocycle", "N"}, {"initial"}),
    "tracking": (_exp_tracking, {"space", "orbit"}, set()),
    "direct-integral": (_exp_direct_integral, {"weights", "fibers", "section_a", "section_b"}, set()),
    "mean-kingman": (_exp_mean_kingman, {"weights", "perm", "family", "N"}, set()),
    "mz-check": (_exp_mz_check, {"system", "p", "observable", "N"}, {"initial"}),
}

_COMMON_KEYS = {"experiment", "seeds", "output", "tolerances"}


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    exp = cfg.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"field 'experiment' must be one of {EXPERIMENTS}, got {exp!r}")
    runner, required, optional = _RUNNERS[exp]
    _require(cfg, required | {"experiment", "seeds"}, "config", optional | _COMMON_KEYS)
    seeds = cfg.get("seeds")
    if not isinstance(seeds, list) or not seeds or not all(
        isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds
    ):
        raise ConfigError("field 'seeds' must be a nonempty list of nonnegative integers")
    if "N" in cfg:
        _positive_int(cfg, "N", "config")
    out = cfg.get("output", {})
    if out:
        _require(out, set(), "output", {"path", "format"})
        if out.get("format") not in (None, "csv", "json"):
            raise ConfigError("output.format must be 'csv' or 'json'")
    for tol in cfg.get("tolerances", []):
        _require(tol, {"quantity", "tol"}, "tolerances[]", {"target", "index"})
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def run_experiment(cfg: dict):
    """All rows for all seeds, ordered (seed, quantity, index)."""
    runner = _RUNNERS[cfg["experiment"]][0]
    workers = int(os.environ.get("ERGOKIT_WORKERS", "1"))
    seeds = cfg["seeds"]
    if workers > 1 and len(seeds) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            per_seed = list(ex.map(_run_single, [cfg] * len(seeds), seeds))
    else:
        per_seed = [_run_single(cfg, s) for s in seeds]
    rows = []
    for seed, rws in zip(seeds, per_seed):
        for q, i, v, e in rws:
            rows.append((seed, q, i, v, e))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


def _run_single(cfg: dict, seed: int):
    return _RUNNERS[cfg["experiment"]][0](cfg, seed)


def _format_value(v) -> str:
    return repr(float(v))


def write_result(path: str, fmt: str, cfg: dict, rows, wall_time: float):
    meta = {
        "config_hash": config_hash(cfg),
        "version": __version__,
        "experiment": cfg["experiment"],
        "tolerances": cfg.get("tolerances", []),
        "wall_time_s": round(wall_time, 6),
    }
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            if fmt == "csv":
                for k in ("config_hash", "version", "experiment"):
                    fh.write(f"# {k}={meta[k]}\n")
                fh.write(f"# tolerances={json.dumps(meta['tolerances'], sort_keys=True)}\n")
                fh.write(f"# wall_time_s={meta['wall_time_s']}\n")
                fh.write("seed,quantity,index,value,stderr\n")
                for seed, q, i, v, e in rows:
                    err = "" if e is None else _format_value(e)
                    fh.write(f"{seed},{q},{i},{_format_value(v)},{err}\n")
            else:
                doc = {
                    "metadata": meta,
                    "columns": ["seed", "quantity", "index", "value", "stderr"],
                    "rows": [[s, q, i, float(v), None if e is None else float(e)] for s, q, i, v, e in rows],
                }
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_run(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 2
    try:
        cfg = validate_config(cfg)
    except ConfigError as e:
        print(f"error: invalid config: {e}", file=sys.stderr)
        return 2
    out = cfg.get("output", {})
    path = args.output or out.get("path") or "result.csv"
    fmt = args.format or out.get("format") or ("json" if path.endswith(".json") else "csv")
    t0 = time.perf_counter()
    try:
        rows = run_experiment(cfg)
    except ConfigError as e:
        print(f"error: invalid config: {e}", file=sys.stderr)
        return 2
    except (DomainError, PreconditionError, NumericalError) as e:
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return 3
    write_result(path, fmt, cfg, rows, time.perf_counter() - t0)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def read_result(path: str):
    if path.endswith(".json"):
        with open(path) as fh:
            doc = json.load(fh)
        meta = doc["metadata"]
        rows = [tuple(r) for r in doc["rows"]]
        return meta, rows
    meta = {}
    rows = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError("empty result file")
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("# "):
            k, _, v = line[2:].partition("=")
            meta[k] = json.loads(v) if k == "tolerances" else v
            body_start = i + 1
        else:
            break
    if body_start >= len(lines) or lines[body_start] != "seed,quantity,index,value,stderr":
        raise ValueError("missing or malformed CSV header")
    for line in lines[body_start + 1 :]:
        if not line:
            continue
        seed, q, i, v, e = line.split(",")
        rows.append((int(seed), q, int(i), float(v), float(e) if e else None))
    return meta, rows


def aggregate(rows):
    """{(quantity, index): (mean, stderr, count)} across seeds."""
    groups: dict = {}
    for seed, q, i, v, e in rows:
        groups.setdefault((q, i), []).append(v)
    out = {}
    for key, vals in groups.items():
        arr = np.asarray(vals, dtype=float)
        se = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
        out[key] = (float(arr.mean()), se, len(arr))
    return out


def cmd_report(args) -> int:
    try:
        meta, rows = read_result(args.result)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"error: cannot parse result: {e}", file=sys.stderr)
        return 2
    agg = aggregate(rows)
    quantities = sorted({q for q, _ in agg})
    print(f"experiment: {meta.get('experiment', '?')}   config: {meta.get('config_hash', '?')}")
    for q in quantities:
        idxs = sorted(i for qq, i in agg if qq == q)
        if len(idxs) == 1:
            mean, se, n = agg[(q, idxs[0])]
            print(f"  {q}: {mean:.10g} +- {se:.3g}  (seeds: {n})")
        else:
            print(f"  {q} (trace over {len(idxs)} indices, tail):")
            for i in idxs[-3:]:
                mean, se, n = agg[(q, i)]
                print(f"    [{i}] {mean:.10g} +- {se:.3g}")
    failures = 0
    checks = 0
    for tol in meta.get("tolerances", []) or []:
        q = tol["quantity"]
        idxs = [tol["index"]] if "index" in tol else sorted(i for qq, i in agg if qq == q)
        for i in idxs:
            if (q, i) not in agg:
                print(f"  TOLERANCE SKIP: no rows for {q}[{i}]")
                continue
            checks += 1
            mean = agg[(q, i)][0]
            target = tol.get("target", 0.0)
            ok = abs(mean - target) <= tol["tol"]
            failures += 0 if ok else 1
            print(
                f"  {'PASS' if ok else 'FAIL'}: {q}[{i}] = {mean:.10g} "
                f"(target {target}, tol {tol['tol']})"
            )
    if checks:
        print(f"tolerance checks: {checks - failures}/{checks} passed")
    if args.figures:
        _render_figures(args.figures, meta, rows)
    return 0


def _render_figures(directory: str, meta: dict, rows) -> None:
    """One PNG per traced quantity, seeds overlaid (report-path figures)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(directory, exist_ok=True)
    by_q: dict = {}
    for seed, q, i, v, e in rows:
        by_q.setdefault(q, {}).setdefault(seed, []).append((i, v))
    written = []
    for q, seeds in sorted(by_q.items()):
        n_idx = len({i for pts in seeds.values() for i, _ in pts})
        if n_idx < 2:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        for seed, pts in sorted(seeds.items()):
            pts = sorted(pts)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", lw=1, label=f"seed {seed}")
        ax.set_xlabel("index")
        ax.set_ylabel(q)
        ax.set_title(f"{meta.get('experiment', '?')}: {q}")
        if len(seeds) <= 8:
            ax.legend(fontsize=7)
        fig.tight_layout()
        out = os.path.join(directory, f"{meta.get('experiment', 'result')}_{q}.png")
        fig.savefig(out, dpi=120)
        plt.close(fig)
        written.append(out)
    if written:
        print("figures: " + ", ".join(written))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ergokit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--output", help="override the output path")
    p_run.add_argument("--format", choices=("csv", "json"), help="override the output format")
    p_run.set_defaults(fn=cmd_run)
    p_rep = sub.add_parser("report", help="summarize a result table")
    p_rep.add_argument("result")
    p_rep.add_argument("--figures", metavar="DIR", help="also render trace figures into DIR")
    p_rep.set_defaults(fn=cmd_report)
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
