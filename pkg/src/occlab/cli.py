"""Batch experiment driver.

``occlab run --config exp.json [--out DIR] [--seed N] [--workers N]``
validates the config against a strict schema, dispatches to the library,
and writes CSV/JSON artifacts plus a manifest with the resolved config,
config hash and per-file checksums.  Outputs are deterministic given
(config, seed) at any worker count.  ``occlab verify`` runs the full
acceptance suite and prints one pass/fail line per criterion.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np
import jsonschema

from . import __version__
from .errors import OcclabError, SchemaError
from .models.descriptors import model_from_descriptor

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "task"],
    "properties": {
        "model": {"type": "object"},
        "task": {"enum": ["simulate", "deterministic", "gaussian", "bounds",
                          "clt-sweep", "lln-sweep", "equilibrium", "graphon",
                          "hanski-limit"]},
        "output_dir": {"type": "string"},
        "parameters": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T": {"type": "integer", "minimum": 0},
                "R": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "t": {"type": "integer", "minimum": 0},
                "q": {"type": ["number", "string"]},
                "r": {"type": "number"},
                "x": {"type": "number"},
                "x0": {"type": ["string", "array"]},
                "p0": {"type": ["number", "array"]},
                "h": {"type": ["string", "array"]},
                "n_list": {"type": "array", "items": {"type": "integer"}},
                "grid": {"type": "integer", "minimum": 2},
                "rho0": {"type": "number"},
                "couple": {"type": "boolean"},
                "full_states": {"type": "boolean"},
                "tol": {"type": "number"},
                "max_iter": {"type": "integer"},
                "class_coords": {"type": "integer", "minimum": 1},
                "v_list": {"type": "array", "items": {"type": "integer"}},
            },
        },
    },
}


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _resolve_x0(spec, n):
    if spec is None or spec == "zeros":
        return np.zeros(n, dtype=np.uint8)
    if spec == "ones":
        return np.ones(n, dtype=np.uint8)
    if spec == "half":
        x = np.zeros(n, dtype=np.uint8)
        x[: n // 2] = 1
        return x
    x = np.asarray(spec, dtype=np.uint8)
    if x.shape != (n,):
        raise SchemaError(f"x0 must have length {n}")
    return x


def _resolve_h(spec, n):
    if spec is None or spec == "ones":
        return np.ones(n)
    h = np.asarray(spec, dtype=np.float64)
    if h.shape != (n,):
        raise SchemaError(f"h must have length {n}")
    return h


def _q_value(q):
    if q in ("inf", "infinity"):
        return float("inf")
    return float(q)


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_config(config, out_dir, seed_override=None, workers=1):
    """Execute one experiment; returns the list of files written."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"config invalid at /{'/'.join(map(str, exc.path))}: "
                          f"{exc.message}") from exc

    params = dict(config.get("parameters", {}))
    if seed_override is not None:
        params["seed"] = seed_override
    seed = int(params.get("seed", 0))
    task = config["task"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit_rows(name, rows, header=None):
        from .analysis import rows_to_csv
        path = out / name
        rows_to_csv(rows, path, header=header)
        written.append(path)

    if task in ("simulate", "deterministic", "gaussian", "bounds", "equilibrium"):
        model, rule = model_from_descriptor(config["model"])
        n = rule.n

    if task == "simulate":
        from .deterministic import det_trajectory
        from .simulate import simulate_ensemble, summary_to_csv, ensemble_to_csv
        T = int(params.get("T", 10))
        R = int(params.get("R", 100))
        X0 = _resolve_x0(params.get("x0"), n)
        couple = bool(params.get("couple", False))
        p_traj = det_trajectory(rule, X0.astype(float), T).p if couple else None
        ens = simulate_ensemble(rule, X0, T, R, seed, couple=couple,
                                p_traj=p_traj, workers=workers)
        path = out / "summary.csv"
        summary_to_csv(ens, path)
        written.append(path)
        if params.get("full_states"):
            path = out / "states.csv"
            ensemble_to_csv(ens, path)
            written.append(path)

    elif task == "deterministic":
        from .deterministic import det_trajectory, trajectory_to_csv
        T = int(params.get("T", 10))
        p0 = params.get("p0", 0.5)
        p0 = np.full(n, float(p0)) if np.isscalar(p0) else np.asarray(p0)
        traj = det_trajectory(rule, p0, T)
        path = out / "trajectory.csv"
        trajectory_to_csv(traj, path)
        written.append(path)

    elif task == "equilibrium":
        from .deterministic import find_equilibrium, smith_check
        p0 = params.get("p0", 0.5)
        p0 = np.full(n, float(p0)) if np.isscalar(p0) else np.asarray(p0)
        eq = find_equilibrium(rule, p0, tol=float(params.get("tol", 1e-12)),
                              max_iter=int(params.get("max_iter", 10 ** 6)))
        screen = smith_check(rule, sample_budget=64, seed=seed)
        path = out / "equilibrium.json"
        _write_json(path, {
            "converged": eq.converged, "iterations": eq.iterations,
            "residual": eq.residual, "p_inf": [f"{v:.17g}" for v in eq.p_inf],
            "monotone_screen": {
                "positivity": screen.positivity,
                "jacobian_monotonicity": screen.jacobian_monotonicity,
                "not_all_absorbing": screen.not_all_absorbing,
                "spectral_radius_origin": screen.spectral_radius_origin,
            }})
        written.append(path)

    elif task == "gaussian":
        from .gaussian import GaussianApprox, variance_to_csv
        T = int(params.get("T", 10))
        p0 = params.get("p0", 0.5)
        p0 = np.full(n, float(p0)) if np.isscalar(p0) else np.asarray(p0)
        h = _resolve_h(params.get("h"), n)
        approx = GaussianApprox.from_rule(rule, p0, T)
        path = out / "projected_variance.csv"
        variance_to_csv(approx, h, path)
        written.append(path)

    elif task == "bounds":
        from .bounds import jbar_moment_bound, lqr_error_bound, clt_rate_bound
        from .gaussian import GaussianApprox
        from .rules import coefficient_schedule
        t = int(params.get("t", 5))
        q = _q_value(params.get("q", 1))
        r = float(params.get("r", 1))
        h = _resolve_h(params.get("h"), n)
        p0 = params.get("p0", 0.5)
        p0 = np.full(n, float(p0)) if np.isscalar(p0) else np.asarray(p0)
        coeffs = coefficient_schedule(rule, t)
        approx = GaussianApprox.from_rule(rule, p0, t)
        mean_norms = {"df_1": 1.0 / n, "df_2q": n ** -0.5, "d2f_1q": 0.0}
        reports = {
            "discrepancy_moment": jbar_moment_bound(coeffs, q, t, n),
            "mean_functional_error": lqr_error_bound(mean_norms, coeffs, q, r, t, n),
        }
        try:
            reports["projection_rate"] = clt_rate_bound(coeffs, h, q, approx, t)
        except OcclabError as exc:
            reports["projection_rate"] = None
            degenerate = str(exc)
        payload = {}
        for key, rep in reports.items():
            payload[key] = ({"value": rep.value, "formula": rep.formula_id,
                             "inputs": rep.inputs, "caveats": rep.caveats}
                            if rep is not None else {"error": degenerate})
        path = out / "bounds.json"
        _write_json(path, payload)
        written.append(path)

    elif task == "clt-sweep":
        from .analysis import clt_sweep, SWEEP_HEADER
        n_list = params.get("n_list", [100, 400])
        t = int(params.get("t", 3))
        q = _q_value(params.get("q", "inf"))
        R = int(params.get("R", 20000))

        def family(nn):
            _, r_n = model_from_descriptor({**config["model"], "n": nn})
            return r_n, _resolve_x0(params.get("x0", "half"), nn)

        rows, summary = clt_sweep(family, lambda nn: np.ones(nn), t, q,
                                  n_list, R, seed,
                                  model_id=config["model"].get("type", "model"))
        emit_rows("clt_sweep.csv", rows, header=SWEEP_HEADER)
        path = out / "clt_summary.json"
        _write_json(path, summary)
        written.append(path)

    elif task == "lln-sweep":
        from .analysis import lln_sweep
        n_list = params.get("n_list", [100, 400])
        t = int(params.get("t", 3))
        R = int(params.get("R", 2000))
        x = float(params.get("x", float(np.e) ** 2))
        k = int(params.get("class_coords", 10))

        def family(nn):
            _, r_n = model_from_descriptor({**config["model"], "n": nn})
            return r_n, _resolve_x0(params.get("x0", "half"), nn)

        def classes(nn):
            kk = min(k, nn)
            signs = 1.0 - 2.0 * (((np.arange(2 ** kk)[:, None]
                                   >> np.arange(kk)[None, :]) & 1))
            H = np.zeros((2 ** kk, nn))
            H[:, :kk] = signs
            return H

        rows = lln_sweep(family, classes, t, n_list, R, seed, x=x,
                         model_id=config["model"].get("type", "model"))
        emit_rows("lln_sweep.csv", rows)

    elif task == "graphon":
        from .models import graphdyn as gd
        v_list = params.get("v_list", [8, 16])
        T = int(params.get("T", 3))
        rows = []
        for v in v_list:
            desc = {**config["model"], "v": v}
            gmodel, grule = model_from_descriptor(desc)
            A0 = gmodel.host_adjacency()
            P_seq = gd.deterministic_edge_matrices(gmodel, A0, T)
            rows.append({"v": v, "edges": gmodel.n_edges,
                         "triangle_density_T": gd.triangle_density(P_seq[T]),
                         "clt_variance_T": gd.triangle_clt_variance(gmodel, A0, T)})
        emit_rows("graphon.csv", rows)

    elif task == "hanski-limit":
        from .models import hanski_limit
        G = int(params.get("grid", 512))
        T = int(params.get("T", 5))
        rho0 = float(params.get("rho0", 0.5))
        model, _ = model_from_descriptor(config["model"])
        limit = hanski_limit(model, lambda z: np.full_like(z, rho0), T, G=G)
        rows = [{"t": t, "mean_density": float((limit.weights * limit.rho[t]).sum()),
                 "mean_variance_density":
                     float((limit.weights * limit.variance[t]).sum())}
                for t in range(T + 1)]
        emit_rows("hanski_limit.csv", rows)

    else:  # pragma: no cover - schema forbids it
        raise SchemaError(f"unhandled task {task!r}")

    return written


def _manifest(config, files, out, elapsed, workers):
    return {
        "config": config,
        "config_sha256": hashlib.sha256(_canonical(config).encode()).hexdigest(),
        "version": __version__,
        "workers": workers,
        "wall_time_s": elapsed,
        "files": {f.name: _sha256_file(f) for f in files},
    }


def main(argv=None):
    parser = argparse.ArgumentParser(prog="occlab",
                                     description="occupancy-process laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute an experiment config")
    runp.add_argument("--config", required=True)
    runp.add_argument("--out", default=None)
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                      help="worker threads (results are identical at any count)")
    verp = sub.add_parser("verify", help="run the acceptance suite")
    verp.add_argument("--fast", action="store_true",
                      help="reduced replicate counts (smoke check only)")
    args = parser.parse_args(argv)

    if args.command == "verify":
        from .acceptance import run_all
        results = run_all(fast=args.fast)
        return 0 if all(r.passed for r in results) else 1

    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or config.get("output_dir", "occlab-out")
    started = time.time()
    try:
        files = run_config(config, out_dir, seed_override=args.seed,
                           workers=args.workers)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OcclabError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    manifest = _manifest(config, files, out_dir, time.time() - started,
                         args.workers)
    _write_json(Path(out_dir) / "manifest.json", manifest)
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
