"""Batch experiment runner.

``drag-forge run <preset>`` reproduces the bundled benchmark sweeps and
writes a CSV plus a JSON manifest next to it; ``drag-forge run --config
FILE`` executes the same sweep machinery from a user config.  Output is
deterministic: identical configs give identical bytes.

Exit codes: 0 success, 2 unknown preset or invalid config, 3 numerical
convergence failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .dressing import lambda_sno
from .fidelity import gate_error, ideal_not
from .model import (SystemSpec, build_intermediate_sno, build_sno,
                    build_star, spec_from_json)
from .optimizer import OptimizeTask, optimize
from .propagator import ConvergenceError, TimeGrid, converge, populations, propagate
from .pulses import DragVariant, GaussianParams, controls_for

__all__ = ["main", "run_preset", "run_config", "preset_config", "PRESETS"]

_DELTA2 = -2.0 * math.pi  # default time-unit convention: |delta2| = 2*pi

_FIRST_ORDER_SET = ["gaussian0", "z_only1", "y_only1", "drag1", "optimal1"]
_SECOND_ORDER_SET = ["gaussian0", "z_only2", "y_only2", "drag2", "optimal1"]
_MULTI_SET = ["gaussian0", "z_only1", "y_only1", "optimal1"]

_SIGMA_GRID = [round(0.2 * k, 10) for k in range(2, 11)]  # 0.4 .. 2.0


def _system_config(kind: str, **kw) -> dict:
    return {"kind": kind, **kw}


def preset_config(name: str) -> dict:
    """Plain-dict sweep config of a named preset (sweep presets only)."""
    sweeps = {
        "gaussian-benchmark": {
            "name": "gaussian-benchmark",
            "system": _system_config("sno", d=5, delta2=_DELTA2),
            "variants": ["gaussian0"],
            "sigma": [1.0 / 3.0, 2.0 / 3.0, 1.5],
            "area": math.pi,
            "tg_factor": 4.0,
            "n_steps": 4096,
        },
        "fig3": {
            "name": "fig3",
            "system": _system_config("sno", d=5, delta2=_DELTA2),
            "variants": list(_FIRST_ORDER_SET),
            "sigma": list(_SIGMA_GRID),
            "area": math.pi,
            "tg_factor": 4.0,
            "n_steps": 4096,
        },
        "fig4": {
            "name": "fig4",
            "system": _system_config("sno", d=5, delta2=_DELTA2),
            "variants": list(_SECOND_ORDER_SET),
            "sigma": list(_SIGMA_GRID),
            "area": math.pi,
            "tg_factor": 4.0,
            "n_steps": 4096,
        },
        "fig7": {
            "name": "fig7",
            "system": _system_config("intermediate_sno", d=5, delta2=_DELTA2),
            "variants": list(_MULTI_SET),
            "sigma": list(_SIGMA_GRID),
            "area": math.pi,
            "tg_factor": 4.0,
            "n_steps": 4096,
        },
        "fig8": {
            "name": "fig8",
            "system": _system_config(
                "star",
                delta=[_DELTA2, 2 * _DELTA2, 3 * _DELTA2, 4 * _DELTA2],
                **{"lambda": [1.0, 1.0, 1.0, 1.0]}),
            "variants": list(_MULTI_SET),
            "sigma": list(_SIGMA_GRID),
            "area": math.pi,
            "tg_factor": 4.0,
            "n_steps": 4096,
        },
    }
    if name not in sweeps:
        raise KeyError(name)
    return sweeps[name]


def _build_system(doc: dict) -> SystemSpec:
    kind = doc.get("kind")
    if kind == "sno":
        return build_sno(int(doc["d"]), float(doc["delta2"]))
    if kind == "intermediate_sno":
        return build_intermediate_sno(int(doc["d"]), float(doc["delta2"]))
    if kind == "star":
        return build_star([float(v) for v in doc["delta"]],
                          [float(v) for v in doc["lambda"]])
    if kind == "spec":
        return spec_from_json(json.dumps(doc["spec"]))
    raise ValueError(f"system.kind: unknown kind {kind!r}")


class ConfigError(ValueError):
    pass


def _validate_config(cfg: dict) -> dict:
    def fail(path, msg):
        raise ConfigError(f"{path}: {msg}")

    if not isinstance(cfg, dict):
        fail("$", "config must be a JSON object")
    for key in ("name", "system", "variants", "sigma"):
        if key not in cfg:
            fail(key, "missing required field")
    if not isinstance(cfg["name"], str) or not cfg["name"]:
        fail("name", "must be a non-empty string")
    if not isinstance(cfg["system"], dict):
        fail("system", "must be an object")
    try:
        _build_system(cfg["system"])
    except (KeyError, TypeError) as exc:
        fail("system", f"invalid system: {exc}")
    except ValueError as exc:
        fail("system", str(exc))
    variants = cfg["variants"]
    if not isinstance(variants, list) or not variants:
        fail("variants", "must be a non-empty list")
    for i, v in enumerate(variants):
        try:
            DragVariant(v)
        except ValueError:
            fail(f"variants[{i}]", f"unknown variant {v!r}")
    sig = cfg["sigma"]
    if not isinstance(sig, list) or not sig:
        fail("sigma", "must be a non-empty list")
    vals = [float(s) for s in sig]
    if any(b <= a for a, b in zip(vals, vals[1:])):
        fail("sigma", "must be strictly increasing")
    if any(s <= 0 for s in vals):
        fail("sigma", "values must be positive")
    out = dict(cfg)
    out.setdefault("area", math.pi)
    out.setdefault("tg_factor", 4.0)
    out.setdefault("n_steps", 4096)
    if out["n_steps"] != "auto":
        n = out["n_steps"]
        if not isinstance(n, int) or n < 16:
            fail("n_steps", "must be an integer >= 16 or \"auto\"")
    if float(out["tg_factor"]) <= 0:
        fail("tg_factor", "must be positive")
    return out


def _sweep_point(args) -> tuple:
    system_doc, variant, sigma, area, tg_factor, n_steps = args
    spec = _build_system(system_doc)
    params = GaussianParams(area, sigma, tg_factor * sigma)
    cs = controls_for(spec, DragVariant(variant), params)
    uid = ideal_not(spec.d, spec.qubit_rows)
    if n_steps == "auto":
        u, used = converge(spec, cs, params.t_g, 1e-9)
    else:
        u = propagate(spec, cs, TimeGrid(params.t_g, n_steps))
        used = n_steps
    return sigma, variant, gate_error(u, uid, spec.qubit_rows), used


def _run_sweep(cfg: dict, out_dir: Path, jobs: int) -> Path:
    points = [(cfg["system"], v, s, cfg["area"], cfg["tg_factor"],
               cfg["n_steps"])
              for s in cfg["sigma"] for v in cfg["variants"]]
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_sweep_point, points))
        else:
            rows = [_sweep_point(p) for p in points]
    except ConvergenceError as exc:
        raise ConvergenceError(f"{exc} (while sweeping {cfg['name']})")
    rows.sort(key=lambda r: (r[0], cfg["variants"].index(r[1])))

    name = cfg["name"]
    csv_path = out_dir / f"{name}.csv"
    manifest_path = out_dir / f"{name}.manifest.json"
    with open(csv_path, "w") as fh:
        fh.write(f"# manifest: {manifest_path.name}\n")
        fh.write("sigma,variant,gate_error,n_steps\n")
        for sigma, variant, err, used in rows:
            fh.write(f"{sigma!r},{variant},{err!r},{used}\n")
    manifest = {
        "name": name,
        "version": __version__,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "csv": csv_path.name,
        "rows": [{"sigma": s, "variant": v, "n_steps": used}
                 for s, v, _, used in rows],
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return csv_path


# -- non-sweep presets --------------------------------------------------------

def _run_fig5(name: str, out_dir: Path, delta0_free: bool,
              sigmas=(0.5, 0.75, 1.0, 1.5), max_evals: int = 250,
              prop_tol: float = 1e-9) -> Path:
    spec = build_sno(5, _DELTA2)
    masks = [
        ("alpha", (True, False, False, False)),
        ("alpha+gamma", (True, False, True, False)),
        ("alpha+beta", (True, True, False, False)),
        ("alpha+beta+gamma", (True, True, True, False)),
    ]
    if delta0_free:
        masks = [(lbl + "+delta0", m[:3] + (True,)) for lbl, m in masks]
    csv_path = out_dir / f"{name}.csv"
    manifest_path = out_dir / f"{name}.manifest.json"
    rows = []
    for sigma in sigmas:
        params = GaussianParams.for_not(sigma)
        for label, mask in masks:
            task = OptimizeTask(spec, params, mask, max_evals=max_evals,
                                prop_tol=prop_tol)
            res = optimize(task)
            rows.append((sigma, label, res))
    with open(csv_path, "w") as fh:
        fh.write(f"# manifest: {manifest_path.name}\n")
        fh.write("sigma,mask,alpha,beta,gamma,delta0,gate_error,n_evals\n")
        for sigma, label, res in rows:
            a, b, g, d0 = res.x
            fh.write(f"{sigma!r},{label},{a!r},{b!r},{g!r},{d0!r},"
                     f"{res.gate_error!r},{res.n_evals}\n")
    manifest = {
        "name": name,
        "version": __version__,
        "config": {"system": {"kind": "sno", "d": 5, "delta2": _DELTA2},
                   "sigma": list(sigmas), "masks": [lbl for lbl, _ in masks],
                   "max_evals": max_evals},
        "csv": csv_path.name,
        "rows": [{"sigma": s, "mask": lbl, "n_steps": res.n_steps,
                  "n_evals": res.n_evals} for s, lbl, res in rows],
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return csv_path


def _run_fig9(out_dir: Path) -> Path:
    csv_path = out_dir / "fig9.csv"
    manifest_path = out_dir / "fig9.manifest.json"
    ratios = [round(-3.0 + 0.01 * k, 10) for k in range(601)]
    guard = 0.02
    rows = [(r, lambda_sno(2, r), math.sqrt(2.0))
            for r in ratios if abs(r + 1.0) > guard]
    with open(csv_path, "w") as fh:
        fh.write(f"# manifest: {manifest_path.name}\n")
        fh.write("ratio,lambda1_cavity,lambda1_direct\n")
        for r, lc, ld in rows:
            fh.write(f"{r!r},{lc!r},{ld!r}\n")
    manifest = {
        "name": "fig9",
        "version": __version__,
        "config": {"ratio_range": [-3.0, 3.0], "step": 0.01,
                   "pole_guard": guard, "transition": 2},
        "csv": csv_path.name,
        "rows": len(rows),
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return csv_path


def _run_pop_traces(out_dir: Path, n_steps) -> Path:
    spec = build_sno(5, _DELTA2)
    steps = 4096 if n_steps == "auto" else n_steps
    manifest_path = out_dir / "pop-traces.manifest.json"
    files = []
    for i, sigma in enumerate((1.0 / 3.0, 2.0 / 3.0, 1.5), start=1):
        params = GaussianParams.for_not(sigma)
        cs = controls_for(spec, DragVariant.GAUSSIAN0, params)
        times, probs = populations(spec, cs, TimeGrid(params.t_g, steps), 0)
        path = out_dir / f"pop-traces-{i}.csv"
        with open(path, "w") as fh:
            fh.write(f"# manifest: {manifest_path.name}\n")
            fh.write("t," + ",".join(f"p{j}" for j in range(spec.d)) + "\n")
            for t, row in zip(times, probs):
                fh.write(repr(float(t)) + ","
                         + ",".join(repr(float(p)) for p in row) + "\n")
        files.append({"sigma": sigma, "csv": path.name, "n_steps": steps})
    manifest = {
        "name": "pop-traces",
        "version": __version__,
        "config": {"system": {"kind": "sno", "d": 5, "delta2": _DELTA2},
                   "variant": "gaussian0", "initial_level": 0},
        "files": files,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest_path


PRESETS = ("gaussian-benchmark", "fig3", "fig4", "fig5a", "fig5b",
           "fig7", "fig8", "fig9", "pop-traces")


def run_preset(name: str, out_dir, jobs: int = 1, n_steps=None) -> Path:
    """Execute a named preset; returns the primary output path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if name == "fig5a":
        return _run_fig5("fig5a", out_dir, delta0_free=False)
    if name == "fig5b":
        return _run_fig5("fig5b", out_dir, delta0_free=True)
    if name == "fig9":
        return _run_fig9(out_dir)
    if name == "pop-traces":
        return _run_pop_traces(out_dir, n_steps or 4096)
    cfg = preset_config(name)
    if n_steps is not None:
        cfg["n_steps"] = n_steps
    return _run_sweep(_validate_config(cfg), out_dir, jobs)


def run_config(path, out_dir, jobs: int = 1, n_steps=None) -> Path:
    """Execute a sweep described by a JSON config file."""
    with open(path) as fh:
        cfg = json.load(fh)
    cfg = _validate_config(cfg)
    if n_steps is not None:
        cfg["n_steps"] = n_steps
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return _run_sweep(cfg, out_dir, jobs)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="drag-forge",
        description="Pulse-synthesis benchmark sweeps for leakage-corrected "
                    "single-qubit gates.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a preset or a JSON sweep config")
    run.add_argument("preset", nargs="?", help=f"one of: {', '.join(PRESETS)}")
    run.add_argument("--config", help="path to a JSON sweep config")
    run.add_argument("--jobs", type=int, default=1, help="parallel workers")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--steps", default=None,
                     help="integrator steps per point (integer or 'auto')")
    args = parser.parse_args(argv)

    steps = None
    if args.steps is not None:
        steps = args.steps if args.steps == "auto" else int(args.steps)

    try:
        if args.config:
            out = run_config(args.config, args.out, args.jobs, steps)
        elif args.preset:
            if args.preset not in PRESETS:
                print(f"unknown preset {args.preset!r}; available: "
                      f"{', '.join(PRESETS)}", file=sys.stderr)
                return 2
            out = run_preset(args.preset, args.out, args.jobs, steps)
        else:
            print("nothing to run: give a preset name or --config",
                  file=sys.stderr)
            return 2
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
