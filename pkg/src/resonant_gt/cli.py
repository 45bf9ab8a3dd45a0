"""Command-line front end: ``rgt quadratic``, ``rgt ocsvm`` and ``rgt verify``.

Every run is driven by a JSON config with the sections ``solver``,
``schedule``, ``objective`` or ``dataset``, ``svm`` and ``output``; each flag
overrides one config path. Exit codes: 0 ok, 1 verification failure,
2 config error, 3 data error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .data import Dataset, load_builtin, load_delimited, load_sparse_indexed, synthetic
from .dynamics import SolverConfig, solve
from .errors import ConfigError, DomainError, EmptySelection, ParseError
from .objectives import QuadraticMulti, QuadraticSingle
from .phasor import random_state
from .rng import Xoshiro256
from .schedules import BetaSchedule
from .svm import (
    KernelSpec,
    OcsvmProblem,
    classify_dataset,
    decision_grid,
    default_config,
    median_sigma,
    save_model,
    train,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

QUADRATIC_DEFAULTS = {
    "seed": 0,
    "trials": 10,
    "objective": {"kind": "quadratic_multi", "n": 5, "groups": None},
    "solver": {"mode": "discrete", "omega": math.pi / 10, "dt": 1e-3, "max_steps": 20000},
    "schedule": BetaSchedule.constant(1.0, start_time=0.1).to_dict(),
    "output": {"dir": "out", "full_trace": False},
}

OCSVM_DEFAULTS = {
    "seed": 0,
    "trials": 1,
    "dataset": {"source": "synthetic", "name": "I", "n": 300},
    "svm": {"nu": 0.1, "sigma": None, "h": None},
    "solver": default_config().to_dict(),
    "schedule": BetaSchedule.constant(1.0, start_time=0.0).to_dict(),
    "output": {"dir": "out", "full_trace": False, "grid_resolution": 100},
}


# config handling


# sections whose keys depend on the chosen variant; replaced wholesale
OPEN_SECTIONS = {"dataset"}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}.{k}" if path else k
        if k not in out:
            raise ConfigError(where, "unknown field")
        if not path and k in OPEN_SECTIONS:
            if not isinstance(v, dict):
                raise ConfigError(where, "expected an object")
            out[k] = copy.deepcopy(v)
            continue
        if isinstance(out[k], dict) and out[k] and not isinstance(v, dict):
            raise ConfigError(where, "expected an object")
        if isinstance(out[k], dict) and isinstance(v, dict) and out[k]:
            out[k] = _merge(out[k], v, where)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path, defaults: dict) -> dict:
    if path is None:
        return copy.deepcopy(defaults)
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("--config", "top level must be an object")
    return _merge(defaults, doc)


def apply_flags(cfg: dict, args) -> dict:
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.trials is not None:
        cfg["trials"] = args.trials
    if args.beta_schedule is not None:
        cfg["schedule"]["kind"] = args.beta_schedule
    if args.beta_max is not None:
        cfg["schedule"]["beta_max"] = args.beta_max
    if args.omega is not None:
        cfg["solver"]["omega"] = args.omega
    if args.out is not None:
        cfg["output"]["dir"] = args.out
    if args.full_trace:
        cfg["output"]["full_trace"] = True
    return cfg


def _int_field(cfg, key, lo=0):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(key, f"expected an integer >= {lo}, got {v!r}")
    return v


def build_solver(cfg: dict) -> SolverConfig:
    return SolverConfig.from_dict(cfg["solver"]).validate(_groups_count(cfg))


def _groups_count(cfg) -> int:
    groups = cfg.get("objective", {}).get("groups")
    return len(groups) if groups else 1


def build_schedule(cfg: dict) -> BetaSchedule:
    return BetaSchedule.from_dict(cfg["schedule"])


# output helpers


def _fmt(x) -> str:
    return format(float(x), ".17g")


class TraceWriter:
    """CSV sink: step, t, beta, H, D, total_active_abs, conservation_residual[, |V_i|, |I_i|, phi_i ...]."""

    HEAD = ["step", "t", "beta", "H", "D", "total_active_abs", "conservation_residual"]

    def __init__(self, path, n: int, full: bool, convention: str = "resonant"):
        self.fh = open(path, "w", newline="")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.full = full
        self.nonresonant = convention == "nonresonant"
        head = list(self.HEAD)
        if full:
            for i in range(n):
                head += [f"V{i}_abs", f"I{i}_abs", f"phi{i}"]
        self.w.writerow(head)
        self.last = None

    def __call__(self, rec):
        active = rec.total_active_abs
        if self.nonresonant:
            active = float(np.sum(rec.v_abs * rec.i_abs))
        row = [rec.step, _fmt(rec.t), _fmt(rec.beta), _fmt(rec.H), _fmt(rec.D), _fmt(active), _fmt(rec.conservation_residual)]
        if self.full:
            for a, b, p in zip(rec.v_abs, rec.i_abs, rec.phi):
                row += [_fmt(a), _fmt(b), _fmt(p)]
        self.w.writerow(row)
        self.last = rec

    def close(self):
        self.fh.close()


def write_manifest(outdir: Path, command: str, cfg: dict, seeds, argv) -> None:
    doc = {
        "command": command,
        "argv": list(argv),
        "config": cfg,
        "seeds": seeds,
        "rng": "xoshiro256** seeded by splitmix64; trial k uses stream k",
        "versions": {
            "resonant_gt": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "platform": platform.platform(),
        },
    }
    (outdir / "manifest.json").write_text(json.dumps(doc, indent=1, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _workers(n_jobs: int) -> int:
    raw = os.environ.get("RGT_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            raise ConfigError("RGT_THREADS", f"expected an integer, got {raw!r}") from None
    return max(1, min(cap, n_jobs))


def _map(fn, jobs):
    w = _workers(len(jobs))
    if w == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, jobs))


# quadratic experiment


def _quadratic_objective(cfg):
    o = cfg["objective"]
    kind = o.get("kind", "quadratic_multi")
    n = o.get("n", 5)
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("objective.n", f"expected a positive integer, got {n!r}")
    if kind == "quadratic_single":
        if n != 1:
            raise ConfigError("objective.n", "quadratic_single has exactly one node")
        return QuadraticSingle(), 1
    if kind == "quadratic_multi":
        return QuadraticMulti(n=n), n
    raise ConfigError("objective.kind", f"unknown objective {kind!r}")


def _quadratic_trial(job):
    cfg, trial, outdir = job
    obj, n = _quadratic_objective(cfg)
    solver = build_solver(cfg)
    schedule = build_schedule(cfg)
    groups = cfg["objective"].get("groups")
    init = random_state(n, Xoshiro256(cfg["seed"], trial), groups)
    full = bool(cfg["output"]["full_trace"])
    out = {}
    runs = [("mnr", BetaSchedule.constant(0.0, start_time=0.0), "nonresonant"), ("mr", schedule, "resonant")]
    for tag, sched, conv in runs:
        w = TraceWriter(Path(outdir) / f"trace_{tag}_trial{trial}.csv", n, full, conv)
        try:
            rep = solve(obj, init, solver, sched, sink=w)
        finally:
            w.close()
        mv, mi = rep.state.masses()
        vi = np.sqrt(mv * mi)
        out[tag] = {
            "converged": rep.converged,
            "steps": rep.step_index,
            "H": w.last.H,
            "D": w.last.D,
            "total_active_abs": float(np.sum(vi * np.abs(np.cos(rep.state.phi)))),
            "sum_vi": float(np.sum(vi)),
        }
    return out


def _stats(values):
    a = np.asarray(values, dtype=float)
    return {"mean": float(a.mean()), "std": float(a.std()), "max": float(a.max()), "min": float(a.min())}


def cmd_quadratic(cfg: dict, argv=()) -> int:
    trials = _int_field(cfg, "trials", 1)
    _int_field(cfg, "seed", 0)
    _quadratic_objective(cfg)
    build_solver(cfg)
    build_schedule(cfg)
    outdir = Path(cfg["output"]["dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    results = _map(_quadratic_trial, [(cfg, t, str(outdir)) for t in range(trials)])
    summary = {"trials": trials}
    for tag in ("mnr", "mr"):
        rs = [r[tag] for r in results]
        summary[tag] = {
            "final": rs,
            "H": _stats([r["H"] for r in rs]),
            "D": _stats([r["D"] for r in rs]),
            "total_active_abs": _stats([r["total_active_abs"] for r in rs]),
            "sum_vi": _stats([r["sum_vi"] for r in rs]),
            "all_converged": all(r["converged"] for r in rs),
        }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    write_manifest(outdir, "quadratic", cfg, {"seed": cfg["seed"], "streams": list(range(trials))}, argv)
    print(f"M_r : max H {summary['mr']['H']['max']:.3e}  max D {summary['mr']['D']['max']:.3e}")
    print(f"M_nr: max H {summary['mnr']['H']['max']:.3e}  min sum|V||I| {summary['mnr']['sum_vi']['min']:.3e}")
    print(f"wrote {outdir}")
    return EXIT_OK


# one-class SVM


def load_dataset(spec: dict, seed: int) -> Dataset:
    src = spec.get("source", "synthetic")
    std = bool(spec.get("standardize", False))
    if src == "synthetic":
        return synthetic(spec.get("name", "I"), int(spec.get("n", 300)), int(spec.get("seed", seed)))
    if src == "builtin":
        return load_builtin(spec.get("name", "iris"), std)
    if src == "file":
        path = spec.get("path")
        if not path:
            raise ConfigError("dataset.path", "required for file datasets")
        fmt = spec.get("format", "delimited")
        if fmt == "delimited":
            return load_delimited(path, bool(spec.get("has_header", False)), int(spec.get("label_column", -1)),
                                  spec.get("majority_label"), spec.get("delimiter"), std)
        if fmt == "sparse":
            return load_sparse_indexed(path, spec.get("majority_label"), spec.get("n_features"))
        raise ConfigError("dataset.format", f"unknown format {fmt!r}")
    raise ConfigError("dataset.source", f"unknown source {src!r}")


def _kernel_sigma(cfg, ds):
    sigma = cfg["svm"].get("sigma")
    if sigma is not None:
        return float(sigma)
    spec = cfg["dataset"]
    if spec.get("source", "synthetic") == "synthetic":
        from .data import PRESETS

        return float(PRESETS[spec.get("name", "I")]["sigma"])
    return median_sigma(ds.x)


def cmd_ocsvm(cfg: dict, argv=()) -> int:
    seed = _int_field(cfg, "seed", 0)
    solver = build_solver(cfg)
    schedule = build_schedule(cfg)
    outdir = Path(cfg["output"]["dir"])
    ds = load_dataset(cfg["dataset"], seed)
    sigma = _kernel_sigma(cfg, ds)
    nu = cfg["svm"].get("nu", 0.1)
    try:
        problem = OcsvmProblem(ds, float(nu), KernelSpec(sigma), cfg["svm"].get("h"))
    except DomainError as exc:
        raise ConfigError("svm", str(exc)) from None
    outdir.mkdir(parents=True, exist_ok=True)
    w = TraceWriter(outdir / "trace.csv", problem.n, bool(cfg["output"]["full_trace"]))
    try:
        model = train(problem, solver, schedule, seed=seed, sink=w)
    finally:
        w.close()
    save_model(model, outdir / "model.json")
    correct, outliers, svs = classify_dataset(model)
    report = {
        "dataset": ds.name,
        "n": problem.n,
        "d": int(ds.x.shape[1]),
        "nu": problem.nu,
        "sigma": sigma,
        "h": problem.h,
        "correct": correct,
        "outliers": outliers,
        "svs": svs,
        "sv_indices": [int(i) for i in model.sv_indices],
        "rho": model.rho,
        "converged": model.report.converged,
        "steps": model.report.step_index,
        "final_H": w.last.H,
        "final_D": w.last.D,
        "final_total_active_abs": w.last.total_active_abs,
    }
    (outdir / "report.json").write_text(json.dumps(report, indent=1) + "\n")
    if ds.x.shape[1] == 2:
        gx, gy, f = decision_grid(model, int(cfg["output"].get("grid_resolution", 100)))
        with open(outdir / "grid.csv", "w", newline="") as fh:
            cw = csv.writer(fh, lineterminator="\n")
            cw.writerow(["x", "y", "f"])
            for a, b, c in zip(gx, gy, f):
                cw.writerow([_fmt(a), _fmt(b), _fmt(c)])
    write_manifest(outdir, "ocsvm", cfg, {"seed": seed, "streams": [0]}, argv)
    print(f"{ds.name}: correct {correct}  outliers {outliers}  SVs {svs}  (sigma {sigma:.4g}, steps {model.report.step_index})")
    print(f"wrote {outdir}")
    return EXIT_OK


def cmd_verify(corrupt_gradient: bool = False) -> int:
    from .verify import run_all

    return EXIT_OK if run_all(corrupt_gradient=corrupt_gradient) else EXIT_VERIFY


def _add_common(p):
    p.add_argument("--config", metavar="PATH", help="JSON config file")
    p.add_argument("--seed", type=int, help="base seed (uint64)")
    p.add_argument("--trials", type=int, help="number of independent trials")
    p.add_argument("--beta-schedule", choices=["constant", "logistic", "switching"])
    p.add_argument("--beta-max", type=float, metavar="R")
    p.add_argument("--omega", type=float, metavar="R", help="angular frequency of the oscillators")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--full-trace", action="store_true", help="add per-node |V|, |I|, phi columns")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rgt", description="Resonant growth-transform optimizer and one-class SVM")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("quadratic", help="resonant vs non-resonant quadratic experiment"))
    _add_common(sub.add_parser("ocsvm", help="train and evaluate the resonant one-class SVM"))
    v = sub.add_parser("verify", help="run the self-check suites")
    v.add_argument("--corrupt-gradient", action="store_true", help=argparse.SUPPRESS)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.corrupt_gradient or os.environ.get("RGT_CORRUPT_GRADIENT") == "1")
        defaults = QUADRATIC_DEFAULTS if args.command == "quadratic" else OCSVM_DEFAULTS
        cfg = apply_flags(load_config(args.config, defaults), args)
        if args.command == "quadratic":
            return cmd_quadratic(cfg, argv)
        return cmd_ocsvm(cfg, argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, EmptySelection, IndexError, DomainError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
