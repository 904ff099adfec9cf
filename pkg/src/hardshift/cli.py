"""Batch experiment CLI: sampling, transformation demos, verification,
bound estimation, displacement statistics, and parameter sweeps.

One resolved experiment spec (config file plus flag overrides, flags win)
drives each task; the fully resolved spec, including every default, is
echoed into ``summary.json`` so runs are reproducible byte for byte.

Exit codes: 0 success, 1 property failure (witnesses dumped), 2 usage.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, config as cfgio, sampler, transform
from .backend import backend_name
from .params import ModelParams, derive_params

USAGE_ERROR = 2
PROPERTY_FAILURE = 1

DEFAULTS = {
    "n": 32,
    "z": 0.5,
    "delta": 0.5,
    "seed": 12345,
    "chains": 1,
    "burn_in": 500,
    "samples": 100,
    "thin": 2,
    "boundary": {"type": "triangular", "spacing": 2.0},
    "out": "hardshift_out",
    "anchor": [0.0, 0.0],
    "radius": 0.5,
    "input": None,
    "dump_profile": False,
    "sweep": None,
}


class UsageError(Exception):
    pass


class PropertyFailure(Exception):
    def __init__(self, message: str, witnesses: dict):
        super().__init__(message)
        self.witnesses = witnesses


# ---------------------------------------------------------------------------
# spec resolution
# ---------------------------------------------------------------------------

def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {path}")
    text = p.read_text()
    try:
        if p.suffix in (".toml", ".tml"):
            try:
                import tomllib as toml
            except ImportError:
                import tomli as toml
            return toml.loads(text)
        return json.loads(text)
    except Exception as exc:
        raise UsageError(f"malformed config file {path}: {exc}") from exc


def _parse_boundary_flag(value: str, spacing: float | None) -> dict:
    if value == "empty":
        return {"type": "empty"}
    if value == "triangular":
        out = {"type": "triangular", "spacing": DEFAULTS["boundary"]["spacing"]}
        if spacing is not None:
            out["spacing"] = spacing
        return out
    if value.startswith("file:"):
        return {"type": "file", "path": value[5:]}
    raise UsageError(f"unknown boundary spec {value!r}")


def resolve_spec(args: argparse.Namespace) -> dict:
    spec = dict(DEFAULTS)
    spec["task"] = args.task
    if args.config:
        file_spec = _load_config_file(args.config)
        for k, v in file_spec.items():
            if k not in DEFAULTS and k not in ("task",):
                raise UsageError(f"unknown config key {k!r}")
            spec[k] = v
    for key in ("n", "z", "delta", "seed", "chains", "burn_in", "samples",
                "thin", "out", "radius", "input"):
        v = getattr(args, key, None)
        if v is not None:
            spec[key] = v
    if getattr(args, "boundary", None) is not None:
        spec["boundary"] = _parse_boundary_flag(args.boundary,
                                                getattr(args, "spacing", None))
    elif getattr(args, "spacing", None) is not None:
        if spec["boundary"].get("type") == "triangular":
            spec["boundary"] = dict(spec["boundary"], spacing=args.spacing)
    if getattr(args, "anchor", None) is not None:
        try:
            x, y = args.anchor.split(",")
            spec["anchor"] = [float(x), float(y)]
        except ValueError as exc:
            raise UsageError(f"bad --anchor {args.anchor!r}, expected X,Y") from exc
    if getattr(args, "dump_profile", False):
        spec["dump_profile"] = True
    if getattr(args, "sweep_param", None) is not None:
        if getattr(args, "sweep_values", None) is None:
            raise UsageError("--sweep-values required with --sweep-param")
        spec["sweep"] = {
            "param": args.sweep_param,
            "values": [float(v) for v in args.sweep_values.split(",")],
            "task": getattr(args, "sweep_task", None) or "bounds",
        }
    try:
        spec["n"] = int(spec["n"])
        spec["z"] = float(spec["z"])
        spec["delta"] = float(spec["delta"])
        spec["seed"] = int(spec["seed"])
        spec["chains"] = int(spec["chains"])
        spec["burn_in"] = int(spec["burn_in"])
        spec["samples"] = int(spec["samples"])
        spec["thin"] = int(spec["thin"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid numeric field in spec: {exc}") from exc
    if min(spec["burn_in"], spec["samples"], spec["thin"]) < 0 or spec["chains"] < 1:
        raise UsageError("sweep counts must be >= 0 and chains >= 1")
    return spec


def spec_params(spec: dict) -> ModelParams:
    try:
        return derive_params(spec["n"], spec["z"], spec["delta"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def boundary_points(spec: dict, params: ModelParams) -> np.ndarray:
    b = spec["boundary"]
    kind = b.get("type")
    if kind == "empty":
        return np.empty((0, 2))
    if kind == "triangular":
        try:
            return sampler.boundary_triangular(params.n, float(b.get("spacing", 2.0)))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if kind == "file":
        cfg = _read_configuration(b.get("path", ""))
        if cfg.n != params.n:
            raise UsageError(f"boundary file n={cfg.n} does not match spec n={params.n}")
        return cfg.boundary
    raise UsageError(f"unknown boundary type {kind!r}")


def _read_configuration(path: str) -> cfgio.Configuration:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"input file not found: {path}")
    text = p.read_text()
    try:
        if p.suffix == ".csv":
            return cfgio.from_csv(text)
        return cfgio.from_json(text)
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed configuration file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# tasks
# ---------------------------------------------------------------------------

def _chain_worker(spec: dict, chain_index: int, shard_path: str) -> str:
    params = spec_params(spec)
    bnd = boundary_points(spec, params)
    seed = sampler.derive_chain_seed(spec["seed"], chain_index)
    with open(shard_path, "w") as fh:
        for cfg in sampler.sample_stream(params, bnd, spec["burn_in"],
                                         spec["samples"], spec["thin"], seed):
            fh.write(cfgio.to_json(cfg) + "\n")
    return shard_path


def _max_workers(chains: int) -> int:
    cap = os.environ.get("HARDSHIFT_THREADS")
    if cap:
        return max(1, min(chains, int(cap)))
    return max(1, min(chains, os.cpu_count() or 1))


def run_sample(spec: dict, out: Path) -> dict:
    chains = spec["chains"]
    shard_paths = [str(out / f"samples_chain{i}.jsonl.part") for i in range(chains)]
    if chains == 1:
        _chain_worker(spec, 0, shard_paths[0])
    else:
        with cf.ProcessPoolExecutor(max_workers=_max_workers(chains)) as pool:
            futures = [pool.submit(_chain_worker, spec, i, shard_paths[i])
                       for i in range(chains)]
            for f in futures:
                f.result()
    target = out / "samples.jsonl"
    counts = []
    with open(target, "w") as dst:
        for sp in shard_paths:
            n_lines = 0
            with open(sp) as src:
                for line in src:
                    dst.write(line)
                    n_lines += 1
            counts.append(n_lines)
            os.remove(sp)
    return {
        "samples_file": target.name,
        "per_chain_samples": counts,
        "chain_seeds": [sampler.derive_chain_seed(spec["seed"], i)
                        for i in range(chains)],
    }


def _iter_samples(spec: dict, params: ModelParams):
    if spec.get("input"):
        path = Path(spec["input"])
        if not path.exists():
            raise UsageError(f"input file not found: {spec['input']}")
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    try:
                        yield cfgio.from_json(line)
                    except (ValueError, json.JSONDecodeError) as exc:
                        raise UsageError(f"malformed sample line: {exc}") from exc
    else:
        bnd = boundary_points(spec, params)
        yield from sampler.sample_stream(params, bnd, spec["burn_in"],
                                         spec["samples"], spec["thin"],
                                         spec["seed"])


def _single_input_config(spec: dict, params: ModelParams) -> cfgio.Configuration:
    if spec.get("input"):
        return _read_configuration(spec["input"])
    bnd = boundary_points(spec, params)
    return next(sampler.sample_stream(params, bnd, spec["burn_in"], 1,
                                      spec["thin"], spec["seed"]))


def run_transform(spec: dict, out: Path) -> dict:
    params = spec_params(spec)
    cfg = _single_input_config(spec, params)
    bad = cfgio.check_hard_core(cfg)
    if bad:
        raise PropertyFailure("input configuration violates the hard core",
                              {"pairs": bad[:10]})
    trace = transform.build_forward(cfg, params)
    image = transform.apply_shift(cfg, trace, +1)
    (out / "input.json").write_text(cfgio.to_json(cfg) + "\n")
    (out / "transformed.json").write_text(cfgio.to_json(image) + "\n")
    (out / "trace.jsonl").write_text(transform.trace_to_jsonl(cfg, trace))
    result = {
        "particles": trace.size,
        "phi": trace.phi,
        "phi_bar": trace.phi_bar,
        "m_prime": trace.m_prime,
        "max_shift": float(np.max(trace.shifts)) if trace.size else 0.0,
    }
    if spec["dump_profile"]:
        steps = sorted({0, trace.size // 4, trace.size // 2,
                        3 * trace.size // 4, trace.size})
        rows = ["step,s,value"]
        svals = np.linspace(-params.n, params.n, 4 * params.n + 1).tolist()
        for st in steps:
            state = transform.profile_state_from_trace(cfg, params, trace, upto=st)
            for s in svals:
                rows.append(f"{st},{s!r},{state.value_at((s, 0.0))!r}")
        (out / "profile.csv").write_text("\n".join(rows) + "\n")
        result["profile_file"] = "profile.csv"
    return result


def run_invert(spec: dict, out: Path) -> dict:
    params = spec_params(spec)
    cfg = _single_input_config(spec, params)
    original = transform.invert(cfg, params)
    (out / "inverted.json").write_text(cfgio.to_json(original) + "\n")
    return {"particles": cfg.count}


def run_verify(spec: dict, out: Path) -> dict:
    params = spec_params(spec)
    rows = ["sample,good,phi,phi_bar,log_phiphibar,max_shift,roundtrip_err"]
    crows = ["sample,n_clusters,largest_cluster,max_reach_excess"]
    n_all = 0
    n_good = 0
    failures = []
    for idx, cfg in enumerate(_iter_samples(spec, params)):
        bad = cfgio.check_hard_core(cfg)
        if bad:
            raise PropertyFailure(
                f"sample {idx} violates the hard core",
                {"sample": idx, "pairs": [list(map(int, p)) for p in bad[:10]]})
        rep = analysis.verify_properties(cfg, params)
        creport = analysis.cluster_reach(cfg, params)
        n_clusters = len(set(creport.cluster_id.tolist())) if cfg.count else 0
        largest = int(np.max(np.bincount(creport.cluster_id))) if cfg.count else 0
        crows.append(f"{idx},{n_clusters},{largest},{creport.worst_excess!r}")
        rows.append(",".join([str(idx), str(int(rep.good)), repr(rep.phi),
                              repr(rep.phi_bar), repr(rep.log_phi_phibar),
                              repr(rep.max_shift), repr(rep.roundtrip_err)]))
        n_all += 1
        n_good += int(rep.good)
        if not rep.passed:
            failures.append({"sample": idx, "witnesses": rep.witnesses,
                             "report": {k: v for k, v in vars(rep).items()
                                        if isinstance(v, (bool, int, float, type(None)))}})
    (out / "verify.csv").write_text("\n".join(rows) + "\n")
    (out / "clusters.csv").write_text("\n".join(crows) + "\n")
    if failures:
        raise PropertyFailure(f"{len(failures)} sample(s) failed property checks",
                              {"failures": failures[:10]})
    return {"n_samples": n_all, "n_good": n_good,
            "all_passed": True, "verify_file": "verify.csv"}


def run_bounds(spec: dict, out: Path) -> dict:
    params = spec_params(spec)
    rows = ["sample,good,phi,phi_bar,log_phiphibar,max_shift"]

    def stream():
        for idx, cfg in enumerate(_iter_samples(spec, params)):
            trace = transform.build_forward(cfg, params, check=False)
            rep = analysis.cluster_reach(cfg, params)
            lpp = transform.log_phi_phibar(trace)
            ms = float(np.max(trace.shifts)) if trace.size else 0.0
            rows.append(",".join([str(idx), str(int(rep.good)), repr(trace.phi),
                                  repr(trace.phi_bar), repr(lpp), repr(ms)]))
            yield cfg

    stats = analysis.bound_checks(stream(), params)
    (out / "bounds.csv").write_text("\n".join(rows) + "\n")
    return stats


def run_msd(spec: dict, out: Path) -> dict:
    params = spec_params(spec)
    anchor = spec["anchor"]
    try:
        stats = analysis.tagged_displacement(
            _iter_samples(spec, params), params, anchor,
            radius=spec["radius"], collect_rows=True)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = stats.pop("rows")
    lines = ["sample,present,xi_x,xi_y,disp,compatible"]
    for r in rows:
        lines.append(f"{r[0]},{r[1]},{r[2]!r},{r[3]!r},{r[4]!r},{r[5]}")
    (out / "msd.csv").write_text("\n".join(lines) + "\n")
    return stats


def run_sweep(spec: dict, out: Path) -> dict:
    sw = spec.get("sweep")
    if not sw:
        raise UsageError("sweep task needs a sweep spec "
                         "(--sweep-param/--sweep-values or config key 'sweep')")
    param_name = sw.get("param")
    if param_name not in ("delta", "n"):
        raise UsageError(f"sweep param must be 'delta' or 'n', got {param_name!r}")
    subtask = sw.get("task", "bounds")
    if subtask not in ("bounds", "msd"):
        raise UsageError(f"sweep subtask must be 'bounds' or 'msd', got {subtask!r}")
    results = []
    header = None
    lines = []
    for value in sw["values"]:
        sub = dict(spec)
        sub["sweep"] = None
        sub[param_name] = int(value) if param_name == "n" else float(value)
        params = spec_params(sub)
        if subtask == "bounds":
            stats = run_bounds(sub, out)
            row = {
                "param": param_name, "value": sub[param_name],
                "delta_sq": sub["delta"] ** 2,
                "sqrt_log_n": params.sqrt_log_n,
                "target_shift": params.target_shift,
                "good_fraction": stats["good_fraction"],
                "mean_abs_log_phiphibar": stats["mean_abs_log_phiphibar"],
                "se_abs_log_phiphibar": stats["se_abs_log_phiphibar"],
            }
        else:
            stats = run_msd(sub, out)
            row = {
                "param": param_name, "value": sub[param_name],
                "sqrt_log_n": params.sqrt_log_n,
                "target_shift": params.target_shift,
                "p_present": stats["p_present"],
                "p_displacement_ge_half_target": stats["p_displacement_ge_half_target"],
                "mean_square_displacement": stats["mean_square_displacement"],
            }
        results.append(row)
        if header is None:
            header = list(row)
            lines.append(",".join(header))
        lines.append(",".join(repr(row[k]) if isinstance(row[k], float)
                              else str(row[k]) for k in header))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return {"rows": results, "sweep_file": "sweep.csv"}


TASKS = {
    "sample": run_sample,
    "transform": run_transform,
    "invert": run_invert,
    "verify": run_verify,
    "bounds": run_bounds,
    "msd": run_msd,
    "sweep": run_sweep,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hardshift",
        description="Hard disk shift-transformation experiments")
    sub = ap.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task")
        p.add_argument("--config", help="JSON or TOML experiment spec")
        p.add_argument("--n", type=int)
        p.add_argument("--z", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--chains", type=int)
        p.add_argument("--burn-in", dest="burn_in", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--thin", type=int)
        p.add_argument("--out")
        p.add_argument("--boundary",
                       help="triangular | empty | file:PATH")
        p.add_argument("--spacing", type=float)
        p.add_argument("--input", help="configuration JSON/CSV or samples JSONL")
        if task == "transform":
            p.add_argument("--dump-profile", action="store_true",
                           dest="dump_profile",
                           help="dump envelope cross sections as CSV")
        if task == "msd":
            p.add_argument("--anchor", help="anchor point as X,Y")
            p.add_argument("--radius", type=float)
        if task == "sweep":
            p.add_argument("--sweep-param", choices=["delta", "n"])
            p.add_argument("--sweep-values", help="comma-separated values")
            p.add_argument("--sweep-task", choices=["bounds", "msd"])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = resolve_spec(args)
        out = Path(spec["out"])
        out.mkdir(parents=True, exist_ok=True)
        result = TASKS[spec["task"]](spec, out)
        summary = {"spec": spec, "backend": backend_name(), "results": result}
        (out / "summary.json").write_text(json.dumps(summary, indent=2,
                                                     sort_keys=True) + "\n")
        print(f"hardshift {spec['task']}: ok -> {out}")
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except PropertyFailure as exc:
        out = Path(getattr(args, "out", None) or DEFAULTS["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "failures.json").write_text(
            json.dumps({"message": str(exc), "witnesses": exc.witnesses},
                       indent=2, default=str) + "\n")
        print(f"property failure: {exc}", file=sys.stderr)
        return PROPERTY_FAILURE


if __name__ == "__main__":
    sys.exit(main())
