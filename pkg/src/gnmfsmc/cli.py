"""Command-line entry point: ``gnmfsmc {simulate,unmix,evaluate,benchmark,replay}``.

Configuration files hold one ``key = value`` pair per line; ``#`` starts a
comment. Command-line flags override file values. Exit codes:

    0  success
    2  configuration / argument error
    3  file or I/O error (including malformed input files)
    4  dimension mismatch
    5  numerical failure
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__, dataio
from .core import HyperspectralScene, NumericalFailure, ParameterError, UnmixConfig, Variant
from .metrics import evaluate
from .simdata import SimulationConfig, simulate
from .unmixing import solve

log = logging.getLogger("gnmfsmc")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIMENSION, EXIT_NUMERICAL = 0, 2, 3, 4, 5

# published reference RMS angles (deg); qualitative target, not expected output
REFERENCE_TABLE = {
    "NMF": (19.54, 10.23),
    "GNMF": (15.76, 8.34),
    "NMF_SMC": (13.24, 6.67),
    "GNMF_SMC": (11.87, 5.89),
}


class ConfigError(ValueError):
    pass


class DimensionError(ValueError):
    pass


# ---------------------------------------------------------------- config

_SIM_KEYS = {f.name: f.type for f in fields(SimulationConfig)}
_UNMIX_KEYS = {
    "endmember_count": int,
    "variant": str,
    "alpha": float,
    "beta": float,
    "sigma1": float,
    "neighbors": int,
    "max_iterations": int,
    "objective_tolerance": float,
    "sum_to_one": str,
    "delta": float,
    "init": str,
}
_BENCH_KEYS = {"seeds": int, "variants": str, "workers": int}
_ALIASES = {"tolerance": "objective_tolerance", "p": "neighbors", "snr": "snr_db"}


def _coerce(key: str, raw: str):
    if key in _UNMIX_KEYS:
        kind = _UNMIX_KEYS[key]
    elif key in _BENCH_KEYS:
        kind = _BENCH_KEYS[key]
    else:
        kind = {"rows": int, "cols": int, "endmembers": int, "bands": int, "factor": int,
                "snr_db": float, "seed": int, "regions": int}.get(key, str)
    text = str(raw).strip()
    if kind is str:
        return None if text.lower() in ("none", "") else text
    if text.lower() == "none" and key in ("regions",):
        return None
    try:
        if kind is float and text.lower() in ("inf", "+inf", "off"):
            return math.inf
        value = kind(text)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {text!r} as {kind.__name__}") from None
    return value


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    known = set(_SIM_KEYS) | set(_UNMIX_KEYS) | set(_BENCH_KEYS)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = (s.strip() for s in line.split("=", 1))
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = parts
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))


def _flag_overrides(args) -> dict:
    mapping = {
        "seed": "seed", "variant": "variant", "alpha": "alpha", "beta": "beta", "sigma1": "sigma1",
        "neighbors": "neighbors", "factor": "factor", "snr_db": "snr_db",
        "max_iterations": "max_iterations", "tolerance": "objective_tolerance",
        "endmembers": "endmember_count", "seeds": "seeds", "variants": "variants", "workers": "workers",
    }
    out = {}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[key] = value
    return out


def resolve(args) -> dict:
    cfg = load_config(getattr(args, "config", None))
    cfg.update(_flag_overrides(args))
    return cfg


def sim_config(cfg: dict) -> SimulationConfig:
    kw = {k: v for k, v in cfg.items() if k in _SIM_KEYS}
    if "endmember_count" in cfg and "endmembers" not in cfg:
        kw["endmembers"] = cfg["endmember_count"]
    try:
        return SimulationConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def unmix_config(cfg: dict, P: int, seed: int | None = None) -> UnmixConfig:
    kw = {k: v for k, v in cfg.items() if k in _UNMIX_KEYS}
    kw.setdefault("endmember_count", P)
    kw["seed"] = int(cfg.get("seed", 0) if seed is None else seed)
    try:
        return UnmixConfig(**kw)
    except (TypeError, ParameterError) as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------- manifest

def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, config: dict, inputs: dict, outputs: list[str],
                   started: float, extra: dict | None = None) -> Path:
    manifest = {
        "tool": "gnmfsmc",
        "version": __version__,
        "command": command,
        "config": {k: _jsonable(v) for k, v in config.items()},
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {name: _digest(out / name) for name in outputs},
        "wall_seconds": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _config_from_manifest(manifest: dict) -> dict:
    return {k: float(v) if v in ("inf", "-inf") else v for k, v in manifest["config"].items()}


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg: dict, out_dir) -> dict:
    started = time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sc = sim_config(cfg)
    sim = simulate(sc)
    dataio.write_matrix(out / "scene.txt", sim.scene.data)
    dataio.write_matrix(out / "endmembers.txt", sim.true_endmembers.signatures)
    dataio.write_matrix(out / "abundances.txt", sim.true_abundances.fractions)
    outputs = ["scene.txt", "endmembers.txt", "abundances.txt"]
    resolved = sc.as_dict()
    write_manifest(out, "simulate", resolved, {}, outputs, started,
                   {"seeds": {"simulation": sc.seed},
                    "scene_shape": list(sim.scene.data.shape),
                    "classes": list(sim.classes),
                    "clamp_rate": sim.clamp_rate})
    log.info("simulated %d bands x %d pixels into %s", *sim.scene.data.shape, out)
    return {"scene_shape": sim.scene.data.shape}


def cmd_unmix(scene_path, cfg: dict, out_dir) -> dict:
    started = time.time()
    out = Path(out_dir)
    Y = dataio.read_matrix(scene_path, nonnegative=True)
    P = int(cfg.get("endmember_count", cfg.get("endmembers", 4)))
    config = unmix_config(cfg, P)
    result = solve(HyperspectralScene(Y), config)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_matrix(out / "endmembers.txt", result.endmembers.signatures)
    dataio.write_matrix(out / "abundances.txt", result.abundances.fractions)
    dataio.write_trace(out / "trace.csv", result)
    outputs = ["endmembers.txt", "abundances.txt", "trace.csv"]
    write_manifest(out, "unmix", config.as_dict(), {"scene": Path(scene_path).resolve()}, outputs, started,
                   {"seeds": {"solver": config.seed},
                    "iterations_run": result.iterations_run,
                    "termination": result.termination.value})
    log.info("%s: %d iterations (%s)", config.variant.value, result.iterations_run, result.termination.value)
    return {"result": result}


def _load_pair(directory: Path):
    W = dataio.read_matrix(directory / "endmembers.txt", nonnegative=True)
    H = dataio.read_matrix(directory / "abundances.txt", nonnegative=True)
    return W, H


def cmd_evaluate(truth_dir, result_dir, out_dir=None) -> dict:
    started = time.time()
    truth_dir, result_dir = Path(truth_dir), Path(result_dir)
    Wt, Ht = _load_pair(truth_dir)
    We, He = _load_pair(result_dir)
    if Wt.shape != We.shape:
        raise DimensionError(f"endmember matrix: expected {Wt.shape[0]}x{Wt.shape[1]}, got {We.shape[0]}x{We.shape[1]}")
    if Ht.shape != He.shape:
        raise DimensionError(f"abundance matrix: expected {Ht.shape[0]}x{Ht.shape[1]}, got {He.shape[0]}x{He.shape[1]}")
    report = evaluate(Wt, Ht, S_est=We, A_est=He)
    out = Path(out_dir) if out_dir is not None else result_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(report.to_text())
    (out / "report.json").write_text(report.to_json() + "\n")
    write_manifest(out, "evaluate", {}, {"truth": truth_dir.resolve(), "result": result_dir.resolve()},
                   ["report.txt", "report.json"], started)
    return {"report": report}


def _bench_cell(args):
    sim_cfg, unmix_kw, variant, seed = args
    sim = simulate(sim_cfg)
    config = UnmixConfig(**{**unmix_kw, "variant": variant, "seed": seed})
    t0 = time.time()
    result = solve(sim.scene, config)
    rep = evaluate(sim.true_endmembers, sim.true_abundances, result)
    return {
        "variant": Variant.parse(variant).value,
        "seed": seed,
        "rms_sad_deg": math.degrees(rep.rms_sad),
        "rms_aad_deg": math.degrees(rep.rms_aad),
        "iterations": result.iterations_run,
        "termination": result.termination.value,
        "seconds": time.time() - t0,
    }


def run_benchmark(cfg: dict) -> list[dict]:
    """All requested variants on ``seeds`` scenes; returns one row per cell."""
    base = sim_config(cfg)
    n_seeds = int(cfg.get("seeds", 10))
    variants = [Variant.parse(v).value for v in
                str(cfg.get("variants", "NMF,GNMF,NMF_SMC,GNMF_SMC")).split(",") if v.strip()]
    P = int(cfg.get("endmember_count", base.endmembers))
    unmix_kw = unmix_config(cfg, P).as_dict()
    unmix_kw.pop("seed")
    unmix_kw.pop("variant")
    cells = []
    for i in range(n_seeds):
        seed = base.seed + i
        sc = SimulationConfig(**{**base.as_dict(), "seed": seed})
        for v in variants:
            cells.append((sc, unmix_kw, v, seed))
    workers = int(cfg.get("workers", 0)) or (os.cpu_count() or 1)
    if workers == 1 or len(cells) == 1:
        rows = [_bench_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
            rows = list(pool.map(_bench_cell, cells))
    return rows


def summarize(rows: list[dict]) -> dict:
    table = {}
    for v in dict.fromkeys(r["variant"] for r in rows):
        sad = np.array([r["rms_sad_deg"] for r in rows if r["variant"] == v])
        aad = np.array([r["rms_aad_deg"] for r in rows if r["variant"] == v])
        table[v] = {"sad_mean": float(sad.mean()), "sad_std": float(sad.std()),
                    "aad_mean": float(aad.mean()), "aad_std": float(aad.std()), "n": int(sad.size)}
    return table


def render_table(table: dict) -> str:
    lines = ["RMS values in degrees (mean ± std over seeds)",
             f"{'method':<10} {'SAD':>17} {'AAD':>17} {'ref SAD':>10} {'ref AAD':>10}"]
    for v, s in table.items():
        ps, pa = REFERENCE_TABLE.get(v, (float("nan"), float("nan")))
        lines.append(f"{v.replace('_', '-'):<10} {s['sad_mean']:8.2f} ± {s['sad_std']:6.2f} "
                     f"{s['aad_mean']:8.2f} ± {s['aad_std']:6.2f} {ps:10.2f} {pa:10.2f}")
    if "GNMF_SMC" in table and "NMF" in table:
        g, n = table["GNMF_SMC"], table["NMF"]
        lines.append(f"ordering rms_SAD(GNMF-SMC) < rms_SAD(NMF): {g['sad_mean'] < n['sad_mean']}")
        lines.append(f"ordering rms_AAD(GNMF-SMC) < rms_AAD(NMF): {g['aad_mean'] < n['aad_mean']}")
    return "\n".join(lines) + "\n"


def cmd_benchmark(cfg: dict, out_dir) -> dict:
    started = time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_benchmark(cfg)
    table = summarize(rows)
    with open(out / "runs.csv", "w") as fh:
        fh.write("variant,seed,rms_sad_deg,rms_aad_deg,iterations,termination\n")
        for r in rows:
            fh.write(f"{r['variant']},{r['seed']},{r['rms_sad_deg']!r},{r['rms_aad_deg']!r},"
                     f"{r['iterations']},{r['termination']}\n")
    with open(out / "table.csv", "w") as fh:
        fh.write("method,sad_mean,sad_std,aad_mean,aad_std,n\n")
        for v, s in table.items():
            fh.write(f"{v},{s['sad_mean']!r},{s['sad_std']!r},{s['aad_mean']!r},{s['aad_std']!r},{s['n']}\n")
    (out / "table.txt").write_text(render_table(table))
    resolved = {**sim_config(cfg).as_dict(), **{k: v for k, v in cfg.items() if k in _UNMIX_KEYS or k in _BENCH_KEYS}}
    resolved.setdefault("seeds", int(cfg.get("seeds", 10)))
    write_manifest(out, "benchmark", resolved, {}, ["runs.csv", "table.csv", "table.txt"], started,
                   {"seeds": {"scenes": [r["seed"] for r in rows]},
                    "cell_seconds": [round(r["seconds"], 3) for r in rows]})
    return {"rows": rows, "table": table}


def cmd_replay(manifest_path, out_dir) -> dict:
    """Re-run the command recorded in a manifest and compare output digests."""
    manifest = json.loads(Path(manifest_path).read_text())
    cfg = _config_from_manifest(manifest)
    command = manifest["command"]
    if command == "simulate":
        cmd_simulate(cfg, out_dir)
    elif command == "unmix":
        cmd_unmix(manifest["inputs"]["scene"], cfg, out_dir)
    elif command == "evaluate":
        cmd_evaluate(manifest["inputs"]["truth"], manifest["inputs"]["result"], out_dir)
    elif command == "benchmark":
        cmd_benchmark(cfg, out_dir)
    else:
        raise ConfigError(f"unknown command {command!r} in manifest")
    out = Path(out_dir)
    mismatched = [name for name, digest in manifest["outputs"].items() if _digest(out / name) != digest]
    return {"mismatched": mismatched}


# ---------------------------------------------------------------- argparse

def _common(p: argparse.ArgumentParser, solver=True, sim=True):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    if solver:
        p.add_argument("--variant", choices=[v.value for v in Variant])
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--sigma1", type=float)
        p.add_argument("--neighbors", type=int)
        p.add_argument("--max-iterations", dest="max_iterations", type=int)
        p.add_argument("--tolerance", type=float)
        p.add_argument("--endmembers", type=int)
    if sim:
        p.add_argument("--factor", type=int)
        p.add_argument("--snr-db", dest="snr_db", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnmfsmc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic mixed-pixel scene")
    _common(p, solver=False)
    p.add_argument("--endmembers", type=int)

    p = sub.add_parser("unmix", help="factor a scene file")
    p.add_argument("scene", help="scene matrix file (bands x pixels)")
    _common(p, sim=False)

    p = sub.add_parser("evaluate", help="score a result directory against ground truth")
    p.add_argument("truth_dir")
    p.add_argument("result_dir")
    p.add_argument("--out", help="report directory (default: result_dir)")

    p = sub.add_parser("benchmark", help="all variants over several seeds")
    _common(p)
    p.add_argument("--seeds", type=int)
    p.add_argument("--variants", help="comma-separated subset of variants")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            cmd_simulate(resolve(args), args.out)
        elif args.command == "unmix":
            if not Path(args.scene).is_file():
                raise FileNotFoundError(f"scene file not found: {args.scene}")
            cmd_unmix(args.scene, resolve(args), args.out)
        elif args.command == "evaluate":
            cmd_evaluate(args.truth_dir, args.result_dir, args.out)
        elif args.command == "benchmark":
            res = cmd_benchmark(resolve(args), args.out)
            sys.stdout.write(render_table(res["table"]))
        elif args.command == "replay":
            res = cmd_replay(args.manifest, args.out)
            if res["mismatched"]:
                print("outputs differ from manifest: " + ", ".join(res["mismatched"]), file=sys.stderr)
                return EXIT_NUMERICAL
            print("replay reproduced all recorded outputs")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DimensionError as exc:
        print(f"dimension error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except dataio.FormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
