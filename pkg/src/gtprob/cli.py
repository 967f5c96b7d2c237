"""Command line: ``gtprob {gen-corpus,detect,verify,wlln-play} [--config F] [--seed S] [--out DIR]``.

Exit codes: 0 success (no alarm / all suites passed), 2 alarm raised or a
suite failed, 1 error. Nothing is written when the exit code is 1.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import sys
from pathlib import Path as FsPath

import numpy as np

from . import suites
from .config import COMMAND_CONFIGS, ConfigError, config_dict, derive_seed, dump_config, load_config
from .corpora import cycle_path
from .detectors import enumerate_events, run_detector
from .increase import EpsilonSchedule, ScheduleError, e_cd_witness
from .paths import (
    DomainError,
    ParseError,
    dump_path_csv,
    gen_constant,
    gen_random_walk,
    gen_stopped_walk,
    gen_violation,
    load_path_csv,
)
from .wlln import GameConfig, ProtocolViolation, RandomMoves, StakeAdaptiveAdversary, capital_bound, play_game

EXIT_OK, EXIT_ERROR, EXIT_ALARM = 0, 1, 2
MANIFEST = "manifest.json"
SEED_DERIVATION = "numpy SeedSequence([root_seed, index]).generate_state(1, uint64)[0]"


class UsageError(ValueError):
    pass


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_all(out: FsPath, files: dict) -> None:
    """Write ``{relative name: text}`` under ``out`` after every file has been computed."""
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            target = out / name
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc}") from None


# ----------------------------------------------------------------- gen-corpus

def build_corpus(cfg, root_seed: int) -> tuple[list, list]:
    """``(items, paths)`` where each item records how its path was generated."""
    items, paths = [], []

    def add(kind, params, path, seed=None):
        idx = len(items)
        items.append({"index": idx, "file": f"paths/path_{idx:05d}.csv", "seed": seed,
                      "generator": {"kind": kind, "params": params}})
        paths.append(path)

    if cfg.kind == "random_walk":
        if cfg.n_paths < 1:
            raise UsageError("n_paths must be >= 1")
        for i in range(cfg.n_paths):
            s = derive_seed(root_seed, i)
            add("random_walk", {"n_steps": cfg.n_steps, "step_scale": cfg.step_scale, "dt": cfg.dt},
                gen_random_walk(s, cfg.n_steps, cfg.dt, cfg.step_scale), s)
    elif cfg.kind == "stopped_walk":
        if cfg.n_paths < 1:
            raise UsageError("n_paths must be >= 1")
        for i in range(cfg.n_paths):
            s = derive_seed(root_seed, i)
            add("stopped_walk", {"n_steps": cfg.n_steps, "stop_level": cfg.stop_level,
                                 "step_scale": cfg.step_scale, "dt": cfg.dt},
                gen_stopped_walk(s, cfg.n_steps, cfg.stop_level, cfg.dt, cfg.step_scale), s)
    elif cfg.kind == "constant":
        if not cfg.levels:
            raise UsageError("levels must be non-empty")
        for level in cfg.levels:
            add("constant", {"level": level, "horizon": float(cfg.n_steps) * cfg.dt},
                gen_constant(level, float(cfg.n_steps) * cfg.dt))
    elif cfg.kind == "violation":
        if not cfg.b_grid or not cfg.D_grid:
            raise UsageError("b_grid and D_grid must be non-empty")
        for b in cfg.b_grid:
            for D in cfg.D_grid:
                params = {"a": cfg.a, "D": D}
                if cfg.violation == "isolated_level_point":
                    params["b"] = b
                elif cfg.violation == "monotone_run":
                    params["level"] = b
                add(cfg.violation, params, gen_violation(cfg.violation, **params))
    elif cfg.kind == "cycle":
        if cfg.n_paths < 1:
            raise UsageError("n_paths must be >= 1")
        sch = EpsilonSchedule.from_exponent(cfg.epsilon_exponent)
        for i in range(cfg.n_paths):
            s = derive_seed(root_seed, i)
            add("cycle", {"epsilon_exponent": cfg.epsilon_exponent},
                cycle_path(sch, np.random.default_rng(s)), s)
    else:
        raise UsageError(f"unknown corpus kind {cfg.kind!r}")
    return items, paths


def cmd_gen_corpus(cfg, root_seed: int, out: FsPath, timestamp: str | None = None) -> int:
    items, paths = build_corpus(cfg, root_seed)
    files = {}
    for item, path in zip(items, paths):
        text = dump_path_csv(path)
        item["sha256"] = _sha256(text)
        files[item["file"]] = text
    body = {"command": "gen-corpus", "config": config_dict(cfg), "root_seed": root_seed,
            "seed_derivation": SEED_DERIVATION, "items": items}
    manifest = dict(body)
    manifest["content_hash"] = _sha256(json.dumps(body, sort_keys=True))
    manifest["created_utc"] = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    files[MANIFEST] = _json(manifest)
    files["config.txt"] = dump_config(cfg)
    _write_all(out, files)
    print(f"wrote {len(items)} paths to {out} (content_hash {manifest['content_hash'][:16]})")
    return EXIT_OK


# --------------------------------------------------------------------- detect

def load_corpus(corpus_dir: FsPath) -> tuple[dict, list]:
    mpath = corpus_dir / MANIFEST
    if not mpath.is_file():
        raise UsageError(f"missing corpus manifest {mpath}")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed manifest {mpath}: {exc.msg}") from None
    paths = []
    for item in manifest.get("items", []):
        fpath = corpus_dir / item["file"]
        try:
            text = fpath.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {fpath}: {exc}") from None
        try:
            paths.append(load_path_csv(text))
        except ParseError as exc:
            raise UsageError(f"{fpath}: line {exc.line}: {exc}") from None
    if not paths:
        raise UsageError("corpus is empty")
    return manifest, paths


def _stats(xs) -> dict:
    a = np.asarray([float(x) for x in xs], dtype=float)
    finite = a[np.isfinite(a)]
    if not len(finite):
        return {"mean": None, "std": None, "max": None}
    return {"mean": float(finite.mean()), "std": float(finite.std()), "max": float(finite.max())}


def cmd_detect(cfg, root_seed: int, out: FsPath) -> int:
    manifest, paths = load_corpus(FsPath(cfg.corpus))
    files, per_path, alarms, factors = {}, [], [], []
    if cfg.detector in ("isolated_point", "monotone"):
        family = enumerate_events(cfg.a_grid, cfg.D_grid, cfg.detector, b=cfg.b, epsilon=cfg.epsilon,
                                  direction=cfg.direction)
        for i, path in enumerate(paths):
            rep = run_detector(family, path, cfg.alarm_factor)
            d = rep.to_dict()
            d["index"] = i
            per_path.append(d)
            factors.append(rep.max_factor)
            if rep.alarm:
                alarms.append({"index": i, "trigger": d["trigger"], "trigger_time": d["trigger_time"]})
            if cfg.write_traces:
                files[f"traces/path_{i:05d}.csv"] = rep.composite_trace.to_csv()
    elif cfg.detector == "increase":
        witness = e_cd_witness(cfg.C, cfg.D, cfg.epsilon_exponent, cfg.K)
        for i, path in enumerate(paths):
            rep = witness.evaluate(path)
            d = rep.to_dict()
            d["index"] = i
            per_path.append(d)
            f = max(rep.first_factor, rep.second_factor)
            factors.append(f)
            if f >= cfg.alarm_factor:
                alarms.append({"index": i, "trigger": rep.branch, "trigger_time": None})
    else:
        raise UsageError(f"unknown detector {cfg.detector!r}")
    for d in per_path:
        files[f"reports/path_{d['index']:05d}.json"] = _json(d)
    aggregate = {
        "detector": cfg.detector, "config": config_dict(cfg),
        "corpus_content_hash": manifest.get("content_hash"), "n_paths": len(paths),
        "alarm": bool(alarms), "n_alarms": len(alarms), "alarms": alarms, "factor": _stats(factors),
    }
    files["aggregate.json"] = _json(aggregate)
    _write_all(out, files)
    print(f"{cfg.detector}: {len(alarms)} alarm(s) on {len(paths)} path(s); "
          f"mean factor {aggregate['factor']['mean']}")
    return EXIT_ALARM if alarms else EXIT_OK


# --------------------------------------------------------------------- verify

def _suite_kwargs(name: str, cfg, seed: int) -> dict:
    if name == "wlln":
        return {"n_instances": cfg.n_instances, "seed": seed}
    if name in ("layers", "darboux"):
        return {"n_instances": cfg.n_samples, "seed": seed}
    if name == "certificate":
        return {"n_sequences": cfg.n_samples, "seed": seed}
    if name == "first_process":
        return {"exponents": tuple(cfg.epsilon_exponents), "n_paths": cfg.n_paths, "seed": seed}
    if name == "neutrality":
        return {"n_paths": cfg.n_paths, "seed": seed}
    if name == "cycle_payoffs":
        return {"schedule": EpsilonSchedule.from_exponent(cfg.epsilon_exponents[0]), "n_paths": cfg.n_paths,
                "seed": seed}
    return {}


VERIFY_SUITES = {
    "wlln": suites.wlln_sweep,
    "wlln_tightness": suites.wlln_tightness,
    "certificate": suites.wlln_certificate_check,
    "layers": suites.layer_algebra,
    "cycle_payoffs": suites.cycle_payoffs,
    "darboux": suites.darboux_sandwich,
    "coherence": suites.coherence,
    "first_process": suites.first_process_bound,
    "neutrality": suites.neutrality,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items() if k != "runtime_s"}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if hasattr(obj, "numerator") and not isinstance(obj, (int, bool)):
        return float(obj)
    return obj


def cmd_verify(cfg, root_seed: int, out: FsPath) -> int:
    unknown = [s for s in cfg.suites if s not in VERIFY_SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; choose from {sorted(VERIFY_SUITES)}")
    results = {}
    for k, name in enumerate(cfg.suites):
        res = VERIFY_SUITES[name](**_suite_kwargs(name, cfg, derive_seed(root_seed, k) % 2 ** 32))
        print(f"{name:15s} {'PASS' if res['passed'] else 'FAIL'}  worst slack {res['worst_slack']!r}  "
              f"({res['runtime_s']:.2f}s)", file=sys.stderr)
        results[name] = _jsonable(res)
    summary = {"config": config_dict(cfg), "root_seed": root_seed,
               "passed": all(r["passed"] for r in results.values()), "suites": results}
    _write_all(out, {"verify.json": _json(summary)})
    return EXIT_OK if summary["passed"] else EXIT_ALARM


# ------------------------------------------------------------------ wlln-play

def cmd_wlln_play(cfg, root_seed: int, out: FsPath) -> int:
    game = GameConfig(cfg.N, cfg.c)
    if cfg.n_games < 1:
        raise UsageError("n_games must be >= 1")
    files, games = {}, []
    for g in range(cfg.n_games):
        if cfg.reality == "fixed":
            if len(cfg.moves) != cfg.N:
                raise UsageError(f"fixed reality needs {cfg.N} moves, got {len(cfg.moves)}")
            reality = list(cfg.moves)
        elif cfg.reality in ("random", "extreme"):
            reality = RandomMoves(cfg.c, derive_seed(root_seed, g), extreme=cfg.reality == "extreme")
        elif cfg.reality == "adaptive":
            reality = StakeAdaptiveAdversary(cfg.c)
        else:
            raise UsageError(f"unknown reality {cfg.reality!r}")
        tr = play_game(game, reality)
        bound = capital_bound(game, cfg.N, tr.prefix_sums[-1])
        files[f"game_{g:04d}.csv"] = tr.to_csv()
        games.append({"game": g, "final": float(tr.final), "bound": float(bound),
                      "min_capital": float(min(tr.capitals)), "sum_moves": float(tr.prefix_sums[-1])})
    files["summary.json"] = _json({"config": config_dict(cfg), "root_seed": root_seed, "games": games})
    _write_all(out, files)
    print(f"played {cfg.n_games} game(s); final capitals {[g['final'] for g in games][:5]}")
    return EXIT_OK


COMMANDS = {
    "gen-corpus": cmd_gen_corpus,
    "detect": cmd_detect,
    "verify": cmd_verify,
    "wlln-play": cmd_wlln_play,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gtprob", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat 'key = <json>' config file")
        sp.add_argument("--seed", type=int, help="root seed (overrides the config's seed)")
        sp.add_argument("--out", default="out", help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cls = COMMAND_CONFIGS[args.command]
    try:
        cfg = load_config(args.config, cls) if args.config else cls()
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise UsageError("--seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        return COMMANDS[args.command](cfg, cfg.seed, FsPath(args.out))
    except (ConfigError, UsageError, DomainError, ScheduleError, ProtocolViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
