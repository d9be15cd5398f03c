"""Command-line entry point: ``supershift [global flags] {lemmas,criterion,witness,isometry,report}``.

Exit codes: 0 pass, 1 property violation, 2 config error,
3 mathematically excluded case (U = 0), 4 mode requirement unmet.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import random
import sys
from pathlib import Path

from . import experiments as ex
from .space import ModeError, SparseVec, arithmetic, weights_from_json


DEFAULTS: dict = {
    "mode": "exact",
    "seed": 0,
    "lemmas": {
        "weights": {"variant": "geometric", "c": "1/2", "r": "1/2"},
        "samples": 200,
        "max_lambda_support": 6,
        "max_d": 10,
        "height": 9,
        "iterated_samples": 40,
        "k_max": 5,
        "oracle_max_d": 7,
        "oracle_samples": 50,
        "det_max_d": 6,
        "det_samples": 30,
    },
    "criterion": {
        "weights": {"variant": "constant_one"},
        "family": {"generator": "constant", "lambda": [[1, 1, 1]], "size": 8},
        "kmax": 5,
        "sample_count": 20,
        "combination": {
            "enabled": False,
            "lambda1": [[1, 1, 1], [2, 1, 2]],
            "lambda2": [[2, 1, 1], [3, -1, 3]],
            "pairs": 10,
        },
    },
    "witness": {
        "weights": {"variant": "constant_one"},
        "targets_file": None,
        "grid": {"dim": 3, "count": 20},
        "eps": "1/100",
        "kmax": None,
    },
    "isometry": {
        "weights": {"variant": "constant_one"},
        "count": 100,
        "max_support": 12,
        "N": None,
    },
}

SECTIONS = ("lemmas", "criterion", "witness", "isometry")


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and key != "weights" and key != "family":
            if not isinstance(value, dict):
                raise ConfigError(f"{path + key!r} must be an object")
            out[key] = _merge(base[key], value, f"{path}{key}.")
        else:
            out[key] = value
    return out


def load_config(path: str | None, args: argparse.Namespace) -> dict:
    raw: dict = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    global_weights = raw.pop("weights", None)
    cfg = _merge(DEFAULTS, raw)
    if global_weights is not None:
        for section in SECTIONS:
            if "weights" not in raw.get(section, {}):
                cfg[section]["weights"] = global_weights
    if args.mode is not None:
        cfg["mode"] = args.mode
    if args.seed is not None:
        cfg["seed"] = args.seed
    if cfg["mode"] not in ("exact", "float"):
        raise ConfigError(f"mode must be 'exact' or 'float', got {cfg['mode']!r}")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    for section, keys in (
        ("lemmas", ("samples", "max_lambda_support", "max_d", "height", "k_max", "oracle_max_d", "det_max_d")),
        ("criterion", ("kmax", "sample_count")),
        ("isometry", ("count", "max_support")),
    ):
        for key in keys:
            v = cfg[section][key]
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{section}.{key} must be a positive integer")
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


class Emitter:
    """Writes reports into ``out``; every file carries the config hash and mode."""

    def __init__(self, out: Path, cfg: dict):
        self.out = out
        self.cfg = cfg
        self.hash = config_hash(cfg)
        out.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, body: dict) -> Path:
        doc = {"config_hash": self.hash, "mode": self.cfg["mode"], "seed": self.cfg["seed"]}
        doc.update(body)
        path = self.out / name
        path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
        return path

    def csv(self, name: str, header, rows) -> Path:
        path = self.out / name
        with path.open("w", newline="") as fh:
            fh.write(f"# config_hash={self.hash} mode={self.cfg['mode']} seed={self.cfg['seed']}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        return path

    def text(self, name: str, content: str) -> Path:
        path = self.out / name
        header = f"# config_hash={self.hash} mode={self.cfg['mode']} seed={self.cfg['seed']}\n"
        path.write_text(header + content)
        return path


def _weights(section: dict):
    try:
        return weights_from_json(section["weights"])
    except (ValueError, KeyError, ModeError) as exc:
        raise ConfigError(f"bad weights: {exc}") from exc


def cmd_lemmas(cfg: dict, em: Emitter) -> int:
    section = cfg["lemmas"]
    code, report = ex.run_lemmas(section, _weights(section), random.Random(cfg["seed"]))
    em.json("lemmas.json", report)
    print(f"lemmas: {report['summary']}")
    for notice in report["notices"]:
        print(f"notice: {notice}")
    return code


def cmd_criterion(cfg: dict, em: Emitter) -> int:
    section = cfg["criterion"]
    w = _weights(section)
    try:
        code, report, table = ex.run_criterion(section, w, random.Random(cfg["seed"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad criterion config: {exc}") from exc
    em.json("criterion.json", report)
    em.csv("criterion.csv", ("run", "sample", "k", "n_k", "normUk", "normSk", "product", "residual"), table)
    print(f"criterion: {report['summary']}")
    return code


def _load_targets(section: dict, rng: random.Random) -> list[SparseVec]:
    if section["targets_file"]:
        try:
            data = json.loads(Path(section["targets_file"]).read_text())
            return [SparseVec.from_json(t) for t in data]
        except (OSError, json.JSONDecodeError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot read targets: {exc}") from exc
    grid = section["grid"]
    return ex.grid_targets(grid["dim"], grid["count"], rng)


def cmd_witness(cfg: dict, em: Emitter) -> int:
    section = cfg["witness"]
    targets = _load_targets(section, random.Random(cfg["seed"]))
    if not targets:
        raise ConfigError("empty target list")
    if any(not t for t in targets):
        raise ConfigError("targets must be nonzero")
    try:
        code, report, trace_csv, plan = ex.run_witness(section, _weights(section), targets)
    except ModeError as exc:
        raise ConfigError(str(exc)) from exc
    if code == ex.EXIT_MODE:
        em.json("witness.json", report)
        print(f"witness: {report['error']}", file=sys.stderr)
        return code
    em.json("witness.json", report)
    em.json("witness_plan.json", plan)
    em.text("orbit_trace.csv", trace_csv)
    print(f"witness: {report['summary']}")
    return code


def cmd_isometry(cfg: dict, em: Emitter) -> int:
    section = cfg["isometry"]
    code, report, rows = ex.run_isometry(section, _weights(section), random.Random(cfg["seed"]))
    em.json("isometry.json", report)
    em.csv("isometry.csv", ("id", "N", "lower", "upper", "width", "collapsed"), rows)
    print(f"isometry: {report['summary']}")
    return code


def cmd_report(cfg: dict, em: Emitter) -> int:
    codes = {}
    for name, fn in (
        ("lemmas", cmd_lemmas),
        ("criterion", cmd_criterion),
        ("witness", cmd_witness),
        ("isometry", cmd_isometry),
    ):
        codes[name] = fn(cfg, em)
    worst = max(codes.values())
    lines = [f"{name:10s} exit {code}" for name, code in codes.items()]
    em.json("report.json", {"exit_codes": codes, "summary": "; ".join(lines)})
    em.text("report.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return worst


COMMANDS = {
    "lemmas": cmd_lemmas,
    "criterion": cmd_criterion,
    "witness": cmd_witness,
    "isometry": cmd_isometry,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="supershift",
        description="Exact experiments with weighted backward shift series and supercyclicity.",
    )
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="random seed (overrides config)")
    parser.add_argument("--mode", choices=("exact", "float"), help="arithmetic mode (overrides config)")
    parser.add_argument("--out", default="out", metavar="DIR", help="output directory (default: out)")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("command", choices=sorted(COMMANDS))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config, args)
        with arithmetic(cfg["mode"]):
            em = Emitter(Path(args.out), cfg)
            return COMMANDS[args.command](cfg, em)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"supershift: config error: {exc}", file=sys.stderr)
        return ex.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
