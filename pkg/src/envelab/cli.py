"""Command line runner: ``envelab run <experiment> --config <path> --out <dir>``.

The config is an INI file.  An optional ``[experiment]`` section holds
``seed``; the section named after the experiment holds its parameters.
Unknown sections and keys are rejected.  Example::

    [experiment]
    seed = 0

    [arc-decay]
    half_angles = pi/2 pi/3
    ks = 20:80:10
    tolerance = 0.10

Lists are whitespace or comma separated; ``a:b:c`` is the inclusive range
``a, a+c, ..., b``; angles accept ``pi``, ``pi/N`` and ``M*pi/N``.

Exit codes: 0 all checks pass, 1 some check failed, 2 configuration
error, 3 numerical escalation exhausted.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import experiments as E
from .bigtoeplitz import EscalationExhausted, PrecisionError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# ---------------------------------------------------------------------------
# value parsers


_ANGLE = re.compile(r"^(?:(?P<m>[0-9.]+)\s*\*\s*)?pi(?:\s*/\s*(?P<n>[0-9.]+))?$")


def parse_angle(text: str) -> float:
    text = text.strip()
    m = _ANGLE.match(text)
    if m:
        return float(m.group("m") or 1.0) * math.pi / float(m.group("n") or 1.0)
    return float(text)


def _split(text: str) -> list[str]:
    return [tok for tok in re.split(r"[\s,]+", text.strip()) if tok]


def parse_int_list(text: str) -> list[int]:
    out: list[int] = []
    for tok in _split(text):
        if ":" in tok:
            parts = [int(p) for p in tok.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ConfigError(f"range {tok!r} must be start:stop:step with a positive step")
            out.extend(range(parts[0], parts[1] + 1, parts[2]))
        else:
            out.append(int(tok))
    return out


def parse_angle_list(text: str) -> list[float]:
    return [parse_angle(tok) for tok in _split(text)]


def positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise ConfigError(f"expected a positive integer, got {v}")
    return v


def nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise ConfigError(f"expected a non-negative integer, got {v}")
    return v


def positive_float(text: str) -> float:
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise ConfigError(f"expected a positive number, got {v}")
    return v


def ks_list(text: str) -> list[int]:
    ks = parse_int_list(text)
    if not ks or any(k <= 0 for k in ks):
        raise ConfigError(f"k values must be positive, got {ks}")
    return ks


def optional_ks(text: str) -> list[int]:
    return ks_list(text) if text.strip() else []


def half_angles(text: str) -> list[float]:
    vals = parse_angle_list(text)
    if not vals or any(not 0 < a < math.pi for a in vals):
        raise ConfigError("half-angles must lie in (0, pi)")
    return vals


def boolean(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "yes", "true", "on"):
        return True
    if low in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"expected yes or no, got {text!r}")


def symbol_kind(text: str) -> str:
    if text not in ("outside-disk", "constant", "log-tent"):
        raise ConfigError(f"unknown radial symbol {text!r}")
    return text


# experiment -> key -> (parser, default text)
SCHEMA: dict[str, dict[str, tuple]] = {
    "arc-decay": {
        "half_angles": (half_angles, "pi/2"),
        "ks": (ks_list, "20:80:10"),
        "precision_bits": (positive_int, "512"),
        "degree": (positive_int, "64"),
        "tolerance": (positive_float, "0.10"),
    },
    "radial-distribution": {
        "symbol": (symbol_kind, "outside-disk"),
        "value": (positive_float, "1.0"),
        "k": (positive_int, "200"),
        "moment_tolerance": (positive_float, "0.02"),
        "ks_tolerance": (positive_float, "0.05"),
        "eps": (positive_float, "0.02"),
        "fraction_tolerance": (positive_float, "0.03"),
        "fit_ks": (optional_ks, ""),
        "max_exponent": (positive_float, "0.01"),
        "probe_ks": (optional_ks, ""),
        "probe_tolerance": (positive_float, "0.03"),
        "distribution": (boolean, "yes"),
    },
    "transfer-identity": {
        "n_symbols": (positive_int, "10"),
        "k": (positive_int, "12"),
        "tolerance": (positive_float, "1e-10"),
    },
    "ball-growth": {
        "ks": (ks_list, "25 50 100"),
        "tolerance": (positive_float, "0.05"),
    },
    "schatten-convergence": {
        "ks": (ks_list, "40 80 160"),
    },
    "property-suite": {},
}
COMMON = {"seed": (nonneg_int, "0")}


def load_config(experiment: str, path) -> dict:
    """Parse and validate ``path``; returns the resolved parameter dict."""
    if experiment not in SCHEMA:
        raise ConfigError(f"unknown experiment {experiment!r}")
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    for sec in cp.sections():
        if sec not in ("experiment", experiment):
            raise ConfigError(f"unknown section [{sec}]")
    resolved: dict = {}
    for sec, schema in (("experiment", COMMON), (experiment, SCHEMA[experiment])):
        given = dict(cp[sec]) if cp.has_section(sec) else {}
        unknown = sorted(set(given) - set(schema))
        if unknown:
            raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(unknown)}")
        for key, (parser, default) in schema.items():
            text = given.get(key, default)
            try:
                resolved[key] = parser(text)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"[{sec}] {key} = {text!r}: {exc}") from exc
    return resolved


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    try:
        return "%.17g" % (float(x) + 0.0)  # + 0.0 folds -0 into 0
    except (TypeError, ValueError):
        return str(x)


def write_outputs(res: E.ExperimentResult, out: Path, config: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, (cols, rows) in sorted(res.tables.items()):
        with open(out / f"{name}.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    for name, (xlabel, ylabel, rows) in sorted(res.plots.items()):
        with open(out / f"{name}.dat", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {xlabel} {ylabel}\n")
            for row in rows:
                fh.write(" ".join(_fmt(x) for x in row) + "\n")
    summary = {
        "experiment": res.name,
        "config": config,
        "passed": res.passed,
        "failed": [c.name for c in res.checks if not c.passed],
        "checks": [c.as_dict() for c in res.checks],
        "info": {k: (float(v) if isinstance(v, (int, float)) else v) for k, v in res.info.items()},
    }
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# dispatch


def run_experiment(name: str, cfg: dict, pool_map=map) -> E.ExperimentResult:
    if name == "arc-decay":
        return E.arc_decay(cfg["half_angles"], cfg["ks"], cfg["precision_bits"], cfg["degree"],
                           cfg["tolerance"], pool_map=pool_map)
    if name == "radial-distribution":
        return E.radial_distribution(
            cfg["symbol"], cfg["k"], cfg["value"], cfg["moment_tolerance"], cfg["ks_tolerance"],
            cfg["eps"], cfg["fraction_tolerance"], cfg["fit_ks"], cfg["max_exponent"],
            cfg["probe_ks"], cfg["probe_tolerance"], cfg["distribution"], pool_map=pool_map)
    if name == "transfer-identity":
        return E.transfer_identity(cfg["n_symbols"], cfg["k"], cfg["seed"], cfg["tolerance"])
    if name == "ball-growth":
        return E.ball_growth(cfg["ks"], cfg["tolerance"])
    if name == "schatten-convergence":
        return E.schatten_convergence(cfg["ks"], pool_map=pool_map)
    if name == "property-suite":
        return E.property_suite(cfg["seed"])
    raise ConfigError(f"unknown experiment {name!r}")


def _threads(arg) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("ENVELAB_THREADS", "").strip()
    if not env:
        return 1
    try:
        n = int(env)
    except ValueError as exc:
        raise ConfigError(f"ENVELAB_THREADS must be an integer, got {env!r}") from exc
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="envelab", description="Run reproducible envelope and Toeplitz experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", choices=sorted(SCHEMA))
    run.add_argument("--config", required=True, help="INI config file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--precision-bits", type=int, default=None, help="working precision for big-float stages")
    run.add_argument("--threads", type=int, default=None, help="worker processes (default: ENVELAB_THREADS or 1)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.experiment, args.config)
        if args.precision_bits is not None:
            if args.precision_bits < 64:
                raise ConfigError("--precision-bits must be at least 64")
            if "precision_bits" in cfg:
                cfg["precision_bits"] = args.precision_bits
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError("thread count must be positive")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if threads == 1:
            res = run_experiment(args.experiment, cfg)
        else:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                res = run_experiment(args.experiment, cfg, pool_map=pool.map)
    except (EscalationExhausted, PrecisionError) as exc:
        print(f"numerical escalation exhausted: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_outputs(res, Path(args.out), cfg)
    for c in res.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}")
    return EXIT_OK if res.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
