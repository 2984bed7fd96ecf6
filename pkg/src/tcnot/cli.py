"""Command-line experiment driver.

Subcommands ``memory``, ``cnot-chain`` and ``y-factory`` run one experiment
family; ``sweep`` reads a JSON config document (flat keys, list values for
d/p/n_r) whose keys match the flag names, with command-line flags taking
precedence.  Results are written as CSV (default) or JSON.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dem import ExtractionError
from .experiments import (ConfigError, ExperimentConfig, rows_to_csv,
                          rows_to_json, run_experiment)

_CONFIG_KEYS = ("experiment", "d", "p", "n_r", "num_cnots", "shots", "seed",
                "l_max", "workers", "baseline", "basis", "code", "noise",
                "out", "format")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--d", type=int, nargs="+", default=None,
                     help="code distances")
    sub.add_argument("--p", type=float, nargs="+", default=None,
                     help="physical error rates")
    sub.add_argument("--n-r", dest="n_r", type=int, nargs="+", default=None,
                     help="SE rounds between CNOT layers (memory: total rounds)")
    sub.add_argument("--cnots", dest="num_cnots", type=int, default=None,
                     help="number of alternating CNOTs (cnot-chain)")
    sub.add_argument("--shots", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--l-max", dest="l_max", type=int, default=None)
    sub.add_argument("--workers", type=int, default=None,
                     help="worker processes (default: TCNOT_WORKERS env or 1)")
    sub.add_argument("--baseline", action="store_true", default=None,
                     help="also run the memory-equivalent baseline")
    sub.add_argument("--basis", choices=["Z", "X"], default=None)
    sub.add_argument("--code", choices=["surface", "repetition"], default=None)
    sub.add_argument("--noise", choices=["sd6", "phenomenological", "none"],
                     default=None)
    sub.add_argument("--out", default=None, help="output path (default stdout)")
    sub.add_argument("--format", choices=["csv", "json"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcnot",
        description="Monte Carlo logical-error-rate experiments for "
                    "transversal-CNOT circuits")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("memory", "cnot-chain", "y-factory"):
        _add_common(subs.add_parser(name))
    sweep = subs.add_parser("sweep")
    sweep.add_argument("config", help="JSON config file")
    _add_common(sweep)
    return parser


_DEFAULTS = {
    "d": [3], "p": [1e-3], "n_r": [1], "num_cnots": 2, "shots": 10000,
    "seed": 0, "l_max": None, "workers": None, "baseline": False,
    "basis": "Z", "code": "surface", "noise": "sd6", "out": None,
    "format": "csv",
}

_COMMAND_EXPERIMENT = {
    "memory": "MEMORY",
    "cnot-chain": "CNOT_CHAIN",
    "y-factory": "Y_FACTORY",
}


def _resolve(args: argparse.Namespace) -> dict:
    values = dict(_DEFAULTS)
    if args.command == "sweep":
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(_CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    else:
        values["experiment"] = _COMMAND_EXPERIMENT[args.command]
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if "experiment" not in values or values["experiment"] is None:
        raise ConfigError("sweep config must set 'experiment'")
    return values


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        values = _resolve(args)
        cfg = ExperimentConfig(
            experiment=values["experiment"],
            d=tuple(values["d"]),
            p=tuple(values["p"]),
            n_r=tuple(values["n_r"]),
            num_cnots=values["num_cnots"],
            shots=values["shots"],
            seed=values["seed"],
            l_max=values["l_max"],
            workers=values["workers"],
            baseline=values["baseline"],
            basis=values["basis"],
            code=values["code"],
            noise=values["noise"],
        )
        rows = run_experiment(cfg)
    except (ConfigError, ExtractionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = rows_to_csv(rows) if values["format"] == "csv" else rows_to_json(rows)
    if values["out"]:
        with open(values["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
