"""Command line interface: ``invert <command> [flags]``.

Every option can also come from a flat key=value config file (``--config``);
explicit flags win over file values, file values win over defaults, and
unknown keys in either place are rejected.
"""

import argparse
import sys

from .experiments import COMMANDS

DEFAULTS = {
    "circle": {
        "size": 64,
        "radius_frac": 0.25,
        "measurements": 512,
        "noise_std": 0.005,
        "alpha": 1.5e-2,
        "max_iters": 10000,
        "stop_tol": 1e-5,
        "tau_disc": 1.0,
        "seed": 0,
        "out_dir": "out/circle",
    },
    "rate": {
        "c": 1.0,
        "deltas": "1e-1:1e-4:geometric:7",
        "n_out": 8,
        "n_in": 32,
        "max_iters": 200000,
        "seed": 0,
        "out_dir": "out/rate",
    },
    "mnist-perceptron": {
        "alpha": 5e-3,
        "noise_std": 0.0,
        "code_dim": 100,
        "epochs": 8,
        "lr": 0.01,
        "batch_size": 32,
        "n_train": 1000,
        "n_show": 5,
        "max_iters": 4000,
        "model": "",
        "data": "auto",
        "seed": 0,
        "out_dir": "out/mnist-perceptron",
    },
    "mnist-cnn": {
        "alpha": 9e-3,
        "noise_std": 0.0,
        "epochs": 5,
        "lr": 1e-3,
        "batch_size": 32,
        "n_train": 1000,
        "n_show": 5,
        "outer_iters": 150,
        "inner_iters": 50,
        "model": "",
        "data": "auto",
        "seed": 0,
        "out_dir": "out/mnist-cnn",
    },
    "noise-sweep": {
        "levels": 8,
        "std_max": 0.33,
        "alpha_grid": "1e-4:1e-2:geometric:10",
        "digits": 5,
        "epochs": 5,
        "lr": 1e-3,
        "batch_size": 32,
        "n_train": 1000,
        "outer_iters": 120,
        "inner_iters": 50,
        "jobs": 2,
        "model": "",
        "data": "auto",
        "seed": 0,
        "out_dir": "out/noise-sweep",
    },
    "train": {
        "arch": "dense",
        "code_dim": 100,
        "epochs": 8,
        "lr": 0.01,
        "batch_size": 32,
        "n_train": 1000,
        "data": "auto",
        "seed": 0,
        "out_dir": "out/train",
    },
}


def parse_config_file(path, known):
    """Flat key=value lines; '#' starts a comment; unknown keys rejected."""
    values = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = val.strip()
    return values


def _coerce(key, value, default):
    if isinstance(value, str):
        try:
            if isinstance(default, bool):
                return value.lower() in ("1", "true", "yes")
            if isinstance(default, int):
                return int(value)
            if isinstance(default, float):
                return float(value)
        except ValueError:
            raise ValueError(f"bad value for {key}: {value!r}") from None
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="invert",
        description="Regularised inversion of proximal-activation networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None, help="key=value config file")
        for key in defaults:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    return parser


def resolve_config(command, args):
    defaults = DEFAULTS[command]
    cfg = dict(defaults)
    if args.config:
        for key, val in parse_config_file(args.config, set(defaults)).items():
            cfg[key] = _coerce(key, val, defaults[key])
    for key in defaults:
        val = getattr(args, key)
        if val is not None:
            cfg[key] = _coerce(key, val, defaults[key])
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    failures = COMMANDS[args.command](cfg)
    if failures:
        print(f"{len(failures)} assertion(s) failed:", file=sys.stderr)
        for f in failures:
            print(f"  - {f}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
