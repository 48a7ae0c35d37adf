"""``mflab <verb> --config <file> [--out <dir>] [--seed <n>]``

Exit status: 0 when every check passes, 1 when any fails, 2 on a bad config.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .harness import ConfigError, ExperimentConfig, ExperimentError

# verb -> (experiment kind, defaults for keys the config leaves out)
VERBS = {
    "scat": ("scat-sweep", {}),
    "microstructure": ("scat-sweep", {"beta": 0.8, "beta1": 0.5}),
    "gnorms": ("scat-sweep", {"beta": 0.8, "beta1": 0.5}),
    "smear": ("smear-sweep", {}),
    "weights": ("weights-audit", {}),
    "gp": ("gp-run", {}),
    "nbody": ("nbody-convergence", {}),
    "run": (None, {}),
    "validate": (None, {}),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mflab", description=__doc__.splitlines()[0])
    ap.add_argument("verb", choices=sorted(VERBS))
    ap.add_argument("--config", help="experiment config (JSON)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--N", type=int, nargs="+", help="particle numbers (weights verb)")
    ap.add_argument("--dump", action="store_true", help="weights: print the m^j table as CSV")
    return ap


def _load(args) -> ExperimentConfig:
    kind, defaults = VERBS[args.verb]
    if args.config:
        cfg = ExperimentConfig.load(args.config, args.out, args.seed)
        if kind is not None and cfg.kind != kind:
            # the nbody verb also drives the single-N probe
            if not (args.verb == "nbody" and cfg.kind == "gronwall-probe"):
                raise ConfigError(f"verb {args.verb!r} expects a {kind} config, got {cfg.kind}")
    elif kind is not None:
        cfg = ExperimentConfig.from_dict({"experiment": kind}, args.out, args.seed)
    else:
        raise ConfigError(f"verb {args.verb!r} needs --config")
    for key, val in defaults.items():
        cfg.params.setdefault(key, val)
    if args.N:
        cfg.params["N"] = args.N
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "weights" and args.dump:
            for N in args.N or [4]:
                sys.stdout.write(harness.dump_weights(N))
            return 0
        cfg = _load(args)
        if args.verb == "validate":
            diags = harness.validate(cfg)
            for d in diags:
                print(d)
            if not diags:
                print("ok")
            return 2 if diags else 0
        report = harness.run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name, verdict in report.verdicts.items():
        print(f"{verdict:4s}  {name}")
    if cfg.out is None:
        print(json.dumps(report.summary(), indent=1, default=str))
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
