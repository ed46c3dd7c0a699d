"""Command line entry point: ``invexreg {verify,ridge-demo,sweep-sigmoid,compare-l2}``."""
import argparse
import dataclasses
import json
import logging
import os
import sys

from ..errors import ConfigError, InvexRegError
from . import commands
from .config import load_config


def _lambdas(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad lambda list {text!r}") from exc


def _step(text):
    return "auto" if text == "auto" else float(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="invexreg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("verify", "run the certificate suite on the bundled models"),
        ("ridge-demo", "GD on the invex objective of an affine map vs closed-form ridge"),
        ("sweep-sigmoid", "lambda sweep on the synthetic sigmoid classification task"),
        ("compare-l2", "invex vs l2 vs unregularized runs on one model"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="experiment config file (INI, [run NAME] sections)")
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--seed", type=int, help="dataset / sampling seed")
        p.add_argument("--lambdas", type=_lambdas, help="comma-separated lambda list")
        p.add_argument("--n", type=int, help="number of residuals")
        p.add_argument("--d", type=int, help="number of parameters (input width for mlp)")
        p.add_argument("--iters", type=int, help="iteration budget")
        p.add_argument("--step-size", type=_step, help="fixed step size or 'auto'")
        if name != "verify":
            p.add_argument("--no-plot", action="store_true", help="skip PNG figures")
        if name == "compare-l2":
            p.add_argument("--model", choices=["affine", "sigmoid", "mlp"])
            p.add_argument("--optimizer", choices=["gd", "adam"])
    return parser


def _apply_overrides(cfg, args):
    changes = {}
    for key in ("seed", "lambdas", "n", "d", "iters", "step_size", "model", "optimizer"):
        value = getattr(args, key, None)
        if value is not None:
            changes[key] = value
    if "model" in changes and changes["model"] != cfg.model:
        # fall back to the new model's default sizes unless given explicitly
        for key in ("n", "d", "seed"):
            changes.setdefault(key, None)
    return dataclasses.replace(cfg, **changes)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    try:
        configs = load_config(args.config) if args.config else commands.default_config(args.command)
        configs = [_apply_overrides(c, args) for c in configs]
        if args.command != "compare-l2":
            # compare-l2 runs every regularizer kind; the others certify the invex objective
            for cfg in configs:
                if cfg.regularizer != "invex":
                    raise ConfigError(f"[run {cfg.name}] regularizer = {cfg.regularizer} is not supported by {args.command}")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    plot = not getattr(args, "no_plot", True)
    try:
        if args.command == "verify":
            passed, summary = commands.cmd_verify(configs, args.out)
            if not passed:
                print("failing checks: " + ", ".join(summary["failing"]), file=sys.stderr)
            print(f"{'PASS' if passed else 'FAIL'}: certificate written to {os.path.join(args.out, 'certificate.json')}")
            return 0 if passed else 1

        runner = {
            "ridge-demo": commands.cmd_ridge_demo,
            "sweep-sigmoid": commands.cmd_sweep_sigmoid,
            "compare-l2": commands.cmd_compare_l2,
        }[args.command]
        all_passed = True
        for cfg in configs:
            if cfg.out:
                out = cfg.out
            else:
                out = args.out if len(configs) == 1 else os.path.join(args.out, cfg.name)
            passed, summary = runner(cfg, out, plot=plot)
            all_passed &= passed
            checks = summary.get("checks")
            if checks is None:
                checks = {f"lam={r['lambda']:g}": r["ridge_ok"] and r["interpolation_ok"] and r.get("x_to_zero_ok", True)
                          for r in summary["runs"]}
            for name, ok in checks.items():
                print(f"{'PASS' if ok else 'FAIL'}  {cfg.name}  {name}")
            print(json.dumps({"run": cfg.name, "out": out, "passed": passed}))
        return 0 if all_passed else 1
    except (InvexRegError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
