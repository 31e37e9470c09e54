"""Command-line entry point.

One subcommand per stage plus run-all. Exit codes: 0 on success (including
a rerun that finds nothing left to do), 1 for config problems, 2 when a
stage fails partway (the manifest records which one and why).
"""

import argparse
import copy
import json
import os
import sys

from .config import DEFAULT_CONFIG, validate_config
from .experiment import (STAGES, ExperimentManifest, load_manifest,
                         run_experiment)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="xlinglab",
        description="Cross-lingual transfer experiments on synthetic languages")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in STAGES + ("run-all",):
        sp = sub.add_parser(name, help=f"run the {name} stage"
                            if name != "run-all" else "run every stage in order")
        sp.add_argument("--config", help="JSON config; defaults apply when omitted")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--resume", action="store_true",
                        help="continue an interrupted fine-tuning run from "
                             "its latest checkpoint instead of restarting it")
    return ap


def _load_config(args) -> tuple[dict, list]:
    if args.config is None:
        cfg = copy.deepcopy(DEFAULT_CONFIG)
        errors = []
    else:
        cfg, errors = validate_config(args.config)
    if not errors and args.seed is not None:
        if args.seed < 0:
            errors = ["--seed: must be non-negative"]
        else:
            cfg["seed"] = args.seed
    return cfg, errors


def _manifest_for(cfg: dict, out_dir: str) -> tuple[ExperimentManifest, str | None]:
    if os.path.exists(os.path.join(out_dir, "manifest.json")):
        mf = load_manifest(out_dir)
        want = json.dumps(cfg, sort_keys=True)
        have = json.dumps(mf.config, sort_keys=True)
        if want != have:
            return mf, (f"{out_dir} holds a run with a different config; "
                        "use a fresh --out or the original config")
        return mf, None
    return ExperimentManifest(config=cfg, seed=cfg["seed"], out_dir=out_dir), None


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg, errors = _load_config(args)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 1

    mf, clash = _manifest_for(cfg, args.out)
    if clash:
        print(clash, file=sys.stderr)
        return 1

    upto = "report" if args.command == "run-all" else args.command
    if args.command not in ("run-all",):
        # a single-stage command must not silently run earlier stages
        for prior in STAGES[:STAGES.index(upto)]:
            if not mf.done(prior):
                print(f"stage {upto!r} needs {prior!r} first "
                      f"(run `xlinglab {prior}` or `xlinglab run-all`)",
                      file=sys.stderr)
                return 2
        if mf.done(upto) and not args.resume:
            print(f"stage {upto!r} already done; nothing to do")
            return 0

    code = run_experiment(mf, upto=upto, resume=args.resume)
    if code != 0:
        failed = [s for s, e in mf.stages.items() if e.get("status") == "failed"]
        print(f"stage {failed[-1]!r} failed: "
              f"{mf.stages[failed[-1]].get('error', 'unknown error')}",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
