"""``recon``: run, replay, export, and score shape-from-touch scenarios.

Exit codes: 0 success, 2 configuration/usage error, 3 write failure,
4 numerical or pipeline failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io_formats
from .gp import NumericalError, model_from_contacts
from .metrics import EmptyMeshError, recon_report
from .scenario import ConfigError, load_config, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_WRITE = 3
EXIT_NUMERIC = 4


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="override policy.seed")
    p.add_argument("--out", default=None, help="override run.out_dir")
    p.add_argument("--deterministic", action="store_true", default=None,
                   help="strip wall-clock metadata from artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="explore an object and reconstruct it")
    p.add_argument("config", help="scenario file (YAML or JSON)")
    _add_run_args(p)

    p = sub.add_parser("replay", help="re-run reconstruction from a saved contact log")
    p.add_argument("contact_log", help="contacts.csv from a previous run")
    p.add_argument("config", help="scenario file (YAML or JSON)")
    _add_run_args(p)

    p = sub.add_parser("export", help="convert a mesh artifact")
    p.add_argument("mesh", help="input PLY file")
    p.add_argument("--format", required=True, choices=("ply", "obj"))
    p.add_argument("--out", default=None, help="output path (default: alongside input)")

    p = sub.add_parser("metrics", help="score a mesh against a scenario's ground truth")
    p.add_argument("mesh", help="input PLY file")
    p.add_argument("config", help="scenario file naming the ground-truth object")
    p.add_argument("--contacts", default=None,
                   help="contact log used to split probed/unprobed regions")
    return parser


def _cmd_run(args: argparse.Namespace, replay_log=None) -> int:
    cfg = load_config(args.config, seed=args.seed, out_dir=args.out,
                      deterministic=args.deterministic)
    contacts = io_formats.read_contact_log(replay_log) if replay_log else None
    artifacts = run_scenario(cfg, contacts=contacts)
    print(f"wrote {len(artifacts)} artifacts to {cfg.out_dir}")
    return EXIT_OK


def _cmd_export(args: argparse.Namespace) -> int:
    mesh = io_formats.read_ply(args.mesh)
    out = args.out or str(Path(args.mesh).with_suffix(f".{args.format}"))
    io_formats.export_mesh(mesh, args.format, out)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_metrics(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, seed=0)
    mesh = io_formats.read_ply(args.mesh)
    dataset = None
    if args.contacts:
        dataset = model_from_contacts(io_formats.read_contact_log(args.contacts),
                                      cfg.kernel, cfg.prior, noise=cfg.noise).dataset
    report = recon_report(mesh, cfg.shape, dataset)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "replay":
            return _cmd_run(args, replay_log=args.contact_log)
        if args.command == "export":
            return _cmd_export(args)
        return _cmd_metrics(args)
    except ConfigError as e:
        print(f"recon: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"recon: missing input: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, EmptyMeshError) as e:
        print(f"recon: pipeline failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as e:
        print(f"recon: invalid input: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"recon: write failure: {e}", file=sys.stderr)
        return EXIT_WRITE


if __name__ == "__main__":
    sys.exit(main())
