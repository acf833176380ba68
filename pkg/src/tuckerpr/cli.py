"""Command line entry point: ``tuckerpr {synth,simulate,reconstruct,evaluate,render}``.

Exit status is 0 on success, 2 on a configuration error and 3 when the
reconstruction aborted numerically.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .harness import (ConfigError, ExperimentConfig, config_from, parse_kv,
                      run_experiment, simulate, synth, write_frames)
from .metrics import mat_dist, per_frame_dist

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3


def _ranks(text):
    try:
        return tuple(int(v) for v in text.replace("x", ",").split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ranks {text!r}") from None


def _bool(text):
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _add_sensing(p):
    p.add_argument("--measurement", choices=("real-gaussian", "complex-gaussian", "cdp"))
    p.add_argument("--m-ratio", type=float, dest="m_ratio")
    p.add_argument("--L", type=int, dest="L")
    p.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="tuckerpr", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write an exactly Tucker-rank frame stack")
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--ranks", type=_ranks, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--real", action="store_true", help="real-valued truth")
    p.add_argument("--output", required=True)

    p = sub.add_parser("simulate", help="simulate magnitude measurements of a stack")
    p.add_argument("--input", required=True)
    _add_sensing(p)
    p.add_argument("--output", required=True, help=".npz with observations and parameters")

    p = sub.add_parser("reconstruct", help="run a full experiment")
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--algorithm", choices=("tspr", "altminlowrap", "altmintrunc"))
    _add_sensing(p)
    p.add_argument("--ranks", type=_ranks)
    p.add_argument("--T", type=int, dest="T")
    p.add_argument("--T-rwf", type=int, dest="T_rwf")
    p.add_argument("--T-cgls", type=int, dest="T_cgls")
    p.add_argument("--alpha", type=float)
    p.add_argument("--correction", type=_bool, nargs="?", const=True)
    p.add_argument("--record-time", type=_bool, nargs="?", const=True, dest="record_time")
    p.add_argument("--input")
    p.add_argument("--output-dir", dest="output_dir")

    p = sub.add_parser("evaluate", help="phase-invariant distance between two stacks")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--per-frame", action="store_true")

    p = sub.add_parser("render", help="export |frames| of a stack as PGM images")
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir", required=True, dest="output_dir")
    return parser


def _cmd_synth(args):
    dims = (args.n1, args.n2, args.q)
    if len(args.ranks) != 3:
        raise ConfigError("synth needs three ranks")
    try:
        X = synth(dims, args.ranks, args.seed, args.output, complex=not args.real)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"wrote {args.output}: dims={dims} ranks={args.ranks} "
          f"mat_dist_to_self={mat_dist(X, X):g}")
    return EXIT_OK


def _cmd_simulate(args):
    cfg = ExperimentConfig(measurement=args.measurement or "complex-gaussian",
                           m_ratio=args.m_ratio, L=args.L, ranks=(1,),
                           algorithm="altminlowrap",
                           seed=args.seed if args.seed is not None else 0)
    cfg.validate()
    X = io.read_stack(args.input)
    ens = simulate(X, cfg.measurement, cfg.seed, cfg.m_ratio, cfg.L)
    np.savez(args.output, observations=ens.y, measurement=cfg.measurement,
             n=ens.n, m=ens.m, q=ens.q, seed=cfg.seed)
    print(f"wrote {args.output}: n={ens.n} m={ens.m} q={ens.q}")
    return EXIT_OK


_CONFIG_KEYS = ("algorithm", "measurement", "m_ratio", "L", "ranks", "T", "T_rwf",
                "T_cgls", "alpha", "seed", "correction", "input", "output_dir",
                "record_time")


def _cmd_reconstruct(args):
    values = {}
    if args.config:
        try:
            values.update(parse_kv(Path(args.config).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for key in _CONFIG_KEYS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    cfg = config_from(values).validate()
    report = run_experiment(cfg)
    print(json.dumps({"status": report.status, "mat_dist": report.mat_dist,
                      "relative_error": report.relative_error,
                      "params": report.param_count}))
    return EXIT_OK if report.status == "ok" else EXIT_ABORT


def _cmd_evaluate(args):
    est, truth = io.read_stack(args.estimate), io.read_stack(args.truth)
    if est.shape != truth.shape:
        raise ConfigError(f"shape mismatch {est.shape} vs {truth.shape}")
    md = mat_dist(est, truth)
    print("mat_dist,relative_error")
    print(f"{md!r},{md / float(np.linalg.norm(truth))!r}")
    if args.per_frame:
        print("frame,dist")
        for k, d in enumerate(per_frame_dist(est, truth)):
            print(f"{k},{float(d)!r}")
    return EXIT_OK


def _cmd_render(args):
    X = io.read_stack(args.input)
    write_frames(X, args.output_dir)
    print(f"wrote {X.shape[2]} frames to {args.output_dir}")
    return EXIT_OK


COMMANDS = {"synth": _cmd_synth, "simulate": _cmd_simulate,
            "reconstruct": _cmd_reconstruct, "evaluate": _cmd_evaluate,
            "render": _cmd_render}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, io.FrameStackError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
