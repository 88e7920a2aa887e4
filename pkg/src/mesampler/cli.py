"""Command-line surface: single attacks, batch benchmarks, motion maps and
frame ingestion.

Exit codes: 0 on success (report written), 1 on usage or input errors,
2 on oracle/transport failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .attack import AttackConfig, run_attack
from .harness import (
    ExperimentSpec,
    export_loss_curves,
    ingest_frames,
    make_oracle,
    run_batch,
)
from .motion import build_motion_set
from .oracle import OracleError
from .sampler import SAMPLER_KINDS
from .estimator import ESTIMATOR_KINDS
from .losses import LOSS_KINDS
from .tensor import read_vt01, validate_video, write_vt01


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the CLI contract wants 1
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mesampler", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    atk = sub.add_parser("attack", help="attack a single video")
    atk.add_argument("--video", required=True, help="VT01 video file")
    atk.add_argument("--label", required=True, type=int)
    atk.add_argument("--target", type=int, default=None)
    atk.add_argument("--oracle", required=True,
                     help="toy:linear:SEED | toy:motion:SEED | http://...")
    atk.add_argument("--sampler", choices=SAMPLER_KINDS, default="me_mv")
    atk.add_argument("--estimator", choices=ESTIMATOR_KINDS, default="me_sampler")
    atk.add_argument("--loss", choices=LOSS_KINDS, default="logits")
    atk.add_argument("--kappa", type=float, default=None)
    atk.add_argument("--budget", type=int, default=None)
    atk.add_argument("--max-iters", type=int, default=None)
    atk.add_argument("--seed", type=int, default=0)
    atk.add_argument("--T", type=int, default=12, dest="interval_length")
    atk.add_argument("--lookup-mode", choices=("auto", "raw", "traceback"),
                     default="auto")
    atk.add_argument("--classes", type=int, default=2,
                     help="class count for toy:linear oracles")
    atk.add_argument("--out", required=True, help="output directory")

    ben = sub.add_parser("bench", help="run a batch experiment")
    ben.add_argument("--spec", required=True, help="experiment spec JSON")
    ben.add_argument("--out", default=None, help="override spec out_dir")

    mot = sub.add_parser("motion", help="compute per-interval motion maps")
    mot.add_argument("--video", required=True)
    mot.add_argument("--repr", choices=("mv", "flow"), default="mv")
    mot.add_argument("--T", type=int, default=12, dest="interval_length")
    mot.add_argument("--out", required=True,
                     help="output VT01 path (indexed when several maps)")

    ing = sub.add_parser("ingest", help="pack PGM/PPM frames into VT01")
    ing.add_argument("--frames", required=True,
                     help="directory of frames or a VT01 file to validate")
    ing.add_argument("--out", required=True)
    return parser


def _cmd_attack(args) -> int:
    video = validate_video(read_vt01(args.video))
    overrides = {
        "sampler": args.sampler,
        "estimator": args.estimator,
        "loss": args.loss,
        "seed": args.seed,
        "interval_length": args.interval_length,
        "lookup_mode": args.lookup_mode,
    }
    for key in ("kappa", "budget", "max_iters"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.target is not None:
        cfg = AttackConfig.targeted(args.target, **overrides)
    else:
        cfg = AttackConfig(**overrides)

    oracle = make_oracle(args.oracle, video.shape, num_classes=args.classes)
    result = run_attack(video, args.label, oracle, cfg)

    os.makedirs(args.out, exist_ok=True)
    write_vt01(os.path.join(args.out, "adversarial.vt"), result.adversarial)
    with open(os.path.join(args.out, "result.json"), "w") as fh:
        json.dump(
            {
                "success": result.success,
                "queries_used": result.queries_used,
                "metric_queries": result.metric_queries,
                "iterations": result.iterations,
                "final_label": result.final_label,
                "linf": result.linf,
                "config": cfg.to_dict(),
            },
            fh,
            indent=2,
        )
    with open(os.path.join(args.out, "loss_curve.csv"), "w") as fh:
        fh.write(export_loss_curves({cfg.sampler: result.loss_trace}))
    status = "success" if result.success else "failure"
    print(
        f"{status}: label {args.label} -> {result.final_label} in "
        f"{result.queries_used} queries ({result.iterations} iterations), "
        f"linf={result.linf:.4f}"
    )
    return 0


def _cmd_bench(args) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    if args.out:
        spec.out_dir = args.out
    report = run_batch(spec)
    print(
        f"attacked {report.attacked} videos ({report.excluded} excluded): "
        f"ANQ={report.anq:.1f} SR={report.sr:.2f}%"
    )
    return 0


def _cmd_motion(args) -> int:
    video = read_vt01(args.video)
    mset = build_motion_set(video, args.repr, args.interval_length)
    stem, ext = os.path.splitext(args.out)
    ext = ext or ".vt"
    paths = []
    for n, mmap in enumerate(mset.maps):
        path = args.out if len(mset) == 1 else f"{stem}_{n:03d}{ext}"
        write_vt01(path, mmap.data)
        paths.append(path)
    print(f"{len(paths)} map(s) written: {', '.join(paths)}")
    return 0


def _cmd_ingest(args) -> int:
    video = ingest_frames(args.frames, args.out)
    print(f"wrote {args.out} with shape {tuple(video.shape)}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "attack":
            return _cmd_attack(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "motion":
            return _cmd_motion(args)
        if args.command == "ingest":
            return _cmd_ingest(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
