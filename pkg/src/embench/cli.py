"""`bench` command line: run pipeline stages, synth corpora, render reports.

Exit codes: 0 success, 2 bad inputs (ValidationError), 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import BenchError, ValidationError
from .pipeline import RunConfig, STAGES, pool_to_disk, report_render, run_all
from .synth import BlobSpec, write_synth


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc


def _run_config(args) -> RunConfig:
    if not args.config:
        raise ValidationError("this command needs --config")
    return RunConfig.from_dict(_load_json(args.config), out_dir=args.out,
                               seed=args.seed)


def _cmd_stage(args) -> int:
    config = _run_config(args)
    out = run_all(config, upto=args.command, write_manifest=False)
    print(f"completed stage {args.command}: outputs under {out}")
    return 0


def _cmd_pool(args) -> int:
    config = _run_config(args)
    out = pool_to_disk(config)
    print(f"pooled corpora written under {out}")
    return 0


def _cmd_run(args) -> int:
    config = _run_config(args)
    out = run_all(config, upto="umap", write_manifest=True)
    print(f"run complete: outputs under {out}")
    return 0


def _cmd_synth(args) -> int:
    if not args.config:
        raise ValidationError("synth needs --config with a blob spec")
    if not args.out:
        raise ValidationError("synth needs --out")
    raw = dict(_load_json(args.config))
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = BlobSpec(**raw)
    except TypeError as exc:
        raise ValidationError(f"bad blob spec: {exc}") from exc
    paths = write_synth(spec, args.out)
    print(f"wrote {len(paths)} synthetic corpora under {args.out}")
    return 0


def _cmd_report(args) -> int:
    run_dir = args.out
    if run_dir is None and args.config:
        raw = _load_json(args.config)
        run_dir = raw.get("out_dir")
    if not run_dir:
        raise ValidationError("report needs --out (or a config with out_dir)")
    path = report_render(run_dir)
    print(f"report written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Benchmark frozen embedding corpora: probes, attribution, "
                    "geometry, and 2-D projections.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config's master seed")
    common.add_argument("--out", default=None,
                        help="override the config's output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("pool", parents=[common],
                   help="write pooled corpora for every configured FM/dataset"
                   ).set_defaults(handler=_cmd_pool)
    for stage in STAGES[1:]:
        sub.add_parser(stage, parents=[common],
                       help=f"run the pipeline through the {stage} stage"
                       ).set_defaults(handler=_cmd_stage)
    sub.add_parser("run", parents=[common],
                   help="run every stage and write the run manifest"
                   ).set_defaults(handler=_cmd_run)
    sub.add_parser("synth", parents=[common],
                   help="generate synthetic corpora from a blob-spec JSON"
                   ).set_defaults(handler=_cmd_synth)
    sub.add_parser("report", parents=[common],
                   help="render the single-file Markdown report for a run"
                   ).set_defaults(handler=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
