"""`extract` command line. Exit codes: 0 success, 2 bad inputs."""

from __future__ import annotations

import argparse
import sys

from .errors import ExtractError, ValidationError
from .extract import ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Run a frozen encoder checkpoint over prepared records "
                    "and write a token-level embedding corpus.",
    )
    parser.add_argument("--model", required=True, help="registry model id")
    parser.add_argument("--ckpt", required=True, help="checkpoint file (state dict)")
    parser.add_argument("--records", required=True,
                        help="directory of <id>.npy waveforms plus labels.csv")
    parser.add_argument("--out", required=True, help="corpus output directory")
    parser.add_argument("--device", default="cpu", help="torch device hint")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExtractionJob(model_id=args.model, checkpoint_path=args.ckpt,
                        records_dir=args.records, out_dir=args.out,
                        device=args.device)
    try:
        out = extract(job)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"corpus written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
