"""Command line front end: `nwtf-export export` and `nwtf-export fixture`."""

import argparse
import sys
import warnings

from .export import ExportSpec, export_checkpoint
from .fixture import make_fixture
from .format import ExportError


def _input_shape(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected H,W,C")
    try:
        h, w, c = (int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected three integers H,W,C") from exc
    if min(h, w, c) < 1:
        raise argparse.ArgumentTypeError("input shape dims must be >= 1")
    return h, w, c


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nwtf-export",
        description="Convert checkpoints to NWTF weight files, or generate "
                    "synthetic NWTF fixtures.")
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("export", help="convert a saved model to NWTF")
    exp.add_argument("--ckpt", required=True, help="checkpoint file to read")
    exp.add_argument("--format", choices=("native", "onnx"), default="native",
                     help="checkpoint flavor (default: native torch)")
    exp.add_argument("--out-weights", required=True)
    exp.add_argument("--out-manifest", required=True)
    exp.add_argument("--input-shape", type=_input_shape, default=None,
                     metavar="H,W,C",
                     help="network input shape; enables output spatial sizes "
                          "in the manifest")
    exp.add_argument("--layers", default=None, metavar="GLOB",
                     help="only export convolutions whose name matches")

    fix = sub.add_parser("fixture", help="generate a synthetic NWTF fixture")
    fix.add_argument("--shapes", required=True,
                     help="semicolon-separated NxWxHxC[@RANK|@dup] layer specs")
    fix.add_argument("--seed", type=int, required=True)
    fix.add_argument("--out-weights", required=True)
    fix.add_argument("--out-manifest", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export":
            spec = ExportSpec(
                checkpoint=args.ckpt,
                source_format=args.format,
                layer_filter=args.layers,
                input_shape=args.input_shape,
                out_weights=args.out_weights,
                out_manifest=args.out_manifest,
            )
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                notes = export_checkpoint(spec)
            for note in notes:
                print(f"warning: {note}", file=sys.stderr)
            print(f"wrote {args.out_weights} and {args.out_manifest}")
        else:
            spec = ExportSpec(
                shapes=args.shapes,
                seed=args.seed,
                out_weights=args.out_weights,
                out_manifest=args.out_manifest,
            )
            names = make_fixture(spec)
            print(f"wrote {len(names)} layers ({', '.join(names)}) to "
                  f"{args.out_weights}")
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
