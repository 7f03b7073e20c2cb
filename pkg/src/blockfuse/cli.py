"""Command-line interface.

Exit codes: 0 success, 1 I/O failure, 2 input-contract violation,
3 statistically degenerate input, 4 internal error.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from . import classification, fusion, metrics, stats, synth
from .errors import DegenerateDataError, UndefinedMetricError
from .image import atomic_write_bytes, decode_pgm, encode_pgm, load_image

EXIT_OK, EXIT_IO, EXIT_CONTRACT, EXIT_DEGENERATE, EXIT_INTERNAL = range(5)


class InvariantError(RuntimeError):
    """A result failed a post-condition the code guarantees."""


def _int_list(text):
    try:
        sizes = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("block sizes must be positive")
    return sizes


def _unit_interval(lo_open):
    def parse(text):
        v = float(text)
        ok = (0.0 < v < 1.0) if lo_open else (0.0 <= v <= 1.0)
        if not ok:
            raise argparse.ArgumentTypeError(f"{v} outside {'(0, 1)' if lo_open else '[0, 1]'}")
        return v
    return parse


def _region(text):
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError:
        vals = []
    if len(vals) != 4 or min(vals) < 0:
        raise argparse.ArgumentTypeError("region must be x0,y0,x1,y1 with non-negative integers")
    return tuple(vals)


def _emit(text: str, out):
    if not text.endswith("\n"):
        text += "\n"
    if out:
        atomic_write_bytes(out, text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def _report_text(report: metrics.MetricReport, fmt: str, extra=None) -> str:
    if fmt == "json":
        d = json.loads(report.to_json())
        d.update(extra or {})
        return json.dumps(d)
    header, row = report.csv_header(), report.to_csv_row()
    for k, v in (extra or {}).items():
        header += f",{k}"
        row += f",{metrics.fmt_value(v)}"
    return f"{header}\n{row}"


def _load_with_depth(path):
    with open(path, "rb") as fh:
        img, maxval = decode_pgm(fh.read(), return_maxval=True)
    return img, (8 if maxval < 256 else 16)


# ---------------------------------------------------------------------------
# subcommands


def cmd_metrics(args):
    gt = load_image(args.gt)
    pred = load_image(args.pred)
    report = metrics.evaluate_pair(gt, pred)
    extra = {"mixed_loss": metrics.mixed_loss(pred, gt, args.omega)} if args.loss else None
    _emit(_report_text(report, args.format, extra), args.out)
    return EXIT_OK


def cmd_fuse(args):
    gt, depth = _load_with_depth(args.gt)
    cands = [load_image(p) for p in args.candidates]
    result = fusion.fuse(gt, cands, args.block)
    if not (result.winning_scores >= result.block_scores.max(axis=-1)).all():
        raise InvariantError("winning block score below a competing candidate")
    depth = args.depth or depth
    fused_bytes = encode_pgm(result.fused, depth)
    winners = result.winner_json() + "\n"
    vis = encode_pgm(result.winner_image(), 8) if args.winner_image else None
    report = metrics.evaluate_pair(gt, result.fused)
    atomic_write_bytes(args.out, fused_bytes)
    atomic_write_bytes(args.winners, winners.encode("utf-8"))
    if vis is not None:
        atomic_write_bytes(args.winner_image, vis)
    _emit(_report_text(report, args.format), None)
    return EXIT_OK


def _candidate_files(directory: Path):
    found = []
    for p in directory.iterdir():
        m = re.fullmatch(r"cand_(\d+)\.pgm", p.name)
        if m:
            found.append((int(m.group(1)), p))
    return [p for _, p in sorted(found)]


def load_dataset(root):
    """Items from ``root`` (a single ``gt.pgm`` + ``cand_<k>.pgm`` directory)
    or from its sorted subdirectories laid out the same way."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    dirs = [root] if (root / "gt.pgm").exists() else sorted(
        d for d in root.iterdir() if d.is_dir() and (d / "gt.pgm").exists())
    if not dirs:
        raise ValueError(f"no gt.pgm found in {root} or its subdirectories")
    items = []
    for d in dirs:
        files = _candidate_files(d)
        if not files:
            raise ValueError(f"{d}: no cand_<k>.pgm files")
        items.append((load_image(d / "gt.pgm"), [load_image(f) for f in files]))
    return items


def cmd_sweep(args):
    if args.dataset:
        if args.gt or args.candidates:
            raise ValueError("give either --dataset or GT CANDIDATES, not both")
        dataset = load_dataset(args.dataset)
    else:
        if not args.gt or not args.candidates:
            raise ValueError("sweep needs GT and at least one candidate, or --dataset")
        dataset = [(load_image(args.gt), [load_image(p) for p in args.candidates])]
    rows = fusion.sweep_dataset(dataset, args.blocks, threads=args.threads)
    excluded = {m: agg.psnr_excluded for m, agg in rows if agg.psnr_excluded}
    if excluded:
        print(f"note: infinite PSNR excluded from aggregation: {excluded}", file=sys.stderr)
    if args.format == "json":
        text = json.dumps([{"block_size": m, **agg.to_dict()} for m, agg in rows])
    else:
        text = fusion.format_sweep_csv(rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_classify_eval(args):
    labels, scores = classification.read_scores_csv(args.scores)
    row = classification.table4_report(labels, scores, args.threshold, args.alpha)
    if args.format == "json":
        text = json.dumps(row.to_dict())
    else:
        text = f"{row.csv_header()}\n{row.to_csv_row()}"
    _emit(text, args.out)
    return EXIT_OK


def cmd_stats(args):
    groups = stats.GroupData.from_csv(args.groups)
    report = stats.stats_report(groups, args.alpha)
    text = json.dumps(report, indent=2)
    if args.out:
        _emit(text, args.out)
    print(report["summary"])
    if not args.out:
        print(text)
    return EXIT_OK


def cmd_synth(args):
    specs = synth.candidate_specs(args.seed, args.n, args.width, args.height)
    gt, cands = synth.make_candidate_set(args.seed, args.n, args.width, args.height)
    manifest = {
        "seed": args.seed,
        "n_candidates": args.n,
        "width": args.width,
        "height": args.height,
        "depth": args.depth,
        "gt": "gt.pgm",
        "candidates": [
            {"file": f"cand_{k}.pgm", "passes": [s.to_dict() for s in passes]}
            for k, passes in enumerate(specs)
        ],
    }
    blobs = [("gt.pgm", encode_pgm(gt, args.depth))]
    blobs += [(f"cand_{k}.pgm", encode_pgm(c, args.depth)) for k, c in enumerate(cands)]
    blobs.append(("manifest.json", (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in blobs:
        atomic_write_bytes(out / name, data)
    return EXIT_OK


def cmd_degrade(args):
    img, depth = _load_with_depth(args.input)
    spec = synth.DegradeSpec(seed=args.seed, blur_sigma=args.blur_sigma,
                             noise_sigma=args.noise_sigma,
                             ridge_amplitude=args.ridge_amplitude,
                             ridge_count=args.ridge_count, region_mask=args.region)
    atomic_write_bytes(args.output, encode_pgm(synth.degrade(img, spec), args.depth or depth))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=1, help="worker threads for dataset sweeps")
    common.add_argument("--omega", type=_unit_interval(False), default=0.84,
                        help="MS-SSIM weight of the mixed loss")
    common.add_argument("--alpha", type=_unit_interval(True), default=0.05)
    common.add_argument("--blocks", type=_int_list, default=list(fusion.DEFAULT_BLOCK_SIZES),
                        help="comma-separated block sizes")

    parser = argparse.ArgumentParser(prog="blockfuse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", parents=[common], help="quality metrics for one image pair")
    p.add_argument("gt")
    p.add_argument("pred")
    p.add_argument("--loss", action="store_true", help="also report the mixed loss")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("fuse", parents=[common], help="block-wise ensemble fusion")
    p.add_argument("gt")
    p.add_argument("candidates", nargs="+")
    p.add_argument("--block", "-M", type=int, required=True)
    p.add_argument("--out", required=True, help="fused P5 image")
    p.add_argument("--winners", required=True, help="winner-map JSON")
    p.add_argument("--winner-image", help="optional 8-bit P5 winner-map visualisation")
    p.add_argument("--depth", type=int, choices=(8, 16), help="default: depth of the gt file")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("sweep", parents=[common], help="fusion metrics across block sizes")
    p.add_argument("gt", nargs="?")
    p.add_argument("candidates", nargs="*")
    p.add_argument("--dataset", help="directory of gt.pgm/cand_<k>.pgm items")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("classify-eval", parents=[common], help="binary classification summary")
    p.add_argument("scores", help="CSV with header label,score")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify_eval)

    p = sub.add_parser("stats", parents=[common], help="ANOVA, Levene and Tukey HSD")
    p.add_argument("groups", help="CSV with header group,value")
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic candidate set")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--depth", type=int, choices=(8, 16), default=16)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("degrade", parents=[common], help="apply one seeded degradation pass")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blur-sigma", type=float, default=0.0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--ridge-amplitude", type=float, default=0.0)
    p.add_argument("--ridge-count", type=int, default=0)
    p.add_argument("--region", type=_region, help="x0,y0,x1,y1")
    p.add_argument("--depth", type=int, choices=(8, 16))
    p.set_defaults(func=cmd_degrade)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DegenerateDataError, UndefinedMetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
