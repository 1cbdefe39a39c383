"""Command-line front end.

    spw-faultlab run --spec campaign.json [--out DIR] [--workers N] [--paper-scale]
    spw-faultlab run --grid [--model F --images F --labels F --manifest F] --out DIR
    spw-faultlab summarize DIR
    spw-faultlab compare DIR [--baseline ecc] [--candidate spw]
    spw-faultlab secded encode|decode HEX
    spw-faultlab validate-model FILE
"""

import argparse
import sys
from pathlib import Path

from . import campaign, model_io, secded

_GRID_DEFAULTS = {
    "model": "fixtures/model.spww",
    "images": "fixtures/fixture-1000/images.idx3-ubyte",
    "labels": "fixtures/fixture-1000/labels.idx1-ubyte",
    "manifest": "fixtures/fixture-1000/manifest.json",
}


def _parser():
    p = argparse.ArgumentParser(
        prog="spw-faultlab",
        description="SECDED-protected CNN fault-injection lab")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a campaign")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="campaign JSON file")
    src.add_argument("--grid", action="store_true",
                     help="run the built-in full table grid")
    run.add_argument("--out", help="output directory")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--paper-scale", action="store_true",
                     help=f"run every cell at "
                          f"{campaign.PAPER_SCALE_ITERATIONS} trials")
    run.add_argument("--iterations", type=int, default=30,
                     help="trials per grid cell (grid mode)")
    run.add_argument("--seed-base", type=int, default=20260822)
    for key, default in _GRID_DEFAULTS.items():
        run.add_argument(f"--{key}", default=default,
                         help=f"grid mode: {key} path (default {default})")

    summ = sub.add_parser("summarize", help="rebuild summaries and figures")
    summ.add_argument("dir")

    comp = sub.add_parser("compare", help="median ratios between two modes")
    comp.add_argument("dir")
    comp.add_argument("--baseline", default="ecc",
                      choices=[m for m in ("none", "ecc", "spw")])
    comp.add_argument("--candidate", default="spw",
                      choices=[m for m in ("none", "ecc", "spw")])

    sec = sub.add_parser("secded", help="encode or decode one word")
    sec.add_argument("op", choices=["encode", "decode"])
    sec.add_argument("hex", help="16-bit data word or 22-bit codeword, hex")

    val = sub.add_parser("validate-model", help="check a weights container")
    val.add_argument("file")
    return p


def _cmd_run(args):
    if args.spec:
        spec = campaign.load_spec(args.spec)
    else:
        doc = campaign.make_grid(
            model=args.model, images=args.images, labels=args.labels,
            manifest=args.manifest, iterations=args.iterations,
            seed_base=args.seed_base)
        if not args.out:
            print("run --grid requires --out", file=sys.stderr)
            return 2
        spec = campaign.resolve_doc(doc, Path.cwd())
    results = campaign.run_campaign(
        spec, out_dir=args.out, workers=args.workers,
        paper_scale=args.paper_scale)
    out_dir = Path(args.out or spec["output_dir"] or "campaign-out")
    print(f"{len(results)} cells -> {out_dir}")
    for r in sorted(results, key=lambda r: r.cell["name"]):
        lo, q1, med, q3, hi = r.dist.quartiles()
        print(f"  {r.cell['name']:<34} median {med:.4f}  "
              f"[{q1:.4f}, {q3:.4f}]  ({r.duration:.1f}s)")
    return 0


def _cmd_summarize(args):
    rows = campaign.summarize(args.dir)
    print(f"{'cell':<34} {'min':>7} {'q1':>7} {'median':>7} "
          f"{'q3':>7} {'max':>7}  saturated")
    for r in sorted(rows, key=lambda r: r["name"]):
        sat = "yes" if r["saturated"] else "no"
        print(f"{r['name']:<34} {r['min']:7.4f} {r['q1']:7.4f} "
              f"{r['median']:7.4f} {r['q3']:7.4f} {r['max']:7.4f}  {sat}")
    return 0


def _cmd_compare(args):
    rows = campaign.compare(args.dir, args.baseline, args.candidate)
    print(f"{'target':<6} {'p':>8} {'limit':>5}  "
          f"{args.baseline:>8} {args.candidate:>8} {'ratio':>8}")
    for r in rows:
        limit = "-" if r["limit"] is None else r["limit"]
        print(f"{r['target']:<6} {r['p']:>8g} {limit:>5}  "
              f"{r['baseline_median']:8.4f} {r['candidate_median']:8.4f} "
              f"{r['ratio']:8.3f}")
    return 0


def _cmd_secded(args):
    value = int(args.hex, 16)
    if args.op == "encode":
        cw = secded.encode(value)
        print(f"{cw:#08x}")
        return 0
    data, outcome = secded.decode(value)
    line = f"data {data:#06x}  {outcome.kind.value}"
    if outcome.position is not None:
        line += f" (position {outcome.position})"
    print(line)
    return 0


def _cmd_validate(args):
    v = model_io.validate_model(args.file)
    if v.valid:
        print(f"{args.file}: valid")
        for key, val in v.info.items():
            print(f"  {key}: {val}")
        return 0
    print(f"{args.file}: INVALID")
    for problem in v.problems:
        print(f"  {problem}")
    return 1


def main(argv=None):
    args = _parser().parse_args(argv)
    handlers = {
        "run": _cmd_run, "summarize": _cmd_summarize, "compare": _cmd_compare,
        "secded": _cmd_secded, "validate-model": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
