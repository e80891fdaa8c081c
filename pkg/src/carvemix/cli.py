"""Command-line entry point.

Subcommands: generate, sdf, mix, validate, stats. Exit codes: 0 success,
1 runtime error (single JSON object on stderr), 2 usage error. Identical
flags and inputs produce identical outputs and identical stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import nifti
from .baselines import DEFAULT_MIXUP_ALPHA, cutmix_pair, mixup_pair
from .carve import carvemix_pair
from .distance import DistanceUnits, signed_distance
from .errors import CarveMixError
from .generator import (
    GenerationConfig,
    GenerationManifest,
    build_roster,
    dataset_stats,
    generate_dataset,
    validate_roster,
)
from .grid import AnnotatedSample, Volume3D

UNITS = {"voxel": DistanceUnits.VOXEL, "mm": DistanceUnits.MM}

GENERATE_DEFAULTS = {
    "method": "carvemix",
    "seed": 0,
    "units": "voxel",
    "alpha": DEFAULT_MIXUP_ALPHA,
    "workers": None,
    "exclude_self_pairs": False,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carvemix",
        description="Synthesize annotated 3D volumes by lesion-aware carving, mixup, or cutmix.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a batch of synthetic samples")
    g.add_argument("--method", choices=["carvemix", "mixup", "cutmix"], default=None)
    g.add_argument("--num", type=int, default=None, help="number of synthetic samples")
    g.add_argument("--seed", type=int, default=None, help="master seed")
    g.add_argument("--images", default=None, help="directory of training images")
    g.add_argument("--labels", default=None, help="directory of training annotations")
    g.add_argument("--out", default=None, help="output directory")
    g.add_argument("--units", choices=["voxel", "mm"], default=None)
    g.add_argument("--alpha", type=float, default=None, help="mixup Beta concentration")
    g.add_argument("--workers", type=int, default=None)
    g.add_argument("--exclude-self-pairs", action="store_true", default=None)
    g.add_argument("--config", default=None, help="JSON file with the same field names as the flags")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sdf", help="signed distance field of an annotation")
    s.add_argument("--label", required=True)
    s.add_argument("--units", choices=["voxel", "mm"], default="voxel")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sdf)

    m = sub.add_parser("mix", help="combine one donor/host pair")
    m.add_argument("--method", choices=["carvemix", "mixup", "cutmix"], default="carvemix")
    m.add_argument("--donor-image", required=True)
    m.add_argument("--donor-label", required=True)
    m.add_argument("--host-image", required=True)
    m.add_argument("--host-label", required=True)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--units", choices=["voxel", "mm"], default="voxel")
    m.add_argument("--lambda", dest="lam", default="auto",
                   help="carve threshold: 'auto' to sample, or a literal value (carvemix only)")
    m.add_argument("--alpha", type=float, default=None, help="mixup Beta concentration")
    m.add_argument("--out-image", required=True)
    m.add_argument("--out-label", required=True)
    m.set_defaults(func=cmd_mix)

    v = sub.add_parser("validate", help="survey an images/labels directory pair")
    v.add_argument("--images", required=True)
    v.add_argument("--labels", required=True)
    v.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    v.set_defaults(func=cmd_validate)

    st = sub.add_parser("stats", help="summarize a generation manifest")
    st.add_argument("--manifest", required=True)
    st.add_argument("--out", default=None, help="write the JSON summary here instead of stdout")
    st.set_defaults(func=cmd_stats)

    return parser


def _merge_generate_args(args, parser):
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"--config: {exc}")
        unknown = set(cfg) - set(GENERATE_DEFAULTS) - {"num", "images", "labels", "out"}
        if unknown:
            parser.error(f"--config: unknown fields {sorted(unknown)}")
    for key in ("method", "num", "seed", "images", "labels", "out", "units", "alpha",
                "workers", "exclude_self_pairs"):
        if getattr(args, key) is None:
            if key in cfg:
                setattr(args, key, cfg[key])
            elif key in GENERATE_DEFAULTS:
                setattr(args, key, GENERATE_DEFAULTS[key])
    for key in ("num", "images", "labels", "out"):
        if getattr(args, key) is None:
            parser.error(f"--{key} is required (flag or config file)")
    if args.method != "mixup" and args.alpha != DEFAULT_MIXUP_ALPHA:
        parser.error("--alpha applies to --method mixup only")
    if args.method not in ("carvemix", "mixup", "cutmix"):
        parser.error(f"unknown method {args.method!r}")
    if args.units not in UNITS:
        parser.error(f"unknown units {args.units!r}")


def cmd_generate(args, parser) -> int:
    _merge_generate_args(args, parser)
    config = GenerationConfig(
        method=args.method,
        count=args.num,
        master_seed=args.seed,
        output_dir=args.out,
        images_dir=args.images,
        labels_dir=args.labels,
        units=UNITS[args.units],
        alpha=args.alpha,
        workers=args.workers,
        allow_self_pairs=not args.exclude_self_pairs,
    )
    roster = build_roster(args.images, args.labels)
    manifest = generate_dataset(config, roster)
    summary = {
        "manifest": str(Path(args.out) / "manifest.jsonl"),
        "method": args.method,
        "synthetic": len(manifest),
        "roster": len(roster),
        "pool": len(roster) + len(manifest),
        "output_dir": str(args.out),
    }
    print(json.dumps(summary))
    return 0


def cmd_sdf(args, parser) -> int:
    mask = nifti.read_mask(args.label)
    field = signed_distance(mask, UNITS[args.units])
    vol = Volume3D(field.shape, field.spacing, field.data.astype(np.float32))
    nifti.write_volume(args.out, vol)
    print(json.dumps({"out": str(args.out), "d_min": field.d_min, "units": args.units}))
    return 0


def cmd_mix(args, parser) -> int:
    lam = None
    if args.lam != "auto":
        if args.method != "carvemix":
            parser.error("--lambda applies to --method carvemix only")
        try:
            lam = float(args.lam)
        except ValueError:
            parser.error(f"--lambda must be 'auto' or a number, got {args.lam!r}")
    if args.alpha is not None and args.method != "mixup":
        parser.error("--alpha applies to --method mixup only")

    donor = AnnotatedSample(
        image=nifti.read_volume(args.donor_image),
        label=nifti.read_mask(args.donor_label),
        id=Path(args.donor_image).name,
    )
    host = AnnotatedSample(
        image=nifti.read_volume(args.host_image),
        label=nifti.read_mask(args.host_label),
        id=Path(args.host_image).name,
    )
    rng = np.random.default_rng(args.seed)
    if args.method == "carvemix":
        image, label, spec = carvemix_pair(donor, host, rng, units=UNITS[args.units],
                                           lam=lam, seed=args.seed)
        nifti.write_mask(args.out_label, label)
    elif args.method == "mixup":
        alpha = args.alpha if args.alpha is not None else DEFAULT_MIXUP_ALPHA
        image, label, spec = mixup_pair(donor, host, alpha, rng, seed=args.seed)
        nifti.write_soft_mask(args.out_label, label)
    else:
        image, label, spec = cutmix_pair(donor, host, rng, seed=args.seed)
        nifti.write_soft_mask(args.out_label, label)
    nifti.write_volume(args.out_image, image)

    result = {"method": args.method, "seed": args.seed}
    result.update(spec.to_record())
    result.update({"out_image": str(args.out_image), "out_label": str(args.out_label)})
    print(json.dumps(result))
    return 0


def cmd_validate(args, parser) -> int:
    report = validate_roster(args.images, args.labels)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(json.dumps(report["summary"]))
    else:
        print(text)
    return 0


def cmd_stats(args, parser) -> int:
    manifest = GenerationManifest.load(args.manifest)
    stats = dataset_stats(manifest)
    text = json.dumps(stats, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(json.dumps({"total": stats["total"], "out": str(args.out)}))
    else:
        print(text)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except CarveMixError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
