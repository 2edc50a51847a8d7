"""Command line entry points: fgprep images | video."""

import argparse
import json
import sys

from . import __version__
from .errors import PrepError
from .pipeline import prep_images, prep_video


def _add_common(p):
    p.add_argument("--proposals", required=True,
                   help="JSON file mapping image names to rectangles")
    p.add_argument("--out", required=True, help="manifest path to write")
    p.add_argument("--superpixels", type=int, default=200,
                   dest="n_superpixels", help="target regions per frame")
    p.add_argument("--compactness", type=float, default=10.0)
    p.add_argument("--max-proposals", type=int, default=30,
                   dest="max_proposals")
    p.add_argument("--bins", type=int, default=7,
                   help="color bins per channel")
    p.add_argument("--gt-masks", default=None, dest="gt_mask_dir",
                   help="folder of binary ground truth masks")
    p.add_argument("--class", default=None, dest="class_tag",
                   help="class tag recorded on every frame")
    p.add_argument("--hyper", default=None,
                   help="JSON file of hyperparameter overrides")
    p.add_argument("--sp-features", default=None, dest="sp_features_path",
                   help="precomputed FGCM matrix replacing the default "
                        "superpixel features")
    p.add_argument("--box-features", default=None, dest="box_features_path",
                   help="precomputed FGCM matrix replacing the default "
                        "box features")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fgprep",
        description="prepare image or video folders as instance files")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("images", help="independent images")
    p.add_argument("--images", required=True, dest="image_dir")
    p.add_argument("--saliency", required=True, dest="saliency_dir")
    _add_common(p)

    p = sub.add_parser("video", help="ordered, extracted video frames")
    p.add_argument("--frames", required=True, dest="frame_dir")
    p.add_argument("--appearance", required=True, dest="appearance_dir",
                   help="appearance saliency maps")
    p.add_argument("--motion", required=True, dest="motion_dir",
                   help="motion saliency maps")
    p.add_argument("--stride", type=int, default=10,
                   help="keep every stride-th frame")
    _add_common(p)
    return parser


def _hyper_from(path):
    if path is None:
        return None
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise PrepError("cannot read hyper file '%s': %s" % (path, exc))


def main(argv=None):
    args = build_parser().parse_args(argv)
    common = dict(
        proposals_path=args.proposals,
        out_path=args.out,
        n_superpixels=args.n_superpixels,
        compactness=args.compactness,
        max_proposals=args.max_proposals,
        bins=args.bins,
        gt_mask_dir=args.gt_mask_dir,
        class_tag=args.class_tag,
        sp_features_path=args.sp_features_path,
        box_features_path=args.box_features_path,
    )
    try:
        common["hyper"] = _hyper_from(args.hyper)
        if args.command == "images":
            out = prep_images(args.image_dir, args.saliency_dir, **common)
        else:
            out = prep_video(args.frame_dir, args.appearance_dir,
                             args.motion_dir, stride=args.stride, **common)
    except PrepError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    print("wrote %s" % out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
