"""Command-line interface: validate, solve, eval, synth, toy.

Config precedence everywhere: built-in defaults, then the instance
manifest's hyper block, then a --config JSON file, then explicit flags.
Batch solves run concurrently when FGCLUSTER_THREADS is set above 1;
every output file is written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .constraints import build_constraints, dump_constraints
from .estimator import ABLATIONS, ForegroundClustering
from .evaluation import evaluate
from .instance import InstanceError, load_instance, save_instance
from .synth import SynthSpec, synth_instance, toy_instance

RESULTS_FORMAT_VERSION = 1


def _atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".%s." % path.name)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path, payload):
    _atomic_write_text(path, json.dumps(payload, indent=1) + "\n")


def _load_config(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit("cannot read config '%s': %s" % (path, exc))


def _threads():
    raw = os.environ.get("FGCLUSTER_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Subcommands

def cmd_validate(args):
    failures = 0
    for path in args.instance:
        try:
            inst = load_instance(path)
        except InstanceError as exc:
            print("%s: INVALID: %s" % (path, exc))
            failures += 1
            continue
        print("%s: ok (%d frames, %d superpixels, %d boxes)"
              % (path, inst.n_frames, inst.n_sp_total, inst.m_box_total))
    return 1 if failures else 0


def _estimator_from_args(args, config):
    hyper_cfg = dict(config.get("hyper", {}))
    if "lambda" in hyper_cfg:
        hyper_cfg["lambda_"] = hyper_cfg.pop("lambda")
    solver_cfg = dict(config.get("solver", {}))
    kwargs = dict(hyper_cfg)
    kwargs["ablate"] = args.ablate or config.get("ablate")
    kwargs["mask_in_box"] = args.mask_in_box or bool(config.get("mask_in_box"))
    if args.knn is not None:
        kwargs["knn"] = args.knn
    kwargs["tol_feas"] = (args.tol_feas if args.tol_feas is not None
                          else solver_cfg.get("tol_feas", 1e-6))
    kwargs["tol_kkt"] = (args.tol_kkt if args.tol_kkt is not None
                         else solver_cfg.get("tol_kkt", 1e-6))
    kwargs["max_iter"] = (args.max_iter if args.max_iter is not None
                          else solver_cfg.get("max_iter", 20000))
    kwargs["seed"] = args.seed if args.seed is not None else solver_cfg.get("seed")
    return ForegroundClustering(**kwargs)


def _solve_one(path, args, config, out_dir):
    inst = load_instance(path)
    est = _estimator_from_args(args, config)
    est.fit(inst)
    sol = est.solution_
    payload = {
        "format_version": RESULTS_FORMAT_VERSION,
        "tool_version": __version__,
        "instance": str(path),
        "config": {
            "hyper": est.hyper_.to_dict(),
            "solver": {
                "tol_feas": est.tol_feas,
                "tol_kkt": est.tol_kkt,
                "max_iter": est.max_iter,
                "seed": est.seed,
            },
            "ablate": est.ablate,
            "mask_in_box": bool(est.mask_in_box),
        },
        "solution": {
            "status": est.diagnostics_.get("status"),
            "objective": est.objective_,
            "iterations": est.diagnostics_.get("iterations"),
            "primal_residual": est.diagnostics_.get("primal_residual"),
            "dual_residual": est.diagnostics_.get("dual_residual"),
            "v": None if sol is None else [float(t) for t in sol.v],
        },
        "selected_boxes": [int(b) for b in est.selected_boxes_],
        "masks": [[int(j) for j in np.nonzero(m)[0]] for m in est.masks_],
        "diagnostics": {
            k: v for k, v in est.diagnostics_.items() if k != "residual_trace"
        },
        "residual_trace": est.diagnostics_.get("residual_trace"),
    }
    stem = Path(path).stem
    out_path = Path(out_dir or Path(path).parent) / ("%s.results.json" % stem)
    _write_json(out_path, payload)
    return path, out_path, est.diagnostics_.get("status"), est.objective_


def cmd_solve(args):
    config = _load_config(args.config)
    bad = 0
    jobs = [(p, args, config, args.out) for p in args.instance]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: _solve_one(*j), jobs))
    else:
        results = [_solve_one(*j) for j in jobs]
    for path, out_path, status, objective in results:
        obj_txt = "-" if objective is None else "%.6g" % objective
        print("%s: status=%s objective=%s -> %s" % (path, status, obj_txt, out_path))
        if status != "optimal":
            bad += 1
    return 1 if bad else 0


def cmd_eval(args):
    inst = load_instance(args.instance)
    try:
        results = json.loads(Path(args.results).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit("cannot read results '%s': %s" % (args.results, exc))
    boxes = results["selected_boxes"]
    mask_lists = results["masks"]
    if len(boxes) != inst.n_frames or len(mask_lists) != inst.n_frames:
        raise SystemExit("results cover %d frames but instance has %d"
                         % (len(boxes), inst.n_frames))
    masks = []
    for f, frame in enumerate(inst.frames):
        m = np.zeros(frame.n_sp, dtype=int)
        m[np.asarray(mask_lists[f], dtype=int)] = 1
        masks.append(m)
    report = evaluate(inst, boxes, masks).to_json()
    text = json.dumps(report, indent=1)
    if args.out:
        _write_json(Path(args.out), report)
        print("report -> %s" % args.out)
    else:
        print(text)
    return 0


def cmd_synth(args):
    spec_fields = {}
    if args.spec:
        spec_fields.update(_load_config(args.spec))
    for name, value in (
        ("n_frames", args.frames), ("n_sp", args.sp), ("m_box", args.boxes),
        ("separation", args.separation), ("bg_mode", args.bg_mode),
        ("n_distractors_in", args.distractors_in),
        ("n_distractors_out", args.distractors_out),
    ):
        if value is not None:
            spec_fields[name] = value
    hyper_fields = spec_fields.pop("hyper", None)
    spec = SynthSpec(**spec_fields)
    if hyper_fields:
        from .instance import Hyperparameters
        spec = replace(spec, hyper=Hyperparameters.from_dict(hyper_fields))
    inst = synth_instance(spec, args.seed)
    out = Path(args.out)
    save_instance(inst, out)
    print("wrote %s (%d frames, %d superpixels, %d boxes)"
          % (out, inst.n_frames, inst.n_sp_total, inst.m_box_total))
    return 0


def cmd_toy(args):
    inst = toy_instance()
    cs = build_constraints(inst)
    text = dump_constraints(inst, cs)
    if args.dump:
        sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        save_instance(inst, out / "toy.json")
        _atomic_write_text(out / "toy.constraints.txt", text)
        print("wrote %s and %s" % (out / "toy.json", out / "toy.constraints.txt"))
    if not args.dump and not args.out:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------

def _add_solver_flags(p):
    p.add_argument("--config", help="JSON file with hyper/solver overrides")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol-feas", type=float, default=None, dest="tol_feas")
    p.add_argument("--tol-kkt", type=float, default=None, dest="tol_kkt")
    p.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    p.add_argument("--ablate", choices=ABLATIONS, default=None)
    p.add_argument("--mask-in-box", action="store_true", dest="mask_in_box")
    p.add_argument("--knn", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fgcluster",
        description="joint foreground segmentation and box selection "
                    "by coupled discriminative clustering",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check instance files")
    p.add_argument("instance", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="solve instances and write results JSON")
    p.add_argument("instance", nargs="+")
    _add_solver_flags(p)
    p.add_argument("--out", help="output directory (default: next to each instance)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="score results against ground truth")
    p.add_argument("results")
    p.add_argument("instance")
    p.add_argument("--out", help="write the report JSON here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic instance")
    p.add_argument("--spec", help="JSON file of generator parameters")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--sp", type=int, default=None)
    p.add_argument("--boxes", type=int, default=None)
    p.add_argument("--separation", type=float, default=None)
    p.add_argument("--bg-mode", choices=("video", "image"), default=None,
                   dest="bg_mode")
    p.add_argument("--distractors-in", type=int, default=None,
                   dest="distractors_in")
    p.add_argument("--distractors-out", type=int, default=None,
                   dest="distractors_out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("toy", help="emit the worked 5-superpixel example")
    p.add_argument("--dump", action="store_true",
                   help="print the constraint system to stdout")
    p.add_argument("--out", help="directory for the instance files")
    p.set_defaults(func=cmd_toy)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
