"""Problem data model: frames, features, histograms, hyperparameters, file IO.

An instance bundles everything the optimizer needs for one set of image
frames: per-superpixel geometry/appearance, candidate bounding boxes with
their superpixel memberships, saliency scores, feature blocks (raw or
kernelized) for superpixels and boxes, and per-frame color histograms.

Instances are validated once on construction/load and treated as immutable
afterwards (all arrays are marked read-only), so they are safe to share
across threads.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

FGCM_MAGIC = b"FGCM\x01"
MANIFEST_VERSION = 1

RAW_FEATURES = "raw_features"
PRECOMPUTED_KERNEL = "precomputed_kernel"

SYM_TOL = 1e-9
EIG_TOL = 1e-8


class InstanceError(ValueError):
    """Raised when a manifest, sidecar, or instance invariant is broken."""


def _fail(msg, frame_id=None):
    if frame_id is not None:
        msg = "frame '%s': %s" % (frame_id, msg)
    raise InstanceError(msg)


# ---------------------------------------------------------------------------
# FGCM sidecar format: magic, u32 rows, u32 cols (little endian), then
# rows*cols float64 little endian, row major.

def write_fgcm(path, array):
    arr = np.ascontiguousarray(array, dtype="<f8")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InstanceError("FGCM sidecars hold 2-d matrices, got ndim=%d" % arr.ndim)
    with open(path, "wb") as fh:
        fh.write(FGCM_MAGIC)
        fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes(order="C"))


def read_fgcm(path):
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise InstanceError("cannot read sidecar '%s': %s" % (path, exc)) from exc
    if blob[: len(FGCM_MAGIC)] != FGCM_MAGIC:
        raise InstanceError("sidecar '%s': bad FGCM magic" % path)
    header_end = len(FGCM_MAGIC) + 8
    if len(blob) < header_end:
        raise InstanceError("sidecar '%s': truncated header" % path)
    rows, cols = struct.unpack("<II", blob[len(FGCM_MAGIC):header_end])
    expected = header_end + rows * cols * 8
    if len(blob) != expected:
        raise InstanceError(
            "sidecar '%s': expected %d bytes for %dx%d float64, got %d"
            % (path, expected, rows, cols, len(blob))
        )
    data = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=header_end)
    return data.reshape(rows, cols).copy()


# ---------------------------------------------------------------------------
# Domain types

@dataclass
class Frame:
    """One image frame: superpixels, candidate boxes, and their coupling."""

    frame_id: str
    sp_positions: np.ndarray       # (n_sp, 2), normalized coordinates in [0, 1]
    sp_colors: np.ndarray          # (n_sp, 3), channels in [0, 1]
    sp_pixel_counts: np.ndarray    # (n_sp,), positive integers
    memberships: tuple             # per box, int array of superpixel indices
    box_rects: np.ndarray          # (m_box, 4): x_min, y_min, x_max, y_max in pixels
    sp_saliency_raw: np.ndarray    # (n_sp,), values in [0, 1]
    box_saliency_raw: np.ndarray   # (m_box,), values in [0, 1]
    class_tag: str | None = None
    gt_box: np.ndarray | None = None    # (4,) rectangle, optional
    gt_mask: np.ndarray | None = None   # (n_sp,) binary, optional

    @property
    def n_sp(self):
        return self.sp_positions.shape[0]

    @property
    def m_box(self):
        return len(self.memberships)


@dataclass
class FeatureBlock:
    """Either a raw feature matrix or a precomputed kernel over the rows."""

    kind: str                      # RAW_FEATURES or PRECOMPUTED_KERNEL
    matrix: np.ndarray

    @property
    def n_rows(self):
        return self.matrix.shape[0]

    def validate(self, label=""):
        mat = self.matrix
        if self.kind not in (RAW_FEATURES, PRECOMPUTED_KERNEL):
            _fail("%s: unknown feature kind '%s'" % (label, self.kind))
        if mat.ndim != 2:
            _fail("%s: feature matrix must be 2-d" % label)
        if not np.all(np.isfinite(mat)):
            _fail("%s: non-finite feature entries" % label)
        if self.kind == PRECOMPUTED_KERNEL:
            if mat.shape[0] != mat.shape[1]:
                _fail("%s: kernel matrix must be square, got %s" % (label, mat.shape))
            if np.max(np.abs(mat - mat.T), initial=0.0) > SYM_TOL:
                _fail("%s: kernel matrix not symmetric within %g" % (label, SYM_TOL))
            if mat.shape[0] and np.linalg.eigvalsh(mat)[0] < -EIG_TOL:
                _fail("%s: kernel matrix indefinite (min eigenvalue %g)"
                      % (label, float(np.linalg.eigvalsh(mat)[0])))


@dataclass
class HistogramBlock:
    """Per-frame color histogram matrices, one (d_bins, n_sp) block per frame.

    Column j holds the binned pixel counts of superpixel j, so H @ y counts
    the foreground pixels landing in each bin.
    """

    per_frame: tuple               # tuple of (d_bins, n_sp) float arrays, integral values

    @property
    def d_bins(self):
        return self.per_frame[0].shape[0] if self.per_frame else 0


@dataclass
class Hyperparameters:
    """Weights and thresholds of the joint objective and constraints.

    ``None`` anywhere means "use the built-in default"; resolution happens in
    :func:`resolve_hyper`. Field names follow the objective: kappa weighs the
    histogram-matching term, alpha the spatial smoothness term, mu/nu the
    superpixel/box saliency terms, lambda_ the whole localization part, and
    gamma/eta bound the fraction of a foreground box's superpixels that must
    themselves be foreground.
    """

    beta_s: float = 0.1
    beta_b: float = 0.1
    kappa: float = 10.0
    lambda_: float = 10.0
    alpha: float = 0.1
    mu: float = 0.01
    nu: float = 0.001
    gamma: float = 0.3
    eta: float = 0.9
    lambda_p: float = 0.001
    lambda_c: float = 0.05
    saliency_floor: float = 1e-6
    f_scale: str = "pairs"         # "pairs" divides the histogram term by the frame count
    f_pairs: str = "all"           # match "all" frame pairs or only "consecutive" ones
    knn: int | None = None         # optional similarity-graph sparsification

    def validate(self):
        if not (0.0 <= self.gamma <= self.eta <= 1.0):
            raise InstanceError(
                "hyper: need 0 <= gamma <= eta <= 1, got gamma=%g eta=%g"
                % (self.gamma, self.eta)
            )
        if self.beta_s <= 0 or self.beta_b <= 0:
            raise InstanceError("hyper: beta_s and beta_b must be > 0")
        for name in ("kappa", "lambda_", "alpha", "mu", "nu", "lambda_p", "lambda_c"):
            if getattr(self, name) < 0:
                raise InstanceError("hyper: %s must be >= 0" % name)
        if not (0.0 < self.saliency_floor < 1.0):
            raise InstanceError("hyper: saliency_floor must lie in (0, 1)")
        if self.f_scale not in ("none", "pairs"):
            raise InstanceError("hyper: f_scale must be 'none' or 'pairs'")
        if self.f_pairs not in ("all", "consecutive"):
            raise InstanceError("hyper: f_pairs must be 'all' or 'consecutive'")
        if self.knn is not None and self.knn < 1:
            raise InstanceError("hyper: knn must be >= 1 when set")

    def to_dict(self):
        d = dict(self.__dict__)
        d["lambda"] = d.pop("lambda_")
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "lambda" in data:
            data["lambda_"] = data.pop("lambda")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InstanceError("hyper: unknown fields %s" % sorted(unknown))
        return cls(**data)


def resolve_hyper(base, overrides=None):
    """Apply non-None overrides on top of a base Hyperparameters."""
    hyper = base if isinstance(base, Hyperparameters) else Hyperparameters()
    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        if "lambda" in clean:
            clean["lambda_"] = clean.pop("lambda")
        hyper = replace(hyper, **clean)
    hyper.validate()
    return hyper


@dataclass
class GroundTruth:
    """Optional per-frame evaluation targets (kept on the frames themselves)."""

    has_boxes: bool
    has_masks: bool


@dataclass
class ProblemInstance:
    """All frames plus the global feature/histogram blocks.

    Superpixels and boxes use a global index across frames: frame f's local
    index j maps to ``sp_offsets[f] + j``. That offset convention is the
    single source of truth for every stacked matrix in the pipeline.
    """

    frames: tuple
    sp_features: FeatureBlock
    box_features: FeatureBlock
    histograms: HistogramBlock
    hyper: Hyperparameters = field(default_factory=Hyperparameters)

    @property
    def n_frames(self):
        return len(self.frames)

    @property
    def n_sp_total(self):
        return int(sum(f.n_sp for f in self.frames))

    @property
    def m_box_total(self):
        return int(sum(f.m_box for f in self.frames))

    @property
    def sp_offsets(self):
        return np.concatenate([[0], np.cumsum([f.n_sp for f in self.frames])])

    @property
    def box_offsets(self):
        return np.concatenate([[0], np.cumsum([f.m_box for f in self.frames])])

    def sp_slice(self, f):
        off = self.sp_offsets
        return slice(int(off[f]), int(off[f + 1]))

    def box_slice(self, f):
        off = self.box_offsets
        return slice(int(off[f]), int(off[f + 1]))

    @property
    def ground_truth(self):
        return GroundTruth(
            has_boxes=any(f.gt_box is not None for f in self.frames),
            has_masks=any(f.gt_mask is not None for f in self.frames),
        )

    def sp_saliency_cost(self):
        """Stacked -log saliency vector over all superpixels."""
        raw = np.concatenate([f.sp_saliency_raw for f in self.frames])
        return saliency_cost(raw, self.hyper.saliency_floor)

    def box_saliency_cost(self):
        raw = np.concatenate([f.box_saliency_raw for f in self.frames])
        return saliency_cost(raw, self.hyper.saliency_floor)


# ---------------------------------------------------------------------------
# Operations

def saliency_cost(raw, floor=1e-6):
    """Turn saliency values in [0, 1] into nonnegative costs -log(max(raw, floor)).

    The floor keeps the cost finite for completely non-salient regions.
    Accepts scalars or arrays.
    """
    arr = np.asarray(raw, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise InstanceError("saliency values must lie in [0, 1]")
    out = -np.log(np.maximum(arr, floor))
    return float(out) if np.isscalar(raw) else out


def _freeze(arr):
    arr = np.asarray(arr)
    arr.setflags(write=False)
    return arr


def validate_instance(inst):
    """Check every structural invariant; returns the instance with arrays frozen."""
    if not inst.frames:
        _fail("instance has no frames")
    inst.hyper.validate()

    d_bins = None
    for f, (frame, hist) in enumerate(zip(inst.frames, inst.histograms.per_frame)):
        fid = frame.frame_id
        n_sp = frame.sp_positions.shape[0]
        if n_sp < 1:
            _fail("n_sp must be >= 1", fid)
        if len(frame.memberships) < 1:
            _fail("m_box must be >= 1", fid)
        if frame.sp_positions.shape != (n_sp, 2):
            _fail("sp_positions must be (n_sp, 2)", fid)
        if frame.sp_colors.shape != (n_sp, 3):
            _fail("sp_colors must be (n_sp, 3)", fid)
        for name in ("sp_positions", "sp_colors"):
            arr = getattr(frame, name)
            if not np.all(np.isfinite(arr)):
                _fail("%s has non-finite entries" % name, fid)
            if np.any(arr < 0) or np.any(arr > 1):
                _fail("%s entries must lie in [0, 1]" % name, fid)
        counts = frame.sp_pixel_counts
        if counts.shape != (n_sp,):
            _fail("sp_pixel_counts must be (n_sp,)", fid)
        if np.any(counts <= 0) or np.any(counts != np.round(counts)):
            _fail("sp_pixel_counts must be positive integers", fid)
        for i, members in enumerate(frame.memberships):
            if len(members) < 1:
                _fail("box %d: empty membership" % i, fid)
            if np.any(members < 0) or np.any(members >= n_sp):
                _fail("box %d: superpixel index out of range" % i, fid)
            if len(np.unique(members)) != len(members):
                _fail("box %d: duplicate superpixel indices" % i, fid)
        m_box = len(frame.memberships)
        if frame.box_rects.shape != (m_box, 4):
            _fail("box_rects must be (m_box, 4)", fid)
        if np.any(frame.box_rects[:, 0] >= frame.box_rects[:, 2]) or np.any(
            frame.box_rects[:, 1] >= frame.box_rects[:, 3]
        ):
            _fail("box_rects must satisfy x_min < x_max and y_min < y_max", fid)
        for name, size in (("sp_saliency_raw", n_sp), ("box_saliency_raw", m_box)):
            arr = getattr(frame, name)
            if arr.shape != (size,):
                _fail("%s must have length %d" % (name, size), fid)
            if np.any(arr < 0) or np.any(arr > 1):
                _fail("%s values must lie in [0, 1]" % name, fid)

        if hist.shape[1] != n_sp:
            _fail("histogram must have one column per superpixel", fid)
        if d_bins is None:
            d_bins = hist.shape[0]
        elif hist.shape[0] != d_bins:
            _fail("histogram bin count %d differs from %d" % (hist.shape[0], d_bins), fid)
        if np.any(hist < 0) or np.any(hist != np.round(hist)):
            _fail("histogram entries must be nonnegative integers", fid)
        col_sums = hist.sum(axis=0)
        bad = np.nonzero(col_sums != counts)[0]
        if bad.size:
            _fail(
                "histogram column %d sums to %g but superpixel has %g pixels"
                % (bad[0], col_sums[bad[0]], counts[bad[0]]),
                fid,
            )

        if frame.gt_mask is not None:
            if frame.gt_mask.shape != (n_sp,) or not np.all(np.isin(frame.gt_mask, (0, 1))):
                _fail("gt_mask must be a binary vector of length n_sp", fid)
        if frame.gt_box is not None:
            gb = frame.gt_box
            if gb.shape != (4,) or gb[0] >= gb[2] or gb[1] >= gb[3]:
                _fail("gt_box must be a nondegenerate rectangle", fid)

    if len(inst.histograms.per_frame) != len(inst.frames):
        _fail("histogram block count %d != frame count %d"
              % (len(inst.histograms.per_frame), len(inst.frames)))

    inst.sp_features.validate("sp_features")
    inst.box_features.validate("box_features")
    if inst.sp_features.n_rows != inst.n_sp_total:
        _fail("sp_features has %d rows but instance has %d superpixels"
              % (inst.sp_features.n_rows, inst.n_sp_total))
    if inst.box_features.n_rows != inst.m_box_total:
        _fail("box_features has %d rows but instance has %d boxes"
              % (inst.box_features.n_rows, inst.m_box_total))

    # freeze everything
    for frame in inst.frames:
        frame.sp_positions = _freeze(frame.sp_positions)
        frame.sp_colors = _freeze(frame.sp_colors)
        frame.sp_pixel_counts = _freeze(frame.sp_pixel_counts)
        frame.box_rects = _freeze(frame.box_rects)
        frame.sp_saliency_raw = _freeze(frame.sp_saliency_raw)
        frame.box_saliency_raw = _freeze(frame.box_saliency_raw)
        frame.memberships = tuple(_freeze(m) for m in frame.memberships)
        if frame.gt_box is not None:
            frame.gt_box = _freeze(frame.gt_box)
        if frame.gt_mask is not None:
            frame.gt_mask = _freeze(frame.gt_mask)
    inst.sp_features.matrix = _freeze(inst.sp_features.matrix)
    inst.box_features.matrix = _freeze(inst.box_features.matrix)
    inst.histograms.per_frame = tuple(_freeze(h) for h in inst.histograms.per_frame)
    return inst


# ---------------------------------------------------------------------------
# Manifest IO

_SIDE_NAMES = (
    "sp_positions", "sp_colors", "sp_pixel_counts", "sp_saliency",
    "box_rects", "box_saliency", "histograms", "sp_features", "box_features",
)


def save_instance(inst, manifest_path):
    """Write the manifest JSON plus FGCM sidecars next to it."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    stem = manifest_path.stem

    N = inst.n_sp_total
    mats = {
        "sp_positions": np.vstack([f.sp_positions for f in inst.frames]),
        "sp_colors": np.vstack([f.sp_colors for f in inst.frames]),
        "sp_pixel_counts": np.concatenate(
            [f.sp_pixel_counts for f in inst.frames]).astype(float).reshape(N, 1),
        "sp_saliency": np.concatenate(
            [f.sp_saliency_raw for f in inst.frames]).reshape(N, 1),
        "box_rects": np.vstack([f.box_rects for f in inst.frames]),
        "box_saliency": np.concatenate(
            [f.box_saliency_raw for f in inst.frames]).reshape(-1, 1),
        "histograms": np.hstack(inst.histograms.per_frame),
        "sp_features": inst.sp_features.matrix,
        "box_features": inst.box_features.matrix,
    }
    sidecars = {}
    for name in _SIDE_NAMES:
        rel = "%s.%s.fgcm" % (stem, name)
        write_fgcm(manifest_path.parent / rel, mats[name])
        sidecars[name] = rel

    frames = []
    for frame in inst.frames:
        entry = {
            "frame_id": frame.frame_id,
            "n_sp": int(frame.n_sp),
            "m_box": int(frame.m_box),
            "memberships": [[int(j) for j in m] for m in frame.memberships],
        }
        if frame.class_tag is not None:
            entry["class"] = frame.class_tag
        if frame.gt_box is not None:
            entry["gt_box"] = [float(v) for v in frame.gt_box]
        if frame.gt_mask is not None:
            entry["gt_mask"] = [int(v) for v in frame.gt_mask]
        frames.append(entry)

    manifest = {
        "format_version": MANIFEST_VERSION,
        "hyper": inst.hyper.to_dict(),
        "sp_feature_kind": inst.sp_features.kind,
        "box_feature_kind": inst.box_features.kind,
        "frames": frames,
        "sidecars": sidecars,
    }
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return manifest_path


def load_instance(path):
    """Load and fully validate an instance manifest."""
    path = Path(path)
    try:
        manifest = json.loads(path.read_text())
    except OSError as exc:
        raise InstanceError("cannot read manifest '%s': %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise InstanceError("manifest '%s' is not valid JSON: %s" % (path, exc)) from exc

    for key in ("frames", "hyper", "sidecars"):
        if key not in manifest:
            _fail("manifest missing '%s' section" % key)
    version = manifest.get("format_version", MANIFEST_VERSION)
    if version != MANIFEST_VERSION:
        _fail("unsupported manifest format_version %r" % version)

    sidecars = manifest["sidecars"]
    missing = [n for n in _SIDE_NAMES if n not in sidecars]
    if missing:
        _fail("manifest missing sidecars %s" % missing)
    mats = {name: read_fgcm(path.parent / sidecars[name]) for name in _SIDE_NAMES}

    hyper = Hyperparameters.from_dict(manifest["hyper"])

    frames = []
    sp_off = 0
    box_off = 0
    for idx, entry in enumerate(manifest["frames"]):
        fid = entry.get("frame_id", "frame%d" % idx)
        try:
            n_sp = int(entry["n_sp"])
            m_box = int(entry["m_box"])
            raw_members = entry["memberships"]
        except KeyError as exc:
            _fail("manifest entry missing %s" % exc, fid)
        if len(raw_members) != m_box:
            _fail("m_box=%d but %d membership lists" % (m_box, len(raw_members)), fid)
        members = tuple(np.asarray(m, dtype=int) for m in raw_members)
        sp_sl = slice(sp_off, sp_off + n_sp)
        box_sl = slice(box_off, box_off + m_box)
        gt_box = entry.get("gt_box")
        gt_mask = entry.get("gt_mask")
        frames.append(Frame(
            frame_id=fid,
            sp_positions=mats["sp_positions"][sp_sl],
            sp_colors=mats["sp_colors"][sp_sl],
            sp_pixel_counts=mats["sp_pixel_counts"][sp_sl, 0],
            memberships=members,
            box_rects=mats["box_rects"][box_sl],
            sp_saliency_raw=mats["sp_saliency"][sp_sl, 0],
            box_saliency_raw=mats["box_saliency"][box_sl, 0],
            class_tag=entry.get("class"),
            gt_box=None if gt_box is None else np.asarray(gt_box, dtype=float),
            gt_mask=None if gt_mask is None else np.asarray(gt_mask, dtype=int),
        ))
        sp_off += n_sp
        box_off += m_box

    for name, rows, what in (
        ("sp_positions", sp_off, "superpixel"),
        ("box_rects", box_off, "box"),
    ):
        if mats[name].shape[0] != rows:
            _fail("sidecar '%s' has %d rows but frames declare %d %ss"
                  % (sidecars[name], mats[name].shape[0], rows, what))
    if mats["histograms"].shape[1] != sp_off:
        _fail("histogram sidecar has %d columns but frames declare %d superpixels"
              % (mats["histograms"].shape[1], sp_off))

    hists = []
    col = 0
    for entry in manifest["frames"]:
        n_sp = int(entry["n_sp"])
        hists.append(mats["histograms"][:, col:col + n_sp])
        col += n_sp

    inst = ProblemInstance(
        frames=tuple(frames),
        sp_features=FeatureBlock(manifest.get("sp_feature_kind", RAW_FEATURES),
                                 mats["sp_features"]),
        box_features=FeatureBlock(manifest.get("box_feature_kind", RAW_FEATURES),
                                  mats["box_features"]),
        histograms=HistogramBlock(tuple(hists)),
        hyper=hyper,
    )
    return validate_instance(inst)
