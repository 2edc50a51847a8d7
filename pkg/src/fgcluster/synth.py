"""Synthetic instances with planted ground truth, plus the worked toy example.

The generator lays every frame out on a 100 x 100 pixel canvas: one planted
rectangle on the left holds the foreground superpixels (and possibly some
background ones), decoy rectangles on the right hold the rest. Features are
drawn around a foreground center and one or more background centers a
controlled distance apart, so the difficulty of the discriminative part is
a knob. Colors put the foreground in one corner bin of the color cube and
the plain background in the opposite corner bin: with normalized colors the
affinity exponent is small, so the foreground/background boundary has to be
the single strongest affinity drop for the cut-based threshold selection to
find it.

Distractor superpixels (background in truth, highly salient) can be
injected two ways to pull the ablations apart. Each population gets its own
feature cluster along a direction orthogonal to the foreground/background
axis: a cluster indicator stays linearly separable, so the discriminative
terms never charge the solutions that exclude it. In-box distractors sit
inside the planted rectangle; their colors are redrawn per frame, so only
the histogram-matching term can push them out of the foreground. Out-of-box
distractors fill the first decoy rectangle as a lure object whose members
are salient but whose rectangle pools saliency over mostly empty area: the
lure attracts the superpixel-level saliency term and is rejected only by
the box-level saliency term, which is exactly the signal the localization
ablation removes.

Everything is driven by one numpy Generator; the same seed gives
byte-identical instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import (
    Frame, FeatureBlock, HistogramBlock, Hyperparameters, InstanceError,
    PRECOMPUTED_KERNEL, ProblemInstance, RAW_FEATURES, validate_instance,
)

IMAGE_SIZE = 100


@dataclass
class SynthSpec:
    n_frames: int = 2
    n_sp: int = 10                 # per frame
    m_box: int = 2                 # per frame, first one planted
    d_feat: int = 6
    bins_per_channel: int = 4
    separation: float = 3.0        # foreground/background feature distance
    noise: float = 0.25
    box_noise: float = 0.1
    fg_box_frac: float = 0.5       # share of the planted box that is foreground
    box_cover_frac: float = 0.4    # share of the frame's superpixels in the planted box
    bg_mode: str = "video"         # "video": shared background centers; "image": per-frame
    n_distractors_in: int = 0      # inside the planted box
    n_distractors_out: int = 0     # inside decoy boxes
    n_uncovered: int = 0           # superpixels left outside every box
    fg_saliency: float = 0.85
    bg_saliency: float = 0.15
    distractor_saliency: float = 0.9
    saliency_noise: float = 0.05
    pixel_count: int = 20
    kernel_features: bool = False  # emit a precomputed linear kernel for superpixels
    scramble_memberships: float = 0.0
    hyper: Hyperparameters = field(default_factory=Hyperparameters)


def _quantize_color(color, bins):
    idx = np.minimum((np.asarray(color) * bins).astype(int), bins - 1)
    return int(idx[0] * bins * bins + idx[1] * bins + idx[2])


def _bin_color(idx, bins):
    """The color at the center of the bin with per-channel indices idx.

    Cluster colors sit at bin centers so that small per-superpixel jitter
    never crosses a bin edge; a superpixel's color must land in the same bin
    in every frame or the histogram-matching term would see phantom
    differences between identically-labeled frames.
    """
    return (np.asarray(idx, dtype=float) + 0.5) / bins


def _ortho_axis(rng, *others):
    """A random unit vector orthogonal to the given unit vectors."""
    d = others[0].shape[0]
    while True:
        w = rng.standard_normal(d)
        for o in others:
            w -= (w @ o) * o
        norm = np.linalg.norm(w)
        if norm > 1e-6:
            return w / norm


def _rects(rng, m_box):
    """Planted rectangle on the left half, decoys on the right: never IoU > 0."""
    px0 = rng.uniform(2, 12)
    py0 = rng.uniform(10, 40)
    pw = rng.uniform(28, 36)
    ph = rng.uniform(30, 45)
    rects = [(px0, py0, px0 + pw, py0 + ph)]
    for _ in range(m_box - 1):
        dx0 = rng.uniform(54, 70)
        dy0 = rng.uniform(5, 55)
        rects.append((dx0, dy0, dx0 + rng.uniform(18, 28), dy0 + rng.uniform(18, 35)))
    return np.asarray(rects)


def _inside(rng, rect, n):
    x0, y0, x1, y1 = rect
    # keep a margin so the superpixel clearly belongs to the rectangle
    xs = rng.uniform(x0 + 1, x1 - 1, size=n)
    ys = rng.uniform(y0 + 1, y1 - 1, size=n)
    return np.column_stack([xs, ys]) / IMAGE_SIZE


def synth_instance(spec, seed):
    """Generate a validated instance with planted ground truth."""
    hyper = spec.hyper
    n_in_box = max(2, round(spec.n_sp * spec.box_cover_frac))
    n_fg = round(n_in_box * spec.fg_box_frac)
    if not (hyper.gamma <= spec.fg_box_frac <= hyper.eta):
        raise InstanceError(
            "planted foreground fraction %g outside [gamma, eta] = [%g, %g]"
            % (spec.fg_box_frac, hyper.gamma, hyper.eta))
    if n_fg < 1:
        raise InstanceError("planted box too small for a nonempty foreground")
    if spec.n_distractors_in > n_in_box - n_fg:
        raise InstanceError("more in-box distractors than background slots")
    n_outside = spec.n_sp - n_in_box
    n_uncovered = min(spec.n_uncovered, n_outside)
    if n_outside - n_uncovered < spec.m_box - 1:
        raise InstanceError("not enough superpixels to populate decoy boxes")
    if spec.n_distractors_out > n_outside - n_uncovered:
        raise InstanceError("more out-of-box distractors than covered outside slots")

    rng = np.random.default_rng(seed)
    if (spec.n_distractors_in or spec.n_distractors_out) and spec.d_feat < 3:
        raise InstanceError("distractors need d_feat >= 3 for their own feature axes")
    u = rng.standard_normal(spec.d_feat)
    u /= np.linalg.norm(u)
    fg_center = 0.5 * spec.separation * u
    bg_base = -0.5 * spec.separation * u
    # distractor clusters live on their own orthogonal axes so that masks
    # including or excluding them stay linearly separable in feature space
    distr_in_center = lure_center = None
    if spec.n_distractors_in or spec.n_distractors_out:
        u_in = _ortho_axis(rng, u)
        u_out = _ortho_axis(rng, u, u_in)
        distr_in_center = 0.5 * spec.separation * u_in
        lure_center = 0.5 * spec.separation * u_out
    bins = spec.bins_per_channel
    if bins < 2:
        raise InstanceError("bins_per_channel must be at least 2")
    # foreground in one corner bin of the color cube, plain background in the
    # opposite corner: the normalized-color affinity drop between the two is
    # as large as the color cube allows, and is the only systematic one
    fg_color = _bin_color((0, 0, 0), bins)
    fg_bin = _quantize_color(fg_color, bins)
    bg_color_far = _bin_color((bins - 1, bins - 1, bins - 1), bins)
    jitter = min(0.03, 0.3 / bins)   # stays inside the color's bin

    frames = []
    feat_rows, box_rows, hist_blocks = [], [], []

    for f in range(spec.n_frames):
        rects = _rects(rng, spec.m_box)
        if spec.bg_mode == "video":
            bg_center = bg_base + 0.05 * rng.standard_normal(spec.d_feat)
            bg_color = bg_color_far
        elif spec.bg_mode == "image":
            shift = rng.standard_normal(spec.d_feat)
            shift -= (shift @ u) * u
            norm = np.linalg.norm(shift)
            if norm > 0:
                shift *= 0.7 * spec.separation / norm
            bg_center = bg_base + shift
            # a fresh background bin per frame, kept in the far half of the
            # cube so it never collides with the foreground corner
            bg_color = _bin_color(rng.integers(bins // 2, bins, size=3), bins)
        else:
            raise InstanceError("bg_mode must be 'video' or 'image'")

        # roles per local index: foreground first, then in-box background
        # (distractors at the tail of that span), then the outside ones
        n_bg_in = n_in_box - n_fg
        pos = np.zeros((spec.n_sp, 2))
        pos[:n_in_box] = _inside(rng, rects[0], n_in_box)
        colors = np.zeros((spec.n_sp, 3))
        feats = np.zeros((spec.n_sp, spec.d_feat))
        sal = np.zeros(spec.n_sp)

        is_fg = np.zeros(spec.n_sp, dtype=int)
        is_fg[:n_fg] = 1
        colors[:n_fg] = fg_color
        feats[:n_fg] = fg_center + spec.noise * rng.standard_normal(
            (n_fg, spec.d_feat))
        sal[:n_fg] = spec.fg_saliency

        bg_in = np.arange(n_fg, n_in_box)
        distr_in = bg_in[n_bg_in - spec.n_distractors_in:]
        plain_in = bg_in[: n_bg_in - spec.n_distractors_in]
        outside = np.arange(n_in_box, spec.n_sp)
        distr_out = outside[: spec.n_distractors_out]
        plain_out = outside[spec.n_distractors_out:]

        n_bins_total = bins ** 3

        def distractor_color(j):
            # a color bin that rotates with the frame index: the
            # histogram-matching term is the only part of the objective
            # that can tell these superpixels from real foreground
            b = (11 * int(j) + 13 * f) % n_bins_total
            if b == fg_bin:
                b = (b + 1) % n_bins_total
            return _bin_color(
                (b // (bins * bins), (b // bins) % bins, b % bins), bins)

        for j in plain_in:
            colors[j] = bg_color
            feats[j] = bg_center + spec.noise * rng.standard_normal(spec.d_feat)
            sal[j] = spec.bg_saliency
        for j in distr_in:
            colors[j] = distractor_color(j)
            feats[j] = distr_in_center + spec.noise * rng.standard_normal(spec.d_feat)
            sal[j] = spec.distractor_saliency
        for j in distr_out:
            colors[j] = distractor_color(j)
            feats[j] = lure_center + spec.noise * rng.standard_normal(spec.d_feat)
            sal[j] = spec.distractor_saliency
        for j in plain_out:
            colors[j] = bg_color
            feats[j] = bg_center + spec.noise * rng.standard_normal(spec.d_feat)
            sal[j] = spec.bg_saliency
        colors += jitter * rng.uniform(-1, 1, size=(spec.n_sp, 3))
        sal = np.clip(sal + spec.saliency_noise * rng.standard_normal(spec.n_sp),
                      0.02, 0.98)

        # slice the covered outside superpixels into near-equal decoy chunks;
        # the distractors come first, so the lure fills the first decoy, and
        # the uncovered tail floats free of every rectangle
        memberships = [list(range(n_in_box))]
        n_dec = spec.m_box - 1
        covered_outside = outside[: len(outside) - n_uncovered] if n_dec else outside[:0]
        n_cov = len(covered_outside)
        sizes = [n_cov // n_dec + (1 if d < n_cov % n_dec else 0)
                 for d in range(n_dec)]
        if spec.n_distractors_out and (not sizes or spec.n_distractors_out > sizes[0]):
            raise InstanceError("more out-of-box distractors than the first decoy holds")
        decoys, start = [], 0
        for d in range(n_dec):
            decoys.append([int(j) for j in covered_outside[start:start + sizes[d]]])
            start += sizes[d]
        for d, members in enumerate(decoys):
            for j in members:
                pos[j] = _inside(rng, rects[d + 1], 1)[0]
        for j in outside[len(covered_outside):]:
            pos[j] = np.array([rng.uniform(50, 99), rng.uniform(60, 99)]) / IMAGE_SIZE
        memberships.extend(decoys)

        if spec.scramble_memberships > 0:
            for i in range(spec.m_box):
                for j in range(spec.n_sp):
                    if rng.random() < spec.scramble_memberships:
                        if j in memberships[i]:
                            if len(memberships[i]) > 1:
                                memberships[i].remove(j)
                        else:
                            memberships[i].append(j)
                memberships[i] = sorted(memberships[i])

        hist = np.zeros((bins ** 3, spec.n_sp))
        for j in range(spec.n_sp):
            hist[_quantize_color(colors[j], bins), j] = spec.pixel_count

        box_sal = np.array([float(np.mean(sal[m])) for m in memberships])
        if spec.n_distractors_out:
            # The lure rectangle covers mostly empty area, so pooling
            # saliency over its pixels dilutes the bright members away.
            box_sal[1] = spec.bg_saliency
        box_feats = np.array([
            feats[m].mean(axis=0) + spec.box_noise * rng.standard_normal(spec.d_feat)
            for m in memberships
        ])

        frames.append(Frame(
            frame_id="frame%03d" % f,
            sp_positions=pos,
            sp_colors=colors,
            sp_pixel_counts=np.full(spec.n_sp, float(spec.pixel_count)),
            memberships=tuple(np.asarray(m, dtype=int) for m in memberships),
            box_rects=rects,
            sp_saliency_raw=sal,
            box_saliency_raw=np.clip(box_sal, 0.0, 1.0),
            gt_box=np.asarray(rects[0], dtype=float),
            gt_mask=is_fg,
        ))
        feat_rows.append(feats)
        box_rows.append(box_feats)
        hist_blocks.append(hist)

    sp_mat = np.vstack(feat_rows)
    if spec.kernel_features:
        sp_block = FeatureBlock(PRECOMPUTED_KERNEL, sp_mat @ sp_mat.T)
    else:
        sp_block = FeatureBlock(RAW_FEATURES, sp_mat)
    inst = ProblemInstance(
        frames=tuple(frames),
        sp_features=sp_block,
        box_features=FeatureBlock(RAW_FEATURES, np.vstack(box_rows)),
        histograms=HistogramBlock(tuple(hist_blocks)),
        hyper=hyper,
    )
    return validate_instance(inst)


def toy_instance():
    """The worked 5-superpixel, 2-box, single-frame example.

    Box 1 holds superpixels {1, 3, 4} and box 2 holds {1, 2, 4} (1-indexed);
    superpixels 1 and 4 sit in both boxes, 5 in none. The only binary
    solutions are (box 1, mask {3}) and (box 2, mask {2}); features and
    saliency are arranged so box 1 wins. eta is set to 1 - gamma here, which
    makes the box rows' upper bound mirror its lower bound.
    """
    positions = np.array([
        [0.30, 0.40],
        [0.45, 0.30],
        [0.25, 0.55],
        [0.35, 0.60],
        [0.80, 0.85],
    ])
    colors = np.array([
        [0.50, 0.50, 0.50],
        [0.20, 0.30, 0.70],
        [0.90, 0.20, 0.15],
        [0.55, 0.45, 0.50],
        [0.10, 0.80, 0.40],
    ])
    # superpixel 3 (index 2) is the intended foreground: distinctive feature
    # direction and high saliency; superpixel 2 is its competitor
    feats = np.array([
        [0.2, 0.1],
        [-1.0, 0.8],
        [1.6, 1.2],
        [0.1, -0.2],
        [-0.3, -0.1],
    ])
    sal = np.array([0.45, 0.25, 0.90, 0.40, 0.10])
    memberships = (np.array([0, 2, 3]), np.array([0, 1, 3]))
    rects = np.array([
        [20.0, 30.0, 45.0, 70.0],
        [25.0, 20.0, 55.0, 65.0],
    ])
    box_feats = np.array([
        [1.2, 0.9],
        [-0.8, 0.5],
    ])
    box_sal = np.array([0.80, 0.25])
    counts = np.array([12.0, 9.0, 11.0, 10.0, 8.0])
    bins = 3
    hist = np.zeros((bins ** 3, 5))
    for j in range(5):
        hist[_quantize_color(colors[j], bins), j] = counts[j]

    frame = Frame(
        frame_id="toy",
        sp_positions=positions,
        sp_colors=colors,
        sp_pixel_counts=counts,
        memberships=memberships,
        box_rects=rects,
        sp_saliency_raw=sal,
        box_saliency_raw=box_sal,
        gt_box=rects[0].copy(),
        gt_mask=np.array([0, 0, 1, 0, 0]),
    )
    hyper = Hyperparameters(eta=0.7)
    inst = ProblemInstance(
        frames=(frame,),
        sp_features=FeatureBlock(RAW_FEATURES, feats),
        box_features=FeatureBlock(RAW_FEATURES, box_feats),
        histograms=HistogramBlock((hist,)),
        hyper=hyper,
    )
    return validate_instance(inst)
