"""Scikit-learn style front end for the whole pipeline.

ForegroundClustering bundles model building, solving, rounding, and
evaluation behind the usual fit / fit_predict / get_params surface. Every
hyperparameter defaults to None, meaning "take the value from the instance
manifest (or the built-in defaults)"; anything set explicitly wins. The
ablation vocabulary maps each named baseline to hyperparameter zeroing on
the one shared objective, never to a separate objective implementation.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator

from .constraints import build_constraints
from .evaluation import evaluate
from .instance import ProblemInstance, resolve_hyper
from .qp import assemble_qp, build_parts
from .rounding import restrict_masks_to_boxes, round_segmentation, select_boxes
from .solver import SolverSettings, solve

ABLATIONS = ("full", "loc+seg", "seg-only", "loc-only", "sal-only")

HYPER_PARAM_NAMES = (
    "beta_s", "beta_b", "kappa", "lambda_", "alpha", "mu", "nu",
    "gamma", "eta", "lambda_p", "lambda_c", "saliency_floor",
    "f_scale", "f_pairs", "knn",
)


def ablation_overrides(name):
    """Hyperparameter zeroing for each named baseline."""
    if name in (None, "full"):
        return {}
    if name == "loc+seg":
        return {"kappa": 0.0}
    if name == "seg-only":
        return {"kappa": 0.0, "lambda_": 0.0}
    if name == "loc-only":
        # y is pinned to zero (see fit), which needs gamma = 0 to stay feasible
        return {"kappa": 0.0, "alpha": 0.0, "mu": 0.0, "gamma": 0.0}
    if name == "sal-only":
        return {}
    raise ValueError("unknown ablation '%s' (choose from %s)"
                     % (name, ", ".join(ABLATIONS)))


class ForegroundClustering(BaseEstimator):
    """Joint foreground segmentation and box selection on a ProblemInstance.

    Parameters default to None = "defer to the instance's hyper block".

    Attributes after fit: `solution_` (solver output), `y_` / `z_` (relaxed
    variables), `selected_boxes_`, `masks_`, `labels_` (global binary
    superpixel labeling), `objective_`, `diagnostics_`.
    """

    def __init__(self, beta_s=None, beta_b=None, kappa=None, lambda_=None,
                 alpha=None, mu=None, nu=None, gamma=None, eta=None,
                 lambda_p=None, lambda_c=None, saliency_floor=None,
                 f_scale=None, f_pairs=None, knn=None,
                 ablate=None, mask_in_box=False, n_thresholds=30,
                 tol_feas=1e-6, tol_kkt=1e-6, max_iter=20000, seed=None):
        self.beta_s = beta_s
        self.beta_b = beta_b
        self.kappa = kappa
        self.lambda_ = lambda_
        self.alpha = alpha
        self.mu = mu
        self.nu = nu
        self.gamma = gamma
        self.eta = eta
        self.lambda_p = lambda_p
        self.lambda_c = lambda_c
        self.saliency_floor = saliency_floor
        self.f_scale = f_scale
        self.f_pairs = f_pairs
        self.knn = knn
        self.ablate = ablate
        self.mask_in_box = mask_in_box
        self.n_thresholds = n_thresholds
        self.tol_feas = tol_feas
        self.tol_kkt = tol_kkt
        self.max_iter = max_iter
        self.seed = seed

    def _resolve_hyper(self, instance):
        explicit = {name: getattr(self, name) for name in HYPER_PARAM_NAMES}
        hyper = resolve_hyper(instance.hyper, explicit)
        overrides = ablation_overrides(self.ablate)
        if overrides:
            hyper = replace(hyper, **overrides)
            hyper.validate()
        return hyper

    def fit(self, X, y=None):
        """Solve the instance X (a ProblemInstance); y is ignored."""
        if not isinstance(X, ProblemInstance):
            raise TypeError("fit expects a ProblemInstance")
        instance = X
        hyper = self._resolve_hyper(instance)
        instance = replace(instance, hyper=hyper)

        if self.ablate == "sal-only":
            return self._fit_saliency_baseline(instance)

        parts = build_parts(instance)
        cs = build_constraints(instance)
        if self.ablate == "loc-only":
            cs.upper[: instance.n_sp_total] = 0.0
        qp = assemble_qp(instance, parts.D_s, parts.F, parts.L_global,
                         parts.D_b, parts.s_s, parts.s_b,
                         constraint_set=cs)
        settings = SolverSettings(tol_feas=self.tol_feas, tol_kkt=self.tol_kkt,
                                  max_iter=self.max_iter, seed=self.seed)
        sol = solve(qp, settings)

        self.hyper_ = hyper
        self.parts_ = parts
        self.qp_ = qp
        self.solution_ = sol
        self.y_, self.z_ = cs.layout.split(sol.v)
        self.selected_boxes_ = select_boxes(sol.v, instance)
        masks = round_segmentation(sol.v, instance, parts.laplacians,
                                   n_thresholds=self.n_thresholds)
        if self.mask_in_box:
            masks = restrict_masks_to_boxes(masks, self.selected_boxes_, instance)
        self.masks_ = masks
        self.labels_ = np.concatenate(masks)
        self.objective_ = sol.objective
        self.diagnostics_ = dict(sol.diagnostics,
                                 status=sol.status,
                                 iterations=sol.iterations,
                                 primal_residual=sol.primal_residual,
                                 dual_residual=sol.dual_residual)
        self.instance_ = instance
        return self

    def _fit_saliency_baseline(self, instance):
        """Per-frame most-salient box; masks are the winning box's superpixels."""
        boxes = []
        masks = []
        z = np.zeros(instance.m_box_total)
        for f, frame in enumerate(instance.frames):
            costs = -np.log(np.maximum(frame.box_saliency_raw,
                                       instance.hyper.saliency_floor))
            pick = int(np.argmin(costs))
            boxes.append(pick)
            z[instance.box_offsets[f] + pick] = 1.0
            mask = np.zeros(frame.n_sp, dtype=int)
            mask[frame.memberships[pick]] = 1
            masks.append(mask)
        self.hyper_ = instance.hyper
        self.parts_ = None
        self.qp_ = None
        self.solution_ = None
        self.y_ = np.concatenate(masks).astype(float)
        self.z_ = z
        self.selected_boxes_ = boxes
        self.masks_ = masks
        self.labels_ = np.concatenate(masks)
        self.objective_ = None
        self.diagnostics_ = {"status": "optimal", "baseline": "sal-only"}
        self.instance_ = instance
        return self

    def fit_predict(self, X, y=None):
        """Fit and return the global binary superpixel labeling."""
        return self.fit(X).labels_

    def score(self, X=None, y=None):
        """Mean mask IoU against the instance's ground truth (needs gt masks)."""
        report = self.evaluate()
        if report.mean_iou_mask is None:
            raise ValueError("instance has no ground-truth masks to score against")
        return report.mean_iou_mask

    def evaluate(self):
        """EvaluationReport for the fitted instance."""
        if not hasattr(self, "masks_"):
            raise ValueError("call fit first")
        return evaluate(self.instance_, self.selected_boxes_, self.masks_)
