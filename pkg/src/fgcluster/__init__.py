"""Joint foreground segmentation and localization by discriminative clustering."""

__version__ = "0.1.0"

from .discriminative import (
    DiscriminativeMatrix, build_D_kernel, build_D_linear, center_features,
    chi2_kernel,
)
from .estimator import ForegroundClustering, ablation_overrides
from .evaluation import EvaluationReport, corloc, evaluate, iou_mask, iou_rect
from .foreground import ForegroundMatrix, build_F
from .instance import (
    FGCM_MAGIC, Frame, FeatureBlock, HistogramBlock, Hyperparameters,
    InstanceError, ProblemInstance, load_instance, read_fgcm, resolve_hyper,
    saliency_cost, save_instance, validate_instance, write_fgcm,
)
from .constraints import (
    ConstraintSet, VarLayout, build_constraints, build_projection,
    check_feasible, dump_constraints, feasible_point,
)
from .qp import (
    QuadraticProgram, assemble_qp, binary_feasible, brute_force, build_parts,
    build_qp,
)
from .rounding import round_frame, round_segmentation, select_boxes
from .similarity import (
    FrameLaplacian, build_L, build_W, ncut_score, stack_laplacians,
)
from .solver import Solution, SolverSettings, solve
from .synth import SynthSpec, synth_instance, toy_instance

__all__ = [
    "ConstraintSet", "DiscriminativeMatrix", "EvaluationReport",
    "FGCM_MAGIC", "FeatureBlock", "ForegroundClustering", "ForegroundMatrix",
    "Frame", "FrameLaplacian", "HistogramBlock", "Hyperparameters",
    "InstanceError", "ProblemInstance", "QuadraticProgram", "Solution",
    "SolverSettings", "SynthSpec", "VarLayout", "ablation_overrides",
    "assemble_qp", "binary_feasible", "brute_force", "build_D_kernel",
    "build_D_linear", "build_F", "build_L", "build_W", "build_constraints",
    "build_parts", "build_projection", "build_qp", "center_features",
    "check_feasible", "chi2_kernel", "corloc", "dump_constraints", "evaluate",
    "feasible_point", "iou_mask", "iou_rect", "load_instance", "ncut_score",
    "read_fgcm", "resolve_hyper", "round_frame", "round_segmentation",
    "saliency_cost", "save_instance", "select_boxes", "solve",
    "stack_laplacians", "synth_instance", "toy_instance",
    "validate_instance", "write_fgcm",
]
