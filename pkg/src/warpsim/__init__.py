"""Learned bilinear similarity over warping alignments for multivariate
time series, with an L1-budgeted linear classifier on landmark features."""

__version__ = "0.1.0"

from .align import Alignment, affinity_matrix, brute_force_align, dtw_align
from .classifier import (
    ClassModel,
    OvrModel,
    Separator,
    learn_separator,
    ovr_predict,
    ovr_predict_dataset,
    ovr_train,
    predict_binary,
    project_l1_ball,
)
from .core import (
    Dataset,
    LabeledSeries,
    TimeSeries,
    load_dataset,
    normalize_series,
    save_dataset,
    split_dataset,
)
from .evaluate import (
    BoundReport,
    EvalReport,
    Grid,
    accuracy,
    bound_report,
    confidence_interval,
    cross_validate,
    generalization_bound_rhs,
    landmark_count_bound,
    nn1_classify,
    pca_project,
)
from .landmarks import LandmarkSet, select_dselect, select_kmedoids, select_random
from .metric import (
    MetricProblem,
    SolverOptions,
    SolverReport,
    build_problem,
    example_loss,
    learn_metric,
    objective,
    subgradient,
)
from .sim import (
    SimilarityModel,
    alignment_feature,
    alignment_features,
    feature_map,
    feature_matrix,
    similarity,
)
from .synth import make_synthetic, make_synthetic_split
