"""Constellation shaping for message-level semantic communication.

Minimizes a union bound on average semantic loss by projected gradient
descent on the power sphere, and validates the bound against Monte Carlo
AWGN simulation with maximum-likelihood detection.
"""

from .baselines import BaselineSpec, build_baseline
from .channel import (
    ChannelConfig,
    SimEstimate,
    SweepPoint,
    db_to_linear,
    estimate_semantic_loss,
    ml_detect,
    sweep,
    transmit,
)
from .errors import CoincidentPointsError, SemShapeError, ValidationError
from .formats import (
    Constellation,
    MessageSet,
    ShapingReport,
    SimilarityMatrix,
    load_constellation,
    load_report,
    load_similarity,
    save_constellation,
    save_report,
    save_similarity,
)
from .objective import (
    ObjectiveContext,
    PairWeightMatrix,
    StackedSignal,
    bound_from_stacked,
    build_pair_weights,
    descent_direction,
    pairwise_error_prob,
    q_function,
    semantic_loss_bound,
    stack,
    unstack,
)
from .shaper import (
    LineSearchSettings,
    ShapingConfig,
    ShapingResult,
    line_search,
    project,
    random_init,
    rotate_update,
    shape,
    shape_once,
)

__version__ = "0.1.0"
