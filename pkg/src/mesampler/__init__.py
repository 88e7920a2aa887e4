"""Query-efficient black-box adversarial attacks on video classifiers.

Gradient directions are estimated from paired loss queries shaped by a
motion-aware noise prior: raw Gaussian noise is rearranged by per-interval
motion maps (block-matched motion vectors or dense flow) so that the noise
structure follows the video's movement. A sign-PGD loop drives the video
toward misclassification under an L-inf bound and a query budget.
"""

from .attack import (
    AttackConfig,
    AttackResult,
    CleanPredictionError,
    run_attack,
    step_video,
    stop_condition,
)
from .estimator import EstimatorState, GradEstimate, grad_est, nes_estimate, update_g
from .harness import (
    ExperimentSpec,
    MetricsReport,
    export_loss_curves,
    ingest_frames,
    make_oracle,
    parse_loss_curves,
    run_batch,
)
from .losses import cross_entropy, get_loss_fn, logits_margin, probability_margin, targeted_margin
from .motion import (
    MotionMap,
    MotionSet,
    MotionStack,
    accumulate_interval,
    build_motion_set,
    estimate_block_motion,
    estimate_optical_flow,
    sample_motion_stack,
)
from .oracle import (
    Oracle,
    OracleError,
    OracleProtocolError,
    OracleTransportError,
    RemoteOracle,
    ToyLinearSoftmax,
    ToyMotionSensitive,
)
from .sampler import (
    SparkedPrior,
    build_prior_source,
    me_sample,
    multi_noise,
    one_noise,
    s_value_map,
    to_lookup,
    u_sample_map,
)
from .tensor import (
    ShapeMismatchError,
    VT01DtypeError,
    VT01Error,
    VT01MagicError,
    clip_to_ball,
    linf_dist,
    read_vt01,
    sign,
    validate_video,
    write_vt01,
)

__version__ = "0.1.0"
