"""Point-level supervision toolkit for temporal action detection.

Pipeline: unsupervised frame sampling, (human or oracle) annotation of the
sampled frames, training of a snippet scoring model with point, video, and
prototype-contrastive losses plus anchored pseudo-labeling, instance
generation with OIC scoring and soft-NMS, mAP evaluation, and annotation
cost estimation.
"""

from .corpus import (
    AAPLLabelSet,
    DatasetManifest,
    FeatureSequence,
    IndexedLabels,
    VideoRecord,
    load_features,
    load_labels,
    load_manifest,
    rescale_features,
    sample_to_train_length,
    save_labels,
    save_manifest,
    write_features,
)
from .detection import (
    ActionInstance,
    DetectorConfig,
    detect,
    detect_dataset,
    generate_candidates,
    oic_score,
    soft_nms,
    upsample_scores,
)
from .evaluation import EvalReport, average_precision, evaluate, tiou
from .losses import (
    ContrastiveConfig,
    LossReport,
    PrototypeBank,
    VideoLossConfig,
    bottomk_pool_logit,
    contrastive_loss,
    init_prototypes,
    point_loss,
    topk_pool_logit,
    update_prototypes,
    video_label,
    video_loss,
)
from .model import (
    AdamState,
    ModelParams,
    ScoringOutputs,
    adam_step,
    backward,
    forward,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .pseudolabels import (
    PseudoLabelConfig,
    PseudoLabelSet,
    apply_pseudo_labels,
    generate_pseudo_labels,
)
from .sampling import (
    SamplingPlan,
    annotate_oracle,
    kmeans,
    pca_reduce,
    sample_clustering,
    sample_random,
    sample_regular,
)
from .synthetic import make_synthetic_dataset
from .training import TrainConfig, TrainReport, train

__version__ = "0.1.0"
