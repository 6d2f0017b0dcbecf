"""fairaug: intersectional fairness auditing and bias-weighted augmentation.

The library measures how a classifier behaves across class-by-environment
subgroups (lighting and background conditions derived from the images
themselves), computes inverse-representation augmentation weights, and
materializes a deterministic weight-adapted augmented dataset.
"""

__version__ = "0.1.0"

from .attributes import (
    CannyParams,
    categorize,
    edge_density,
    extract_all,
    extract_attributes,
    lighting_score,
)
from .attribution import (
    condition_similarity,
    env_attribution_share,
    mass_split,
)
from .augment import (
    AugmentationParams,
    apply_lighting,
    apply_noise,
    apply_occlusion,
    apply_spatial,
    augment_dataset,
    sample_params,
)
from .errors import DataError, DecodeError, ManifestError
from .evaluation import (
    FairnessReport,
    MetricCell,
    PredictionRecord,
    accuracy_range,
    confusion_matrix,
    disparity_reduction,
    evaluate,
    flag_bias,
    load_predictions,
)
from .fixtures import FixtureSpec, generate_image, generate_predictions
from .intersections import (
    ClassWeights,
    IntersectionKey,
    IntersectionStats,
    compute_class_weights,
    enumerate_intersections,
    representation_correlation,
)
from .manifest import (
    EnvAttributes,
    Manifest,
    SampleRecord,
    load_manifest,
    write_manifest,
)
from .rng import GENERATOR_NAME, SampleRng
from .stats import TTestResult, mean_std, paired_t_test, pearson, t_cdf

__all__ = [
    "AugmentationParams",
    "CannyParams",
    "ClassWeights",
    "DataError",
    "DecodeError",
    "EnvAttributes",
    "FairnessReport",
    "FixtureSpec",
    "GENERATOR_NAME",
    "IntersectionKey",
    "IntersectionStats",
    "Manifest",
    "ManifestError",
    "MetricCell",
    "PredictionRecord",
    "SampleRecord",
    "SampleRng",
    "TTestResult",
    "accuracy_range",
    "apply_lighting",
    "apply_noise",
    "apply_occlusion",
    "apply_spatial",
    "augment_dataset",
    "categorize",
    "compute_class_weights",
    "condition_similarity",
    "confusion_matrix",
    "disparity_reduction",
    "edge_density",
    "enumerate_intersections",
    "env_attribution_share",
    "evaluate",
    "extract_all",
    "extract_attributes",
    "flag_bias",
    "generate_image",
    "generate_predictions",
    "lighting_score",
    "load_manifest",
    "load_predictions",
    "mass_split",
    "mean_std",
    "paired_t_test",
    "pearson",
    "representation_correlation",
    "sample_params",
    "t_cdf",
    "write_manifest",
]
