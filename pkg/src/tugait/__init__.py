"""Predict Timed Up and Go (TUG) scores from gait characteristics.

The package estimates copula entropy nonparametrically to rank
feature-score associations, extracts nine gait characteristics from 3D
pose time series into 18-dimensional feature vectors, and trains and
evaluates linear-regression and support-vector-regression predictors
under a repeated-random-split protocol with MAE and diagnosis-accuracy
metrics at the clinical fall-risk cutoff.
"""

from .copent import (
    DEFAULT_K,
    EntropyEstimate,
    copula_entropy,
    empirical_copula,
    knn_entropy,
    mutual_information,
)
from .errors import (
    ConvergenceError,
    DegenerateSampleError,
    IncompleteFeatureError,
    InsufficientGaitEventsError,
    InvalidInputError,
    ParameterError,
    ParseError,
    SchemaError,
    SingularDesignError,
    StationarySubjectError,
    TooShortError,
    TugaitError,
    UndefinedSpectrumError,
)
from .gaitfeat import (
    CHARACTERISTIC_NAMES,
    FEATURE_NAMES,
    BodyFrameSignal,
    FeatureVector,
    GaitCharacteristics,
    PoseSeries,
    aggregate_features,
    compute_characteristics,
    detect_strides,
    extract_features,
    segment_windows,
    spectral_features,
    to_body_frame,
)
from .models import (
    KernelSpec,
    LRModel,
    SVRModel,
    fit_lr,
    fit_svr,
    kernel_eval,
    load_model,
    predict_lr,
    predict_svr,
    save_model,
    tune_svr,
)
from .pipeline import (
    Dataset,
    DependenceReport,
    EvaluationReport,
    diagnosis_accuracy,
    evaluate,
    mae,
    rank_features,
    select_features,
    split_indices,
)
from .synthgait import (
    CohortParams,
    WalkerParams,
    cohort_videos,
    gaussian_samples,
    generate_cohort,
    generate_walker,
    generate_walker_with_truth,
)

__version__ = "0.1.0"
