"""Closed-form spectral estimation of f-divergences from feature moments."""

from .divergences import (
    DivergenceSpec,
    MixingMeasure,
    NAMED_DIVERGENCES,
    divergence_from_flag,
    eval_h,
    make_divergence,
    nu_quadrature_integral,
)
from .exceptions import (
    DimensionGuard,
    DimensionMismatch,
    DivergedObjective,
    DomainError,
    EmptyDataset,
    FdivError,
    IndefiniteTangent,
    RejectionStall,
    SingularReference,
    TooFewSamples,
    UnsupportedAlpha,
)
from .features import (
    Chain,
    CircleEmbedding,
    ConstantAugmented,
    ExplicitBasis,
    FeatureMap,
    IdentityFeatures,
    KroneckerProduct,
    LinearReduction,
    NeuralOneLayer,
    OneHot,
    RandomReLU,
    TrigBasis,
    eval_features,
    feature_map_from_config,
)
from .moments import (
    ClassMoments,
    DatasetPair,
    MomentSet,
    class_conditional_moments,
    compute_moments,
    kronecker_moments,
    moments_from_features,
)
from .spectral import (
    EstimateReport,
    GeneralizedSpectrum,
    PotentialPair,
    debias_correction,
    estimate,
    estimate_from_moments,
    eval_potentials,
    fit_potentials,
    generalized_eig,
    potentials,
    quadrature_debias,
    quadrature_value,
    spectral_value,
)
from .mutual_info import (
    SoftmaxModel,
    mi_estimate,
    softmax_fit,
    softmax_score,
    variational_mi_objective,
)
from .baselines import (
    NewtonSoftmaxSolution,
    PearsonSolution,
    VariationalSolution,
    kde_log_density,
    kde_plugin,
    pearson_closed_form,
    pearson_report,
    quadratic_lift,
    softmax_newton,
    variational_kl,
)
from .feature_learning import (
    LearnerState,
    LinearLearnResult,
    MiLearnResult,
    NeuralTrainResult,
    TangentBound,
    learn_linear,
    mi_feature_learning,
    mm_linear_step,
    reduced_moment_set,
    sga_epoch,
    tangent_bound,
    train_neural,
)
from .estimators import (
    LinearFeatureLearner,
    MutualInformation,
    NeuralFeatureLearner,
    SoftmaxSpectral,
    SpectralDivergence,
)
from .harness import ExperimentConfig, run_experiment

__version__ = "0.1.0"
