"""Data-augmentation samplers for robust multivariate regression with missing responses."""

from .data_model import (
    ChainMeta,
    ChainOutput,
    Dataset,
    LatentWeights,
    Prior,
    RegressionState,
    drift_value,
    residual_quadratic_form,
)
from .diagnostics import (
    compare_da_dai,
    drift_trace,
    ess_multivariate,
    ess_report,
    ess_univariate,
    functional_matrix,
)
from .errors import *  # noqa: F401,F403
from .mixing import (
    FAMILIES,
    MixingSpec,
    check_h2,
    classify_origin,
    make_mixing,
    sample_tilted,
    tilted_moment_oracle,
    verdict_theorem1,
)
from .samplers import (
    DaConfig,
    DaiConfig,
    i_step,
    impute_conditional_normal,
    p_step_full,
    p_step_monotone,
    run_da,
    run_dai,
)
from .missing_structures import (
    MissingStructure,
    check_h1,
    check_proposition1,
    decompose,
    is_monotone,
    precedes,
    try_monotonize,
)

__version__ = "0.1.0"
