"""Factor risk measures on empirical and discrete joint distributions.

Risk is measured relative to a factor vector: rho(X, W) depends only on
the joint law of the loss X and the factors W.  The package covers the
scenario-distortion (Choquet) family, quantile measures such as
VaR-of-conditional-VaR and CoVaR, linear measures such as MES, coherent
compositions built on conditional expected shortfall, comonotonic risk
sharing between distortion agents, and a regression-based evaluation
pipeline with Diff heatmap output.
"""

from .core import (
    ConditionalLawFamily,
    DiscreteJointDistribution,
    JointSample,
    Scenario,
    ScenarioPartition,
    StepCDF,
    from_sample,
    marginal,
)
from .scalar import (
    DistortionFunction,
    distortion_rho,
    es,
    es_distortion,
    esssup,
    identity_distortion,
    piecewise_linear_distortion,
    var,
    var_distortion,
)
from .conditioning import (
    LevelMap,
    VarBox,
    partition_discrete,
    partition_quantile_boxes,
    tail_box,
    var_box_event,
)
from .distortion import (
    ScenarioDistortion,
    choquet_factor,
    compose_es_mean,
    compose_var_distortion,
    condition_a_check,
    es_on_event,
    psi_custom,
    psi_es_on_box,
    psi_indicator_var_var,
    psi_lambda_of_var,
    psi_mean,
    psi_mean_of_es,
    psi_mean_of_var,
)
from .quantile import (
    IncreasingSetPredicate,
    coes,
    covar,
    pred_custom,
    pred_esssup_var,
    pred_single_scenario,
    pred_var_of_var,
    quantile_factor,
)
from .linear import ScenarioWeighting, linear_factor, mes
from .coherent import (
    DensityFamily,
    coherent_sup,
    es_composition,
    es_tail_density,
    hl_bound,
)
from .sharing import (
    PiecewiseLinearAllocation,
    allocation_value_check,
    inf_convolution,
)
from .regression import (
    DiffGrid,
    DiscreteFactorSpec,
    GaussianFactorSpec,
    RegressionFit,
    diff_grid,
    find_matching_q,
    gaussian_rho,
    norm_inv,
    ols_fit,
    plain_var,
    simulate,
)
from .errors import (
    DataFormatError,
    EmptyEventError,
    FactorRiskError,
    NullQuantileEventError,
    RankDeficientError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
