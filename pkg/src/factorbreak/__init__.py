"""Change-point estimation and testing for high-dimensional factor panels.

The pipeline: estimate loading spans from lagged cross-moment
eigenstructure (``loading``), locate a break by minimizing the
projected-moment objective over a fraction grid (``locate``), and decide
whether a break exists at all with a self-normalized variance test whose
pivotal critical values are simulated once and cached (``sntest``).
``dgp`` and ``bench`` provide the simulation engine and the Monte Carlo
harness; ``cli`` ties everything together for end users.
"""

from .bench import CellSpec, ExperimentPlan, run_power_location_experiment, run_size_experiment
from .dgp import DgpSpec, DgpTruth, generate
from .errors import FactorBreakError
from .loading import (
    EigenSummary,
    LoadingEstimate,
    boundary_loadings,
    eigen_decompose,
    estimate_factor_count,
    estimate_loading,
)
from .locate import (
    ChangePointFit,
    ObjectiveTrace,
    locate_change_point,
    objective,
    residual_panel,
)
from .moments import LaggedMomentSet, SplitSpec, lagged_cross_moment, pooled_moment
from .panel import FractionGrid, TimeSeriesPanel, center_panel, load_panel, save_panel
from .sntest import (
    CriticalValueTable,
    ProjectedSeries,
    SnTestResult,
    choose_projection,
    get_critical_values,
    segment_multiple,
    simulate_critical_values,
    sn_statistic,
    test_change_point,
    window_variance,
)
from .subspace import SubspaceBasis, normalize_signs, orthogonal_complement, subspace_distance

__version__ = "0.1.0"

__all__ = [
    "CellSpec",
    "ChangePointFit",
    "CriticalValueTable",
    "DgpSpec",
    "DgpTruth",
    "EigenSummary",
    "ExperimentPlan",
    "FactorBreakError",
    "FractionGrid",
    "LaggedMomentSet",
    "LoadingEstimate",
    "ObjectiveTrace",
    "ProjectedSeries",
    "SnTestResult",
    "SplitSpec",
    "SubspaceBasis",
    "TimeSeriesPanel",
    "boundary_loadings",
    "center_panel",
    "choose_projection",
    "eigen_decompose",
    "estimate_factor_count",
    "estimate_loading",
    "generate",
    "get_critical_values",
    "lagged_cross_moment",
    "load_panel",
    "locate_change_point",
    "normalize_signs",
    "objective",
    "orthogonal_complement",
    "pooled_moment",
    "residual_panel",
    "run_power_location_experiment",
    "run_size_experiment",
    "save_panel",
    "segment_multiple",
    "simulate_critical_values",
    "sn_statistic",
    "subspace_distance",
    "test_change_point",
    "window_variance",
]
