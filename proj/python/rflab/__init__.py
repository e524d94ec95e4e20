"""Random-forest regression laboratory.

Thin Python facade over the C++ core: randomized-partition regression
forests, closed-form and Monte Carlo same-cell probabilities, and the
risk/variance estimators used by the `rflab` command-line tool.
"""

from ._core import (
    BuilderConfig,
    Forest,
    RegressionModel,
    TrainingSet,
    breiman_builder,
    connection_mc,
    estimate_risk,
    grow_forest,
    parse_model,
    quantile_builder,
    sample_dataset,
    trees_needed,
    uniform_builder,
    uniform_connection_1d,
    uniform_connection_mc,
    uniform_connection_origin,
    uniform_grid_step_bound,
)

__all__ = [
    "BuilderConfig",
    "Forest",
    "RegressionModel",
    "TrainingSet",
    "breiman_builder",
    "connection_mc",
    "estimate_risk",
    "grow_forest",
    "parse_model",
    "quantile_builder",
    "sample_dataset",
    "trees_needed",
    "uniform_builder",
    "uniform_connection_1d",
    "uniform_connection_mc",
    "uniform_connection_origin",
    "uniform_grid_step_bound",
]

__version__ = "0.1.0"
