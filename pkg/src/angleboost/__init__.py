"""Angle-based cost-sensitive multicategory boosting.

Classes are coded as the K vertices of a regular simplex in R^(K-1); a
classifier ``f`` predicts the vertex with the largest inner product.  The
package provides the simplex code, cost-weighted margin losses, Bayes-rule and
Fisher-consistency tools, cost-weighted trees, two boosting algorithms and a
replicated experiment runner.
"""

__version__ = "0.1.0"

from .simplex import SimplexCode, build_simplex, predict, scores
from .loss import LOSS_KINDS, CostMatrix, MarginLoss, cs_loss, empirical_risk, loss_derivative, loss_value
from .bayes import (FisherReport, SingularCostMatrixError, bayes_rule, check_fisher_consistency,
                    conditional_risk, expected_costs_from_f, minimize_conditional_risk,
                    recover_probabilities)
from .tree import Tree, TreeLearner, fit_tree, tree_predict
from .boost import (BoostConfig, Ensemble, LineSearchError, adaboost_fit, ensemble_f,
                    ensemble_predict, fit, logitboost_fit)
from .data import (Dataset, GeneratorSpec, SchemaError, gen_four_class, gen_waveform, generate,
                   load_csv, standardize)
from .evaluate import (CostCurve, CsvSource, ExperimentSpec, builtin_cost, resolve_cost,
                       run_experiment, test_cost)
