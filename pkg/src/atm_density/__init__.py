"""Density estimation with adaptive monotone triangular transport maps."""
from .atm import (AtmConfig, ConfigError, CrossValidation, FitTrace, cross_validate_m,
                  fit_component, fit_conditional, fit_fixed_total_degree,
                  fit_linear_then_atm, fit_map)
from .basis import FeatureExpansion, eval_expansion, eval_expansion_partial_k
from .data import (Dataset, FoldPlan, InputError, Standardization, apply_statistics,
                   gen_fig1_mixture, gen_gauss, gen_lorenz96, gen_mog3, kfold, load_csv,
                   standardize, write_csv)
from .density import (LogDensityReport, conditional_log_density, invert,
                      negative_log_likelihood, pullback_log_density, sample)
from .document import DocumentError
from .multiindex import DownwardClosedSet, margin, reduced_margin
from .objective import (ObjectiveConfig, raw_objective, rectified_objective,
                        rectified_objective_grad, reduced_margin_scores)
from .optimizer import NumericalError, OptimOptions, OptimResult, minimize
from .quadrature import QuadratureError
from .rectifier import (MapComponent, RectifierInverse, eval_component,
                        eval_component_partial_k, eval_component_with_coeff_grad,
                        g_eval, g_inv, inverse_rectify)
from .transport import ComposedMap, InversionError, TriangularMap

__version__ = "0.1.0"
