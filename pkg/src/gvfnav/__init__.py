"""Guiding-vector-field navigation: composite and switching vector fields
for path following with reactive collision avoidance, plus a simulation
engine and a numerical verification toolkit."""

from .analysis import (ConditionReport, Equilibrium, classify_equilibrium,
                       condition_report, field_jacobian, find_equilibria,
                       grid_minima_equilibria, hessian_sign_report,
                       mixed_area_equilibria, poincare_index)
from .blending import (BumpPair, FieldStack, bump_values, composite_field,
                       composite_many, equal_level)
from .engine import (RobotModel, Trajectory, integrate, model_derivative,
                     reactive_flow)
from .errors import (ConfigError, ConvergenceError, FitError, GvfError,
                     IndexUndefinedError, PreconditionError, ScenarioError,
                     ShapeError, SingularFieldError)
from .fields import (noise_perturbed_moving_field, normalize, path_field_2d,
                     path_field_3d, reactive_field_2d, reactive_field_3d,
                     reactive_field_moving, rot90)
from .monitors import (MonitorReport, check_dwell, check_error_bound,
                       check_lyapunov, check_monotone_outside,
                       check_penetrability, check_safety,
                       estimate_error_bound)
from .scenario import Scenario, build_scenario, load_scenario, save_scenario, serialize
from .shapes import (ImplicitFunction, Obstacle, PathSpec, Region,
                     fit_rbf_surface, make_shape, region_of)
from .switching import (SwitchingConfig, SwitchingPlan, SwitchState,
                        choose_delta, dwell_parameters, exit_windows,
                        path_intersections, perturbed_reactive_field,
                        prepare_switching, switch_step, switched_field)

__version__ = "0.1.0"
