"""Linear-response empowerment for continuous dynamical systems."""

from .capacity import (ChannelSpec, EmpowermentResult, LyapunovSpectrum,
                       PowerAllocation, capacity_nats, classic_empowerment,
                       controlled_lyapunov, empowerment_batch,
                       empowerment_from_matrix, generalized_empowerment,
                       kicked_cef, scaled_singular_values, water_fill)
from .config import RunConfig, parse_config
from .controller import (VARIANT_DEFAULTS, ControlPolicySpec, Rollout,
                         candidate_actions, first_crossing_time, greedy_action,
                         longest_hold, run_rollout, upright_mask)
from .estimators import EmpowermentController, EmpowermentTransformer
from .exceptions import (EmpowermentError, GridTooLarge, IndexOutOfRange,
                         NonFiniteState, NumericalFailure, ParseError,
                         SingularMassMatrix)
from .landscape import (ConvergenceRow, GridSpec, LandscapeGrid,
                        convergence_study, default_grid, evaluate_landscape)
from .model import (NoiseSpec, SystemModel, finite_diff_jacobian,
                    step_deterministic, step_stochastic, wrap_angle, wrap_state)
from .sensitivity import (VARIANTS, AutonomousRollout, HorizonSpec,
                          SensitivityMatrix, action_sensitivity,
                          build_sensitivity_matrix, rollout_autonomous,
                          sensitivity_entries)
from .systems import (HANGING_STATES, SYSTEMS, CartPoleParams,
                      DoublePendulumParams, PendulumParams, cartpole_energy,
                      cartpole_model, double_pendulum_energy,
                      double_pendulum_model, energy_function,
                      linear_test_model, pendulum_energy, pendulum_model,
                      scale_gain)

__version__ = "0.1.0"
