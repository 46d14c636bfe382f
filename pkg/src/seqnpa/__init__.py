"""SDP relaxations and exact oracles for sequential two-party Bell scenarios."""

from .scenario import (Behavior, BellFunctional, PartySpec, ScenarioSpec,
                       ShapeError, StepSpec, Violation, behavior_from_text,
                       behavior_to_text, chsh_ab1_functional,
                       chsh_ab2_functional, chsh_functional, chsh_scenario,
                       evaluate_functional, gallego_inequality, make_scenario,
                       named_functionals, randomness_scenario,
                       two_step_scenario, uniform_behavior, validate_behavior)
from .ncalg import OpSymbol, adjoint, generate_level_set, moment_key, reduce_word
from .moment import (MomentProblem, RelaxationFlags, build_guessing_program,
                     build_moment_problem, compile_to_sdp, functional_equality,
                     pin_behavior, set_objective)
from .qsim import (DensityMatrix, KrausSet, SequentialStrategy, build_dilation,
                   chsh_strategy, gallego_strategy, isotropic_state,
                   randomness_strategy, sequential_behavior)
from .solver import (SdpSolution, SdpStandardForm, SolverConfig, export_sdpa,
                     import_sdpa, solve, verified_dual_bound)
from .tasks import (BoundResult, DeterministicStrategy, chsh_tradeoff_scan,
                    gallego_bound, guessing_bound, max_functional,
                    randomness_curve, tol_vertex_max, tradeoff_reference)

__version__ = "0.1.0"
