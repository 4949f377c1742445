"""Prior-informed fixed-budget best-arm identification.

Gaussian conjugate posteriors for independent-arm, contextual, and
mixed-effects bandits; evaluable prior-dependent error bounds; allocation
strategies that optimize them; frequentist baselines; and a reproducible
Monte-Carlo harness with a CSV interface.
"""

from .alloc import (AllocationPlan, OptimizerConfig, g_opt_alloc,
                    heuristic_alloc, mixture_alloc, opt_alloc, random_alloc,
                    uniform_alloc, warmup_ts_alloc)
from .baselines import (AdaptiveRun, sequential_halving, sh_rounds,
                        sr_schedule, successive_rejects)
from .bounds import (BoundReport, MisspecifiedPrior, bound_hier, bound_linear,
                     bound_linear_gopt, bound_mab, bound_mab_misspecified,
                     mab_phi, phi_limit, two_arm_lower_bound)
from .errors import (ArmOutOfRange, BudgetTooSmall, ConfigError, DimMismatch,
                     HeterogeneousVariance, NoConvergence, NonFiniteObjective,
                     NonPositiveMean, NotPositiveDefinite, PriorBaiError,
                     RankDeficient)
from .glm import (LaplacePosterior, LogisticModel, approx_mean_reward,
                  glm_decide, laplace_fit, sigmoid)
from .linalg import RngStream, check_simplex, project_simplex
from .models import (HierPrior, Instance, LinearPrior, MabPrior, Prior,
                     hier_to_linear, mab_as_linear, sample_instance,
                     sample_reward)
from .posterior import (HierPosterior, History, LinearPosterior, MabPosterior,
                        decide, hier_posterior, linear_posterior,
                        mab_posterior, posterior_mean_rewards)
from .sim import (CSV_HEADER, ExperimentConfig, SimResult, run_experiment,
                  run_trial, sweep)

__version__ = "0.1.0"
