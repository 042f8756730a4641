"""jumpem: Euler-Maruyama schemes for SDEs driven by time-inhomogeneous
Poisson random measures, with exact large-jump simulation and a Gaussian
substitute (or plain cutoff) for the small jumps, plus a Monte Carlo harness
that measures strong and weak convergence rates."""

__version__ = "0.1.0"

from .measure import (CompensatorKernel, TruncatedStableFamily,
                      cumulative_intensity, fiber_kernel, jump_size_cdf,
                      jump_size_quantile, tail_intensity,
                      time_modulated_stable, truncated_moment,
                      truncated_stable)
from .model import (Multiplicative, RateHypotheses, SdeModel, WeakErrorSpec,
                    build_preset, corrected_drift, delta_diagnostic,
                    model_from_expressions, predicted_strong_rate,
                    psi_p_evaluate, small_jump_variance)
from .noise import (NoiseRealization, SeedStream, aggregate_to_coarser_grid,
                    generate_noise, sample_jump_sizes,
                    sample_jump_times_thinning, sample_jump_times_timechange)
from .scheme import (Path, SchemeConfig, simulate_coupled_pair, simulate_path,
                     step_euler_peano, step_with_substitute,
                     step_without_substitute, sup_distance_on_shared_grid)
from .harness import (ErrorReport, StrongErrorPlan, WeakErrorPlan,
                      empirical_wasserstein_check, fit_rate,
                      lower_bound_check, run_strong_error, run_weak_error,
                      weak_arctan_plan, weak_multiplicative_plan)
from .appfiber import (FiberParams, build_fiber_model, empirical_l_variance,
                       noise_variance_curve, run_fiber_pdf)

__all__ = [name for name in dir() if not name.startswith("_")]
