"""Weak error of the two scheme variants against an exact reference value.

For dX = -2X dt + int sin(X-) z Ntilde with a 10-truncated 1.5-stable kernel,
the solution of the backward equation with terminal statistic x^2/2 is known
in closed form once a matching source term is subtracted along the path
(the source-term representation: u(t,x) = E[Phi(X_T) - int_t^T G(s, X_s) ds]).
That turns the weak error into a directly measurable bias.

Substituting the small jumps by Gaussians buys a full power of eps in the
bias (eps^(3-alpha) against eps^(2-alpha) for plain truncation), which is the
whole point of the method: the same accuracy at a much larger cutoff.
"""

import numpy as np

from jumpem import run_weak_error, weak_multiplicative_plan

plan = weak_multiplicative_plan(alpha=1.5, k_range=(2, 3, 4),
                                mc_paths=150_000, block_size=50_000)
print("eps grid:", [f"{e:.4f}" for e in plan.eps_grid])
print("steps (with substitute):   ", plan.n_with)
print("steps (without substitute):", plan.n_without)

reports = run_weak_error(plan, master_seed=3, threads=2)
for variant, rep in reports.items():
    theory = 1.5 if variant == "with_substitute" else 0.5
    print(f"\n{variant}: fitted eps-slope {rep.fitted_slope:.2f} "
          f"(theory {theory})")
    for eps, bias, hw in zip(rep.abscissae, rep.estimates, rep.std_errors):
        print(f"  eps={eps:.4f}  |bias| = {bias:.4f} +- {hw:.4f}")

rows = [(v == "with_substitute", e, b, s)
        for v, rep in reports.items()
        for e, b, s in zip(rep.abscissae, rep.estimates, rep.std_errors)]
np.savetxt("weak_errors.csv", rows, delimiter=",", fmt="%.17g",
           header="with_substitute,eps,bias,half_width", comments="")
print("\nwrote weak_errors.csv")
