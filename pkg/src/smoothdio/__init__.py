"""Smooth numbers n with ||theta n + phi|| small: convergents, smooth-number
sieving, the saddle point alpha(x, y), exponential sums, and an end-to-end
certified search."""

from .construct import (
    ConstructionPlan,
    SolutionRecord,
    certify_theorem_inequality,
    diagnostics,
    make_plan,
    record_scan,
    search_solutions,
)
from .expsum import (
    BilinearInstance,
    ExpSumSeries,
    build_bw_coefficients,
    dyadic_blocks,
    eval_S_h,
    lemma3_lower_bound_check,
    lemma4_bound,
)
from .irrational import Convergent, IrrationalSpec, convergents, distance_to_integer, parse_phase, parse_theta
from .saddle import SaddleResult, check_lemma2_bounds, check_scaling_law, solve_alpha
from .smooth import PsiCount, SmoothWindow, largest_prime_factor, psi, sieve_window

__version__ = "0.1.0"
