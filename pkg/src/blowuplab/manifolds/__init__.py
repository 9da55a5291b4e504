from .closed_form import (
    F1_reduced,
    cm_closed_form,
    cm_closed_form_K1,
    k1_layout,
    k1_standard_coeffs,
    orig_layout,
    reduced_Hpm,
)
from .diagnostics import (
    convergence_report,
    field_for,
    hausdorff_distance,
    invariance_residual,
    ray_slope,
    sample_grid,
    tail_bound_check,
)
from .expansion import ManifoldExpansion, compare
from .jets import Jet2, jet_of
from .oracle import oracle_K1, oracle_orig, solve_invariance_order2
