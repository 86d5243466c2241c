"""mpf-lab: product formulas, multi-product mixtures, rigorous Trotter-error
bounds, and robust time-dependent coefficient tracking at desk scale."""

from .pauli import (
    LocalityProfile,
    PauliString,
    PauliSumOp,
    commutator_minus_i,
    extract_coefficients,
    format_op,
    locality_profile,
    parse_op,
    pauli_from_sites,
    to_dense,
)
from .heisenberg import build_heisenberg_chain, fragment_decomposition_s2
from .statesim import (
    FragmentEvolver,
    SpectralOracle,
    apply_fragment_exp,
    basis_state,
    exact_evolve,
    mixture_frobenius_sq,
    mixture_trace_norm,
    neel_state,
    overlap,
    random_state,
)
from .formulas import ProductFormula, rho_k_state, second_order, suzuki
from .static_mpf import (
    MpfScheme,
    mean_value_combine,
    rank_of_tuple,
    search_steps,
    solve_coefficients,
)
from .bounds import (
    FragmentTimeSampler,
    MixtureBoundEvaluator,
    MixtureErrorBound,
    adjoint_power_profile,
    bernoulli,
    commutator_profile,
    conjugated_commutator_sum,
    conjugation_profile,
    formula_commutator_sum,
    formula_conjugated_sum,
    mixture_error_bound,
    nested_commutator_sum,
    product_formula_error_bound,
    propagate_profile,
    spectral_norm_dense,
)
from .dynamic_mpf import (
    MinimaxRun,
    NoisyOverlaps,
    ProjectionResult,
    TrackingBoundStep,
    dynamic_project,
    gram_matrix,
    inject_noise,
    l_exact,
    minimax_run,
    minimax_step,
    q_matrix,
    tracking_error_bound,
    trotter_states,
)
from .errors import NumericalDegeneracyError, ResourceLimitError, SolverError

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
