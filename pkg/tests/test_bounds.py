import math
from fractions import Fraction

import numpy as np
import pytest

from mpf_lab import (
    FragmentTimeSampler,
    LocalityProfile,
    PauliString,
    PauliSumOp,
    ProductFormula,
    nested_commutator_sum,
    formula_commutator_sum,
    bernoulli,
    conjugated_commutator_sum,
    adjoint_power_profile,
    commutator_profile,
    conjugation_profile,
    propagate_profile,
    product_formula_error_bound,
    mixture_trace_norm,
    rho_k_state,
    solve_coefficients,
    spectral_norm_dense,
    mixture_error_bound,
    to_dense,
)
from mpf_lab.bounds import MixtureBoundEvaluator
from mpf_lab.errors import ResourceLimitError


def three_fragment_case(chain4):
    bonds = chain4.fragments[0] + 0.5 * chain4.fragments[2]
    fields = chain4.fragments[1] + chain4.fragments[3]
    pf = ProductFormula(fragments=(bonds, fields, bonds),
                        steps=((0, 1.0), (1, 1.0), (2, 1.0)), order=2)
    return pf, bonds, fields


# -- Bernoulli ---------------------------------------------------------------

def test_bernoulli_table():
    assert bernoulli(0) == 1
    assert bernoulli(1) == Fraction(-1, 2)
    assert bernoulli(2) == Fraction(1, 6)
    assert bernoulli(4) == Fraction(-1, 30)
    assert all(bernoulli(k) == 0 for k in (3, 5, 7, 9))


def test_bernoulli_recurrence_oracle():
    # independent check: sum_{j=0}^{m} C(m+1, j) B_j = 0
    for m in range(1, 20):
        total = sum(math.comb(m + 1, j) * bernoulli(j) for j in range(m + 1))
        assert total == 0


def test_bernoulli_range():
    with pytest.raises(ValueError):
        bernoulli(31)
    with pytest.raises(ValueError):
        bernoulli(-1)


# -- spectral norm ------------------------------------------------------------

def test_spectral_norm_matches_svd(rng):
    for dim in (4, 16, 33):
        mat = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        assert abs(spectral_norm_dense(mat) - np.linalg.norm(mat, 2)) < 1e-8 * dim
    assert spectral_norm_dense(np.zeros((5, 5))) == 0.0


def test_spectral_norm_degenerate_spectrum():
    mat = np.diag([3.0, 3.0, 3.0, -3.0])
    assert abs(spectral_norm_dense(mat) - 3.0) < 1e-9


# -- composition aggregates ----------------------------------------------------

def test_alpha_single_composition(chain4):
    _, bonds, fields = three_fragment_case(chain4)
    val = nested_commutator_sum(1, [bonds], fields)
    da, db = to_dense(bonds), to_dense(fields)
    ref = np.linalg.norm(da @ db - db @ da, 2)
    assert abs(val - ref) < 1e-8


def test_alpha_commuting_chain_is_zero():
    z1 = PauliSumOp.from_terms(2, [(1.0, PauliString("ZI"))])
    z2 = PauliSumOp.from_terms(2, [(0.7, PauliString("IZ"))])
    for p in (1, 2, 3):
        assert nested_commutator_sum(p, [z1], z2) == 0.0


def test_alpha2_closed_form(chain4):
    pf, bonds, fields = three_fragment_case(chain4)
    val = formula_commutator_sum(pf)
    d1, d2 = to_dense(bonds), to_dense(fields)

    def comm(a, b):
        return a @ b - b @ a

    closed = (np.linalg.norm(comm(d2, comm(d2, d1)), 2)
              + 3.0 * np.linalg.norm(comm(d1, comm(d1, d2)), 2))
    assert abs(val - closed) < 1e-8


def test_alpha_p_single_slot_zero(chain4):
    pf = ProductFormula(fragments=(chain4.fragments[2],), steps=((0, 1.0),), order=2)
    assert formula_commutator_sum(pf) == 0.0


def test_alpha_symbolic_matches_dense(chain4):
    pf, _, _ = three_fragment_case(chain4)
    assert abs(formula_commutator_sum(pf, method="symbolic") - formula_commutator_sum(pf, method="dense")) < 1e-7


def test_alpha_homogeneity(chain4):
    pf, bonds, fields = three_fragment_case(chain4)
    lam = 1.7
    scaled = ProductFormula(fragments=(lam * bonds, lam * fields, lam * bonds),
                            steps=pf.steps, order=2)
    assert abs(formula_commutator_sum(scaled) - lam**3 * formula_commutator_sum(pf)) < 1e-7 * lam**3


def test_alpha_clifford_conjugation_invariance(chain4, rng):
    """Conjugating every operand by one Clifford (qubit permutation plus a
    global Hadamard layer) leaves the aggregate unchanged."""
    pf, bonds, fields = three_fragment_case(chain4)
    perm = rng.permutation(4)
    swap = {"X": "Z", "Z": "X", "Y": "Y", "I": "I"}

    def conjugate(op):
        terms = []
        for c, ps in op:
            chars = ["I"] * op.n
            for j, ch in enumerate(ps.word):
                chars[perm[j]] = swap[ch]
            sign = (-1.0) ** ps.word.count("Y")
            terms.append((sign * c, PauliString("".join(chars))))
        return PauliSumOp.from_terms(op.n, terms)

    cb, cf = conjugate(bonds), conjugate(fields)
    conj_pf = ProductFormula(fragments=(cb, cf, cb), steps=pf.steps, order=2)
    assert abs(formula_commutator_sum(conj_pf) - formula_commutator_sum(pf)) < 1e-8 * max(1.0, formula_commutator_sum(pf))


def test_alpha_dense_cap():
    big = PauliSumOp.from_terms(9, [(1.0, PauliString("XXIIIIIII"))])
    other = PauliSumOp.from_terms(9, [(1.0, PauliString("ZIIIIIIII"))])
    with pytest.raises(ResourceLimitError):
        nested_commutator_sum(1, [big], other, method="dense")
    # symbolic route still works above the dense cap
    val = nested_commutator_sum(1, [big], other, method="symbolic")
    dense_ref = 2.0  # ||[XX, ZI]|| = 2 ||YX||
    assert abs(val - dense_ref) < 1e-8


# -- sampled window maxima -------------------------------------------------------

def test_sampler_shapes_and_determinism():
    s = FragmentTimeSampler(random_draws=8, seed=3)
    rows = s.samples(5, 0.7)
    again = s.samples(5, 0.7)
    assert rows.shape[1] == 5
    assert np.array_equal(rows, again)
    assert np.array_equal(s.samples(4, 0.0), np.zeros((1, 4)))
    assert np.all(rows >= 0) and np.all(rows <= 0.7)


def test_beta_degenerate_window_matches_alpha(chain4):
    pf, bonds, fields = three_fragment_case(chain4)
    chain = [bonds, fields]
    a = nested_commutator_sum(2, chain, bonds)
    b = conjugated_commutator_sum(2, 0, chain, bonds, 0.0, pf)
    assert abs(a - b) < 1e-10 * max(1.0, a)


def test_beta_nested_sampling_monotone(chain4):
    pf, bonds, fields = three_fragment_case(chain4)
    chain = [bonds, fields]
    vals = [conjugated_commutator_sum(2, 1, chain, bonds, 0.4, pf,
                      FragmentTimeSampler(random_draws=m, seed=11)) for m in (8, 32, 64)]
    assert vals[0] <= vals[1] + 1e-12 and vals[1] <= vals[2] + 1e-12


def test_beta_conjugation_invariance_l0(chain4):
    """With no adjoint prefix the window maximum collapses: conjugation cannot
    change a spectral norm, so t > 0 gives the same value as t = 0."""
    pf, bonds, fields = three_fragment_case(chain4)
    chain = [bonds, fields]
    assert abs(conjugated_commutator_sum(2, 0, chain, bonds, 0.9, pf)
               - conjugated_commutator_sum(2, 0, chain, bonds, 0.0, pf)) < 1e-12


# -- the mixture bound ------------------------------------------------------------

def test_mixture_bound_preconditions(chain4):
    sch1 = solve_coefficients(2, (7,))
    with pytest.raises(ValueError):
        mixture_error_bound(sch1, chain4.pf, 1.0)
    even = solve_coefficients(2, (8, 26, 34), even_powers=True)
    with pytest.raises(ValueError, match="consecutive"):
        mixture_error_bound(even, chain4.pf, 1.0)
    sch4 = solve_coefficients(4, (2, 9, 17, 23, 25))
    with pytest.raises(ValueError, match="order"):
        mixture_error_bound(sch4, chain4.pf, 1.0)


def test_mixture_bound_prefactor_rescaling(chain4):
    base = solve_coefficients(2, (4, 13, 17))
    for lam in (2, 3, 5):
        scaled = solve_coefficients(2, tuple(lam * k for k in (4, 13, 17)))
        ratio = base.objective / scaled.objective
        assert abs(ratio - lam**4) < 1e-9 * lam**4


def test_mixture_bound_dominates_measured_error(chain4):
    sch = solve_coefficients(2, (4, 13, 17))
    evaluator = MixtureBoundEvaluator(sch, chain4.pf)
    for t in (0.25, 0.5, 1.0, 1.5, 2.0):
        bound = evaluator.at(t)
        states = [rho_k_state(chain4.pf, chain4.psi, t, k) for k in sch.steps]
        states.append(chain4.oracle.evolve(chain4.psi, t))
        err = mixture_trace_norm(states, list(sch.coefficients) + [-1.0])
        assert bound.value >= err
        assert bound.sampled
        assert bound.a1 > 0 and bound.a2 > 0 and bound.a3 >= 0


def test_mixture_bound_zero_time(chain4):
    sch = solve_coefficients(2, (4, 13, 17))
    bound = mixture_error_bound(sch, chain4.pf, 0.0)
    assert bound.value == 0.0
    assert not bound.sampled


# -- the k-step bound ---------------------------------------------------------------

def test_kstep_bound_trivial_scalings(chain4):
    alpha = formula_commutator_sum(chain4.pf)
    assert product_formula_error_bound(chain4.pf, 0.0, 3, commutator_sum=alpha) == 0.0
    b1 = product_formula_error_bound(chain4.pf, 1.0, 4, commutator_sum=alpha)
    b2 = product_formula_error_bound(chain4.pf, 1.0, 8, commutator_sum=alpha)
    assert abs(b1 / b2 - 2.0**2) < 1e-12
    with pytest.raises(ValueError):
        product_formula_error_bound(chain4.pf, 1.0, 0)


def test_kstep_bound_dominates_on_grid(chain4):
    alpha = formula_commutator_sum(chain4.pf)
    for t in (0.5, 1.0, 2.0):
        exact = chain4.oracle.evolve(chain4.psi, t)
        for k in (1, 3, 9):
            err = mixture_trace_norm(
                [rho_k_state(chain4.pf, chain4.psi, t, k), exact], [1.0, -1.0])
            assert product_formula_error_bound(chain4.pf, t, k, commutator_sum=alpha) >= err


# -- locality propagation -------------------------------------------------------------

def test_kj_commutator_rule():
    out = commutator_profile(LocalityProfile(2, 2.0), LocalityProfile(2, 3.0))
    assert out == LocalityProfile(3, 2.0 * 2.0 * 3.0 * 4)
    zero = commutator_profile(LocalityProfile(2, 0.0), LocalityProfile(3, 5.0))
    assert zero.strength == 0.0


def test_kj_triple_nesting():
    base = LocalityProfile(2, 1.0)
    out = adjoint_power_profile(base, base, 2)
    assert out == LocalityProfile(4, 80.0)


def test_kj_conjugation():
    out = conjugation_profile(LocalityProfile(2, 1.5), gamma=2.0, depth=3)
    assert out == LocalityProfile(16, 12.0)


def test_kj_dispatch():
    a, b = LocalityProfile(2, 1.0), LocalityProfile(2, 1.0)
    assert propagate_profile("commutator", (a, b)) == commutator_profile(a, b)
    assert propagate_profile("adjoint-power", (a, b), power=2) == adjoint_power_profile(a, b, 2)
    assert propagate_profile("conjugation", (a,), gamma=2.0, depth=1) == conjugation_profile(a, 2.0, 1)
    with pytest.raises(ValueError):
        propagate_profile("unknown", (a, b))
    with pytest.raises(ValueError):
        propagate_profile("conjugation", (a,))
