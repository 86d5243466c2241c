import numpy as np
import pytest

from mpf_lab import (
    PauliString,
    PauliSumOp,
    ProductFormula,
    random_state,
    rho_k_state,
    second_order,
    suzuki,
    to_dense,
)


def dense_trace_norm_error(pf, oracle, psi, t, k=1):
    """Trace-norm gap computed densely (precise far below the Gram floor)."""
    approx = rho_k_state(pf, psi, t, k)
    exact = oracle.evolve(psi, t)
    diff = np.outer(approx, approx.conj()) - np.outer(exact, exact.conj())
    return float(np.abs(np.linalg.eigvalsh(diff)).sum())


def test_single_fragment_exact(chain4, rng):
    frag = chain4.fragments[2]
    pf = second_order([frag])
    assert pf.steps == ((0, 1.0),)
    psi = random_state(4, rng)
    import scipy.linalg as sla

    ref = sla.expm(-1j * 2.5 * to_dense(frag)) @ psi
    assert np.linalg.norm(pf.apply(psi, 2.5) - ref) < 1e-10


def test_palindromic_recipe(chain6):
    pf = chain6.pf
    assert pf.multiplier_list() == pf.multiplier_list()[::-1]
    assert [idx for idx, _ in pf.steps] == [0, 1, 2, 3, 4]


def test_strang_symmetrization(chain4):
    odd, field, even = (chain4.fragments[0] * 2.0, chain4.fragments[1] * 2.0,
                        chain4.fragments[2])
    pf = second_order([odd, field, even])
    mults = pf.multiplier_list()
    assert mults == [0.5, 0.5, 1.0, 0.5, 0.5]
    assert mults == mults[::-1]
    # equals the pre-halved palindromic recipe as an operator product
    psi = chain4.psi
    assert np.linalg.norm(pf.apply(psi, 0.7) - chain4.pf.apply(psi, 0.7)) < 1e-12


def test_multiplier_sum_validation(chain4):
    with pytest.raises(ValueError, match="sum to 1"):
        ProductFormula(fragments=tuple(chain4.fragments), order=2,
                       steps=((0, 1.0), (1, 0.5), (2, 1.0), (3, 0.5), (4, 1.0)))


def test_second_order_empty():
    with pytest.raises(ValueError):
        second_order([])


def test_suzuki_multipliers(chain4):
    pf4 = suzuki(chain4.pf, 4)
    u = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
    assert abs(u - 0.4144907717943757) < 1e-15
    assert pf4.depth == 25
    mults = pf4.multiplier_list()
    assert abs(mults[0] - u) < 1e-15
    assert abs(mults[12] - (1.0 - 4.0 * u)) < 1e-15
    sums = {}
    for idx, mlt in pf4.steps:
        sums[idx] = sums.get(idx, 0.0) + mlt
    assert all(abs(v - 1.0) < 1e-12 for v in sums.values())


def test_suzuki_validation(chain4):
    with pytest.raises(ValueError):
        suzuki(chain4.pf, 3)
    with pytest.raises(ValueError):
        suzuki(chain4.pf, 8)
    pf4 = suzuki(chain4.pf, 4)
    with pytest.raises(ValueError):
        suzuki(pf4, 6)


def test_empirical_orders(chain4):
    """Log-log slope of the one-step error is order + 1."""
    ts = np.geomspace(2e-3, 2e-2, 5)
    errs2 = [dense_trace_norm_error(chain4.pf, chain4.oracle, chain4.psi, t) for t in ts]
    slope2 = np.polyfit(np.log(ts), np.log(errs2), 1)[0]
    assert abs(slope2 - 3.0) < 0.1

    pf4 = suzuki(chain4.pf, 4)
    ts4 = np.geomspace(3e-2, 1.5e-1, 5)
    errs4 = [dense_trace_norm_error(pf4, chain4.oracle, chain4.psi, t) for t in ts4]
    slope4 = np.polyfit(np.log(ts4), np.log(errs4), 1)[0]
    assert abs(slope4 - 5.0) < 0.15


def test_order6_slope(chain4):
    pf6 = suzuki(chain4.pf, 6)
    assert pf6.depth == 125
    ts = np.geomspace(0.15, 0.4, 4)
    errs = [dense_trace_norm_error(pf6, chain4.oracle, chain4.psi, t) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(errs), 1)[0]
    assert abs(slope - 7.0) < 0.3


def test_step_refinement_factor(chain4):
    """Doubling k cuts the error by about 2^p at small t."""
    t = 0.2
    e1 = dense_trace_norm_error(chain4.pf, chain4.oracle, chain4.psi, t, k=2)
    e2 = dense_trace_norm_error(chain4.pf, chain4.oracle, chain4.psi, t, k=4)
    assert 3.0 < e1 / e2 < 5.2


def test_rho_k_basics(chain4):
    assert np.array_equal(rho_k_state(chain4.pf, chain4.psi, 0.0, 3), chain4.psi)
    out = rho_k_state(chain4.pf, chain4.psi, 1.0, 7)
    assert abs(np.linalg.norm(out) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        rho_k_state(chain4.pf, chain4.psi, 1.0, 0)


def test_formula_requires_fragments():
    with pytest.raises(ValueError):
        ProductFormula(fragments=(), steps=(), order=2)
    a = PauliSumOp.from_terms(1, [(1.0, PauliString("Z"))])
    b = PauliSumOp.from_terms(2, [(1.0, PauliString("ZI"))])
    with pytest.raises(ValueError):
        ProductFormula(fragments=(a, b), steps=((0, 1.0), (1, 1.0)), order=2)


def test_fragment_by_commuting_groups(chain4):
    from mpf_lab.formulas import fragment_by_commuting_groups
    from mpf_lab.pauli import commutes

    groups = fragment_by_commuting_groups(chain4.hamiltonian)
    total = groups[0]
    for g in groups[1:]:
        total = total + g
    assert (total - chain4.hamiltonian).is_empty
    for g in groups:
        terms = [ps for _, ps in g]
        assert all(commutes(a, b) for i, a in enumerate(terms) for b in terms[i + 1:])
    pf = second_order(groups)
    mults = pf.multiplier_list()
    assert mults == mults[::-1]
