"""Product-formula recipes and their repeated application to statevectors.

A recipe is an ordered list of ``(fragment index, time multiplier)`` slots;
slot ``(a, m)`` contributes the unitary ``exp(-i m t F_a)`` and slots are
applied left to right.  Multipliers for each fragment index sum to one, so a
recipe always approximates ``exp(-i t H)`` with ``H`` the fragment sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .pauli import PauliSumOp
from .statesim import FragmentEvolver

SUZUKI_ORDERS = (4, 6)


@dataclass(frozen=True)
class ProductFormula:
    """An ordered exponential recipe over a fragment registry."""

    fragments: tuple[PauliSumOp, ...]
    steps: tuple[tuple[int, float], ...]
    order: int

    def __post_init__(self):
        if not self.fragments:
            raise ValueError("need at least one fragment")
        n = self.fragments[0].n
        if any(f.n != n for f in self.fragments):
            raise ValueError("fragments act on different qubit counts")
        sums = np.zeros(len(self.fragments))
        for idx, mult in self.steps:
            sums[idx] += mult
        if not np.allclose(sums, 1.0, atol=1e-12):
            raise ValueError("per-fragment multipliers must sum to 1")

    @property
    def n(self) -> int:
        return self.fragments[0].n

    @property
    def depth(self) -> int:
        return len(self.steps)

    @cached_property
    def hamiltonian(self) -> PauliSumOp:
        total = self.fragments[0]
        for frag in self.fragments[1:]:
            total = total + frag
        return total

    @cached_property
    def slot_operators(self) -> tuple[PauliSumOp, ...]:
        """Effective operator of each slot: multiplier times fragment."""
        return tuple(mult * self.fragments[idx] for idx, mult in self.steps)

    @cached_property
    def _evolvers(self) -> tuple[FragmentEvolver, ...]:
        return tuple(FragmentEvolver(f) for f in self.fragments)

    def apply(self, state: np.ndarray, t: float) -> np.ndarray:
        """Return S(t) |state>."""
        out = state
        for idx, mult in self.steps:
            out = self._evolvers[idx].apply(out, mult * t)
        return out

    def multiplier_list(self) -> list[float]:
        return [m for _, m in self.steps]


def _palindromic(fragments: tuple[PauliSumOp, ...]) -> bool:
    m = len(fragments)
    return all(fragments[a] == fragments[m - 1 - a] for a in range(m // 2))


def fragment_by_commuting_groups(op: PauliSumOp) -> list[PauliSumOp]:
    """Greedily split an operator into fragments of pairwise-commuting terms.

    Terms are scanned in normalized order and placed into the first existing
    group they commute with, so the split is deterministic.  Useful for
    building a product formula from a Hamiltonian with no hand-made
    decomposition.
    """
    from .pauli import commutes

    groups: list[list[tuple[float, object]]] = []
    for coeff, ps in op.terms:
        for group in groups:
            if all(commutes(ps, other) for _, other in group):
                group.append((coeff, ps))
                break
        else:
            groups.append([(coeff, ps)])
    return [PauliSumOp.from_terms(op.n, g) for g in groups]


def second_order(fragments) -> ProductFormula:
    """Symmetric (palindromic) second-order recipe from the given fragments.

    A fragment list that is already palindromic (like the Heisenberg
    F1..F5 splitting) is used verbatim, one slot per fragment.  Otherwise the
    Strang palindrome is built: half-time sweeps around a full-time middle.
    """
    frags = tuple(fragments)
    m = len(frags)
    if m == 0:
        raise ValueError("need at least one fragment")
    if _palindromic(frags):
        steps = tuple((a, 1.0) for a in range(m))
    else:
        up = [(a, 0.5) for a in range(m - 1)]
        steps = tuple(up + [(m - 1, 1.0)] + up[::-1])
    return ProductFormula(fragments=frags, steps=steps, order=2)


def suzuki(base: ProductFormula, order: int) -> ProductFormula:
    """Suzuki recursion from a second-order base to order 4 or 6.

    Each level replaces S_{2k} by five copies with times
    (u, u, 1-4u, u, u) where u = 1/(4 - 4^{1/(2k+1)}); multipliers are
    computed in closed form and flattened into one recipe.
    """
    if base.order != 2:
        raise ValueError("Suzuki recursion starts from a second-order formula")
    if order not in SUZUKI_ORDERS:
        raise ValueError(f"unsupported target order {order}; choose from {SUZUKI_ORDERS}")
    steps = list(base.steps)
    for level in range(1, (order - 2) // 2 + 1):
        u = 1.0 / (4.0 - 4.0 ** (1.0 / (2 * level + 1)))
        scaled = [(idx, u * m) for idx, m in steps]
        middle = [(idx, (1.0 - 4.0 * u) * m) for idx, m in steps]
        steps = scaled + scaled + middle + scaled + scaled
    return ProductFormula(fragments=base.fragments, steps=tuple(steps), order=order)


def rho_k_state(pf: ProductFormula, psi_in: np.ndarray, t: float, k: int) -> np.ndarray:
    """Apply k repetitions of S(t/k) to the initial state."""
    if k < 1:
        raise ValueError("step count k must be >= 1")
    state = psi_in
    dt = t / k
    for _ in range(k):
        state = pf.apply(state, dt)
    return state
