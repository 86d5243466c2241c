"""Statevector kernels: fragment exponentials, exact evolution, overlaps,
and low-rank norms of pure-state mixtures.

Density matrices are never materialized at 2^n x 2^n here; mixture norms go
through the r x r Gram matrix of pairwise overlaps instead.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalDegeneracyError
from .pauli import PauliSumOp, commutes, to_dense

# Exact evolution keeps a dense eigendecomposition around, so cap the size.
ORACLE_QUBIT_CAP = 12

GRAM_EIG_FLOOR = -1e-10


def basis_state(n: int, bits: str) -> np.ndarray:
    """Computational basis state; ``bits[j]`` is the value of qubit j."""
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise ValueError(f"need {n} characters of 0/1, got {bits!r}")
    state = np.zeros(1 << n, dtype=complex)
    state[int(bits, 2)] = 1.0
    return state


def neel_state(n: int) -> np.ndarray:
    """The |1010...> initial state (qubit 0 excited)."""
    return basis_state(n, "".join("1" if j % 2 == 0 else "0" for j in range(n)))


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    vec = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return vec / np.linalg.norm(vec)


def overlap(a: np.ndarray, b: np.ndarray) -> complex:
    """Inner product <a|b>."""
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    return complex(np.vdot(a, b))


class FragmentEvolver:
    """Applies ``exp(-i t F)`` for a fragment F whose terms pairwise commute.

    The exponential factorizes exactly into per-term rotations
    ``exp(-i t c P) = cos(tc) I - i sin(tc) P``, each applied through
    index-pair arithmetic on the amplitude vector.
    """

    def __init__(self, fragment: PauliSumOp):
        self.fragment = fragment
        self.n = fragment.n
        dim = 1 << fragment.n
        terms = fragment.terms
        for i in range(len(terms)):
            for j in range(i + 1, len(terms)):
                if not commutes(terms[i][1], terms[j][1]):
                    raise ValueError(
                        "fragment terms must pairwise commute; "
                        f"{terms[i][1]} and {terms[j][1]} do not"
                    )
        idx = np.arange(dim)
        self._ops = []
        for coeff, ps in terms:
            if ps.x_mask == 0:
                signs = 1.0 - 2.0 * (np.bitwise_count(idx & ps.z_mask) & 1)
                self._ops.append((coeff, None, None, signs, None))
            else:
                partner = idx ^ ps.x_mask
                lo = idx[idx < partner]
                hi = lo ^ ps.x_mask
                ip = 1j ** ps.y_count
                phi_lo = ip * (1.0 - 2.0 * (np.bitwise_count(lo & ps.z_mask) & 1))
                phi_hi = ip * (1.0 - 2.0 * (np.bitwise_count(hi & ps.z_mask) & 1))
                self._ops.append((coeff, lo, hi, phi_lo, phi_hi))

    def apply(self, state: np.ndarray, t: float) -> np.ndarray:
        """Return exp(-i t F) |state>; the input array is not modified."""
        out = state.copy()
        for coeff, lo, hi, a, b in self._ops:
            theta = t * coeff
            if lo is None:
                out *= np.where(a > 0, np.exp(-1j * theta), np.exp(1j * theta))
            else:
                c, s = np.cos(theta), np.sin(theta)
                x, y = out[lo], out[hi]
                out[lo] = c * x - 1j * s * b * y
                out[hi] = c * y - 1j * s * a * x
        return out


def apply_fragment_exp(state: np.ndarray, fragment: PauliSumOp, t: float) -> np.ndarray:
    """One-shot convenience wrapper; registers the fragment per call."""
    return FragmentEvolver(fragment).apply(state, t)


class SpectralOracle:
    """Exact evolution through a one-time dense Hermitian eigendecomposition."""

    def __init__(self, hamiltonian: PauliSumOp):
        if hamiltonian.n > ORACLE_QUBIT_CAP:
            raise ValueError(f"exact evolution capped at n={ORACLE_QUBIT_CAP}")
        self.n = hamiltonian.n
        dense = to_dense(hamiltonian)
        eigvals, eigvecs = np.linalg.eigh(dense)
        self.eigenvalues = eigvals
        self.eigenvectors = eigvecs
        self._vh = eigvecs.conj().T
        scale = np.linalg.norm(dense)
        err = np.linalg.norm((eigvecs * eigvals) @ self._vh - dense)
        if scale > 0 and err > 1e-9 * scale:
            raise NumericalDegeneracyError(
                f"eigendecomposition reconstruction error {err:.3e} exceeds tolerance"
            )

    def evolve(self, state: np.ndarray, t: float) -> np.ndarray:
        """Return exp(-i t H) |state>; t = 0 returns the input exactly."""
        if state.shape != (1 << self.n,):
            raise ValueError("dimension mismatch between oracle and state")
        if t == 0.0:
            return state.copy()
        return self.eigenvectors @ (np.exp(-1j * t * self.eigenvalues) * (self._vh @ state))


def exact_evolve(oracle: SpectralOracle, state: np.ndarray, t: float) -> np.ndarray:
    return oracle.evolve(state, t)


def _gram(states: list[np.ndarray]) -> np.ndarray:
    r = len(states)
    g = np.empty((r, r), dtype=complex)
    for i in range(r):
        g[i, i] = np.vdot(states[i], states[i])
        for j in range(i + 1, r):
            g[i, j] = np.vdot(states[i], states[j])
            g[j, i] = np.conj(g[i, j])
    return g


def _psd_sqrt(gram: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = np.linalg.eigh(gram)
    floor = GRAM_EIG_FLOOR * max(1.0, float(eigvals[-1]))
    if eigvals[0] < floor:
        raise NumericalDegeneracyError(
            f"Gram matrix eigenvalue {eigvals[0]:.3e} below PSD tolerance"
        )
    clamped = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(clamped)) @ eigvecs.conj().T


def mixture_trace_norm(states: list[np.ndarray], weights) -> float:
    """Trace norm of ``sum_i w_i |phi_i><phi_i|`` via the Gram reduction.

    The nonzero eigenvalues of the rank-r operator coincide with those of
    ``G^{1/2} diag(w) G^{1/2}`` where ``G`` is the overlap Gram matrix, so the
    trace norm is the absolute eigenvalue sum of that r x r matrix.
    """
    weights = np.asarray(weights, dtype=float)
    if len(states) != weights.size or weights.size == 0:
        raise ValueError("need matching, nonempty states and weights")
    root = _psd_sqrt(_gram(states))
    small = root @ np.diag(weights) @ root
    return float(np.abs(np.linalg.eigvalsh(small)).sum())


def mixture_frobenius_sq(gram: np.ndarray, coeffs, overlaps) -> float:
    """Squared Frobenius distance ``1 + c^T M c - 2 L^T c`` between a pure
    reference state and the coefficient mixture with Gram matrix M and
    reference overlaps L."""
    m = np.asarray(gram, dtype=float)
    c = np.asarray(coeffs, dtype=float)
    ell = np.asarray(overlaps, dtype=float)
    if m.shape != (c.size, c.size) or ell.size != c.size:
        raise ValueError("shape mismatch")
    if not np.allclose(m, m.T, atol=1e-10):
        raise ValueError("Gram matrix must be symmetric")
    return float(1.0 + c @ m @ c - 2.0 * ell @ c)
