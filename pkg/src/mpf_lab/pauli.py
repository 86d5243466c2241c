"""Pauli strings, real-coefficient Pauli sums, and their algebra.

Conventions used throughout the package:

* A Pauli word is a string over ``IXYZ``; character ``j`` acts on qubit ``j``.
* Qubit ``j`` maps to bit ``n - 1 - j`` of a basis-state index, so
  ``kron(op_0, op_1, ..., op_{n-1})`` and the mask-based statevector kernels
  agree on indexing.
* Operators are Hermitian by construction: coefficients are real floats and
  complex values are rejected at construction time.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

_VALID = frozenset("IXYZ")

# Maximum qubit count for dense materialization (4096 x 4096).
DENSE_QUBIT_CAP = 12


@dataclass(frozen=True)
class PauliString:
    """A single Pauli word, e.g. ``"XXIZ"``."""

    word: str

    def __post_init__(self):
        if not self.word or not _VALID.issuperset(self.word):
            raise ValueError(f"invalid Pauli word: {self.word!r}")

    @property
    def n(self) -> int:
        return len(self.word)

    @cached_property
    def support(self) -> frozenset[int]:
        """Qubits on which the word acts non-trivially (derived, never stored)."""
        return frozenset(j for j, ch in enumerate(self.word) if ch != "I")

    @cached_property
    def x_mask(self) -> int:
        """Bit mask of sites with an X component (X or Y)."""
        n = self.n
        return sum(1 << (n - 1 - j) for j, ch in enumerate(self.word) if ch in "XY")

    @cached_property
    def z_mask(self) -> int:
        """Bit mask of sites with a Z component (Z or Y)."""
        n = self.n
        return sum(1 << (n - 1 - j) for j, ch in enumerate(self.word) if ch in "ZY")

    @cached_property
    def y_count(self) -> int:
        return self.word.count("Y")

    def __str__(self) -> str:
        return self.word


def identity_string(n: int) -> PauliString:
    return PauliString("I" * n)


def pauli_from_sites(n: int, sites: dict[int, str]) -> PauliString:
    """Build an n-qubit word with the given single-site letters."""
    chars = ["I"] * n
    for j, ch in sites.items():
        if not 0 <= j < n:
            raise ValueError(f"qubit index {j} out of range for n={n}")
        chars[j] = ch
    return PauliString("".join(chars))


def pauli_product(a: PauliString, b: PauliString) -> tuple[int, PauliString]:
    """Return ``(e, r)`` with ``a @ b == i**e * r`` and ``e`` reduced mod 4.

    Uses the symplectic representation ``P = i^{|x & z|} X^x Z^z`` per site.
    """
    if a.n != b.n:
        raise ValueError("qubit-count mismatch")
    x3 = a.x_mask ^ b.x_mask
    z3 = a.z_mask ^ b.z_mask
    e = (
        (a.x_mask & a.z_mask).bit_count()
        + (b.x_mask & b.z_mask).bit_count()
        - (x3 & z3).bit_count()
        + 2 * (a.z_mask & b.x_mask).bit_count()
    ) % 4
    n = a.n
    chars = []
    for j in range(n):
        bit = 1 << (n - 1 - j)
        xb, zb = bool(x3 & bit), bool(z3 & bit)
        chars.append("Y" if xb and zb else "X" if xb else "Z" if zb else "I")
    return e, PauliString("".join(chars))


def commutes(a: PauliString, b: PauliString) -> bool:
    s = (a.x_mask & b.z_mask).bit_count() + (a.z_mask & b.x_mask).bit_count()
    return s % 2 == 0


def _as_real(coeff) -> float:
    if isinstance(coeff, complex) or np.iscomplexobj(coeff):
        if abs(complex(coeff).imag) != 0.0:
            raise ValueError(f"complex coefficient rejected: {coeff!r}")
        coeff = complex(coeff).real
    return float(coeff)


@dataclass(frozen=True)
class PauliSumOp:
    """A Hermitian operator stored as a real-weighted sum of Pauli words.

    Terms are normalized at construction: duplicates merged, exact zeros
    dropped, order fixed by word for determinism.
    """

    n: int
    terms: tuple[tuple[float, PauliString], ...]

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[float, PauliString]]) -> "PauliSumOp":
        acc: dict[str, float] = {}
        for coeff, ps in terms:
            if ps.n != n:
                raise ValueError(f"term {ps.word!r} does not act on {n} qubits")
            acc[ps.word] = acc.get(ps.word, 0.0) + _as_real(coeff)
        kept = tuple(
            (c, PauliString(w)) for w, c in sorted(acc.items()) if c != 0.0
        )
        return cls(n=n, terms=kept)

    @classmethod
    def zero(cls, n: int) -> "PauliSumOp":
        return cls(n=n, terms=())

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @property
    def is_empty(self) -> bool:
        return not self.terms

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        return iter(self.terms)

    def __add__(self, other: "PauliSumOp") -> "PauliSumOp":
        if self.n != other.n:
            raise ValueError("qubit-count mismatch")
        return PauliSumOp.from_terms(self.n, (*self.terms, *other.terms))

    def __sub__(self, other: "PauliSumOp") -> "PauliSumOp":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "PauliSumOp":
        s = _as_real(scalar)
        return PauliSumOp.from_terms(self.n, ((s * c, p) for c, p in self.terms))

    __rmul__ = __mul__

    def coefficient_norm(self) -> float:
        """Sum of |coefficients| (an easy upper bound on the spectral norm)."""
        return float(sum(abs(c) for c, _ in self.terms))

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c, _ in self.terms), default=0.0)


def commutator_minus_i(a: PauliSumOp, b: PauliSumOp) -> PauliSumOp:
    """Return ``-i [A, B]``, which is again a real Pauli sum for Hermitian A, B.

    Only anticommuting word pairs contribute; for those ``PQ - QP = 2 PQ``.
    """
    if a.n != b.n:
        raise ValueError("qubit-count mismatch")
    acc: dict[str, float] = {}
    for ca, pa in a.terms:
        for cb, pb in b.terms:
            if commutes(pa, pb):
                continue
            e, pr = pauli_product(pa, pb)
            # -i * 2 * i**e with e odd: e=1 -> +2, e=3 -> -2.
            sign = 2.0 if e == 1 else -2.0
            w = pr.word
            acc[w] = acc.get(w, 0.0) + sign * ca * cb
    return PauliSumOp.from_terms(a.n, ((c, PauliString(w)) for w, c in acc.items()))


@dataclass(frozen=True)
class LocalityProfile:
    """Locality (max support size) and per-qubit interaction strength."""

    k: int
    strength: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("locality k must be >= 1")
        if self.strength < 0:
            raise ValueError("interaction strength must be >= 0")


def locality_profile(op: PauliSumOp) -> LocalityProfile:
    """Profile of ``op``: k = max term support, strength = max over qubits of
    the summed |coefficient| of terms touching that qubit (Pauli words have
    unit spectral norm)."""
    if op.is_empty:
        return LocalityProfile(k=1, strength=0.0)
    per_qubit = np.zeros(op.n)
    k = 1
    for coeff, ps in op.terms:
        supp = ps.support
        k = max(k, len(supp))
        for q in supp:
            per_qubit[q] += abs(coeff)
    return LocalityProfile(k=k, strength=float(per_qubit.max()))


# -- dense materialization ---------------------------------------------------

def pauli_dense(ps: PauliString) -> np.ndarray:
    """Dense 2^n x 2^n matrix of a Pauli word."""
    n = ps.n
    if n > DENSE_QUBIT_CAP:
        raise ValueError(f"dense materialization capped at n={DENSE_QUBIT_CAP}")
    dim = 1 << n
    cols = np.arange(dim)
    rows = cols ^ ps.x_mask
    signs = 1.0 - 2.0 * (np.bitwise_count(cols & ps.z_mask) & 1)
    phases = (1j ** ps.y_count) * signs
    mat = np.zeros((dim, dim), dtype=complex)
    mat[rows, cols] = phases
    return mat


def to_dense(op: PauliSumOp) -> np.ndarray:
    """Dense Hermitian matrix of a Pauli sum (n capped at DENSE_QUBIT_CAP)."""
    if op.n > DENSE_QUBIT_CAP:
        raise ValueError(f"dense materialization capped at n={DENSE_QUBIT_CAP}")
    dim = 1 << op.n
    mat = np.zeros((dim, dim), dtype=complex)
    for coeff, ps in op.terms:
        cols = np.arange(dim)
        rows = cols ^ ps.x_mask
        signs = 1.0 - 2.0 * (np.bitwise_count(cols & ps.z_mask) & 1)
        mat[rows, cols] += coeff * (1j ** ps.y_count) * signs
    return mat


def extract_coefficients(matrix: np.ndarray, words: Iterable[PauliString]) -> list[float]:
    """Recover Pauli coefficients of a Hermitian matrix via trace inner products."""
    dim = matrix.shape[0]
    out = []
    for ps in words:
        val = np.trace(pauli_dense(ps).conj().T @ matrix) / dim
        out.append(float(val.real))
    return out


# -- serialization -----------------------------------------------------------

def format_op(op: PauliSumOp) -> str:
    """Line-oriented text form: one ``coeff word`` pair per line.

    Blank lines and lines starting with ``#`` are ignored by the parser.
    """
    return "\n".join(f"{c!r} {ps.word}" for c, ps in op.terms) + "\n"


def parse_op(text: str, n: int | None = None) -> PauliSumOp:
    """Parse the ``coeff word`` format produced by :func:`format_op`."""
    terms: list[tuple[float, PauliString]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'coeff word', got {raw!r}")
        coeff, word = parts
        ps = PauliString(word.upper())
        if n is None:
            n = ps.n
        terms.append((float(coeff), ps))
    if n is None:
        raise ValueError("empty operator text and no qubit count given")
    return PauliSumOp.from_terms(n, terms)
