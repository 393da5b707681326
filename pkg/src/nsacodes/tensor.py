"""Dense complex linear algebra on small Hilbert spaces.

Vectors and operators are plain ``numpy`` arrays of dtype ``complex128``.
Basis states of an n-site register with local dimension q are labelled by
:class:`DitString`; site 0 is the most significant digit, which matches the
ordering of ``np.kron``.
"""

from __future__ import annotations

import functools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

DIM_CAP = 4096
RANK_RTOL = 1e-9


class DimensionError(ValueError):
    """Raised when operands have incompatible shapes or exceed the dimension cap."""


class RankError(ValueError):
    """Raised when vectors meant to span a subspace are linearly dependent."""


@dataclass(frozen=True, order=True)
class DitString:
    """A basis label over the alphabet ``{0, ..., q-1}``."""

    digits: tuple[int, ...]
    q: int = 2

    def __post_init__(self) -> None:
        if self.q < 2:
            raise ValueError(f"local dimension must be >= 2, got {self.q}")
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        if any(d < 0 or d >= self.q for d in self.digits):
            raise ValueError(f"digits {self.digits} out of range for q={self.q}")

    @classmethod
    def parse(cls, text: str, q: int = 2) -> DitString:
        return cls(tuple(int(c) for c in text), q)

    @classmethod
    def from_index(cls, index: int, n: int, q: int = 2) -> DitString:
        digits = []
        for _ in range(n):
            index, d = divmod(index, q)
            digits.append(d)
        return cls(tuple(reversed(digits)), q)

    @property
    def n(self) -> int:
        return len(self.digits)

    @property
    def weight(self) -> int:
        """Generalized Hamming weight: the sum of the digits."""
        return sum(self.digits)

    def index(self) -> int:
        out = 0
        for d in self.digits:
            out = out * self.q + d
        return out

    def complement(self) -> DitString:
        return DitString(tuple(self.q - 1 - d for d in self.digits), self.q)

    def shift(self, a: int) -> DitString:
        """Add ``a`` to every digit modulo q."""
        return DitString(tuple((d + a) % self.q for d in self.digits), self.q)

    def lowered(self, site: int, level: int = 1) -> DitString | None:
        """The label after a jump of ``level`` on ``site``, or None if the digit is too small."""
        if self.digits[site] < level:
            return None
        digits = list(self.digits)
        digits[site] -= level
        return DitString(tuple(digits), self.q)

    def __add__(self, other: DitString) -> DitString:
        return DitString(self.digits + other.digits, self.q)

    def __str__(self) -> str:
        return "".join(str(d) for d in self.digits)


def basis_vector(label: DitString) -> np.ndarray:
    vec = np.zeros(label.q**label.n, dtype=complex)
    vec[label.index()] = 1.0
    return vec


def adjoint(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def tensor(a: np.ndarray, b: np.ndarray, cap: int = DIM_CAP) -> np.ndarray:
    """Kronecker product of two operators (or vectors)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] * b.shape[0] > cap:
        raise DimensionError(
            f"tensor product dimension {a.shape[0] * b.shape[0]} exceeds cap {cap}; check n and q"
        )
    return np.kron(a, b)


def tensor_all(ops: Iterable[np.ndarray], cap: int = DIM_CAP) -> np.ndarray:
    return functools.reduce(lambda x, y: tensor(x, y, cap), ops, np.ones((1, 1), dtype=complex))


def apply_channel(kraus: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Return ``sum_a E_a rho E_a^dagger``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"rho must be square, got shape {rho.shape}")
    for e in kraus:
        if e.shape[1] != rho.shape[0]:
            raise DimensionError(f"Kraus operator of shape {e.shape} does not act on dim {rho.shape[0]}")
    return sum(e @ rho @ adjoint(e) for e in kraus)


def completeness_deficit(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """``I - sum_a E_a^dagger E_a``; positive semidefinite for a trace-non-increasing family."""
    dim = kraus[0].shape[1]
    total = sum(adjoint(e) @ e for e in kraus)
    return np.eye(dim) - total


def orthonormal_basis(vectors: Sequence[np.ndarray], rtol: float = RANK_RTOL) -> np.ndarray:
    """Modified Gram-Schmidt with pivoting on the largest remaining norm.

    Returns a ``dim x r`` matrix with orthonormal columns. Raises
    :class:`RankError` when a vector's residual falls below ``rtol`` times the
    largest input norm.
    """
    if len(vectors) == 0:
        raise RankError("no vectors given")
    work = [np.asarray(v, dtype=complex).copy() for v in vectors]
    scale = max(np.linalg.norm(v) for v in work)
    if scale == 0:
        raise RankError("all vectors are zero")
    basis: list[np.ndarray] = []
    while work:
        norms = [np.linalg.norm(v) for v in work]
        pivot = int(np.argmax(norms))
        if norms[pivot] <= rtol * scale:
            raise RankError(f"vectors are linearly dependent (residual {norms[pivot]:.3e})")
        q = work.pop(pivot) / norms[pivot]
        basis.append(q)
        for v in work:
            v -= q * np.vdot(q, v)
    return np.stack(basis, axis=1)


def projector_from_vectors(vectors: Sequence[np.ndarray], rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthogonal projector onto the span of linearly independent vectors."""
    q = orthonormal_basis(vectors, rtol)
    return q @ adjoint(q)


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ adjoint(g)
    return rho / np.trace(rho)


def haar_states(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count x dim`` array of Haar-random unit vectors."""
    z = rng.normal(size=(count, dim)) + 1j * rng.normal(size=(count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
