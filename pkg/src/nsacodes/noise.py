"""Amplitude-damping Kraus families and independent weight-limited error sets."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from nsacodes.tensor import DIM_CAP, DitString, tensor_all

BOSONIC_DEFAULT_CUTOFF = 6


@dataclass(frozen=True)
class SiteKrausFamily:
    """Single-site Kraus operators ``A^l`` indexed by jump level ``l``."""

    q: int
    gamma: float
    ops: tuple[tuple[int, np.ndarray], ...]
    kind: str = "qudit"

    def op(self, level: int) -> np.ndarray:
        for l, m in self.ops:
            if l == level:
                return m
        raise KeyError(f"no Kraus operator for jump level {level}")

    @property
    def levels(self) -> list[int]:
        return [l for l, _ in self.ops]

    def matrices(self) -> list[np.ndarray]:
        return [m for _, m in self.ops]


@dataclass(frozen=True)
class ErrorSet:
    """Independent error operators ``E_a = A^{l_1} (x) ... (x) A^{l_n}`` with at most t jumps."""

    n: int
    t: int
    q: int
    gamma: float
    kraus: tuple[tuple[DitString, np.ndarray], ...]

    @property
    def labels(self) -> list[DitString]:
        return [label for label, _ in self.kraus]

    def matrices(self) -> list[np.ndarray]:
        return [m for _, m in self.kraus]

    def __len__(self) -> int:
        return len(self.kraus)


def _check_gamma(gamma: float, allow_one: bool = True) -> float:
    gamma = float(gamma)
    upper_ok = gamma <= 1.0 if allow_one else gamma < 1.0
    if not (gamma >= 0.0 and upper_ok):
        raise ValueError(f"decay rate gamma={gamma} out of range")
    return gamma


def qubit_ad(gamma: float) -> SiteKrausFamily:
    """Qubit amplitude damping with the lowering jump ``A^1 = sqrt(gamma)|0><1|``."""
    gamma = _check_gamma(gamma)
    a0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]], dtype=complex)
    a1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return SiteKrausFamily(2, gamma, ((0, a0), (1, a1)), kind="qubit")


def qudit_ad(q: int, gamma: float) -> SiteKrausFamily:
    """Multi-level damping: ``A^l = sum_a sqrt(C(a,l) (1-g)^(a-l) g^l) |a-l><a|``."""
    if q < 2:
        raise ValueError(f"local dimension must be >= 2, got {q}")
    gamma = _check_gamma(gamma)
    ops = []
    for l in range(q):
        m = np.zeros((q, q), dtype=complex)
        for a in range(l, q):
            m[a - l, a] = math.sqrt(math.comb(a, l) * (1.0 - gamma) ** (a - l) * gamma**l)
        ops.append((l, m))
    return SiteKrausFamily(q, gamma, tuple(ops), kind="qudit")


def bosonic_ad(cutoff: int = BOSONIC_DEFAULT_CUTOFF, gamma: float = 0.0, lmax: int = 1) -> SiteKrausFamily:
    """Photon loss ``A^l = (g/(1-g))^(l/2) a^l / sqrt(l!) (1-g)^(n/2)`` on a truncated Fock space.

    The family is complete only when ``lmax >= cutoff - 1``.
    """
    if cutoff < 5:
        raise ValueError(f"cutoff {cutoff} cannot hold Fock state |4> of the 0-2-4 code")
    if lmax < 1:
        raise ValueError("lmax must be >= 1")
    gamma = _check_gamma(gamma, allow_one=False)
    lower = np.diag(np.sqrt(np.arange(1, cutoff)), k=1).astype(complex)
    damp = np.diag((1.0 - gamma) ** (np.arange(cutoff) / 2.0)).astype(complex)
    ops = []
    for l in range(min(lmax, cutoff - 1) + 1):
        pref = (gamma / (1.0 - gamma)) ** (l / 2.0) / math.sqrt(math.factorial(l))
        ops.append((l, pref * np.linalg.matrix_power(lower, l) @ damp))
    return SiteKrausFamily(cutoff, gamma, tuple(ops), kind="bosonic")


def error_labels(n: int, t: int, levels: list[int], q: int) -> list[DitString]:
    """All jump labels with at most t nonzero digits.

    Order: the all-zero label, then by number of jumps, then by jumping
    sites (ascending), then by levels. For single qubit jumps this gives
    1000, 0100, 0010, 0001.
    """
    jumps = [l for l in levels if l > 0]
    out = []
    for w in range(min(t, n) + 1):
        for sites in itertools.combinations(range(n), w):
            for lv in itertools.product(jumps, repeat=w):
                digits = [0] * n
                for s, l in zip(sites, lv):
                    digits[s] = l
                out.append(DitString(tuple(digits), q))
    return out


def build_error_set(family: SiteKrausFamily, n: int, t: int, cap: int = DIM_CAP) -> ErrorSet:
    if t > n:
        raise ValueError(f"t={t} exceeds n={n}")
    if family.q**n > cap:
        raise ValueError(f"register dimension {family.q}^{n} exceeds cap {cap}")
    kraus = []
    for label in error_labels(n, t, family.levels, family.q):
        kraus.append((label, tensor_all((family.op(l) for l in label.digits), cap)))
    return ErrorSet(n, t, family.q, family.gamma, tuple(kraus))


def error_set_for(q: int, n: int, gamma: float, t: int = 1, kind: str = "qudit") -> ErrorSet:
    """Convenience: the t-jump error set for a qubit/qudit register or a bosonic mode."""
    if kind == "bosonic":
        return build_error_set(bosonic_ad(q, gamma, lmax=t), n, t)
    family = qubit_ad(gamma) if q == 2 else qudit_ad(q, gamma)
    return build_error_set(family, n, t)
