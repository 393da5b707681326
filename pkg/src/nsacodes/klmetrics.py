"""Knill-Laflamme matrices and violation losses."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nsacodes.codes import CodeSpace
from nsacodes.noise import ErrorSet
from nsacodes.tensor import DimensionError, DitString


@dataclass(frozen=True)
class KLMatrix:
    """``M[alpha, beta] = <psi_alpha| E_a^dag E_b |psi_beta>`` for one ordered pair (a, b)."""

    mu_label: tuple[DitString, DitString]
    entries: np.ndarray

    @property
    def c_ab(self) -> complex:
        return complex(np.mean(np.diag(self.entries)))

    @property
    def epsilon(self) -> np.ndarray:
        return self.entries - self.c_ab * np.eye(self.entries.shape[0])


@dataclass(frozen=True)
class LossReport:
    gamma: float
    l1: float
    l2: float
    per_mu: dict[tuple[str, str], tuple[float, float]] = field(default_factory=dict)

    def csv_row(self, family: str) -> list[str]:
        return [format(self.gamma, ".17g"), family, format(self.l1, ".17g"), format(self.l2, ".17g")]


def _check_compatible(code: CodeSpace, errs: ErrorSet) -> None:
    if code.n != errs.n or code.q != errs.q:
        raise DimensionError(
            f"code acts on (n={code.n}, q={code.q}) but errors on (n={errs.n}, q={errs.q})"
        )


def kl_tensor(codewords: np.ndarray, error_ops: np.ndarray) -> np.ndarray:
    """All KL matrices at once.

    ``codewords`` has shape ``(..., dim, K)`` and ``error_ops`` shape
    ``(A, dim, dim)``; the result has shape ``(..., A, A, K, K)``.
    """
    images = np.einsum("axy,...yk->...axk", error_ops, codewords)
    return np.einsum("...axk,...bxl->...abkl", images.conj(), images)


def loss_terms(m: np.ndarray, power: int = 1) -> np.ndarray:
    """Per-(a, b) loss contributions from a KL tensor of shape ``(..., K, K)``.

    Off-diagonal upper-triangle magnitudes plus half (power 1) or a quarter
    (power 2) of each diagonal's deviation from the diagonal mean.
    """
    K = m.shape[-1]
    iu = np.triu_indices(K, 1)
    off = np.abs(m[..., iu[0], iu[1]]) ** power
    diag = np.diagonal(m, axis1=-2, axis2=-1)
    dev = np.abs(diag - diag.mean(axis=-1, keepdims=True)) ** power
    weight = 0.5 if power == 1 else 0.25
    return off.sum(axis=-1) + weight * dev.sum(axis=-1)


def kl_matrices(code: CodeSpace, errs: ErrorSet) -> list[KLMatrix]:
    _check_compatible(code, errs)
    m = kl_tensor(code.matrix(), np.stack(errs.matrices()))
    labels = errs.labels
    return [
        KLMatrix((la, lb), m[i, j]) for i, la in enumerate(labels) for j, lb in enumerate(labels)
    ]


def l1_loss(code: CodeSpace, errs: ErrorSet) -> float:
    _check_compatible(code, errs)
    m = kl_tensor(code.matrix(), np.stack(errs.matrices()))
    return float(loss_terms(m, 1).sum())


def l2_loss(code: CodeSpace, errs: ErrorSet) -> float:
    _check_compatible(code, errs)
    m = kl_tensor(code.matrix(), np.stack(errs.matrices()))
    return float(loss_terms(m, 2).sum())


def loss_report(code: CodeSpace, errs: ErrorSet) -> LossReport:
    _check_compatible(code, errs)
    m = kl_tensor(code.matrix(), np.stack(errs.matrices()))
    t1, t2 = loss_terms(m, 1), loss_terms(m, 2)
    labels = [str(x) for x in errs.labels]
    per_mu = {
        (la, lb): (float(t1[i, j]), float(t2[i, j]))
        for i, la in enumerate(labels)
        for j, lb in enumerate(labels)
    }
    return LossReport(code.gamma, float(t1.sum()), float(t2.sum()), per_mu)


def lemma_fidelity_bound(l1: float, K: int) -> float:
    """Lower bound ``1 - 2 K^2 L`` on the completely bounded fidelity; may be negative."""
    if l1 < 0:
        raise ValueError("loss must be non-negative")
    if K < 1:
        raise ValueError("code dimension must be >= 1")
    return 1.0 - 2.0 * K**2 * l1
