"""Syndrome-sector filter recoveries and worst-case fidelities.

A recovery plan splits the images ``E_a |psi_lambda>`` of the code under the
error set into mutually orthogonal sectors. In each sector every logical
index owns a single normalized error word ``e_lambda`` with amplitude
``a_lambda``; the filter ``R_s = m_s sum_lambda |psi_lambda><e_lambda| / a_lambda``
with ``m_s = min_lambda a_lambda`` acts on the logical space as the scalar
``m_s``. The worst-case fidelity with no residual logical error is then
``sum_s m_s**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from nsacodes.codes import CodeSpace, Family, SCBasisSet, class_members
from nsacodes.noise import ErrorSet
from nsacodes.tensor import DimensionError, adjoint, apply_channel, haar_states, projector_from_vectors

OVERLAP_TOL = 1e-8
EIG_RTOL = 1e-8
ZERO_RTOL = 1e-13


class DecompositionError(ValueError):
    """The error images admit no sector decomposition with one image per logical index."""


class OracleMismatchError(AssertionError):
    """The sampled worst-case fidelity disagrees with the plan's value."""


@dataclass(frozen=True)
class SyndromeSector:
    label: str
    projector: np.ndarray
    error_words: tuple[np.ndarray, ...]
    amplitudes: tuple[float, ...]
    errors: tuple[str, ...]
    branch: np.ndarray

    @property
    def m(self) -> float:
        return min(self.amplitudes)


@dataclass(frozen=True)
class RecoveryPlan:
    sectors: tuple[SyndromeSector, ...]
    codewords: np.ndarray
    fail_weight: float

    def kraus(self) -> list[np.ndarray]:
        """Recovery operators ``R_s`` on the physical space (outputs lie in the code space)."""
        ops = []
        for s in self.sectors:
            r = np.zeros((self.codewords.shape[0], self.codewords.shape[0]), dtype=complex)
            for lam, (e, a) in enumerate(zip(s.error_words, s.amplitudes)):
                r += (s.m / a) * np.outer(self.codewords[:, lam], e.conj())
            ops.append(r)
        return ops

    def fail_operator(self) -> np.ndarray:
        """``sqrt(I - sum_s R_s^dag R_s)``, routed to an orthogonal abort flag."""
        dim = self.codewords.shape[0]
        deficit = np.eye(dim) - sum(adjoint(r) @ r for r in self.kraus())
        w, u = np.linalg.eigh(deficit)
        if w.min() < -1e-10:
            raise ValueError(f"recovery is not trace non-increasing (eigenvalue {w.min():.3e})")
        return (u * np.sqrt(np.clip(w, 0.0, None))) @ adjoint(u)


def _image_basis(w: np.ndarray) -> np.ndarray:
    u, s, _ = np.linalg.svd(w, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return u[:, :0]
    return u[:, s > 1e-12 * s[0]]


def _group_errors(bases: list[np.ndarray], tol: float) -> list[list[int]]:
    parent = list(range(len(bases)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            if np.linalg.norm(adjoint(bases[i]) @ bases[j], 2) > tol:
                parent[find(j)] = find(i)
    groups: dict[int, list[int]] = {}
    for i in range(len(bases)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _split_clusters(w: np.ndarray, tol: float) -> list[np.ndarray]:
    out, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            out.append(np.arange(start, i))
            start = i
    return out


def simultaneous_eigenbasis(mats: list[np.ndarray], rtol: float = EIG_RTOL) -> np.ndarray:
    """Common eigenbasis of commuting Hermitian matrices (columns of the result).

    Refines blocks one matrix at a time; raises :class:`DecompositionError`
    when the matrices are not simultaneously diagonal in the final basis.
    """
    d = mats[0].shape[0]
    scale = max(float(np.linalg.norm(g, 2)) for g in mats) or 1.0
    blocks = [np.eye(d, dtype=complex)]
    for g in mats:
        refined = []
        for b in blocks:
            if b.shape[1] == 1:
                refined.append(b)
                continue
            w, u = np.linalg.eigh(adjoint(b) @ g @ b)
            for idx in _split_clusters(w, rtol * scale):
                refined.append(b @ u[:, idx])
        blocks = refined
    basis = np.concatenate(blocks, axis=1)
    for g in mats:
        h = adjoint(basis) @ g @ basis
        off = h - np.diag(np.diag(h))
        if np.max(np.abs(off), initial=0.0) > 1e2 * rtol * scale:
            raise DecompositionError("error images do not share a common sector decomposition")
    return basis


def _sector_tag(labels: list[str], v: np.ndarray, index: int) -> str:
    if len(labels) == 1:
        return labels[0]
    name = "+".join(labels)
    if len(labels) == 2:
        ratio = v[1] / v[0] if abs(v[0]) > 1e-12 else np.inf
        if np.isclose(ratio, 1.0, atol=1e-8):
            return f"{name}/S"
        if np.isclose(ratio, -1.0, atol=1e-8):
            return f"{name}/A"
    return f"{name}/{index}"


def build_recovery(
    code: CodeSpace, errs: ErrorSet, overlap_tol: float = OVERLAP_TOL, eig_rtol: float = EIG_RTOL
) -> RecoveryPlan:
    """Sector decomposition and min-amplitude filter for ``code`` under ``errs``.

    Errors whose image spaces overlap are grouped; inside a group the per-logical
    Gram matrices of the images are simultaneously diagonalized, and every
    common eigenvector becomes one sector (this reproduces the symmetric and
    antisymmetric sectors of pair-complementary codes).
    """
    if code.n != errs.n or code.q != errs.q:
        raise DimensionError("code and error set act on different registers")
    v = code.matrix()
    K = v.shape[1]
    images = np.stack([e @ v for e in errs.matrices()])  # (A, dim, K)
    labels = [str(x) for x in errs.labels]
    top = float(np.max(np.abs(images)))
    active = [i for i in range(len(images)) if np.max(np.abs(images[i])) > ZERO_RTOL * top]
    bases = [_image_basis(images[i]) for i in active]
    sectors = []
    for group in _group_errors(bases, overlap_tol):
        members = [active[i] for i in group]
        w = images[members]  # (g, dim, K)
        cross = np.einsum("axk,bxl->kalb", w.conj(), w)  # (K, g, K, g)
        grams = [cross[lam, :, lam, :] for lam in range(K)]
        scale = max(float(np.linalg.norm(g, 2)) for g in grams) or 1.0
        leak = cross.copy()
        for lam in range(K):
            leak[lam, :, lam, :] = 0.0
        if np.max(np.abs(leak)) > 1e2 * eig_rtol * scale:
            raise DecompositionError(
                f"images of different logical states overlap under errors {[labels[i] for i in members]}"
            )
        basis = simultaneous_eigenbasis(grams, eig_rtol)
        for s in range(basis.shape[1]):
            vec = basis[:, s]
            phase = vec[np.argmax(np.abs(vec))]
            vec = vec * (abs(phase) / phase)
            words = np.einsum("axk,a->xk", w, vec.conj())  # branch-weighted image per logical
            amps = np.linalg.norm(words, axis=0)
            if amps.min() <= ZERO_RTOL * top:
                continue
            evecs = tuple(words[:, lam] / amps[lam] for lam in range(K))
            sectors.append(
                SyndromeSector(
                    label=_sector_tag([labels[i] for i in members], vec, s),
                    projector=projector_from_vectors(list(evecs)),
                    error_words=evecs,
                    amplitudes=tuple(float(a) for a in amps),
                    errors=tuple(labels[i] for i in members),
                    branch=vec,
                )
            )
    fidelity = sum(s.m**2 for s in sectors)
    return RecoveryPlan(tuple(sectors), v, max(0.0, 1.0 - fidelity))


def worst_case_fidelity(plan: RecoveryPlan) -> float:
    return float(sum(s.m**2 for s in plan.sectors))


def state_fidelity(code: CodeSpace, errs: ErrorSet, plan: RecoveryPlan, coeffs: np.ndarray) -> float:
    """``<psi| R(N(|psi><psi|)) |psi>`` by explicit density-matrix propagation."""
    psi = code.matrix() @ (np.asarray(coeffs, dtype=complex) / np.linalg.norm(coeffs))
    rho = np.outer(psi, psi.conj())
    noisy = apply_channel(errs.matrices(), rho)
    recovered = apply_channel(plan.kraus(), noisy)
    return float(np.real(psi.conj() @ recovered @ psi))


def _logical_transfer(code: CodeSpace, errs: ErrorSet, plan: RecoveryPlan) -> np.ndarray:
    """``V^dag R_s E_a V`` for every (sector, error) pair, shape ``(S*A, K, K)``."""
    v = code.matrix()
    ops = [adjoint(v) @ r @ e @ v for r in plan.kraus() for e in errs.matrices()]
    return np.stack(ops) if ops else np.zeros((0, code.K, code.K), dtype=complex)


def _batch_fidelity(transfer: np.ndarray, states: np.ndarray) -> np.ndarray:
    amps = np.einsum("ni,sij,nj->ns", states.conj(), transfer, states)
    return np.sum(np.abs(amps) ** 2, axis=1)


def fidelity_oracle_min_over_states(
    code: CodeSpace,
    errs: ErrorSet,
    plan: RecoveryPlan,
    n_restarts: int = 1000,
    seed: int = 0,
    refine: int = 5,
) -> float:
    """Minimum recovered fidelity over Haar-random logical states plus local refinement.

    Each branch ``R_s E_a |psi>`` is propagated separately, which equals the
    density-matrix evolution of the pure input.
    """
    if code.K > 9:
        raise ValueError("oracle is limited to K <= 9")
    rng = np.random.default_rng(seed)
    transfer = _logical_transfer(code, errs, plan)
    states = haar_states(code.K, n_restarts, rng)
    values = _batch_fidelity(transfer, states)
    best = float(values.min())

    def objective(x: np.ndarray) -> float:
        c = x[: code.K] + 1j * x[code.K :]
        c = c / np.linalg.norm(c)
        return float(_batch_fidelity(transfer, c[None, :])[0])

    for idx in np.argsort(values)[:refine]:
        x0 = np.concatenate([states[idx].real, states[idx].imag])
        res = scipy.optimize.minimize(objective, x0, method="Nelder-Mead", options={"maxiter": 400})
        best = min(best, float(res.fun))
    return best


def check_plan_against_oracle(
    code: CodeSpace, errs: ErrorSet, plan: RecoveryPlan, tol: float = 1e-9, **kwargs
) -> float:
    f_plan = worst_case_fidelity(plan)
    f_oracle = fidelity_oracle_min_over_states(code, errs, plan, **kwargs)
    if abs(f_plan - f_oracle) > tol:
        raise OracleMismatchError(f"plan fidelity {f_plan!r} vs oracle {f_oracle!r}")
    return f_oracle


# Closed forms ---------------------------------------------------------------


def _sc_exact(basis: SCBasisSet, gamma: float, nsa: bool) -> float:
    """Per-sector minima over the classes of a concrete SC basis set."""
    g, n, q = gamma, basis.n, basis.q
    no_jump = []
    jumps = {(i, l): [] for i in range(n) for l in range(1, q)}
    for rep in basis.classes:
        members = class_members(rep)
        raw = [(1.0 - g) ** (-x.weight) if nsa else 1.0 for x in members]
        total = sum(raw)
        probs = [r / total for r in raw]
        no_jump.append(sum(p * (1.0 - g) ** x.weight for p, x in zip(probs, members)))
        for (i, l), bucket in jumps.items():
            bucket.append(
                sum(
                    p * math.comb(x.digits[i], l) * g**l * (1.0 - g) ** (x.weight - l)
                    for p, x in zip(probs, members)
                )
            )
    return min(no_jump) + sum(min(b) for b in jumps.values())


def closed_form_fidelity(
    family: Family | str,
    n: int,
    k: int | None = None,
    q: int = 2,
    gamma: float = 0.0,
    basis: SCBasisSet | None = None,
) -> float:
    """Exact fidelity expressions for the built-in families.

    SC families assume the all-zero class (and, for non-NSA codes, a weight-
    balanced class) belongs to the basis set, i.e. the largest-k code. Passing
    ``basis`` evaluates the same sums restricted to that basis's classes.
    ``n`` counts physical sites; for NSA_PC it is the size of the PC code.
    """
    family = Family(family)
    g = float(gamma)
    if not 0.0 <= g < 1.0:
        raise ValueError(f"gamma={g} must lie in [0, 1)")
    r = 1.0 - g
    if basis is not None and family in (
        Family.NSA_SC,
        Family.NONNSA_SC,
        Family.LNCY,
        Family.NSA_SC_QUDIT,
        Family.NONNSA_SC_QUDIT,
    ):
        return _sc_exact(basis, g, nsa=family in (Family.NSA_SC, Family.NSA_SC_QUDIT))
    if family is Family.NSA_SC:
        return 2.0 / (1.0 + r**-n) + n * g / (r ** (1 - n) + r)
    if family in (Family.NONNSA_SC, Family.LNCY):
        h = n // 2
        return (r**h + r ** (n - h)) / 2.0 + n * g * r ** (n - 1) / 2.0
    if family is Family.NSA_PC:
        n0 = 1.0 + r**-2 + 2.0 * r ** -(n - 1)
        n1 = r**-n + r ** -(n - 2) + 2.0 / r
        return (4.0 + 2.0 * n * g / r) / max(n0, n1)
    if family is Family.NSA_SC_QUDIT:
        denom = sum(r ** (-a * n) for a in range(q))
        jumps = sum(math.comb(a, l) * g**l * r**-l for l in range(1, q) for a in range(q))
        return (q + n * jumps) / denom
    if family is Family.NONNSA_SC_QUDIT:
        balanced = n * (q - 1) / 2.0
        f0 = r**balanced
        f_jump = sum(
            math.comb(a, l) * g**l * r ** (n * a - l) / q for l in range(1, q) for a in range(q)
        )
        return f0 + n * f_jump
    if family is Family.BINOMIAL_024:
        return min((1.0 + r**4) / 2.0, r**2) + 2.0 * g / r * min(r**4, r**2)
    if family is Family.NSA_BINOMIAL_024:
        m2 = min(2.0 / (1.0 + r**-4), r**2)
        return m2 + 2.0 * g / r * m2
    raise ValueError(f"no closed form for family {family.value}")


@dataclass(frozen=True)
class OrderingVerdict:
    n: int
    gammas: tuple[float, ...]
    f_sc_n: tuple[float, ...]
    f_pc_n2: tuple[float, ...]
    f_sc_n2: tuple[float, ...]

    @property
    def holds(self) -> bool:
        return all(a > b > c for a, b, c in zip(self.f_sc_n, self.f_pc_n2, self.f_sc_n2))


def ordering_check(n: int, gammas: list[float] | None = None) -> OrderingVerdict:
    """Compare F_SC((n,k)), F_PC((n+2,k+1)) and F_SC((n+2,k+1)) on a gamma grid (gamma > 0)."""
    if n < 3:
        raise ValueError("ordering check needs n >= 3")
    if gammas is None:
        gammas = list(np.logspace(-3, -1, 10))
    if any(g <= 0.0 for g in gammas):
        raise ValueError("ordering is strict only for gamma > 0")
    sc_n = tuple(closed_form_fidelity(Family.NSA_SC, n, gamma=g) for g in gammas)
    pc = tuple(closed_form_fidelity(Family.NSA_PC, n + 2, gamma=g) for g in gammas)
    sc_n2 = tuple(closed_form_fidelity(Family.NSA_SC, n + 2, gamma=g) for g in gammas)
    return OrderingVerdict(n, tuple(float(g) for g in gammas), sc_n, pc, sc_n2)


# Pair-complementary sector purity ------------------------------------------


def pc_symmetry_projectors(code: CodeSpace) -> tuple[np.ndarray, np.ndarray]:
    """The symmetrized and antisymmetrized projectors of a PC code's last two sites.

    Built from the nominal structure of the code's class representatives,
    independently of the code's actual amplitudes.
    """
    if code.family is not Family.NSA_PC or not code.classes:
        raise ValueError("symmetry projectors need a pair-complementary code with classes")
    from nsacodes.tensor import DitString, basis_vector

    def ket(prefix: DitString, tail: str) -> np.ndarray:
        return basis_vector(prefix + DitString.parse(tail))

    sym, anti = [], []
    for u in code.classes:
        ub = u.complement()
        sym.append(ket(u, "01") + ket(u, "10") - 2 * ket(ub, "00"))
        sym.append(ket(ub, "01") + ket(ub, "10") + 2 * ket(u, "00"))
        anti.append(ket(u, "01") - ket(u, "10"))
        anti.append(ket(ub, "01") - ket(ub, "10"))
    return projector_from_vectors(sym), projector_from_vectors(anti)


def pc_sector_purity(code: CodeSpace, errs: ErrorSet, seed: int = 7) -> float:
    """Largest relative second eigenvalue of the projected two-jump mixture.

    The mixture ``P (E_x rho E_x^dag + E_y rho E_y^dag) P`` for jumps on the two
    appended sites must be rank one for every logical input; returns the worst
    ``lambda_2 / lambda_1`` over the logical basis states and a fixed random
    superposition.
    """
    p_s, p_a = pc_symmetry_projectors(code)
    n = code.n
    tail_errors = []
    for label, op in errs.kraus:
        if label.weight == 1 and label.digits[n - 2] + label.digits[n - 1] == 1:
            tail_errors.append(op)
    if len(tail_errors) != 2:
        raise ValueError("error set lacks the two single jumps on the appended sites")
    rng = np.random.default_rng(seed)
    inputs = [np.eye(code.K)[i] for i in range(code.K)] + list(haar_states(code.K, 1, rng))
    v = code.matrix()
    worst = 0.0
    for c in inputs:
        psi = v @ c
        rho = np.outer(psi, psi.conj())
        mix = apply_channel(tail_errors, rho)
        for p in (p_s, p_a):
            w = np.linalg.eigvalsh(p @ mix @ p)[::-1]
            if w[0] > 1e-300:
                worst = max(worst, float(max(w[1], 0.0) / w[0]))
    return worst
