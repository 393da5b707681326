"""Variational learning of code spaces with a layered RX/RZ/RZZ encoding circuit.

The circuit acts on n qubits; the first k carry the logical input and the
rest start in |0>. Losses are the KL violation losses at a fixed decay rate,
minimized with BFGS on central finite-difference gradients (all perturbed
parameter vectors are simulated as one batch).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from nsacodes.codes import CodeSpace, Codeword, Family, code_from_json, code_to_json
from nsacodes.klmetrics import kl_tensor, loss_terms
from nsacodes.noise import error_set_for
from nsacodes.tensor import DitString

LAYERS = 3
FD_STEP = 1e-6
STAGE1_TARGET = 1e-4
STAGE1_MAX_STEPS = 5000
DEFAULT_MAX_STEPS = 20000
GTOL = 1e-8
DOMINANT = 0.1
TEMPLATE_RESIDUAL = 0.05


def expected_param_count(n: int) -> int:
    return (3 * n * n + 13 * n) // 2


@dataclass(frozen=True)
class Gate:
    kind: str
    sites: tuple[int, ...]
    param: int


@dataclass
class ParamCircuit:
    """Three entangling layers plus a trailing RX/RZ layer.

    Each entangling layer is RX and RZ on every qubit followed by RZZ on every
    unordered pair; the trailing single-qubit layer brings the parameter count
    to ``(3n^2 + 13n)/2``.
    """

    n: int
    k: int = 1
    params: np.ndarray | None = None
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.n > 8:
            raise ValueError("statevector learning is limited to n <= 8")
        idx = itertools.count()
        gates = []
        for _ in range(LAYERS):
            gates += [Gate("RX", (j,), next(idx)) for j in range(self.n)]
            gates += [Gate("RZ", (j,), next(idx)) for j in range(self.n)]
            gates += [Gate("RZZ", pair, next(idx)) for pair in itertools.combinations(range(self.n), 2)]
        gates += [Gate("RX", (j,), next(idx)) for j in range(self.n)]
        gates += [Gate("RZ", (j,), next(idx)) for j in range(self.n)]
        self.gates = gates
        count = len(gates)
        if count != expected_param_count(self.n):
            raise AssertionError(f"circuit has {count} parameters, expected {expected_param_count(self.n)}")
        if self.params is None:
            self.params = np.zeros(count)
        self.params = np.asarray(self.params, dtype=float)
        if self.params.shape != (count,):
            raise ValueError(f"expected {count} parameters, got shape {self.params.shape}")

    @property
    def n_params(self) -> int:
        return len(self.gates)


class _Simulator:
    """Batched statevector simulation of a :class:`ParamCircuit` layout."""

    def __init__(self, n: int, k: int):
        self.n, self.k = n, k
        self.dim = 2**n
        bits = (np.arange(self.dim)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
        z = 1.0 - 2.0 * bits.T  # (n, dim), site 0 most significant
        pairs = list(itertools.combinations(range(n), 2))
        zz = np.array([z[i] * z[j] for i, j in pairs]).reshape(len(pairs), self.dim)
        self.diag_ops = np.concatenate([z, zz])  # (n + pairs, dim)
        self.block = 2 * n + len(pairs)
        self.inputs = np.zeros((2**k, self.dim), dtype=complex)
        for lam in range(2**k):
            self.inputs[lam, lam << (n - k)] = 1.0

    def _rx(self, state: np.ndarray, theta: np.ndarray, site: int) -> np.ndarray:
        b = state.shape[0]
        s = state.reshape(b, -1, 2**site, 2, 2 ** (self.n - site - 1))
        c = np.cos(theta / 2)[:, None, None, None]
        sn = -1j * np.sin(theta / 2)[:, None, None, None]
        a0, a1 = s[:, :, :, 0, :], s[:, :, :, 1, :]
        out = np.stack([c * a0 + sn * a1, sn * a0 + c * a1], axis=3)
        return out.reshape(state.shape)

    def _diag(self, state: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        phase = np.exp(-0.5j * thetas @ self.diag_ops)  # (B, dim)
        return state * phase[:, None, :]

    def codewords(self, params: np.ndarray) -> np.ndarray:
        """``(B, dim, K)`` codeword matrices for a ``(B, P)`` batch of parameters."""
        params = np.atleast_2d(params)
        b, n = params.shape[0], self.n
        state = np.broadcast_to(self.inputs, (b,) + self.inputs.shape).copy()
        offset = 0
        for _ in range(LAYERS):
            for j in range(n):
                state = self._rx(state, params[:, offset + j], j)
            state = self._diag(state, params[:, offset + n : offset + self.block])
            offset += self.block
        for j in range(n):
            state = self._rx(state, params[:, offset + j], j)
        state = self._diag(state, np.concatenate([params[:, offset + n : offset + 2 * n],
                                                  np.zeros((b, self.diag_ops.shape[0] - n))], axis=1))
        return np.swapaxes(state, 1, 2)


def encode(circ: ParamCircuit, logical: DitString | str) -> np.ndarray:
    """State after preparing ``|logical>|0...0>`` and running the circuit."""
    if isinstance(logical, str):
        logical = DitString.parse(logical)
    if logical.n != circ.k or logical.q != 2:
        raise ValueError(f"logical input must be {circ.k} bits")
    sim = _Simulator(circ.n, circ.k)
    return sim.codewords(circ.params[None, :])[0][:, logical.index()]


def circuit_code(circ: ParamCircuit, gamma: float = 0.0, atol: float = 0.0) -> CodeSpace:
    v = _Simulator(circ.n, circ.k).codewords(circ.params[None, :])[0]
    words = tuple(Codeword.from_vector(v[:, i], circ.n, 2, atol) for i in range(v.shape[1]))
    return CodeSpace(words, circ.n, circ.k, 2, float(gamma), Family.CUSTOM)


class LossModel:
    """L1/L2 losses of the encoded code as functions of the circuit parameters."""

    def __init__(self, n: int, k: int, gamma0: float, t: int = 1):
        self.sim = _Simulator(n, k)
        self.errors = np.stack(error_set_for(2, n, gamma0, t=t).matrices())

    def losses(self, params: np.ndarray, power: int) -> np.ndarray:
        m = kl_tensor(self.sim.codewords(params), self.errors)
        return loss_terms(m, power).sum(axis=(-1, -2))

    def value(self, x: np.ndarray, power: int) -> float:
        return float(self.losses(x[None, :], power)[0])

    def gradient(self, x: np.ndarray, power: int, h: float = FD_STEP) -> np.ndarray:
        p = x.size
        shifts = np.concatenate([np.eye(p), -np.eye(p)]) * h
        vals = self.losses(x[None, :] + shifts, power)
        return (vals[:p] - vals[p:]) / (2.0 * h)


@dataclass
class LearnResult:
    n: int
    k: int
    gamma0: float
    seed: int
    final_params: np.ndarray
    final_loss: float
    loss_trace: list[tuple[str, float]]
    code: CodeSpace
    converged: bool
    steps: dict[str, int]

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "k": self.k,
                "gamma0": self.gamma0,
                "seed": self.seed,
                "final_loss": self.final_loss,
                "converged": self.converged,
                "steps": self.steps,
                "final_params": [float(x) for x in self.final_params],
                "loss_trace": [[stage, value] for stage, value in self.loss_trace],
                "code": json.loads(code_to_json(self.code)),
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> LearnResult:
        d = json.loads(text)
        return cls(
            n=d["n"],
            k=d["k"],
            gamma0=d["gamma0"],
            seed=d["seed"],
            final_params=np.array(d["final_params"]),
            final_loss=d["final_loss"],
            loss_trace=[(s, v) for s, v in d["loss_trace"]],
            code=code_from_json(d["code"]),
            converged=d["converged"],
            steps=d["steps"],
        )


def _run_stage(model: LossModel, x0: np.ndarray, power: int, budget: int, target: float | None, trace, tag):
    """BFGS on one loss, restarted from the last iterate while it keeps improving.

    On the non-smooth L1 surface the line search regularly gives up with a
    stale Hessian estimate; a fresh start from the same point usually moves on.
    """
    steps = 0
    x = np.asarray(x0, dtype=float)
    current = model.value(x, power)

    def callback(intermediate_result):
        nonlocal steps
        steps += 1
        trace.append((tag, float(intermediate_result.fun)))
        if target is not None and intermediate_result.fun < target:
            raise StopIteration
        if steps >= budget:
            raise StopIteration

    while steps < budget:
        res = scipy.optimize.minimize(
            model.value,
            x,
            args=(power,),
            jac=lambda y, pw: model.gradient(y, pw),
            method="BFGS",
            callback=callback,
            options={"gtol": GTOL, "maxiter": budget - steps, "norm": 2.0},
        )
        gain = current - float(res.fun)
        if res.fun <= current:
            x, current = res.x, float(res.fun)
        if target is not None and current < target:
            break
        if res.success or gain <= 1e-12 * max(current, 1e-300):
            break
    grad_norm = float(np.linalg.norm(model.gradient(x, power)))
    return x, steps, grad_norm


def learn_code(
    n: int = 4,
    k: int = 1,
    gamma0: float = 10**-1.5,
    seed: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
    stage1_steps: int = STAGE1_MAX_STEPS,
) -> LearnResult:
    """Pre-train on L2 (until below 1e-4 or the stage budget), then fine-tune on L1."""
    if not 0.0 < gamma0 < 1.0:
        raise ValueError(f"gamma0={gamma0} must lie in (0, 1)")
    circ = ParamCircuit(n, k)
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 2.0 * math.pi, circ.n_params)
    model = LossModel(n, k, gamma0)
    trace: list[tuple[str, float]] = [("init", model.value(x, 1))]
    x, s1, _ = _run_stage(model, x, 2, min(stage1_steps, max_steps), STAGE1_TARGET, trace, "L2")
    x, s2, grad_norm = _run_stage(model, x, 1, max(max_steps - s1, 1), None, trace, "L1")
    circ.params = x
    code = circuit_code(circ, gamma0)
    return LearnResult(
        n=n,
        k=k,
        gamma0=gamma0,
        seed=seed,
        final_params=x,
        final_loss=model.value(x, 1),
        loss_trace=trace,
        code=code,
        converged=grad_norm < GTOL,
        steps={"L2": s1, "L1": s2},
    )


# Ansatz extraction ----------------------------------------------------------


@dataclass(frozen=True)
class AnsatzReport:
    classification: str  # "SC", "PC" or "unclassified"
    residual: float
    sc_residual: float
    pc_residual: float
    dominant: tuple[str, ...]
    magnitudes: dict[str, float]
    template: dict[str, float]

    def line(self) -> str:
        return (
            f"classification={self.classification} residual={self.residual:.4f} "
            f"support={{{','.join(self.dominant)}}}"
        )


def _nsa_weight(x: DitString, gamma: float) -> float:
    return (1.0 - gamma) ** (-x.weight / 2.0)


def _template_projector(blocks: list[list[DitString]], dim: int, gamma: float) -> np.ndarray:
    """|P| of a code whose codewords are NSA-weighted, disjoint string sets."""
    p = np.zeros((dim, dim))
    for strings in blocks:
        v = np.zeros(dim)
        for x in strings:
            v[x.index()] = _nsa_weight(x, gamma)
        v /= np.linalg.norm(v)
        p += np.outer(v, v)
    return p


def _sc_blocks(support: list[DitString]) -> list[list[DitString]] | None:
    remaining = set(support)
    blocks = []
    for x in sorted(support):
        if x not in remaining:
            continue
        xb = x.complement()
        if xb not in remaining or xb == x:
            return None
        remaining -= {x, xb}
        blocks.append([x, xb])
    return blocks


def _pc_blocks(support: list[DitString], n: int) -> list[list[DitString]] | None:
    """Split an 8m-string support into PC codeword supports for some pair of sites."""
    if len(support) % 8 or n < 3:
        return None
    for i, j in itertools.combinations(range(n), 2):
        rest = [p for p in range(n) if p not in (i, j)]
        groups: dict[DitString, list[DitString]] = {}
        for x in support:
            prefix = DitString(tuple(x.digits[p] for p in rest))
            groups.setdefault(min(prefix, prefix.complement()), []).append(x)
        if any(len(g) != 8 for g in groups.values()):
            continue
        blocks = []
        for rep, strings in sorted(groups.items()):
            first, second = [], []
            for x in strings:
                prefix = DitString(tuple(x.digits[p] for p in rest))
                same = x.digits[i] == x.digits[j]
                # u00, u11, ~u10, ~u01  |  u01, u10, ~u11, ~u00
                (first if same == (prefix == rep) else second).append(x)
            if len(first) != 4 or len(second) != 4:
                break
            blocks += [first, second]
        else:
            return blocks
    return None


def extract_ansatz(result: LearnResult | CodeSpace, gamma0: float | None = None) -> AnsatzReport:
    """Classify a learned code by comparing its phase-free structure with NSA templates.

    The comparison uses ``|P|``, the entrywise magnitude of the code-space
    projector: it ignores per-basis phases and any logical rotation of the
    codewords. A template matches when ``max |(|P| - |P_template|)|`` is at
    most 0.05.
    """
    code = result.code if isinstance(result, LearnResult) else result
    gamma = result.gamma0 if isinstance(result, LearnResult) else code.gamma
    if gamma0 is not None:
        gamma = gamma0
    v = code.matrix()
    proj = np.abs(v @ v.conj().T)
    weights = np.sqrt(np.clip(np.real(np.diag(v @ v.conj().T)), 0.0, None))
    support = [DitString.from_index(i, code.n, code.q) for i in np.flatnonzero(weights > DOMINANT)]
    residuals = {}
    templates = {}
    for name, blocks in (("SC", _sc_blocks(support)), ("PC", _pc_blocks(support, code.n))):
        if blocks is None or len(blocks) != code.K:
            residuals[name] = math.inf
            continue
        tp = _template_projector(blocks, code.dim, gamma)
        residuals[name] = float(np.max(np.abs(proj - tp)))
        templates[name] = np.sqrt(np.diag(tp))
    best = min(residuals, key=residuals.get)
    label = best if residuals[best] <= TEMPLATE_RESIDUAL else "unclassified"
    template = templates.get(best, np.zeros(code.dim))
    return AnsatzReport(
        classification=label,
        residual=residuals[best],
        sc_residual=residuals["SC"],
        pc_residual=residuals["PC"],
        dominant=tuple(str(x) for x in support),
        magnitudes={str(x): float(weights[x.index()]) for x in support},
        template={str(x): float(template[x.index()]) for x in support},
    )
