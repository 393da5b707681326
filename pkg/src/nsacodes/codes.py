"""Code families: self-complementary (qubit and qudit), pair-complementary, binomial.

Every constructor returns a :class:`CodeSpace`. NSA codes are functions of the
decay rate, so a new code space is built for every gamma.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from nsacodes.noise import BOSONIC_DEFAULT_CUTOFF
from nsacodes.tensor import DIM_CAP, DitString

ORTHO_TOL = 1e-12


class Family(str, enum.Enum):
    LNCY = "LNCY"
    NSA_SC = "NSA_SC"
    NONNSA_SC = "NONNSA_SC"
    NSA_PC = "NSA_PC"
    NSA_SC_QUDIT = "NSA_SC_QUDIT"
    NONNSA_SC_QUDIT = "NONNSA_SC_QUDIT"
    BINOMIAL_024 = "BINOMIAL_024"
    NSA_BINOMIAL_024 = "NSA_BINOMIAL_024"
    CUSTOM = "CUSTOM"


BOSONIC_FAMILIES = {Family.BINOMIAL_024, Family.NSA_BINOMIAL_024}


class InvalidBasisError(ValueError):
    """The representative strings do not form a valid self-complementary basis set."""


class InfeasibleError(ValueError):
    """No basis set of the requested size exists."""


@dataclass(frozen=True)
class Codeword:
    terms: Mapping[DitString, complex]
    n: int
    q: int

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("codeword support is empty")

    def vector(self) -> np.ndarray:
        vec = np.zeros(self.q**self.n, dtype=complex)
        for label, amp in self.terms.items():
            vec[label.index()] += amp
        return vec

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.terms.values()))

    def amplitude(self, label: DitString | str) -> complex:
        if isinstance(label, str):
            label = DitString.parse(label, self.q)
        return self.terms.get(label, 0.0)

    @classmethod
    def from_vector(cls, vec: np.ndarray, n: int, q: int, atol: float = 0.0) -> Codeword:
        terms = {
            DitString.from_index(i, n, q): complex(a) for i, a in enumerate(vec) if abs(a) > atol
        }
        return cls(terms, n, q)

    @classmethod
    def normalized(cls, terms: Mapping[DitString, complex], n: int, q: int) -> Codeword:
        norm = math.sqrt(sum(abs(a) ** 2 for a in terms.values()))
        return cls({k: v / norm for k, v in terms.items()}, n, q)


@dataclass(frozen=True)
class CodeSpace:
    codewords: tuple[Codeword, ...]
    n: int
    k: int
    q: int
    gamma: float
    family: Family
    classes: tuple[DitString, ...] = field(default=())
    logical_q: int = 2

    @property
    def K(self) -> int:
        return len(self.codewords)

    @property
    def dim(self) -> int:
        return self.q**self.n

    @property
    def is_bosonic(self) -> bool:
        return self.family in BOSONIC_FAMILIES

    def matrix(self) -> np.ndarray:
        """``dim x K`` matrix whose columns are the codewords."""
        return np.stack([cw.vector() for cw in self.codewords], axis=1)

    def gram(self) -> np.ndarray:
        v = self.matrix()
        return v.conj().T @ v

    def check_orthonormal(self, tol: float = ORTHO_TOL) -> float:
        err = float(np.max(np.abs(self.gram() - np.eye(self.K))))
        if err > tol:
            raise ValueError(f"codewords not orthonormal: max deviation {err:.3e}")
        return err


def class_members(rep: DitString) -> tuple[DitString, ...]:
    """The shift orbit ``{u, u+1, ..., u+(q-1)}``; for qubits this is ``{u, ~u}``."""
    return tuple(rep.shift(a) for a in range(rep.q))


def canonical_rep(u: DitString) -> DitString:
    return min(class_members(u))


def footprint(rep: DitString) -> frozenset[DitString]:
    """Class members plus every single-site jump image of any level."""
    out = set()
    for x in class_members(rep):
        out.add(x)
        for site in range(x.n):
            for level in range(1, x.q):
                y = x.lowered(site, level)
                if y is not None:
                    out.add(y)
    return frozenset(out)


@dataclass(frozen=True)
class SCBasisSet:
    n: int
    q: int
    classes: tuple[DitString, ...]

    @property
    def k(self) -> int:
        return int(round(math.log(len(self.classes), self.q))) if len(self.classes) > 1 else 0

    def members(self) -> list[DitString]:
        return [x for rep in self.classes for x in class_members(rep)]

    def validate(self) -> None:
        if not self.classes:
            raise InvalidBasisError("basis set is empty")
        seen: set[DitString] = set()
        for rep in self.classes:
            if rep.n != self.n or rep.q != self.q:
                raise InvalidBasisError(f"representative {rep} does not match n={self.n}, q={self.q}")
            orbit = set(class_members(rep))
            if len(orbit) != self.q:
                raise InvalidBasisError(f"class of {rep} has repeated members")
            if orbit & seen:
                raise InvalidBasisError(f"class of {rep} repeats another class")
            seen |= orbit
        prints = [footprint(rep) for rep in self.classes]
        for (i, a), (j, b) in itertools.combinations(enumerate(prints), 2):
            if a & b:
                raise InvalidBasisError(
                    f"error spaces of classes {self.classes[i]} and {self.classes[j]} overlap"
                )

    @classmethod
    def of(cls, reps: Iterable[str | DitString], q: int = 2) -> SCBasisSet:
        parsed = [r if isinstance(r, DitString) else DitString.parse(r, q) for r in reps]
        basis = cls(parsed[0].n, q, tuple(parsed))
        basis.validate()
        return basis


def _all_class_reps(n: int, q: int) -> list[DitString]:
    reps = set()
    for digits in itertools.product(range(q), repeat=n):
        reps.add(canonical_rep(DitString(digits, q)))
    return sorted(reps)


def _colour_order(adj: list[int], cands: int) -> list[tuple[int, int]]:
    """Greedy colouring of the candidate bitset; returns (vertex, colour bound) pairs."""
    out = []
    uncoloured = cands
    colour = 0
    while uncoloured:
        colour += 1
        avail = uncoloured
        while avail:
            v = (avail & -avail).bit_length() - 1
            avail &= ~adj[v] & ~(1 << v)
            uncoloured &= ~(1 << v)
            out.append((v, colour))
    return out


def _relabel_by_degree(adj: list[int]) -> list[int]:
    """Adjacency relabelled so high-degree vertices come first (tighter colour bounds)."""
    order = sorted(range(len(adj)), key=lambda v: (-adj[v].bit_count(), v))
    pos = {v: i for i, v in enumerate(order)}
    out = [0] * len(adj)
    for v, bits in enumerate(adj):
        row = 0
        while bits:
            u = (bits & -bits).bit_length() - 1
            bits &= bits - 1
            row |= 1 << pos[u]
        out[pos[v]] = row
    return out


def _colour_count(adj: list[int], cands: int) -> int:
    coloured = _colour_order(adj, cands)
    return coloured[-1][1] if coloured else 0


def _first_clique(adj: list[int], size: int, chosen: tuple[int, ...] = ()) -> list[int] | None:
    """Lexicographically first clique of ``size`` vertices extending ``chosen``."""
    cands = (1 << len(adj)) - 1
    for v in chosen:
        cands &= adj[v]
    for v in chosen:
        cands &= ~(1 << v)

    def dfs(picked: list[int], cands: int) -> list[int] | None:
        need = size - len(picked)
        if need == 0:
            return picked
        if cands.bit_count() < need or _colour_count(adj, cands) < need:
            return None
        while cands:
            v = (cands & -cands).bit_length() - 1
            cands &= ~(1 << v)
            found = dfs(picked + [v], cands & adj[v])
            if found is not None:
                return found
            if cands.bit_count() < need:
                return None
        return None

    found = dfs(list(chosen), cands)
    return sorted(found) if found is not None else None


def search_sc_basis(
    n: int, q: int = 2, k_target: int | None = None, balanced: bool = False
) -> SCBasisSet:
    """Find a self-complementary basis set correcting one damping jump.

    Classes are shift orbits of ``{0..q-1}^n``, labelled by their
    lexicographically smallest member. Two classes are compatible when their
    footprints (members and single-jump images) are disjoint. The largest
    compatible family is found by branch and bound; the returned set is the
    lexicographically first compatible family of size ``q**k`` with k the
    largest feasible value (or ``k_target``).

    With ``balanced=True`` (qubits only) the set must also contain the
    all-zero class and a class with ``|u| == n // 2``; the first such class
    in lexicographic order that admits a completion is used.
    """
    if q == 2 and n > 10:
        raise ValueError("brute-force basis search is limited to n <= 10 for qubits")
    if q == 3 and n > 6:
        raise ValueError("brute-force basis search is limited to n <= 6 for qutrits")
    if q > 3 and q**n > DIM_CAP:
        raise ValueError(f"register dimension {q}^{n} exceeds cap {DIM_CAP}")
    if balanced and q != 2:
        raise ValueError("balanced basis sets are defined for qubits only")
    reps = _all_class_reps(n, q)
    prints = [footprint(r) for r in reps]
    adj = [0] * len(reps)
    for i, j in itertools.combinations(range(len(reps)), 2):
        if not (prints[i] & prints[j]):
            adj[i] |= 1 << j
            adj[j] |= 1 << i
    if k_target is None:
        # only the largest power of q below the clique number matters
        ranked = _relabel_by_degree(adj)
        k = 0
        while q ** (k + 1) <= len(reps) and _first_clique(ranked, q ** (k + 1)) is not None:
            k += 1
    else:
        k = k_target
    size = q**k
    clique = None
    if balanced:
        zero = reps.index(DitString((0,) * n, q))
        if size == 1:
            clique = [zero]
        for b, rep in enumerate(reps):
            if clique is not None:
                break
            if rep.weight != n // 2:
                continue
            if b != zero and adj[zero] >> b & 1:
                clique = _first_clique(adj, size, (zero, b))
                if clique is not None:
                    break
    else:
        clique = _first_clique(adj, size)
    if clique is None:
        raise InfeasibleError(f"no basis set with k={k} for n={n}, q={q}")
    basis = SCBasisSet(n, q, tuple(reps[i] for i in clique))
    basis.validate()
    return basis


def _weight_amp(label: DitString, gamma: float, nsa: bool) -> float:
    return (1.0 - gamma) ** (-label.weight / 2.0) if nsa else 1.0


def _sc_code(basis: SCBasisSet, gamma: float, nsa: bool, family: Family) -> CodeSpace:
    basis.validate()
    words = []
    for rep in basis.classes:
        terms = {x: _weight_amp(x, gamma, nsa) for x in class_members(rep)}
        words.append(Codeword.normalized(terms, basis.n, basis.q))
    return CodeSpace(
        tuple(words), basis.n, basis.k, basis.q, float(gamma), family, basis.classes, logical_q=basis.q
    )


def _check_code_gamma(gamma: float) -> None:
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma={gamma} must lie in [0, 1)")


def nsa_sc_qudit_code(basis: SCBasisSet, q: int, gamma: float) -> CodeSpace:
    """Codewords ``sum_a (1-g)^(-|u+a|/2) |u+a>`` normalized, one per class."""
    _check_code_gamma(gamma)
    if basis.q != q:
        raise InvalidBasisError(f"basis alphabet {basis.q} does not match q={q}")
    family = Family.NSA_SC if q == 2 else Family.NSA_SC_QUDIT
    return _sc_code(basis, gamma, True, family)


def nonnsa_sc_qudit_code(basis: SCBasisSet, q: int, gamma: float = 0.0) -> CodeSpace:
    _check_code_gamma(gamma)
    if basis.q != q:
        raise InvalidBasisError(f"basis alphabet {basis.q} does not match q={q}")
    family = Family.NONNSA_SC if q == 2 else Family.NONNSA_SC_QUDIT
    return _sc_code(basis, gamma, False, family)


def nsa_sc_code(basis: SCBasisSet, gamma: float) -> CodeSpace:
    return nsa_sc_qudit_code(basis, 2, gamma)


def nonnsa_sc_code(basis: SCBasisSet, gamma: float = 0.0) -> CodeSpace:
    return nonnsa_sc_qudit_code(basis, 2, gamma)


def lncy_code(gamma: float = 0.0) -> CodeSpace:
    """The fixed ((4,1)) code (|0000>+|1111>)/sqrt2, (|0011>+|1100>)/sqrt2."""
    code = nonnsa_sc_code(SCBasisSet.of(["0000", "0011"]), gamma)
    return CodeSpace(code.codewords, 4, 1, 2, float(gamma), Family.LNCY, code.classes)


def nsa_pc_code(basis: SCBasisSet, gamma: float) -> CodeSpace:
    """Pair-complementary ((m+2, k+1)) code from an m-qubit SC basis set.

    Per class representative u::

        psi_u  ~ |u00> + |u11> - |~u10> - |~u01>
        psi'_u ~ |u01> + |u10> + |~u11> + |~u00>

    with every basis string x weighted by ``(1-g)^(-|x|/2)``.
    """
    _check_code_gamma(gamma)
    if basis.q != 2:
        raise InvalidBasisError("pair-complementary codes are defined for qubits only")
    basis.validate()

    def tail(bits: str) -> DitString:
        return DitString.parse(bits)

    words = []
    for u in basis.classes:
        ub = u.complement()
        first = [(u + tail("00"), 1), (u + tail("11"), 1), (ub + tail("10"), -1), (ub + tail("01"), -1)]
        second = [(u + tail("01"), 1), (u + tail("10"), 1), (ub + tail("11"), 1), (ub + tail("00"), 1)]
        for half in (first, second):
            terms = {x: sign * _weight_amp(x, gamma, True) for x, sign in half}
            words.append(Codeword.normalized(terms, basis.n + 2, 2))
    return CodeSpace(tuple(words), basis.n + 2, basis.k + 1, 2, float(gamma), Family.NSA_PC, basis.classes)


def binomial_codes(gamma: float = 0.0, nsa: bool = False, cutoff: int = BOSONIC_DEFAULT_CUTOFF) -> CodeSpace:
    """0-2-4 binomial code on a truncated Fock space; NSA variant reweights |4>."""
    _check_code_gamma(gamma)
    if cutoff < 5:
        raise ValueError(f"cutoff {cutoff} cannot hold Fock state |4>")

    def fock(m: int) -> DitString:
        return DitString((m,), cutoff)

    w4 = (1.0 - gamma) ** -2 if nsa else 1.0
    zero = Codeword.normalized({fock(0): 1.0, fock(4): w4}, 1, cutoff)
    one = Codeword({fock(2): 1.0}, 1, cutoff)
    family = Family.NSA_BINOMIAL_024 if nsa else Family.BINOMIAL_024
    return CodeSpace((zero, one), 1, 1, cutoff, float(gamma), family)


def build_family(
    family: Family | str, n: int = 4, gamma: float = 0.0, q: int = 2, basis: SCBasisSet | None = None
) -> CodeSpace:
    """Build a named family at size n. SC/PC bases default to :func:`search_sc_basis`.

    The non-adapted qubit SC default uses a basis set holding a weight-balanced
    class, the case its closed-form fidelity describes.
    """
    family = Family(family)
    if family is Family.LNCY:
        return lncy_code(gamma)
    if family is Family.NSA_SC:
        return nsa_sc_code(basis or search_sc_basis(n, 2), gamma)
    if family is Family.NONNSA_SC:
        # a weight-balanced class sets the non-adapted code's worst case
        return nonnsa_sc_code(basis or search_sc_basis(n, 2, balanced=True), gamma)
    if family in (Family.NSA_SC_QUDIT, Family.NONNSA_SC_QUDIT):
        basis = basis or search_sc_basis(n, q)
        if family is Family.NSA_SC_QUDIT:
            return nsa_sc_qudit_code(basis, q, gamma)
        return nonnsa_sc_qudit_code(basis, q, gamma)
    if family is Family.NSA_PC:
        return nsa_pc_code(basis or search_sc_basis(n - 2, 2), gamma)
    if family in BOSONIC_FAMILIES:
        return binomial_codes(gamma, nsa=family is Family.NSA_BINOMIAL_024)
    raise ValueError(f"family {family.value} has no constructor")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def code_to_json(code: CodeSpace) -> str:
    """Serialize as ``{n, q, k, gamma, family, codewords: [[[ditstring, re, im], ...], ...]}``."""
    rows = []
    for cw in code.codewords:
        entries = [
            f'["{label}", {_fmt(amp.real)}, {_fmt(amp.imag)}]'
            for label, amp in sorted(cw.terms.items(), key=lambda kv: kv[0].index())
        ]
        rows.append("    [" + ", ".join(entries) + "]")
    return (
        "{\n"
        f'  "n": {code.n},\n  "q": {code.q},\n  "k": {code.k},\n'
        f'  "gamma": {_fmt(code.gamma)},\n  "family": "{code.family.value}",\n'
        '  "codewords": [\n' + ",\n".join(rows) + "\n  ]\n}\n"
    )


def code_from_json(text: str | Mapping) -> CodeSpace:
    data = json.loads(text) if isinstance(text, str) else text
    n, q = int(data["n"]), int(data["q"])
    words = []
    for row in data["codewords"]:
        terms = {DitString.parse(label, q): complex(re, im) for label, re, im in row}
        words.append(Codeword(terms, n, q))
    k = int(data.get("k", round(math.log(len(words), q)) if len(words) > 1 else 0))
    return CodeSpace(tuple(words), n, k, q, float(data["gamma"]), Family(data["family"]))


def code_from_vectors(
    vectors: Sequence[np.ndarray], n: int, q: int, gamma: float, k: int, atol: float = 0.0
) -> CodeSpace:
    words = tuple(Codeword.from_vector(v, n, q, atol) for v in vectors)
    return CodeSpace(words, n, k, q, float(gamma), Family.CUSTOM)
