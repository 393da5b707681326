import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsacodes.codes import (
    Family,
    InfeasibleError,
    InvalidBasisError,
    SCBasisSet,
    binomial_codes,
    build_family,
    class_members,
    code_from_json,
    code_from_vectors,
    code_to_json,
    footprint,
    lncy_code,
    nonnsa_sc_code,
    nonnsa_sc_qudit_code,
    nsa_pc_code,
    nsa_sc_code,
    nsa_sc_qudit_code,
    search_sc_basis,
)
from nsacodes.tensor import DitString, basis_vector


def ket(s, q=2):
    return basis_vector(DitString.parse(s, q))


B4 = SCBasisSet.of(["0000", "0011"])
B2 = SCBasisSet.of(["00"])
B3 = SCBasisSet.of(["0000", "0011", "0022"], 3)


def test_lncy_codewords():
    v = lncy_code().matrix()
    assert np.allclose(v[:, 0], (ket("0000") + ket("1111")) / math.sqrt(2))
    assert np.allclose(v[:, 1], (ket("0011") + ket("1100")) / math.sqrt(2))
    assert lncy_code().family is Family.LNCY


def test_lncy_equals_nsa_sc_at_zero():
    assert np.allclose(lncy_code().matrix(), nsa_sc_code(B4, 0.0).matrix())


def test_nsa_sc_four_qubit_amplitudes():
    g = 0.1
    v = nsa_sc_code(B4, g).matrix()
    r = 1 - g
    zero = (ket("0000") + r**-2 * ket("1111")) / math.sqrt(1 + r**-4)
    assert np.allclose(v[:, 0], zero)
    # balanced class keeps equal weights
    assert np.allclose(v[:, 1], (ket("0011") + ket("1100")) / math.sqrt(2))


def test_pc_four_qubit_codewords():
    g = 0.2
    r = 1 - g
    n0 = math.sqrt(1 + r**-2 + 2 * r**-3)
    n1 = math.sqrt(r**-4 + r**-2 + 2 * r**-1)
    psi = (ket("0000") + r**-1 * ket("0011") - r**-1.5 * ket("1110") - r**-1.5 * ket("1101")) / n0
    psi_p = (r**-0.5 * ket("0001") + r**-0.5 * ket("0010") + r**-2 * ket("1111") + r**-1 * ket("1100")) / n1
    code = nsa_pc_code(B2, g)
    assert (code.n, code.k, code.K) == (4, 1, 2)
    assert np.allclose(code.matrix()[:, 0], psi)
    assert np.allclose(code.matrix()[:, 1], psi_p)


def test_pc_gamma_zero_amplitudes_are_half():
    v = nsa_pc_code(B2, 0.0).matrix()
    assert np.allclose(np.abs(v[np.abs(v) > 0]), 0.5)


def test_pc_weight_sum_per_class():
    code = nsa_pc_code(SCBasisSet.of(["0000", "0011"]), 0.1)
    for cw in code.codewords:
        assert sum(x.weight for x in cw.terms) == 2 * code.n


def test_pc_doubles_codeword_count():
    basis = search_sc_basis(6)
    code = nsa_pc_code(basis, 0.05)
    assert (code.n, code.k, code.K) == (8, basis.k + 1, 2 * 2**basis.k)


def test_qutrit_nsa_ratios():
    g = 0.1
    v = nsa_sc_qudit_code(B3, 3, g).matrix()[:, 0]
    a0, a1, a2 = v[ket("0000", 3).argmax()], v[ket("1111", 3).argmax()], v[ket("2222", 3).argmax()]
    assert a1 / a0 == pytest.approx((1 - g) ** -2)
    assert a2 / a0 == pytest.approx((1 - g) ** -4)


def test_qudit_two_levels_reduce_to_qubit():
    assert np.allclose(nsa_sc_qudit_code(B4, 2, 0.1).matrix(), nsa_sc_code(B4, 0.1).matrix())


def test_qudit_gamma_zero_uniform():
    v = nsa_sc_qudit_code(B3, 3, 0.0).matrix()
    assert np.allclose(np.abs(v[np.abs(v) > 0]), 1 / math.sqrt(3))


def test_binomial_codes():
    plain = binomial_codes(0.0).matrix()
    assert np.allclose(plain[:, 0], (ket("0", 6) + ket("4", 6)) / math.sqrt(2))
    assert np.allclose(plain[:, 1], ket("2", 6))
    assert np.allclose(binomial_codes(0.0, nsa=True).matrix(), plain)
    v = binomial_codes(0.1, nsa=True).matrix()[:, 0]
    assert v[4] / v[0] == pytest.approx(0.9**-2)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 0.5))
def test_every_family_orthonormal(g):
    codes = [
        lncy_code(g),
        nsa_sc_code(B4, g),
        nonnsa_sc_code(B4, g),
        nsa_pc_code(B2, g),
        nsa_pc_code(B4, g),
        nsa_sc_qudit_code(B3, 3, g),
        nonnsa_sc_qudit_code(B3, 3, g),
        binomial_codes(g),
        binomial_codes(g, nsa=True),
    ]
    for code in codes:
        assert code.check_orthonormal() <= 1e-12


@pytest.mark.parametrize(
    "nsa,plain",
    [
        (lambda g: nsa_sc_code(B4, g), lambda: nonnsa_sc_code(B4)),
        (lambda g: nsa_sc_qudit_code(B3, 3, g), lambda: nonnsa_sc_qudit_code(B3, 3)),
        (lambda g: binomial_codes(g, True), lambda: binomial_codes(0.0)),
    ],
)
def test_nsa_reduces_to_plain_at_zero(nsa, plain):
    assert np.allclose(nsa(0.0).matrix(), plain().matrix())


def test_search_examples():
    assert [str(c) for c in search_sc_basis(4).classes] == ["0000", "0011"]
    assert [str(c) for c in search_sc_basis(2).classes] == ["00"]
    assert search_sc_basis(2).k == 0
    assert [str(c) for c in search_sc_basis(4, 3).classes] == ["0000", "0011", "0022"]


def test_two_qubit_classes_collide():
    # 01 and 10 both damp to 00, which is also in the zero class
    assert footprint(DitString.parse("00")) & footprint(DitString.parse("01"))


def test_search_is_deterministic():
    assert search_sc_basis(6) == search_sc_basis(6)


def test_search_k_target():
    assert search_sc_basis(6, k_target=1).k == 1
    with pytest.raises(InfeasibleError):
        search_sc_basis(4, k_target=3)


def test_balanced_search_contains_balanced_class():
    basis = search_sc_basis(6, balanced=True)
    assert basis.k == search_sc_basis(6).k
    assert any(c.weight == 3 for c in basis.classes)
    assert DitString.parse("000000") in basis.classes


def test_search_caps():
    with pytest.raises(ValueError):
        search_sc_basis(11)
    with pytest.raises(ValueError):
        search_sc_basis(7, 3)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_search_result_satisfies_conditions(n):
    basis = search_sc_basis(n)
    basis.validate()
    members = basis.members()
    assert len(members) == len(set(members))
    for rep in basis.classes:
        assert set(class_members(rep)) == {rep, rep.complement()}


def test_invalid_basis_sets():
    with pytest.raises(InvalidBasisError):
        SCBasisSet.of(["00", "01"])
    with pytest.raises(InvalidBasisError):
        SCBasisSet.of(["0000", "1111"])
    with pytest.raises(InvalidBasisError):
        nsa_sc_qudit_code(B4, 3, 0.1)


def test_bad_gamma():
    with pytest.raises(ValueError):
        nsa_sc_code(B4, 1.0)


def test_json_roundtrip():
    code = nsa_pc_code(B2, 0.123)
    text = code_to_json(code)
    data = json.loads(text)
    assert set(data) >= {"n", "q", "gamma", "family", "codewords"}
    back = code_from_json(text)
    assert back.family is Family.NSA_PC
    assert np.array_equal(back.matrix(), code.matrix())
    assert back.gamma == code.gamma


def test_code_from_vectors_custom():
    code = code_from_vectors([ket("00"), ket("11")], 2, 2, 0.1, 1)
    assert code.family is Family.CUSTOM and code.K == 2


def test_build_family_dispatch():
    assert build_family("NSA_PC", 4, 0.1).family is Family.NSA_PC
    assert build_family("NONNSA_SC", 6).classes == search_sc_basis(6, balanced=True).classes
    assert build_family("NSA_BINOMIAL_024", gamma=0.1).q == 6
    with pytest.raises(ValueError):
        build_family("CUSTOM")
