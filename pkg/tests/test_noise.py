import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsacodes.noise import bosonic_ad, build_error_set, error_labels, error_set_for, qubit_ad, qudit_ad
from nsacodes.tensor import completeness_deficit

gammas = st.floats(0.0, 1.0, allow_nan=False)


@given(gammas)
def test_qubit_kraus_complete(g):
    fam = qubit_ad(g)
    assert np.allclose(completeness_deficit(fam.matrices()), 0, atol=1e-12)
    assert fam.op(1)[0, 1] == pytest.approx(math.sqrt(g))  # lowering |0><1|
    assert fam.op(1)[1, 0] == 0


@given(st.integers(2, 7), gammas)
def test_qudit_kraus_complete_and_subdiagonal(q, g):
    fam = qudit_ad(q, g)
    assert np.allclose(completeness_deficit(fam.matrices()), 0, atol=1e-10)
    for l, m in fam.ops:
        rows, cols = np.nonzero(np.abs(m) > 0)
        assert all(b - a == l for a, b in zip(rows, cols))


@given(gammas)
def test_qudit_two_levels_is_qubit(g):
    for a, b in zip(qudit_ad(2, g).matrices(), qubit_ad(g).matrices()):
        assert np.array_equal(a, b)


def test_qudit_matrix_entries():
    g = 0.3
    a1 = qudit_ad(3, g).op(1)
    # <1|A^1|2> = sqrt(C(2,1) (1-g) g)
    assert a1[1, 2] == pytest.approx(math.sqrt(2 * (1 - g) * g))
    assert qudit_ad(3, g).op(2)[0, 2] == pytest.approx(g)


def test_qudit_gamma_one_is_full_decay():
    fam = qudit_ad(3, 1.0)
    assert np.allclose(fam.op(0), np.diag([1, 0, 0]))
    assert np.allclose(fam.op(2)[0, 2], 1)


@pytest.mark.parametrize("g", [0.0, 0.05, 0.4])
def test_bosonic_matches_truncated_qudit_family(g):
    # photon loss on a cutoff-c Fock space is the c-level damping family
    bos = bosonic_ad(6, g, lmax=5)
    for l in range(6):
        assert np.allclose(bos.op(l), qudit_ad(6, g).op(l), atol=1e-12)


def test_bosonic_partial_family_is_trace_decreasing():
    w = np.linalg.eigvalsh(completeness_deficit(bosonic_ad(6, 0.1, lmax=1).matrices()))
    assert w.min() > -1e-12
    assert w.max() > 0


def test_bosonic_validation():
    with pytest.raises(ValueError):
        bosonic_ad(4, 0.1)
    with pytest.raises(ValueError):
        bosonic_ad(6, 1.0)


@pytest.mark.parametrize("g", [-0.1, 1.5, float("nan")])
def test_gamma_out_of_range(g):
    with pytest.raises(ValueError):
        qubit_ad(g)


def test_error_label_order():
    labels = [str(x) for x in error_labels(4, 1, [0, 1], 2)]
    assert labels == ["0000", "1000", "0100", "0010", "0001"]


def test_qutrit_error_set_size_and_order():
    errs = error_set_for(3, 4, 0.1)
    assert len(errs) == 9
    assert [str(x) for x in errs.labels[:3]] == ["0000", "1000", "2000"]


def test_error_operators_are_kron_products():
    g = 0.2
    errs = error_set_for(2, 3, g)
    a0, a1 = qubit_ad(g).matrices()
    assert np.allclose(errs.kraus[2][1], np.kron(np.kron(a0, a1), a0))


def test_full_weight_error_set_is_complete():
    errs = build_error_set(qubit_ad(0.3), 3, 3)
    assert len(errs) == 8
    assert np.allclose(completeness_deficit(errs.matrices()), 0, atol=1e-12)


def test_error_set_limits():
    with pytest.raises(ValueError):
        build_error_set(qubit_ad(0.1), 2, 3)
    with pytest.raises(ValueError):
        build_error_set(qubit_ad(0.1), 13, 1)


@settings(max_examples=20)
@given(st.integers(1, 4), st.integers(0, 2))
def test_error_count(n, t):
    t = min(t, n)
    errs = build_error_set(qubit_ad(0.1), n, t)
    assert len(errs) == sum(math.comb(n, w) for w in range(t + 1))
