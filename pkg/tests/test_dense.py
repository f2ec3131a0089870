import numpy as np
import pytest
from hypothesis import given, settings

import ffdsim.config as config
import ffdsim.hypothesis as hyp
from ffdsim.dense import DenseOp, anticommutator, pauli_matrix, scalar_residual
from ffdsim.pauli import OperatorSum, PauliString, make_h


def test_overhang_blocks():
    M = 3
    h4 = make_h(M + 1, M + 2)  # Z_2 Z_3 X_4
    op = DenseOp.identity(M).mul_pauli(h4)
    assert op.has_overhang
    with pytest.raises(ValueError):
        op.matrix
    assert np.allclose(op.full_matrix(), pauli_matrix(h4))
    sq = op @ op
    assert not sq.has_overhang
    c, off = scalar_residual(sq)
    assert abs(c - 1) < 1e-14 and off < 1e-14


@settings(max_examples=30)
@given(hyp.pauli_strings(5), hyp.pauli_strings(5))
def test_overhang_products_match_full(p, q):
    M = 3
    a, b = DenseOp.from_pauli(p, M), DenseOp.from_pauli(q, M)
    assert np.allclose((a @ b).full_matrix(), pauli_matrix(p) @ pauli_matrix(q))
    assert np.allclose(DenseOp.identity(M).mul_pauli(q, left=True).full_matrix(), pauli_matrix(q))


@given(hyp.pauli_strings(3), hyp.pauli_strings(3))
def test_left_right_multiplication(p, q):
    base = DenseOp.from_pauli(p)
    assert np.allclose(base.mul_pauli(q).matrix, pauli_matrix(p) @ pauli_matrix(q))
    assert np.allclose(base.mul_pauli(q, left=True).matrix, pauli_matrix(q) @ pauli_matrix(p))


def test_from_sum_and_norm():
    M = 4
    op = OperatorSum.from_pauli(make_h(2, M), 0.5) + 2.0
    d = DenseOp.from_sum(op)
    assert np.allclose(d.matrix, 2.0 * np.eye(16) + 0.5 * pauli_matrix(make_h(2, M)))
    # normalized Hilbert-Schmidt norm of a unitary is 1
    assert abs(DenseOp.from_pauli(make_h(3, M)).norm() - 1) < 1e-14
    assert abs(d.scalar_part() - 2.0) < 1e-14


def test_anticommutator_of_generators():
    M = 4
    a, b = DenseOp.from_pauli(make_h(1, M)), DenseOp.from_pauli(make_h(2, M))
    assert anticommutator(a, b).norm() < 1e-14


def test_dagger():
    y = DenseOp.from_pauli(PauliString.from_label("YI", phase=1))
    assert np.allclose(y.dagger().matrix, y.matrix.conj().T)


def test_resource_guard(monkeypatch):
    monkeypatch.setattr(config, "dense_max_sites", 3)
    with pytest.raises(config.ResourceError):
        DenseOp.identity(4)
