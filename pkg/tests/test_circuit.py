import numpy as np
import pytest

from ffdsim.circuit import CircuitSpec, floquet_apply, local_gate
from ffdsim.dense import DenseOp
from ffdsim.oracle import build_floquet
from ffdsim.pauli import Family, make_h


def test_gate_orders():
    assert CircuitSpec.homogeneous("I", 3, 0.5).half_sequence() == [1, 2, 3]
    assert CircuitSpec.homogeneous("II", 4, 0.5).half_sequence() == [2, 4, 1, 3]
    assert CircuitSpec.homogeneous("III", 6, 0.5).half_sequence() == [3, 6, 2, 5, 1, 4]
    assert CircuitSpec.homogeneous("II", 4, 0.5).gate_sequence() == [2, 4, 1, 3, 3, 1, 4, 2]


def test_validation():
    with pytest.raises(ValueError):
        CircuitSpec.homogeneous("II", 7, 0.5)
    with pytest.raises(ValueError):
        CircuitSpec.homogeneous("III", 4, 0.5)
    with pytest.raises(ValueError):
        CircuitSpec.homogeneous("I", 3, np.pi / 2)
    with pytest.raises(ValueError):
        CircuitSpec(Family.I, (0.1, float("nan")))
    with pytest.raises(ValueError):
        CircuitSpec(Family.I, ())


def test_boundary_conventions():
    spec = CircuitSpec.homogeneous("I", 2, 0.4)
    assert spec.x(0) == 1.0 and spec.y(-1) == 0.0
    assert spec.x(1) == pytest.approx(np.cos(0.4))
    assert CircuitSpec(Family.I, (0.3, 2.0)).sign == -1.0


def test_random_is_seeded():
    a, b = CircuitSpec.random("III", 6, seed=11), CircuitSpec.random("III", 6, seed=11)
    assert a == b and a.digest() == b.digest()
    assert all(0.2 <= p <= 1.3 for p in a.phases)


def test_single_site_floquet():
    # V = g_1^2 = x_1 + i y_1 h_1
    phi = 0.7
    spec = CircuitSpec.homogeneous("I", 1, phi)
    expect = DenseOp.identity(1, np.cos(phi)) + DenseOp.from_pauli(make_h(1, 1)) * (1j * np.sin(phi))
    assert (build_floquet(spec) - expect).norm() < 1e-14


@pytest.mark.parametrize("family,M", [("I", 4), ("II", 4), ("III", 6)])
def test_zero_phases_identity(family, M):
    spec = CircuitSpec.homogeneous(family, M, 0.0)
    assert (build_floquet(spec) - 1.0).norm() < 1e-14
    psi = np.random.default_rng(0).normal(size=2**M) + 0j
    assert np.allclose(floquet_apply(spec, psi), psi)


def test_local_gate_window():
    spec = CircuitSpec.homogeneous("I", 4, 0.9)
    sites, g = local_gate(spec, 1)
    assert sites == [1] and g.shape == (2, 2)
    sites, g = local_gate(spec, 4)
    assert sites == [2, 3, 4] and g.shape == (8, 8)
    assert np.allclose(g @ g.conj().T, np.eye(8))


@pytest.mark.parametrize("family,M", [("I", 5), ("II", 6), ("III", 6), ("III", 9)])
def test_floquet_apply_matches_dense(family, M):
    spec = CircuitSpec.random(family, M, seed=M)
    rng = np.random.default_rng(1)
    psi = rng.normal(size=2**M) + 1j * rng.normal(size=2**M)
    psi /= np.linalg.norm(psi)
    out = floquet_apply(spec, psi)
    assert abs(np.linalg.norm(out) - 1) < 1e-12
    assert np.max(np.abs(out - build_floquet(spec).matrix @ psi)) < 1e-11


def test_unitarity():
    V = build_floquet(CircuitSpec.homogeneous("III", 3, 1.0)).matrix
    assert np.max(np.abs(V @ V.conj().T - np.eye(8))) < 1e-12
