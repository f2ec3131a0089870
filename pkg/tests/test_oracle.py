import numpy as np
import pytest
from hypothesis import given, settings

import ffdsim.hypothesis as hyp
from ffdsim.circuit import CircuitSpec
from ffdsim.dense import DenseOp, commutator
from ffdsim.oracle import (
    build_abcd,
    build_charge,
    build_fermions,
    build_floquet,
    run_suites,
    transfer_matrix,
    verify_boundary_identities,
    verify_canonical,
    verify_charge,
    verify_commuting_family,
    verify_completeness,
    verify_diagonal_form,
    verify_gate_algebra,
    verify_hermiticity,
    verify_mode_shift,
    verify_pauli_algebra,
    verify_scalar_products,
    verify_zero_mode,
    zero_mode_charge,
)
from ffdsim.pauli import make_h

SMALL = [("I", 3), ("I", 5), ("II", 4), ("II", 6), ("III", 3), ("III", 6)]


def _rand_u(rng):
    return complex(rng.normal(), rng.normal()) * 0.7


def test_transfer_matrix_at_one_is_floquet():
    for family, M in SMALL:
        spec = CircuitSpec.random(family, M, seed=M)
        assert (transfer_matrix(spec, 1.0) - build_floquet(spec)).norm() < 1e-11


def test_transfer_matrix_at_zero_is_scalar():
    for family, M in SMALL:
        spec = CircuitSpec.random(family, M, seed=M + 1)
        A0 = transfer_matrix(spec, 0.0)
        prod_x = np.prod(np.cos(spec.phases))
        assert (A0 - prod_x).norm() < 1e-12


def test_single_site_transfer_matrix():
    # A_1(u) = x_1 + i u y_1 h_1
    phi, u = 0.6, 0.3 + 0.2j
    spec = CircuitSpec.homogeneous("I", 1, phi)
    expect = DenseOp.identity(1, np.cos(phi)) + DenseOp.from_pauli(make_h(1, 1)) * (1j * u * np.sin(phi))
    assert (transfer_matrix(spec, u) - expect).norm() < 1e-14


@pytest.mark.parametrize("family,M", SMALL)
def test_commuting_family(family, M):
    rng = np.random.default_rng(M)
    spec = CircuitSpec.random(family, M, seed=M)
    for _ in range(2):
        rep = verify_commuting_family(spec, _rand_u(rng), _rand_u(rng))
        assert rep.passed, rep


def test_commuting_family_symmetric_point():
    spec = CircuitSpec.random("III", 6, seed=1)
    assert verify_commuting_family(spec, 0.4 + 0.1j, 0.4 + 0.1j).max_residual < 1e-12


@pytest.mark.parametrize("family,M", SMALL)
def test_scalar_products(family, M):
    rng = np.random.default_rng(M + 10)
    spec = CircuitSpec.random(family, M, seed=M + 2)
    rep = verify_scalar_products(spec, _rand_u(rng))
    assert rep.passed, rep


def test_algebra_reports():
    assert verify_pauli_algebra(8).passed
    assert verify_gate_algebra(CircuitSpec.random("II", 6, seed=0)).passed
    assert verify_hermiticity(CircuitSpec.random("III", 6, seed=0), 0.8).passed


@pytest.mark.parametrize("family,M", [("I", 4), ("I", 6), ("II", 4), ("II", 6)])
def test_charge_commutes(family, M):
    rep = verify_charge(CircuitSpec.random(family, M, seed=3 * M))
    assert rep.passed, rep


def test_charge_vanishes_without_rotation():
    assert build_charge(CircuitSpec.homogeneous("II", 6, 0.0)).is_zero()
    with pytest.raises(ValueError):
        build_charge(CircuitSpec.homogeneous("III", 3, 0.5))


def test_charge_I_coefficients():
    spec = CircuitSpec.random("I", 4, seed=9)
    H = build_charge(spec)
    for m in range(1, 5):
        b = spec.y(m) / (spec.x(m - 2) * spec.x(m - 1) * spec.x(m))
        assert abs(H.terms[make_h(m, 4)] - b) < 1e-14


@pytest.mark.parametrize("family,M", SMALL)
def test_fermion_modes(family, M):
    spec = CircuitSpec.random(family, M, seed=M + 5)
    fm = build_fermions(spec)
    rng = np.random.default_rng(0)
    us = [_rand_u(rng) for _ in range(3)]
    for rep in (verify_canonical(fm), verify_mode_shift(fm, us), verify_diagonal_form(fm, us)):
        assert rep.passed, rep


@pytest.mark.parametrize("M", [3, 6])
def test_zero_mode(M):
    spec = CircuitSpec.random("III", M, seed=M + 20)
    fm = build_fermions(spec)
    assert fm.zero is not None
    rng = np.random.default_rng(1)
    vs = [_rand_u(rng) for _ in range(3)]
    for rep in (verify_zero_mode(fm, vs), verify_completeness(fm)):
        assert rep.passed, rep


def test_zero_mode_charge_is_the_large_u_limit():
    spec = CircuitSpec.random("III", 6, seed=26)
    fm = build_fermions(spec)
    u = 1e3
    A_plus, A_minus = transfer_matrix(spec, 1j * u), transfer_matrix(spec, -1j * u)
    approx = (fm.chi + (A_plus @ fm.chi @ A_minus) * (1 / fm.spectral.calA(1j * u))) * 0.5
    assert (approx - fm.charge_q).norm() < 1e-3
    c0 = fm.spectral.c0
    assert (fm.charge_q @ fm.charge_q - c0**2).norm() < 1e-8
    assert (fm.zero * c0 - fm.charge_q).norm() < 1e-12
    with pytest.raises(ValueError):
        zero_mode_charge(CircuitSpec.random("II", 4, seed=0), fm.spectral)


def test_single_site_spectrum():
    # eigenphases of exp(i phi h_1) are +-phi, and eps_1 = phi
    phi = 0.45
    fm = build_fermions(CircuitSpec.homogeneous("I", 1, phi))
    assert abs(fm.spectral.pseudoenergies[0] - phi) < 1e-12
    assert verify_diagonal_form(fm, [0.3j]).passed


@settings(max_examples=10, deadline=None)
@given(hyp.circuit_specs(max_periods=2), hyp.spectral_parameters, hyp.spectral_parameters)
def test_boundary_identities(spec, u, v):
    rep = verify_boundary_identities(spec, u, v)
    assert rep.passed, rep


def test_boundary_identity_chi_anticommutator_III():
    # {chi, Psi(v)} = 2 calA_M(v) - (2 v x_{M-2} x_{M-1} y_M)^2 calA_{M-3}(v)
    spec = CircuitSpec.random("III", 6, seed=12)
    rep = verify_boundary_identities(spec, 0.5 - 0.3j, 0.9j)
    assert rep.residuals["{chi,Psi}"] < 1e-9


def test_mode_labels():
    fm = build_fermions(CircuitSpec.random("III", 3, seed=0))
    assert sorted(fm.modes) == [-1, 1]
    assert commutator(fm.modes[1], fm.modes[-1]).norm() > 0.1


def test_build_abcd_family_I_has_no_D():
    A, B, C, D = build_abcd(CircuitSpec.random("I", 3, seed=0), 0.5)
    assert D is None and B.has_overhang and C.has_overhang


@pytest.mark.slow
@pytest.mark.parametrize("family,M", [("I", 9), ("II", 8), ("III", 9), ("III", 12)])
def test_all_suites_large(family, M):
    spec = CircuitSpec.random(family, M, seed=M)
    for rep in run_suites(spec, seed=M):
        assert rep.passed, rep
