import json

import numpy as np
import pytest
from hypothesis import given, settings

import ffdsim.hypothesis as hyp
from ffdsim.circuit import CircuitSpec
from ffdsim.poly import PolyU2
from ffdsim.spectrum import (
    SpectralData,
    SpectralStructureError,
    find_roots,
    mode_count,
    solve_spectrum,
    time_coefficients,
)


def test_mode_count():
    assert mode_count(12) == 4
    assert mode_count(3) == 1
    assert mode_count(150) == 50


def test_single_site_root():
    phi = 0.3
    data = solve_spectrum(CircuitSpec.homogeneous("I", 1, phi))
    assert data.S == 1
    assert data.roots[0] == pytest.approx(1 / np.tan(phi), rel=1e-12)
    assert data.pseudoenergies[0] == pytest.approx(phi, rel=1e-12)
    # N^2 = 16 u^2 x^2 y^2 = 16 x^4
    assert data.norm(1) == pytest.approx(4 * np.cos(phi) ** 2, rel=1e-12)


def test_find_roots_simple():
    # (w + 1)(w + 4) = 4 + 5w + w^2
    assert np.allclose(find_roots(PolyU2((4.0, 5.0, 1.0))), [1.0, 2.0])


def test_find_roots_rejects_bad_structure():
    with pytest.raises(SpectralStructureError):
        find_roots(PolyU2((1.0, 0.0, 1.0)))  # w = +-i
    with pytest.raises(SpectralStructureError):
        find_roots(PolyU2((1.0,)))


def test_degenerate_roots():
    # (w + 1)^2
    with pytest.raises(SpectralStructureError):
        find_roots(PolyU2((1.0, 2.0, 1.0)))


def test_zero_phases_have_no_modes():
    with pytest.raises(SpectralStructureError):
        solve_spectrum(CircuitSpec.homogeneous("III", 6, 0.0))


@settings(max_examples=20, deadline=None)
@given(hyp.circuit_specs(max_periods=4))
def test_roots_positive_ascending(spec):
    data = solve_spectrum(spec)
    assert data.S == mode_count(spec.M)
    assert np.all(data.roots > 0)
    assert np.all(np.diff(data.roots) > 0)
    assert np.all((data.pseudoenergies > 0) & (data.pseudoenergies < np.pi / 2))
    # calA_M(i u_k) = 0
    for u in data.roots:
        assert abs(data.calA(1j * u)) <= 1e-8 * np.sum(np.abs(data.calA.coeffs) * u ** (2 * np.arange(data.S + 1)))


def test_multiplier_is_phase():
    data = solve_spectrum(CircuitSpec.random("III", 6, seed=4))
    for s in data.modes():
        r = data.multiplier(s)
        eps = data.pseudoenergies[abs(s) - 1]
        assert abs(r - np.exp(2j * np.sign(s) * eps)) < 1e-12
    assert abs(time_coefficients(2.0, data.roots[0], 0) - 2.0) < 1e-15
    with pytest.raises(ValueError):
        time_coefficients(1.0, 0.5, -1)


def test_coefficients_family_III():
    data = solve_spectrum(CircuitSpec.random("III", 9, seed=1))
    assert data.coefficients is not None and data.c0 is not None
    assert data.c0 >= 0
    assert data.coefficient(2) == data.coefficient(-2)
    assert solve_spectrum(CircuitSpec.random("II", 4, seed=1)).coefficients is None


def test_branch_flip():
    data = solve_spectrum(CircuitSpec.random("III", 6, seed=5))
    flipped = data.with_branches([-1, 1])
    assert flipped.norm(1) == -data.norm(1)
    assert flipped.coefficient(-1) == -data.coefficient(-1)
    assert flipped.norm(2) == data.norm(2)
    with pytest.raises(ValueError):
        data.with_branches([1])


def test_json_roundtrip():
    data = solve_spectrum(CircuitSpec.random("III", 6, seed=8))
    doc = json.loads(data.to_json())
    assert {"family", "M", "phases", "roots", "pseudoenergies", "c_s_real", "c_s_imag", "c0"} <= set(doc)
    back = SpectralData.from_json(data.to_json())
    assert np.array_equal(back.roots, data.roots)
    assert np.array_equal(back.log_norms, data.log_norms)
    assert np.array_equal(back.norm_phases, data.norm_phases)
    assert np.array_equal(back.coefficients, data.coefficients)
    assert back.c0 == data.c0


def test_find_roots_keeps_tiny_leading_coefficient():
    # 1e-40 (w + 1e20)(w + 1e21); the relative trim alone drops the w^2 term
    p = PolyU2((10.0, 1.1e-19, 1e-40))
    assert len(find_roots(p)) == 1
    assert np.allclose(find_roots(p, degree=2), [1e10, np.sqrt(1e21)], rtol=1e-10)


def test_long_chain_keeps_all_modes():
    spec = CircuitSpec.homogeneous("III", 150, 1.0)
    data = solve_spectrum(spec)
    assert data.S == mode_count(150)
    assert data.calA.degree == data.S
    assert 0 < abs(data.calA.lead) < 1e-40
    assert np.all(np.isfinite(data.log_norms))
    assert np.all(np.isfinite(data.coefficients))
    assert data.c0 >= 0


def test_log_norms_match_norms():
    data = solve_spectrum(CircuitSpec.random("III", 9, seed=6))
    for s in data.modes():
        assert abs(data.norm(s)) == pytest.approx(np.exp(data.log_norm(s)), rel=1e-14)
        assert data.norm_phase(s) in (1, 1j)


def test_extended_precision_agrees():
    spec = CircuitSpec.random("II", 8, seed=3)
    std, ext = solve_spectrum(spec), solve_spectrum(spec, "extended")
    assert ext.precision == "extended"
    assert np.allclose(std.roots, ext.roots, rtol=1e-10)
    assert np.allclose(std.norms, ext.norms, rtol=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("family", ["I", "II", "III"])
def test_large_homogeneous(family):
    data = solve_spectrum(CircuitSpec.homogeneous(family, 150, 1.0))
    assert data.S == 50
    assert data.normalization_error < 1e-8
    assert np.all(np.isfinite(data.log_norms))
