import json

import numpy as np
import pytest

import ffdsim.dynamics as dynamics
from ffdsim.circuit import CircuitSpec
from ffdsim.dynamics import (
    ConsistencyError,
    QuenchConfig,
    TimeSeries,
    compute_mode_values,
    evolve_chi,
    exact_evolution_reference,
    initial_value,
    zero_mode_offset,
)
from ffdsim.oracle import build_fermions
from ffdsim.pauli import ProductState
from ffdsim.spectrum import solve_spectrum


def test_config_validation():
    with pytest.raises(ValueError):
        QuenchConfig.tilted(CircuitSpec.homogeneous("II", 6, 1.0), 0.3, 5)
    with pytest.raises(ValueError):
        QuenchConfig.tilted(CircuitSpec.homogeneous("III", 6, 1.0), 0.3, -1)
    with pytest.raises(ValueError):
        QuenchConfig(CircuitSpec.homogeneous("III", 6, 1.0), ProductState.tilted(3, 0.3))


def test_initial_value():
    cfg = QuenchConfig.tilted(CircuitSpec.homogeneous("III", 6, 1.0), np.pi / 8, 0)
    assert abs(initial_value(cfg) - np.cos(np.pi / 4)) < 1e-15
    ts = evolve_chi(cfg)
    assert ts.t_max == 0
    assert abs(ts.values[0] - np.cos(np.pi / 4)) < 1e-10


EXACT_CASES = (
    [(3, seed) for seed in range(7)]
    + [(6, seed) for seed in range(7)]
    + [(9, seed) for seed in range(6)]
    + [pytest.param(12, seed, marks=pytest.mark.slow) for seed in range(5)]
)


@pytest.mark.parametrize("M,seed", EXACT_CASES)
def test_evolution_matches_exact(M, seed):
    cfg = QuenchConfig(CircuitSpec.random("III", M, seed=seed), ProductState.random(M, seed=seed), 50)
    fermionic, exact = evolve_chi(cfg), exact_evolution_reference(cfg)
    assert np.max(np.abs(fermionic.values - exact.values)) < 1e-8
    assert fermionic.metadata["method"] == "fermionic"


def test_non_finite_modes_escalate(monkeypatch):
    cfg = QuenchConfig.tilted(CircuitSpec.random("III", 6, seed=3), np.pi / 8, 10)
    real = dynamics.mode_pair_expectation

    def flaky(spec, k, psi, spectral):
        if spectral.precision == "standard":
            return complex(np.nan), complex(np.nan)
        return real(spec, k, psi, spectral)

    monkeypatch.setattr(dynamics, "mode_pair_expectation", flaky)
    ts = evolve_chi(cfg)
    assert ts.metadata["precision"] == "extended"
    assert np.max(np.abs(ts.values - exact_evolution_reference(cfg).values)) < 1e-8

    monkeypatch.setattr(dynamics, "mode_pair_expectation", lambda *a: (complex(np.inf), 0j))
    with pytest.raises(ConsistencyError):
        evolve_chi(cfg)


def test_homogeneous_tilted_matches_exact():
    cfg = QuenchConfig.tilted(CircuitSpec.homogeneous("III", 9, 1.0), np.pi / 8, 40)
    assert np.max(np.abs(evolve_chi(cfg).values - exact_evolution_reference(cfg).values)) < 1e-8


def test_zero_mode_offset_against_dense():
    spec = CircuitSpec.random("III", 6, seed=4)
    psi = ProductState.random(6, seed=4)
    cfg = QuenchConfig(spec, psi, 0)
    spectral = solve_spectrum(spec)
    offset = zero_mode_offset(cfg, spectral, compute_mode_values(cfg, spectral, threads=2))
    fm = build_fermions(spec, spectral)
    vec = psi.to_vector()
    ref = spectral.c0 * (vec.conj() @ fm.zero.matrix @ vec)
    assert abs(offset - ref) < 1e-9
    with pytest.raises(ValueError):
        zero_mode_offset(cfg, spectral, {})


def test_branch_choice_does_not_change_series():
    spec = CircuitSpec.random("III", 6, seed=6)
    cfg = QuenchConfig.tilted(spec, 0.4, 12)
    spectral = solve_spectrum(spec)
    flipped = spectral.with_branches([-1] * spectral.S)
    assert np.allclose(evolve_chi(cfg, spectral).values, evolve_chi(cfg, flipped).values, atol=1e-12)


def test_series_is_bounded():
    cfg = QuenchConfig.tilted(CircuitSpec.random("III", 30, seed=1), np.pi / 8, 50)
    ts = evolve_chi(cfg)
    assert np.all(np.abs(ts.values) <= 1 + 1e-8)
    assert abs(ts.values[0] - np.cos(np.pi / 4)) < 1e-8


def test_csv_and_json_output(tmp_path):
    cfg = QuenchConfig.tilted(CircuitSpec.homogeneous("III", 6, 1.0), np.pi / 8, 3)
    spectral = solve_spectrum(cfg.spec)
    ts = evolve_chi(cfg, spectral)
    ts.to_csv(tmp_path / "chi.csv")
    lines = (tmp_path / "chi.csv").read_text().splitlines()
    assert lines[0] == "t,chi" and len(lines) == 5
    assert [int(line.split(",")[0]) for line in lines[1:]] == [0, 1, 2, 3]
    assert float(lines[1].split(",")[1]) == ts.values[0]
    ts.to_json(tmp_path / "chi.json", spectral)
    doc = json.loads((tmp_path / "chi.json").read_text())
    assert doc["t"] == [0, 1, 2, 3]
    assert doc["metadata"]["M"] == 6
    assert doc["spectral"]["M"] == 6
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".")]


def test_csv_is_deterministic():
    cfg = QuenchConfig.tilted(CircuitSpec.random("III", 12, seed=3), np.pi / 8, 20)
    assert evolve_chi(cfg).csv_text() == evolve_chi(cfg).csv_text()


def test_time_series_dict():
    ts = TimeSeries(np.array([1.0, 0.25]), 0.125, {"M": 3})
    assert ts.to_dict() == {"t": [0, 1], "chi": [1.0, 0.25], "zero_mode_offset": 0.125, "metadata": {"M": 3}}


@pytest.mark.slow
@pytest.mark.parametrize("M", [9, 12])
def test_random_chain_matches_exact_long_times(M):
    cfg = QuenchConfig(CircuitSpec.random("III", M, seed=M), ProductState.random(M, seed=M), 70)
    assert np.max(np.abs(evolve_chi(cfg).values - exact_evolution_reference(cfg).values)) < 1e-8


@pytest.mark.slow
def test_long_chain():
    cfg = QuenchConfig.tilted(CircuitSpec.homogeneous("III", 150, 1.0), np.pi / 8, 70)
    ts = evolve_chi(cfg, precision="extended")
    assert len(ts.values) == 71
    assert np.all(np.isfinite(ts.values))
    assert np.all(np.abs(ts.values) <= 1 + 1e-6)
