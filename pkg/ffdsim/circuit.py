"""
Circuit instances and their gate orderings.

The Floquet operator of one time step is V = G G^T, where G is a product of
local gates g_m in the family's order:

- family I:   G = g_1 g_2 ... g_M
- family II:  G = (g_2 g_4 ... g_M)(g_1 g_3 ... g_{M-1})
- family III: G = (g_3 g_6 ... g_M)(g_2 g_5 ... g_{M-1})(g_1 g_4 ... g_{M-2})

>>> CircuitSpec.homogeneous("II", 4, 0.5).half_sequence()
[2, 4, 1, 3]
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

import ffdsim.config as config
from ffdsim.pauli import Family, PAULI_MATRICES

_X, _Z = PAULI_MATRICES[1], PAULI_MATRICES[2]


@dataclass(frozen=True)
class CircuitSpec:
    family: Family
    phases: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        self.family.check_size(self.M)
        for m, phi in enumerate(self.phases, start=1):
            if not np.isfinite(phi):
                raise ValueError(f"phase phi_{m} is not finite", phi)
            if abs(np.cos(phi)) < config.phase_floor:
                raise ValueError(
                    f"|cos phi_{m}| below phase_floor={config.phase_floor}", phi
                )

    @classmethod
    def homogeneous(cls, family: Family | str, M: int, phi: float) -> CircuitSpec:
        return cls(Family(family), (phi,) * M)

    @classmethod
    def random(cls, family: Family | str, M: int, seed: int | None = None) -> CircuitSpec:
        """I.i.d. phases, uniform on [0.2, 1.3]."""
        rng = np.random.default_rng(seed)
        return cls(Family(family), tuple(rng.uniform(0.2, 1.3, M)))

    @property
    def M(self) -> int:
        return len(self.phases)

    def x(self, m: int) -> float:
        """cos(phi_m), with x_m = 1 for m <= 0."""
        return 1.0 if m <= 0 else float(np.cos(self.phases[m - 1]))

    def y(self, m: int) -> float:
        """sin(phi_m), with y_m = 0 for m <= 0."""
        return 0.0 if m <= 0 else float(np.sin(self.phases[m - 1]))

    @property
    def sign(self) -> float:
        """Sign of prod_m x_m."""
        return float(np.prod(np.sign(np.cos(self.phases))))

    def half_sequence(self) -> list[int]:
        """Gate sites of G, left to right."""
        M, p = self.M, self.family.period
        seq = []
        for r in range(p, 0, -1):
            seq.extend(range(r, M + 1, p))
        return seq

    def gate_sequence(self) -> list[int]:
        """Gate sites of V = G G^T, left to right."""
        half = self.half_sequence()
        return half + half[::-1]

    def digest(self) -> str:
        return hashlib.sha256(repr((self.family.value, self.phases)).encode()).hexdigest()[:16]


def local_gate(spec: CircuitSpec, m: int) -> tuple[list[int], np.ndarray]:
    """
    Sites (ascending) and dense matrix of g_m restricted to its window.

    >>> sites, g = local_gate(CircuitSpec.homogeneous("I", 3, 0.0), 3)
    >>> sites, bool(np.allclose(g, np.eye(8)))
    ([1, 2, 3], True)
    """
    sites = [j for j in (m - 2, m - 1, m) if j >= 1]
    h = np.array([[1.0]])
    for j in sites:
        h = np.kron(h, _X if j == m else _Z)
    phi = spec.phases[m - 1]
    return sites, np.cos(phi / 2) * np.eye(h.shape[0]) + 1j * np.sin(phi / 2) * h


def apply_local(psi: np.ndarray, M: int, sites: list[int], gate: np.ndarray) -> np.ndarray:
    """Apply a gate on `sites` to a state tensor of shape (2,)*M."""
    k = len(sites)
    axes = [M - j for j in sites]
    g = gate.reshape((2,) * (2 * k))
    out = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def floquet_apply(spec: CircuitSpec, psi: np.ndarray) -> np.ndarray:
    """
    V|psi> by gate-by-gate application; site m is bit m-1 of the basis index.
    """
    M = spec.M
    config.check_dense(M)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2**M,):
        raise ValueError("state has the wrong dimension", psi.shape, M)
    t = psi.reshape((2,) * M)
    for m in reversed(spec.gate_sequence()):
        sites, g = local_gate(spec, m)
        t = apply_local(t, M, sites, g)
    return t.reshape(2**M)
