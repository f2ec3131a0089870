"""
Transfer matrices as matrix product operators.

The spectral-parameter MPO of each family is a chain of D x D ancilla
matrices whose entries are OperatorSums on a few neighbouring sites.
``localize`` rewrites such a chain into strictly site-local tensors by
carrying pending Pauli letters in the bond, and ``sandwich`` contracts two
local MPOs around the boundary operator in a product state, one site at a time.

>>> from ffdsim.circuit import CircuitSpec
>>> spec = CircuitSpec.homogeneous("I", 2, 0.5)
>>> lm = localize(build_omega_chain(spec, 0.7))
>>> lm.n_sites, lm.bond_dims[0]
(2, 3)
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import opt_einsum as oe

import ffdsim.config as config
from ffdsim.circuit import CircuitSpec
from ffdsim.dense import DenseOp
from ffdsim.pauli import (
    PAULI_MATRICES,
    Family,
    OperatorSum,
    ProductState,
    ipow,
    make_chi,
    make_h,
    mul_words,
)
from ffdsim.spectrum import SpectralData, solve_spectrum

logger = logging.getLogger("ffdsim")

SELECTORS = "abcd"

Entry = OperatorSum | None


@dataclass(frozen=True)
class Step:
    """One ancilla matrix; entries[i][o] maps input ancilla i to output ancilla o."""

    site: int
    entries: tuple[tuple[Entry, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    def support(self) -> list[int]:
        sites = set()
        for row in self.entries:
            for e in row:
                if e is not None:
                    for p, _ in e:
                        sites.update(p.support())
        return sorted(sites)


@dataclass(frozen=True)
class OmegaChain:
    """
    L . Omega_1 ... Omega_K . T, with L the all-ones row and T the selector
    column carrying the trailing generators. Entries live on M+2 sites.
    """

    spec: CircuitSpec
    u: complex
    selector: str
    steps: tuple[Step, ...]

    @property
    def M(self) -> int:
        return self.spec.M

    @property
    def n_sites(self) -> int:
        return self.M if self.selector == "a" else self.M + 2

    @property
    def D(self) -> int:
        return self.spec.family.bond

    def to_dense(self) -> DenseOp:
        """Contract the chain with dense operators (overhang kept in DenseOp blocks)."""
        vec = [DenseOp.identity(self.M)] * self.D
        for step in self.steps:
            din, dout = step.shape
            new = []
            for o in range(dout):
                acc = DenseOp(self.M, {})
                for i in range(din):
                    e = step.entries[i][o]
                    if e is not None:
                        acc = acc + vec[i].mul_sum(e)
                new.append(acc)
            vec = new
        return vec[0]


def _theta(spec: CircuitSpec, m: int, N: int) -> list[OperatorSum]:
    """diag(1, i y_m h_m, i y_{m+1} h_{m+1}, y_m y_{m+1} h_m h_{m+1})."""
    hm = OperatorSum.from_pauli(make_h(m, N))
    hn = OperatorSum.from_pauli(make_h(m + 1, N))
    ym, yn = spec.y(m), spec.y(m + 1)
    return [OperatorSum.identity(N), hm * (1j * ym), hn * (1j * yn), hm * hn * (ym * yn)]


def _step_I(spec: CircuitSpec, u: complex, m: int, N: int) -> Step:
    one = OperatorSum.identity(N)
    h = OperatorSum.from_pauli(make_h(m, N))
    return Step(
        m,
        (
            (one * spec.x(m), None, one),
            (h * (1j * u * spec.y(m)), None, None),
            (None, one, None),
        ),
    )


def _step_II(spec: CircuitSpec, u: complex, m: int, N: int) -> Step:
    x0, x1 = spec.x(m), spec.x(m + 1)
    K = (
        (x0 * x1, 1, x0, x1),
        (u, 0, u * x1, 0),
        (u * x0, 0, 0, u),
        (0, 0, 1, 0),
    )
    theta = _theta(spec, m, N)
    return Step(
        m,
        tuple(
            tuple(theta[i] * complex(k) if k != 0 else None for k in row)
            for i, row in enumerate(K)
        ),
    )


def _step_III(spec: CircuitSpec, u: complex, m: int, N: int) -> Step:
    x0, x1 = spec.x(m), spec.x(m + 1)
    x2, y2 = spec.x(m + 2), spec.y(m + 2)
    h2 = OperatorSum.from_pauli(make_h(m + 2, N))
    one = OperatorSum.identity(N)
    kp = h2 * (1j * u * y2) + x2
    km = h2 * (-1j * y2) + u * x2
    K = (
        (kp * (x0 * x1), one * x0, one * (x0 * x1), kp * x0),
        (one * u, km * x1, km, one * (u * x1)),
        (one * (u * x0), None, km * x0, None),
        (None, one, None, kp),
    )
    theta = _theta(spec, m, N)
    entries = []
    for i, row in enumerate(K):
        out = []
        for k in row:
            e = None if k is None else theta[i] * k
            out.append(None if e is None or e.is_zero() else e)
        entries.append(tuple(out))
    return Step(m, tuple(entries))


_STEP_BUILDERS = {Family.I: _step_I, Family.II: _step_II, Family.III: _step_III}


def _trailer(spec: CircuitSpec, u: complex, selector: str, N: int) -> Step:
    M, D = spec.M, spec.family.bond
    one = OperatorSum.identity(N)
    if selector == "a":
        op = one
    elif selector == "b":
        op = OperatorSum.from_pauli(make_h(M + 1, N)) * (1j * u)
    elif selector == "c":
        op = OperatorSum.from_pauli(make_h(M + 2, N)) * (1j * u)
    else:
        op = OperatorSum.from_pauli(make_h(M + 1, N) * make_h(M + 2, N))
    idx = SELECTORS.index(selector)
    return Step(M + 1, tuple((op if i == idx else None,) for i in range(D)))


def build_omega_chain(spec: CircuitSpec, u: complex, selector: str = "a") -> OmegaChain:
    """
    Chain for A (selector a), B, C or D at spectral parameter u.

    Steps run over m = 1..M (I), 1, 3, .., M-1 (II) and 1, 4, .., M-2 (III).

    >>> spec = CircuitSpec.homogeneous("III", 6, 1.0)
    >>> [s.site for s in build_omega_chain(spec, 0.5, "d").steps]
    [1, 4, 7]
    >>> build_omega_chain(CircuitSpec.homogeneous("I", 2, 1.0), 0.5, "d")
    Traceback (most recent call last):
        ...
    ValueError: ...
    """
    if selector not in SELECTORS:
        raise ValueError("unknown selector", selector)
    fam = spec.family
    if selector == "d" and fam is Family.I:
        raise ValueError("family I has no D operator", selector)
    N = spec.M + 2
    build = _STEP_BUILDERS[fam]
    steps = [build(spec, u, m, N) for m in range(1, spec.M + 1, fam.period)]
    steps.append(_trailer(spec, u, selector, N))
    return OmegaChain(spec, complex(u), selector, tuple(steps))


@dataclass(frozen=True, eq=False)
class LocalMpo:
    """
    Site-local MPO: tensors[s] has shape (bond_in, bond_out, 2, 2) with
    physical indices (bra, ket).
    """

    tensors: tuple[np.ndarray, ...]
    left: np.ndarray
    right: np.ndarray

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [len(self.left)] + [t.shape[1] for t in self.tensors]

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; site s is bit s-1."""
        config.check_dense(self.n_sites)
        ops = self.left.astype(complex)[:, None, None]
        for T in self.tensors:
            d = ops.shape[1]
            ops = np.einsum("ioab,icd->oacbd", T, ops).reshape(T.shape[1], 2 * d, 2 * d)
        return np.einsum("oab,o->ab", ops, self.right)


def _anchors(chain: OmegaChain) -> list[int]:
    anchors, prev = [], 1
    for step in chain.steps:
        sup = step.support()
        a = sup[0] if sup else prev
        if a < prev:
            raise ValueError("chain steps are not ordered by support", step.site, a, prev)
        anchors.append(a)
        prev = a
    return anchors


def localize(chain: OmegaChain) -> LocalMpo:
    """
    Split multi-site entries across sites.

    Each step is applied at the first site it touches. The bond state is a
    pair (ancilla, carry), where the carry is the product of all letters
    already multiplied in on sites not yet emitted. Only reachable bond
    states are kept.

    >>> from ffdsim.circuit import CircuitSpec
    >>> lm = localize(build_omega_chain(CircuitSpec.homogeneous("II", 4, 0.0), 0.3))
    >>> max(lm.bond_dims) <= 4
    True
    """
    start = time.perf_counter()
    anchors = _anchors(chain)
    n = chain.n_sites
    if anchors and anchors[-1] > n:
        raise ValueError("chain reaches past its register", anchors[-1], n)
    D0 = chain.steps[0].shape[0]
    states: dict[tuple[int, int, int], int] = {(a, 0, 0): a for a in range(D0)}
    tensors = []
    ptr = 0
    for s in range(1, n + 1):
        frontier: dict[tuple[int, int, int, int], complex] = {
            (idx, a, x, z): 1.0 + 0j for (a, x, z), idx in states.items()
        }
        while ptr < len(anchors) and anchors[ptr] == s:
            step = chain.steps[ptr]
            nxt: dict[tuple[int, int, int, int], complex] = {}
            for (idx, a, x, z), c in frontier.items():
                for o, e in enumerate(step.entries[a]):
                    if e is None:
                        continue
                    for p, amp in e:
                        x2, z2, k = mul_words(x, z, p.x, p.z)
                        key = (idx, o, x2, z2)
                        nxt[key] = nxt.get(key, 0j) + c * amp * ipow(k)
            frontier = {key: c for key, c in nxt.items() if c != 0}
            ptr += 1
        bit = 1 << (s - 1)
        out_states: dict[tuple[int, int, int], int] = {}
        entries = []
        for (idx, a, x, z), c in frontier.items():
            letter = bool(x & bit) + 2 * bool(z & bit)
            key = (a, x & ~bit, z & ~bit)
            o = out_states.setdefault(key, len(out_states))
            entries.append((idx, o, c, letter))
        if not out_states:
            # the operator vanished; keep one zero-weight bond state
            out_states[(0, 0, 0)] = 0
        T = np.zeros((len(states), len(out_states), 2, 2), dtype=complex)
        for idx, o, c, letter in entries:
            T[idx, o] += c * PAULI_MATRICES[letter]
        tensors.append(T)
        states = out_states
    if ptr != len(chain.steps):
        raise ValueError("steps left over after the last site", ptr, len(chain.steps))
    right = np.zeros(len(states), dtype=complex)
    for (a, x, z), idx in states.items():
        if x or z:
            raise ValueError("Pauli carry left past the last site", (a, x, z))
        right[idx] = 1.0
    lm = LocalMpo(tuple(tensors), np.ones(D0, dtype=complex), right)
    logger.debug("localized %s chain (M=%d): max bond %d", chain.spec.family, chain.M, max(lm.bond_dims))
    config.perf_event("localize", (chain.spec.family, chain.M), time.perf_counter() - start)
    return lm


def sandwich(
    left: LocalMpo, site_ops: list[np.ndarray], right: LocalMpo, psi: ProductState
) -> tuple[complex, float]:
    """
    <psi| L . O . R |psi> for local MPOs L, R and a product operator O.

    Returns (mantissa, log_scale) with value = mantissa * exp(log_scale).
    Both site tensors and the joint boundary tensor are scaled to unit
    maximum at every site, so the sweep neither overflows nor underflows
    however large the spectral parameter is.
    """
    if not left.n_sites == right.n_sites == len(site_ops) == psi.M:
        raise ValueError("site counts disagree", left.n_sites, right.n_sites, psi.M)
    E = np.outer(left.left, right.left)
    log_scale = 0.0
    for T1, op, T2, v in zip(left.tensors, site_ops, right.tensors, psi.amplitudes):
        s1 = float(np.max(np.abs(T1))) if T1.size else 0.0
        s2 = float(np.max(np.abs(T2))) if T2.size else 0.0
        if s1 == 0.0 or s2 == 0.0:
            return 0j, 0.0
        E = oe.contract("ij,a,ipab,bc,jqcd,d->pq", E, v.conj(), T1 / s1, op, T2 / s2, v)
        m = float(np.max(np.abs(E))) if E.size else 0.0
        if m == 0.0:
            return 0j, 0.0
        if not np.isfinite(m):
            raise FloatingPointError("boundary tensor is not finite", m)
        E = E / m
        log_scale += np.log(m) + np.log(s1) + np.log(s2)
    return complex(left.right @ E @ right.right), float(log_scale)


def chi_site_ops(spec: CircuitSpec) -> list[np.ndarray]:
    chi = make_chi(spec.family, spec.M)
    return [PAULI_MATRICES[chi.letter_index(s)] for s in range(1, spec.M + 1)]


def _divide(value: tuple[complex, float], spectral: SpectralData, s: int) -> complex:
    """mantissa * exp(log_scale) / N_s, combined in log space."""
    mant, log_scale = value
    if mant == 0:
        return 0j
    return complex(mant * np.exp(log_scale - spectral.log_norm(s)) / spectral.norm_phase(s))


def mode_pair_expectation(
    spec: CircuitSpec, k: int, psi: ProductState, spectral: SpectralData
) -> tuple[complex, complex]:
    """(<Psi_k>, <Psi_-k>) from one pair of localized transfer matrices."""
    if not 1 <= k <= spectral.S:
        raise ValueError("mode index out of range", k, spectral.S)
    u = spectral.root(k)
    plus = localize(build_omega_chain(spec, 1j * u))
    minus = localize(build_omega_chain(spec, -1j * u))
    ops = chi_site_ops(spec)
    return (
        _divide(sandwich(plus, ops, minus, psi), spectral, k),
        _divide(sandwich(minus, ops, plus, psi), spectral, -k),
    )


def mode_expectation(
    spec: CircuitSpec, s: int, psi: ProductState, spectral: SpectralData | None = None
) -> complex:
    """
    <psi|Psi_s|psi> = <psi| A(i u_s) chi A(-i u_s) |psi> / N_s, with u_{-k} = -u_k.

    >>> from ffdsim.circuit import CircuitSpec
    >>> spec = CircuitSpec.homogeneous("I", 1, 0.3)
    >>> psi = ProductState.basis([0])
    >>> [bool(abs(mode_expectation(spec, s, psi) - 0.5) < 1e-12) for s in (1, -1)]
    [True, True]
    """
    if spectral is None:
        spectral = solve_spectrum(spec)
    u = spectral.root(s)
    left = localize(build_omega_chain(spec, 1j * u))
    right = localize(build_omega_chain(spec, -1j * u))
    return _divide(sandwich(left, chi_site_ops(spec), right, psi), spectral, s)
