"""
Exact Pauli-string algebra on M qubits.

A PauliString stores its X-part and Z-part as integer bit masks (bit m-1 is
site m) together with a phase exponent k, representing i^k times a tensor
product of the Hermitian letters I, X, Y, Z. Products and (anti)commutation
tests are word-parallel integer operations, so phases stay exact.

>>> h3, h4 = make_h(3, 5), make_h(4, 5)
>>> h3
ZZXII
>>> h3 * h4 == -(h4 * h3)
True
>>> PauliString.from_label("X") * PauliString.from_label("Z")
-i*Y
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

import ffdsim.config as config

# letter index = x + 2*z
LETTERS = "IXZY"

PAULI_MATRICES = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
)

_PHASE_PREFIX = ("", "i*", "-", "-i*")
_PHASES = (1, 1j, -1, -1j)


def ipow(k: int) -> complex:
    """i**k for an integer exponent, exactly."""
    return _PHASES[k % 4]


def mul_words(x1: int, z1: int, x2: int, z2: int) -> tuple[int, int, int]:
    """
    Multiply two phase-free letter words.

    Returns (x, z, k) with sigma(x1, z1) * sigma(x2, z2) = i^k sigma(x, z).

    >>> mul_words(1, 0, 0, 1)  # X Z = -i Y
    (1, 1, 3)
    >>> mul_words(1, 1, 1, 1)  # Y Y = I
    (0, 0, 0)
    """
    x, z = x1 ^ x2, z1 ^ z2
    k = (x1 & z1).bit_count() + (x2 & z2).bit_count()
    k += 2 * (z1 & x2).bit_count() - (x & z).bit_count()
    return x, z, k % 4


def anticommutes_words(x1: int, z1: int, x2: int, z2: int) -> bool:
    return ((x1 & z2).bit_count() + (z1 & x2).bit_count()) % 2 == 1


@dataclass(frozen=True)
class PauliString:
    M: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("negative register size", self.M)
        if (self.x | self.z) >> self.M:
            raise ValueError("letters outside the register", self)
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, M: int) -> PauliString:
        return cls(M)

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> PauliString:
        """
        Build from a letter string, site 1 first.

        >>> PauliString.from_label("IZX").letter(3)
        'X'
        """
        x = z = 0
        for j, c in enumerate(label.upper()):
            if c not in LETTERS:
                raise ValueError("unknown Pauli letter", c)
            idx = LETTERS.index(c)
            x |= (idx & 1) << j
            z |= (idx >> 1) << j
        return cls(len(label), x, z, phase)

    def letter_index(self, site: int) -> int:
        b = site - 1
        return ((self.x >> b) & 1) | (((self.z >> b) & 1) << 1)

    def letter(self, site: int) -> str:
        return LETTERS[self.letter_index(site)]

    @property
    def label(self) -> str:
        return "".join(self.letter(j) for j in range(1, self.M + 1))

    @property
    def coefficient(self) -> complex:
        return ipow(self.phase)

    def support(self) -> list[int]:
        mask = self.x | self.z
        return [j + 1 for j in range(mask.bit_length()) if (mask >> j) & 1]

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def normalized(self) -> PauliString:
        """Same letters with phase +1."""
        return PauliString(self.M, self.x, self.z)

    def commutes(self, other: PauliString) -> bool:
        _check_size(self, other)
        return not anticommutes_words(self.x, self.z, other.x, other.z)

    def __mul__(self, other):
        if isinstance(other, PauliString):
            return multiply(self, other)
        return NotImplemented

    def __neg__(self) -> PauliString:
        return PauliString(self.M, self.x, self.z, self.phase + 2)

    def __repr__(self):
        return _PHASE_PREFIX[self.phase] + (self.label or "1")


def _check_size(p, q):
    if p.M != q.M:
        raise ValueError("register size mismatch", p, q)


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """
    Exact product p*q including phase.

    >>> multiply(PauliString.identity(2), make_h(2, 2))
    ZX
    """
    _check_size(p, q)
    x, z, k = mul_words(p.x, p.z, q.x, q.z)
    return PauliString(p.M, x, z, p.phase + q.phase + k)


class Family(enum.Enum):
    """The three circuit geometries: staircase, period-2 and period-3 brickwork."""

    I = "I"
    II = "II"
    III = "III"

    @property
    def period(self) -> int:
        return {"I": 1, "II": 2, "III": 3}[self.value]

    @property
    def bond(self) -> int:
        """Ancilla dimension D of the transfer-matrix MPO."""
        return 3 if self is Family.I else 4

    def check_size(self, M: int) -> None:
        if M < 1:
            raise ValueError("M must be positive", M)
        if M % self.period != 0:
            raise ValueError(
                f"family {self.value} needs M divisible by {self.period}", M
            )

    def __str__(self):
        return self.value


def make_h(m: int, M: int) -> PauliString:
    """
    The generator h_m = Z_{m-2} Z_{m-1} X_m; letters on sites <= 0 are dropped.

    >>> make_h(1, 4), make_h(2, 4), make_h(4, 4)
    (XIII, ZXII, IZZX)
    """
    if not 1 <= m <= M:
        raise ValueError("generator index out of range", m, M)
    z = 0
    for j in (m - 2, m - 1):
        if j >= 1:
            z |= 1 << (j - 1)
    return PauliString(M, 1 << (m - 1), z)


def make_chi(family: Family | str, M: int) -> PauliString:
    """
    Boundary operator: Z_M for families I and III, Z_{M-1} Z_M for family II.

    >>> make_chi("III", 6), make_chi("II", 6)
    (IIIIIZ, IIIIZZ)
    """
    family = Family(family)
    family.check_size(M)
    z = 1 << (M - 1)
    if family is Family.II:
        z |= 1 << (M - 2)
    return PauliString(M, 0, z)


@dataclass(frozen=True, eq=False)
class OperatorSum:
    """
    Complex-weighted sum of phase-normalized Pauli strings.

    >>> h = OperatorSum.from_pauli(make_h(1, 2))
    >>> (h * h).scalar_part()
    (1+0j)
    """

    M: int
    terms: Mapping[PauliString, complex]

    def __post_init__(self):
        merged: dict[PauliString, complex] = {}
        for p, a in self.terms.items():
            if p.M != self.M:
                raise ValueError("register size mismatch", p, self.M)
            if p.phase:
                p, a = p.normalized(), a * p.coefficient
            merged[p] = merged.get(p, 0j) + complex(a)
        pruned = {
            p: a for p, a in merged.items() if abs(a) >= config.prune_threshold
        }
        object.__setattr__(self, "terms", pruned)

    @classmethod
    def zero(cls, M: int) -> OperatorSum:
        return cls(M, {})

    @classmethod
    def identity(cls, M: int, c: complex = 1.0) -> OperatorSum:
        return cls(M, {PauliString(M): c})

    @classmethod
    def from_pauli(cls, p: PauliString, amp: complex = 1.0) -> OperatorSum:
        return cls(p.M, {p.normalized(): amp * p.coefficient})

    def __iter__(self) -> Iterator[tuple[PauliString, complex]]:
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def scalar_part(self) -> complex:
        return complex(self.terms.get(PauliString(self.M), 0j))

    def norm1(self) -> float:
        return sum(abs(a) for a in self.terms.values())

    def _add(self, other: OperatorSum, sign: float) -> OperatorSum:
        _check_size(self, other)
        out = dict(self.terms)
        for p, a in other.terms.items():
            out[p] = out.get(p, 0j) + sign * a
        return OperatorSum(self.M, out)

    def __add__(self, other):
        if isinstance(other, OperatorSum):
            return self._add(other, 1.0)
        if isinstance(other, PauliString):
            return self._add(OperatorSum.from_pauli(other), 1.0)
        if isinstance(other, (int, float, complex)):
            return self._add(OperatorSum.identity(self.M, other), 1.0)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (OperatorSum, PauliString, int, float, complex)):
            return self + (-1) * other
        return NotImplemented

    def __rsub__(self, other):
        return (-1) * self + other

    def __neg__(self):
        return (-1) * self

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return OperatorSum(self.M, {p: a * other for p, a in self.terms.items()})
        if isinstance(other, PauliString):
            other = OperatorSum.from_pauli(other)
        if not isinstance(other, OperatorSum):
            return NotImplemented
        _check_size(self, other)
        out: dict[PauliString, complex] = {}
        for p, a in self.terms.items():
            for q, b in other.terms.items():
                x, z, k = mul_words(p.x, p.z, q.x, q.z)
                key = PauliString(self.M, x, z)
                out[key] = out.get(key, 0j) + a * b * ipow(k)
        return OperatorSum(self.M, out)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        if isinstance(other, PauliString):
            return OperatorSum.from_pauli(other) * self
        return NotImplemented

    def dagger(self) -> OperatorSum:
        return OperatorSum(self.M, {p: a.conjugate() for p, a in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({a:.6g})*{p}" for p, a in self.terms.items())


def commutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    """
    [a, b], pruned.

    >>> h1, h5 = OperatorSum.from_pauli(make_h(1, 5)), OperatorSum.from_pauli(make_h(5, 5))
    >>> commutator(h1, h5).is_zero()
    True
    """
    return a * b - b * a


def anticommutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    return a * b + b * a


def make_gate(m: int, phi: float, M: int) -> OperatorSum:
    """
    Local gate g_m = cos(phi/2) + i sin(phi/2) h_m.

    >>> g = make_gate(2, 0.7, 3)
    >>> sq = g * g
    >>> bool(abs(sq.scalar_part() - np.cos(0.7)) < 1e-15)
    True
    """
    return OperatorSum(
        M,
        {
            PauliString(M): np.cos(phi / 2),
            make_h(m, M): 1j * np.sin(phi / 2),
        },
    )


@dataclass(frozen=True, eq=False)
class ProductState:
    """Per-site amplitude pairs (a_m, b_m) of a_m|0> + b_m|1>."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.shape[1] != 2:
            raise ValueError("amplitudes must have shape (M, 2)", amps.shape)
        norms = np.linalg.norm(amps, axis=1)
        if np.any(np.abs(norms - 1) > 1e-12):
            raise ValueError("site amplitudes are not normalized", norms)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def M(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def tilted(cls, M: int, theta: float) -> ProductState:
        """cos(theta)|0> + sin(theta)|1> on every site."""
        return cls(np.tile([np.cos(theta), np.sin(theta)], (M, 1)))

    @classmethod
    def basis(cls, bits) -> ProductState:
        amps = np.zeros((len(bits), 2))
        amps[np.arange(len(bits)), list(bits)] = 1.0
        return cls(amps)

    @classmethod
    def random(cls, M: int, seed: int | None = None) -> ProductState:
        rng = np.random.default_rng(seed)
        amps = rng.normal(size=(M, 2)) + 1j * rng.normal(size=(M, 2))
        return cls(amps / np.linalg.norm(amps, axis=1, keepdims=True))

    def site_expectations(self) -> np.ndarray:
        """Table ev[m-1, letter] = <psi_m| sigma_letter |psi_m>."""
        return np.einsum(
            "mi,lij,mj->ml", self.amplitudes.conj(), np.array(PAULI_MATRICES), self.amplitudes
        )

    def to_vector(self) -> np.ndarray:
        """Dense state; site m is bit m-1 of the basis index."""
        config.check_dense(self.M)
        return functools.reduce(np.kron, self.amplitudes[::-1])


def expect_product(op: OperatorSum | PauliString, psi: ProductState) -> complex:
    """
    <psi| op |psi>, factorized site by site.

    >>> psi = ProductState.tilted(3, np.pi / 8)
    >>> z3 = OperatorSum.from_pauli(PauliString.from_label("IIZ"))
    >>> bool(abs(expect_product(z3, psi) - np.cos(np.pi / 4)) < 1e-15)
    True
    """
    if isinstance(op, PauliString):
        op = OperatorSum.from_pauli(op)
    if op.M != psi.M:
        raise ValueError("register size mismatch", op.M, psi.M)
    ev = psi.site_expectations()
    total = 0j
    for p, a in op:
        val = a
        for j in p.support():
            val *= ev[j - 1, p.letter_index(j)]
        total += val
    return complex(total)
