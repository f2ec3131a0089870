"""
Dense operators for the exact oracle.

Transfer matrices at level M involve the generators h_{M+1} and h_{M+2},
which reach two sites past the chain. A DenseOp therefore stores one 2^M x 2^M
body matrix per Pauli word on the two overhang sites M+1, M+2:

    op = sum_t body_t (x) t

Operators without overhang have a single block under the identity word.
Multiplication by Pauli strings is a signed permutation of rows or columns.

>>> x1 = DenseOp.from_pauli(PauliString.from_label("X"))
>>> (x1 @ x1).scalar_part()
(1+0j)
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

import ffdsim.config as config
from ffdsim.pauli import OperatorSum, PauliString, ipow, mul_words

OVERHANG = 2
_NO_TAIL = (0, 0)


@functools.cache
def _signs(z: int, n: int) -> np.ndarray:
    """(-1)^popcount(z & b) for every basis index b of n qubits."""
    masked = np.arange(2**n) & z
    parity = np.zeros(2**n, dtype=np.int64)
    while masked.any():
        parity ^= masked & 1
        masked = masked >> 1
    s = 1.0 - 2.0 * parity
    s.setflags(write=False)
    return s


def pauli_right(mat: np.ndarray, x: int, z: int, k: int, n: int) -> np.ndarray:
    """mat @ (i^k X^x Z^z)."""
    idx = np.arange(2**n)
    return mat[:, idx ^ x] * (ipow(k) * _signs(z, n))[None, :]


def pauli_left(mat: np.ndarray, x: int, z: int, k: int, n: int) -> np.ndarray:
    """(i^k X^x Z^z) @ mat."""
    idx = np.arange(2**n)
    return (ipow(k) * _signs(z, n)[idx ^ x])[:, None] * mat[idx ^ x, :]


def pauli_matrix(p: PauliString) -> np.ndarray:
    """
    Dense matrix of a Pauli string; site m is bit m-1.

    >>> bool(np.allclose(pauli_matrix(PauliString.from_label("Y")), [[0, -1j], [1j, 0]]))
    True
    """
    config.check_dense(p.M)
    return pauli_right(np.eye(2**p.M, dtype=complex), p.x, p.z, _raw_phase(p), p.M)


def _raw_phase(p: PauliString) -> int:
    # visible letters: Y = i X Z
    return p.phase + (p.x & p.z).bit_count()


def _split(p: PauliString, M: int) -> tuple[PauliString, tuple[int, int]]:
    """Body (with the phase) and overhang word of a string on M or M+2 sites."""
    if p.M == M:
        return p, _NO_TAIL
    if p.M != M + OVERHANG:
        raise ValueError("Pauli string does not fit the register", p, M)
    mask = (1 << M) - 1
    body = PauliString(M, p.x & mask, p.z & mask, p.phase)
    return body, (p.x >> M, p.z >> M)


@dataclass(frozen=True, eq=False)
class DenseOp:
    M: int
    blocks: Mapping[tuple[int, int], np.ndarray]

    @property
    def dim(self) -> int:
        return 2**self.M

    @classmethod
    def identity(cls, M: int, c: complex = 1.0) -> DenseOp:
        config.check_dense(M)
        return cls(M, {_NO_TAIL: c * np.eye(2**M, dtype=complex)})

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> DenseOp:
        M = int(mat.shape[0]).bit_length() - 1
        if mat.shape != (2**M, 2**M):
            raise ValueError("matrix is not 2^M x 2^M", mat.shape)
        return cls(M, {_NO_TAIL: np.asarray(mat, dtype=complex)})

    @classmethod
    def from_pauli(cls, p: PauliString, M: int | None = None) -> DenseOp:
        return cls.identity(p.M if M is None else M).mul_pauli(p)

    @classmethod
    def from_sum(cls, op: OperatorSum, M: int | None = None) -> DenseOp:
        return cls.identity(op.M if M is None else M).mul_sum(op)

    def mul_pauli(self, p: PauliString, left: bool = False) -> DenseOp:
        """self * p, or p * self when `left`."""
        body, (pxt, pzt) = _split(p, self.M)
        kb = _raw_phase(body)
        out: dict[tuple[int, int], np.ndarray] = {}
        for (xt, zt), mat in self.blocks.items():
            if left:
                x, z, k = mul_words(pxt, pzt, xt, zt)
                new = pauli_left(mat, body.x, body.z, kb + k, self.M)
            else:
                x, z, k = mul_words(xt, zt, pxt, pzt)
                new = pauli_right(mat, body.x, body.z, kb + k, self.M)
            _accumulate(out, (x, z), new)
        return DenseOp(self.M, out)

    def mul_sum(self, op: OperatorSum, left: bool = False) -> DenseOp:
        acc = DenseOp(self.M, {})
        for p, a in op:
            acc = acc + a * self.mul_pauli(p, left=left)
        return acc

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = DenseOp.identity(self.M, other)
        if not isinstance(other, DenseOp):
            return NotImplemented
        if other.M != self.M:
            raise ValueError("register size mismatch", self.M, other.M)
        out = {t: m.copy() for t, m in self.blocks.items()}
        for t, m in other.blocks.items():
            _accumulate(out, t, m)
        return DenseOp(self.M, out)

    __radd__ = __add__

    def __neg__(self):
        return (-1.0) * self

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, c):
        if isinstance(c, (int, float, complex, np.number)):
            return DenseOp(self.M, {t: c * m for t, m in self.blocks.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other: DenseOp) -> DenseOp:
        if other.M != self.M:
            raise ValueError("register size mismatch", self.M, other.M)
        out: dict[tuple[int, int], np.ndarray] = {}
        for (x1, z1), a in self.blocks.items():
            for (x2, z2), b in other.blocks.items():
                x, z, k = mul_words(x1, z1, x2, z2)
                _accumulate(out, (x, z), ipow(k) * (a @ b))
        return DenseOp(self.M, out)

    def dagger(self) -> DenseOp:
        return DenseOp(self.M, {t: m.conj().T for t, m in self.blocks.items()})

    def scalar_part(self) -> complex:
        body = self.blocks.get(_NO_TAIL)
        return 0j if body is None else complex(np.trace(body) / self.dim)

    def norm(self) -> float:
        """Normalized Hilbert-Schmidt norm, equal to 1 for unitaries."""
        sq = sum(float(np.vdot(m, m).real) for m in self.blocks.values())
        return float(np.sqrt(sq / self.dim))

    @property
    def has_overhang(self) -> bool:
        return any(t != _NO_TAIL and np.any(m) for t, m in self.blocks.items())

    @property
    def matrix(self) -> np.ndarray:
        """The 2^M body; only defined without overhang."""
        if self.has_overhang:
            raise ValueError("operator reaches past site M; use full_matrix()")
        body = self.blocks.get(_NO_TAIL)
        return np.zeros((self.dim, self.dim), dtype=complex) if body is None else body

    def full_matrix(self) -> np.ndarray:
        """Dense matrix on M+2 sites, overhang sites as the two top bits."""
        config.check_dense(self.M + OVERHANG)
        out = np.zeros((4 * self.dim, 4 * self.dim), dtype=complex)
        for (xt, zt), m in self.blocks.items():
            tail = pauli_matrix(PauliString(OVERHANG, xt, zt))
            out += np.kron(tail, m)
        return out


def _accumulate(out: dict, key, mat: np.ndarray) -> None:
    if key in out:
        out[key] = out[key] + mat
    else:
        out[key] = mat


def commutator(a: DenseOp, b: DenseOp) -> DenseOp:
    return a @ b - b @ a


def anticommutator(a: DenseOp, b: DenseOp) -> DenseOp:
    return a @ b + b @ a


def scalar_residual(op: DenseOp) -> tuple[complex, float]:
    """
    Split op into c * identity plus a remainder; return (c, norm of remainder).

    >>> scalar_residual(DenseOp.identity(2, 3.0))
    ((3+0j), 0.0)
    """
    c = op.scalar_part()
    return c, (op - c).norm()
