"""
Polynomials in w = u^2 and the scalar recursions for A(u)A(-u), B(u)B(-u), ...

The recursions only involve X_m = x_m^2 and Y_m = y_m^2, so one generic
implementation runs on three scalar backends:

- "standard": python floats
- "extended": python-flint ``arb`` balls at ``config.extended_prec`` bits
- "symbolic": sympy expressions in the symbols X_m, Y_m

>>> chain = symbolic_chain("I", 1)
>>> chain.calA()
PolyU2(coeffs=(X1, Y1))
"""

from __future__ import annotations

import contextlib
import threading
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Sequence, TypeAlias

import flint
import numpy as np
import sympy as sp

import ffdsim.config as config
from ffdsim.pauli import Family

Scalar: TypeAlias = Any
arb = flint.arb  # type: ignore

PRECISIONS = ("standard", "extended", "symbolic")

# flint.ctx is process global
_PREC_LOCK = threading.RLock()


@contextlib.contextmanager
def extended_precision(bits: int | None = None) -> Iterator[None]:
    """
    Temporarily raise the flint working precision.

    Holds a reentrant lock for the duration, so threads never see each
    other's precision.
    """
    with _PREC_LOCK:
        old = flint.ctx.prec
        flint.ctx.prec = config.extended_prec if bits is None else bits
        try:
            yield
        finally:
            flint.ctx.prec = old


def as_float(c: Scalar) -> float:
    if isinstance(c, arb):
        return float(c.mid())
    return float(c)


@dataclass(frozen=True)
class PolyU2:
    """
    Coefficients of powers of w = u^2, lowest first.

    >>> p = PolyU2((1.0, 2.0))
    >>> p(1j)  # 1 + 2 u^2 at u = i
    (-1+0j)
    """

    coeffs: tuple

    @classmethod
    def constant(cls, c: Scalar) -> PolyU2:
        return cls((c,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> Scalar:
        return self.coeffs[-1]

    def coefficient(self, j: int) -> Scalar:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else 0

    def __add__(self, other: PolyU2) -> PolyU2:
        n = max(len(self.coeffs), len(other.coeffs))
        return PolyU2(tuple(self.coefficient(j) + other.coefficient(j) for j in range(n)))

    def __neg__(self) -> PolyU2:
        return PolyU2(tuple(-c for c in self.coeffs))

    def __sub__(self, other: PolyU2) -> PolyU2:
        return self + (-other)

    def __mul__(self, other) -> PolyU2:
        if isinstance(other, PolyU2):
            out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] = out[i + j] + a * b
            return PolyU2(tuple(out))
        return PolyU2(tuple(c * other for c in self.coeffs))

    __rmul__ = __mul__

    def shift(self) -> PolyU2:
        """Multiply by w."""
        return PolyU2((0,) + self.coeffs)

    def eval_w(self, w):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * w + c
        return acc

    def __call__(self, u):
        """Evaluate at the spectral parameter u (not at w)."""
        return self.eval_w(u * u)

    def deriv_w(self) -> PolyU2:
        if len(self.coeffs) == 1:
            return PolyU2((0,))
        return PolyU2(tuple(j * c for j, c in enumerate(self.coeffs) if j > 0))

    def deriv_u(self, u):
        """d/du = 2u d/dw."""
        return 2 * u * self.deriv_w()(u)

    def to_float(self) -> PolyU2:
        return PolyU2(tuple(as_float(c) for c in self.coeffs))

    def trimmed(self, rel: float | None = None, keep: int = 0) -> PolyU2:
        """
        Drop negligible leading coefficients (numeric backends only).

        Coefficients of degree <= `keep` are never dropped, however small.

        >>> PolyU2((1.0, 1e-57, 1e-70)).trimmed(keep=1).coeffs
        (1.0, 1e-57)
        """
        rel = config.trim_rel if rel is None else rel
        mags = [abs(as_float(c)) for c in self.coeffs]
        cut = rel * max(mags) if mags else 0.0
        n = len(mags)
        while n > max(1, keep + 1) and mags[n - 1] <= cut:
            n -= 1
        return PolyU2(self.coeffs[:n])

    def backward_error(self, w: complex) -> float:
        """|p(w)| / sum_j |p_j| |w|^j."""
        c = np.array([as_float(a) for a in self.coeffs])
        scale = float(np.sum(np.abs(c) * np.abs(w) ** np.arange(len(c))))
        return abs(complex(self.to_float().eval_w(w))) / scale if scale else 0.0


@dataclass(frozen=True)
class ScalarChain:
    """
    The polynomials (calA, calB, calC, calD) at every recursion level.

    Levels advance by the family period; calD is None for family I.
    """

    family: Family
    M: int
    precision: str
    levels: dict[int, tuple[PolyU2, PolyU2, PolyU2, PolyU2 | None]]

    def calA(self, level: int | None = None) -> PolyU2:
        return self.levels[self.M if level is None else level][0]

    def at(self, level: int | None = None):
        return self.levels[self.M if level is None else level]

    def aux(self) -> PolyU2:
        """calA one period below the top level."""
        return self.calA(self.M - self.family.period)


def run_recursion(
    family: Family, M: int, X: Callable[[int], Scalar], Y: Callable[[int], Scalar], one: Scalar
) -> dict[int, tuple]:
    """Iterate the scalar recursion; X(m), Y(m) give x_m^2, y_m^2 (1 and 0 for m <= 0)."""
    zero = one - one
    A = PolyU2((one,))
    B = C = PolyU2((zero, one))
    D = PolyU2((-one,))
    levels = {0: (A, B, C, None if family is Family.I else D)}
    p = family.period
    for m in range(p, M + 1, p):
        if family is Family.I:
            A, B, C = A * X(m) + B * Y(m), C, A.shift()
            levels[m] = (A, B, C, None)
            continue
        if family is Family.II:
            A, B, C, D = (
                A * (X(m - 1) * X(m)) + B * Y(m - 1) + C * (X(m - 1) * Y(m)),
                A.shift(),
                (A * X(m - 1) + B * (X(m) * Y(m - 1)) - D * (Y(m) * Y(m - 1))).shift(),
                -(A * X(m)) - C * Y(m),
            )
        else:
            kp = PolyU2((X(m), Y(m)))
            km = PolyU2((Y(m), X(m)))
            A, B, C, D = (
                A * (X(m - 2) * X(m - 1)) * kp + B * Y(m - 2) + C * (X(m - 2) * Y(m - 1)),
                A.shift() * X(m - 2)
                + B * (Y(m - 2) * X(m - 1)) * km
                - D.shift() * (Y(m - 1) * Y(m - 2)),
                A.shift() * (X(m - 2) * X(m - 1))
                + (B * Y(m - 2) + C * (X(m - 2) * Y(m - 1))) * km,
                (-(A * X(m - 2)) + D * (Y(m - 2) * Y(m - 1))) * kp
                - B * (Y(m - 2) * X(m - 1)),
            )
        levels[m] = (A, B, C, D)
    return levels


def _squares(phases: Sequence[float], precision: str):
    if precision == "standard":
        xs = [float(np.cos(p)) ** 2 for p in phases]
        ys = [float(np.sin(p)) ** 2 for p in phases]
        return xs, ys, 1.0
    if precision == "extended":
        xs = [arb(p).cos() ** 2 for p in phases]
        ys = [arb(p).sin() ** 2 for p in phases]
        return xs, ys, arb(1)
    raise ValueError("unknown precision", precision)


def scalar_chain(family: Family | str, phases: Sequence[float], precision: str = "standard") -> ScalarChain:
    """
    Numeric chain for the given phases.

    Extended chains hold arb coefficients; evaluate them inside
    ``extended_precision()``.

    >>> c = scalar_chain("I", [0.3])
    >>> [round(v, 12) for v in c.calA().coeffs] == [round(np.cos(0.3)**2, 12), round(np.sin(0.3)**2, 12)]
    True
    """
    family = Family(family)
    M = len(phases)
    family.check_size(M)
    with extended_precision() if precision == "extended" else contextlib.nullcontext():
        xs, ys, one = _squares(phases, precision)
        X = lambda m: one if m <= 0 else xs[m - 1]  # noqa: E731
        Y = lambda m: one - one if m <= 0 else ys[m - 1]  # noqa: E731
        levels = run_recursion(family, M, X, Y, one)
    return ScalarChain(family, M, precision, levels)


def symbolic_chain(family: Family | str, M: int) -> ScalarChain:
    """Chain with sympy coefficients in the symbols X1..XM, Y1..YM."""
    family = Family(family)
    family.check_size(M)
    xs = sp.symbols(f"X1:{M + 1}")
    ys = sp.symbols(f"Y1:{M + 1}")
    one = sp.Integer(1)

    def X(m):
        return one if m <= 0 else xs[m - 1]

    def Y(m):
        return sp.Integer(0) if m <= 0 else ys[m - 1]

    raw = run_recursion(family, M, X, Y, one)
    levels = {
        k: tuple(
            None if p is None else PolyU2(tuple(sp.expand(c) for c in p.coeffs)) for p in v
        )
        for k, v in raw.items()
    }
    return ScalarChain(family, M, "symbolic", levels)
