"""
Free-fermionic spectrum from the scalar recursions.

calA_M(u) = A_M(u) A_M(-u) is a polynomial of degree S = floor((M+2)/3) in w = u^2
whose roots w_k = -u_k^2 are real and negative. Everything else (pseudoenergies,
normalizations, expansion coefficients of the boundary operator) is read off
calA_M and the auxiliary polynomial one period below it.

>>> from ffdsim.circuit import CircuitSpec
>>> data = solve_spectrum(CircuitSpec.homogeneous("I", 1, 0.3))
>>> bool(np.isclose(data.roots[0], 1 / np.tan(0.3)))
True
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import flint
import numpy as np
import scipy.linalg

import ffdsim.config as config
from ffdsim.circuit import CircuitSpec
from ffdsim.pauli import Family
from ffdsim.poly import (
    PolyU2,
    Scalar,
    ScalarChain,
    arb,
    as_float,
    extended_precision,
    scalar_chain,
)

logger = logging.getLogger("ffdsim")


class SpectralStructureError(Exception):
    """calA_M does not have the free-fermionic root structure."""


class DegeneracyError(SpectralStructureError):
    """Coincident roots or a vanishing normalization."""


def mode_count(M: int) -> int:
    """
    S = floor((M+2)/3).

    >>> [mode_count(M) for M in (1, 3, 12, 150)]
    [1, 1, 4, 50]
    """
    return (M + 2) // 3


def build_calA(spec: CircuitSpec, precision: str = "standard") -> ScalarChain:
    """
    calA, calB, calC, calD chains for the circuit.

    >>> chain = build_calA(CircuitSpec.homogeneous("III", 6, 0.0))
    >>> chain.calA().to_float().trimmed().coeffs
    (1.0,)
    """
    return scalar_chain(spec.family, spec.phases, precision)


def normalization_error(chain: ScalarChain) -> float:
    """|calA_M(1) - 1|."""
    p = chain.calA()
    if chain.precision == "extended":
        with extended_precision():
            return abs(as_float(p.eval_w(arb(1)) - 1))
    return abs(float(p.eval_w(1.0)) - 1.0)


def _abs_eval(coeffs: np.ndarray, r: float) -> float:
    return float(np.sum(np.abs(coeffs) * r ** np.arange(len(coeffs))))


def _to_arb(c: Scalar):
    return c if isinstance(c, arb) else arb(float(c))


def _arb_eval(poly: PolyU2, w):
    """poly(w) as an exact arb midpoint; call inside extended_precision()."""
    return PolyU2(tuple(_to_arb(c) for c in poly.coeffs)).eval_w(w).mid()


def _arb_abs_eval(poly: PolyU2, r):
    return PolyU2(tuple(abs(_to_arb(c)) for c in poly.coeffs)).eval_w(r)


def _sign_log(x) -> tuple[float, float]:
    """(sign, log|x|) of a nonzero exact arb; no overflow for any exponent."""
    return (1.0 if x > 0 else -1.0), as_float(abs(x).log())


def _polish_extended(poly: PolyU2, w: float, steps: int = 6) -> tuple[float, float]:
    """Newton on arb coefficients; returns (root, backward residual)."""
    dp = poly.deriv_w()
    with extended_precision():
        x = arb(w)
        for _ in range(steps):
            d = dp.eval_w(x)
            if d == 0:
                break
            nxt = x - poly.eval_w(x) / d
            if not np.isfinite(as_float(nxt)):
                break
            x = nxt.mid()
        num = abs(as_float(poly.eval_w(x)))
        w = as_float(x)
    return w, num / max(_abs_eval(np.array([as_float(c) for c in poly.coeffs]), abs(w)), 1e-300)


def _roots_flint(poly: PolyU2) -> np.ndarray:
    """Isolated complex roots of an arb polynomial (midpoints of the input)."""
    with extended_precision():
        coeffs = [arb(c.mid()) if isinstance(c, arb) else arb(float(c)) for c in poly.coeffs]
        try:
            roots = flint.arb_poly(coeffs).complex_roots()
        except ValueError as e:
            raise DegeneracyError("roots could not be isolated", poly) from e
        return np.array([complex(as_float(r.real), as_float(r.imag)) for r in roots])


def _structure_ok(ws: np.ndarray) -> bool:
    tol = config.root_structure_tol
    return all(
        np.isfinite(w) and abs(w.imag) <= tol * abs(w) and w.real <= -tol * abs(w) for w in ws
    )


def find_roots(calA: PolyU2, extended: PolyU2 | None = None, degree: int | None = None) -> np.ndarray:
    """
    Positive u_k from the w-roots -u_k^2, ascending.

    Eigenvalues of the balanced companion matrix, one Newton step on the
    original coefficients, then arb Newton polishing (on `extended` if given)
    for any root whose backward residual is still above `root_residual_tol`.
    If the companion roots are not all real and negative, the roots are
    isolated again with flint before giving up. With `degree` given, the
    coefficients up to that degree are kept however small they are.

    >>> find_roots(PolyU2((4.0, 1.0)))  # 4 + w
    array([2.])
    >>> find_roots(PolyU2((-1.0, 1.0)))
    Traceback (most recent call last):
        ...
    ffdsim.spectrum.SpectralStructureError: ...
    """
    p = calA.to_float().trimmed(keep=degree or 0)
    S = p.degree
    if S < 1 or p.lead == 0:
        raise SpectralStructureError("calA_M has no roots", p)
    c = np.array(p.coeffs)
    exact = p if extended is None else PolyU2(extended.coeffs[: S + 1])
    if S == 1:
        ws = np.array([-c[0] / c[1]], dtype=complex)
    else:
        comp = scipy.linalg.companion(c[::-1])
        bal, _ = scipy.linalg.matrix_balance(comp)
        ws = scipy.linalg.eigvals(bal)
        dp = p.deriv_w()
        ws = np.array([w - p.eval_w(w) / dp.eval_w(w) if dp.eval_w(w) != 0 else w for w in ws])
        if not _structure_ok(ws):
            logger.debug("companion roots lost their structure; isolating with flint")
            ws = _roots_flint(exact)

    for w in ws:
        if not _structure_ok(np.array([w])):
            raise SpectralStructureError("w-root is not real and negative", complex(w))
    ws = np.sort(ws.real)[::-1]  # ascending u

    out = []
    for w in ws:
        res = p.backward_error(w)
        if not res <= config.root_residual_tol:
            w, res = _polish_extended(exact, float(w))
            logger.debug("polished root w=%.17g, residual %.3g", w, res)
            if not res <= config.root_residual_tol:
                raise SpectralStructureError("root residual above tolerance", w, res)
        out.append(w)
    us = np.sqrt(-np.array(out))
    if not np.all(np.isfinite(us) & (us > 0)):
        raise SpectralStructureError("non-finite or non-positive root", us)
    for a, b in zip(us[:-1], us[1:]):
        if abs(b - a) <= config.degeneracy_tol * max(abs(a), abs(b)):
            raise DegeneracyError("coincident roots; perturb the phases", float(a), float(b))
    return us


def _prefactor(spec: CircuitSpec, u):
    """The N_k^2 prefactor, divided by q(w_k) calA_M'(w_k) with ' = d/dw."""
    M = spec.M
    X = lambda m: spec.x(m) ** 2  # noqa: E731
    if spec.family is Family.I:
        return 16 * u**2 * X(M)
    if spec.family is Family.II:
        return 16 * u**2 * X(M) * X(M - 1)
    return 16 * u**4 * boundary_weight(spec)


def boundary_weight(spec: CircuitSpec) -> float:
    """(x_{M-2} x_{M-1} y_M)^2."""
    M = spec.M
    return (spec.x(M - 2) * spec.x(M - 1) * spec.y(M)) ** 2


def normalizations(spec: CircuitSpec, chain: ScalarChain, roots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    N_k as the principal square root of N_k^2 = {Psi(iu_k), Psi(-iu_k)}.

    N_k^2 is real, so every N_k is real or purely imaginary. It grows like a
    power of u_k, so it is returned as (log|N_k|, N_k / |N_k|) with the
    phase 1 or i; the product is evaluated on arb midpoints.
    """
    p, q = chain.calA(), chain.aux()
    dp = p.deriv_w()
    logs, phases = [], []
    with extended_precision():
        for u in roots:
            ua = arb(float(u))
            w = -(ua**2)
            pre = _prefactor(spec, ua)
            n2 = (pre * _arb_eval(q, w) * _arb_eval(dp, w)).mid()
            scale = abs(pre) * _arb_abs_eval(q, -w) * _arb_abs_eval(dp, -w)
            if n2 == 0 or abs(n2) < 1e-12 * scale:
                raise DegeneracyError("N_k^2 vanishes", float(u), as_float(n2))
            sign, log2 = _sign_log(n2)
            logs.append(log2 / 2)
            phases.append(1.0 if sign > 0 else 1j)
    return np.array(logs), np.array(phases, dtype=complex)


def coefficients_III(
    spec: CircuitSpec,
    chain: ScalarChain,
    roots: np.ndarray,
    log_norms: np.ndarray,
    phases: np.ndarray,
) -> tuple[np.ndarray, float]:
    """
    Expansion chi = sum_s c_s Psi_s + c_0 Psi_0 for family III.

    c_{-k} = c_k = -(2i u_k a)^2 calA_{M-3}(iu_k) / N_k with a = x_{M-2} x_{M-1} y_M,
    and c_0^2 = 1 - a^2 q_{S-1} / p_S from the leading coefficients.
    """
    if spec.family is not Family.III:
        raise ValueError("expansion coefficients exist for family III only", spec.family)
    a2 = boundary_weight(spec)
    q, p = chain.aux(), chain.calA()
    S = mode_count(spec.M)
    cs = []
    with extended_precision():
        for u, log_n, ph in zip(roots, log_norms, phases):
            ua = arb(float(u))
            num = (4 * ua**2 * a2 * _arb_eval(q, -(ua**2))).mid()
            if num == 0:
                cs.append(0j)
                continue
            sign, log_num = _sign_log(num)
            cs.append(sign * np.exp(log_num - log_n) / ph)
        ratio = as_float(a2 * _to_arb(q.coefficient(S - 1)) / _to_arb(p.coefficient(S)))
    c02 = 1.0 - ratio
    if c02 < -1e-10:
        raise SpectralStructureError("negative c0^2", c02)
    return np.array(cs, dtype=complex), float(np.sqrt(max(c02, 0.0)))


def time_coefficients(c, u, t: int):
    """
    c_s(t) = c_s ((iu_s - 1)/(iu_s + 1))^t, with u_{-k} = -u_k.

    >>> round(float(abs(time_coefficients(1.0, 0.5, 7))), 12)
    1.0
    """
    if t < 0:
        raise ValueError("time must be a nonnegative integer", t)
    u = np.asarray(u)
    return c * ((1j * u - 1) / (1j * u + 1)) ** t


@dataclass(frozen=True, eq=False)
class SpectralData:
    """
    Solution of one circuit instance. Arrays are indexed by k = 1..S;
    signed mode indices s = +-k go through the accessor methods.

    Normalizations are stored as log|N_k| and the phase N_k / |N_k|,
    since |N_k| leaves the float range on long chains.
    """

    family: Family
    M: int
    phases: tuple[float, ...]
    roots: np.ndarray
    log_norms: np.ndarray
    norm_phases: np.ndarray
    coefficients: np.ndarray | None = None
    c0: float | None = None
    precision: str = "standard"
    normalization_error: float = 0.0
    calA: PolyU2 = field(default=PolyU2((1.0,)))
    aux: PolyU2 = field(default=PolyU2((1.0,)))

    @property
    def S(self) -> int:
        return len(self.roots)

    @property
    def pseudoenergies(self) -> np.ndarray:
        return np.arctan(1 / self.roots)

    @property
    def norms(self) -> np.ndarray:
        """N_k; may overflow to inf where log_norms does not."""
        with np.errstate(over="ignore"):
            return self.norm_phases * np.exp(self.log_norms)

    def modes(self) -> list[int]:
        return [s for k in range(1, self.S + 1) for s in (k, -k)]

    def _k(self, s: int) -> int:
        if s == 0 or abs(s) > self.S:
            raise ValueError("mode index out of range", s, self.S)
        return abs(s) - 1

    def root(self, s: int) -> float:
        """Signed root: u_s for s > 0, -u_|s| for s < 0."""
        return float(np.sign(s) * self.roots[self._k(s)])

    def norm(self, s: int) -> complex:
        return complex(self.norms[self._k(s)])

    def log_norm(self, s: int) -> float:
        return float(self.log_norms[self._k(s)])

    def norm_phase(self, s: int) -> complex:
        return complex(self.norm_phases[self._k(s)])

    def coefficient(self, s: int) -> complex:
        if self.coefficients is None:
            raise ValueError("no expansion coefficients for this family", self.family)
        return complex(self.coefficients[self._k(s)])

    def multiplier(self, s: int) -> complex:
        u = self.root(s)
        return complex((1j * u - 1) / (1j * u + 1))

    def with_branches(self, signs: Sequence[int]) -> SpectralData:
        """Flip the branch of selected N_k; the c_k carrying 1/N_k flip with them."""
        sg = np.asarray(signs, dtype=float)
        if sg.shape != self.roots.shape or not np.all(np.abs(sg) == 1):
            raise ValueError("need one sign (+-1) per root", signs)
        cs = None if self.coefficients is None else self.coefficients * sg
        return replace(self, norm_phases=self.norm_phases * sg, coefficients=cs)

    def to_json(self) -> str:
        doc = {
            "family": self.family.value,
            "M": self.M,
            "phases": list(self.phases),
            "S": self.S,
            "precision": self.precision,
            "roots": self.roots.tolist(),
            "pseudoenergies": self.pseudoenergies.tolist(),
            "log_norms": self.log_norms.tolist(),
            "norm_phases_real": self.norm_phases.real.tolist(),
            "norm_phases_imag": self.norm_phases.imag.tolist(),
            "c_s_real": None if self.coefficients is None else self.coefficients.real.tolist(),
            "c_s_imag": None if self.coefficients is None else self.coefficients.imag.tolist(),
            "c0": self.c0,
            "normalization_error": self.normalization_error,
            "calA": [float(c) for c in self.calA.coeffs],
            "aux": [float(c) for c in self.aux.coeffs],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> SpectralData:
        doc = json.loads(text)
        cs = None
        if doc.get("c_s_real") is not None:
            cs = np.array(doc["c_s_real"]) + 1j * np.array(doc["c_s_imag"])
        return cls(
            family=Family(doc["family"]),
            M=doc["M"],
            phases=tuple(doc["phases"]),
            roots=np.array(doc["roots"], dtype=float),
            log_norms=np.array(doc["log_norms"], dtype=float),
            norm_phases=np.array(doc["norm_phases_real"]) + 1j * np.array(doc["norm_phases_imag"]),
            coefficients=cs,
            c0=doc.get("c0"),
            precision=doc.get("precision", "standard"),
            normalization_error=doc.get("normalization_error", 0.0),
            calA=PolyU2(tuple(doc.get("calA", [1.0]))),
            aux=PolyU2(tuple(doc.get("aux", [1.0]))),
        )


def _solve_chain(spec: CircuitSpec, chain: ScalarChain, err: float) -> SpectralData:
    S = mode_count(spec.M)
    p = chain.calA().to_float().trimmed(keep=S)
    if p.degree != S:
        raise SpectralStructureError("calA_M has the wrong degree", p.degree, S)
    if p.lead == 0:
        raise SpectralStructureError("calA_M has a vanishing leading coefficient", S)
    roots = find_roots(p, chain.calA() if chain.precision == "extended" else None, degree=S)
    log_norms, phases = normalizations(spec, chain, roots)
    if not np.all(np.isfinite(log_norms)):
        raise SpectralStructureError("non-finite normalization", log_norms)
    cs, c0 = None, None
    if spec.family is Family.III:
        cs, c0 = coefficients_III(spec, chain, roots, log_norms, phases)
        if not np.all(np.isfinite(cs)):
            raise SpectralStructureError("non-finite expansion coefficient", cs)
    return SpectralData(
        family=spec.family,
        M=spec.M,
        phases=spec.phases,
        roots=roots,
        log_norms=log_norms,
        norm_phases=phases,
        coefficients=cs,
        c0=c0,
        precision=chain.precision,
        normalization_error=err,
        calA=p,
        aux=chain.aux().to_float().trimmed(keep=max(S - 1, 0)),
    )


def solve_spectrum(spec: CircuitSpec, precision: str = "standard") -> SpectralData:
    """
    Roots, normalizations and (family III) expansion coefficients.

    A standard run whose calA_M(1) misses 1 by more than `escalation_tol`,
    or whose roots or normalizations come out malformed, is rebuilt with
    arb coefficients.

    >>> data = solve_spectrum(CircuitSpec.homogeneous("III", 150, 1.0))
    >>> data.S, data.calA.degree
    (50, 50)
    """
    if precision not in ("standard", "extended"):
        raise ValueError("precision must be 'standard' or 'extended'", precision)
    start = time.perf_counter()
    chain = build_calA(spec, precision)
    err = normalization_error(chain)
    if precision == "standard" and err > config.escalation_tol:
        logger.warning(
            "calA_M(1) - 1 = %.3g at M=%d; rebuilding with %d-bit arb",
            err, spec.M, config.extended_prec,
        )
        chain = build_calA(spec, "extended")
        err = normalization_error(chain)
    try:
        data = _solve_chain(spec, chain, err)
    except SpectralStructureError as e:
        if chain.precision == "extended":
            raise
        logger.warning("standard precision failed at M=%d (%s); rebuilding with %d-bit arb", spec.M, e, config.extended_prec)
        chain = build_calA(spec, "extended")
        err = normalization_error(chain)
        data = _solve_chain(spec, chain, err)
    logger.info(
        "spectrum %s M=%d: S=%d, |calA(1)-1|=%.2g, precision=%s",
        spec.family, spec.M, data.S, err, chain.precision,
    )
    config.perf_event("spectrum", (spec.family, spec.M, chain.precision), time.perf_counter() - start)
    return data
