"""
Dense exact oracle.

Every operator of the construction is built as a DenseOp for M <= dense_max_sites
and each algebraic identity is reported as a set of relative residuals.
Transfer matrices are built by iterating their recursions; the Floquet operator
is built independently by multiplying the 2M gates.

>>> from ffdsim.circuit import CircuitSpec
>>> spec = CircuitSpec.homogeneous("I", 1, 0.4)
>>> A, B, C, D = build_abcd(spec, 1.0)
>>> bool(np.allclose(A.matrix, build_floquet(spec).matrix))
True
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

import ffdsim.config as config
from ffdsim.circuit import CircuitSpec
from ffdsim.dense import DenseOp, anticommutator, commutator, scalar_residual
from ffdsim.pauli import (
    Family,
    OperatorSum,
    PauliString,
    make_chi,
    make_gate,
    make_h,
)
from ffdsim.poly import scalar_chain
from ffdsim.spectrum import SpectralData, solve_spectrum

logger = logging.getLogger("ffdsim")


@dataclass
class OracleReport:
    """Named residuals of one identity suite; passes iff all are below `tol`."""

    name: str
    tol: float
    residuals: dict[str, float] = field(default_factory=dict)

    def add(self, key: str, value: float) -> None:
        self.residuals[key] = max(float(value), self.residuals.get(key, 0.0))

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{status} {self.name} (max {self.max_residual:.3g}, tol {self.tol:g})"]
        lines += [f"    {k}: {v:.3g}" for k, v in self.residuals.items()]
        return "\n".join(lines)


def _rel(op: DenseOp, scale: float = 1.0) -> float:
    return op.norm() / max(1.0, scale)


def _h(j: int, M: int) -> PauliString:
    """h_j on the register plus its two overhang sites."""
    return make_h(j, M + 2)


# ---------------------------------------------------------------------------
# Floquet operator and transfer matrices
# ---------------------------------------------------------------------------


def build_floquet(spec: CircuitSpec) -> DenseOp:
    """V = G G^T as an explicit product of the 2M gates."""
    M = spec.M
    config.check_dense(M)
    V = DenseOp.identity(M)
    for m in spec.gate_sequence():
        V = V.mul_sum(make_gate(m, spec.phases[m - 1], M))
    return V


def build_abcd_levels(spec: CircuitSpec, u: complex) -> dict[int, tuple]:
    """(A_m, B_m, C_m, D_m)(u) at every level m; D is None for family I."""
    M, fam = spec.M, spec.family
    config.check_dense(M)
    x, y = spec.x, spec.y
    iu = 1j * complex(u)
    one = DenseOp.identity(M)
    A, B, C = one, one.mul_pauli(_h(1, M)) * iu, one.mul_pauli(_h(2, M)) * iu
    D = one.mul_pauli(_h(1, M)).mul_pauli(_h(2, M))
    levels = {0: (A, B, C, None if fam is Family.I else D)}
    for m in range(fam.period, M + 1, fam.period):
        h1, h2 = _h(m + 1, M), _h(m + 2, M)
        if fam is Family.I:
            A, B, C = x(m) * A + y(m) * B, C, A.mul_pauli(h2) * iu
            levels[m] = (A, B, C, None)
            continue
        if fam is Family.II:
            A, B, C, D = (
                (x(m) * x(m - 1)) * A + y(m - 1) * B + (x(m - 1) * y(m)) * C,
                A.mul_pauli(h1) * iu,
                (x(m - 1) * A + (x(m) * y(m - 1)) * B + (y(m - 1) * y(m)) * D).mul_pauli(h2) * iu,
                (x(m) * A + y(m) * C).mul_pauli(h1).mul_pauli(h2),
            )
        else:
            hm = _h(m, M)

            def kplus(op):
                return x(m) * op + (iu * y(m)) * op.mul_pauli(hm)

            def kminus(op):
                return (complex(u) * x(m)) * op - (1j * y(m)) * op.mul_pauli(hm)

            A, B, C, D = (
                kplus((x(m - 1) * x(m - 2)) * A) + y(m - 2) * B + (x(m - 2) * y(m - 1)) * C,
                (
                    (complex(u) * x(m - 2)) * A
                    + kminus((x(m - 1) * y(m - 2)) * B)
                    + (complex(u) * y(m - 2) * y(m - 1)) * D
                ).mul_pauli(h1) * 1j,
                (
                    (complex(u) * x(m - 1) * x(m - 2)) * A
                    + kminus(y(m - 2) * B + (x(m - 2) * y(m - 1)) * C)
                ).mul_pauli(h2) * 1j,
                (
                    kplus(x(m - 2) * A + (y(m - 1) * y(m - 2)) * D)
                    + (y(m - 2) * x(m - 1)) * B
                ).mul_pauli(h1).mul_pauli(h2),
            )
        levels[m] = (A, B, C, D)
    return levels


def build_abcd(spec: CircuitSpec, u: complex) -> tuple:
    """(A_M, B_M, C_M, D_M)(u); D is None for family I."""
    return build_abcd_levels(spec, u)[spec.M]


def transfer_matrix(spec: CircuitSpec, u: complex) -> DenseOp:
    return build_abcd(spec, u)[0]


# ---------------------------------------------------------------------------
# Identities of the transfer-matrix algebra
# ---------------------------------------------------------------------------


def verify_commuting_family(spec: CircuitSpec, u: complex, v: complex, tol: float = 1e-10) -> OracleReport:
    """Exchange relations between the families at spectral parameters u and v."""
    Au, Bu, Cu, Du = build_abcd(spec, u)
    Av, Bv, Cv, Dv = build_abcd(spec, v)
    scale = max(op.norm() for op in (Au, Bu, Cu, Av, Bv, Cv)) ** 2
    rep = OracleReport(f"commuting family {spec.family} M={spec.M}", tol)
    rep.add("[A(u),A(v)]", _rel(commutator(Au, Av), scale))
    rep.add("[B(u),B(v)]", _rel(commutator(Bu, Bv), scale))
    rep.add("[C(u),C(v)]", _rel(commutator(Cu, Cv), scale))
    rep.add("[A,B] sym", _rel(commutator(Au, Bv) + commutator(Bu, Av), scale))
    rep.add("[A,C] sym", _rel(commutator(Au, Cv) + commutator(Cu, Av), scale))
    rep.add("[B,C] sym", _rel(commutator(Bu, Cv) + commutator(Cu, Bv), scale))
    rep.add("u{A,B}-v{B,A}", _rel(u * anticommutator(Au, Bv) - v * anticommutator(Bu, Av), scale))
    rep.add("u{A,C}-v{C,A}", _rel(u * anticommutator(Au, Cv) - v * anticommutator(Cu, Av), scale))
    if Du is not None:
        scale = max(scale, Du.norm() ** 2, Dv.norm() ** 2)
        rep.add("[D(u),D(v)]", _rel(commutator(Du, Dv), scale))
        rep.add("{A,D} sym", _rel(anticommutator(Au, Dv) - anticommutator(Du, Av), scale))
    return rep


def verify_scalar_products(spec: CircuitSpec, u: complex, tol: float = 1e-10) -> OracleReport:
    """X(u) X(-u) against identity times the scalar chain, for X = A, B, C, D."""
    plus, minus = build_abcd(spec, u), build_abcd(spec, -u)
    polys = scalar_chain(spec.family, spec.phases).at()
    rep = OracleReport(f"scalar products {spec.family} M={spec.M}", tol)
    for name, P, Q, poly in zip("ABCD", plus, minus, polys):
        if P is None:
            continue
        prod = P @ Q
        c, off = scalar_residual(prod)
        scale = max(1.0, P.norm() * Q.norm())
        rep.add(f"{name}(u){name}(-u) off-identity", off / scale)
        rep.add(f"{name}(u){name}(-u) vs scalar", abs(c - poly(u)) / scale)
    return rep


def verify_hermiticity(spec: CircuitSpec, u: float, tol: float = 1e-12) -> OracleReport:
    """A(iu) is Hermitian for real u and V is unitary."""
    A = transfer_matrix(spec, 1j * u)
    V = build_floquet(spec)
    rep = OracleReport(f"hermiticity {spec.family} M={spec.M}", tol * max(1.0, A.norm()))
    rep.add("A(iu)-A(iu)^dag", (A - A.dagger()).norm())
    rep.add("VV^dag-1", (V @ V.dagger() - 1.0).norm())
    rep.add("A(1)-V", (transfer_matrix(spec, 1.0) - V).norm())
    return rep


# ---------------------------------------------------------------------------
# Exact algebra of generators and gates
# ---------------------------------------------------------------------------


def verify_pauli_algebra(M: int) -> OracleReport:
    """Relations of the generators; residuals count violated relations."""
    rep = OracleReport(f"generator algebra M={M}", 0.5)
    hs = [make_h(m, M) for m in range(1, M + 1)]
    ident = PauliString.identity(M)
    rep.add("h^2=1", sum((h * h) != ident for h in hs))
    anti, comm = 0, 0
    for (i, a), (j, b) in itertools.combinations(enumerate(hs), 2):
        if j - i <= 2:
            anti += a.commutes(b)
        else:
            comm += not a.commutes(b)
    rep.add("{h_m,h_l}=0 for |m-l|<=2", anti)
    rep.add("[h_m,h_l]=0 for |m-l|>2", comm)
    return rep


def verify_gate_algebra(spec: CircuitSpec, tol: float = 1e-12) -> OracleReport:
    """g_m^2 = x_m + i y_m h_m and g_m h_{m+-a} g_m = h_{m+-a}."""
    M = spec.M
    rep = OracleReport(f"gate algebra {spec.family} M={M}", tol)
    for m in range(1, M + 1):
        g = make_gate(m, spec.phases[m - 1], M)
        h = OperatorSum.from_pauli(make_h(m, M))
        rep.add("g^2", (g * g - (h * (1j * spec.y(m)) + spec.x(m))).norm1())
        for a in (-2, -1, 1, 2):
            if 1 <= m + a <= M:
                ha = OperatorSum.from_pauli(make_h(m + a, M))
                rep.add("g h g", (g * ha * g - ha).norm1())
    return rep


# ---------------------------------------------------------------------------
# Conserved charges
# ---------------------------------------------------------------------------


def build_charge(spec: CircuitSpec) -> OperatorSum:
    """
    First conserved charge H = -i A_M'(0) / A_M(0) in closed form.

    >>> H = build_charge(CircuitSpec.homogeneous("I", 3, 0.0))
    >>> H.is_zero()
    True
    """
    M, x, y = spec.M, spec.x, spec.y
    H = OperatorSum.zero(M)
    if spec.family is Family.I:
        for m in range(1, M + 1):
            H = H + OperatorSum.from_pauli(make_h(m, M), y(m) / (x(m - 2) * x(m - 1) * x(m)))
        return H
    if spec.family is Family.II:
        for m in range(1, M + 1):
            if m % 2 == 0:
                b = y(m) / (x(m - 2) * x(m))
            else:
                b = y(m) / (x(m - 2) * x(m - 1) * x(m) * x(m + 1))
            H = H + OperatorSum.from_pauli(make_h(m, M), b)
        for m in range(1, M - 2, 2):
            b = y(m) * y(m + 1) * y(m + 3) / (x(m - 2) * x(m) * x(m + 1) * x(m + 3))
            word = make_h(m, M) * make_h(m + 1, M) * make_h(m + 3, M)
            H = H + OperatorSum.from_pauli(word, b)
        return H
    raise ValueError("family III has no local first charge", spec.family)


def verify_charge(spec: CircuitSpec, tol: float = 1e-10) -> OracleReport:
    H = build_charge(spec)
    Hd = DenseOp.from_sum(H)
    V = build_floquet(spec)
    rep = OracleReport(f"charge {spec.family} M={spec.M}", tol)
    rep.add("[H,V]", _rel(commutator(Hd, V), Hd.norm()))
    rep.add("H-H^dag", _rel(Hd - Hd.dagger(), Hd.norm()))
    return rep


# ---------------------------------------------------------------------------
# Fermionic modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FermionModes:
    """
    Dense Psi_s for s = +-1..+-S, the boundary operator and, for family III,
    the zero-mode charge Q = c_0 Psi_0 together with Psi_0.
    """

    spec: CircuitSpec
    spectral: SpectralData
    chi: DenseOp
    modes: dict[int, DenseOp]
    zero: DenseOp | None = None
    charge_q: DenseOp | None = None

    def occupation(self, k: int) -> DenseOp:
        """[Psi_k, Psi_{-k}]."""
        return commutator(self.modes[k], self.modes[-k])


def zero_mode_charge(spec: CircuitSpec, spectral: SpectralData) -> DenseOp:
    """
    Q = lim_{u -> inf} (chi + A(iu) chi A(-iu) / calA_M(iu)) / 2.

    A(u) has degree S in u, so only its top coefficient A_S survives the
    limit: Q = (chi + (-1)^S A_S chi A_S / p_S) / 2, with p_S the leading
    coefficient of calA_M. A_S is read off by a discrete Fourier transform
    of A on S + 2 points of the unit circle.
    """
    if spec.family is not Family.III:
        raise ValueError("the zero mode exists for family III only", spec.family)
    S = spectral.S
    n = S + 2
    top = DenseOp(spec.M, {})
    for z in np.exp(2j * np.pi * np.arange(n) / n):
        top = top + transfer_matrix(spec, z) * complex(z**-S / n)
    chi = DenseOp.from_pauli(make_chi(spec.family, spec.M))
    lead = float(spectral.calA.coefficient(S))
    return (chi + (top @ chi @ top) * ((-1) ** S / lead)) * 0.5


def build_fermions(spec: CircuitSpec, spectral: SpectralData | None = None) -> FermionModes:
    """Psi_{+-k} = A(+-iu_k) chi A(-+iu_k) / N_k, and Psi_0 = Q / c_0 from the large-u limit."""
    config.check_dense(spec.M)
    if spectral is None:
        spectral = solve_spectrum(spec)
    chi = DenseOp.from_pauli(make_chi(spec.family, spec.M))
    modes: dict[int, DenseOp] = {}
    for k in range(1, spectral.S + 1):
        u = spectral.root(k)
        Ap, Am = transfer_matrix(spec, 1j * u), transfer_matrix(spec, -1j * u)
        inv = 1 / spectral.norm(k)
        modes[k] = (Ap @ chi @ Am) * inv
        modes[-k] = (Am @ chi @ Ap) * inv
    zero = charge_q = None
    if spec.family is Family.III and spectral.c0 is not None:
        charge_q = zero_mode_charge(spec, spectral)
        if spectral.c0 > 1e-12:
            zero = charge_q * (1 / spectral.c0)
    return FermionModes(spec, spectral, chi, modes, zero, charge_q)


def verify_canonical(fm: FermionModes, tol: float = 1e-8) -> OracleReport:
    """{Psi_k, Psi_l} = delta_{k+l,0}; Psi_0 anticommutes with every Psi_s."""
    rep = OracleReport(f"canonical relations {fm.spec.family} M={fm.spec.M}", tol)
    for k, l in itertools.combinations_with_replacement(sorted(fm.modes), 2):
        ac = anticommutator(fm.modes[k], fm.modes[l])
        rep.add("{Psi_k,Psi_l}", (ac - (1.0 if k + l == 0 else 0.0)).norm())
    if fm.zero is not None:
        for psi in fm.modes.values():
            rep.add("{Psi_0,Psi_s}", anticommutator(fm.zero, psi).norm())
    return rep


def verify_mode_shift(fm: FermionModes, us, tol: float = 1e-8) -> OracleReport:
    """(iu_s - u) A(u) Psi_s = (iu_s + u) Psi_s A(u)."""
    rep = OracleReport(f"mode shift {fm.spec.family} M={fm.spec.M}", tol)
    for u in us:
        A = transfer_matrix(fm.spec, u)
        for s, psi in fm.modes.items():
            r = 1j * fm.spectral.root(s)
            lhs = (A @ psi) * (r - u) - (psi @ A) * (r + u)
            rep.add("mode shift", _rel(lhs, A.norm() * abs(r + u)))
    return rep


def verify_zero_mode(fm: FermionModes, vs, tol: float = 1e-8) -> OracleReport:
    """Q^2 = c_0^2, [Q, V] = 0, Psi_0^2 = 1, Psi_0 Hermitian, [Psi_0, A(v)] = 0."""
    rep = OracleReport(f"zero mode {fm.spec.family} M={fm.spec.M}", tol)
    if fm.zero is None or fm.charge_q is None:
        raise ValueError("no zero mode for this instance", fm.spec.family)
    q, z = fm.charge_q, fm.zero
    rep.add("Q^2-c0^2", (q @ q - fm.spectral.c0**2).norm())
    rep.add("[Q,V]", commutator(q, build_floquet(fm.spec)).norm())
    rep.add("Psi_0^2-1", (z @ z - 1.0).norm())
    rep.add("Psi_0-Psi_0^dag", (z - z.dagger()).norm())
    for v in vs:
        A = transfer_matrix(fm.spec, v)
        rep.add("[Psi_0,A(v)]", _rel(commutator(z, A), A.norm()))
    return rep


def verify_completeness(fm: FermionModes, tol: float = 1e-8) -> OracleReport:
    """
    c_s against the projection 2 tr(Psi_{-s} chi) / 2^M, the weight left
    for the zero mode against c_0, and chi = sum_s c_s Psi_s + Q with Q
    taken from the large-u limit.
    """
    if fm.spectral.coefficients is None or fm.charge_q is None:
        raise ValueError("completeness needs expansion coefficients (family III)", fm.spec.family)
    rep = OracleReport(f"completeness {fm.spec.family} M={fm.spec.M}", tol)
    rest = fm.chi
    for s, psi in fm.modes.items():
        proj = 2 * (fm.modes[-s] @ fm.chi).scalar_part()
        rep.add("c_s vs projection", abs(proj - fm.spectral.coefficient(s)))
        rest = rest - psi * proj
    rep.add("zero-mode weight vs c_0", abs(rest.norm() - fm.spectral.c0))
    total = fm.charge_q
    for s, psi in fm.modes.items():
        total = total + psi * fm.spectral.coefficient(s)
    rep.add("chi - Q - sum c_s Psi_s", (fm.chi - total).norm())
    return rep


def _match_phases(expected: np.ndarray, actual: np.ndarray) -> float:
    """Greedy nearest-neighbour matching of two eigenvalue multisets."""
    left = np.array(actual, dtype=complex)
    used = np.zeros(len(left), dtype=bool)
    worst = 0.0
    for e in expected:
        d = np.abs(left - e)
        d[used] = np.inf
        j = int(np.argmin(d))
        used[j] = True
        worst = max(worst, float(d[j]))
    return worst


def verify_diagonal_form(fm: FermionModes, us, tol: float = 1e-8) -> OracleReport:
    """
    A(u) = sgn(prod x) prod_k (u_k - iu [Psi_k, Psi_{-k}]) / sqrt(1 + u_k^2)
    at the given u, and the eigenvalues of V against sgn(prod x) exp(-i sum_k sigma_k eps_k).
    """
    spec, data = fm.spec, fm.spectral
    rep = OracleReport(f"diagonal form {spec.family} M={spec.M}", tol)
    occ = {k: fm.occupation(k) for k in range(1, data.S + 1)}
    for u in list(us) + [1.0]:
        prod = DenseOp.identity(spec.M, spec.sign)
        for k, n in occ.items():
            uk = data.root(k)
            prod = prod @ ((n * (-1j * u) + uk) * (1 / np.sqrt(1 + uk**2)))
        A = transfer_matrix(spec, u)
        rep.add("product form", _rel(A - prod, A.norm()))
    evals = np.linalg.eigvals(build_floquet(spec).matrix)
    eps = data.pseudoenergies
    sigmas = np.array(list(itertools.product((1, -1), repeat=data.S)))
    levels = spec.sign * np.exp(-1j * sigmas @ eps)
    expected = np.repeat(levels, 2 ** (spec.M - data.S))
    rep.add("spectrum", _match_phases(expected, evals))
    return rep


def verify_boundary_identities(spec: CircuitSpec, u: complex, v: complex, tol: float = 1e-9) -> OracleReport:
    """
    With Psi(v) = A(v) chi A(-v):

    - u {A(u), Psi(v)} - v [A(u), Psi(v)] = 2 calA_M(v) R(u) chi, R family dependent
    - {chi, Psi(v)} = scalar from calA_M(v) and the auxiliary polynomial
    """
    M, fam, x, y = spec.M, spec.family, spec.x, spec.y
    lu = build_abcd_levels(spec, u)
    Au = lu[M][0]
    Av, Amv = transfer_matrix(spec, v), transfer_matrix(spec, -v)
    chi = DenseOp.from_pauli(make_chi(fam, M))
    psi = Av @ chi @ Amv
    chain = scalar_chain(fam, spec.phases)
    calA_v, aux_v = chain.calA()(v), chain.aux()(v)
    if fam is Family.I:
        R = (u * x(M)) * lu[M - 1][0] + (v * y(M)) * lu[M - 1][1]
        anti = 2 * (-calA_v + 2 * x(M) ** 2 * aux_v)
    elif fam is Family.II:
        R = v * Au + ((u - v) * x(M - 1) * x(M)) * lu[M - 2][0]
        anti = -2 * calA_v + (2 * x(M) * x(M - 1)) ** 2 * aux_v
    else:
        a = x(M - 2) * x(M - 1) * y(M)
        R = u * Au + (1j * (v - u) * a * u) * lu[M - 3][0].mul_pauli(_h(M, M))
        anti = 2 * calA_v - (2 * v * a) ** 2 * aux_v
    rhs = (R @ chi) * (2 * calA_v)
    lhs = anticommutator(Au, psi) * u - commutator(Au, psi) * v
    scale = Au.norm() * psi.norm() * max(abs(u), abs(v), 1.0)
    rep = OracleReport(f"boundary identities {fam} M={M}", tol)
    rep.add("u{A,Psi}-v[A,Psi]", _rel(lhs - rhs, scale))
    rep.add("{chi,Psi}", _rel(anticommutator(chi, psi) - anti, max(1.0, psi.norm())))
    return rep


def run_suites(spec: CircuitSpec, seed: int = 0) -> list[OracleReport]:
    """Every oracle suite applicable to the instance, at seeded random (u, v)."""
    rng = np.random.default_rng(seed)

    def rand():
        return complex(rng.normal(), rng.normal()) * 0.7

    u, v = rand(), rand()
    reports = [
        verify_pauli_algebra(spec.M),
        verify_gate_algebra(spec),
        verify_commuting_family(spec, u, v),
        verify_scalar_products(spec, u),
        verify_hermiticity(spec, float(rng.uniform(0.2, 2.0))),
        verify_boundary_identities(spec, u, v),
    ]
    if spec.family is not Family.III:
        reports.append(verify_charge(spec))
    fm = build_fermions(spec)
    us = [rand() for _ in range(3)]
    reports += [verify_canonical(fm), verify_mode_shift(fm, us), verify_diagonal_form(fm, us)]
    if fm.spectral.coefficients is not None:
        reports.append(verify_completeness(fm))
        if fm.zero is not None:
            reports.append(verify_zero_mode(fm, us))
    for r in reports:
        logger.info("%s: max residual %.3g", r.name, r.max_residual)
    return reports
