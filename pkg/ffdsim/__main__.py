"""
Command line front end.

    python -m ffdsim verify   --family III --M 6 --seed 7
    python -m ffdsim spectrum --family I --M 150 --homogeneous 1 --out spec.json
    python -m ffdsim evolve   --family III --M 150 --homogeneous 1 --theta 0.39269908169872414 --t-max 70

Every failure prints a single line ``ERROR <code>: <detail>`` to stderr and
exits with status 2 for argument errors and 1 otherwise.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

import ffdsim.config as config
from ffdsim.circuit import CircuitSpec
from ffdsim.dynamics import (
    ConsistencyError,
    QuenchConfig,
    atomic_write,
    evolve_chi,
    exact_evolution_reference,
)
from ffdsim.oracle import OracleReport, run_suites
from ffdsim.pauli import Family
from ffdsim.spectrum import DegeneracyError, SpectralStructureError, solve_spectrum

logger = logging.getLogger("ffdsim")

EXACT_CHECK_TOL = 1e-8

# most specific first
ERROR_CODES: list[tuple[type[BaseException], str, int]] = [
    (config.ResourceError, "RESOURCE", 1),
    (DegeneracyError, "DEGENERACY", 1),
    (SpectralStructureError, "SPECTRAL", 1),
    (ConsistencyError, "CONSISTENCY", 1),
    (ValueError, "ARGUMENT", 2),
    (OSError, "IO", 1),
    (Exception, "INTERNAL", 1),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValueError(message)


def _phase_list(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValueError("phases must be a comma separated list of floats", text)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--family", required=True, choices=[f.value for f in Family])
    common.add_argument("--M", type=int, required=True, dest="M")
    common.add_argument("--phases", type=_phase_list, default=None)
    common.add_argument("--homogeneous", type=float, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--precision", choices=["standard", "extended"], default="standard")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = _Parser(prog="ffdsim", description="Free fermions in disguise circuit simulation")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the dense oracle suites (M <= 12)")
    sp = sub.add_parser("spectrum", parents=[common], help="solve for roots, pseudoenergies and normalizations")
    sp.add_argument("--out", default=None)
    ev = sub.add_parser("evolve", parents=[common], help="boundary operator quench (family III)")
    ev.add_argument("--theta", type=float, default=np.pi / 8)
    ev.add_argument("--t-max", type=int, default=70, dest="t_max")
    ev.add_argument("--out", default=None)
    ev.add_argument("--format", choices=["csv", "json"], default="csv")
    ev.add_argument("--exact-check", action="store_true")
    return parser


def spec_from_args(args: argparse.Namespace) -> CircuitSpec:
    """Explicit phases take precedence over --homogeneous, which takes precedence over --seed."""
    given = [k for k in ("phases", "homogeneous", "seed") if getattr(args, k) is not None]
    if not given:
        raise ValueError("phases: one of --phases, --homogeneous, --seed is required")
    if len(given) > 1:
        logger.warning("several phase options given (%s); using --%s", ", ".join(given), given[0])
    if args.phases is not None:
        if len(args.phases) != args.M:
            raise ValueError(f"phases: expected {args.M} values, got {len(args.phases)}")
        return CircuitSpec(Family(args.family), tuple(args.phases))
    if args.homogeneous is not None:
        return CircuitSpec.homogeneous(args.family, args.M, args.homogeneous)
    return CircuitSpec.random(args.family, args.M, args.seed)


def _closed_form_report(spec: CircuitSpec) -> OracleReport:
    """Family I with one site has the single root u_1 = cot(phi_1)."""
    rep = OracleReport("closed-form root I M=1", 1e-10)
    root = solve_spectrum(spec).roots[0]
    rep.add("u_1 - cot(phi_1)", abs(root - spec.x(1) / spec.y(1)))
    return rep


def cmd_verify(args) -> int:
    spec = spec_from_args(args)
    config.check_dense(spec.M)
    reports = run_suites(spec, seed=0 if args.seed is None else args.seed)
    if spec.family is Family.I and spec.M == 1:
        reports.append(_closed_form_report(spec))
    for r in reports:
        print(r)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        raise ConsistencyError(f"{len(failed)} suite(s) failed: {'; '.join(failed)}")
    return 0


def cmd_spectrum(args) -> int:
    spec = spec_from_args(args)
    data = solve_spectrum(spec, args.precision)
    print(f"family {spec.family}  M={spec.M}  S={data.S}  precision={data.precision}")
    print(f"calA(1) - 1 = {data.normalization_error:.3g}")
    for k, (u, eps) in enumerate(zip(data.roots, data.pseudoenergies), start=1):
        print(f"  k={k:<4d} u_k={u:.12g}  eps_k={eps:.12g}")
    if args.out:
        atomic_write(args.out, data.to_json() + "\n")
    return 0


def cmd_evolve(args) -> int:
    spec = spec_from_args(args)
    if args.t_max < 0:
        raise ValueError("t-max: must be nonnegative", args.t_max)
    cfg = QuenchConfig.tilted(spec, args.theta, args.t_max)
    data = solve_spectrum(spec, args.precision)
    series = evolve_chi(cfg, data)
    if args.out is None:
        sys.stdout.write(series.csv_text())
    elif args.format == "csv":
        series.to_csv(args.out)
    else:
        series.to_json(args.out, data)
    if args.exact_check:
        ref = exact_evolution_reference(cfg)
        dev = float(np.max(np.abs(series.values - ref.values)))
        print(f"max deviation from exact evolution: {dev:.3g}", file=sys.stderr)
        if dev > EXACT_CHECK_TOL:
            raise ConsistencyError(f"exact-check deviation {dev:.3g} exceeds {EXACT_CHECK_TOL:g}")
    return 0


COMMANDS = {"verify": cmd_verify, "spectrum": cmd_spectrum, "evolve": cmd_evolve}


def _detail(e: BaseException) -> str:
    if e.args and isinstance(e.args[0], str):
        text = e.args[0] + "".join(f" ({a!r})" for a in e.args[1:])
    else:
        text = str(e) or type(e).__name__
    return " ".join(text.split())


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return COMMANDS[args.command](args)
    except Exception as e:
        _, code, status = next(entry for entry in ERROR_CODES if isinstance(e, entry[0]))
        logger.debug("%s failure", code, exc_info=True)
        print(f"ERROR {code}: {_detail(e)}", file=sys.stderr)
        return status


if __name__ == "__main__":
    sys.exit(main())
