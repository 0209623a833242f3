"""Command-line front end: witness generation/evaluation, outer-polytope
membership checks, inner-polytope certification, and reproduction of the
reference thresholds and certified values as CSV/JSON.

Exit codes: 0 success, 1 usage or domain error, 2 a detection fired
("state is not in the class"), 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from .certify import Certificate, CertifyConfig, certify, validate_certificate
from .outer import build_hull_problem, hull_member
from .partitions import DomainError, StructureClass
from .qstate import (
    DensityMatrix,
    LocalDims,
    PureState,
    make_state,
    maximally_mixed,
    mix,
    state_from_json,
    white_noise,
)
from .witness import HyperplaneWitness, default_pairs, evaluate, generate_witness, noise_threshold

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DETECTED = 2
EXIT_SOLVER = 3


def _parse_pairs(text: str):
    pairs = []
    for chunk in text.replace(";", " ").split():
        m, n = chunk.split(",")
        pairs.append((int(m), int(n)))
    return pairs


def _state_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--state", help="named family: ghz, w, dicke, cluster, cl5s, qutrit_w, ...")
    p.add_argument("--n", type=int, help="party count for the named family")
    p.add_argument("--k", type=int, help="excitations (Dicke)")
    p.add_argument("--t", type=float, default=None, help="white-noise mixing weight")
    p.add_argument("--file", help="state JSON file instead of a named family")


def _load_pure(args) -> PureState:
    if not args.state:
        raise DomainError("a named --state is required here")
    return make_state(args.state, n=args.n, k=args.k)


def _load_density(args) -> DensityMatrix:
    if args.file:
        with open(args.file) as fh:
            return state_from_json(json.load(fh))
    psi = _load_pure(args)
    return white_noise(psi, args.t if args.t is not None else 1.0)


def _emit(payload: dict, args) -> None:
    if not getattr(args, "no_meta", False):
        payload = dict(payload)
        payload["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    text = json.dumps(payload, indent=2, sort_keys=True)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _fmt_threshold(t) -> dict:
    if t is None:
        return {"threshold": None}
    if isinstance(t, Fraction):
        return {"threshold": float(t), "threshold_exact": f"{t.numerator}/{t.denominator}"}
    return {"threshold": float(t)}


def cmd_witness(args) -> int:
    psi = _load_pure(args)
    dims = psi.dims
    cls = StructureClass.parse(args.cls, dims.n)
    pairs = _parse_pairs(args.pairs) if args.pairs else default_pairs(psi)
    w = generate_witness(pairs, cls, dims, mode=args.mode)
    payload = w.to_json()
    if args.threshold:
        payload.update(_fmt_threshold(noise_threshold(w, psi, maximally_mixed(dims))))
    _emit(payload, args)
    return EXIT_OK


def cmd_witness_eval(args) -> int:
    with open(args.witness) as fh:
        w = HyperplaneWitness.from_json(json.load(fh))
    rho = _load_density(args)
    margin = evaluate(w, rho, real_part=args.real_part)
    _emit({"margin": margin, "detected": margin > args.tol}, args)
    return EXIT_DETECTED if margin > args.tol else EXIT_OK


def cmd_witness_threshold(args) -> int:
    with open(args.witness) as fh:
        w = HyperplaneWitness.from_json(json.load(fh))
    psi = _load_pure(args)
    noise = maximally_mixed(psi.dims)
    if args.noise_file:
        with open(args.noise_file) as fh:
            noise = state_from_json(json.load(fh))
    _emit(_fmt_threshold(noise_threshold(w, psi, noise)), args)
    return EXIT_OK


def cmd_outer(args) -> int:
    rho = _load_density(args)
    dims = rho.dims
    cls = StructureClass.parse(args.cls, dims.n)
    if args.pairs:
        pairs = _parse_pairs(args.pairs)
    else:
        psi = _load_pure(args)
        pairs = default_pairs(psi)
    problem = build_hull_problem(pairs, cls, dims, rho)
    member, cert = hull_member(problem, tol=args.tol)
    _emit({"member": member, "certificate": cert}, args)
    return EXIT_OK if member else EXIT_DETECTED


def cmd_certify(args) -> int:
    rho = _load_density(args)
    dims = rho.dims
    cls = StructureClass.parse(args.cls, dims.n)
    sigma = None
    if args.sigma_file:
        with open(args.sigma_file) as fh:
            sigma = state_from_json(json.load(fh))
    config = CertifyConfig(
        rng_seed=args.seed,
        restarts=args.restarts,
        max_outer_iters=args.outer_iters,
        descent_steps=args.descent_steps,
    )
    try:
        cert = certify(rho, sigma, cls, config)
    except RuntimeError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(cert.to_json(), args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# reproduce


def _witness_threshold_row(family, n, k, cls_spec, pairs, mode, paper_value):
    psi = make_state(family, n=n, k=k)
    dims = psi.dims
    cls = StructureClass.parse(cls_spec, dims.n)
    w = generate_witness(pairs or default_pairs(psi), cls, dims, mode=mode)
    t = noise_threshold(w, psi, maximally_mixed(dims))
    ours = float(t) if t is not None else math.nan
    ok = abs(ours - paper_value) <= 1e-3
    exact = f"{t.numerator}/{t.denominator}" if isinstance(t, Fraction) else ""
    return [f"{family}({n})", cls_spec, f"{ours:.6f}", exact, f"{paper_value:.6f}",
            "pass" if ok else "fail"]


_T1 = [("ghz", 4, None, 0.1111), ("w", 4, None, 0.0926), ("cluster", 4, None, 0.1111),
       ("dicke", 4, 2, 0.085708), ("ghz", 5, None, 0.05882), ("w", 5, None, 0.047084),
       ("cluster", 5, None, 0.05882), ("ghz", 6, None, 0.030303), ("w", 6, None, 0.02345),
       ("cluster", 6, None, 0.030303)]
_T2 = [("w", 4, "part:3", 0.247), ("w", 4, "prod:2", 0.247), ("w", 4, "part:2", 0.4705)]
_T3 = [("ghz", 4, "part:3", 0.19997), ("ghz", 4, "prod:2", 0.27251), ("ghz", 4, "part:2", 0.46456)]
_T4 = [("ghz", 5, "part:4", 0.09434), ("ghz", 5, "prod:2", 0.2375), ("ghz", 5, "part:3", 0.2377),
       ("ghz", 5, "prod:3", 0.3846), ("ghz", 5, "part:2", 0.48378)]


def _certify_row(family, n, k, cls_spec, paper_value, seed, sigma=None, quality=0.95):
    psi = make_state(family, n=n, k=k)
    rho = psi.projector()
    dims = rho.dims
    cls = StructureClass.parse(cls_spec, dims.n)
    cert = certify(rho, sigma, cls, CertifyConfig(rng_seed=seed, restarts=1))
    ok = cert.t_lower >= quality * paper_value
    return [f"{family}({n})", cls_spec, f"{cert.t_lower:.6f}", "", f"{paper_value:.6f}",
            "pass" if ok else "fail"]


def cmd_reproduce(args) -> int:
    rows = [["state", "class", "our_value", "exact", "paper_value", "status"]]
    which = args.which
    if which == "example1":
        psi = make_state("w", 4)
        pairs = default_pairs(psi)
        for cls_spec, val in [("fullsep", 0.2), ("prod:2", 7 / 23), ("prod:3", 9 / 17)]:
            rows.append(_witness_threshold_row("w", 4, None, cls_spec, pairs, "sum", val))
    elif which == "example2":
        psi = make_state("qutrit_w")
        pairs = default_pairs(psi, cap=32)
        dims = psi.dims
        w = generate_witness(pairs, StructureClass.parse("prod:2", 4), dims)
        t = noise_threshold(w, psi, maximally_mixed(dims))
        ours = float(t)
        rows.append(["qutrit_w(4)", "prod:2", f"{ours:.6f}",
                     f"{t.numerator}/{t.denominator}" if isinstance(t, Fraction) else "",
                     f"{14/95:.6f}", "reported"])
    elif which == "example3":
        for cls_spec, val in [("fullsep", 1 / 9), ("part:4", 5 / 29), ("part:3", 9 / 25),
                              ("part:2", 13 / 29)]:
            rows.append(_witness_threshold_row("cl5s", 5, None, cls_spec, None, "sum", val))
    elif which == "example4":
        for cls_spec, val in [("prod:1", 1 / 33), ("prod:2", 5 / 37), ("prod:3", 15 / 47),
                              ("prod:4", 25 / 57), ("prod:5", 31 / 63)]:
            rows.append(_witness_threshold_row("ghz", 6, None, cls_spec, [(1, 64)], "sum", val))
    elif which == "table1":
        for family, n, k, val in _T1:
            rows.append(_certify_row(family, n, k, "fullsep", val, args.seed))
    elif which in ("table2", "table3", "table4"):
        table = {"table2": _T2, "table3": _T3, "table4": _T4}[which]
        for family, n, cls_spec, val in table:
            rows.append(_certify_row(family, n, None, cls_spec, val, args.seed))
    elif which == "mixednoise":
        sigma = _mixed_noise_sigma()
        for cls_spec, val in [("fullsep", 0.1468), ("part:2", 0.58)]:
            rows.append(_certify_row("w", 4, None, cls_spec, val, args.seed, sigma=sigma))
    else:
        raise DomainError(f"unknown reproduce selector {which!r}")
    writer = csv.writer(open(args.out, "w", newline="") if args.out else sys.stdout)
    writer.writerows(rows)
    return EXIT_OK


def _mixed_noise_sigma() -> DensityMatrix:
    tau = np.diag([0.75, 0.25]).astype(complex)
    sigma = tau
    for _ in range(3):
        sigma = np.kron(sigma, tau)
    return DensityMatrix(LocalDims.qubits(4), sigma)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entstruct",
                                     description="entanglement structure criteria")
    sub = parser.add_subparsers(dest="command", required=True)

    w = sub.add_parser("witness", help="hyperplane witnesses")
    wsub = w.add_subparsers(dest="witness_command", required=True)

    gen = wsub.add_parser("gen", help="generate a witness")
    _state_args(gen)
    gen.add_argument("--class", dest="cls", required=True,
                     help="prod:k | part:k | str:k | fullsep")
    gen.add_argument("--pairs", help="semicolon-separated m,n pairs (1-based)")
    gen.add_argument("--mode", choices=["sum", "fixed_rhs"], default="sum")
    gen.add_argument("--threshold", action="store_true",
                     help="also report the white-noise threshold")
    _output_args(gen)
    gen.set_defaults(func=cmd_witness)

    ev = wsub.add_parser("eval", help="evaluate a witness on a state")
    _state_args(ev)
    ev.add_argument("--witness", required=True)
    ev.add_argument("--real-part", action="store_true", dest="real_part",
                    help="use the measurable lower bound (rho_mn + rho_nm)/2")
    ev.add_argument("--tol", type=float, default=1e-12)
    _output_args(ev)
    ev.set_defaults(func=cmd_witness_eval)

    th = wsub.add_parser("threshold", help="noise threshold of a witness")
    _state_args(th)
    th.add_argument("--witness", required=True)
    th.add_argument("--noise-file", dest="noise_file")
    _output_args(th)
    th.set_defaults(func=cmd_witness_threshold)

    outer = sub.add_parser("outer", help="outer-polytope membership")
    osub = outer.add_subparsers(dest="outer_command", required=True)
    check = osub.add_parser("check")
    _state_args(check)
    check.add_argument("--class", dest="cls", required=True)
    check.add_argument("--pairs")
    check.add_argument("--tol", type=float, default=1e-9)
    _output_args(check)
    check.set_defaults(func=cmd_outer)

    cert = sub.add_parser("certify", help="inner-polytope certification")
    _state_args(cert)
    cert.add_argument("--class", dest="cls", required=True)
    cert.add_argument("--seed", type=int, default=0)
    cert.add_argument("--restarts", type=int, default=5)
    cert.add_argument("--outer-iters", type=int, default=3, dest="outer_iters")
    cert.add_argument("--descent-steps", type=int, default=600, dest="descent_steps")
    cert.add_argument("--sigma-file", dest="sigma_file",
                      help="JSON density matrix used instead of white noise")
    _output_args(cert)
    cert.set_defaults(func=cmd_certify)

    rep = sub.add_parser("reproduce", help="reproduce reference values as CSV")
    rep.add_argument("which", choices=["table1", "table2", "table3", "table4",
                                       "example1", "example2", "example3", "example4",
                                       "mixednoise"])
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_reproduce)
    return parser


def _output_args(p) -> None:
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--no-meta", action="store_true", dest="no_meta",
                   help="suppress the timestamp for byte-identical reruns")


def main(argv=None) -> int:
    if "ENTSTRUCT_SOLVER_TOL" in os.environ:
        from . import solver

        tol = float(os.environ["ENTSTRUCT_SOLVER_TOL"])
        solver.DEFAULT_LP_TOL = tol
        solver.DEFAULT_SDP_TOL = tol
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (DomainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
