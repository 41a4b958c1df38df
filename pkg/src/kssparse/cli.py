"""Command-line front end.

    kssparse sparsify  A.csv --epsilon 0.5
    kssparse constrain A.csv V.csv --epsilon 0.8
    kssparse john      --builtin simplex --dim 3 --epsilon 0.9
    kssparse check     A.csv D.json --epsilon 0.5

Reports are JSON on stdout (or ``--out``).  Exit codes: 0 success, 2 input
error, 3 hypothesis or feasibility failure.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from .constraints import HypothesisViolated, schur_witness, stack, theorem2_verify
from .io import FormatError, dumps, file_digest, read_decomposition, read_matrix, read_weights
from .john import JohnValidationError, canonical_john, john_sparsify, validate_john
from .sparsifier import InfeasibleError, theorem1_sparsify
from .spectral_core import STRICT, DiagonalReweighting, approx_membership, check_mode, operator_norm

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_HYPOTHESIS = 3


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Timer:
    def __init__(self):
        self.timings = {}

    def stage(self, name):
        timer = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.timings[name] = (time.perf_counter() - self.t0) * 1000.0

        return _Stage()


def _report(command, inputs, args, result, timer):
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    return {
        "command": command,
        "version": __version__,
        "inputs": inputs,
        "parameters": params,
        "result": result,
        "timings": timer.timings,
    }


def _load_matrix(path, name):
    try:
        return read_matrix(path)
    except FormatError as exc:
        raise CliError(EXIT_INPUT, f"{name}: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"{name}: {exc.strerror}: {path}") from None


def _load_weights(path, m):
    try:
        w = read_weights(path)
    except FormatError as exc:
        raise CliError(EXIT_INPUT, f"D: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"D: {exc.strerror}: {path}") from None
    if w.size != m:
        raise CliError(EXIT_INPUT, f"D has {w.size} weights, matrix has {m} columns")
    return w


def _sparsify_args(args):
    return dict(mode=args.mode, budget=args.budget, seed=args.seed,
                exhaustive_max=args.exhaustive_max, M=args.max_pieces, tol=args.tol)


def _write_d(args, D):
    if args.d_out:
        with open(args.d_out, "w", encoding="utf-8") as fh:
            fh.write(dumps({"weights": D.weights.tolist()}) + "\n")


def cmd_sparsify(args):
    timer = _Timer()
    with timer.stage("read"):
        A = _load_matrix(args.matrix, "matrix")
    if operator_norm(A) == 0.0:
        raise CliError(EXIT_INPUT, "matrix is zero")
    with timer.stage("sparsify"):
        try:
            res = theorem1_sparsify(A, args.epsilon, **_sparsify_args(args))
        except InfeasibleError as exc:
            raise CliError(EXIT_HYPOTHESIS, f"infeasible strict constants: {exc}") from None
    _write_d(args, res.D)
    report = _report("sparsify", {"matrix": file_digest(args.matrix)}, args, res.to_dict(), timer)
    code = EXIT_OK
    if args.mode == STRICT and not res.certificate.meets_epsilon:
        code = EXIT_HYPOTHESIS
    return report, code


def cmd_constrain(args):
    timer = _Timer()
    with timer.stage("read"):
        A = _load_matrix(args.matrix, "matrix")
        V = _load_matrix(args.constraints, "constraints")
    try:
        P = stack(A, V)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    inputs = {"matrix": file_digest(args.matrix), "constraints": file_digest(args.constraints)}
    sparsify_out = None
    with timer.stage("sparsify"):
        if args.reuse_d:
            D = DiagonalReweighting.from_weights(_load_weights(args.reuse_d, A.shape[1]))
            inputs["reuse_d"] = file_digest(args.reuse_d)
        else:
            try:
                res = theorem1_sparsify(P.B, args.epsilon, **_sparsify_args(args))
            except InfeasibleError as exc:
                raise CliError(EXIT_HYPOTHESIS, f"infeasible strict constants: {exc}") from None
            D = res.D
            sparsify_out = res.to_dict()
    with timer.stage("verify"):
        try:
            ver = theorem2_verify(P, D, args.epsilon, args.tol)
            K = schur_witness(P, D, args.epsilon, args.tol)
        except HypothesisViolated as exc:
            raise CliError(EXIT_HYPOTHESIS, str(exc)) from None
    lam_min = float(np.linalg.eigvalsh(K)[0])
    _write_d(args, D)
    result = {
        "verification": ver.to_dict(),
        "schur_lambda_min": lam_min,
        "schur_norm": operator_norm(K),
        "D": D.to_dict(),
        "sparsify": sparsify_out,
    }
    return _report("constrain", inputs, args, result, timer), EXIT_OK


def cmd_john(args):
    timer = _Timer()
    with timer.stage("read"):
        if args.builtin:
            if args.dim is None:
                raise CliError(EXIT_INPUT, "--builtin needs --dim")
            try:
                J = canonical_john(args.builtin, args.dim)
            except ValueError as exc:
                raise CliError(EXIT_INPUT, str(exc)) from None
            inputs = {"builtin": f"{args.builtin}:{args.dim}"}
        elif args.decomposition:
            try:
                X, c = read_decomposition(args.decomposition)
                J = validate_john(X, c, args.tol)
            except JohnValidationError as exc:
                raise CliError(EXIT_INPUT, str(exc)) from None
            except (FormatError, ValueError) as exc:
                raise CliError(EXIT_INPUT, f"decomposition: {exc}") from None
            except OSError as exc:
                raise CliError(EXIT_INPUT, f"decomposition: {exc.strerror}") from None
            inputs = {"decomposition": file_digest(args.decomposition)}
        else:
            raise CliError(EXIT_INPUT, "give a decomposition file or --builtin")
    with timer.stage("sparsify"):
        try:
            res = john_sparsify(J, args.epsilon, args.mode, args.budget, args.seed,
                                args.exhaustive_max, args.tol)
        except (InfeasibleError, HypothesisViolated) as exc:
            raise CliError(EXIT_HYPOTHESIS, str(exc)) from None
    _write_d(args, res.D)
    return _report("john", inputs, args, res.to_dict(), timer), EXIT_OK


def cmd_check(args):
    timer = _Timer()
    with timer.stage("read"):
        A = _load_matrix(args.matrix, "matrix")
        w = _load_weights(args.weights, A.shape[1])
    with timer.stage("check"):
        cert = approx_membership(A, w, args.epsilon, args.tol)
    inputs = {"matrix": file_digest(args.matrix), "weights": file_digest(args.weights)}
    return _report("check", inputs, args, cert.to_dict(), timer), EXIT_OK


def _positive(x):
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="kssparse", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, search=True):
        p.add_argument("--epsilon", type=_positive, required=True)
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--out", help="write the report here instead of stdout")
        if search:
            p.add_argument("--mode", type=check_mode, default="best_effort",
                           help="strict | best-effort (default)")
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--budget", type=int, default=20000)
            p.add_argument("--exhaustive-max", type=int, default=14)
            p.add_argument("--d-out", help="write the emitted D as {\"weights\": [...]}")

    p = sub.add_parser("sparsify", help="select a reweighted column multiset")
    p.add_argument("matrix")
    common(p)
    p.add_argument("--max-pieces", type=int, help="best-effort cap on the number of split pieces")
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("constrain", help="sparsify with linear constraints stacked under A")
    p.add_argument("matrix")
    p.add_argument("constraints", help="m x k matrix, one constraint per column")
    common(p)
    p.add_argument("--max-pieces", type=int)
    p.add_argument("--reuse-d", help="verify this D JSON instead of sparsifying")
    p.set_defaults(func=cmd_constrain)

    p = sub.add_parser("john", help="sparsify a John decomposition")
    p.add_argument("decomposition", nargs="?")
    p.add_argument("--builtin", choices=["cube", "simplex", "cross-polytope"])
    p.add_argument("--dim", type=int)
    common(p)
    p.set_defaults(func=cmd_john)

    p = sub.add_parser("check", help="certificate for a given D")
    p.add_argument("matrix")
    p.add_argument("weights", help='JSON {"weights": [...]}')
    common(p, search=False)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = args.func(args)
    except CliError as exc:
        print(f"kssparse {args.command}: {exc}", file=sys.stderr)
        return exc.code
    text = dumps(report) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
