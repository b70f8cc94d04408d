"""Command-line surface: single-shot computations on JSON instances and the
seeded fuzz harness. Every invocation prints exactly one JSON document.

Exit codes: 0 determinate true / success, 1 determinate false or a domain
error, 2 indeterminate, 3 malformed input.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import BaseModel, ValidationError

from config import Config
from services.bundle import pi_trivialize, split_frame, trivialize_phi, trivialize_phi_inv
from services.delta import common_complement, delta_neighborhood_check, in_delta
from services.errors import ComplementKitError, DimensionMismatch, InvalidInput, OutsideChartDomain
from services.fuzz_service import SUITES, FuzzConfig, FuzzService
from services.grassmann import GraphCoordinate, buckholtz_report, graph_chart, graph_chart_inv, perp
from services.ledger_service import LedgerService
from services.serialization import (
    CertificateModel,
    CMatrixModel,
    FramePointModel,
    PairModel,
    PiTrivializationModel,
    SubspaceModel,
    TrivializationModel,
    dumps,
)
from services.substrate import Tolerances, TriState, gap_distance, op_norm

logger = logging.getLogger(__name__)

EXIT_TRUE, EXIT_FALSE, EXIT_INDETERMINATE, EXIT_INPUT = 0, 1, 2, 3

_EXIT_FOR_VERDICT = {
    TriState.TRUE: EXIT_TRUE,
    TriState.FALSE: EXIT_FALSE,
    TriState.INDETERMINATE: EXIT_INDETERMINATE,
}


class _JsonArgumentParser(argparse.ArgumentParser):
    """Usage errors become InvalidInput so they reach the JSON error path."""

    def error(self, message):
        raise InvalidInput(f"{self.prog}: {message}")


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {value}")
    return value


def _dims(text: str) -> List[int]:
    try:
        return [int(d) for d in text.split(",") if d.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be comma-separated integers, got {text!r}")


class CheckInput(BaseModel):
    s: SubspaceModel
    z: SubspaceModel
    t: Optional[SubspaceModel] = None


class ChartInput(BaseModel):
    anchor: SubspaceModel
    subspace: Optional[SubspaceModel] = None
    x: Optional[CMatrixModel] = None


class TrivInput(BaseModel):
    z0: SubspaceModel
    frame: FramePointModel


def _read_payload(path: str) -> dict:
    if path == "-":
        return json.load(sys.stdin)
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _emit(payload, json_out: Optional[str]):
    text = dumps(payload)
    if json_out:
        with open(json_out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    print(text)


def _report_json(report) -> dict:
    return {
        "diff_invertible": report.diff_invertible.value,
        "norm_value": report.norm_value,
        "norm_lt_one": report.norm_lt_one.value,
        "direct_sum": report.direct_sum.value,
        "margin": report.margin,
        "consistent": report.consistent,
    }


def cmd_check(args, tol: Tolerances) -> int:
    data = CheckInput.model_validate(_read_payload(args.input))
    S, Z = data.s.to_domain(tol), data.z.to_domain(tol)
    report = buckholtz_report(S, Z, tol)
    result = {"buckholtz": _report_json(report)}
    verdict = TriState.all_of(*report.verdicts)
    if data.t is not None:
        T = data.t.to_domain(tol)
        result["in_delta"] = in_delta(S, T, tol).value
        neighborhood = delta_neighborhood_check(Z, S, T, tol)
        result["delta_neighborhood"] = neighborhood.value
        verdict = neighborhood
    result["verdict"] = verdict.value
    _emit(result, args.json_out)
    return _EXIT_FOR_VERDICT[verdict]


def cmd_complement(args, tol: Tolerances) -> int:
    pair = PairModel.model_validate(_read_payload(args.input)).to_domain(tol)
    cert = common_complement(pair.s, pair.t, tol, seed=args.seed,
                             retry_budget=Config.COMPLEMENT_RETRY_BUDGET,
                             min_residual=Config.COMPLEMENT_MIN_RESIDUAL)
    _emit(CertificateModel.from_certificate(cert), args.json_out)
    return EXIT_TRUE


def cmd_chart(args, tol: Tolerances) -> int:
    data = ChartInput.model_validate(_read_payload(args.input))
    if (data.subspace is None) == (data.x is None):
        raise InvalidInput("Chart input needs exactly one of 'subspace' and 'x'")
    Z = data.anchor.to_domain(tol)
    if data.subspace is not None:
        S = data.subspace.to_domain(tol)
        coord = graph_chart(Z, S, tol)
        back = graph_chart_inv(coord, tol)
        result = {"x": CMatrixModel.from_matrix(coord.matrix).model_dump(),
                  "round_trip_gap": gap_distance(back.projector, S.projector)}
    else:
        coord = GraphCoordinate(Z, data.x.to_domain())
        S = graph_chart_inv(coord, tol)
        X = graph_chart(Z, S, tol).matrix
        result = {"subspace": SubspaceModel.from_subspace(S).model_dump(),
                  "round_trip_residual": op_norm(X - coord.matrix)}
    _emit(result, args.json_out)
    return EXIT_TRUE


def cmd_triv(args, tol: Tolerances) -> int:
    data = TrivInput.model_validate(_read_payload(args.input))
    Z0 = data.z0.to_domain(tol)
    f = data.frame.to_domain(tol)
    frames = split_frame(perp(Z0, tol), "minus", tol)
    triv = trivialize_phi(Z0, frames, f, tol)
    back = trivialize_phi_inv(Z0, frames, triv.pair, triv.u, triv.a, triv.b, tol)
    result = {
        "coordinates": TrivializationModel.from_trivialization(triv).model_dump(),
        "round_trip": {
            "z_gap": gap_distance(back.z.projector, f.z.projector),
            "g_residual": op_norm(back.g.matrix - f.g.matrix),
            "k_residual": op_norm(back.k.matrix - f.k.matrix),
        },
    }
    try:
        pi = pi_trivialize(Z0, f, tol)
        result["pi_coordinates"] = PiTrivializationModel.from_pi_trivialization(pi).model_dump()
    except OutsideChartDomain as e:
        logger.info(f"[CLI] Frame base outside the pi-trivialization domain: {e}")
        result["pi_coordinates"] = None
    _emit(result, args.json_out)
    return EXIT_TRUE


def _fuzz_config(args, tol: Tolerances) -> FuzzConfig:
    dims = args.dims if args.dims is not None else Config.fuzz_dims()
    suites = [s.strip() for s in args.suites.split(",") if s.strip()] if args.suites else list(SUITES)
    return FuzzConfig(dims=dims, trials=args.trials if args.trials is not None else Config.FUZZ_TRIALS,
                      seed=args.seed, tolerances=tol, suites=suites,
                      workers=args.workers if args.workers is not None else Config.FUZZ_WORKERS)


def cmd_fuzz(args, tol: Tolerances) -> int:
    config = _fuzz_config(args, tol)
    report = FuzzService(config).run()
    if args.record:
        LedgerService(Config.DATABASE_URL).record(report)
    _emit(report, args.json_out)
    return EXIT_TRUE if report.total_failures == 0 else EXIT_FALSE


def cmd_replay(args, tol: Tolerances) -> int:
    config = FuzzConfig(dims=[args.dim], trials=1, seed=args.seed, tolerances=tol, suites=[args.suite])
    outcome = FuzzService(config).replay(args.suite, args.dim, args.trial)
    status = outcome.status
    _emit({"suite": args.suite, "dim": args.dim, "trial": args.trial, "seed": args.seed,
           "status": status, "residuals": outcome.residuals, "limits": outcome.limits,
           "flags": outcome.flags, "error": outcome.error}, args.json_out)
    return {"pass": EXIT_TRUE, "fail": EXIT_FALSE}.get(status, EXIT_INDETERMINATE)


def cmd_history(args, tol: Tolerances) -> int:
    _emit({"runs": LedgerService(Config.DATABASE_URL).history(args.limit)}, args.json_out)
    return EXIT_TRUE


def build_parser() -> argparse.ArgumentParser:
    common = _JsonArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=Config.FUZZ_SEED, help="Random seed")
    common.add_argument("--tol-eq", type=float, default=None, help="Equality tolerance (eq_atol)")
    common.add_argument("--tol-margin", type=float, default=None, help="Strict-inequality margin (margin_delta)")
    common.add_argument("--json-out", default=None, help="Also write the JSON result to this path")

    parser = _JsonArgumentParser(prog="complement-kit",
                                     description="Subspaces with a common complement: checks, charts and fuzzing")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, handler, help_text in (
            ("check", cmd_check, "Buckholtz report for a pair, optionally Δ^Z membership of (s, t)"),
            ("complement", cmd_complement, "Certified common complement of a pair"),
            ("chart", cmd_chart, "Graph chart of a subspace, or the subspace of a chart coordinate"),
            ("triv", cmd_triv, "Local trivialization of a frame and its round trip")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("input", help="JSON input file ('-' for stdin)")
        p.set_defaults(handler=handler)

    p = sub.add_parser("fuzz", parents=[common], help="Run the seeded property suites")
    p.add_argument("--dims", type=_dims, default=None, help="Comma-separated ambient dimensions")
    p.add_argument("--trials", type=int, default=None, help="Trials per suite and dimension")
    p.add_argument("--suites", default=None, help=f"Comma-separated subset of {','.join(SUITES)}")
    p.add_argument("--workers", type=int, default=None, help="Worker threads")
    p.add_argument("--record", action="store_true", help="Store the report in the run ledger")
    p.set_defaults(handler=cmd_fuzz)

    p = sub.add_parser("replay", parents=[common], help="Recompute one fuzz trial")
    p.add_argument("--suite", required=True, choices=SUITES)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--trial", type=int, required=True)
    p.set_defaults(handler=cmd_replay)

    p = sub.add_parser("history", parents=[common], help="List recorded fuzz runs")
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(handler=cmd_history)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        tol = Config.tolerances(eq_atol=args.tol_eq, margin_delta=args.tol_margin)
        return args.handler(args, tol)
    except (json.JSONDecodeError, ValidationError, InvalidInput, DimensionMismatch, OSError) as e:
        logger.error(f"[CLI] Malformed input: {e}")
        print(dumps({"error": type(e).__name__, "detail": str(e)}))
        return EXIT_INPUT
    except ComplementKitError as e:
        logger.error(f"[CLI] {args.command} failed: {e}")
        print(dumps({"error": type(e).__name__, "detail": str(e)}))
        return EXIT_FALSE


if __name__ == "__main__":
    sys.exit(main())
