"""
Command-line interface.

    phmin solve INPUT [--init KIND] [--multistart N] [--out PATH]
    phmin convert INPUT [--out PATH]
    phmin bench --n 3 4 [--count 50] [--variant balanced] [--seed 7]
    phmin verify INPUT REPORT

Exit codes: 0 representation found and verified, 2 not found (or failed
verification), 1 invalid input.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from phmin.discrete import to_continuous
from phmin.errors import InputError, PhminError
from phmin.pipeline import (
    EXIT_INVALID,
    EXIT_OK,
    am_configs,
    bench_instance,
    lst_to_dict,
    load_input,
    solve_gf,
    solve_lst,
    summarize_bench,
    verify_claim,
)
from shared.config import Config
from shared.models import AmConfig, GenSpec, InitKind, Variant
from shared.utils import create_report, get_logger, set_log_level, to_json

logger = get_logger(__name__)


class _Parser(argparse.ArgumentParser):
    """Usage errors are invalid input, exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def command_result(exit_code: int, report: Dict[str, Any]) -> Dict[str, Any]:
    """Standard handler result."""
    return {"exit_code": exit_code, "report": report}


def parse_init(value: str) -> Tuple[InitKind, Optional[List[List[float]]]]:
    """
    Resolve an --init value; ``file:PATH`` reads a JSON matrix.

    Raises:
        InputError: unknown kind or unreadable matrix file
    """
    if value.startswith("file:"):
        path = value[len("file:") :]
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read initial matrix: {exc.strerror}", path) from exc
        except json.JSONDecodeError as exc:
            raise InputError(exc.msg, path, exc.lineno) from exc
        matrix = raw.get("matrix") if isinstance(raw, dict) else raw
        if not isinstance(matrix, list):
            raise InputError("expected a list of rows or {\"matrix\": [...]}", path)
        return InitKind.CUSTOM, matrix
    try:
        kind = InitKind(value)
    except ValueError as exc:
        raise InputError(f"unknown --init {value!r}") from exc
    if kind == InitKind.CUSTOM:
        raise InputError("use --init file:PATH for a custom start")
    return kind, None


def parse_orders(tokens: Sequence[str]) -> List[int]:
    """Orders from tokens like ``3``, ``3-5`` or ``3:5`` (inclusive)."""
    orders: List[int] = []
    for token in tokens:
        for sep in ("-", ":"):
            if sep in token:
                low, high = token.split(sep, 1)
                orders.extend(range(int(low), int(high) + 1))
                break
        else:
            orders.append(int(token))
    if not orders or min(orders) < 1:
        raise InputError(f"invalid --n {' '.join(tokens)!r}")
    return sorted(set(orders))


def am_config_from_args(args: argparse.Namespace) -> AmConfig:
    kind, matrix = parse_init(args.init)
    fields: Dict[str, Any] = {"init": kind, "init_matrix": matrix}
    for name, attr in (
        ("seed", "seed"),
        ("tol_term", "tol_term"),
        ("success_threshold_factor", "success_factor"),
        ("max_outer_iter", "max_iter"),
        ("qp_tol", "qp_tol"),
        ("extrapolate", "extrapolate"),
    ):
        value = getattr(args, attr)
        if value is not None:
            fields[name] = value
    return AmConfig(**fields)


def resolve_workers(requested: Optional[int]) -> int:
    workers = Config.BENCH_WORKERS if requested is None else requested
    return workers if workers > 0 else (os.cpu_count() or 1)


def handle_solve(args: argparse.Namespace) -> Dict[str, Any]:
    parsed = load_input(args.input)
    configs = am_configs(am_config_from_args(args), args.multistart)
    workers = resolve_workers(args.workers)
    if parsed.discrete:
        result = solve_gf(parsed.gf, configs, workers, args.trace_full, args.tol)
    else:
        result = solve_lst(parsed.lst, configs, workers, args.trace_full, args.tol)
    body: Dict[str, Any] = {
        "input": args.input,
        "form": parsed.form,
        "mass_correction": parsed.mass_correction,
    }
    body.update(result.body)
    return command_result(result.exit_code, create_report("solve", body))


def handle_convert(args: argparse.Namespace) -> Dict[str, Any]:
    parsed = load_input(args.input)
    if not parsed.discrete:
        raise InputError("convert needs a generating function (\"z_form\": true)", args.input)
    lst = to_continuous(parsed.gf, renormalize=True)
    return command_result(EXIT_OK, lst_to_dict(lst))


def handle_bench(args: argparse.Namespace) -> Dict[str, Any]:
    orders = parse_orders(args.n)
    config = am_config_from_args(args)
    seed = config.seed
    jobs = []
    for n in orders:
        spec = GenSpec(n=n, c=args.c, variant=Variant(args.variant), p=args.p, seed=seed)
        for index in range(args.count):
            jobs.append(
                {
                    "spec": spec.model_dump(),
                    "config": config.model_dump(),
                    "index": index,
                }
            )

    workers = resolve_workers(args.workers)
    logger.info("bench: %d instances on %d workers", len(jobs), workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(bench_instance, jobs))
    else:
        rows = [bench_instance(job) for job in jobs]
    rows.sort(key=lambda row: (row["n"], row["index"]))

    body = {
        "orders": orders,
        "count": args.count,
        "variant": args.variant,
        "p": args.p,
        "c": args.c,
        "seed": seed,
        "config": config.model_dump(mode="json"),
        "table": summarize_bench(rows),
        "instances": rows,
    }
    return command_result(EXIT_OK, create_report("bench", body))


def handle_verify(args: argparse.Namespace) -> Dict[str, Any]:
    parsed = load_input(args.input)
    try:
        claim = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read report: {exc.strerror}", args.report) from exc
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, args.report, exc.lineno) from exc
    result = verify_claim(parsed, claim, args.tol)
    body = {"input": args.input, "report": args.report}
    body.update(result.body)
    return command_result(result.exit_code, create_report("verify", body))


HANDLERS: Dict[str, Callable[[argparse.Namespace], Dict[str, Any]]] = {
    "solve": handle_solve,
    "convert": handle_convert,
    "bench": handle_bench,
    "verify": handle_verify,
}


def _add_am_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--init",
        default=InitKind.JORDAN_PLUS_ONES.value,
        help="jordan-plus-ones | jordan | minus-xi-i | random | file:PATH",
    )
    parser.add_argument("--max-iter", type=int, default=None, help="outer iteration limit")
    parser.add_argument("--tol-term", type=float, default=None, help="stall tolerance on F")
    parser.add_argument(
        "--success-factor", type=float, default=None, help="success iff F < n^2 * factor"
    )
    parser.add_argument("--qp-tol", type=float, default=None, help="QP KKT tolerance")
    parser.add_argument("--seed", type=int, default=None, help="seed for random starts")
    parser.add_argument(
        "--no-extrapolate",
        dest="extrapolate",
        action="store_const",
        const=False,
        default=None,
        help="plain alternation without extrapolated steps",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phmin", description="Minimal PH representations of rational LSTs.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="search for a representation of an input file")
    solve.add_argument("input")
    _add_am_flags(solve)
    solve.add_argument("--multistart", type=int, default=1, help="total number of starts")
    solve.add_argument("--workers", type=int, default=None, help="processes for multistart")
    solve.add_argument("--tol", type=float, default=None, help="verification tolerance")
    solve.add_argument("--trace-full", action="store_true", help="do not cap f_trace")
    solve.add_argument("--out", default=None, help="report path (default stdout)")

    convert = sub.add_parser("convert", help="generating function to continuous LST")
    convert.add_argument("input")
    convert.add_argument("--out", default=None)

    bench = sub.add_parser("bench", help="success rates on random instances")
    bench.add_argument("--n", nargs="+", required=True, help="orders, e.g. 3 4 or 3-6")
    bench.add_argument("--count", type=int, default=50)
    bench.add_argument("--variant", choices=[v.value for v in Variant], default="balanced")
    bench.add_argument("--p", type=float, default=0.0, help="sparse/stiff probability")
    bench.add_argument("--c", type=float, default=1.0, help="rate scale")
    _add_am_flags(bench)
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument("--out", default=None)

    verify = sub.add_parser("verify", help="re-check a report against its input")
    verify.add_argument("input")
    verify.add_argument("report")
    verify.add_argument("--tol", type=float, default=None)
    verify.add_argument("--out", default=None)
    return parser


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    set_log_level(args.verbose)

    try:
        result = HANDLERS[args.command](args)
    except (PhminError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception:  # pylint: disable=broad-except
        logger.exception("%s failed", args.command)
        return EXIT_INVALID

    _write(to_json(result["report"]), args.out)
    return result["exit_code"]
