"""
End-to-end runs shared by the command handlers.

input file -> LST (or generating function) -> (J, beta, xi) -> alternating
minimization -> independent verification -> report body.
"""

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import TypeAdapter, ValidationError

from phmin.am import (
    AmOutcome,
    AmReport,
    extract_representation,
    run_am,
    run_am_multistart,
)
from phmin.discrete import GeneratingFunction, solve_discrete, to_continuous
from phmin.errors import InfeasibleBeta, InputError, PhminError
from phmin.jordan import ProblemData, beta_residual, build_problem
from phmin.phgen import lst_of, sample_admissible
from phmin.poly import (
    PoleMultiset,
    RationalLst,
    build_lst_from_coeffs,
    lst_from_terms,
    renormalize_mass,
    validate_lst,
)
from phmin.verify import (
    check_discrete_representation,
    check_representation,
    moments,
)
from shared.config import Config
from shared.models import (
    AmConfig,
    BetaJordanInput,
    CoeffsInput,
    GenSpec,
    InitKind,
    InputDocument,
    PartialFractionsInput,
)
from shared.utils import get_logger, sample_points

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_FOUND = 2

_DOCUMENT = TypeAdapter(InputDocument)


@dataclass(frozen=True, eq=False)
class ParsedInput:
    """A continuous LST or a discrete generating function read from a file."""

    form: str
    lst: Optional[RationalLst] = None
    gf: Optional[GeneratingFunction] = None
    mass_correction: float = 1.0

    @property
    def discrete(self) -> bool:
        return self.gf is not None


@dataclass(frozen=True)
class RunResult:
    exit_code: int
    body: Dict[str, Any]


def _line_of(text: str, loc: Sequence[Union[str, int]]) -> Optional[int]:
    """Best-effort line of the field named by a validation error location."""
    pos = -1
    for key in loc:
        if not isinstance(key, str):
            continue
        found = text.find(f'"{key}"', max(pos, 0))
        if found >= 0:
            pos = found
    return text.count("\n", 0, pos) + 1 if pos >= 0 else None


def load_document(path: Union[str, Path]):
    """
    Parse and validate an input file.

    Raises:
        InputError: unreadable file, malformed JSON or schema violation, with
            the line and field where they can be located
    """
    path = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read input: {exc.strerror}", path) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(exc.msg, path, exc.lineno) from exc
    try:
        return _DOCUMENT.validate_python(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = first.get("loc", ())
        where = ".".join(str(part) for part in loc) or "document"
        raise InputError(f"{where}: {first['msg']}", path, _line_of(text, loc)) from exc


def parse_document(doc, renormalize: bool = True) -> ParsedInput:
    """Turn a validated input model into an LST or generating function."""
    if isinstance(doc, CoeffsInput) and doc.z_form:
        return ParsedInput(form="z_form", gf=GeneratingFunction.from_coeffs(doc.p, doc.q))
    if isinstance(doc, CoeffsInput):
        lst = build_lst_from_coeffs(doc.p, doc.q)
    elif isinstance(doc, PartialFractionsInput):
        real_terms = []
        complex_terms = []
        for term in doc.terms:
            if term.pole.im == 0.0:
                real_terms.append((term.pole.re, [c.re for c in term.coeffs]))
            else:
                complex_terms.append((term.pole.value(), [c.value() for c in term.coeffs]))
        lst = lst_from_terms(real_terms, complex_terms)
    elif isinstance(doc, BetaJordanInput):
        lst = lst_of(doc.beta, doc.jordan)
    else:
        raise InputError(f"unsupported input form {getattr(doc, 'form', doc)!r}")

    factor = 1.0
    if renormalize:
        lst, factor = renormalize_mass(lst)
    return ParsedInput(form=doc.form, lst=lst, mass_correction=factor)


def load_input(path: Union[str, Path], renormalize: bool = True) -> ParsedInput:
    return parse_document(load_document(path), renormalize=renormalize)


def poles_to_dict(poles: PoleMultiset) -> Dict[str, Any]:
    return {
        "real": [{"value": rp.value, "mult": rp.mult} for rp in poles.real_poles],
        "complex": [
            {"mu": cp.mu, "omega": cp.omega, "mult": cp.mult} for cp in poles.complex_pairs
        ],
    }


def lst_to_dict(lst: RationalLst) -> Dict[str, Any]:
    return {"form": "coeffs", "p": list(lst.p.coeffs), "q": list(lst.q.coeffs)}


def am_configs(base: AmConfig, multistart: int = 1) -> List[AmConfig]:
    """The base config followed by random starts with consecutive seeds."""
    configs = [base]
    for k in range(1, max(multistart, 1)):
        configs.append(
            base.model_copy(update={"init": InitKind.RANDOM, "seed": base.seed + k})
        )
    return configs


def _run(
    problem: ProblemData, configs: Sequence[AmConfig], workers: int
) -> Tuple[AmReport, List[Dict[str, Any]]]:
    if len(configs) == 1:
        report = run_am(problem, configs[0])
        return report, [report.summary()]
    multi = run_am_multistart(problem, configs, workers)
    return multi.best, multi.runs


def _trace(report: AmReport, full: bool, cap: int) -> Dict[str, Any]:
    trace = report.f_trace if full or len(report.f_trace) <= cap else report.f_trace[:cap]
    return {"f_trace": trace, "f_trace_truncated": len(trace) < len(report.f_trace)}


def _problem_body(lst: RationalLst, problem: ProblemData) -> Dict[str, Any]:
    points = sample_points(10, lst.poles.roots_list(), start=0.25, step=0.75)
    return {
        "n": problem.n,
        "xi": problem.xi,
        "poles": poles_to_dict(lst.poles),
        "beta": problem.beta,
        "beta_residual": beta_residual(problem.beta, problem.jordan, lst, points),
        "jordan": problem.jordan.dense,
    }


def solve_lst(
    lst: RationalLst,
    configs: Sequence[AmConfig],
    workers: int = 1,
    trace_full: bool = False,
    verify_tol: Optional[float] = None,
) -> RunResult:
    """
    Search for a representation of order deg q and verify it.

    Returns exit code 0 when a verified representation was found, 2 when none
    was found or it failed verification.
    """
    validation = validate_lst(lst, mass_tol=1e-9)
    if not validation.admissible:
        raise InputError("inadmissible LST: " + "; ".join(validation.messages))
    started = time.perf_counter()
    problem = build_problem(lst)
    body: Dict[str, Any] = _problem_body(lst, problem)

    try:
        report, runs = _run(problem, configs, workers)
    except InfeasibleBeta as exc:
        logger.info("%s", exc)
        body.update({"outcome": AmOutcome.INFEASIBLE_BETA.value, "message": str(exc)})
        return RunResult(EXIT_NOT_FOUND, body)

    body.update(
        {
            "outcome": report.outcome.value,
            "f_initial": report.f_initial,
            "f_final": report.final.F,
            "iterations": report.iterations,
            "config": report.config.model_dump(mode="json"),
            "kkt": {"p_step": report.op_a_kkt, "a_step": report.op_p_kkt},
            "runs": runs,
        }
    )
    exit_code = EXIT_NOT_FOUND
    if report.found:
        rep = extract_representation(report, problem)
        check = check_representation(rep.alpha, rep.A, lst, tol=verify_tol)
        body.update(
            {
                "alpha": rep.alpha,
                "A": rep.A,
                "clamped": list(rep.clamped),
                "verify": check.to_dict(),
                "moments": [moments(rep.alpha, rep.A, k) for k in (1, 2, 3)],
            }
        )
        exit_code = EXIT_OK if check.passed else EXIT_NOT_FOUND
    body.update(_trace(report, trace_full, Config.TRACE_CAP))
    body["wallclock"] = time.perf_counter() - started
    return RunResult(exit_code, body)


def solve_gf(
    gf: GeneratingFunction,
    configs: Sequence[AmConfig],
    workers: int = 1,
    trace_full: bool = False,
    verify_tol: Optional[float] = None,
) -> RunResult:
    """Discrete counterpart of ``solve_lst``; reports (alpha~, A~) on success."""
    started = time.perf_counter()
    try:
        result = solve_discrete(
            gf, configs[0], tuple(configs[1:]), workers=workers, renormalize=True
        )
    except InfeasibleBeta as exc:
        lst = to_continuous(gf, renormalize=True)
        failed = _problem_body(lst, build_problem(lst, xi_override=1.0))
        failed.update({"outcome": AmOutcome.INFEASIBLE_BETA.value, "message": str(exc)})
        return RunResult(EXIT_NOT_FOUND, failed)

    report = result.report
    body: Dict[str, Any] = {"continuous": lst_to_dict(result.lst)}
    body.update(_problem_body(result.lst, result.problem))
    body.update(
        {
            "outcome": report.outcome.value,
            "f_initial": report.f_initial,
            "f_final": report.final.F,
            "iterations": report.iterations,
            "config": report.config.model_dump(mode="json"),
            "runs": result.runs or [report.summary()],
        }
    )
    exit_code = EXIT_NOT_FOUND
    if result.representation is not None:
        rep = result.representation
        check = check_discrete_representation(rep.alpha_tilde, rep.A_tilde, gf, tol=verify_tol)
        body.update(
            {"alpha_tilde": rep.alpha_tilde, "A_tilde": rep.A_tilde, "verify": check.to_dict()}
        )
        exit_code = EXIT_OK if check.passed else EXIT_NOT_FOUND
    body.update(_trace(report, trace_full, Config.TRACE_CAP))
    body["wallclock"] = time.perf_counter() - started
    return RunResult(exit_code, body)


def verify_claim(parsed: ParsedInput, claim: Dict[str, Any], tol: Optional[float]) -> RunResult:
    """Re-check the representation stored in a report against its input."""
    if parsed.discrete:
        if "alpha_tilde" not in claim or "A_tilde" not in claim:
            raise InputError("report holds no discrete representation")
        check = check_discrete_representation(
            claim["alpha_tilde"], claim["A_tilde"], parsed.gf, tol=tol
        )
    else:
        if "alpha" not in claim or "A" not in claim:
            raise InputError("report holds no representation")
        check = check_representation(claim["alpha"], claim["A"], parsed.lst, tol=tol)
    body = {"verify": check.to_dict(), "outcome": claim.get("outcome")}
    return RunResult(EXIT_OK if check.passed else EXIT_NOT_FOUND, body)


def bench_instance(job: Dict[str, Any]) -> Dict[str, Any]:
    """
    One bench instance end to end: sample, filter, solve, verify.

    Runs in a worker process; everything it needs travels in ``job``.
    """
    spec = GenSpec(**job["spec"])
    config = AmConfig(**job["config"])
    index = job["index"]
    started = time.perf_counter()
    row: Dict[str, Any] = {"n": spec.n, "index": index}
    try:
        instance = sample_admissible(spec, index=index)
    except PhminError as exc:
        row.update({"status": "skipped", "message": str(exc)})
        return row

    lst = instance.lst
    row.update(
        {
            "status": "ok",
            "complex": lst.poles.has_complex,
            "attempts": instance.attempts,
            "cancellation_gap": instance.cancellation_gap,
        }
    )
    try:
        problem = build_problem(lst)
        report = run_am(problem, config)
    except PhminError as exc:
        row.update({"outcome": type(exc).__name__, "success": False, "iterations": 0})
        row["wallclock"] = time.perf_counter() - started
        return row

    verified = False
    if report.found:
        rep = extract_representation(report, problem)
        verified = check_representation(rep.alpha, rep.A, lst).passed
    row.update(
        {
            "outcome": report.outcome.value,
            "success": report.found and verified,
            "f_final": report.final.F,
            "iterations": report.iterations,
            "wallclock": time.perf_counter() - started,
        }
    )
    return row


def summarize_bench(rows: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """One summary row per order with real and complex cases counted apart."""
    table = []
    for n in sorted({row["n"] for row in rows}):
        group = [row for row in rows if row["n"] == n and row["status"] == "ok"]
        real = [row for row in group if not row["complex"]]
        cplx = [row for row in group if row["complex"]]
        table.append(
            {
                "n": n,
                "real_successes": sum(1 for row in real if row["success"]),
                "real_attempts": len(real),
                "complex_successes": sum(1 for row in cplx if row["success"]),
                "complex_attempts": len(cplx),
                "skipped": sum(1 for row in rows if row["n"] == n and row["status"] != "ok"),
                "mean_iterations": float(np.mean([r["iterations"] for r in group]))
                if group
                else 0.0,
                "mean_wallclock": float(np.mean([r["wallclock"] for r in group]))
                if group
                else 0.0,
            }
        )
    return table
