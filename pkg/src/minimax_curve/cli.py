"""Command line: solve, sweep, verify and certify minimax-curvature instances.

Exit codes: 0 success, 1 infeasible instance, 2 solver or cross-check
failure, 3 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import report as rp
from .geometry import ArcProgram
from .model import ClassificationError, ProblemInstance, classify, residuals
from .optimizer import InfeasibleInstanceError, NoSolutionError, Solution, SolverConfig, multistart_solve, sweep_tf

EXIT_OK, EXIT_INFEASIBLE, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


def _add_endpoints(p: argparse.ArgumentParser, with_tf: bool = True) -> None:
    g = p.add_argument_group("instance")
    for name in ("x0", "y0", "theta0", "xf", "yf", "thetaf"):
        g.add_argument(f"--{name}", type=float, required=True)
    if with_tf:
        g.add_argument("--tf", type=float, required=True, help="curve length")
    g.add_argument("--degrees", action="store_true", help="headings are given in degrees")


def _add_solver(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--config", type=Path, help="TOML file with SolverConfig fields")
    g.add_argument("--seed", type=int, help="seed for the optional random starts")
    g.add_argument("--random-starts", type=int, help="extra scrambled Sobol starts")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="minimax-curve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="multistart solve of one instance")
    _add_endpoints(p)
    _add_solver(p)
    p.add_argument("--json", type=Path, help="write the report here")
    p.add_argument("--csv", type=Path, help="write samples t,x,y,theta,u of the best curve")
    p.add_argument("--samples", type=int, default=200, help="CSV sample count (default 200)")
    p.add_argument("--svg", type=Path, help="write an SVG drawing of all critical curves")
    p.add_argument("--plot", type=Path, help="write a PNG drawing (matplotlib)")

    p = sub.add_parser("sweep", help="solve for a list of curve lengths")
    _add_endpoints(p, with_tf=False)
    p.add_argument("--tf-list", type=_float_list, required=True, help="ascending lengths, e.g. 1.5,3,5,7")
    _add_solver(p)
    p.add_argument("--csv", type=Path, help="write the t_f, a, type table here (default stdout)")
    p.add_argument("--json", type=Path, help="write all reports here")

    p = sub.add_parser("verify", help="cross-check against the shortest-path problem and the transcription")
    _add_endpoints(p)
    _add_solver(p)
    p.add_argument("--transcription", type=int, metavar="N", help="also run the discretised oracle with N intervals")
    p.add_argument("--json", type=Path)

    p = sub.add_parser("certify", help="multiplier certificate and optimality filters")
    _add_endpoints(p)
    _add_solver(p)
    p.add_argument("--xi", type=_float_list, help="five arc lengths; omit to certify the solved candidates")
    p.add_argument("--a", type=float, help="curvature bound of --xi")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--json", type=Path)
    return parser


def _instance(args) -> ProblemInstance:
    conv = math.radians if args.degrees else float
    return ProblemInstance.from_values(
        args.x0, args.y0, conv(args.theta0), args.xf, args.yf, conv(args.thetaf), getattr(args, "tf", 1.0)
    )


def _config(args, **overrides) -> SolverConfig:
    data: dict = {}
    if args.config is not None:
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        try:
            data = tomllib.loads(args.config.read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(data) - set(SolverConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config fields: {', '.join(sorted(unknown))}")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.random_starts is not None:
        data["n_random"] = args.random_starts
    data.update(overrides)
    try:
        return SolverConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad solver config: {exc}") from exc


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _summary(report) -> str:
    inst = report.instance
    lines = [
        f"instance {rp.start_goal_text(inst.start)} -> {rp.start_goal_text(inst.goal)}, t_f = {rp.fmt(inst.tf)}",
        f"best   {report.best.type_string:<5} a = {rp.fmt(report.best.a)}",
    ]
    for sol in report.critical[1:]:
        mark = ""
        if sol.verdict is not None and not sol.verdict.passed:
            mark = "  (filtered: " + "; ".join(sol.verdict.reasons) + ")"
        lines.append(f"crit   {sol.type_string:<5} a = {rp.fmt(sol.a)}{mark}")
    lines.append(f"{len(report.critical)} critical curves from {report.n_starts} starts in {report.timing_ms:.0f} ms")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    inst = _instance(args)
    report = multistart_solve(inst, _config(args))
    sys.stdout.write(_summary(report))
    if args.json:
        _write(args.json, rp.dumps(rp.report_dict(report)))
    if args.csv:
        _write(args.csv, rp.samples_csv(inst, report.best.program, args.samples))
    if args.svg:
        _write(args.svg, rp.svg_drawing(inst, report.critical))
    if args.plot:
        rp.plot_png(inst, report.critical, str(args.plot))
    return EXIT_OK


def cmd_sweep(args) -> int:
    inst = _instance(args)
    cfg = _config(args)
    try:
        entries = sweep_tf(inst.start, inst.goal, args.tf_list, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _write(args.csv, rp.sweep_csv(entries))
    if args.json:
        data = {
            "schema_version": rp.SCHEMA_VERSION,
            "sweep": [
                {"tf": e.tf, "report": rp.report_dict(e.report) if e.report else None, "error": e.error} for e in entries
            ],
        }
        _write(args.json, rp.dumps(data))
    failed = [e for e in entries if e.report is None]
    if not failed:
        return EXIT_OK
    return EXIT_INFEASIBLE if all(e.infeasible for e in failed) else EXIT_SOLVER


def cmd_verify(args) -> int:
    from .verify import expected_bands, md_crosscheck, transcription_solve

    inst = _instance(args)
    cfg = _config(args, certify=False)
    report = multistart_solve(inst, cfg)
    check = md_crosscheck(inst, cfg, report)
    out = {"schema_version": rp.SCHEMA_VERSION, "instance": rp.instance_dict(inst), "crosscheck": check.to_dict()}
    status = "passed" if check.passed else "FAILED"
    sys.stdout.write(f"shortest-path cross-check {status}: a* = {rp.fmt(check.a_star)}")
    if check.t_f_star is not None:
        sys.stdout.write(f", t_f* = {rp.fmt(check.t_f_star)} ({check.dubins_word})")
    sys.stdout.write("\n")
    for note in check.notes:
        sys.stdout.write(f"  note: {note}\n")
    ok = check.passed
    if args.transcription:
        tr = transcription_solve(inst, args.transcription)
        rel = abs(tr.a - report.best.a) / max(report.best.a, 1e-12)
        ties = [s for s in report.critical if abs(s.a - report.best.a) <= 1e-6 * max(1.0, report.best.a)]
        wanted = sorted({expected_bands(s.program, inst.tf, tr.n) for s in ties})
        bands_ok = tr.bands in wanted
        within = rel < 2e-3
        ok = ok and within and bands_ok
        out["transcription"] = {
            "n": tr.n,
            "a": tr.a,
            "relative_gap": rel,
            "bands": tr.bands,
            "expected_bands": wanted,
            "passed": within and bands_ok,
            "elapsed_s": tr.elapsed_s,
        }
        sys.stdout.write(
            f"transcription n = {tr.n}: a = {rp.fmt(tr.a)}, relative gap {rel:.2e}, bands {tr.bands} "
            f"(expected {'/'.join(wanted)}) {'passed' if within and bands_ok else 'FAILED'}\n"
        )
    if args.json:
        _write(args.json, rp.dumps(out))
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_certify(args) -> int:
    from .certificate import apply_optimality_filters, reconstruct_certificate

    inst = _instance(args)
    if args.xi is not None:
        if len(args.xi) != 5 or args.a is None:
            raise UsageError("--xi needs five lengths and --a the curvature bound")
        prog = ArcProgram(tuple(args.xi), args.a)
        try:
            ts = classify(prog, inst)
        except ClassificationError as exc:
            ts = f"?({exc})"
        sols = [Solution(prog, ts, args.a, residuals(inst, prog).norm(), start_id=-1)]
    else:
        sols = multistart_solve(inst, _config(args, certify=False)).critical
    entries = []
    for sol in sols:
        sol.certificate = reconstruct_certificate(inst, sol, n_samples=args.samples)
        sol.verdict = apply_optimality_filters(inst, sol)
        f = sol.certificate.flags
        sys.stdout.write(
            f"{sol.type_string:<5} a = {rp.fmt(sol.a)}  mp_consistent={f.mp_consistent} "
            f"ellipse_consistent={f.ellipse_consistent} filters_passed={f.filters_passed}\n"
        )
        for note in f.notes:
            sys.stdout.write(f"  note: {note}\n")
        entries.append(rp.solution_dict(sol))
    if args.json:
        _write(
            args.json,
            rp.dumps({"schema_version": rp.SCHEMA_VERSION, "instance": rp.instance_dict(inst), "candidates": entries}),
        )
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify, "certify": cmd_certify}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except InfeasibleInstanceError as exc:
        sys.stderr.write(f"infeasible instance: {exc}\n")
        return EXIT_INFEASIBLE
    except NoSolutionError as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER
    except ValueError as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
