"""Command-line front end (``gto``)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .core import (
    DomainError,
    HomodyneLimitError,
    InputState,
    MeasurementSpec,
    NonPhysicalError,
    StructureError,
    ThreeModeState,
    build_symmetric_channel,
    builtin_channel,
    is_genuine,
    is_physical_two_mode,
    is_separable_two_mode,
    partial_trace_third,
)
from .fidelity import conditional_fidelity, fidelity_tr
from .optimizer import build_context, optimize, phase_scan, symmetric_gamma
from .reproduce import RunReport, run_reproduction

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def parse_angle(text: str) -> float:
    t = text.strip().lower()
    if t.endswith(("deg", "°", "d")):
        raise UsageError(f"angles are in radians; got {text!r}")
    try:
        return float(t)
    except ValueError:
        raise UsageError(f"cannot parse angle {text!r}") from None


def parse_xi(text: str) -> float:
    try:
        xi = float(text)
    except ValueError:
        raise UsageError(f"cannot parse squeezing factor {text!r}") from None
    if math.isnan(xi) or xi < 0:
        raise UsageError(f"squeezing factor must be >= 0, got {text!r}")
    return xi


def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def resolve_state(spec: str) -> ThreeModeState:
    try:
        return builtin_channel(spec)
    except KeyError:
        pass
    return ThreeModeState.from_dict(_read_json(spec))


def resolve_input(spec: str) -> InputState:
    if spec == "coherent":
        return InputState.coherent()
    if spec.startswith("squeezed:"):
        parts = spec.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise UsageError("expected --input squeezed:<xi>,<phi>")
        return InputState.squeezed(parse_xi(parts[0]), parse_angle(parts[1]))
    data = _read_json(spec)
    if not isinstance(data, dict) or "V_in" not in data:
        raise UsageError(f'{spec}: input file needs a "V_in" 2x2 array')
    amp = data.get("amplitude", [0.0, 0.0])
    return InputState(data["V_in"], complex(amp[0], amp[1]))


def _emit_csv(header, rows, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    if path:
        Path(path).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _write_report(report: RunReport, path) -> None:
    if path:
        Path(path).write_text(report.to_json())


def cmd_check(args) -> int:
    state = resolve_state(args.state)
    genuine, lam = is_genuine(state)
    reduced = partial_trace_third(state)
    physical, _ = is_physical_two_mode(reduced)
    separable = is_separable_two_mode(reduced)[0] if physical else None
    sep_text = "n/a" if separable is None else str(separable).lower()
    print(f"genuine: {str(genuine).lower()}, reduced separable: {sep_text}")
    print(f"min eigenvalue of V - (i/2)J: {lam:.6g}")
    report = RunReport("check", {"state": args.state},
                       {"genuine": genuine, "min_eig": lam, "reduced_separable": separable})
    _write_report(report, args.out)
    return EXIT_OK if genuine else EXIT_FAIL


def _require_genuine(state: ThreeModeState) -> None:
    ok, lam = is_genuine(state)
    if not ok:
        raise NonPhysicalError(f"state is not genuine (min eigenvalue {lam:.3e})")


def cmd_fidelity(args) -> int:
    state = resolve_state(args.state)
    _require_genuine(state)
    inp = resolve_input(args.input)
    spec = MeasurementSpec(parse_xi(args.xi), parse_angle(args.phi))
    f_tr = fidelity_tr(partial_trace_third(state), inp).fidelity
    f = conditional_fidelity(state, inp, spec).fidelity
    print(f"F_tr = {f_tr:.12g}")
    print(f"F(xi={_fmt(spec.xi)}, phi={_fmt(spec.phi)}) = {f:.12g}")
    report = RunReport("fidelity", {"state": args.state, "input": args.input, "xi": spec.xi, "phi": spec.phi},
                       {"fidelity_tr": f_tr, "fidelity": f})
    _write_report(report, args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    state = resolve_state(args.state)
    _require_genuine(state)
    inp = resolve_input(args.input)
    res = optimize(state, inp, phase_grid=args.grid)
    print(f"xi_bar = {_fmt(res.xi)}, phi_bar = {_fmt(res.phi)}, F = {res.fidelity:.12g}")
    print(f"measurement: {res.kind.value} (case {res.case}); F_tr = {res.fidelity_tr:.12g}")
    if res.homodyne_angle is not None:
        print(f"homodyne quadrature angle: {_fmt(res.homodyne_angle)}")
    report = RunReport(
        "optimize",
        {"state": args.state, "input": args.input, "grid": args.grid},
        {"xi": res.xi, "phi": res.phi, "fidelity": res.fidelity, "fidelity_tr": res.fidelity_tr,
         "classification": res.kind.value, "case": res.case, "borders": list(res.borders)},
    )
    _write_report(report, args.out)
    return EXIT_OK


def sweep_q_rows(q_min: float, q_max: float, n: int):
    if q_min < 0.5 or not q_max > q_min:
        raise DomainError("need 0.5 <= q_min < q_max")
    coh = InputState.coherent()
    rows = []
    for q in np.geomspace(q_min, q_max, n):
        res = optimize(build_symmetric_channel(q), coh)
        rows.append((q, symmetric_gamma(q), res.fidelity_tr, res.fidelity))
    return rows


def cmd_sweep_q(args) -> int:
    rows = sweep_q_rows(args.q_min, args.q_max, args.n)
    _emit_csv(["q", "gamma", "F_tr", "F_assisted"], rows, args.csv)
    return EXIT_OK


def sweep_phi_rows(state: ThreeModeState, inp: InputState, n: int):
    ctx = build_context(state, inp)
    return [(pr.phi, pr.gamma, pr.gamma_shift, pr.p, pr.xi_bar, pr.f_tilde, pr.f_zero) for pr in phase_scan(ctx, n)]


def cmd_sweep_phi(args) -> int:
    state = resolve_state(args.state)
    _require_genuine(state)
    rows = sweep_phi_rows(state, resolve_input(args.input), args.n)
    _emit_csv(["phi", "gamma", "gamma_shift", "p", "xi_bar", "F_tilde", "F_zero"], rows, args.csv)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    ex1 = resolve_state(args.example1) if args.example1 else None
    ex2 = resolve_state(args.example2) if args.example2 else None
    report = run_reproduction(example1=ex1, example2=ex2)
    for v in report.verdicts:
        mark = "PASS" if v.passed else "FAIL"
        print(f"[{mark}] {v.name}: measured {v.measured}, expected {v.expected} (tol {v.tolerance})")
    print(f"{len(report.verdicts) - report.outputs['failures']}/{len(report.verdicts)} targets passed "
          f"in {report.wall_time:.1f} s (seed {report.inputs['seed']:#x})")
    _write_report(report, args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gto", description="Charlie-assisted Gaussian teleportation fidelities and optimal measurements.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def state_args(p, with_input=True):
        p.add_argument("--state", required=True, help="JSON file or builtin: example1, example2, symmetric:q=<v>")
        if with_input:
            p.add_argument("--input", default="coherent", help="coherent | squeezed:<xi>,<phi> | JSON file")

    p = sub.add_parser("check", help="genuineness and reduced-state separability")
    state_args(p, with_input=False)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fidelity", help="fidelity for a given measurement")
    state_args(p)
    p.add_argument("--xi", required=True, help="squeezing factor; 0 and inf are homodyne limits")
    p.add_argument("--phi", required=True, help="squeezing phase in radians")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("optimize", help="optimal measurement for Charlie")
    state_args(p)
    p.add_argument("--grid", type=int, default=1024, help="phase scan resolution")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep-q", help="symmetric channel sweep (gamma, F_tr, F_assisted)")
    p.add_argument("--q-min", type=float, default=0.5)
    p.add_argument("--q-max", type=float, default=50.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sweep_q)

    p = sub.add_parser("sweep-phi", help="phase profile of a channel")
    state_args(p)
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sweep_phi)

    p = sub.add_parser("reproduce", help="run every reproduction target")
    p.add_argument("--out")
    p.add_argument("--example1", help="override the first example channel (file or builtin)")
    p.add_argument("--example2", help="override the second example channel (file or builtin)")
    p.set_defaults(func=cmd_reproduce)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, DomainError, StructureError, HomodyneLimitError) as exc:
        print(f"gto: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonPhysicalError as exc:
        print(f"gto: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())
