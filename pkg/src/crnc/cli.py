"""Command-line entry point: ``crnc <subcommand> ...``.

Exit codes: 0 success, 1 counterexample found (JSON on stdout), 2 bad input or
invalid spec, 3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from .analysis import (
    ValidationFailed,
    eval_min_formula,
    eval_spec,
    max_evaluator,
    validate_spec,
)
from .compiler import compile_spec, compile_with_context, decompose_bimolecular, is_bimolecular
from .composition import WiringPlan, compose, is_output_oblivious
from .corpus import support_inputs
from .crn import Crc, CrnError, CrnSyntaxError, parse_crc, parse_state, serialize_crn
from .exact import format_rational
from .semantics import (
    NonTerminating,
    NotFeedforward,
    UnboundedOutput,
    execute_topological,
    is_feedforward,
    max_output_bound,
    random_segment_walk,
    species_closure,
)
from .spec import SpecError, load_spec

OK, COUNTEREXAMPLE, BAD_INPUT, INTERNAL = 0, 1, 2, 3
SCHEMA = 1


class UsageError(Exception):
    pass


def _default_seed() -> int:
    try:
        return int(os.environ.get("CRNC_SEED", "0"))
    except ValueError:
        return 0


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_crc(path: str) -> Crc:
    return parse_crc(_read(path), default_output="Y")


def _load_state(arg: str) -> dict[str, Fraction]:
    text = _read(arg) if os.path.isfile(arg) else arg
    return parse_state(text)


def _initial(crc: Crc, given: dict[str, Fraction]) -> dict[str, Fraction]:
    allowed = set(crc.inputs) if crc.inputs else set(crc.species)
    for s in given:
        if s not in allowed:
            raise UsageError(f"{s} is not an input of the network")
    state = dict(given)
    for s, v in crc.context.items():
        state[s] = state.get(s, Fraction(0)) + v
    return state


def _state_str(x: dict[str, Fraction]) -> str:
    return ",".join(f"{s}={format_rational(v)}" for s, v in x.items())


def _emit_json(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_compile(args) -> int:
    spec = load_spec(_read(args.spec))
    if spec.affine:
        crc, report = compile_with_context(spec, prune=True), None
        if args.report:
            raise UsageError("--report is not available for specs with constants")
    else:
        crc, report = compile_spec(spec, prune=args.prune)
    if args.bimolecular:
        crc = decompose_bimolecular(crc)
    _write(args.output, serialize_crn(crc))
    if args.report:
        data = report.to_json()
        data["bimolecular"] = bool(args.bimolecular)
        data["emitted_reactions"] = len(crc.reactions)
        Path(args.report).write_text(json.dumps(data, indent=2) + "\n")
    return OK


def cmd_compose(args) -> int:
    up, down = _load_crc(args.upstream), _load_crc(args.downstream)
    if "=" not in args.wire:
        raise UsageError("--wire expects UP_OUT=DOWN_IN")
    up_out, down_in = (s.strip() for s in args.wire.split("=", 1))
    if up_out != up.output:
        raise UsageError(f"{up_out} is not the upstream output ({up.output})")
    crc = compose(WiringPlan(up, down, down_in, args.suffix))
    _write(args.output, serialize_crn(crc))
    return OK


def cmd_check(args) -> int:
    crc = _load_crc(args.net)
    out = [f"species: {len(crc.species)}  reactions: {len(crc.reactions)}"]
    verdict = is_output_oblivious(crc)
    if verdict:
        out.append("output-oblivious: yes")
    else:
        bad = "; ".join(str(crc.reactions[j]) for j in verdict.offenders)
        out.append(f"output-oblivious: NO ({bad})")
    order = is_feedforward(crc.crn)
    out.append("feedforward: " + ("yes (" + " < ".join(order) + ")" if order is not None else "NO"))
    start = set(crc.inputs) | {s for s, v in crc.context.items() if v}
    closure = species_closure(crc.crn, start)
    out.append("closure from inputs: {" + ", ".join(s for s in crc.species if s in closure) + "}")
    dead = [s for s in crc.species if s not in closure]
    out.append("siphon (never producible): " + ("{" + ", ".join(dead) + "}" if dead else "none"))
    print("\n".join(out))
    return OK


def cmd_exec(args) -> int:
    crc = _load_crc(args.net)
    x = _initial(crc, _load_state(args.input))
    final, trace = execute_topological(crc, x, record=args.trace)
    if args.trace:
        sys.stdout.write(trace.dump())
    if args.state:
        for s in crc.species:
            print(f"{s} = {format_rational(final.get(s, Fraction(0)))}")
    else:
        print(f"{crc.output} = {format_rational(final.get(crc.output, Fraction(0)))}")
    return OK


def cmd_maxout(args) -> int:
    crc = _load_crc(args.net)
    x = _initial(crc, _load_state(args.input))
    bound = max_output_bound(crc, x)
    if args.json:
        _emit_json({
            "schema": SCHEMA,
            "output": crc.output,
            "value": format_rational(bound.value),
            "attained": bound.attained_witness is not None,
            "possibly_unattained": bound.possibly_unattained,
        })
        return OK
    print(f"sup {crc.output} = {format_rational(bound.value)}")
    print("attained: " + ("no (possibly unattained)" if bound.possibly_unattained else "yes"))
    if args.trace and bound.attained_witness is not None:
        sys.stdout.write(bound.attained_witness.dump())
    return OK


def cmd_verify(args) -> int:
    spec = load_spec(_read(args.spec))
    seed = args.seed
    evaluator = max_evaluator if args.evaluator == "max" else None
    report = validate_spec(spec, pairs=args.pairs, seed=seed, evaluator=evaluator)
    if report.structural_errors:
        raise UsageError("; ".join(report.structural_errors))
    if not report.valid:
        cex = None
        if report.domain_order_violations:
            v = report.domain_order_violations[0]
            if v.pair:
                cex = {"kind": "superadditivity", "a": [format_rational(q) for q in v.pair[0]],
                       "b": [format_rational(q) for q in v.pair[1]]}
        if cex is None and report.superadditivity_violations:
            cex = {"kind": "superadditivity", **report.superadditivity_violations[0].to_json()}
        _emit_json({"schema": SCHEMA, "status": "counterexample", "counterexample": cex,
                    "validation": report.to_json()})
        return COUNTEREXAMPLE

    crc, _ = compile_spec(spec, prune=args.prune)
    if args.bimolecular:
        crc = decompose_bimolecular(crc)
    rng = random.Random(seed)
    points = support_inputs(spec.n, args.samples, rng)
    checked = walks = sims = 0
    for k, x in enumerate(points):
        state = crc.initial_state(x)
        oracle = eval_spec(spec, x)
        values = {
            "oracle": oracle,
            "min_formula": eval_min_formula(spec, x),
            "executor": execute_topological(crc, state, record=False)[0].get(crc.output, Fraction(0)),
            "max_output_bound": max_output_bound(crc, state, witness=False).value,
        }
        if len(set(values.values())) != 1:
            return _mismatch(crc, x, values)
        for w in range(args.walks if args.adversarial else 0):
            trace = random_segment_walk(crc, state, args.adversarial, seed + 1000 * k + w)
            y = execute_topological(crc, trace.final, record=False)[0].get(crc.output, Fraction(0))
            walks += 1
            if y != oracle:
                return _mismatch(crc, x, {"oracle": oracle, "after_walk": y}, walk_seed=seed + 1000 * k + w)
        checked += 1
    if args.mass_action:
        from .massaction import CONVERGENCE_TOL, simulate_mass_action

        # higher-order reactions have slow polynomial tails; the bimolecular form keeps them at 1/t
        sim = crc if is_bimolecular(crc.crn) else decompose_bimolecular(crc)
        for x in points[: args.mass_action_samples]:
            res = simulate_mass_action(sim.crn, sim.initial_state(x), t_end=args.t_end, tol=CONVERGENCE_TOL,
                                       rtol=1e-6, stop_when_converged=True)
            y = res.final.get(sim.output, 0.0)
            sims += 1
            if abs(y - float(eval_spec(spec, x))) > 1e-3:
                return _mismatch(crc, x, {"oracle": eval_spec(spec, x), "mass_action": y})
    _emit_json({"schema": SCHEMA, "status": "verified", "inputs_checked": checked,
                "walks": walks, "simulations": sims, "reactions": len(crc.reactions),
                "validation": report.to_json()})
    return OK


def _mismatch(crc, x, values, **extra) -> int:
    given = dict(zip(crc.inputs, x))
    _emit_json({
        "schema": SCHEMA,
        "status": "counterexample",
        "counterexample": {
            "input": _state_str({s: v for s, v in given.items()}),
            "values": {k: (format_rational(v) if isinstance(v, Fraction) else v) for k, v in values.items()},
            **extra,
        },
    })
    return COUNTEREXAMPLE


def cmd_simulate(args) -> int:
    from .massaction import simulate_mass_action

    crc = _load_crc(args.net)
    x = _initial(crc, _load_state(args.input))
    rates = None
    if args.rates:
        vals = [float(v) for v in args.rates.split(",")]
        rates = vals * len(crc.reactions) if len(vals) == 1 else vals
    res = simulate_mass_action(crc.crn, x, rates, t_end=args.t_end, tol=args.tol, atol=args.atol,
                               rtol=args.rtol, stop_when_converged=args.until_converged, method=args.method)
    if args.csv:
        Path(args.csv).write_text(res.to_csv())
    for s, v in res.final.items():
        print(f"{s} = {v:.9g}")
    print(f"converged: {'yes' if res.converged else 'no'} (max |dc/dt| = {res.max_derivative:.3g})")
    return OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crnc", description="Compile and verify rate-independent CRNs.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a JSON function spec to a .crn file")
    c.add_argument("--spec", required=True)
    c.add_argument("-o", "--output")
    c.add_argument("--bimolecular", action="store_true")
    c.add_argument("--prune", action="store_true")
    c.add_argument("--report")
    c.set_defaults(func=cmd_compile)

    c = sub.add_parser("compose", help="wire the output of one CRC into an input of another")
    c.add_argument("upstream")
    c.add_argument("downstream")
    c.add_argument("--wire", required=True, help="UP_OUT=DOWN_IN")
    c.add_argument("--suffix", default="~2")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compose)

    c = sub.add_parser("check", help="report obliviousness, feedforwardness and reachability facts")
    c.add_argument("net")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("exec", help="run the deterministic executor and print the output")
    c.add_argument("net")
    c.add_argument("--input", required=True, help='"X1=2,X2=3" or a state file')
    c.add_argument("--trace", action="store_true")
    c.add_argument("--state", action="store_true", help="print every species")
    c.set_defaults(func=cmd_exec)

    c = sub.add_parser("verify", help="compile a spec and cross-check oracle, LP bound and executor")
    c.add_argument("--spec", required=True)
    c.add_argument("--samples", type=int, default=20)
    c.add_argument("--seed", type=int, default=_default_seed())
    c.add_argument("--pairs", type=int, default=200)
    c.add_argument("--adversarial", type=int, default=0, metavar="STEPS")
    c.add_argument("--walks", type=int, default=3, help="walks per input with --adversarial")
    c.add_argument("--mass-action", action="store_true")
    c.add_argument("--mass-action-samples", type=int, default=3)
    c.add_argument("--t-end", type=float, default=1e5)
    c.add_argument("--evaluator", choices=["spec", "max"], default="spec",
                   help="function used by the sampled superadditivity check")
    c.add_argument("--prune", action="store_true")
    c.add_argument("--bimolecular", action="store_true")
    c.set_defaults(func=cmd_verify)

    c = sub.add_parser("maxout", help="exact supremum of the output over reachable states")
    c.add_argument("net")
    c.add_argument("--input", required=True)
    c.add_argument("--json", action="store_true")
    c.add_argument("--trace", action="store_true")
    c.set_defaults(func=cmd_maxout)

    c = sub.add_parser("simulate", help="mass-action ODE simulation")
    c.add_argument("net")
    c.add_argument("--input", required=True)
    c.add_argument("--rates", help="one rate for all reactions or a comma list")
    c.add_argument("--t-end", type=float, default=100.0)
    c.add_argument("--tol", type=float, default=1e-6, help="derivative sup-norm for convergence")
    c.add_argument("--atol", type=float, default=1e-9)
    c.add_argument("--rtol", type=float, default=1e-9)
    c.add_argument("--method", choices=["RK45", "DOP853"], default="RK45")
    c.add_argument("--until-converged", action="store_true", help="stop as soon as the derivative is below --tol")
    c.add_argument("--csv")
    c.set_defaults(func=cmd_simulate)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return BAD_INPUT if exc.code else OK
    try:
        return args.func(args)
    except (UsageError, CrnSyntaxError, CrnError, SpecError, ValidationFailed, NotFeedforward,
            UnboundedOutput, json.JSONDecodeError, ValueError, KeyError) as exc:
        print(f"crnc: error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except (AssertionError, NonTerminating) as exc:
        print(f"crnc: internal error: {exc}", file=sys.stderr)
        return INTERNAL


def main() -> int:
    return run(sys.argv[1:])
