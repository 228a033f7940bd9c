"""Command-line interface.

Exit codes: 0 the property holds (or the final verdict is TRUE), 1 it fails
(FALSE), 2 usage or input error, 3 infeasible observation or exhausted state
budget, 4 no verdict yet (UNKNOWN, INCONCLUSIVE or UGLY).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import analyses
from .analyses import CheckResult, PrefixClass
from .errors import InputError, ParseError, PreconditionError, ResourceError, RvkError, VocabularyError
from .formats import (load_machine, load_nfa, parse_system_file, parse_trace, parse_word,
                      print_machine, print_system)
from .logic import desugar, parse_formula
from .monitor import Verdict, start_session, step, synthesize_diagnoser, synthesize_monitor, verdict_machine

EXIT_HOLDS, EXIT_FAILS, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_UNDECIDED = 0, 1, 2, 3, 4


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _system(args):
    parsed = parse_system_file(_read(args.system))
    return parsed.vocab, parsed.automaton


def _word_json(vocab, word):
    return [vocab.format_event(e) for e in word]


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _report(args, vocab, result: CheckResult, label: str) -> int:
    payload: dict = {"result": result.holds}
    lines = [f"{label}: {'holds' if result.holds else 'fails'}"]
    if result.witness is not None:
        w = result.witness
        payload["witness"] = {"stem": _word_json(vocab, w.stem), "loop": _word_json(vocab, w.loop),
                              "position": result.position}
        lines.append(f"witness: {vocab.format_word(w.stem)} ({vocab.format_word(w.loop)})^w"
                     f" at position {result.position}")
    if result.observation is not None:
        payload["witness"] = {"observation": _word_json(vocab, result.observation)}
        lines.append(f"ugly prefix: {vocab.format_word(result.observation) or 'empty'}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_HOLDS if result.holds else EXIT_FAILS


# -- subcommands ---------------------------------------------------------------

def cmd_check(args) -> int:
    vocab, system = _system(args)
    formula = parse_formula(args.formula)
    if args.oracle:
        from .oracle import Oracle, OracleConfig

        oracle = Oracle(system, OracleConfig(args.stem_bound, args.loop_bound))
        core = desugar(formula, vocab)
        bad = next((w for w in oracle.lassos if not oracle.evaluate(w, 1, core)), None)
        result = CheckResult(bad is None, bad, None if bad is None else 1)
        return _report(args, vocab, result, "oracle check")
    return _report(args, vocab, analyses.model_check(system, formula), "check")


def cmd_diagnosable(args) -> int:
    vocab, system = _system(args)
    if args.unbounded:
        if args.direct or args.negative:
            raise PreconditionError("--unbounded cannot be combined with --direct or --negative")
        result = analyses.check_diagnosable(system, args.agent, args.error, None)
        return _report(args, vocab, result, "unbounded P-diagnosable")
    if args.delay is None:
        raise PreconditionError("give --delay D or --unbounded")
    if args.direct:
        if args.negative:
            raise PreconditionError("the twin-plant check decides P-diagnosability; drop --negative")
        result = analyses.check_p_diagnosable_direct(system, args.agent, args.error, args.delay)
    else:
        result = analyses.check_diagnosable(system, args.agent, args.error, args.delay,
                                            negative=args.negative)
    kind = "N" if args.negative else "P"
    return _report(args, vocab, result, f"{args.delay}-{kind}-diagnosable")


def cmd_codiagnosable(args) -> int:
    vocab, system = _system(args)
    result = analyses.check_codiagnosable(system, args.error, args.delay, args.agents or None,
                                          negative=args.negative)
    kind = "N" if args.negative else "P"
    return _report(args, vocab, result, f"{args.delay}-{kind}-codiagnosable")


def cmd_opaque(args) -> int:
    vocab, system = _system(args)
    result = analyses.check_opacity(system, args.agent, args.secret, two_sided=args.two_sided)
    return _report(args, vocab, result, "two-sided opaque" if args.two_sided else "opaque")


def cmd_monitorable(args) -> int:
    vocab, system = _system(args)
    result = analyses.check_monitorability(system, args.agent, parse_formula(args.formula))
    return _report(args, vocab, result, "monitorable")


def cmd_classify(args) -> int:
    vocab, system = _system(args)
    if (args.prefix is None) == (args.trace is None):
        raise PreconditionError("give exactly one of --prefix and --trace")
    word = parse_word(args.prefix, vocab) if args.prefix is not None else parse_trace(_read(args.trace), vocab)
    mask = vocab.agent_mask(args.agent)
    word = [e & mask for e in word]
    cls = analyses.classify_prefix(system, args.agent, parse_formula(args.formula), word)
    payload = {"result": cls is PrefixClass.GOOD, "class": cls.value}
    _emit(args, payload, cls.value)
    return {PrefixClass.GOOD: EXIT_HOLDS, PrefixClass.BAD: EXIT_FAILS,
            PrefixClass.INFEASIBLE: EXIT_INFEASIBLE}.get(cls, EXIT_UNDECIDED)


def cmd_synth(args) -> int:
    vocab, system = _system(args)
    if args.diagnoser:
        if args.error is None:
            raise PreconditionError("--diagnoser needs --error")
        machine = verdict_machine(synthesize_diagnoser(system, args.agent, args.error))
    else:
        if args.formula is None:
            raise PreconditionError("give --formula or --diagnoser")
        machine = synthesize_monitor(system, args.agent, parse_formula(args.formula)).machine
    text = print_machine(machine)
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        if not args.json:
            print(f"wrote {machine.num_states}-state machine to {args.out}")
        else:
            print(json.dumps({"result": True, "states": machine.num_states}, sort_keys=True))
    else:
        sys.stdout.write(text)
    return EXIT_HOLDS


def _trace_lines(path):
    if path is None or path == "-":
        for line in sys.stdin:
            yield line
    else:
        with open(path, encoding="utf-8") as fh:
            yield from fh


def cmd_run(args) -> int:
    machine = load_machine(_read(args.monitor))
    vocab = machine.vocab
    mask = vocab.agent_mask(machine.agent) if machine.agent is not None else vocab.full_mask
    session = start_session(machine)
    verdicts = []
    for number, raw in enumerate(_trace_lines(args.trace), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            event = vocab.parse_event(line)
        except RvkError as exc:
            raise ParseError(str(exc), line=number) from None
        session, verdict = step(session, event & mask)
        verdicts.append(verdict)
        if not args.json:
            print(verdict.value, flush=True)
    final = session.verdict if verdicts else machine.outputs[machine.initial]
    if args.json:
        print(json.dumps({"result": final is Verdict.TRUE,
                          "verdicts": [v.value for v in verdicts]}, sort_keys=True))
    return {Verdict.TRUE: EXIT_HOLDS, Verdict.FALSE: EXIT_FAILS,
            Verdict.INFEASIBLE: EXIT_INFEASIBLE}.get(final, EXIT_UNDECIDED)


def cmd_gen_opacity_hard(args) -> int:
    nfa = load_nfa(_read(args.nfa))
    system = analyses.build_opacity_hardness_instance(nfa, agent=args.agent)
    text = print_system(system)
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_HOLDS


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rvk",
        description="Model checking, diagnosability, opacity and monitoring for "
                    "epistemic temporal properties of partially observed systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, system=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        if system:
            p.add_argument("--system", required=True, help="system file ('-' for stdin)")
        p.add_argument("--json", action="store_true", help="print a JSON object")
        p.set_defaults(func=func)
        return p

    p = command("check", cmd_check, "model check a formula at position 1 of every execution")
    p.add_argument("--formula", required=True)
    p.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--stem-bound", type=int, default=6, help=argparse.SUPPRESS)
    p.add_argument("--loop-bound", type=int, default=4, help=argparse.SUPPRESS)

    p = command("diagnosable", cmd_diagnosable, "decide (bounded or unbounded) diagnosability")
    p.add_argument("--agent", required=True)
    p.add_argument("--error", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--delay", type=int)
    group.add_argument("--unbounded", action="store_true")
    p.add_argument("--negative", action="store_true", help="N-diagnosability instead of P")
    p.add_argument("--direct", action="store_true", help="use the twin-plant search")

    p = command("codiagnosable", cmd_codiagnosable, "decide bounded codiagnosability")
    p.add_argument("--error", required=True)
    p.add_argument("--delay", type=int, required=True)
    p.add_argument("--agents", nargs="+", help="agents to combine (default: all)")
    p.add_argument("--negative", action="store_true")

    p = command("opaque", cmd_opaque, "decide opacity of a secret proposition")
    p.add_argument("--agent", required=True)
    p.add_argument("--secret", required=True)
    p.add_argument("--two-sided", action="store_true")

    p = command("monitorable", cmd_monitorable, "decide monitorability of a formula")
    p.add_argument("--agent", required=True)
    p.add_argument("--formula", required=True)

    p = command("classify", cmd_classify, "classify an observation prefix")
    p.add_argument("--agent", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--prefix", help="concatenated event literals, e.g. '{}{r}'")
    p.add_argument("--trace", help="trace file, one event per line")

    p = command("synth", cmd_synth, "synthesize a monitor or diagnoser machine file")
    p.add_argument("--agent", required=True)
    p.add_argument("--formula")
    p.add_argument("--diagnoser", action="store_true")
    p.add_argument("--error")
    p.add_argument("--out", help="output file (default stdout)")

    p = command("run", cmd_run, "run a machine file over an observation trace", system=False)
    p.add_argument("--monitor", required=True)
    p.add_argument("--trace", help="trace file (default stdin)")

    p = command("gen-opacity-hard", cmd_gen_opacity_hard,
                "build the opacity instance of an NFA universality question", system=False)
    p.add_argument("--nfa", required=True)
    p.add_argument("--agent", default="a")
    p.add_argument("--out")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"rvk: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ParseError, VocabularyError, PreconditionError, InputError, RvkError, OSError) as exc:
        print(f"rvk: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
