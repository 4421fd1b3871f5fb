"""Command line interface.

Subcommands: typecheck, check-policy, eval, denote, nf.  Every flag has a
HISTCOV_* environment variable fallback.  Exit codes: 0 success, 1 type or
input errors, 2 policy violation, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import json
import os
import shlex
import sys

from . import logic
from . import policy as policy_mod
from .pretty import pp_hist, pp_trace, pp_type
from .denote import DenoteError, denote
from .evaluator import run_all, run_random
from .histexpr import HistError, seq
from .parser import ParseError, parse_history, parse_program
from .registry import Registry, RegistryError, parse_resource_context
from .typecheck import Checker, TypingError, wf_check

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_POLICY_FAIL = 2
EXIT_INCONCLUSIVE = 3


def _env(name: str, default=None):
    return os.environ.get(f"HISTCOV_{name}", default)


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="histcov",
        description="Static analysis for coverage-typed programs with "
                    "history effects")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_policy=False):
        p.add_argument("input", help="input file")
        p.add_argument("--ctx", default=_env("CTX"),
                       help="resource context JSON file")
        if needs_policy:
            p.add_argument("--policy", default=_env("POLICY"),
                           help="policy file (.pol)")
        p.add_argument("--universe-int", type=int,
                       default=int(_env("UNIVERSE_INT", 8)),
                       help="bound N for the int universe [-N..N]")
        p.add_argument("--mu-depth", type=int,
                       default=int(_env("MU_DEPTH", 16)),
                       help="recursion unfolding depth for denotation")
        p.add_argument("--budget", type=int,
                       default=int(_env("BUDGET", 100000)),
                       help="step budget for evaluation")
        p.add_argument("--solver", choices=("builtin", "smt"),
                       default=_env("SOLVER", "builtin"))
        p.add_argument("--seed", type=int, default=int(_env("SEED", 0)))
        p.add_argument("--format", choices=("text", "json"),
                       default=_env("FORMAT", "text"))

    common(sub.add_parser("typecheck", help="synthesize and report a type"))
    common(sub.add_parser("check-policy", help="verify a policy"),
           needs_policy=True)
    common(sub.add_parser("eval", help="run the reference interpreter"))
    common(sub.add_parser("denote", help="enumerate terminal histories"))
    common(sub.add_parser("nf", help="convert a history to Normal Form"))
    return ap


def load_registry(args) -> Registry:
    reg = Registry()
    if getattr(args, "ctx", None):
        with open(args.ctx) as fh:
            reg = parse_resource_context(fh.read(), reg)
    reg.universe_config["int_bound"] = args.universe_int
    return reg


def make_checker(args, reg: Registry) -> Checker:
    backend = None
    if args.solver == "smt":
        cmd = shlex.split(_env("SMT_CMD", "z3 -in"))
        backend = logic.SmtBackend(cmd)
    return Checker(reg, reg.make_universe(), depth=args.mu_depth,
                   backend=backend)


def emit(args, data: dict, text_lines):
    if args.format == "json":
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _synthesize(args, reg: Registry):
    term = parse_program(_read(args.input), reg)
    chk = make_checker(args, reg)
    pi = chk.synthesize([], term)
    return chk, pi


def cmd_typecheck(args) -> int:
    reg = load_registry(args)
    try:
        chk, pi = _synthesize(args, reg)
    except (ParseError, TypingError, RegistryError) as e:
        emit(args, {"ok": False, "error": str(e)}, [f"error: {e}"])
        return EXIT_ERROR
    violations = [str(v) for v in wf_check([], pi)]
    try:
        nf = pp_hist(chk.nf(pi.effect))
    except HistError as e:
        nf = f"<no normal form: {e}>"
    data = {"ok": not violations,
            "type": pp_type(pi.tau),
            "effect": pp_hist(pi.effect),
            "effect_nf": nf,
            "violations": violations}
    lines = [f"type:   {data['type']}",
             f"effect: {data['effect']}",
             f"nf:     {nf}"]
    lines += [f"violation: {v}" for v in violations]
    emit(args, data, lines)
    return EXIT_OK if not violations else EXIT_ERROR


def cmd_check_policy(args) -> int:
    reg = load_registry(args)
    if not args.policy:
        emit(args, {"error": "no policy given"}, ["error: no policy given"])
        return EXIT_ERROR
    try:
        chk, pi = _synthesize(args, reg)
        pol = policy_mod.parse_policy(_read(args.policy), reg)
        verdict = policy_mod.check_policy(pi.effect, [], pol, reg,
                                          reg.make_universe(),
                                          depth=args.mu_depth)
    except (ParseError, TypingError, RegistryError, DenoteError,
            policy_mod.PolicyError) as e:
        emit(args, {"status": "error", "error": str(e)}, [f"error: {e}"])
        return EXIT_ERROR
    ce = (pp_trace(verdict.counterexample)
          if verdict.counterexample is not None else None)
    data = {"status": verdict.status, "detail": verdict.detail,
            "counterexample": ce}
    lines = [f"policy: {verdict.status} ({verdict.detail})"]
    if ce is not None:
        lines.append("counterexample:")
        lines += ["  " + l for l in ce.splitlines()]
    emit(args, data, lines)
    if verdict.status == "pass":
        return EXIT_OK
    if verdict.status == "fail":
        return EXIT_POLICY_FAIL
    return EXIT_INCONCLUSIVE


def cmd_eval(args) -> int:
    reg = load_registry(args)
    try:
        term = parse_program(_read(args.input), reg)
        out = run_all(term, reg, reg.make_universe(), depth=args.mu_depth,
                      budget=args.budget)
        sample = run_random(term, reg, reg.make_universe(), seed=args.seed,
                            depth=args.mu_depth, budget=args.budget)
    except (ParseError, RegistryError) as e:
        emit(args, {"error": str(e)}, [f"error: {e}"])
        return EXIT_ERROR
    runs = [{"kind": r.kind,
             "value": repr(r.value),
             "trace": pp_trace(r.trace)} for r in out.runs]
    data = {"complete": out.complete, "runs": runs,
            "random_sample": {"kind": sample.kind, "value": repr(sample.value),
                              "trace": pp_trace(sample.trace)}}
    lines = [f"runs: {len(runs)} (complete={out.complete})"]
    for r in runs:
        tr = r["trace"].replace("\n", " . ")
        lines.append(f"  [{r['kind']}] {r['value']}  trace: {tr}")
    emit(args, data, lines)
    return EXIT_OK


def _input_history(args, reg: Registry):
    src = _read(args.input)
    if args.input.endswith(".hist"):
        return parse_history(src, reg), []
    term = parse_program(src, reg)
    chk = make_checker(args, reg)
    pi = chk.synthesize([], term)
    return pi.effect, []


def cmd_denote(args) -> int:
    reg = load_registry(args)
    try:
        h, gamma = _input_history(args, reg)
        res = denote(h, reg.delta, reg.make_universe(), reg,
                     depth=args.mu_depth)
    except (ParseError, TypingError, RegistryError, DenoteError) as e:
        emit(args, {"error": str(e)}, [f"error: {e}"])
        return EXIT_ERROR
    hists = [pp_trace(hh).replace("\n", " . ") for hh in res.histories]
    data = {"complete": res.complete, "histories": hists}
    lines = [f"histories: {len(hists)} (complete={res.complete})"]
    lines += ["  " + s for s in hists]
    emit(args, data, lines)
    return EXIT_OK if res.complete else EXIT_INCONCLUSIVE


def cmd_nf(args) -> int:
    reg = load_registry(args)
    try:
        h = parse_history(_read(args.input), reg)
        chk = make_checker(args, reg)
        nf = chk.nf(h)
    except (ParseError, HistError, RegistryError) as e:
        emit(args, {"error": str(e)}, [f"error: {e}"])
        return EXIT_ERROR
    data = {"normal_form": pp_hist(nf)}
    emit(args, data, [data["normal_form"]])
    return EXIT_OK


COMMANDS = {
    "typecheck": cmd_typecheck,
    "check-policy": cmd_check_policy,
    "eval": cmd_eval,
    "denote": cmd_denote,
    "nf": cmd_nf,
}


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
