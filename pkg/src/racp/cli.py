"""Command-line interface.

Exit codes: 0 success or equivalent, 1 not equivalent (or a failed check),
2 parse or usage error, 3 state or step budget exhausted, 4 phase mismatch,
5 execution stuck before completion.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from . import axioms, casestudy, lts, recursion
from .parser import ParseError, parse_comm, parse_spec, parse_term, render
from .sos import TERMINATED, engine
from .term import CommTable, TermError, Var, history_free, keys

EXIT_OK, EXIT_DIFFERENT, EXIT_PARSE, EXIT_BUDGET, EXIT_PHASE, EXIT_STUCK = range(6)

_PHASE_ALIASES = {"tau": "ARCP_RP_TAU", "arcp-rp-tau": "ARCP_RP_TAU", "arcp_rp_tau": "ARCP_RP_TAU"}
_MODE_ALIASES = {"full": lts.FULL_FR, "fr": lts.FULL_FR, "abstract": lts.FORWARD_ABSTRACT,
                 "forward_abstract": lts.FORWARD_ABSTRACT}


class UsageError(ValueError):
    pass


class Stuck(RuntimeError):
    def __init__(self, msg, state):
        super().__init__(msg)
        self.state = state


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)     # term texts
    spec: Optional[str] = None                     # path of a specification file
    comm: Optional[str] = None                     # path or inline rules
    phase: Optional[str] = None
    mode: str = lts.FULL_FR
    depth: Optional[int] = None
    budget: int = 100_000
    format: str = "text"
    seed: int = 0
    options: dict = field(default_factory=dict)    # command specific

    def __post_init__(self):
        if self.phase is not None:
            p = self.phase.strip()
            self.phase = _PHASE_ALIASES.get(p.lower(), p.upper())
            if self.phase not in axioms.PHASES:
                raise UsageError(f"unknown phase {p!r}; choose from {', '.join(axioms.PHASES)}")
        m = _MODE_ALIASES.get(str(self.mode).lower())
        if m is None:
            raise UsageError(f"unknown mode {self.mode!r}; use full or abstract")
        self.mode = m
        if self.format not in ("text", "dot", "json"):
            raise UsageError(f"unknown format {self.format!r}")


# ------------------------------------------------------------ input loading

@dataclass
class Context:
    gamma: CommTable
    defs: dict
    spec: Optional[object] = None      # the parsed SpecFile


def load_context(cfg: RunConfig) -> Context:
    sf = None
    gamma = CommTable()
    defs = {}
    if cfg.spec:
        with open(cfg.spec) as fh:
            sf = parse_spec(fh.read())
        gamma = sf.comm
        defs = sf.defs
    if cfg.comm:
        text = cfg.comm
        if os.path.exists(text):
            with open(text) as fh:
                text = fh.read()
        gamma = parse_comm(text.replace(";", "\n"), CommTable(gamma.rules()))
    return Context(gamma, defs, sf)


def term_of(text: Optional[str], ctx: Context):
    if text is not None:
        return parse_term(text)
    if ctx.spec is not None:
        if ctx.spec.initial is not None:
            return ctx.spec.initial
        if ctx.spec.equations:
            return Var(ctx.spec.equations[0][0])
    raise UsageError("no term given and no specification with an init statement")


def _need_depth(cfg, ctx):
    if ctx.defs and cfg.mode == lts.FULL_FR and cfg.depth is None:
        raise UsageError("a recursive specification in full mode needs --depth")


# ----------------------------------------------------------------- commands

def cmd_parse(cfg, ctx, out):
    if cfg.inputs:
        t = parse_term(cfg.inputs[0])
        if cfg.format == "json":
            out.write(json.dumps({"term": render(t), "keys": sorted(keys(t))}) + "\n")
        else:
            out.write(render(t) + "\n")
    elif ctx.spec is not None:
        from .parser import render_spec
        out.write(render_spec(ctx.spec))
    else:
        raise UsageError("parse needs a term or --spec")
    return EXIT_OK


def _lts_text(l) -> str:
    lines = [f"states {len(l)}, transitions {len(l.transitions)}, mode {l.mode}"
             + (", truncated" if l.truncated else "")]
    for i, s in enumerate(l.states):
        mark = "*" if i == l.root else " "
        fin = " (terminated)" if l.done[i] else ""
        lines.append(f"{mark}s{i}: {lts._state_text(s)}{fin}")
    for s, lab, d in l.transitions:
        lines.append(f"  s{s} --{lab}--> s{d}")
    return "\n".join(lines) + "\n"


def cmd_lts(cfg, ctx, out):
    _need_depth(cfg, ctx)
    t = term_of(cfg.inputs[0] if cfg.inputs else None, ctx)
    l = lts.generate(t, ctx.gamma, ctx.defs, cfg.mode, cfg.depth, cfg.budget)
    if cfg.format == "dot":
        out.write(lts.to_dot(l))
    elif cfg.format == "json":
        out.write(lts.to_json(l))
    else:
        out.write(_lts_text(l))
    return EXIT_OK


def cmd_bisim(cfg, ctx, out):
    kind = cfg.options.get("kind", "fr")
    if len(cfg.inputs) != 2:
        raise UsageError("bisim needs two terms")
    _need_depth(cfg, ctx)
    t1, t2 = (parse_term(x) for x in cfg.inputs)
    res = lts.equivalent(t1, t2, kind, ctx.gamma, ctx.defs, cfg.mode, cfg.depth, cfg.budget)
    if cfg.format == "json":
        out.write(json.dumps({"equivalent": res.equivalent, "kind": kind,
                              "witness": res.witness}) + "\n")
    elif res.equivalent:
        out.write("equivalent\n")
    else:
        out.write("not equivalent\n")
        for w in res.witness:
            out.write(f"  {w}\n")
    return EXIT_OK if res.equivalent else EXIT_DIFFERENT


def cmd_normalize(cfg, ctx, out):
    phase = cfg.phase or "ARCP_RP_TAU"
    t = parse_term(cfg.inputs[0]) if cfg.inputs else term_of(None, ctx)
    res = axioms.normalize(t, phase, ctx.gamma, check_weight=False,
                           max_steps=cfg.options.get("max_steps", 10_000))
    if cfg.format == "json":
        out.write(json.dumps({
            "normal_form": render(res.term), "phase": phase,
            "steps": [{"rule": s.rule, "redex": render(s.before), "contractum": render(s.after),
                       "weight_before": str(axioms.weight(s.before, phase, False)),
                       "weight_after": str(axioms.weight(s.after, phase, False))} for s in res.steps],
            "violations": len(res.violations)}) + "\n")
    else:
        out.write(render(res.term) + "\n")
        if cfg.options.get("trace", True):
            bad = {id(v) for v in res.violations}
            for s in res.steps:
                w0, w1 = axioms.weight(s.before, phase, False), axioms.weight(s.after, phase, False)
                rel = "NOT decreased:" if id(s) in bad else ">"
                out.write(f"  {s.rule:5} {render(s.before)} -> {render(s.after)}"
                          f"   weight {w0} {rel} {w1}\n")
    if res.violations:
        sys.stderr.write(f"warning: {len(res.violations)} step(s) did not decrease the {phase} weight\n")
    return EXIT_OK


# -------------------------------------------------------------- execution

def run_forward(t, gamma=None, defs=None, out=None, max_steps=10_000):
    """Follow the smallest enabled forward label until no step remains.
    Raises Stuck unless the final state is successfully terminated."""
    eng = engine(gamma, defs)
    s = t
    trace = []
    for _ in range(max_steps):
        if s is TERMINATED:
            break
        st = eng.forward_steps(s)
        if not st:
            break
        step = st[0]
        trace.append(step)
        if out is not None:
            out.write(f"  {step.label}  ->  {lts._state_text(step.target)}\n")
        s = step.target
    else:
        raise axioms.StepBudgetExceeded(f"no completion within {max_steps} steps")
    if not eng.terminated(s) and not eng.done(s):
        raise Stuck("forward execution stuck before completion", s)
    return s, trace


def run_reverse(t, gamma=None, defs=None, out=None, max_steps=10_000):
    """Undo the smallest enabled reverse label until the term is history free."""
    eng = engine(gamma, defs)
    s = t
    trace = []
    for _ in range(max_steps):
        st = eng.reverse_steps(s)
        if not st:
            break
        step = st[0]
        trace.append(step)
        if out is not None:
            out.write(f"  {step.label}  ->  {lts._state_text(step.target)}\n")
        s = step.target
    else:
        raise axioms.StepBudgetExceeded(f"no completion within {max_steps} steps")
    if not history_free(s):
        raise Stuck("reverse execution stuck before completion", s)
    return s, trace


def cmd_run(cfg, ctx, out):
    direction = cfg.options.get("direction", "forward")
    if cfg.options.get("case_study"):
        t, gamma = casestudy.composed_term()
    else:
        t, gamma = term_of(cfg.inputs[0] if cfg.inputs else None, ctx), ctx.gamma
    out.write(f"start: {render(t)}\n")
    if direction in ("forward", "roundtrip"):
        peak, tr = run_forward(t, gamma, ctx.defs, out)
        out.write(f"forward done after {len(tr)} steps: {lts._state_text(peak)}\n")
        if peak is not TERMINATED:
            out.write(f"histories: {len(keys(peak))}\n")
    else:
        peak = t
    if direction in ("reverse", "roundtrip"):
        if peak is TERMINATED:
            raise Stuck("the run terminated without recording histories", peak)
        back, tr = run_reverse(peak, gamma, ctx.defs, out)
        out.write(f"reverse done after {len(tr)} steps: {render(back)}\n")
        if direction == "roundtrip":
            same = back == t
            out.write("original restored\n" if same else "original NOT restored\n")
            return EXIT_OK if same else EXIT_DIFFERENT
    return EXIT_OK


def cmd_step(cfg, ctx, out, inp=None):
    inp = inp or sys.stdin
    t = term_of(cfg.inputs[0] if cfg.inputs else None, ctx)
    eng = engine(ctx.gamma, ctx.defs)
    while True:
        out.write(f"state: {lts._state_text(t)}\n")
        if t is TERMINATED:
            return EXIT_OK
        st = eng.forward_steps(t) + eng.reverse_steps(t)
        if not st:
            out.write("no enabled steps\n")
            return EXIT_OK
        for i, s in enumerate(st):
            out.write(f"  [{i}] {s.label}\n")
        out.write("choose index (q to quit): ")
        out.flush()
        line = inp.readline()
        if not line or line.strip() in ("q", "quit"):
            out.write("\n")
            return EXIT_OK
        try:
            t = st[int(line.strip())].target
        except (ValueError, IndexError):
            out.write("invalid choice\n")


def cmd_casestudy(cfg, ctx, out):
    gamma = None
    drop = cfg.options.get("drop_comm")
    if drop:
        gamma = casestudy.load("protocol").comm.without(*drop)
    t0 = time.perf_counter()
    rep = casestudy.run(gamma, cfg.budget, dot=cfg.format == "dot")
    if cfg.format == "dot":
        out.write(rep.dot)
        return EXIT_OK if rep.ok else EXIT_DIFFERENT
    if cfg.format == "json":
        out.write(json.dumps({"forward_states": rep.forward_states,
                              "matches_expected": rep.renaming is not None,
                              "equivalent": rep.result.equivalent,
                              "witness": rep.result.witness}) + "\n")
        return EXIT_OK if rep.ok else EXIT_DIFFERENT
    out.write(f"derived linear specification ({rep.forward_states} variables):\n")
    for x, rhs in rep.derived.equations.items():
        out.write(f"  {x} = {render(rhs, spec_vars=True)}\n")
    if rep.renaming is not None:
        out.write("matches the expected specification up to renaming\n")
    else:
        out.write("does NOT match the expected specification\n")
    if rep.result.equivalent:
        out.write("hidden system is rooted branching equivalent to the buffer\n")
    else:
        out.write("hidden system is NOT rooted branching equivalent to the buffer\n")
        for w in rep.result.witness:
            out.write(f"  {w}\n")
    out.write(f"time {time.perf_counter() - t0:.2f}s\n")
    return EXIT_OK if rep.ok else EXIT_DIFFERENT


def cmd_axioms(cfg, ctx, out):
    out.write(axioms.rule_listing(cfg.phase))
    return EXIT_OK


def cmd_soundness(cfg, ctx, out):
    ids = cfg.options.get("rules") or [r.id for r in axioms.soundness_rules()]
    samples = cfg.options.get("samples", 100)
    bad = 0
    for rid in ids:
        if rid not in axioms.RULE_BY_ID:
            raise UsageError(f"unknown rule {rid!r}")
        t0 = time.perf_counter()
        rep = axioms.soundness_check(rid, samples, seed=cfg.seed, budget=min(cfg.budget, 600))
        status = "PASS" if rep.ok else "FAIL"
        bad += not rep.ok
        out.write(f"{status} {rid:5} {rep.passed}/{rep.samples} skipped={rep.skipped}"
                  f" {time.perf_counter() - t0:.1f}s\n")
        if rep.failures and cfg.options.get("verbose"):
            lhs, rhs, wit = rep.failures[0]
            out.write(f"      {render(lhs)}  vs  {render(rhs)}: {'; '.join(wit)}\n")
    return EXIT_OK if not bad else EXIT_DIFFERENT


def cmd_guarded(cfg, ctx, out):
    if ctx.spec is None:
        raise UsageError("guarded needs --spec")
    spec = recursion.RecSpec.from_specfile(ctx.spec)
    try:
        g = recursion.check_guarded(spec)
        out.write(("guarded" if g else "not guarded") + f", linear={spec.linear}\n")
        return EXIT_OK if g else EXIT_DIFFERENT
    except recursion.GuardednessInconclusive as e:
        out.write(f"inconclusive: {e}\n")
        return EXIT_DIFFERENT


COMMANDS = {"parse": cmd_parse, "lts": cmd_lts, "dot": cmd_lts, "bisim": cmd_bisim,
            "normalize": cmd_normalize, "run": cmd_run, "step": cmd_step,
            "casestudy": cmd_casestudy, "axioms": cmd_axioms, "soundness": cmd_soundness,
            "guarded": cmd_guarded}


# ------------------------------------------------------------------ parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-s", "--spec", help="specification file")
    common.add_argument("--comm", help="communication rules, a file or inline 'a b = c; ...'")
    common.add_argument("--phase", help="axiom phase: brpa, rpap, arcp or tau")
    common.add_argument("--mode", default="full", help="transition system mode: full or abstract")
    common.add_argument("--depth", type=int, help="exploration depth bound")
    common.add_argument("--budget", type=int, default=100_000, help="state budget")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", default="text", choices=("text", "dot", "json"))

    p = argparse.ArgumentParser(prog="racp", description="Workbench for reversible ACP.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("parse", parents=[common], help="parse and print a term or spec")
    s.add_argument("term", nargs="?")
    for name in ("lts", "dot"):
        s = sub.add_parser(name, parents=[common], help="generate a transition system")
        s.add_argument("term", nargs="?")
        s.add_argument("--dot", action="store_true", help="same as --format dot")
    s = sub.add_parser("bisim", parents=[common], help="decide an equivalence")
    s.add_argument("kind", choices=sorted(lts.CHECKERS))
    s.add_argument("terms", nargs=2)
    s = sub.add_parser("normalize", parents=[common], help="rewrite to normal form")
    s.add_argument("term", nargs="?")
    s.add_argument("--no-trace", action="store_true")
    s = sub.add_parser("run", parents=[common], help="execute forward, reverse or both")
    s.add_argument("direction", choices=("forward", "reverse", "roundtrip"))
    s.add_argument("term", nargs="?")
    s.add_argument("--case-study", action="store_true", help="use the bundled composed protocol")
    s = sub.add_parser("step", parents=[common], help="interactive stepping")
    s.add_argument("term", nargs="?")
    s = sub.add_parser("casestudy", parents=[common], help="verify the travel booking protocol")
    s.add_argument("--dot", action="store_true", help="emit the abstract graph as DOT")
    s.add_argument("--drop-comm", nargs=2, metavar=("A", "B"),
                   help="remove one communication rule (negative control)")
    s = sub.add_parser("axioms", parents=[common], help="list the axiom table")
    s.add_argument("action", choices=("list",))
    s = sub.add_parser("soundness", parents=[common], help="sample axiom instances")
    s.add_argument("rules", nargs="*")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("-v", "--verbose", action="store_true")
    s = sub.add_parser("guarded", parents=[common], help="check guardedness of --spec")
    return p


def config_from_args(ns) -> RunConfig:
    cmd = ns.command
    fmt = ns.format
    if getattr(ns, "dot", False) or cmd == "dot":
        fmt = "dot"
    inputs = []
    if getattr(ns, "term", None) is not None:
        inputs = [ns.term]
    if cmd == "bisim":
        inputs = list(ns.terms)
    opts = {}
    if cmd == "bisim":
        opts["kind"] = ns.kind
    if cmd == "normalize":
        opts["trace"] = not ns.no_trace
    if cmd == "run":
        opts["direction"] = ns.direction
        opts["case_study"] = ns.case_study
    if cmd == "casestudy":
        opts["drop_comm"] = ns.drop_comm
    if cmd == "soundness":
        opts.update(rules=ns.rules, samples=ns.samples, verbose=ns.verbose)
    return RunConfig(cmd, inputs, ns.spec, ns.comm, ns.phase, ns.mode, ns.depth,
                     ns.budget, fmt, ns.seed, opts)


def execute(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    random.seed(cfg.seed)
    try:
        ctx = load_context(cfg)
        return COMMANDS[cfg.command](cfg, ctx, out)
    except ParseError as e:
        err.write(f"parse error: {e}\n")
        return EXIT_PARSE
    except (lts.BudgetExceeded, axioms.StepBudgetExceeded) as e:
        err.write(f"budget exceeded: {e}\n")
        return EXIT_BUDGET
    except axioms.PhaseError as e:
        err.write(f"phase mismatch: {e}\n")
        return EXIT_PHASE
    except Stuck as e:
        err.write(f"stuck: {e}\n  state: {lts._state_text(e.state)}\n")
        return EXIT_STUCK
    except (UsageError, TermError, lts.ModeMismatch, OSError) as e:
        err.write(f"error: {e}\n")
        return EXIT_PARSE


def main(argv=None) -> int:
    p = build_parser()
    ns = p.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_PARSE
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
