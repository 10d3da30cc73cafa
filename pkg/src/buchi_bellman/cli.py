"""Command-line front end.

Exit codes: 0 on success, 2 for bad input or usage, 3 when a well-formed
input fails an operation's precondition, 1 for internal defects.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from . import builtin_models
from .bellman import METHODS, SurrogateReward, build_system, certify, evaluate, gershgorin_bound
from .chain import class_counts, decompose, format_table, induce_chain
from .errors import BuchiBellmanError, InputError, PreconditionError
from .generate import random_chain
from .model_io import LDBA, chain_policy, parse_model, parse_policy, serialize_model
from .oracles import mc_return
from .product import build_product
from .report import RunConfig, dumps, envelope
from .rl_eval import TdConfig, pathology_demo, td_evaluate

SEED_ENV = "BUCHI_BELLMAN_SEED"


def _read(ref: str) -> str:
    if ref.startswith("builtin:"):
        try:
            return builtin_models.document(ref)
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
    try:
        return Path(ref).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {ref}: {exc.strerror}") from None


def _model(ref):
    m = parse_model(_read(ref))
    if isinstance(m, LDBA):
        raise InputError(f"{ref} is an LDBA; an MDP or product is needed here")
    return m


def _chain(args):
    m = _model(args.model)
    pol = chain_policy(m) if args.policy is None else parse_policy(_read(args.policy), m)
    return m, induce_chain(m, pol)


def _seed(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"{SEED_ENV}={env!r} is not an integer") from None


def _destination(args, default_format="json"):
    """Split ``--out`` into (path, format): ``json``/``csv`` pick a format
    for standard output, anything else is a path ('-' for standard output)."""
    out = args.out
    if out in ("json", "csv"):
        return "-", out
    if out != "-" and out.endswith(".csv"):
        return out, "csv"
    return out, default_format


def _write(text: str, dest: str):
    if not text.endswith("\n"):
        text += "\n"
    if dest == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(dest).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write {dest}: {exc.strerror}") from None


def _config(args, argv, fmt, dest, seed=None) -> RunConfig:
    skip = {"func", "model", "policy", "ldba", "out", "command", "target"}
    flags = {k: v for k, v in vars(args).items() if k not in skip}
    inputs = {k: getattr(args, k) for k in ("model", "policy", "ldba") if getattr(args, k, None)}
    name = args.command if getattr(args, "target", None) is None else f"{args.command} {args.target}"
    return RunConfig(name, list(argv), inputs, dest, fmt, seed, flags)


def _report(args, argv, result, seed=None):
    dest, fmt = _destination(args)
    _write(dumps(envelope(_config(args, argv, "json", dest, seed), result)), dest)


def _reward(args) -> SurrogateReward:
    return SurrogateReward(args.gamma, args.gamma_b)


# commands

def cmd_product(args, argv):
    m = _model(args.model)
    a = parse_model(_read(args.ldba))
    if not isinstance(a, LDBA):
        raise InputError(f"{args.ldba} is not an LDBA document")
    p = build_product(m, a)
    dest, _ = _destination(args)
    _write(serialize_model(p), dest)


def cmd_bscc(args, argv):
    _, chain = _chain(args)
    part = decompose(chain)
    states = list(chain.states)
    result = {
        "states": states,
        "classes": {s: str(c) for s, c in zip(states, part.classes)},
        "sccs": [[states[i] for i in comp] for comp in part.sccs],
        "bsccs": [
            {"states": [states[i] for i in comp], "accepting": bool(acc)}
            for comp, bottom, acc in zip(part.sccs, part.bottom, part.accepting_bscc) if bottom
        ],
        "unreachable": [states[i] for i in part.unreachable],
        "counts": class_counts(part).as_dict(),
    }
    sys.stderr.write(format_table(chain, part) + "\n")
    _report(args, argv, result)


def cmd_evaluate(args, argv):
    _, chain = _chain(args)
    part = decompose(chain)
    reward = _reward(args)
    sol = evaluate(chain, reward, args.method, part)
    dest, fmt = _destination(args)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["state", "id", "class", "value"])
        for i, (s, c, v) in enumerate(zip(chain.states, part.classes, sol.V)):
            w.writerow([i, s, str(c), repr(float(v))])
        _write(buf.getvalue(), dest)
        return
    result = sol.as_dict(chain.states)
    result["classes"] = {s: str(c) for s, c in zip(chain.states, part.classes)}
    if reward.gamma < 1.0:
        result["gershgorin_bound"] = gershgorin_bound(build_system(chain, reward))
    _write(dumps(envelope(_config(args, argv, "json", dest), result)), dest)


def cmd_certify(args, argv):
    _, chain = _chain(args)
    cert = certify(chain, decompose(chain), _reward(args))
    _report(args, argv, cert.as_dict(chain.states))


def _state_index(chain, state):
    if state is None:
        return chain.initial
    if state not in chain.states:
        raise InputError(f"unknown state {state!r}")
    return chain.states.index(state)


def cmd_mc_return(args, argv):
    _, chain = _chain(args)
    seed = _seed(args)
    s = _state_index(chain, args.state)
    try:
        est = mc_return(chain, decompose(chain), _reward(args), s, args.samples, seed, args.mode)
    except ValueError as exc:
        if isinstance(exc, BuchiBellmanError):
            raise
        raise InputError(str(exc)) from None
    result = est.as_dict()
    result["state"] = chain.states[s]
    _report(args, argv, result, seed)


def _assignments(items, flag):
    out = {}
    for item in items or ():
        name, sep, value = item.rpartition("=")
        if not sep or not name:
            raise InputError(f"{flag} expects STATE=VALUE, got {item!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise InputError(f"{flag} {item!r}: {value!r} is not a number") from None
    return out


def _init(text):
    if text == "zeros":
        return "zeros"
    try:
        return float(text)
    except ValueError:
        pass
    return _assignments(text.split(","), "--init")


def cmd_td(args, argv):
    _, chain = _chain(args)
    part = decompose(chain)
    reward = _reward(args)
    seed = _seed(args)
    pinned = _assignments(args.pin, "--pin")
    if args.pin_rejecting:
        for comp in part.rejecting_bsccs:
            for i in comp:
                pinned.setdefault(chain.states[i], 0.0)
    try:
        cfg = TdConfig(args.episodes, args.max_steps, args.a0, args.tau, seed, _init(args.init), pinned)
        cfg.initial_values(list(chain.states))
    except ValueError as exc:
        if isinstance(exc, BuchiBellmanError):
            raise
        raise InputError(str(exc)) from None
    reference = evaluate(chain, reward, "auto", part).V
    res = td_evaluate(chain, part, reward, cfg, reference)
    result = res.as_dict(chain.states)
    result["config"] = cfg.as_dict()
    result["reference"] = {s: float(v) for s, v in zip(chain.states, reference)}
    _report(args, argv, result, seed)


def cmd_demo(args, argv):
    seed = _seed(args)
    if args.c == 0:
        raise InputError("--c must be nonzero")
    rep = pathology_demo(args.gamma_b, args.c, seed, args.episodes)
    lines = [
        f"null_space_dim={rep['null_space_dim']} unique={rep['certificate']['unique']}",
        "family residuals: " + ", ".join(f"c={k}: {v:.1e}" for k, v in rep["family_residuals"].items()),
        f"greedy at s1: spurious c={args.c} -> {rep['greedy_with_spurious']}, "
        f"constrained -> {rep['greedy_with_constrained']}",
        f"TD unpinned: {rep['td_final']}",
        f"TD pinned s3=0: {rep['td_pinned']}",
    ]
    sys.stderr.write("\n".join(lines) + "\n")
    _report(args, argv, rep, seed)


def cmd_gen(args, argv):
    try:
        g = random_chain(args.states, _seed(args), args.rejecting_bsccs, args.accepting_bsccs,
                         args.accepting_states, args.actions)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    dest, _ = _destination(args)
    _write(serialize_model(g.model), dest)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="buchi-bellman", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def out_flag(p):
        p.add_argument("--out", default="-",
                       help="'json' or 'csv' for standard output, or a path ('-' = standard output)")

    def model_flags(p):
        p.add_argument("--model", required=True, help="model path or builtin:NAME")
        p.add_argument("--policy", help="policy path or builtin:NAME (optional for chains)")

    def discount_flags(p, gamma=None):
        p.add_argument("--gamma", type=float, required=gamma is None, default=gamma)
        p.add_argument("--gamma-b", type=float, required=True)

    def seed_flag(p):
        p.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV}, else 0")

    p = sub.add_parser("product", help="product of an MDP with an LDBA")
    p.add_argument("--model", required=True)
    p.add_argument("--ldba", required=True)
    out_flag(p)
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("bscc", help="SCC/BSCC partition of the induced chain")
    model_flags(p)
    out_flag(p)
    p.set_defaults(func=cmd_bscc)

    p = sub.add_parser("evaluate", help="solve the Bellman equation")
    model_flags(p)
    discount_flags(p)
    p.add_argument("--method", choices=METHODS, default="auto")
    out_flag(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("certify", help="uniqueness certificate")
    model_flags(p)
    discount_flags(p)
    out_flag(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("mc-return", help="Monte Carlo return estimate")
    model_flags(p)
    discount_flags(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--mode", default="bscc-aware", help="bscc-aware or cap:K")
    p.add_argument("--state", help="start state id (default: initial)")
    seed_flag(p)
    out_flag(p)
    p.set_defaults(func=cmd_mc_return)

    p = sub.add_parser("td", help="tabular TD(0) evaluation")
    model_flags(p)
    discount_flags(p)
    p.add_argument("--episodes", type=int, default=50_000)
    p.add_argument("--max-steps", type=int, default=1_000)
    p.add_argument("--a0", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=1_000.0)
    p.add_argument("--init", default="zeros", help="zeros, a constant, or S=V,S=V,…")
    p.add_argument("--pin", action="append", metavar="STATE=VALUE")
    p.add_argument("--pin-rejecting", action="store_true", help="pin rejecting-BSCC states to 0")
    seed_flag(p)
    out_flag(p)
    p.set_defaults(func=cmd_td)

    p = sub.add_parser("demo", help="scripted demonstrations")
    p.add_argument("target", choices=["example1"])
    p.add_argument("--gamma-b", type=float, default=0.5)
    p.add_argument("--c", type=float, default=2.0, help="spurious value injected at s3")
    p.add_argument("--episodes", type=int, default=50_000)
    seed_flag(p)
    out_flag(p)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("gen", help="generators")
    p.add_argument("target", choices=["random"])
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--rejecting-bsccs", type=int, default=1)
    p.add_argument("--accepting-bsccs", type=int, default=1)
    p.add_argument("--accepting-states", type=int, default=None)
    p.add_argument("--actions", type=int, default=1)
    seed_flag(p)
    out_flag(p)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, argv)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except PreconditionError as exc:
        sys.stderr.write(f"precondition failed: {type(exc).__name__}: {exc}\n")
        return 3
    except BuchiBellmanError as exc:
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
