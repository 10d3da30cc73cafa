"""Model documents: labeled MDPs, LDBAs and memoryless policies.

All three are JSON documents distinguished by their ``"kind"`` field.
Parsing is strict: probabilities are checked, never renormalized, and every
reference to a state, action or atom must resolve. Dense indices follow
document order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import jsonschema

from .errors import (
    GuardSyntaxError,
    IllegalAction,
    InvariantViolation,
    MissingState,
    ModelSyntaxError,
    SchemaError,
    UnknownAtom,
)
from .guards import RESERVED, Guard, eval_guard

PROB_TOL = 1e-9
# Above this many distinct atoms under one automaton state, guard totality is
# not enumerated and the LDBA is reported as uncheckable.
MAX_GUARD_SUPPORT = 20

_ATOM = {"type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$", "not": {"enum": sorted(RESERVED)}}
_IDS = {"type": "array", "items": {"type": "string"}, "uniqueItems": True}

MDP_SCHEMA = {
    "type": "object",
    "required": ["kind", "states", "initial", "actions", "transitions"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["mdp", "product"]},
        "states": {**_IDS, "minItems": 1},
        "initial": {"type": "string"},
        "atoms": {"type": "array", "items": _ATOM, "uniqueItems": True},
        "labels": {"type": "object", "additionalProperties": _IDS},
        "actions": {"type": "object", "additionalProperties": {**_IDS, "minItems": 1}},
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "action", "to", "prob"],
                "additionalProperties": False,
                "properties": {
                    "from": {"type": "string"},
                    "action": {"type": "string"},
                    "to": {"type": "string"},
                    "prob": {"type": "number"},
                },
            },
        },
        "accepting": _IDS,
        "pairs": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
    },
}

LDBA_SCHEMA = {
    "type": "object",
    "required": ["kind", "states", "initial", "transitions", "components"],
    "additionalProperties": False,
    "properties": {
        "kind": {"const": "ldba"},
        "states": {**_IDS, "minItems": 1},
        "initial": {"type": "string"},
        "atoms": {"type": "array", "items": _ATOM, "uniqueItems": True},
        "accepting": _IDS,
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "guard", "to"],
                "additionalProperties": False,
                "properties": {
                    "from": {"type": "string"},
                    "guard": {"type": "string"},
                    "to": {"type": "string"},
                },
            },
        },
        "epsilon": {"type": "object", "additionalProperties": _IDS},
        "components": {
            "type": "object",
            "required": ["ini", "acc"],
            "additionalProperties": False,
            "properties": {"ini": _IDS, "acc": _IDS},
        },
    },
}

POLICY_SCHEMA = {
    "type": "object",
    "required": ["kind", "choice"],
    "additionalProperties": False,
    "properties": {
        "kind": {"const": "policy"},
        "choice": {"type": "object", "additionalProperties": {"type": "string"}},
    },
}


@dataclass(frozen=True)
class LabeledMDP:
    """A labeled MDP, optionally carrying an accepting set.

    ``transitions[(s, a)]`` lists ``(target, prob)`` pairs in document order.
    ``accepting`` is empty for a plain MDP and holds B for a (product) MDP
    used directly as a Büchi model.
    """

    states: tuple
    initial: str
    actions: Mapping[str, tuple]
    transitions: Mapping[tuple, tuple]
    atoms: tuple = ()
    labels: Mapping[str, frozenset] = field(default_factory=dict)
    accepting: frozenset = frozenset()

    kind = "mdp"

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def label(self, s) -> frozenset:
        return self.labels.get(s, frozenset())

    def successors(self, s, a) -> tuple:
        return self.transitions[(s, a)]

    @property
    def is_chain(self) -> bool:
        return all(len(self.actions[s]) == 1 for s in self.states)


@dataclass(frozen=True)
class ProductMDP(LabeledMDP):
    """Product of a labeled MDP and an LDBA; ``pairs[id] == (s, q)``."""

    pairs: Mapping[str, tuple] = field(default_factory=dict)

    kind = "product"


@dataclass(frozen=True)
class LDBA:
    aut_states: tuple
    initial: str
    atoms: tuple
    accepting: frozenset
    guarded: tuple  # ((q, Guard, q'), ...)
    epsilon: Mapping[str, tuple]
    ini: frozenset
    acc: frozenset

    kind = "ldba"

    def eps(self, q) -> tuple:
        return self.epsilon.get(q, ())

    def delta(self, q, letter) -> str:
        """The unique successor of ``q`` on ``letter`` (atoms outside the LDBA ignored)."""
        letter = frozenset(letter) & frozenset(self.atoms)
        hits = [t for (p, g, t) in self.guarded if p == q and eval_guard(g, letter)]
        if len(hits) != 1:
            raise InvariantViolation(f"{len(hits)} guards enabled at {q} on {_fmt_letter(letter, self.atoms)}")
        return hits[0]


@dataclass(frozen=True)
class Policy:
    choice: Mapping[str, str]

    def __getitem__(self, s):
        return self.choice[s]

    def get(self, s, default=None):
        return self.choice.get(s, default)


def _load(text):
    if isinstance(text, (dict, list)):
        return text
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, exc.lineno, exc.colno) from None


def _check_schema(doc, schema):
    validator = jsonschema.Draft202012Validator(schema)
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        path = "$" + "".join(f"[{p!r}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        raise SchemaError(path, err.message)


def parse_model(text, check: bool = True):
    """Parse an MDP, product or LDBA document.

    With ``check=False`` an LDBA is returned even when it violates the
    bipartition or guard conditions, so :func:`validate_ldba` can report them.
    """
    doc = _load(text)
    if not isinstance(doc, dict):
        raise SchemaError("$", "document must be a JSON object")
    kind = doc.get("kind")
    if kind in ("mdp", "product"):
        _check_schema(doc, MDP_SCHEMA)
        return _build_mdp(doc)
    if kind == "ldba":
        _check_schema(doc, LDBA_SCHEMA)
        aut = _build_ldba(doc)
        if check:
            violations = validate_ldba(aut)
            if violations:
                raise InvariantViolation("; ".join(violations))
        return aut
    raise SchemaError("$.kind", f"expected 'mdp', 'product' or 'ldba', got {kind!r}")


def _build_mdp(doc) -> LabeledMDP:
    states = tuple(doc["states"])
    known = set(states)
    atoms = tuple(doc.get("atoms", ()))
    if doc["initial"] not in known:
        raise InvariantViolation(f"initial state {doc['initial']!r} is not declared")

    actions = {}
    for s, acts in doc["actions"].items():
        if s not in known:
            raise InvariantViolation(f"actions given for undeclared state {s!r}")
        actions[s] = tuple(acts)
    for s in states:
        if s not in actions:
            raise InvariantViolation(f"state {s!r} has no allowed actions")
    actions = {s: actions[s] for s in states}

    labels = {}
    for s, names in doc.get("labels", {}).items():
        if s not in known:
            raise InvariantViolation(f"label given for undeclared state {s!r}")
        for name in names:
            if name not in atoms:
                raise InvariantViolation(f"label of {s!r} uses undeclared atom {name!r}")
        labels[s] = frozenset(names)

    rows = {}
    for k, t in enumerate(doc["transitions"]):
        s, a, s2, p = t["from"], t["action"], t["to"], t["prob"]
        where = f"transitions[{k}]"
        if s not in known or s2 not in known:
            raise InvariantViolation(f"{where}: undeclared state {(s if s not in known else s2)!r}")
        if a not in actions[s]:
            raise InvariantViolation(f"{where}: action {a!r} not allowed in {s!r}")
        if isinstance(p, bool) or not (0.0 < p <= 1.0):
            raise InvariantViolation(f"{where}: probability {p!r} outside (0, 1]")
        row = rows.setdefault((s, a), [])
        if any(x == s2 for x, _ in row):
            raise InvariantViolation(f"{where}: duplicate transition ({s}, {a}) -> {s2}")
        row.append((s2, float(p)))

    transitions = {}
    for s in states:
        for a in actions[s]:
            row = rows.get((s, a), [])
            total = sum(p for _, p in row)
            if abs(total - 1.0) > PROB_TOL:
                raise InvariantViolation(f"transition ({s}, {a}): probabilities sum to {total:.12g}")
            transitions[(s, a)] = tuple(row)

    accepting = doc.get("accepting", [])
    for s in accepting:
        if s not in known:
            raise InvariantViolation(f"accepting state {s!r} is not declared")

    fields = dict(
        states=states,
        initial=doc["initial"],
        actions=actions,
        transitions=transitions,
        atoms=atoms,
        labels={s: labels[s] for s in states if s in labels},
        accepting=frozenset(accepting),
    )
    if doc["kind"] == "product":
        pairs = doc.get("pairs")
        if pairs is None or set(pairs) != known:
            raise InvariantViolation("product document needs a 'pairs' entry for every state")
        return ProductMDP(**fields, pairs={s: tuple(pairs[s]) for s in states})
    if "pairs" in doc:
        raise SchemaError("$.pairs", "only product documents carry pairs")
    return LabeledMDP(**fields)


def _build_ldba(doc) -> LDBA:
    states = tuple(doc["states"])
    known = set(states)
    atoms = tuple(doc.get("atoms", ()))

    def need(q, what):
        if q not in known:
            raise InvariantViolation(f"{what} refers to undeclared automaton state {q!r}")

    need(doc["initial"], "initial")
    for q in doc.get("accepting", []):
        need(q, "accepting")
    guarded = []
    for k, t in enumerate(doc["transitions"]):
        need(t["from"], f"transitions[{k}]")
        need(t["to"], f"transitions[{k}]")
        try:
            g = Guard.parse(t["guard"])
        except GuardSyntaxError as exc:
            raise SchemaError(f"$.transitions[{k}].guard", str(exc)) from None
        for name in sorted(g.atoms):
            if name not in atoms:
                raise UnknownAtom(name)
        guarded.append((t["from"], g, t["to"]))
    epsilon = {}
    for q, targets in doc.get("epsilon", {}).items():
        need(q, "epsilon")
        for q2 in targets:
            need(q2, "epsilon")
        if targets:
            epsilon[q] = tuple(targets)
    comps = doc["components"]
    for q in comps["ini"] + comps["acc"]:
        need(q, "components")
    return LDBA(
        aut_states=states,
        initial=doc["initial"],
        atoms=atoms,
        accepting=frozenset(doc.get("accepting", [])),
        guarded=tuple(guarded),
        epsilon=epsilon,
        ini=frozenset(comps["ini"]),
        acc=frozenset(comps["acc"]),
    )


def _fmt_letter(letter, order) -> str:
    return "{" + ",".join(a for a in order if a in letter) + "}"


def _letters(support):
    for mask in range(1 << len(support)):
        yield frozenset(a for i, a in enumerate(support) if mask >> i & 1)


def validate_ldba(a: LDBA) -> list:
    """Return every violated LDBA condition as a message; empty means valid.

    Guard totality and determinism are checked exactly by enumerating the
    letters over the atoms mentioned by the guards leaving each state (atoms
    a state's guards never mention cannot change which guard fires).
    """
    out = []
    Q = set(a.aut_states)
    if a.ini & a.acc:
        out.append("components overlap at " + ",".join(q for q in a.aut_states if q in a.ini & a.acc))
    missing = [q for q in a.aut_states if q not in a.ini | a.acc]
    if missing:
        out.append("components do not cover " + ",".join(missing))
    for q in a.aut_states:
        if q in a.accepting and q not in a.acc:
            out.append(f"accepting state {q} not in accepting component")
    for q in a.aut_states:
        if q in a.acc and a.eps(q):
            out.append(f"epsilon from accepting component at {q}")
    declared = set(a.atoms)
    for q in a.aut_states:
        outgoing = [(g, t) for (p, g, t) in a.guarded if p == q]
        bad = sorted({n for g, _ in outgoing for n in g.atoms} - declared)
        if bad:
            out.append(f"guard at {q} mentions undeclared atom(s) {','.join(bad)}")
            continue
        support = [x for x in a.atoms if any(x in g.atoms for g, _ in outgoing)]
        if len(support) > MAX_GUARD_SUPPORT:
            out.append(f"guard support at {q} exceeds {MAX_GUARD_SUPPORT} atoms; totality not checked")
            continue
        leaks = set()
        none_at = many_at = None
        for letter in _letters(support):
            hits = [t for g, t in outgoing if eval_guard(g, letter)]
            if not hits and none_at is None:
                none_at = letter
            if len(hits) > 1 and many_at is None:
                many_at = letter
            if q in a.acc:
                leaks.update(t for t in hits if t not in a.acc)
        if none_at is not None:
            out.append(f"no guard enabled at {q} on {_fmt_letter(none_at, a.atoms)}")
        if many_at is not None:
            out.append(f"nondeterministic guards at {q} on {_fmt_letter(many_at, a.atoms)}")
        for t in sorted(leaks):
            out.append(f"transition from accepting component at {q} to {t} outside it")
    unknown = set(a.ini | a.acc) - Q
    if unknown:
        out.append("components name unknown states " + ",".join(sorted(unknown)))
    return out


def parse_policy(text, model, total: bool = True) -> Policy:
    """Parse a policy document against ``model``.

    Every chosen action must be allowed. With ``total`` (the default) every
    model state must have a choice; product policies handed to
    :func:`buchi_bellman.product.project_policy` may be partial.
    """
    doc = _load(text)
    _check_schema(doc, POLICY_SCHEMA)
    choice = doc["choice"]
    for s in choice:
        if s not in model.index:
            raise InvariantViolation(f"policy names undeclared state {s!r}")
    for s in model.states:
        if s not in choice:
            if total:
                raise MissingState(s)
            continue
        if choice[s] not in model.actions[s]:
            raise IllegalAction(s, choice[s])
    return Policy({s: choice[s] for s in model.states if s in choice})


def chain_policy(model) -> Policy:
    """The only policy of a model with a single action per state."""
    if not model.is_chain:
        raise InvariantViolation("model has states with several actions; a policy is required")
    return Policy({s: model.actions[s][0] for s in model.states})


def to_document(m) -> dict:
    if isinstance(m, Policy):
        return {"kind": "policy", "choice": dict(m.choice)}
    if isinstance(m, LDBA):
        doc = {
            "kind": "ldba",
            "states": list(m.aut_states),
            "initial": m.initial,
            "atoms": list(m.atoms),
            "accepting": [q for q in m.aut_states if q in m.accepting],
            "transitions": [{"from": p, "guard": g.text, "to": t} for p, g, t in m.guarded],
            "epsilon": {q: list(v) for q, v in m.epsilon.items()},
            "components": {
                "ini": [q for q in m.aut_states if q in m.ini],
                "acc": [q for q in m.aut_states if q in m.acc],
            },
        }
        return doc
    doc = {
        "kind": m.kind,
        "states": list(m.states),
        "initial": m.initial,
        "atoms": list(m.atoms),
        "labels": {s: [x for x in m.atoms if x in m.labels[s]] for s in m.states if s in m.labels},
        "actions": {s: list(m.actions[s]) for s in m.states},
        "transitions": [
            {"from": s, "action": a, "to": t, "prob": p}
            for s in m.states
            for a in m.actions[s]
            for t, p in m.transitions[(s, a)]
        ],
        "accepting": [s for s in m.states if s in m.accepting],
    }
    if isinstance(m, ProductMDP):
        doc["pairs"] = {s: list(m.pairs[s]) for s in m.states}
    return doc


def serialize_model(m, indent=2) -> str:
    return json.dumps(to_document(m), indent=indent, ensure_ascii=False)
