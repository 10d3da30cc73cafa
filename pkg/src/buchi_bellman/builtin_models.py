"""Embedded example documents, addressable as ``builtin:<name>``."""

import json

from .model_io import parse_model, parse_policy

# Three-state example: alpha leads to the accepting self-loop s2, beta to the
# rejecting self-loop s3.
EX1 = {
    "kind": "mdp",
    "states": ["s1", "s2", "s3"],
    "initial": "s1",
    "atoms": ["b"],
    "labels": {"s2": ["b"]},
    "actions": {"s1": ["alpha", "beta"], "s2": ["tau"], "s3": ["tau"]},
    "transitions": [
        {"from": "s1", "action": "alpha", "to": "s2", "prob": 1.0},
        {"from": "s1", "action": "beta", "to": "s3", "prob": 1.0},
        {"from": "s2", "action": "tau", "to": "s2", "prob": 1.0},
        {"from": "s3", "action": "tau", "to": "s3", "prob": 1.0},
    ],
    "accepting": ["s2"],
}

# Deterministic Büchi automaton for "infinitely often b".
GF_LDBA = {
    "kind": "ldba",
    "states": ["q0", "q1"],
    "initial": "q0",
    "atoms": ["b"],
    "accepting": ["q1"],
    "transitions": [
        {"from": "q0", "guard": "b", "to": "q1"},
        {"from": "q0", "guard": "!b", "to": "q0"},
        {"from": "q1", "guard": "b", "to": "q1"},
        {"from": "q1", "guard": "!b", "to": "q0"},
    ],
    "epsilon": {},
    "components": {"ini": [], "acc": ["q0", "q1"]},
}

SPLIT = {
    "kind": "mdp",
    "states": ["s0", "a", "r"],
    "initial": "s0",
    "atoms": ["b"],
    "labels": {"a": ["b"]},
    "actions": {"s0": ["go"], "a": ["go"], "r": ["go"]},
    "transitions": [
        {"from": "s0", "action": "go", "to": "a", "prob": 0.5},
        {"from": "s0", "action": "go", "to": "r", "prob": 0.5},
        {"from": "a", "action": "go", "to": "a", "prob": 1.0},
        {"from": "r", "action": "go", "to": "r", "prob": 1.0},
    ],
    "accepting": ["a"],
}

LOOP2 = {
    "kind": "mdp",
    "states": ["b1", "r1"],
    "initial": "b1",
    "atoms": ["b"],
    "labels": {"b1": ["b"]},
    "actions": {"b1": ["go"], "r1": ["go"]},
    "transitions": [
        {"from": "b1", "action": "go", "to": "r1", "prob": 1.0},
        {"from": "r1", "action": "go", "to": "b1", "prob": 0.5},
        {"from": "r1", "action": "go", "to": "r1", "prob": 0.5},
    ],
    "accepting": ["b1"],
}

EX1_ALPHA = {"kind": "policy", "choice": {"s1": "alpha", "s2": "tau", "s3": "tau"}}
EX1_BETA = {"kind": "policy", "choice": {"s1": "beta", "s2": "tau", "s3": "tau"}}

MODELS = {"ex1": EX1, "gf_ldba": GF_LDBA, "split": SPLIT, "loop2": LOOP2}
POLICIES = {"ex1-alpha": (EX1_ALPHA, "ex1"), "ex1-beta": (EX1_BETA, "ex1")}


def document(name) -> str:
    """JSON text of a builtin model or policy."""
    key = name.removeprefix("builtin:")
    if key in MODELS:
        return json.dumps(MODELS[key])
    if key in POLICIES:
        return json.dumps(POLICIES[key][0])
    raise KeyError(f"no builtin named {name!r}; have {sorted(MODELS) + sorted(POLICIES)}")


def model(name):
    return parse_model(document(name))


def policy(name):
    key = name.removeprefix("builtin:")
    doc, owner = POLICIES[key]
    return parse_policy(json.dumps(doc), model(owner))
