import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from buchi_bellman import builtin_models
from buchi_bellman.errors import AtomMismatch, InvalidLDBA, PartialPolicy
from buchi_bellman.model_io import parse_model, serialize_model
from buchi_bellman.product import (
    build_product,
    eps_action,
    is_eps,
    project_policy,
    reachable,
    simulate_controller,
    simulate_product,
)

# "eventually always b": guess the switch point with an epsilon move
FG_LDBA = {
    "kind": "ldba",
    "states": ["q0", "q1", "q2"],
    "initial": "q0",
    "atoms": ["b"],
    "accepting": ["q1"],
    "transitions": [
        {"from": "q0", "guard": "t", "to": "q0"},
        {"from": "q1", "guard": "b", "to": "q1"},
        {"from": "q1", "guard": "!b", "to": "q2"},
        {"from": "q2", "guard": "t", "to": "q2"},
    ],
    "epsilon": {"q0": ["q1"]},
    "components": {"ini": ["q0"], "acc": ["q1", "q2"]},
}

NOISY = {
    "kind": "mdp",
    "states": ["x", "y", "z"],
    "initial": "x",
    "atoms": ["b"],
    "labels": {"y": ["b"]},
    "actions": {"x": ["l", "r"], "y": ["l", "r"], "z": ["l"]},
    "transitions": [
        {"from": "x", "action": "l", "to": "y", "prob": 0.3},
        {"from": "x", "action": "l", "to": "z", "prob": 0.7},
        {"from": "x", "action": "r", "to": "x", "prob": 0.5},
        {"from": "x", "action": "r", "to": "y", "prob": 0.5},
        {"from": "y", "action": "l", "to": "y", "prob": 0.9},
        {"from": "y", "action": "l", "to": "x", "prob": 0.1},
        {"from": "y", "action": "r", "to": "z", "prob": 1.0},
        {"from": "z", "action": "l", "to": "x", "prob": 0.6},
        {"from": "z", "action": "l", "to": "z", "prob": 0.4},
    ],
}


def load(d):
    return parse_model(json.dumps(d))


def test_ex1_product_shape():
    m, a = builtin_models.model("ex1"), builtin_models.model("gf_ldba")
    p = build_product(m, a)
    assert len(p.states) == len(m.states) * len(a.aut_states) == 6
    assert p.initial == "s1|q0"
    assert p.accepting == {f"{s}|q1" for s in m.states}
    assert p.transitions[("s1|q0", "alpha")] == (("s2|q0", 1.0),)
    # label read from the source state: s2 carries b, so q moves to q1
    assert p.transitions[("s2|q0", "tau")] == (("s2|q1", 1.0),)
    assert p.pairs["s3|q1"] == ("s3", "q1")


def _transition_prob(p, src, act, dst):
    return sum(w for t, w in p.transitions.get((src, act), ()) if t == dst)


@pytest.mark.parametrize("mdp, ldba", [("ex1", "gf_ldba"), (NOISY, FG_LDBA), (NOISY, "gf_ldba")])
def test_product_matches_rule_on_all_triples(mdp, ldba):
    m = builtin_models.model(mdp) if isinstance(mdp, str) else load(mdp)
    a = builtin_models.model(ldba) if isinstance(ldba, str) else load(ldba)
    p = build_product(m, a)
    actions = set(itertools.chain.from_iterable(m.actions.values()))
    actions |= {eps_action(q) for q in a.aut_states}
    for (s, q), (s2, q2), act in itertools.product(
        itertools.product(m.states, a.aut_states), itertools.product(m.states, a.aut_states), actions
    ):
        src, dst = f"{s}|{q}", f"{s2}|{q2}"
        if is_eps(act):
            target = act[4:]
            want = 1.0 if (target in a.eps(q) and s == s2 and q2 == target) else 0.0
        else:
            allowed = act in m.actions[s]
            want = 0.0
            if allowed and q2 == a.delta(q, m.label(s)):
                want = sum(w for t, w in m.transitions[(s, act)] if t == s2)
        assert _transition_prob(p, src, act, dst) == want, (src, act, dst)


def test_epsilon_actions():
    m, a = load(NOISY), load(FG_LDBA)
    p = build_product(m, a)
    for s in m.states:
        assert eps_action("q1") in p.actions[f"{s}|q0"]
        assert p.transitions[(f"{s}|q0", "eps:q1")] == ((f"{s}|q1", 1.0),)
        for q in a.acc:
            assert not any(is_eps(x) for x in p.actions[f"{s}|{q}"])


def test_row_stochastic_for_all_actions():
    p = build_product(load(NOISY), load(FG_LDBA))
    for s in p.states:
        for act in p.actions[s]:
            assert abs(sum(w for _, w in p.transitions[(s, act)]) - 1.0) <= 1e-9


def test_product_round_trip():
    p = build_product(load(NOISY), load(FG_LDBA))
    again = parse_model(serialize_model(p))
    assert again == p and again.kind == "product"


def test_reachable_projects_to_reachable():
    m = load(NOISY)
    p = build_product(m, load(FG_LDBA))
    mdp_reach = set(reachable(m))
    for sid in reachable(p):
        assert p.pairs[sid][0] in mdp_reach


def test_atom_mismatch():
    m = builtin_models.model("ex1")
    d = json.loads(json.dumps(FG_LDBA))
    d["atoms"] = ["b", "c"]
    with pytest.raises(AtomMismatch):
        build_product(m, load(d))


def test_invalid_ldba_rejected():
    d = json.loads(json.dumps(FG_LDBA))
    d["epsilon"] = {"q1": ["q2"]}
    with pytest.raises(InvalidLDBA):
        build_product(load(NOISY), parse_model(json.dumps(d), check=False))


def test_memory_independent_choice():
    m, a = builtin_models.model("ex1"), builtin_models.model("gf_ldba")
    p = build_product(m, a)
    pol = {sid: ("alpha" if sid.startswith("s1|") else "tau") for sid in p.states}
    ctrl = project_policy(p, pol, m, a)
    assert ctrl.memory_states == ("q0", "q1")
    assert ctrl.act("q0", "s1") == ctrl.act("q1", "s1") == "alpha"


def test_epsilon_jump_in_controller():
    m, a = load(NOISY), load(FG_LDBA)
    p = build_product(m, a)
    pol = {sid: p.actions[sid][0] for sid in p.states}
    pol["x|q0"] = "eps:q1"
    ctrl = project_policy(p, pol, m, a)
    trace = simulate_controller(ctrl, m, 3, seed=0)
    assert trace[0] == "eps:q1"
    assert trace[1] == pol["x|q1"]  # memory moved, MDP state did not


def test_partial_policy():
    m, a = builtin_models.model("ex1"), builtin_models.model("gf_ldba")
    p = build_product(m, a)
    pol = {"s1|q0": "alpha"}
    with pytest.raises(PartialPolicy) as err:
        project_policy(p, pol, m, a)
    assert err.value.state == "s2|q0"
    # unreachable pairs may stay undefined
    pol = {"s1|q0": "alpha", "s2|q0": "tau", "s2|q1": "tau"}
    project_policy(p, pol, m, a)


@settings(max_examples=40, deadline=None)
@given(choice_seed=st.integers(0, 2**32 - 1), sim_seed=st.integers(0, 2**32 - 1))
def test_co_simulation_with_epsilon(choice_seed, sim_seed):
    m, a = load(NOISY), load(FG_LDBA)
    p = build_product(m, a)
    rng = np.random.default_rng(choice_seed)
    pol = {sid: p.actions[sid][int(rng.integers(len(p.actions[sid])))] for sid in p.states}
    ctrl = project_policy(p, pol, m, a)
    assert simulate_product(p, pol, 20, sim_seed) == simulate_controller(ctrl, m, 20, sim_seed)
