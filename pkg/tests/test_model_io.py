import copy
import json

import pytest
from hypothesis import given, settings, strategies as st

from buchi_bellman import builtin_models
from buchi_bellman.errors import (
    IllegalAction,
    InvariantViolation,
    MissingState,
    ModelSyntaxError,
    SchemaError,
    UnknownAtom,
)
from buchi_bellman.generate import random_chain
from buchi_bellman.model_io import (
    LDBA,
    LabeledMDP,
    parse_model,
    parse_policy,
    serialize_model,
    to_document,
    validate_ldba,
)


def doc(name):
    return copy.deepcopy(builtin_models.MODELS[name])


def text(d):
    return json.dumps(d)


def test_ex1_parses():
    m = parse_model(text(doc("ex1")))
    assert isinstance(m, LabeledMDP)
    assert len(m.states) == 3
    assert m.actions["s1"] == ("alpha", "beta")
    assert m.label("s2") == {"b"} and m.label("s1") == frozenset()
    assert m.transitions[("s1", "alpha")] == (("s2", 1.0),)
    assert m.accepting == {"s2"}


def test_probability_sum_violation():
    d = doc("split")
    d["transitions"][0]["prob"] = 0.5
    d["transitions"][1]["prob"] = 0.4
    with pytest.raises(InvariantViolation, match="probabilities sum to 0.9"):
        parse_model(text(d))


def test_sum_within_tolerance_is_kept_unnormalised():
    d = doc("split")
    d["transitions"][0]["prob"] = 0.5 + 4e-10
    m = parse_model(text(d))
    assert m.transitions[("s0", "go")][0][1] == 0.5 + 4e-10


@pytest.mark.parametrize("prob", [0.0, -0.5, 1.5])
def test_probability_range(prob):
    d = doc("ex1")
    d["transitions"][0]["prob"] = prob
    with pytest.raises((InvariantViolation, SchemaError)):
        parse_model(text(d))


def test_transition_for_undeclared_action():
    d = doc("ex1")
    d["transitions"].append({"from": "s2", "action": "alpha", "to": "s2", "prob": 1.0})
    with pytest.raises(InvariantViolation):
        parse_model(text(d))


def test_missing_transitions_for_allowed_action():
    d = doc("ex1")
    d["transitions"] = [t for t in d["transitions"] if t["action"] != "beta"]
    with pytest.raises(InvariantViolation):
        parse_model(text(d))


def test_undeclared_initial_and_label_atom():
    d = doc("ex1")
    d["initial"] = "s9"
    with pytest.raises(InvariantViolation):
        parse_model(text(d))
    d = doc("ex1")
    d["labels"] = {"s2": ["zz"]}
    with pytest.raises((InvariantViolation, UnknownAtom)):
        parse_model(text(d))


def test_syntax_error_position():
    with pytest.raises(ModelSyntaxError) as err:
        parse_model('{\n  "kind": "mdp",\n  "states": [\n}')
    assert (err.value.line, err.value.col) == (4, 1)


def test_schema_error_path():
    d = doc("ex1")
    d["transitions"][2]["prob"] = "one"
    with pytest.raises(SchemaError) as err:
        parse_model(text(d))
    assert err.value.path == "$.transitions[2].prob"


def test_unknown_kind_and_extra_field():
    d = doc("ex1")
    d["kind"] = "pomdp"
    with pytest.raises(SchemaError):
        parse_model(text(d))
    d = doc("ex1")
    d["rewards"] = {}
    with pytest.raises(SchemaError):
        parse_model(text(d))


def test_gf_ldba_is_valid():
    a = parse_model(text(doc("gf_ldba")))
    assert isinstance(a, LDBA)
    assert validate_ldba(a) == []
    assert a.delta("q0", {"b"}) == "q1"
    assert a.delta("q1", set()) == "q0"


def _ldba(**changes):
    d = doc("gf_ldba")
    d.update(changes)
    return d


def test_epsilon_from_accepting_component():
    d = _ldba(epsilon={"q1": ["q0"]})
    a = parse_model(text(d), check=False)
    assert validate_ldba(a) == ["epsilon from accepting component at q1"]
    with pytest.raises(InvariantViolation):
        parse_model(text(d))


def test_nondeterministic_guards():
    d = _ldba(atoms=["b", "c"])
    d["transitions"] = [
        {"from": "q0", "guard": "b", "to": "q1"},
        {"from": "q0", "guard": "b | c", "to": "q0"},
        {"from": "q0", "guard": "!b & !c", "to": "q0"},
        {"from": "q1", "guard": "t", "to": "q1"},
    ]
    a = parse_model(text(d), check=False)
    assert validate_ldba(a) == ["nondeterministic guards at q0 on {b}"]


def test_guard_not_total():
    d = _ldba()
    d["transitions"] = [t for t in d["transitions"] if t["guard"] != "!b" or t["from"] != "q0"]
    a = parse_model(text(d), check=False)
    assert validate_ldba(a) == ["no guard enabled at q0 on {}"]


def test_bipartition_rules():
    d = _ldba(components={"ini": ["q0"], "acc": ["q1"]}, accepting=["q0"])
    a = parse_model(text(d), check=False)
    v = validate_ldba(a)
    assert "accepting state q0 not in accepting component" in v
    assert "transition from accepting component at q1 to q0 outside it" in v
    d = _ldba(components={"ini": ["q0"], "acc": ["q0", "q1"]})
    v = validate_ldba(parse_model(text(d), check=False))
    assert any(x.startswith("components overlap") for x in v)


def test_guard_with_undeclared_atom():
    d = _ldba()
    d["transitions"][0]["guard"] = "zz"
    with pytest.raises(UnknownAtom):
        parse_model(text(d))


def test_policies():
    m = builtin_models.model("ex1")
    pol = parse_policy(text(builtin_models.EX1_ALPHA), m)
    assert pol["s1"] == "alpha"
    with pytest.raises(MissingState) as err:
        parse_policy(text({"kind": "policy", "choice": {"s1": "alpha", "s2": "tau"}}), m)
    assert err.value.state == "s3"
    with pytest.raises(IllegalAction) as err:
        parse_policy(text({"kind": "policy", "choice": {"s1": "tau", "s2": "tau", "s3": "tau"}}), m)
    assert (err.value.state, err.value.action) == ("s1", "tau")


@pytest.mark.parametrize("name", sorted(builtin_models.MODELS))
def test_builtin_round_trip(name):
    m = builtin_models.model(name)
    again = parse_model(serialize_model(m))
    assert again == m
    assert to_document(again) == to_document(m)


@settings(max_examples=60, deadline=None)
@given(
    states=st.integers(2, 20),
    seed=st.integers(0, 2**32 - 1),
    rejecting=st.integers(0, 2),
    actions=st.integers(1, 3),
)
def test_generated_round_trip(states, seed, rejecting, actions):
    rejecting = min(rejecting, states - 1)
    m = random_chain(states, seed, rejecting_bsccs=rejecting, accepting_bsccs=1, actions=actions).model
    assert parse_model(serialize_model(m)) == m
    # serialisation is canonical
    assert serialize_model(parse_model(serialize_model(m))) == serialize_model(m)
