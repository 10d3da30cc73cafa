"""Product of a labeled MDP with an LDBA, and projection of product policies."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import AtomMismatch, IllegalAction, InvalidLDBA, PartialPolicy
from .model_io import LDBA, LabeledMDP, Policy, ProductMDP, validate_ldba
from .rng import Stream, pick

EPS_PREFIX = "eps:"


def eps_action(q) -> str:
    return EPS_PREFIX + q


def is_eps(action) -> bool:
    return action.startswith(EPS_PREFIX)


def pair_id(s, q) -> str:
    return f"{s}|{q}"


def build_product(m: LabeledMDP, a: LDBA) -> ProductMDP:
    """All ``|S|·|Q|`` pairs, ordered state-major.

    At ``<s, q>`` the MDP actions move to ``<s', δ(q, L(s))>`` with the MDP's
    probability; each ``eps:q'`` with ``q' ∈ δ(q, ε)`` jumps to ``<s, q'>``
    with probability 1. Unreachable pairs are kept.
    """
    violations = validate_ldba(a)
    if violations:
        raise InvalidLDBA(violations)
    missing = [x for x in a.atoms if x not in m.atoms]
    if missing:
        raise AtomMismatch(f"LDBA atoms {missing} are not atoms of the MDP")
    for s in m.states:
        for act in m.actions[s]:
            if is_eps(act):
                raise AtomMismatch(f"MDP action {act!r} collides with the epsilon-action namespace")

    # δ(q, L(s)) depends only on the source pair
    step = {(s, q): a.delta(q, m.label(s)) for s in m.states for q in a.aut_states}
    states, pairs, actions, transitions, labels = [], {}, {}, {}, {}
    for s in m.states:
        for q in a.aut_states:
            sid = pair_id(s, q)
            states.append(sid)
            pairs[sid] = (s, q)
            if m.label(s):
                labels[sid] = m.label(s)
            acts = list(m.actions[s])
            q2 = step[(s, q)]
            for act in m.actions[s]:
                transitions[(sid, act)] = tuple((pair_id(t, q2), p) for t, p in m.transitions[(s, act)])
            for q3 in a.eps(q):
                acts.append(eps_action(q3))
                transitions[(sid, eps_action(q3))] = ((pair_id(s, q3), 1.0),)
            actions[sid] = tuple(acts)
    return ProductMDP(
        states=tuple(states),
        initial=pair_id(m.initial, a.initial),
        actions=actions,
        transitions=transitions,
        atoms=tuple(m.atoms),
        labels=labels,
        accepting=frozenset(sid for sid, (s, q) in pairs.items() if q in a.accepting),
        pairs=pairs,
    )


def reachable(p: LabeledMDP, pol: Policy | Mapping | None = None) -> list:
    """States reachable from the initial state (under ``pol`` when given)."""
    seen = {p.initial}
    order = [p.initial]
    stack = [p.initial]
    while stack:
        v = stack.pop()
        acts = p.actions[v] if pol is None else (pol.get(v),)
        for act in acts:
            if act is None:
                continue
            for t, _ in p.transitions[(v, act)]:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    stack.append(t)
    return order


@dataclass(frozen=True)
class FiniteMemoryController:
    """Finite-memory policy on the original MDP.

    Memory ranges over the automaton states. ``output[(q, s)]`` is either an
    MDP action or ``eps:q'``, the latter meaning "set memory to q' without
    moving".
    """

    memory_states: tuple
    initial_memory: str
    output: Mapping[tuple, str]
    ldba: LDBA

    def act(self, q, s) -> str:
        try:
            return self.output[(q, s)]
        except KeyError:
            raise PartialPolicy(pair_id(s, q)) from None

    def update(self, q, label) -> str:
        return self.ldba.delta(q, label)


def project_policy(p: ProductMDP, pol: Policy | Mapping, m: LabeledMDP, a: LDBA) -> FiniteMemoryController:
    """Turn a memoryless product policy into a controller with memory Q.

    ``pol`` must be defined on every product state reachable under it.
    """
    for sid in reachable(p, pol):
        act = pol.get(sid)
        if act is None:
            raise PartialPolicy(sid)
        if act not in p.actions[sid]:
            raise IllegalAction(sid, act)
    output = {}
    for sid, (s, q) in p.pairs.items():
        act = pol.get(sid)
        if act is not None and act in p.actions[sid]:
            output[(q, s)] = act
    return FiniteMemoryController(tuple(a.aut_states), a.initial, output, a)


def simulate_product(p: ProductMDP, pol, steps: int, seed: int) -> list:
    """Action trace of ``pol`` on the product.

    Only MDP moves consume a random draw, so traces line up with
    :func:`simulate_controller` under the same seed.
    """
    rng = Stream.from_seed(seed)
    sid = p.initial
    trace = []
    for _ in range(steps):
        act = pol.get(sid)
        trace.append(act)
        succ = p.transitions[(sid, act)]
        if is_eps(act):
            sid = succ[0][0]
        else:
            sid = succ[pick([w for _, w in succ], rng.random())][0]
    return trace


def simulate_controller(c: FiniteMemoryController, m: LabeledMDP, steps: int, seed: int) -> list:
    rng = Stream.from_seed(seed)
    s, q = m.initial, c.initial_memory
    trace = []
    for _ in range(steps):
        act = c.act(q, s)
        trace.append(act)
        if is_eps(act):
            q = act[len(EPS_PREFIX):]
            continue
        succ = m.transitions[(s, act)]
        s2 = succ[pick([w for _, w in succ], rng.random())][0]
        q = c.update(q, m.label(s))
        s = s2
    return trace
