"""Seeded random chains with planted BSCC structure, for property suites."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model_io import LabeledMDP

MAX_BSCC_SIZE = 3
MIN_WEIGHT = 0.1


@dataclass(frozen=True)
class GeneratedChain:
    model: LabeledMDP
    accepting_bsccs: tuple  # tuples of state ids
    rejecting_bsccs: tuple
    seed: int

    @property
    def planted_rejecting(self) -> int:
        return len(self.rejecting_bsccs)


def _weights(rng, k) -> np.ndarray:
    w = rng.uniform(MIN_WEIGHT, 1.0, size=k)
    return w / w.sum()


def random_chain(states: int, seed: int, rejecting_bsccs: int = 1, accepting_bsccs: int = 1,
                 accepting_states: int | None = None, actions: int = 1) -> GeneratedChain:
    """Random labeled MDP whose first action ``a0`` induces a chain with the
    requested numbers of accepting and rejecting BSCCs.

    Each planted BSCC has 1 to 3 states joined in a ring plus random chords,
    so it is strongly connected. Every other state is transient: it always
    has an edge into some BSCC, plus a few random edges anywhere. Accepting
    BSCCs get at least one accepting state and rejecting BSCCs none;
    ``accepting_states`` (total) is reached by marking further states in
    accepting BSCCs or transient states. Extra actions ``a1, a2, …`` have
    arbitrary random rows. State indices are shuffled before naming.
    """
    rng = np.random.default_rng(seed)
    n_bscc = rejecting_bsccs + accepting_bsccs
    if accepting_bsccs < 0 or rejecting_bsccs < 0 or n_bscc < 1:
        raise ValueError("need at least one BSCC and non-negative counts")
    if states < n_bscc:
        raise ValueError(f"{states} states cannot hold {n_bscc} BSCCs")
    if actions < 1:
        raise ValueError("actions must be >= 1")

    # BSCC sizes grow from 1 within a budget that keeps a third of the
    # remaining states transient
    sizes = [1] * n_bscc
    budget = (states - n_bscc) - (states - n_bscc) // 3
    for k in range(n_bscc):
        grow = min(int(rng.integers(0, MAX_BSCC_SIZE)), budget)
        sizes[k] += grow
        budget -= grow
    members, start = [], 0
    for size in sizes:
        members.append(list(range(start, start + size)))
        start += size
    transient = list(range(start, states))
    kinds = [True] * accepting_bsccs + [False] * rejecting_bsccs  # True = accepting

    P = np.zeros((states, states))
    for comp in members:
        k = len(comp)
        for pos, v in enumerate(comp):
            targets = {comp[(pos + 1) % k]}
            for w in comp:
                if rng.random() < 0.5:
                    targets.add(w)
            targets = sorted(targets)
            P[v, targets] = _weights(rng, len(targets))
    bscc_states = [v for comp in members for v in comp]
    for v in transient:
        targets = {bscc_states[int(rng.integers(len(bscc_states)))]}
        for _ in range(int(rng.integers(1, 4))):
            targets.add(int(rng.integers(states)))
        targets = sorted(targets)
        P[v, targets] = _weights(rng, len(targets))

    accepting = set()
    for comp, acc in zip(members, kinds):
        if acc:
            accepting.add(comp[int(rng.integers(len(comp)))])
    candidates = [v for comp, acc in zip(members, kinds) if acc for v in comp if v not in accepting]
    candidates += transient
    if accepting_states is None:
        extra = int(rng.integers(0, len(candidates) + 1)) // 2
    else:
        extra = accepting_states - len(accepting)
        if not 0 <= extra <= len(candidates):
            raise ValueError(
                f"accepting_states must lie in [{len(accepting)}, {len(accepting) + len(candidates)}]"
            )
    for j in rng.permutation(len(candidates))[:extra]:
        accepting.add(candidates[int(j)])

    perm = rng.permutation(states)  # old index -> new index
    name = [f"c{int(perm[i])}" for i in range(states)]
    order = sorted(range(states), key=lambda i: perm[i])

    extra_rows = {}
    for i in range(states):
        for a in range(1, actions):
            targets = sorted(set(int(x) for x in rng.integers(states, size=int(rng.integers(1, 4)))))
            extra_rows[(i, a)] = (targets, _weights(rng, len(targets)))

    transitions, acts = {}, {}
    for i in order:
        s = name[i]
        acts[s] = tuple(f"a{a}" for a in range(actions))
        nz = sorted(np.flatnonzero(P[i]), key=lambda j: perm[j])
        transitions[(s, "a0")] = tuple((name[j], float(P[i, j])) for j in nz)
        for a in range(1, actions):
            targets, w = extra_rows[(i, a)]
            pairs = sorted(zip(targets, w), key=lambda tw: perm[tw[0]])
            transitions[(s, f"a{a}")] = tuple((name[j], float(p)) for j, p in pairs)

    initial = transient[0] if transient else members[0][0]
    model = LabeledMDP(
        states=tuple(name[i] for i in order),
        initial=name[initial],
        actions=acts,
        transitions=transitions,
        atoms=("b",),
        labels={name[i]: frozenset({"b"}) for i in order if i in accepting},
        accepting=frozenset(name[i] for i in accepting),
    )
    acc_ids = tuple(tuple(sorted(name[v] for v in c)) for c, k in zip(members, kinds) if k)
    rej_ids = tuple(tuple(sorted(name[v] for v in c)) for c, k in zip(members, kinds) if not k)
    return GeneratedChain(model, acc_ids, rej_ids, seed)
