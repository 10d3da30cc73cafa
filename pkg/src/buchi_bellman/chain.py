"""Induced Markov chains, SCC/BSCC decomposition and state classes."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import IllegalAction, InvariantViolation, PartialPolicy

ROW_TOL = 1e-9


class StateClass(str, Enum):
    B_A = "B_A"  # accepting state inside a BSCC
    B_T = "B_T"  # transient accepting state
    nB_A = "nB_A"  # non-accepting state inside an accepting BSCC
    nB_R = "nB_R"  # state of a rejecting BSCC
    nB_T = "nB_T"  # transient non-accepting state

    def __str__(self):
        return self.value


CLASS_ORDER = (StateClass.B_A, StateClass.B_T, StateClass.nB_A, StateClass.nB_R, StateClass.nB_T)


@dataclass(frozen=True, eq=False)
class InducedChain:
    states: tuple
    P: np.ndarray
    initial: int
    accepting: np.ndarray  # bool mask

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] != len(self.states):
            raise InvariantViolation("transition matrix must be square and match the state list")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1.0).max() > ROW_TOL:
            raise InvariantViolation("transition matrix is not row-stochastic")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "accepting", np.asarray(self.accepting, dtype=bool))

    @classmethod
    def from_matrix(cls, P, accepting, states=None, initial=0) -> "InducedChain":
        """Build a chain from a dense matrix and an accepting mask or index list."""
        P = np.asarray(P, dtype=np.float64)
        n = P.shape[0]
        mask = np.zeros(n, dtype=bool)
        acc = np.asarray(accepting)
        if acc.dtype == bool and acc.shape == (n,):
            mask = acc.copy()
        else:
            mask[acc.astype(int)] = True
        if states is None:
            states = tuple(f"x{i}" for i in range(n))
        return cls(tuple(states), P, int(initial), mask)

    @property
    def n(self) -> int:
        return len(self.states)

    def successors(self, i) -> np.ndarray:
        return np.flatnonzero(self.P[i] > 0)


def induce_chain(model, pol) -> InducedChain:
    """Markov chain of ``model`` under the memoryless policy ``pol``."""
    idx = model.index
    n = len(model.states)
    P = np.zeros((n, n))
    for s in model.states:
        a = pol.get(s)
        if a is None:
            raise PartialPolicy(s)
        if a not in model.actions[s]:
            raise IllegalAction(s, a)
        for t, p in model.transitions[(s, a)]:
            P[idx[s], idx[t]] += p
    mask = np.array([s in model.accepting for s in model.states], dtype=bool)
    return InducedChain(tuple(model.states), P, idx[model.initial], mask)


def tarjan_scc(succ) -> list:
    """Strongly connected components of a graph given as successor lists.

    Iterative Tarjan. Roots are tried in ascending index order and
    successors in list order, so the output is deterministic; components
    come out in reverse topological order (sinks first).
    """
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    out = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work[-1]
            if pos == 0 and index[v] == -1:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            succs = succ[v]
            if pos < len(succs):
                work[-1] = (v, pos + 1)
                w = succs[pos]
                if index[w] == -1:
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(tuple(sorted(comp)))
    return out


@dataclass(frozen=True)
class BsccPartition:
    sccs: tuple  # tuples of state indices, reverse topological order
    bottom: tuple  # per SCC: is it a BSCC
    accepting_bscc: tuple  # per SCC: BSCC containing an accepting state
    classes: tuple  # per state: StateClass
    unreachable: tuple  # state indices not reachable from the initial state

    @property
    def bsccs(self) -> list:
        return [c for c, b in zip(self.sccs, self.bottom) if b]

    @property
    def accepting_bsccs(self) -> list:
        return [c for c, b, a in zip(self.sccs, self.bottom, self.accepting_bscc) if b and a]

    @property
    def rejecting_bsccs(self) -> list:
        return [c for c, b, a in zip(self.sccs, self.bottom, self.accepting_bscc) if b and not a]

    def indices(self, *classes) -> np.ndarray:
        wanted = set(classes)
        return np.array([i for i, c in enumerate(self.classes) if c in wanted], dtype=int)

    def transient(self) -> np.ndarray:
        return self.indices(StateClass.B_T, StateClass.nB_T)


def decompose(chain: InducedChain) -> BsccPartition:
    """SCCs over the edges with positive probability, BSCC flags and classes.

    Every state is classified, including states unreachable from the
    initial state; those are also listed in ``unreachable``.
    """
    n = chain.n
    succ = [chain.successors(i).tolist() for i in range(n)]
    sccs = tarjan_scc(succ)
    comp_of = np.empty(n, dtype=int)
    for k, comp in enumerate(sccs):
        comp_of[list(comp)] = k
    bottom, acc_flags = [], []
    for k, comp in enumerate(sccs):
        is_bottom = all(comp_of[w] == k for v in comp for w in succ[v])
        bottom.append(is_bottom)
        acc_flags.append(is_bottom and bool(chain.accepting[list(comp)].any()))

    classes = []
    for i in range(n):
        k = comp_of[i]
        acc = bool(chain.accepting[i])
        if not bottom[k]:
            classes.append(StateClass.B_T if acc else StateClass.nB_T)
        elif acc:
            classes.append(StateClass.B_A)
        elif acc_flags[k]:
            classes.append(StateClass.nB_A)
        else:
            classes.append(StateClass.nB_R)

    seen = np.zeros(n, dtype=bool)
    seen[chain.initial] = True
    frontier = [chain.initial]
    while frontier:
        v = frontier.pop()
        for w in succ[v]:
            if not seen[w]:
                seen[w] = True
                frontier.append(w)
    return BsccPartition(
        sccs=tuple(sccs),
        bottom=tuple(bottom),
        accepting_bscc=tuple(acc_flags),
        classes=tuple(classes),
        unreachable=tuple(int(i) for i in np.flatnonzero(~seen)),
    )


class ClassCounts(NamedTuple):
    B_A: int
    B_T: int
    nB_A: int
    nB_R: int
    nB_T: int
    rejecting_bsccs: int

    @property
    def total(self) -> int:
        return self.B_A + self.B_T + self.nB_A + self.nB_R + self.nB_T

    def as_dict(self) -> dict:
        return self._asdict()


def class_counts(p: BsccPartition) -> ClassCounts:
    tally = {c: 0 for c in CLASS_ORDER}
    for c in p.classes:
        tally[c] += 1
    return ClassCounts(*(tally[c] for c in CLASS_ORDER), rejecting_bsccs=len(p.rejecting_bsccs))


def format_table(chain: InducedChain, p: BsccPartition) -> str:
    """Human-readable partition table."""
    bscc_of = {}
    for k, comp in enumerate(p.bsccs):
        for i in comp:
            bscc_of[i] = k
    unreachable = set(p.unreachable)
    width = max(5, max(len(s) for s in chain.states))
    lines = [f"{'index':>5}  {'state':<{width}}  {'class':<5}  bscc  note"]
    for i, s in enumerate(chain.states):
        k = bscc_of.get(i)
        note = "unreachable" if i in unreachable else ""
        lines.append(f"{i:>5}  {s:<{width}}  {p.classes[i]!s:<5}  {'' if k is None else k:>4}  {note}".rstrip())
    c = class_counts(p)
    lines.append(
        "counts: " + ", ".join(f"{k}={v}" for k, v in c.as_dict().items())
    )
    return "\n".join(lines)
