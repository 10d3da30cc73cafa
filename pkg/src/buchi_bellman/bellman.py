"""Two-discount surrogate-reward Bellman equations for Büchi objectives.

Under a fixed policy the value vector satisfies

    V = R + Γ ⊙ (P V),   R = (1-γ_B)·1_B,   Γ = γ_B on B, γ off B.

Three constructions solve it: a direct solve when γ < 1; a reduction to the
first-return chain on accepting states when γ = 1 and every BSCC accepts; and
the pinned transient system when γ = 1 and rejecting BSCCs exist (their
states fixed at 0, accepting-BSCC states at 1). :func:`certify` adds the
null-space dimension of ``I - Γ P`` to tell whether the unconstrained equation
had a unique solution at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import BsccPartition, InducedChain, StateClass, class_counts, decompose
from .errors import (
    InvalidDiscounts,
    RejectingBsccPresent,
    RequiresGammaLessThanOne,
    RequiresGammaOne,
    SingularSystem,
)
from .linalg import null_space_basis, solve

RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class SurrogateReward:
    gamma: float
    gamma_B: float

    def __post_init__(self):
        g, gb = self.gamma, self.gamma_B
        if not (0.0 < gb < g <= 1.0 and gb < 1.0):
            raise InvalidDiscounts(g, gb)

    def reward(self, accepting) -> np.ndarray:
        return np.where(accepting, 1.0 - self.gamma_B, 0.0)

    def discount(self, accepting) -> np.ndarray:
        return np.where(accepting, self.gamma_B, self.gamma)


def bellman_residual(chain: InducedChain, reward: SurrogateReward, V) -> float:
    """``||V - R - Γ ⊙ (P V)||_inf`` in original state order."""
    V = np.asarray(V, dtype=np.float64)
    acc = chain.accepting
    r = V - reward.reward(acc) - reward.discount(acc) * (chain.P @ V)
    return float(np.abs(r).max()) if r.size else 0.0


@dataclass(frozen=True, eq=False)
class Solution:
    V: np.ndarray
    residual: float
    method: str

    def as_dict(self, states) -> dict:
        return {
            "method": self.method,
            "residual": self.residual,
            "values": {s: float(v) for s, v in zip(states, self.V)},
        }


def _finish(chain, reward, V, method) -> Solution:
    res = bellman_residual(chain, reward, V)
    if not res <= RESIDUAL_TOL:
        raise SingularSystem(f"{method} solve left residual {res:.3e}")
    return Solution(np.asarray(V, dtype=np.float64), res, method)


@dataclass(frozen=True, eq=False)
class BellmanSystem:
    """The Bellman equation with states permuted accepting-first.

    ``order[k]`` is the original index of the ``k``-th ordered state; the
    first ``m`` ordered states are accepting.
    """

    order: np.ndarray
    m: int
    n: int
    P: np.ndarray  # P_π in the accepting-first order
    gamma_diag: np.ndarray  # diagonal of Γ_B in the same order
    b: np.ndarray  # (1-γ_B)·[1_m; 0_n]
    reward: SurrogateReward

    @property
    def P_BB(self):
        return self.P[: self.m, : self.m]

    @property
    def P_BN(self):
        return self.P[: self.m, self.m :]

    @property
    def P_NB(self):
        return self.P[self.m :, : self.m]

    @property
    def P_NN(self):
        return self.P[self.m :, self.m :]

    @property
    def Gamma(self) -> np.ndarray:
        return np.diag(self.gamma_diag)

    def matrix(self) -> np.ndarray:
        """``I - Γ_B P_π`` in the accepting-first order."""
        return np.eye(self.m + self.n) - self.gamma_diag[:, None] * self.P

    def to_original(self, v) -> np.ndarray:
        out = np.empty_like(np.asarray(v, dtype=np.float64))
        out[self.order] = v
        return out


def build_system(chain: InducedChain, reward: SurrogateReward) -> BellmanSystem:
    acc = chain.accepting
    order = np.concatenate([np.flatnonzero(acc), np.flatnonzero(~acc)])
    m = int(acc.sum())
    n = chain.n - m
    P = chain.P[np.ix_(order, order)]
    gamma_diag = np.concatenate([np.full(m, reward.gamma_B), np.full(n, reward.gamma)])
    b = (1.0 - reward.gamma_B) * np.concatenate([np.ones(m), np.zeros(n)])
    return BellmanSystem(order, m, n, P, gamma_diag, b, reward)


def gershgorin_bound(sys: BellmanSystem) -> float:
    """Largest absolute row sum of ``Γ_B P_π``; bounds its spectral radius."""
    return float((sys.gamma_diag * np.abs(sys.P).sum(axis=1)).max())


def solve_discounted(sys: BellmanSystem, chain: InducedChain) -> Solution:
    """``V = (I - Γ_B P_π)^{-1} b``; regular whenever γ < 1."""
    if not sys.reward.gamma < 1.0:
        raise RequiresGammaLessThanOne("the direct solve needs gamma < 1")
    v = solve(sys.matrix(), sys.b)
    return _finish(chain, sys.reward, sys.to_original(v), "discounted")


@dataclass(frozen=True, eq=False)
class AcceptingChain:
    """First-return chain on the accepting states.

    ``states`` and ``nonaccepting`` hold original indices; ``P_init[i, j]``
    is the probability that a path from ``nonaccepting[i]`` first enters B
    at ``states[j]``.
    """

    states: np.ndarray
    nonaccepting: np.ndarray
    P_B: np.ndarray
    mu: np.ndarray
    P_init: np.ndarray


def first_return_matrix(chain: InducedChain, partition: BsccPartition | None = None) -> AcceptingChain:
    partition = decompose(chain) if partition is None else partition
    if partition.rejecting_bsccs:
        raise RejectingBsccPresent(partition.rejecting_bsccs)
    B = np.flatnonzero(chain.accepting)
    N = np.flatnonzero(~chain.accepting)
    P = chain.P
    P_BB, P_BN = P[np.ix_(B, B)], P[np.ix_(B, N)]
    P_NB, P_NN = P[np.ix_(N, B)], P[np.ix_(N, N)]
    P_init = solve(np.eye(len(N)) - P_NN, P_NB)
    P_B = P_BB + P_BN @ P_init
    if chain.accepting[chain.initial]:
        mu = (B == chain.initial).astype(np.float64)
    else:
        mu = P_init[int(np.flatnonzero(N == chain.initial)[0])].copy()
    return AcceptingChain(B, N, P_B, mu, P_init)


def solve_accepting(chain: InducedChain, gamma_B: float, partition: BsccPartition | None = None) -> Solution:
    """γ = 1 solve through the first-return chain; needs every BSCC accepting."""
    reward = SurrogateReward(1.0, gamma_B)
    ac = first_return_matrix(chain, partition)
    m = len(ac.states)
    U_B = (1.0 - gamma_B) * solve(np.eye(m) - gamma_B * ac.P_B, np.ones(m))
    N = ac.nonaccepting
    P_NN = chain.P[np.ix_(N, N)]
    P_NB = chain.P[np.ix_(N, ac.states)]
    U_N = solve(np.eye(len(N)) - P_NN, P_NB @ U_B)
    V = np.empty(chain.n)
    V[ac.states] = U_B
    V[N] = U_N
    return _finish(chain, reward, V, "accepting")


@dataclass(frozen=True, eq=False)
class ConstrainedSystem:
    """Transient-only system left after pinning BSCC states.

    Index arrays hold original state indices of each class.
    """

    BT: np.ndarray
    BA: np.ndarray
    nBT: np.ndarray
    nBA: np.ndarray
    nBR: np.ndarray
    P_BT_BT: np.ndarray
    P_BT_nBT: np.ndarray
    P_nBT_BT: np.ndarray
    P_nBT_nBT: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    gamma_B: float


def build_constrained(chain: InducedChain, partition: BsccPartition, gamma_B: float) -> ConstrainedSystem:
    ix = partition.indices
    BT, BA, nBT = ix(StateClass.B_T), ix(StateClass.B_A), ix(StateClass.nB_T)
    nBA, nBR = ix(StateClass.nB_A), ix(StateClass.nB_R)
    P = chain.P
    into_acc = np.concatenate([BA, nBA])
    # rows of P restricted to accepting-BSCC columns, times the pinned ones
    B1 = (1.0 - gamma_B) * np.ones(len(BT)) + gamma_B * P[np.ix_(BT, into_acc)].sum(axis=1)
    B2 = P[np.ix_(nBT, into_acc)].sum(axis=1)
    return ConstrainedSystem(
        BT, BA, nBT, nBA, nBR,
        P[np.ix_(BT, BT)], P[np.ix_(BT, nBT)], P[np.ix_(nBT, BT)], P[np.ix_(nBT, nBT)],
        B1, B2, gamma_B,
    )


def solve_constrained(chain: InducedChain, partition: BsccPartition, gamma_B: float) -> Solution:
    """γ = 1 solve with accepting-BSCC states pinned to 1 and rejecting ones to 0.

    Accepting transient states are solved first through their own
    first-return matrix, then the non-accepting transient states follow.
    """
    reward = SurrogateReward(1.0, gamma_B)
    cs = build_constrained(chain, partition, gamma_B)
    k = len(cs.nBT)
    I_nn = np.eye(k) - cs.P_nBT_nBT
    P_BT = cs.P_BT_BT + cs.P_BT_nBT @ solve(I_nn, cs.P_nBT_BT)
    rhs = gamma_B * cs.P_BT_nBT @ solve(I_nn, cs.B2) + cs.B1
    U_BT = solve(np.eye(len(cs.BT)) - gamma_B * P_BT, rhs)
    U_nBT = solve(I_nn, cs.P_nBT_BT @ U_BT + cs.B2)
    V = np.zeros(chain.n)
    V[cs.BA] = 1.0
    V[cs.nBA] = 1.0
    V[cs.BT] = U_BT
    V[cs.nBT] = U_nBT
    return _finish(chain, reward, V, "constrained")


METHODS = ("auto", "discounted", "accepting", "constrained")


def evaluate(chain: InducedChain, reward: SurrogateReward, method: str = "auto",
             partition: BsccPartition | None = None) -> Solution:
    """Dispatch to one of the three solves; ``auto`` picks the applicable one."""
    partition = decompose(chain) if partition is None else partition
    if method == "auto":
        if reward.gamma < 1.0:
            method = "discounted"
        elif partition.rejecting_bsccs:
            method = "constrained"
        else:
            method = "accepting"
    if method == "discounted":
        return solve_discounted(build_system(chain, reward), chain)
    if reward.gamma < 1.0:
        raise RequiresGammaOne(f"method {method!r} solves the gamma = 1 equation")
    if method == "accepting":
        return solve_accepting(chain, reward.gamma_B, partition)
    if method == "constrained":
        return solve_constrained(chain, partition, reward.gamma_B)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True, eq=False)
class UniquenessCertificate:
    """Verdict on the solution set of the Bellman equation.

    ``unique`` concerns the unconstrained equation (trivial null space of
    ``I - Γ_B P_π``). ``unique_with_condition`` is the verdict once the
    rejecting-BSCC pinning is imposed, which is always applied when γ = 1.
    ``null_basis`` rows are in original state order.
    """

    gamma: float
    gamma_B: float
    unique: bool
    unique_with_condition: bool
    null_space_dim: int
    null_basis: np.ndarray
    value: Solution
    condition_applied: bool
    rejecting_bscc_count: int
    counts: dict = field(default_factory=dict)

    def as_dict(self, states) -> dict:
        return {
            "gamma": self.gamma,
            "gamma_B": self.gamma_B,
            "unique": self.unique,
            "unique_with_condition": self.unique_with_condition,
            "null_space_dim": self.null_space_dim,
            "null_basis": [[float(x) for x in v] for v in self.null_basis],
            "condition_applied": self.condition_applied,
            "rejecting_bscc_count": self.rejecting_bscc_count,
            "class_counts": dict(self.counts),
            "states": list(states),
            "value": [float(x) for x in self.value.V],
            "residual": self.value.residual,
            "method": self.value.method,
        }


def certify(chain: InducedChain, partition: BsccPartition | None, reward: SurrogateReward) -> UniquenessCertificate:
    partition = decompose(chain) if partition is None else partition
    sys = build_system(chain, reward)
    dim, basis = null_space_basis(sys.matrix())
    # basis vectors live in the accepting-first order
    basis = np.array([sys.to_original(v) for v in basis]).reshape(dim, chain.n)
    if reward.gamma < 1.0:
        value = solve_discounted(sys, chain)
        applied = False
    else:
        value = solve_constrained(chain, partition, reward.gamma_B)
        applied = True
    return UniquenessCertificate(
        gamma=reward.gamma,
        gamma_B=reward.gamma_B,
        unique=dim == 0,
        unique_with_condition=reward.gamma < 1.0 or applied,
        null_space_dim=dim,
        null_basis=basis,
        value=value,
        condition_applied=applied,
        rejecting_bscc_count=len(partition.rejecting_bsccs),
        counts=class_counts(partition).as_dict(),
    )
