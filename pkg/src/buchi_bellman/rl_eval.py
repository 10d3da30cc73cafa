"""Tabular TD(0) evaluation with state-dependent discounting.

The TD target is ``R(s) + Γ(s)·V(s')``. Rejecting-BSCC states can be pinned
to a fixed value, which is how the γ = 1 equation is made to have a single
fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numba import njit

from .bellman import SurrogateReward, bellman_residual, certify, solve_constrained
from .builtin_models import model as builtin_model
from .chain import BsccPartition, InducedChain, decompose, induce_chain
from .model_io import LabeledMDP, Policy
from .oracles import _csr
from .rng import seed_key, substream, uniform


@dataclass(frozen=True)
class TdConfig:
    """TD run parameters.

    ``init`` is ``"zeros"``, a float (constant start) or a ``{state: value}``
    map (unlisted states start at 0). ``pinned`` maps states to the value they
    are frozen at. The step size at the ``n``-th update of a state is
    ``a0 / (1 + n/tau)``.
    """

    episodes: int = 50_000
    max_steps: int = 1_000
    a0: float = 0.5
    tau: float = 1_000.0
    seed: int = 0
    init: object = "zeros"
    pinned: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.a0 <= 1.0:
            raise ValueError("a0 must lie in (0, 1]")
        if not self.tau > 0.0:
            raise ValueError("tau must be positive")
        if self.episodes < 0 or self.max_steps < 1:
            raise ValueError("episodes must be >= 0 and max_steps >= 1")

    def initial_values(self, states) -> np.ndarray:
        init = self.init
        if isinstance(init, str):
            if init != "zeros":
                raise ValueError(f"unknown init {init!r}")
            V = np.zeros(len(states))
        elif isinstance(init, Mapping):
            unknown = set(init) - set(states)
            if unknown:
                raise ValueError(f"init names unknown states {sorted(unknown)}")
            V = np.array([float(init.get(s, 0.0)) for s in states])
        else:
            V = np.full(len(states), float(init))
        for s, v in self.pinned.items():
            if s not in states:
                raise ValueError(f"pinned state {s!r} is not a chain state")
            V[states.index(s)] = float(v)
        return V

    def as_dict(self) -> dict:
        init = dict(self.init) if isinstance(self.init, Mapping) else self.init
        return {
            "episodes": self.episodes,
            "max_steps": self.max_steps,
            "a0": self.a0,
            "tau": self.tau,
            "seed": self.seed,
            "init": init,
            "pinned": dict(self.pinned),
        }


@dataclass(frozen=True, eq=False)
class TdResult:
    V: np.ndarray
    max_update: np.ndarray  # per episode, largest |ΔV|
    error: np.ndarray | None  # per episode, ||V - reference||_inf
    visits: np.ndarray
    low: float  # smallest value held by any state during the run
    high: float  # largest

    def as_dict(self, states) -> dict:
        out = {
            "values": {s: float(v) for s, v in zip(states, self.V)},
            "visits": {s: int(n) for s, n in zip(states, self.visits)},
            "final_max_update": float(self.max_update[-1]) if len(self.max_update) else 0.0,
        }
        if self.error is not None:
            out["final_error"] = float(self.error[-1]) if len(self.error) else None
            out["error_trace"] = [float(x) for x in self.error]
        return out


@njit(cache=True)
def _td(indptr, idx, cum, R, G, stop, frozen, V, episodes, max_steps, a0, tau, key, ref, track):
    n = V.shape[0]
    visits = np.zeros(n, dtype=np.int64)
    max_update = np.zeros(episodes)
    error = np.zeros(episodes)
    low = V.min() if n else 0.0
    high = V.max() if n else 0.0
    for e in range(episodes):
        k = substream(key, np.uint64(e))
        s = min(int(uniform(k, np.uint64(0)) * n), n - 1)
        biggest = 0.0
        for t in range(max_steps):
            u = uniform(k, np.uint64(t + 1))
            lo = indptr[s]
            j = lo
            for jj in range(lo, indptr[s + 1] - 1):
                j += u >= cum[jj]
            s2 = idx[j]
            if not frozen[s]:
                alpha = a0 / (1.0 + visits[s] / tau)
                delta = alpha * (R[s] + G[s] * V[s2] - V[s])
                V[s] += delta
                visits[s] += 1
                low = min(low, V[s])
                high = max(high, V[s])
                if abs(delta) > biggest:
                    biggest = abs(delta)
            if stop[s]:
                break
            s = s2
        max_update[e] = biggest
        if track:
            worst = 0.0
            for i in range(n):
                d = abs(V[i] - ref[i])
                if d > worst:
                    worst = d
            error[e] = worst
    return V, max_update, error, visits, low, high


def td_evaluate(chain: InducedChain, partition: BsccPartition, reward: SurrogateReward,
                cfg: TdConfig, reference=None) -> TdResult:
    """Seeded TD(0) policy evaluation.

    Each episode starts from a uniformly drawn state and ends right after
    the update made from the first BSCC state it visits, or after
    ``max_steps`` updates. Episode ``e`` draws from substream ``e`` of the
    seed, so the run is a pure function of ``cfg``.
    """
    states = list(chain.states)
    V = cfg.initial_values(states)
    frozen = np.zeros(chain.n, dtype=np.bool_)
    for s in cfg.pinned:
        frozen[states.index(s)] = True
    stop = np.zeros(chain.n, dtype=np.bool_)
    for comp in partition.bsccs:
        stop[list(comp)] = True
    track = reference is not None
    ref = np.asarray(reference, dtype=np.float64) if track else np.zeros(chain.n)
    indptr, idx, cum = _csr(chain.P)
    V, max_update, error, visits, low, high = _td(
        indptr, idx, cum,
        reward.reward(chain.accepting).astype(np.float64),
        reward.discount(chain.accepting).astype(np.float64),
        stop, frozen, V, int(cfg.episodes), int(cfg.max_steps), float(cfg.a0), float(cfg.tau),
        seed_key(cfg.seed), ref, track,
    )
    return TdResult(V, max_update, error if track else None, visits, float(low), float(high))


def greedy_action(model: LabeledMDP, V: Mapping, s) -> str:
    """Action maximising the expected successor value; ties go to the smallest id.

    ``V`` maps state ids to values and needs entries only for the successors
    of ``s``.
    """
    best, best_q = None, -np.inf
    for a in sorted(model.actions[s]):
        q = sum(p * float(V[t]) for t, p in model.transitions[(s, a)])
        if q > best_q:
            best, best_q = a, q
    return best


def pathology_demo(gamma_B: float = 0.5, spurious_c: float = 2.0, seed: int = 0,
                   episodes: int = 50_000) -> dict:
    """Walk through the two-action example at γ = 1.

    Under the policy taking ``alpha`` at ``s1`` the rejecting self-loop
    ``s3`` leaves ``I - Γ P`` rank deficient, so ``(1, 1, c)`` solves the
    equation for every ``c``. The report records the certificate, the
    residuals of members of that family, how the greedy action at ``s1``
    depends on ``c``, TD started at ``c`` with and without pinning, and the
    constrained solution.
    """
    if spurious_c == 0:
        raise ValueError("spurious_c must be nonzero")
    mdp = builtin_model("ex1")
    chain = induce_chain(mdp, Policy({"s1": "alpha", "s2": "tau", "s3": "tau"}))
    partition = decompose(chain)
    reward = SurrogateReward(1.0, gamma_B)
    states = list(chain.states)
    cert = certify(chain, partition, reward)

    family = {}
    for c in (0.0, 1.0, spurious_c):
        family[repr(float(c))] = bellman_residual(chain, reward, np.array([1.0, 1.0, c]))
    spurious = dict(zip(states, (1.0, 1.0, float(spurious_c))))
    constrained = solve_constrained(chain, partition, gamma_B)
    constrained_map = dict(zip(states, constrained.V.tolist()))
    flips = {}
    for c in (0.0, 0.5, 1.0, 1.5, spurious_c):
        flips[repr(float(c))] = greedy_action(mdp, dict(zip(states, (1.0, 1.0, c))), "s1")

    init = {"s1": spurious_c, "s2": spurious_c, "s3": spurious_c}
    free = td_evaluate(chain, partition, reward,
                       TdConfig(episodes=episodes, seed=seed, init=init), constrained.V)
    pinned = td_evaluate(chain, partition, reward,
                         TdConfig(episodes=episodes, seed=seed, init=init, pinned={"s3": 0.0}),
                         constrained.V)
    return {
        "model": "builtin:ex1",
        "policy": {"s1": "alpha", "s2": "tau", "s3": "tau"},
        "gamma": 1.0,
        "gamma_B": gamma_B,
        "spurious_c": float(spurious_c),
        "seed": seed,
        "certificate": cert.as_dict(states),
        "null_space_dim": cert.null_space_dim,
        "family_residuals": family,
        "greedy_by_c": flips,
        "greedy_with_spurious": greedy_action(mdp, spurious, "s1"),
        "greedy_with_constrained": greedy_action(mdp, constrained_map, "s1"),
        "constrained_value": constrained_map,
        "constrained_residual": constrained.residual,
        "td_final": dict(zip(states, free.V.tolist())),
        "td_pinned": dict(zip(states, pinned.V.tolist())),
        "td_pinned_error": float(np.abs(pinned.V - constrained.V).max()),
    }
