"""Ground-truth machinery independent of the Bellman solvers.

Monte Carlo returns, exact finite-horizon expectations, reachability of
accepting BSCCs and a rank/null-space oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .bellman import SurrogateReward
from .chain import BsccPartition, InducedChain
from .errors import ModeRequiresGammaOne
from .linalg import PIVOT_RTOL, null_space_basis, solve
from .rng import seed_key, substream, uniform

DEFAULT_MAX_STEPS = 10_000_000


def finite_horizon_values(chain: InducedChain, reward: SurrogateReward, K: int) -> np.ndarray:
    """``E[G_{0:K} | σ[0] = s]`` for every state, by backward recursion."""
    if K < 0:
        raise ValueError("K must be non-negative")
    R = reward.reward(chain.accepting)
    G = reward.discount(chain.accepting)
    E = R.copy()
    for _ in range(K):
        E = R + G * (chain.P @ E)
    return E


def finite_horizon_return(chain: InducedChain, reward: SurrogateReward, s: int, K: int) -> float:
    return float(finite_horizon_values(chain, reward, K)[s])


def reachability_probability(chain: InducedChain, partition: BsccPartition) -> np.ndarray:
    """Probability of eventually entering an accepting BSCC, per state."""
    x = np.zeros(chain.n)
    for comp in partition.accepting_bsccs:
        x[list(comp)] = 1.0
    T = partition.transient()
    if len(T):
        P_TT = chain.P[np.ix_(T, T)]
        into = chain.P[T] @ x
        x[T] = solve(np.eye(len(T)) - P_TT, into)
    return x


def null_space(matrix, tol: float = PIVOT_RTOL):
    """``(dim, basis)`` of the right null space.

    ``dim`` counts zero pivots of a partial-pivoting elimination where a
    pivot is zero when ``|pivot| <= tol * ||M||_inf``. Basis rows have unit
    2-norm.
    """
    return null_space_basis(matrix, tol)


@dataclass(frozen=True)
class ReturnEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    mode: str
    state: int
    truncated: int = 0
    bias_bound: float | None = None  # cap mode: bound on the neglected tail

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
            "mode": self.mode,
            "state": self.state,
            "truncated": self.truncated,
            "bias_bound": self.bias_bound,
        }


def parse_mode(mode) -> int:
    """Horizon for ``cap:K``; -1 for ``bscc-aware``."""
    if mode == "bscc-aware":
        return -1
    if isinstance(mode, str) and mode.startswith("cap:"):
        K = int(mode[4:])
        if K < 0:
            raise ValueError("cap horizon must be non-negative")
        return K
    raise ValueError(f"mode must be 'bscc-aware' or 'cap:<K>', got {mode!r}")


def _csr(P):
    indptr = np.zeros(P.shape[0] + 1, dtype=np.int64)
    idx, cum = [], []
    for i, row in enumerate(P):
        nz = np.flatnonzero(row > 0)
        idx.append(nz)
        cum.append(np.cumsum(row[nz]))
        indptr[i + 1] = indptr[i] + len(nz)
    return indptr, np.concatenate(idx).astype(np.int64), np.concatenate(cum)


# Samples are simulated in interleaved groups so that independent paths
# overlap their memory latency; results do not depend on the group size.
LANES = 32


@njit(cache=True, parallel=True)
def _simulate(indptr, idx, cum, R, G, stop, stop_value, start, key, samples, horizon, max_steps):
    out = np.zeros(samples)
    cut = np.zeros(samples, dtype=np.bool_)
    blocks = (samples + LANES - 1) // LANES
    for b in prange(blocks):
        width = min(LANES, samples - b * LANES)
        keys = np.empty(width, dtype=np.uint64)
        s = np.full(width, start, dtype=np.int64)
        d = np.ones(width)
        g = np.zeros(width)
        live = np.ones(width, dtype=np.bool_)
        for lane in range(width):
            keys[lane] = substream(key, np.uint64(b * LANES + lane))
        t = 0
        remaining = width
        while remaining > 0:
            for lane in range(width):
                if not live[lane]:
                    continue
                st = s[lane]
                if horizon < 0:
                    if stop[st]:
                        g[lane] += d[lane] * stop_value[st]
                        live[lane] = False
                        remaining -= 1
                        continue
                    if t >= max_steps:
                        cut[b * LANES + lane] = True
                        live[lane] = False
                        remaining -= 1
                        continue
                g[lane] += d[lane] * R[st]
                if t == horizon:
                    live[lane] = False
                    remaining -= 1
                    continue
                d[lane] *= G[st]
                # inverse CDF over the row, branch-free
                u = uniform(keys[lane], np.uint64(t))
                lo = indptr[st]
                j = lo
                for jj in range(lo, indptr[st + 1] - 1):
                    j += u >= cum[jj]
                s[lane] = idx[j]
            t += 1
        for lane in range(width):
            out[b * LANES + lane] = g[lane]
    return out, cut


def mc_return(chain: InducedChain, partition: BsccPartition, reward: SurrogateReward, s: int,
              samples: int, seed: int, mode: str = "bscc-aware",
              max_steps: int = DEFAULT_MAX_STEPS) -> ReturnEstimate:
    """Monte Carlo estimate of the expected return from state ``s``.

    ``cap:K`` sums rewards over the first ``K+1`` states of each path.
    Values never exceed 1, so the tail it drops is at most
    ``max(Γ)^(K+1)``, reported as ``bias_bound`` (1 when γ = 1).
    ``bscc-aware`` (γ = 1 only) stops a path on entering a BSCC and adds
    the accumulated discount times the remaining return there, 1 in an
    accepting BSCC and 0 in a rejecting one. Sample ``i`` draws from
    substream ``i`` of ``seed``, so the estimate depends on nothing but
    ``(seed, samples)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    horizon = parse_mode(mode)
    if horizon < 0 and reward.gamma != 1.0:
        raise ModeRequiresGammaOne("bscc-aware estimation needs gamma = 1")
    stop = np.zeros(chain.n, dtype=np.bool_)
    stop_value = np.zeros(chain.n)
    for comp in partition.bsccs:
        stop[list(comp)] = True
    for comp in partition.accepting_bsccs:
        stop_value[list(comp)] = 1.0
    G = reward.discount(chain.accepting).astype(np.float64)
    values, cut = _run(chain, reward.reward(chain.accepting).astype(np.float64), G,
                       stop, stop_value, s, seed, samples, horizon, max_steps)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    bias = None if horizon < 0 else float(G.max() ** (horizon + 1))
    return ReturnEstimate(mean, stderr, int(samples), int(seed), str(mode), int(s), int(cut.sum()), bias)


def _run(chain, R, G, stop, stop_value, s, seed, samples, horizon, max_steps):
    indptr, idx, cum = _csr(chain.P)
    return _simulate(indptr, idx, cum, R, G, stop, stop_value, int(s), seed_key(seed),
                     int(samples), int(horizon), int(max_steps))


def mc_reach(chain: InducedChain, partition: BsccPartition, s: int, samples: int, seed: int,
             max_steps: int = DEFAULT_MAX_STEPS) -> ReturnEstimate:
    """Empirical frequency of absorption into an accepting BSCC from ``s``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    stop = np.zeros(chain.n, dtype=np.bool_)
    stop_value = np.zeros(chain.n)
    for comp in partition.bsccs:
        stop[list(comp)] = True
    for comp in partition.accepting_bsccs:
        stop_value[list(comp)] = 1.0
    hits, cut = _run(chain, np.zeros(chain.n), np.ones(chain.n), stop, stop_value,
                     s, seed, samples, -1, max_steps)
    mean = float(hits.mean())
    stderr = float(hits.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return ReturnEstimate(mean, stderr, int(samples), int(seed), "reach", int(s), int(cut.sum()))


@dataclass(frozen=True)
class Trajectory:
    states: tuple
    termination: str  # "bscc:<k>" (index into partition.bsccs) or "horizon"


def sample_path(chain: InducedChain, partition: BsccPartition, s: int, seed: int, index: int = 0,
                horizon: int = 10_000) -> Trajectory:
    """Path ``index`` of ``seed`` from ``s``, stopped on BSCC entry or after ``horizon`` moves.

    Uses the same draws as sample ``index`` of :func:`mc_return`.
    """
    bscc_of = {}
    for k, comp in enumerate(partition.bsccs):
        for i in comp:
            bscc_of[i] = k
    key = np.uint64(substream(seed_key(seed), np.uint64(index)))
    path = [int(s)]
    for t in range(horizon + 1):
        if path[-1] in bscc_of:
            return Trajectory(tuple(path), f"bscc:{bscc_of[path[-1]]}")
        if t == horizon:
            break
        row = chain.P[path[-1]]
        nz = np.flatnonzero(row > 0)
        cum = np.cumsum(row[nz])
        u = uniform(key, np.uint64(t))
        path.append(int(nz[min(int(np.searchsorted(cum[:-1], u, side="right")), len(nz) - 1)]))
    return Trajectory(tuple(path), "horizon")
