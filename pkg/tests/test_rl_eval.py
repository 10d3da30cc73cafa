import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from buchi_bellman import builtin_models
from buchi_bellman.bellman import SurrogateReward, build_system, solve_constrained, solve_discounted
from buchi_bellman.chain import decompose, induce_chain
from buchi_bellman.rl_eval import TdConfig, greedy_action, pathology_demo, td_evaluate

from suites import mixed_suite


def ex1():
    m = builtin_models.model("ex1")
    ch = induce_chain(m, builtin_models.policy("ex1-alpha"))
    return m, ch, decompose(ch)


def _pins(ch, part, value=0.0):
    return {ch.states[i]: value for comp in part.rejecting_bsccs for i in comp}


def test_discounted_ex1_converges():
    _, ch, part = ex1()
    r = SurrogateReward(0.9, 0.5)
    V = solve_discounted(build_system(ch, r), ch).V
    res = td_evaluate(ch, part, r, TdConfig(episodes=20_000, seed=3), reference=V)
    assert np.abs(res.V - V).max() <= 1e-3
    assert res.error[-1] == np.abs(res.V - V).max()


def test_pinned_ex1():
    _, ch, part = ex1()
    res = td_evaluate(ch, part, SurrogateReward(1.0, 0.5),
                      TdConfig(episodes=20_000, seed=1, pinned={"s3": 0.0}))
    assert np.allclose(res.V, [1.0, 1.0, 0.0], atol=1e-3)
    assert res.V[2] == 0.0


@pytest.mark.parametrize("c", [2.0, -1.0, 0.25])
def test_rejecting_loop_keeps_its_start(c):
    _, ch, part = ex1()
    res = td_evaluate(ch, part, SurrogateReward(1.0, 0.5), TdConfig(episodes=5_000, seed=0, init=c))
    assert res.V[2] == c  # self-loop with zero reward: the TD error is exactly 0


def test_greedy_examples():
    m = builtin_models.model("ex1")
    assert greedy_action(m, {"s2": 1.0, "s3": 0.0}, "s1") == "alpha"
    assert greedy_action(m, {"s2": 1.0, "s3": 2.0}, "s1") == "beta"
    assert greedy_action(m, {"s2": 1.0, "s3": 1.0}, "s1") == "alpha"  # tie: smallest id


def test_pathology_demo():
    d = pathology_demo(gamma_B=0.5, spurious_c=2.0, seed=0, episodes=5_000)
    assert d["null_space_dim"] == 1
    assert d["certificate"]["unique"] is False
    assert all(abs(v) <= 1e-12 for v in d["family_residuals"].values())
    assert d["greedy_with_spurious"] == "beta"
    assert d["greedy_with_constrained"] == "alpha"
    assert d["greedy_by_c"] == {"0.0": "alpha", "0.5": "alpha", "1.0": "alpha",
                                "1.5": "beta", "2.0": "beta"}
    assert d["constrained_value"] == {"s1": 1.0, "s2": 1.0, "s3": 0.0}
    assert d["td_final"]["s3"] == 2.0
    assert d["td_pinned_error"] <= 1e-2
    with pytest.raises(ValueError):
        pathology_demo(spurious_c=0.0)


@pytest.mark.parametrize("gamma_B", [0.1, 0.5, 0.9])
def test_pathology_demo_any_gamma_b(gamma_B):
    d = pathology_demo(gamma_B=gamma_B, spurious_c=0.5, episodes=2_000)
    assert d["null_space_dim"] == 1
    assert d["td_final"]["s3"] == 0.5


def test_seed_determinism():
    g, ch, part = mixed_suite()[4]
    r = SurrogateReward(1.0, 0.9)
    cfg = TdConfig(episodes=3_000, seed=17, pinned=_pins(ch, part))
    a = td_evaluate(ch, part, r, cfg, reference=np.zeros(ch.n))
    b = td_evaluate(ch, part, r, cfg, reference=np.zeros(ch.n))
    assert a.V.tobytes() == b.V.tobytes()
    assert a.max_update.tobytes() == b.max_update.tobytes()
    assert a.error.tobytes() == b.error.tobytes()
    assert np.array_equal(a.visits, b.visits)
    c = td_evaluate(ch, part, r, TdConfig(episodes=3_000, seed=18, pinned=_pins(ch, part)))
    assert c.V.tobytes() != a.V.tobytes()


# Small, nearly constant steps and an average over independent seeds keep
# the sampling noise below the drift bound.
FP = dict(episodes=10_000, a0=0.005, tau=1e4)
FP_SEEDS = 64


def _mean_td(ch, part, r, start, seeds):
    init = dict(zip(ch.states, start.tolist()))
    runs = [td_evaluate(ch, part, r, TdConfig(seed=k, init=init, pinned=_pins(ch, part), **FP)).V
            for k in range(seeds)]
    return np.mean(runs, axis=0)


def test_constrained_solution_is_a_td_fixed_point():
    r = SurrogateReward(1.0, 0.9)
    worst = 0.0
    for g, ch, part in mixed_suite():
        V = solve_constrained(ch, part, 0.9).V
        worst = max(worst, np.abs(_mean_td(ch, part, r, V, FP_SEEDS) - V).max())
    assert worst <= 0.01


def test_td_moves_a_perturbed_start_toward_the_solution():
    # the same schedule is not too timid to notice a wrong start
    r = SurrogateReward(1.0, 0.9)
    for g, ch, part in mixed_suite()[:40]:
        T = part.transient()
        if len(T) == 0:
            continue
        V = solve_constrained(ch, part, 0.9).V
        W = V.copy()
        W[T] = np.where(V[T] > 0.5, V[T] - 0.3, V[T] + 0.3)
        after = _mean_td(ch, part, r, W, 8)
        assert np.abs(after - V)[T].max() <= 0.5 * 0.3


@settings(max_examples=30, deadline=None)
@given(k=st.integers(0, 99), seed=st.integers(0, 2**32 - 1), gamma_B=st.floats(0.05, 0.95))
def test_pinned_values_stay_in_unit_interval(k, seed, gamma_B):
    g, ch, part = mixed_suite()[k]
    res = td_evaluate(ch, part, SurrogateReward(1.0, gamma_B),
                      TdConfig(episodes=500, seed=seed, a0=1.0, tau=10.0, pinned=_pins(ch, part)))
    assert 0.0 <= res.low and res.high <= 1.0
    for comp in part.rejecting_bsccs:
        assert np.all(res.V[list(comp)] == 0.0)


def test_config_validation():
    for bad in (dict(a0=0.0), dict(a0=1.5), dict(tau=0.0), dict(episodes=-1), dict(max_steps=0)):
        with pytest.raises(ValueError):
            TdConfig(**bad)
    _, ch, part = ex1()
    r = SurrogateReward(1.0, 0.5)
    with pytest.raises(ValueError):
        td_evaluate(ch, part, r, TdConfig(init="ones"))
    with pytest.raises(ValueError):
        td_evaluate(ch, part, r, TdConfig(init={"nope": 1.0}))
    with pytest.raises(ValueError):
        td_evaluate(ch, part, r, TdConfig(pinned={"nope": 0.0}))
    cfg = TdConfig(init={"s1": 0.5}, pinned={"s3": 0.0})
    assert cfg.initial_values(list(ch.states)).tolist() == [0.5, 0.0, 0.0]
    assert cfg.as_dict()["pinned"] == {"s3": 0.0}


def test_zero_episodes():
    _, ch, part = ex1()
    res = td_evaluate(ch, part, SurrogateReward(1.0, 0.5), TdConfig(episodes=0, init=0.3))
    assert res.V.tolist() == [0.3, 0.3, 0.3]
    assert res.as_dict(ch.states)["final_max_update"] == 0.0
