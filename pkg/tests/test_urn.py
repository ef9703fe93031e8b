import numpy as np
import pytest

from urnflow.errors import HorizonError, KernelMassError, NegativeCountError
from urnflow.models import (
    ReplicatorParams,
    build_replicator,
    coin_flip,
    hypercycle,
    pure_birth,
    pure_death,
    type_switch,
)
from urnflow.rng import make_generator
from urnflow.urn import (
    StopCondition,
    TransitionRule,
    alpha,
    interpolate,
    kernel_limit_gap,
    make_model,
    move_size,
    simulate,
    step,
    validate_model,
)


def test_alpha_and_move_size():
    assert alpha([1, -1, 0]) == 0
    assert alpha([2, 0, 0]) == 2
    assert alpha([-1, -1, 0]) == -2
    assert move_size([1, -1, 0]) == 2
    assert move_size([2, 0, 0]) == 2


def test_stop_condition_validation():
    with pytest.raises(ValueError):
        StopCondition(on_extinction=False)
    with pytest.raises(ValueError):
        StopCondition(max_steps=10, mode="sometimes")
    s = StopCondition(max_steps=10, max_population=50, mode="all")
    kw = s.backend_kwargs()
    assert kw["stop_all"] and kw["n_max"] == 10 and kw["pop_max"] == 50


def test_step_absorbing_at_zero():
    model = pure_death(2)
    gen = make_generator(0)
    z = step(model, np.array([0, 0]), gen)
    assert np.array_equal(z, [0, 0])


def test_step_pure_death_single():
    model = pure_death(1)
    gen = make_generator(0)
    assert np.array_equal(step(model, np.array([1]), gen), [0])


def test_step_replicator_moves_bounded():
    model, _, _ = build_replicator(hypercycle(5))
    gen = make_generator(7)
    z = np.array([5, 5, 5, 5, 5])
    z2 = step(model, z, gen)
    assert np.abs(z2 - z).sum() <= 2
    assert z2.min() >= 0


def test_step_rejects_mass_deficit():
    bad = make_model(
        1, [TransitionRule(move=np.array([1]), limit_prob=lambda x: 0.5)]
    )
    with pytest.raises(KernelMassError):
        step(bad, np.array([3]), make_generator(0))


def test_negative_count_guard():
    # a constant-probability death fires even when the type is absent
    bad = make_model(
        2,
        [
            TransitionRule(move=np.array([0, -1]), limit_prob=lambda x: 0.5),
            TransitionRule(move=np.array([1, 0]), limit_prob=lambda x: 0.5),
        ],
    )
    with pytest.raises(NegativeCountError):
        for s in range(20):
            simulate(bad, np.array([2, 0]), StopCondition(max_steps=20), seed=s)


def test_simulate_pure_death_tau_clock():
    path = simulate(pure_death(2), np.array([3, 0]), StopCondition(), seed=1)
    assert len(path.n) == 4
    assert np.allclose(path.tau, [0.0, 1 / 3, 1 / 3 + 1 / 2, 1 / 3 + 1 / 2 + 1])
    assert path.stop_reason == "extinct"
    assert np.array_equal(path.z[:, 0], [3, 2, 1, 0])


def test_simulate_extinct_start_single_row():
    path = simulate(pure_death(1), np.array([0]), StopCondition(max_steps=10), seed=0)
    assert len(path.n) == 1
    assert np.array_equal(path.frequencies, [[0.0]])


def test_simulate_deterministic(hyper5):
    model, _, _ = hyper5
    stop = StopCondition(max_steps=5000)
    a = simulate(model, np.array([20] * 5), stop, seed=99)
    b = simulate(model, np.array([20] * 5), stop, seed=99)
    assert np.array_equal(a.z, b.z)
    assert np.array_equal(a.tau, b.tau)
    c = simulate(model, np.array([20] * 5), stop, seed=100)
    assert not np.array_equal(a.z, c.z)


def test_tau_clock_recursion_full_resolution(hyper5):
    model, _, _ = hyper5
    path = simulate(model, np.array([10] * 5), StopCondition(max_steps=2000), seed=5)
    pops = path.population
    # replay the recursion: the stored clock is exactly this running sum
    cum = 0.0
    for i in range(len(pops) - 1):
        cum += 1.0 / pops[i] if pops[i] > 0 else 1.0
        assert path.tau[i + 1] == cum
    assert (np.diff(path.tau) > 0).all()


def test_absorption_stays_at_zero():
    path = simulate(
        pure_death(1), np.array([2]), StopCondition(max_steps=10, on_extinction=False), seed=0
    )
    assert path.steps == 10
    assert (path.z[path.n >= 2] == 0).all()
    assert np.allclose(np.diff(path.tau[-3:]), 1.0)  # null steps tick by 1


def test_thinning_row_count(hyper5):
    model, _, _ = hyper5
    for steps, thin in ((250, 100), (200, 100), (1000, 7)):
        path = simulate(
            model, np.array([50] * 5), StopCondition(max_steps=steps), seed=3, thin=thin
        )
        expected = int(np.ceil(steps / thin)) + 1
        assert len(path.n) == expected
        assert path.n[0] == 0 and path.n[-1] == steps


def test_forced_indices_recorded(hyper5):
    model, _, _ = hyper5
    path = simulate(
        model,
        np.array([50] * 5),
        StopCondition(max_steps=1000),
        seed=3,
        thin=400,
        forced_indices=[123, 777],
    )
    assert {123, 777} <= set(path.n.tolist())


def test_interpolation():
    path = simulate(pure_death(2), np.array([3, 0]), StopCondition(), seed=1)
    assert np.array_equal(interpolate(path, 0.0), [1.0, 0.0])
    # exact update times take the new value
    assert np.array_equal(interpolate(path, float(path.tau[1])), path.frequencies[1])
    # tau(1)=1/3 <= 0.5 < tau(2)=5/6
    assert np.array_equal(interpolate(path, 0.5), path.frequencies[1])
    with pytest.raises(HorizonError):
        interpolate(path, path.final_tau + 1.0)


def test_conditional_mean_increment_examples(hyper5):
    assert np.allclose(
        pure_death(2).conditional_mean_increment(np.array([4, 0])), [-1.0, 0.0]
    )
    assert np.allclose(coin_flip().conditional_mean_increment(np.array([9])), [0.0])
    model, system, _ = hyper5
    n = 100_000
    cmi = model.conditional_mean_increment(np.array([n // 5] * 5))
    assert abs(cmi.sum() - 1.0 / 75.0) < 1e-6


def test_validate_replicator_normalization(hyper5):
    model, _, _ = hyper5
    states = [np.array([2, 2, 2, 2, 2]), np.array([20] * 5), np.array([200] * 5)]
    rep = validate_model(model, states)
    assert rep.ok
    assert rep.norm_error < 1e-12
    assert rep.empirical_a == 0.0  # hypercycle kernel equals the limits exactly
    assert rep.max_move_size == 2


def test_validate_flags_move_bound_breach():
    rules = [TransitionRule(move=np.array([3]), limit_prob=lambda x: 1.0)]
    model = make_model(1, rules, m=2)
    rep = validate_model(model, [np.array([5])])
    assert not rep.ok
    assert any("exceeds declared bound" in v for v in rep.violations)


def test_validate_flags_negative_reachability():
    rules = [
        TransitionRule(move=np.array([0, -1]), limit_prob=lambda x: 0.5),
        TransitionRule(move=np.array([1, 0]), limit_prob=lambda x: 0.5),
    ]
    model = make_model(2, rules)
    rep = validate_model(model, [np.array([4, 0])])
    assert not rep.ok


def test_validate_corrected_model_gap_structure(rng):
    # positive diagonal births: the only kernel/limit gaps sit at the
    # double-birth moves and the null remainder
    B = np.full((3, 3), 0.3)
    params = ReplicatorParams(k=3, b=1.0, d=1.0, nu=2.0, B=B, D=np.zeros((3, 3)))
    model, _, _ = build_replicator(params)
    z = np.array([30, 40, 30])
    moves, kernel = model.outcome_entries(z)
    limits = model.limit_probs(z / z.sum())
    gaps = np.abs(kernel - limits)
    nz = np.nonzero(gaps > 1e-15)[0]
    for idx in nz:
        mv = moves[idx]
        assert (np.abs(mv).sum() == 0) or (set(mv.tolist()) <= {0, 2} and mv.sum() == 2)
    # empirical gap constant does not grow with |z|
    a100 = kernel_limit_gap(model, np.array([34, 33, 33]))
    a1000 = kernel_limit_gap(model, np.array([334, 333, 333]))
    a10000 = kernel_limit_gap(model, np.array([3334, 3333, 3333]))
    assert a1000 <= a100 * 1.01 and a10000 <= a1000 * 1.01
    assert a100 <= model.a_bound + 1e-12


def test_simulate_stop_modes(hyper5):
    model, _, _ = hyper5
    both = StopCondition(max_steps=500, max_tau=2.0, mode="all", on_extinction=False)
    path = simulate(model, np.array([100] * 5), both, seed=1)
    assert path.steps >= 500 and path.final_tau >= 2.0


def test_type_switch_population_constant():
    model = type_switch(3)
    path = simulate(model, np.array([10, 5, 5]), StopCondition(max_steps=300), seed=2)
    assert (path.population == 20).all()


def test_pure_birth_growth():
    path = simulate(
        pure_birth(1), np.array([1]), StopCondition(max_population=50), seed=0
    )
    assert path.stop_reason == "max_population"
    assert path.population[-1] == 50
