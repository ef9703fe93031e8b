import numpy as np
import pytest

from urnflow.analysis import (
    AttractorSpec,
    attractor_distance,
    boundary_equilibria,
    check_permanence,
    check_uniform_growth,
    detect_periodic_orbit,
    growth_condition_value,
    interior_equilibrium,
    orbit_average,
)
from urnflow.errors import UrnflowError
from urnflow.meanfield import MeanLimitSystem, flow
from urnflow.models import build_replicator, hypercycle


def test_hypercycle_boundary_equilibria_are_vertices(hyper3, hyper5):
    for (_, _, A), k in ((hyper3, 3), (hyper5, 5)):
        eqs = boundary_equilibria(A)
        assert len(eqs) == k
        supports = sorted(e.support for e in eqs.equilibria)
        assert supports == [(i,) for i in range(k)]
        for e in eqs.equilibria:
            assert e.residual <= 1e-9


def test_no_interior_edge_equilibria_brute_force(hyper3):
    # grid search along each edge confirms only the vertices solve the field
    _, _, A = hyper3
    for i in range(3):
        for j in range(i + 1, 3):
            for t in np.linspace(0.05, 0.95, 19):
                x = np.zeros(3)
                x[i], x[j] = t, 1.0 - t
                y = A @ x
                assert np.linalg.norm(x * (y - x @ y)) > 1e-4


def test_zero_matrix_degenerate(hyper3):
    eqs = boundary_equilibria(np.zeros((3, 3)))
    assert sorted(e.support for e in eqs.equilibria) == [(0,), (1,), (2,)]
    assert len(eqs.degenerate_supports) == 3  # all two-point faces singular


def test_interior_equilibrium_values(hyper3, hyper5):
    for (_, _, A), k in ((hyper3, 3), (hyper5, 5)):
        xhat = interior_equilibrium(A)
        assert np.allclose(xhat, 1.0 / k, atol=1e-12)
    rps = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
    assert np.allclose(interior_equilibrium(rps), 1.0 / 3.0, atol=1e-12)
    assert interior_equilibrium(np.zeros((3, 3))) is None


def test_permanence_hypercycle_vertices(hyper5):
    _, _, A = hyper5
    eqs = boundary_equilibria(A)
    rep = check_permanence(A, np.ones(5), eqs)
    assert rep.holds and not rep.vacuous
    assert rep.min_value == pytest.approx(16.0 / 15.0, abs=1e-10)
    assert all(v == pytest.approx(16.0 / 15.0, abs=1e-10) for v in rep.values)


def test_permanence_positive_homogeneity(hyper5):
    _, _, A = hyper5
    eqs = boundary_equilibria(A)
    r1 = check_permanence(A, np.ones(5), eqs)
    r3 = check_permanence(A, 3.0 * np.ones(5), eqs)
    assert np.allclose(r3.values, 3.0 * np.array(r1.values), atol=1e-12)
    assert r1.holds == r3.holds


def test_permanence_fails_for_dominant_strategy():
    # strategy 1 strictly dominates: its vertex is uninvadable
    A = np.array([[2.0, 2.0], [0.0, 0.0]])
    eqs = boundary_equilibria(A)
    rep = check_permanence(A, np.ones(2), eqs)
    assert not rep.holds
    assert rep.min_value <= 0.0


def test_permanence_vacuous_flag(hyper5):
    _, _, A = hyper5
    from urnflow.analysis import EquilibriumSet

    rep = check_permanence(A, np.ones(5), EquilibriumSet(equilibria=[]))
    assert rep.vacuous and rep.holds


def test_equilibria_relabeling_invariance(hyper5, rng):
    _, _, A = hyper5
    perm = rng.permutation(5)
    P = np.eye(5)[perm]
    eqs = boundary_equilibria(A)
    eqs_p = boundary_equilibria(P @ A @ P.T)
    pts = sorted(tuple(np.round(e.point, 10)) for e in eqs.equilibria)
    pts_relabeled = sorted(
        tuple(np.round(e.point @ P, 10)) for e in eqs_p.equilibria
    )
    assert pts == pts_relabeled


def test_growth_condition_values():
    assert growth_condition_value(hypercycle(5)) == pytest.approx(1.0 / 75.0, abs=1e-12)
    assert growth_condition_value(hypercycle(5, d=4.0)) == pytest.approx(
        -7.0 / 45.0, abs=1e-12
    )
    from urnflow.models import ReplicatorParams

    neutral = ReplicatorParams(
        k=3, b=1.5, d=1.5, nu=0.0, B=np.zeros((3, 3)), D=np.zeros((3, 3))
    )
    assert growth_condition_value(neutral) == pytest.approx(0.0, abs=1e-15)


def test_check_uniform_growth(hyper5):
    _, system, _ = hyper5
    lo, hi = check_uniform_growth(system, np.full((1, 5), 0.2))
    assert lo == pytest.approx(1.0 / 75.0, abs=1e-12)
    assert hi == pytest.approx(1.0 / 75.0, abs=1e-12)
    const = MeanLimitSystem(k=2, drift=lambda x: np.zeros(2), growth=lambda x: 0.4)
    assert check_uniform_growth(const, np.array([[0.5, 0.5], [0.2, 0.8]])) == (0.4, 0.4)


def test_growth_mixed_sign_on_attractor(hyper5):
    # the interior attractor has phases of decline and growth, which is why
    # windowed averages (not uniform bounds) decide the regime
    _, system, _ = hyper5
    fs = flow(system, np.array([0.25, 0.2, 0.2, 0.18, 0.17]), 2000.0)
    samples = fs.points[fs.times >= 1000.0]
    lo, hi = check_uniform_growth(system, samples)
    assert lo < 0.0 < hi


def test_detect_orbit_on_fixture(sm_fixture):
    _, _, system = sm_fixture
    orb = detect_periodic_orbit(
        system, np.array([1 / 3 + 1e-3, 1 / 3 - 1e-3, 1 / 3]), t_max=6000.0
    )
    assert orb is not None
    assert orb.period > 0
    assert np.linalg.norm(orb.points[-1] - orb.points[0]) <= 1e-6
    restart = detect_periodic_orbit(
        system, np.ascontiguousarray(orb.points[40]), t_max=6000.0
    )
    assert restart is not None
    assert abs(restart.period - orb.period) / orb.period <= 1e-4


def test_detect_orbit_none_for_stable_equilibrium(hyper3):
    _, system, _ = hyper3
    assert detect_periodic_orbit(system, np.array([0.5, 0.3, 0.2]), t_max=2000.0) is None


def test_detect_orbit_none_for_plain_sink():
    # gradient-like flow toward the center: no returns
    center = np.full(3, 1.0 / 3.0)
    system = MeanLimitSystem(
        k=3, drift=lambda x: 0.2 * (center - x), growth=lambda x: 0.0
    )
    assert detect_periodic_orbit(system, np.array([0.6, 0.3, 0.1]), t_max=500.0) is None


def test_orbit_average_drift_vanishes(sm_fixture):
    _, _, system = sm_fixture
    orb = detect_periodic_orbit(
        system, np.array([1 / 3 + 1e-3, 1 / 3 - 1e-3, 1 / 3]), t_max=6000.0
    )
    avg = orbit_average(system.drift, orb)
    assert np.max(np.abs(avg)) <= 1e-4


def test_orbit_average_point_and_constants():
    spec = AttractorSpec(kind="point", points=np.array([0.2, 0.8]))
    assert orbit_average(lambda x: 3.0, spec) == 3.0
    sample = AttractorSpec(kind="sampled_set", points=np.array([[0.5, 0.5]]))
    with pytest.raises(UrnflowError):
        orbit_average(lambda x: 1.0, sample)


def test_attractor_distance():
    spec = AttractorSpec(kind="point", points=np.full(5, 0.2))
    e1 = np.zeros(5)
    e1[0] = 1.0
    assert attractor_distance(e1, spec) == pytest.approx(np.sqrt(0.8), abs=1e-12)
    assert attractor_distance(np.full(5, 0.2), spec) == 0.0


def test_attractor_spec_validation():
    with pytest.raises(ValueError):
        AttractorSpec(kind="blob", points=np.zeros(2))
    with pytest.raises(ValueError):
        AttractorSpec(kind="periodic_orbit", points=np.array([[0.1, 0.9], [0.9, 0.1]]),
                      period=1.0)  # closure gap too large
