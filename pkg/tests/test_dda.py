import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from growdda.dda import (
    DdaState,
    ProblemInstance,
    ScheduleSpec,
    centralized_dual_averaging,
    checkpoint_times,
    convergence_time,
    dda_step,
    interval_schedule,
    l1_subgradient,
    prox_step,
    run_dda,
    solve_lad_ball,
    step_size,
)
from growdda.graph import DynamicNetwork, Graph, GraphError, consensus_matrix, laplacian, random_sensor_graph
from oracles import path, random_connected


def test_prox_examples():
    assert np.array_equal(prox_step(np.zeros(3), 0.5, 1.0), np.zeros(3))
    assert np.allclose(prox_step([3.0, 4.0], 1.0, 5.0), [-3, -4])
    assert np.allclose(prox_step([3.0, 4.0], 1.0, 1.0), [-0.6, -0.8])
    with pytest.raises(ValueError):
        prox_step([1.0], 0.0, 1.0)


@given(st.integers(1, 6), st.floats(0.01, 10), st.floats(0.1, 5), st.integers(0, 10**6))
def test_prox_is_constrained_argmin(p, alpha, R, seed):
    z = np.random.default_rng(seed).standard_normal(p) * 3
    x = prox_step(z, alpha, R)
    assert np.linalg.norm(x) <= R + 1e-12
    obj = lambda u: z @ u + u @ u / (2 * alpha)  # noqa: E731
    cons = {"type": "ineq", "fun": lambda u: R**2 - u @ u}
    ref = minimize(obj, np.zeros(p), constraints=[cons], method="SLSQP", options={"ftol": 1e-12})
    assert obj(x) <= ref.fun + 1e-6


def test_l1_subgradient_cases():
    b = np.array([1.0, -2.0])
    assert np.array_equal(l1_subgradient(np.zeros(2), 1.0, b), -b)
    assert np.array_equal(l1_subgradient(np.array([1.0, 0.0]), 1.0, b), np.zeros(2))


@given(st.integers(1, 5), st.integers(0, 10**6))
def test_l1_subgradient_finite_difference(p, seed):
    rng = np.random.default_rng(seed)
    x, b, y = rng.standard_normal(p), rng.standard_normal(p), rng.standard_normal()
    if abs(y - b @ x) < 1e-3:
        return
    f = lambda u: abs(y - b @ u)  # noqa: E731
    d = rng.standard_normal(p)
    h = 1e-7
    fd = (f(x + h * d) - f(x - h * d)) / (2 * h)
    assert l1_subgradient(x, y, b) @ d == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_single_agent_step_is_dual_averaging():
    inst = ProblemInstance(np.array([[1.0, 2.0]]), np.array([3.0]), R=10.0)
    s = dda_step(DdaState.zeros(1, 2), np.eye(1), inst, 0.5)
    assert np.allclose(s.z, [[-1.0, -2.0]])
    assert np.allclose(s.x, [[0.5, 1.0]])


def test_consensus_preserved_when_all_equal():
    n, p = 4, 3
    B = np.tile([1.0, 0.5, -1.0], (n, 1))
    inst = ProblemInstance(B, np.ones(n), R=5)
    g = Graph(n, path(n))
    P = consensus_matrix(laplacian(g), 2)
    z = np.tile([0.3, -0.2, 0.1], (n, 1))
    s = dda_step(DdaState(z, np.zeros((n, p)), np.zeros((n, p)), 0), P, inst, 0.1)
    assert np.allclose(s.z, s.z[0])


def test_two_agent_hand_step():
    inst = ProblemInstance(np.array([[1.0], [2.0]]), np.array([1.0, -1.0]), R=10)
    P = consensus_matrix(laplacian(Graph(2, [(0, 1)])), 1)  # [[3/4,1/4],[1/4,3/4]]
    z0 = np.array([[1.0], [-1.0]])
    x0 = np.array([[0.0], [0.0]])
    s = dda_step(DdaState(z0, x0, np.zeros((2, 1)), 0), P, inst, 0.5)
    # mixed: 0.5, -0.5; subgradients at x=0: -sign(1)*1 = -1, -sign(-1)*2 = 2
    assert np.allclose(s.z, [[-0.5], [1.5]])
    assert np.allclose(s.x, [[0.25], [-0.75]])


def test_dimension_mismatch():
    inst = ProblemInstance(np.ones((2, 1)), np.ones(2))
    with pytest.raises(ValueError):
        dda_step(DdaState.zeros(3, 1), np.eye(3), inst, 1.0)


def test_step_size_convention():
    assert step_size(0, 2.0) == step_size(1, 2.0) == 2.0
    assert step_size(4, 2.0) == 1.0


def test_interval_schedule():
    es = [(0, 3), (0, 2), (1, 3)]
    assert interval_schedule(es, 2, 10) == [(1, (0, 3)), (3, (0, 2)), (5, (1, 3))]
    assert interval_schedule(es, 5, 7) == [(1, (0, 3)), (6, (0, 2))]
    with pytest.raises(ValueError):
        interval_schedule(es, 0, 10)


def test_schedule_spec_orders_greedily():
    spec = ScheduleSpec(((0, 2), (0, 3)), Delta=1, T=10)
    net = spec.network(Graph(4, path(4)))
    assert net.additions == ((1, (0, 3)), (2, (0, 2)))
    given_order = ScheduleSpec(((0, 2), (0, 3)), T=10, ordering="given").network(Graph(4, path(4)))
    assert given_order.additions[0] == (1, (0, 2))


def test_checkpoints():
    assert list(checkpoint_times(10)) == list(range(1, 11))
    ts = checkpoint_times(5000)
    assert ts[0] == 5 and ts[-1] == 5000 and len(ts) == 1000
    assert list(checkpoint_times(7, 3)) == [3, 6, 7]


def test_lad_oracle_trivial_and_stable():
    B = np.random.default_rng(0).standard_normal((6, 3))
    x, f = solve_lad_ball(ProblemInstance(B, np.zeros(6)))
    assert f == pytest.approx(0, abs=1e-12) and np.allclose(x, 0, atol=1e-9)
    inst = ProblemInstance.random(50, 5, rng=np.random.default_rng(3))
    f1 = solve_lad_ball(inst)[1]
    perm = np.random.default_rng(9).permutation(50)
    f2 = solve_lad_ball(ProblemInstance(inst.B[perm], inst.y[perm], inst.R))[1]
    assert f1 == pytest.approx(f2, abs=1e-6)


def test_lad_oracle_active_ball():
    # unconstrained optimum far outside a small ball
    rng = np.random.default_rng(1)
    B = rng.standard_normal((30, 2))
    xt = np.array([4.0, -3.0])
    inst = ProblemInstance(B, B @ xt, R=1.0)
    x, f = solve_lad_ball(inst)
    assert np.linalg.norm(x) <= 1 + 1e-12
    ang = np.linspace(0, 2 * np.pi, 20001)
    circle = np.stack([np.cos(ang), np.sin(ang)], 1)
    assert f <= inst.objective(circle).min() + 1e-6


def _static_run(n=8, seed=0):
    rng = np.random.default_rng(seed)
    base = Graph(n, random_connected(rng, n, 0.1))
    inst = ProblemInstance.random(n, 3, rng=rng)
    return inst, base


def test_run_dda_invariants():
    inst, base = _static_run()
    cands = [(i, j) for i in range(8) for j in range(i + 1, 8) if (i, j) not in set(base.edges)][:4]
    net = DynamicNetwork(base, tuple(interval_schedule(cands, 3, 400)))
    traj, states = run_dda(inst, net, 400, checkpoint_every=1, record_states=True)
    assert np.all(np.diff(traj.lambda_n1_Lt) >= -1e-12)
    assert np.all(np.diff(traj.sigma2_Pt) <= 1e-12)
    assert list(traj.edges_added[:12]) == [1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4]
    assert np.all(traj.max_regret >= -1e-9)
    prev = np.zeros_like(states[0].z)
    prevx = np.zeros_like(states[0].x)
    for s in states:
        assert np.linalg.norm(s.x, axis=1).max() <= inst.R + 1e-12
        g = inst.local_subgradients(prevx)
        assert np.allclose(s.z.mean(0), prev.mean(0) + g.mean(0), atol=1e-10)
        prev, prevx = s.z, s.x
    assert np.allclose(states[-1].xbar, sum(s.x for s in states) / len(states), atol=1e-12)


def test_run_dda_static_spectrum_constant():
    inst, base = _static_run()
    # Delta = T: one edge at t = 1, nothing afterwards
    first = next((i, j) for i in range(8) for j in range(i + 1, 8) if (i, j) not in set(base.edges))
    net = DynamicNetwork(base, tuple(interval_schedule([first, (0, 0)], 200, 200)))
    traj = run_dda(inst, net, 200, checkpoint_every=10)
    assert np.ptp(traj.lambda_n1_Lt) == 0 and np.ptp(traj.sigma2_Pt) == 0


def test_run_dda_deterministic():
    inst, base = _static_run()
    net = DynamicNetwork(base)
    a = run_dda(inst, net, 300)
    b = run_dda(inst, DynamicNetwork(base), 300)
    assert np.array_equal(a.max_regret, b.max_regret)


def test_run_dda_rejects_disconnected():
    inst = ProblemInstance.random(4, 2, rng=np.random.default_rng(0))
    with pytest.raises(GraphError):
        run_dda(inst, DynamicNetwork(Graph(4, [(0, 1)])), 10)


def test_single_agent_matches_centralized_bitwise():
    inst = ProblemInstance.random(1, 4, rng=np.random.default_rng(5))
    net = DynamicNetwork(Graph(1))
    T = 2000
    traj, states = run_dda(inst, net, T, checkpoint_every=1, record_states=True)
    xs, z, x = centralized_dual_averaging(inst, T, traj.a, checkpoint_times(T, 1))
    assert np.array_equal(np.vstack([s.xbar for s in states]), xs)
    assert np.array_equal(states[-1].z[0], z) and np.array_equal(states[-1].x[0], x)
    f = np.array([inst.objective(row[None, :])[0] for row in xs]) - traj.f_star
    assert np.array_equal(f, traj.max_regret)


def test_single_agent_regret_rate():
    inst = ProblemInstance.random(1, 5, rng=np.random.default_rng(8))
    T = 10**4
    traj = run_dda(inst, DynamicNetwork(Graph(1)), T)
    assert traj.max_regret[-1] <= 3 * inst.R * inst.L / math.sqrt(T)


def test_dynamic_beats_static_on_average():
    base = random_sensor_graph(30, 0.25, seed=1)
    cands = [(i, j) for i in range(30) for j in range(i + 1, 30) if (i, j) not in set(base.edges)]
    rng = np.random.default_rng(0)
    picks = [cands[k] for k in rng.choice(len(cands), 60, replace=False)]
    stat, dyn = [], []
    for trial in range(5):
        inst = ProblemInstance.random(30, 5, rng=np.random.default_rng(trial))
        fs = solve_lad_ball(inst)[1]
        a = run_dda(inst, DynamicNetwork(base), 2000, f_star=fs).a
        stat.append(run_dda(inst, DynamicNetwork(base), 2000, a=a, f_star=fs).max_regret[-1])
        net = DynamicNetwork(base, tuple(interval_schedule(picks, 1, 2000)))
        dyn.append(run_dda(inst, net, 2000, a=a, f_star=fs).max_regret[-1])
    assert np.mean(dyn) < np.mean(stat)


def test_convergence_time():
    inst, base = _static_run()
    traj = run_dda(inst, DynamicNetwork(base), 300, checkpoint_every=1)
    eps = float(np.median(traj.max_regret))
    t = convergence_time(traj, eps)
    assert np.all(traj.max_regret[traj.t >= t] <= eps)
    assert convergence_time(traj, -1.0) == 300
