import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lksim.global_model import ScenarioError, global_rhs
from lksim.graphs import (EngagementMap, build_complete_kary_tree, build_empty,
                          build_erdos_renyi)
from lksim.integrate import IntegratorSettings
from lksim.network_model import (NETWORK_CSV_COLUMNS, NetworkedModelError,
                                 NetworkedScenario, NetworkedState, flow_moderators,
                                 local_order, local_orders, networked_rhs, run_networked,
                                 write_networked_csv)
from oracles import networked_rhs_oracle

EPS2 = 1e-20


def scenario(blue, red, pairs, **kw):
    n = blue.n + red.n
    base = dict(blue_graph=blue, red_graph=red,
                engagement=EngagementMap(blue.n, red.n, np.array(pairs, dtype=np.int64)
                                         .reshape(-1, 2)),
                omega=np.ones(n), theta0=np.zeros(n), p0=np.full(n, 10.0),
                sigma_B=1.0, sigma_R=1.0, zeta_BR=0.5, zeta_RB=0.5,
                phi_BR=math.pi / 4, phi_RB=math.pi / 4, kappa_BR=0.1, kappa_RB=0.1)
    base.update(kw)
    return NetworkedScenario(**base)


def path(n):
    return build_complete_kary_tree(1, n - 1)


# -- local order parameter ---------------------------------------------------------------

def test_isolated_node_has_unit_order():
    scn = scenario(build_empty(3), build_empty(2), [])
    np.testing.assert_array_equal(local_orders(scn.initial_state(), scn), 1.0)


def test_neighbours_in_phase_give_unit_order():
    scn = scenario(path(3), build_empty(1), [], theta0=[0.4, 0.4, 0.4, 0.0])
    assert local_order(1, scn.initial_state(), scn) == pytest.approx(1.0, abs=1e-15)


def test_opposed_neighbours_give_near_zero_order():
    scn = scenario(path(3), build_empty(1), [], theta0=[0.0, 1.0, math.pi, 0.0])
    value = local_order(1, scn.initial_state(), scn)
    assert value == pytest.approx(EPS2 / (2 + EPS2), abs=1e-16)
    assert value < 1e-15


def test_dead_neighbours_are_ignored():
    scn = scenario(path(3), build_empty(1), [], theta0=[0.0, 1.0, math.pi, 0.0],
                   p0=[10.0, 10.0, 0.0, 10.0])
    assert local_order(1, scn.initial_state(), scn) == pytest.approx(1.0, abs=1e-15)


# -- moderators --------------------------------------------------------------------------

def test_moderators_one_opponent():
    scn = scenario(path(2), path(2), [[0, 0]], p0=[10.0, 10.0, 100.0, 5.0])
    delta, d = flow_moderators(scn.initial_state(), scn)
    assert delta[0] == pytest.approx(1 / 101)
    assert delta[1] == 1.0
    assert delta[2] == pytest.approx(1 / 11)
    assert d[0] == pytest.approx(1.0)
    assert d[1] == pytest.approx(1 / EPS2)


def test_moderators_two_opponents():
    scn = scenario(path(2), path(2), [[0, 0], [0, 1]], p0=[10.0, 10.0, 100.0, 5.0])
    delta, d = flow_moderators(scn.initial_state(), scn)
    assert d[0] == pytest.approx(0.5, rel=1e-12)
    assert delta[0] == pytest.approx(1 / 106)


# -- right-hand side ---------------------------------------------------------------------

def test_two_node_chain_flow():
    scn = scenario(path(2), build_empty(1), [], p0=[10.0, 1.0, 1.0], kappa_BR=0.0,
                   kappa_RB=0.0)
    d = networked_rhs(scn.initial_state(), scn)
    # both nodes have delta = 1; the flow is (10 - 1) from node 1 to node 2
    assert d[3 + 1] == pytest.approx(9.0, rel=1e-14)
    assert d[3 + 0] == -d[3 + 1]


def test_empty_node_receives_nothing():
    scn = scenario(path(2), build_empty(1), [], p0=[10.0, 0.0, 1.0])
    d = networked_rhs(scn.initial_state(), scn)
    assert d[3] == 0.0 and d[4] == 0.0 and d[1] == 0.0


def test_balanced_flows_are_zero():
    g = build_erdos_renyi(6, 0.6, 1)
    scn = scenario(g, g, [], kappa_BR=0.0, kappa_RB=0.0, theta0=np.full(12, 0.3))
    d = networked_rhs(scn.initial_state(), scn)
    np.testing.assert_array_equal(d[12:], 0.0)


def test_usecase2_initial_totals_match(uc2):
    scn = uc2.networked_scenario()
    d = networked_rhs(scn.initial_state(), scn)
    n = scn.n_nodes
    assert d[n:n + 12].sum() == pytest.approx(d[n + 12:].sum(), abs=1e-12)


def test_rhs_matches_oracle_usecases(uc1, uc2, uc3):
    for scn in (uc1.networked_scenario(), uc2.networked_scenario(),
                uc3.networked_scenario()):
        y = scn.initial_state()
        np.testing.assert_allclose(networked_rhs(y, scn), networked_rhs_oracle(scn, y),
                                   rtol=1e-11, atol=1e-12)


@given(seed=st.integers(0, 10_000), pairwise=st.booleans())
@settings(max_examples=40, deadline=None)
def test_rhs_matches_oracle_random(seed, pairwise):
    rng = np.random.default_rng(seed)
    nB, nR = rng.integers(2, 7, size=2)
    blue, red = build_erdos_renyi(int(nB), 0.6, seed), build_erdos_renyi(int(nR), 0.6, seed + 1)
    pairs = np.unique(np.column_stack([rng.integers(0, nB, 5), rng.integers(0, nR, 5)]),
                      axis=0)
    n = nB + nR
    p = rng.uniform(0, 50, n)
    p[rng.random(n) < 0.2] = 0.0
    scn = scenario(blue, red, pairs, omega=rng.uniform(0, 2, n),
                   theta0=rng.uniform(-np.pi, np.pi, n), p0=p,
                   sigma_B=rng.uniform(0, 2), sigma_R=rng.uniform(0, 2),
                   zeta_BR=rng.uniform(0, 1), zeta_RB=rng.uniform(0, 1),
                   phi_BR=rng.uniform(0, np.pi), phi_RB=rng.uniform(0, np.pi),
                   kappa_BR=rng.uniform(0, 0.5), kappa_RB=rng.uniform(0, 0.5),
                   gamma_B=rng.uniform(0, 2), gamma_R=rng.uniform(0, 2),
                   feedback="pairwise" if pairwise else "none")
    y = scn.initial_state()
    np.testing.assert_allclose(networked_rhs(y, scn), networked_rhs_oracle(scn, y),
                               rtol=1e-11, atol=1e-11)


def test_extinct_nodes_are_still():
    scn = scenario(path(3), path(2), [[1, 0]], p0=[10.0, 0.0, 10.0, 5.0, 5.0],
                   omega=np.full(5, 2.0))
    d = networked_rhs(scn.initial_state(), scn)
    assert d[1] == 0.0 and d[5 + 1] == 0.0


def test_nan_is_reported_with_node():
    # R2 is isolated, so the NaN cannot spread to another node first
    scn = scenario(path(2), build_empty(2), [[0, 0]])
    y = scn.initial_state()
    y[4 + 3] = np.nan
    with pytest.raises(NetworkedModelError, match="R2"):
        networked_rhs(y, scn)


def test_state_shape_checked():
    scn = scenario(path(2), path(2), [[0, 0]])
    with pytest.raises(ScenarioError):
        networked_rhs(np.zeros(5), scn)


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        scenario(path(2), path(2), [], p0=[1.0, -1.0, 1.0, 1.0])
    with pytest.raises(ScenarioError):
        scenario(path(2), path(2), [], feedback="focus_loss")
    with pytest.raises(ScenarioError):
        scenario(path(2), path(2), [], standing_force=0.0)


# -- runs --------------------------------------------------------------------------------

def test_zero_lethality_conserves_each_force(uc2):
    scn = uc2.networked_scenario().with_params(kappa_BR=0.0, kappa_RB=0.0,
                                               sigma_B=2.0, sigma_R=0.7)
    run = run_networked(scn, 1e3)
    for total in (run.p_B_total, run.p_R_total):
        assert np.max(np.abs(total - 300.0)) < 1e-8 * 300.0
    assert np.ptp(run.p[:, 0]) > 1.0  # resources did move


def test_fish_neutral_line(uc2):
    run = run_networked(uc2.networked_scenario(), 1e3)
    assert abs(run.p_final) < 1e-6 * 240


def test_mirror_negates_outcome(uc2):
    scn = uc2.networked_scenario().with_params(sigma_B=2.0, sigma_R=1.0)
    a = run_networked(scn, 1e3).p_final
    b = run_networked(scn.mirrored(), 1e3).p_final
    assert abs(a) > 1.0
    assert a + b == pytest.approx(0.0, abs=1e-6 * abs(a))


def test_dead_node_stays_frozen():
    scn = scenario(build_empty(1), build_empty(1), [[0, 0]], p0=[100.0, 5.0],
                   omega=[1.0, 0.5], kappa_BR=0.5, kappa_RB=0.5)
    run = run_networked(scn, 50.0, IntegratorSettings(output_samples=501))
    dead = np.flatnonzero(run.p[:, 1] == 0.0)
    assert dead.size > 0
    first = dead[0]
    assert np.all(run.p[first:, 1] == 0.0)
    assert np.ptp(run.theta[first:, 1]) == 0.0
    assert np.ptp(run.p[first:, 0]) == 0.0  # nothing left to fight
    assert run.trajectory.frozen[3]


def test_early_stop_keeps_p_final():
    scn = scenario(build_empty(1), build_empty(1), [[0, 0]], p0=[100.0, 5.0],
                   omega=[1.0, 0.5], kappa_BR=0.5, kappa_RB=0.5)
    full = run_networked(scn, 50.0)
    short = run_networked(scn, 50.0, stop_when_extinct=True)
    assert short.status == "extinct" and short.times[-1] < 50.0
    assert short.p_final == full.p_final


def test_local_orders_bounded_along_run(uc2):
    run = run_networked(uc2.networked_scenario().with_params(sigma_B=0.3), 200.0,
                        IntegratorSettings(output_samples=50))
    o = run.local_orders()
    assert o.shape == (50, 24)
    assert np.all((o >= 0) & (o <= 1 + 1e-12))


def test_attrition_matches_global_rates_once_synchronised(uc1):
    net = uc1.networked_scenario()
    glob = uc1.global_scenario()
    run = run_networked(net, 400.0, IntegratorSettings(output_samples=9))
    n, nB = net.n_nodes, net.n_blue
    checked = 0
    for y in run.trajectory.states[4:]:
        th = y[:n]
        o_b = abs(np.exp(1j * th[:nB]).mean())
        o_r = abs(np.exp(1j * th[nB:]).mean())
        if min(o_b, o_r) < 0.95:
            continue
        flows = networked_rhs(y, net)[n:]
        state = np.concatenate([th, [y[n:n + nB].sum(), y[n + nB:].sum()]])
        rates = global_rhs(state, glob)[-2:]
        np.testing.assert_allclose([flows[:nB].sum(), flows[nB:].sum()], rates, rtol=0.05)
        checked += 1
    assert checked >= 3


def test_csv_layout(tmp_path):
    scn = scenario(path(2), build_empty(1), [[0, 0]])
    run = run_networked(scn, 5.0, IntegratorSettings(output_samples=4))
    f = tmp_path / "n.csv"
    write_networked_csv(run, f, header="demo")
    lines = f.read_text().splitlines()
    assert lines[1] == ",".join(NETWORK_CSV_COLUMNS)
    data = np.loadtxt(f, delimiter=",", comments="#", skiprows=2)
    assert data.shape == (12, 6)
    np.testing.assert_array_equal(data[:3, 1], [1, 2, 1])
    np.testing.assert_array_equal(data[:3, 2], [0, 0, 1])


def test_state_alive_mask():
    s = NetworkedState(np.zeros(3), np.array([1.0, 1e-16, 0.0]))
    np.testing.assert_array_equal(s.alive, [True, False, False])
