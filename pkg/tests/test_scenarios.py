import math

import numpy as np
import pytest

from mcbf.errors import DimensionError
from mcbf.scenarios import (ConnectivityParams, ObstacleSpec, SwarmState, adjacency,
                            baseline_eigenvalue_filter, collision_barriers,
                            connectivity_barrier, connectivity_scenario,
                            five_agent_references, in_range_pairs, laplacian,
                            nominal_tracking, obstacle_barrier, ones_complement_basis)
from mcbf.sdp import SolveStatus, assemble, solve
from mcbf.symmat import SymMatrix, eig_sym, is_psd

PARAMS = ConnectivityParams()


def random_swarm(rng, p=5, span=0.9):
    return SwarmState(rng.uniform(-span, span, size=(p, 2)))


def swarm_clear_of_cutoff(rng, R, p=5, margin=1e-4):
    # finite differences straddle the range kink, so audit states keep every
    # pair distance away from R by a safe margin
    while True:
        s = random_swarm(rng, p)
        pos = s.positions
        dists = [np.linalg.norm(pos[i] - pos[j]) for i in range(p) for j in range(i + 1, p)]
        if all(abs(d - R) > margin and d > 1e-3 for d in dists):
            return s


class TestAdjacency:
    def test_coincident_pair(self):
        A = adjacency(SwarmState([[0.0, 0.0], [0.0, 0.0]]), R=1.3)
        assert A.a[0, 1] == pytest.approx(math.e - 1.0, rel=1e-12)

    def test_zero_at_range(self):
        A = adjacency(SwarmState([[0.0, 0.0], [1.3, 0.0]]), R=1.3)
        assert A.a[0, 1] == pytest.approx(0.0, abs=1e-15)

    def test_half_square_distance(self):
        R = 1.3
        A = adjacency(SwarmState([[0.0, 0.0], [R / math.sqrt(2.0), 0.0]]), R=R)
        assert A.a[0, 1] == pytest.approx(math.exp(0.5) - 1.0, rel=1e-12)

    def test_cutoff_continuity(self):
        R = 1.3
        lo = adjacency(SwarmState([[0.0, 0.0], [R - 1e-9, 0.0]]), R).a[0, 1]
        hi = adjacency(SwarmState([[0.0, 0.0], [R + 1e-9, 0.0]]), R).a[0, 1]
        assert abs(lo - hi) < 1e-7

    def test_bounds_and_zero_diagonal(self):
        rng = np.random.default_rng(0)
        A = adjacency(random_swarm(rng), R=1.3).a
        assert np.all(np.diag(A) == 0)
        assert np.all(A >= 0) and np.all(A <= math.e - 1.0)


class TestLaplacian:
    def test_two_agent_closed_form(self):
        a = 0.41
        L = laplacian(SymMatrix([[0.0, a], [a, 0.0]]))
        assert np.allclose(L.a, [[a, -a], [-a, a]])
        assert np.allclose(eig_sym(L).values, [0.0, 2 * a], atol=1e-14)

    def test_disconnected_pair(self):
        L = laplacian(SymMatrix(np.zeros((2, 2))))
        assert np.allclose(L.a, 0.0)
        assert eig_sym(L).values[1] == pytest.approx(0.0)

    def test_kernel_always_contains_ones(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            L = laplacian(adjacency(random_swarm(rng), R=1.3))
            assert np.max(np.abs(L.a @ np.ones(5))) < 1e-12
            assert eig_sym(L).values[0] >= -1e-12


class TestConnectivityBarrier:
    def test_ones_always_in_kernel(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            ev = connectivity_barrier(random_swarm(rng), PARAMS)
            assert np.max(np.abs(ev.H.a @ np.ones(5))) < 1e-12

    def test_two_coincident_agents_spectrum(self):
        ev = connectivity_barrier(SwarmState([[0.0, 0.0], [0.0, 0.0]]),
                                  ConnectivityParams(eps=0.1))
        vals = eig_sym(ev.H).values
        assert np.allclose(sorted(vals), sorted([0.0, 2.0 * (math.e - 1.0) - 0.1]), atol=1e-12)

    def test_psd_iff_connectivity_margin(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            s = random_swarm(rng)
            ev = connectivity_barrier(s, PARAMS)
            lam2 = eig_sym(laplacian(adjacency(s, PARAMS.R))).values[1]
            assert is_psd(ev.H, tol=1e-10) == bool(lam2 >= PARAMS.eps - 1e-10)

    def test_spectral_split(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            s = random_swarm(rng)
            ev = connectivity_barrier(s, PARAMS)
            lamL = eig_sym(laplacian(adjacency(s, PARAMS.R))).values
            expected = np.sort(np.concatenate([[0.0], lamL[1:] - PARAMS.eps]))
            assert np.allclose(np.sort(eig_sym(ev.H).values), expected, atol=1e-9)

    def test_drift_term_zero(self):
        rng = np.random.default_rng(5)
        ev = connectivity_barrier(random_swarm(rng), PARAMS)
        assert np.all(ev.LfH.a == 0.0)
        assert ev.m == 10

    def test_out_of_range_pairs_contribute_nothing(self):
        # two far clusters: cross-cluster channels must have zero blocks in
        # the rows/columns of the other cluster
        s = SwarmState([[0.0, 0.0], [0.3, 0.0], [10.0, 0.0], [10.3, 0.0]])
        ev = connectivity_barrier(s, PARAMS)
        for chan in range(4):  # channels of agents 0 and 1
            G = ev.LgH[chan].a
            assert np.all(G[2:, :2] == 0) and np.all(G[:2, 2:] == 0)
            assert np.all(G[2:, 2:] == 0)


class TestGradients:
    @staticmethod
    def fd_check(eval_fn, x0, analytic_blocks, step=1e-6, rtol=1e-5):
        for c in range(len(x0)):
            dx = np.zeros_like(x0)
            dx[c] = step
            Hp = eval_fn(x0 + dx)
            Hm = eval_fn(x0 - dx)
            fd = (Hp - Hm) / (2.0 * step)
            ana = analytic_blocks[c]
            assert np.max(np.abs(fd - ana)) <= rtol * (1.0 + np.max(np.abs(ana)))

    def test_connectivity_gradients(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            s = swarm_clear_of_cutoff(rng, PARAMS.R)
            ev = connectivity_barrier(s, PARAMS)
            flat = s.positions.ravel()
            self.fd_check(
                lambda x: connectivity_barrier(SwarmState(x.reshape(5, 2)), PARAMS).H.a,
                flat, [G.a for G in ev.LgH])

    def test_collision_gradients(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            s = swarm_clear_of_cutoff(rng, PARAMS.R)
            evs = collision_barriers(s, PARAMS.r_agent)
            flat = s.positions.ravel()
            for idx, ev in enumerate(evs):
                for c in range(10):
                    dx = np.zeros(10)
                    dx[c] = 1e-6
                    hp = collision_barriers(SwarmState((flat + dx).reshape(5, 2)),
                                            PARAMS.r_agent)[idx].h
                    hm = collision_barriers(SwarmState((flat - dx).reshape(5, 2)),
                                            PARAMS.r_agent)[idx].h
                    fd = (hp - hm) / 2e-6
                    assert fd == pytest.approx(ev.Lgh[c], rel=1e-5, abs=1e-5)

    def test_obstacle_gradients(self):
        rng = np.random.default_rng(8)
        specs = [ObstacleSpec.disk2d((0.3, -0.2), 0.8),
                 ObstacleSpec.box2d([((-1.0, 0.0), 1.0), ((1.0, 0.0), 1.0),
                                     ((0.0, -1.0), 1.0), ((0.0, 1.0), 1.0)])]
        for spec in specs:
            for _ in range(10):
                x0 = rng.uniform(-2, 2, size=2)
                ev = obstacle_barrier(x0, spec)
                self.fd_check(lambda x, sp=spec: obstacle_barrier(x, sp).H.a,
                              x0, [G.a for G in ev.LgH])
        for _ in range(10):
            x0 = rng.uniform(-2, 2, size=3)
            ev = obstacle_barrier(x0, ObstacleSpec.cylinder3d())
            self.fd_check(lambda x: obstacle_barrier(x, ObstacleSpec.cylinder3d()).H.a,
                          x0, [G.a for G in ev.LgH])


class TestCollisionBarriers:
    def test_boundary_value(self):
        s = SwarmState([[0.0, 0.0], [0.5, 0.0]])
        assert collision_barriers(s, 0.25)[0].h == pytest.approx(0.0, abs=1e-15)

    def test_unit_distance_margin(self):
        s = SwarmState([[0.0, 0.0], [1.0, 0.0]])
        assert collision_barriers(s, 0.25)[0].h == pytest.approx(0.75)

    def test_pair_count(self):
        rng = np.random.default_rng(9)
        assert len(collision_barriers(random_swarm(rng), 0.25)) == 10

    def test_gradient_structure(self):
        s = SwarmState([[1.0, 2.0], [0.0, 0.0], [5.0, 5.0]])
        ev = collision_barriers(s, 0.25)[0]  # pair (0, 1)
        d = np.array([1.0, 2.0])
        assert np.allclose(ev.Lgh[:2], 2 * d)
        assert np.allclose(ev.Lgh[2:4], -2 * d)
        assert np.all(ev.Lgh[4:] == 0)


class TestReferencesAndTracking:
    def test_reference_endpoints(self):
        refs0, rates0 = five_agent_references(0.0)
        assert np.allclose(refs0[0], [0.0, 0.0])
        refs5, rates5 = five_agent_references(5.0)
        assert np.allclose(refs5[0], [1.0, -1.0], atol=1e-15)
        assert np.allclose(rates5[0], [0.0, 0.0], atol=1e-15)

    def test_static_posts(self):
        refs, rates = five_agent_references(3.21)
        s2 = math.sqrt(2.0) / 2.0
        assert np.allclose(refs[4], [(5.0 * math.sqrt(2.0) - 1.0) / 10.0, -s2])
        assert np.allclose(refs[1], [-s2, s2])
        assert np.all(rates[1:] == 0.0)

    def test_tracking_at_rest(self):
        s = SwarmState([[1.0, -1.0]])
        u = nominal_tracking(s, [[1.0, -1.0]], [[0.0, 0.0]], k_gain=2.0)
        assert np.all(u == 0.0)

    def test_tracking_arithmetic(self):
        s = SwarmState([[0.0, 0.0]])
        u = nominal_tracking(s, [[1.0, -1.0]], [[0.0, 0.0]], k_gain=1.0)
        assert np.allclose(u, [1.0, -1.0])


class TestObstacleBarrier:
    def test_disk_outside(self):
        ev = obstacle_barrier(np.array([2.0, 0.0]), ObstacleSpec.disk2d())
        assert np.allclose(ev.H.a, [[1.0, 0.0], [0.0, -3.0]])
        assert eig_sym(ev.H).values[-1] == pytest.approx(1.0)

    def test_disk_center_unsafe(self):
        ev = obstacle_barrier(np.array([0.0, 0.0]), ObstacleSpec.disk2d())
        assert np.allclose(ev.H.a, -np.eye(2))
        assert eig_sym(ev.H).values[-1] == pytest.approx(-1.0)

    def test_disk_boundary(self):
        ev = obstacle_barrier(np.array([1.0, 0.0]), ObstacleSpec.disk2d())
        assert eig_sym(ev.H).values[-1] == pytest.approx(0.0, abs=1e-12)

    def test_cylinder_inside_and_outside(self):
        spec = ObstacleSpec.cylinder3d()
        assert eig_sym(obstacle_barrier(np.zeros(3), spec).H).values[-1] < 0
        assert eig_sym(obstacle_barrier(np.array([2.0, 0.0, 0.0]), spec).H).values[-1] >= 0
        assert eig_sym(obstacle_barrier(np.array([0.0, 0.0, 2.0]), spec).H).values[-1] >= 0

    def test_box_membership(self):
        spec = ObstacleSpec.box2d([((-1.0, 0.0), 1.0), ((1.0, 0.0), 1.0),
                                   ((0.0, -1.0), 1.0), ((0.0, 1.0), 1.0)])
        inside = obstacle_barrier(np.array([0.2, -0.3]), spec)
        outside = obstacle_barrier(np.array([1.7, 0.0]), spec)
        assert eig_sym(inside.H).values[-1] < 0
        assert eig_sym(outside.H).values[-1] >= 0

    def test_dimension_errors(self):
        with pytest.raises(DimensionError):
            obstacle_barrier(np.zeros(3), ObstacleSpec.disk2d())
        with pytest.raises(DimensionError):
            obstacle_barrier(np.zeros(2), ObstacleSpec.cylinder3d())

    def test_unbounded_box_rejected(self):
        with pytest.raises(ValueError):
            ObstacleSpec.box2d([((1.0, 0.0), 1.0), ((-1.0, 0.0), 1.0)])  # slab

    def test_bad_radius_rejected(self):
        with pytest.raises(ValueError):
            ObstacleSpec.disk2d(radius=0.0)


class TestHelpers:
    def test_ones_complement_basis(self):
        for p in (2, 3, 5, 8):
            Q = ones_complement_basis(p)
            assert Q.shape == (p, p - 1)
            assert np.allclose(Q.T @ Q, np.eye(p - 1), atol=1e-12)
            assert np.max(np.abs(Q.T @ np.ones(p))) < 1e-12

    def test_in_range_pairs(self):
        s = SwarmState([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]])
        assert in_range_pairs(s, R=1.3) == frozenset({(0, 1)})


class TestBaselineFilter:
    def test_inactive_returns_desired(self):
        # tight triangle: lambda_2 far above eps, mild pull keeps all rows slack
        s = SwarmState([[0.0, 0.4], [-0.35, -0.2], [0.35, -0.2]])
        u_d = np.full(6, 0.01)
        u = baseline_eigenvalue_filter(s, PARAMS, u_d)
        assert np.allclose(u, u_d, atol=1e-9)

    def test_two_agent_agreement_with_matrix_filter(self):
        # with two agents the second Laplacian eigenvalue is smooth (2 * A12)
        # and its eigenvector is fixed, so scalar and matrix constraints match
        pos = [[0.0, 0.0], [1.1, 0.0]]
        params = ConnectivityParams(priority_agent=0)
        s = SwarmState(pos)
        u_d = np.array([0.0, 0.0, 0.8, 0.3])  # pull agent 1 away
        u_base = baseline_eigenvalue_filter(s, params, u_d)
        scn = connectivity_scenario(params, "exponential", initial_positions=pos,
                                    refs_fn=lambda t: (np.zeros((2, 2)), np.zeros((2, 2))))
        lmis, rows, pins = scn.constraints(s, u_d)
        sol = solve(assemble(u_d, lmis, rows, pins))
        assert sol.status is SolveStatus.OPTIMAL
        assert np.linalg.norm(sol.u - u_base) <= 1e-4

    def test_discontinuous_across_eigenvalue_crossing(self):
        # equilateral triangle: lambda_2 = lambda_3, and which eigenvector the
        # solver reports flips with an infinitesimal stretch in x vs y, so the
        # scalar-eigenvalue filter jumps while the states barely differ
        d = 1.29
        r = d / math.sqrt(3.0)
        base = np.array([[r * math.cos(a), r * math.sin(a)]
                         for a in (math.pi / 2, math.pi / 2 + 2 * math.pi / 3,
                                   math.pi / 2 + 4 * math.pi / 3)])
        delta = 5e-7
        sA = SwarmState(base * np.array([1.0 + delta, 1.0]))
        sB = SwarmState(base * np.array([1.0, 1.0 + delta]))
        u_d = base.ravel()  # radial pull apart, so the eigenvalue row is active
        uA = baseline_eigenvalue_filter(sA, PARAMS, u_d)
        uB = baseline_eigenvalue_filter(sB, PARAMS, u_d)
        state_gap = np.linalg.norm(sA.positions - sB.positions)
        assert np.linalg.norm(uA - uB) > 10.0 * PARAMS.k_gain * state_gap


class TestParamsValidation:
    def test_collision_vs_range(self):
        with pytest.raises(ValueError):
            ConnectivityParams(R=0.4, r_agent=0.25)

    def test_positive_fields(self):
        with pytest.raises(ValueError):
            ConnectivityParams(R=-1.0)
        with pytest.raises(ValueError):
            ConnectivityParams(c_alpha=0.0)


def test_deflated_lmi_solves_match_raw():
    # the scenario ships the LMI restricted to the complement of span(1); the
    # raw blocks carry a structural zero eigenvalue that denies the conic
    # solver a strict interior, so agreement is only to the raw problem's
    # attainable accuracy (~1e-4)
    from mcbf.barrier import ClassKe, build_exponential_sd, restrict_lmi
    from mcbf.scenarios import scalar_to_halfspace

    rng = np.random.default_rng(5)
    basis = ones_complement_basis(5)
    for _ in range(20):
        s = random_swarm(rng)
        ev = connectivity_barrier(s, PARAMS)
        raw = build_exponential_sd(ev, PARAMS.c_alpha)
        small = restrict_lmi(raw, basis)
        rows = [scalar_to_halfspace(b, ClassKe.linear(PARAMS.c_collision))
                for b in collision_barriers(s, PARAMS.r_agent)]
        u_d = rng.normal(size=10)
        a = solve(assemble(u_d, [raw], rows))
        b = solve(assemble(u_d, [small], rows))
        assert a.status == b.status
        if a.status is SolveStatus.OPTIMAL:
            assert np.linalg.norm(a.u - b.u) <= 1e-3


def test_initial_state_lmi_end_to_end():
    # the swarm's starting formation: build the connectivity LMI, filter the
    # nominal control through the conic solver, and confirm feasibility of the
    # solved point with the eigenvalue oracle directly
    from mcbf.barrier import build_exponential_sd
    from mcbf.scenarios import five_agent_references

    refs, rates = five_agent_references(0.0)
    s = SwarmState(refs)
    u_nom = nominal_tracking(s, refs, rates, PARAMS.k_gain)
    ev = connectivity_barrier(s, PARAMS)
    lmi = build_exponential_sd(ev, PARAMS.c_alpha)
    sol = solve(assemble(u_nom, lmis=[lmi]))
    assert sol.status is SolveStatus.OPTIMAL
    assert is_psd(lmi.evaluate(sol.u), tol=1e-9)
    assert np.allclose(sol.u, u_nom, atol=1e-9)  # the start is strictly inside
