import csv
import json

import numpy as np
import pytest

from seqescape.model import NetworkSpec, NodeParams
from seqescape.sde import (
    EnsembleStats,
    SimConfig,
    empirical_cdf,
    heun_step,
    run_ensemble,
    simulate_escape,
    stats_to_json,
    write_trajectory_csv,
    _advance_block,
)

P = NodeParams(nu=0.2, omega=0.0, alpha=0.05)
RC0 = float(np.sqrt(1 - np.sqrt(0.8)))
ONE_NODE = NetworkSpec(n=1, adjacency=np.zeros((1, 1)), beta=0.0)


class TestHeunStep:
    def test_deterministic_limit_is_rk2(self):
        h = 0.01
        rng = np.random.default_rng(0)
        out = heun_step(np.array([1.0]), lambda x: -x, 0.0, h, rng)
        assert out[0] == pytest.approx(1 - h + h * h / 2, rel=1e-14)

    def test_pure_noise_statistics(self):
        # One step of 10^6 independent zero-drift components: the increment
        # must be Normal(0, alpha^2 h); check mean and variance within 3 se.
        n, alpha, h = 1_000_000, 0.3, 0.01
        rng = np.random.default_rng(42)
        out = heun_step(np.zeros(n), lambda x: np.zeros_like(x), alpha, h, rng)
        var = alpha * alpha * h
        assert abs(out.mean()) < 3 * np.sqrt(var / n)
        assert abs(out.var() - var) < 3 * var * np.sqrt(2.0 / n)

    def test_seeded_determinism(self):
        a = heun_step(np.zeros(8), lambda x: -x, 0.1, 0.01, np.random.default_rng(7))
        b = heun_step(np.zeros(8), lambda x: -x, 0.1, 0.01, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_deterministic_convergence_is_second_order(self):
        # Global error of the radial flow over t in [0, 1] shrinks ~h^2.
        from seqescape.model import radial_drift

        p = NodeParams(nu=0.2, omega=0.0, alpha=0.05)
        drift = lambda x: np.array([radial_drift(x[0], p)])
        rng = np.random.default_rng(0)

        def integrate(h):
            x = np.array([0.5])
            for _ in range(int(round(1.0 / h))):
                x = heun_step(x, drift, 0.0, h, rng)
            return x[0]

        ref = integrate(1e-5)
        errs = [abs(integrate(h) - ref) for h in (1e-2, 5e-3, 2.5e-3)]
        for e1, e2 in zip(errs, errs[1:]):
            assert 3.0 < e1 / e2 < 5.0


class TestKernelAgainstReference:
    def test_matches_pure_python_stepper(self):
        # Same pregenerated noise through the compiled kernel and a plain
        # numpy re-implementation of the same scheme.
        net = NetworkSpec.pair("bidirectional", 0.3)
        p = NodeParams(nu=0.2, omega=20.0, alpha=0.05)
        h, steps = 1e-3, 400
        rng = np.random.default_rng(123)
        noise = rng.standard_normal((steps, 2, 2))

        zre = np.zeros(2)
        zim = np.zeros(2)
        esc = np.full(2, -1, dtype=np.int64)
        indeg = net.adjacency.sum(axis=0)
        dummy = np.zeros((0, 1, 2))
        _advance_block(zre, zim, net.adjacency, indeg, net.beta, p.nu, p.omega,
                       p.alpha, h, 100.0, noise, esc, 0, 10**9, 0, dummy, 0)

        z = np.zeros(2, dtype=complex)

        def drift(z):
            a2 = np.abs(z) ** 2
            f = (-p.nu + 1j * p.omega) * z + (2 * a2 - a2 * a2) * z
            coupling = z @ net.adjacency - indeg * z
            return f + net.beta * coupling

        sq = np.sqrt(h) * p.alpha
        for s in range(steps):
            kick = sq * (noise[s, :, 0] + 1j * noise[s, :, 1])
            f0 = drift(z)
            pred = z + h * f0 + kick
            z = z + 0.5 * h * (f0 + drift(pred)) + kick
        assert np.allclose(zre + 1j * zim, z, rtol=0, atol=1e-13)

    def test_blow_up_status(self):
        zre = np.array([9.9])
        zim = np.zeros(1)
        esc = np.full(1, -1, dtype=np.int64)
        noise = np.zeros((10, 1, 2))
        # Strong outward drift is impossible here, so inject a huge kick.
        noise[0, 0, 0] = 1e6
        status, done, _ = _advance_block(
            zre, zim, np.zeros((1, 1)), np.zeros(1), 0.0, 0.2, 0.0, 0.05,
            1e-3, 0.25, noise, esc, 0, 10**9, 0, np.zeros((0, 1, 2)), 0)
        assert status == 3 and done == 1


class TestSimulateEscape:
    def test_noise_free_record_is_censored(self):
        p0 = NodeParams(nu=0.2, omega=0.0, alpha=0.0)
        rec = simulate_escape(ONE_NODE, p0, SimConfig(h=1e-3, xi=RC0, t_max=5.0))
        assert rec.censored
        assert np.isnan(rec.first_escape).all()
        assert len(rec.ordered_times) == 0

    def test_noise_free_needs_explicit_budget(self):
        p0 = NodeParams(nu=0.2, omega=0.0, alpha=0.0)
        with pytest.raises(ValueError, match="t_max"):
            simulate_escape(ONE_NODE, p0, SimConfig(h=1e-3, xi=RC0))

    def test_record_structure(self):
        net = NetworkSpec.pair("bidirectional", 0.01)
        rec = simulate_escape(net, P, SimConfig(h=1e-3, xi=0.5, seed=3), 5)
        assert not rec.censored
        assert sorted(rec.order.tolist()) == [0, 1]
        assert np.all(np.diff(rec.ordered_times) >= 0)
        assert rec.passage(2, 0) == pytest.approx(rec.ordered_times[1])
        assert rec.passage(2, 1) == pytest.approx(
            rec.ordered_times[1] - rec.ordered_times[0])

    def test_path_recording(self):
        cfg = SimConfig(h=1e-3, xi=0.5, seed=3, record_path=True, sample_stride=50)
        rec = simulate_escape(NetworkSpec.pair("bidirectional", 0.01), P, cfg, 5)
        assert rec.path_t is not None
        assert rec.path_z.shape[1] == 2
        assert rec.path_t[0] == pytest.approx(0.05)
        assert np.all(np.diff(rec.path_t) > 0)
        # the recorded path must reach past both escapes
        assert rec.path_t[-1] >= rec.ordered_times[-1] - 0.05


@pytest.fixture(scope="module")
def one_node_stats():
    cfg = SimConfig(h=1e-3, xi=RC0, seed=2024, ensemble=500)
    return run_ensemble(ONE_NODE, P, cfg, workers=2)


@pytest.mark.slow
class TestOneNodeStatistics:
    def test_mean_matches_quadrature(self, one_node_stats):
        from seqescape.analytics import mean_escape_quadrature

        T = mean_escape_quadrature(0.2, 0.05, RC0).value
        mean = one_node_stats.T[(1, 0)]
        se = one_node_stats.se[(1, 0)]
        assert abs(mean - T) < max(3 * se, 0.1 * T)

    def test_exponential_tail(self, one_node_stats):
        # Beyond its 20th percentile the escape-time distribution is
        # exponential: the conditional excess mean estimates the scale.
        from seqescape.analytics import mean_escape_quadrature

        T = mean_escape_quadrature(0.2, 0.05, RC0).value
        samples = one_node_stats.cdf[(1, 0)]
        q20 = np.quantile(samples, 0.2)
        tail = samples[samples > q20] - q20
        assert abs(tail.mean() - T) / T < 0.15

    def test_default_time_budget_resolution(self, one_node_stats):
        from seqescape.analytics import mean_escape_quadrature

        T = mean_escape_quadrature(0.2, 0.05, RC0).value
        assert one_node_stats.config.t_max == pytest.approx(100 * T, rel=1e-10)

    def test_ecdf_shape(self, one_node_stats):
        t, q = empirical_cdf(one_node_stats, 1, 0)
        assert np.all(np.diff(t) >= 0)
        assert np.all(np.diff(q) > 0)
        assert q[-1] == 1.0
        assert q[0] == pytest.approx(1 / len(t))
        with pytest.raises(KeyError):
            empirical_cdf(one_node_stats, 2, 0)


@pytest.mark.slow
class TestPhaseIndependence:
    def test_rotation_rate_does_not_move_escape_times(self):
        cfg = SimConfig(h=1e-3, xi=RC0, seed=77, ensemble=150)
        still = run_ensemble(ONE_NODE, P, cfg, workers=2)
        spinning = run_ensemble(
            ONE_NODE, NodeParams(nu=0.2, omega=20.0, alpha=0.05), cfg, workers=2)
        diff = abs(still.T[(1, 0)] - spinning.T[(1, 0)])
        joint_se = np.hypot(still.se[(1, 0)], spinning.se[(1, 0)])
        assert diff < 3.5 * joint_se


@pytest.mark.slow
class TestTwoNodeEnsembles:
    def test_uncoupled_first_escape_halves_single_node_mean(self):
        net = NetworkSpec.pair("disconnected", 0.0)
        cfg = SimConfig(h=1e-3, xi=0.5, seed=5, ensemble=300)
        stats = run_ensemble(net, P, cfg, workers=2)
        se = stats.se[(1, 0)]
        assert abs(stats.T[(1, 0)] - 96.51) < max(3.5 * se, 0.12 * 96.51)

    def test_additivity_exact_on_means(self):
        net = NetworkSpec.pair("bidirectional", 0.01)
        stats = run_ensemble(net, P, SimConfig(h=1e-3, xi=0.5, seed=9, ensemble=60))
        assert stats.T[(2, 0)] == pytest.approx(
            stats.T[(2, 1)] + stats.T[(1, 0)], abs=1e-12)


class TestReproducibility:
    def test_bitwise_identical_across_worker_counts(self):
        net = NetworkSpec.pair("bidirectional", 0.01)
        cfg = SimConfig(h=1e-3, xi=0.5, seed=31, ensemble=12)
        a = run_ensemble(net, P, cfg, workers=1)
        b = run_ensemble(net, P, cfg, workers=2)
        c = run_ensemble(net, P, cfg, workers=3)
        assert a.T == b.T == c.T
        assert a.se == b.se == c.se
        for key in a.cdf:
            assert np.array_equal(a.cdf[key], b.cdf[key])
            assert np.array_equal(a.cdf[key], c.cdf[key])

    def test_all_censored_raises_with_advice(self):
        p0 = NodeParams(nu=0.2, omega=0.0, alpha=0.0)
        with pytest.raises(RuntimeError, match="t_max"):
            run_ensemble(ONE_NODE, p0, SimConfig(h=1e-3, xi=RC0, t_max=2.0, ensemble=3))


class TestSerialization:
    def test_trajectory_csv(self, tmp_path):
        cfg = SimConfig(h=1e-3, xi=0.5, seed=3, record_path=True, sample_stride=100)
        rec = simulate_escape(NetworkSpec.pair("bidirectional", 0.01), P, cfg, 5)
        out = tmp_path / "traj.csv"
        write_trajectory_csv(rec, out)
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "re_z1", "im_z1", "re_z2", "im_z2"]
        assert len(rows) - 1 == len(rec.path_t)
        assert float(rows[1][0]) == pytest.approx(rec.path_t[0])

    def test_requires_recorded_path(self, tmp_path):
        rec = simulate_escape(NetworkSpec.pair("bidirectional", 0.01), P,
                              SimConfig(h=1e-3, xi=0.5, seed=3), 5)
        with pytest.raises(ValueError, match="record_path"):
            write_trajectory_csv(rec, tmp_path / "x.csv")

    def test_stats_json_round_trip_and_determinism(self):
        net = NetworkSpec.pair("bidirectional", 0.01)
        cfg = SimConfig(h=1e-3, xi=0.5, seed=13, ensemble=6)
        s1 = stats_to_json(run_ensemble(net, P, cfg))
        s2 = stats_to_json(run_ensemble(net, P, cfg))
        assert s1 == s2
        payload = json.loads(s1)
        assert payload["config"]["seed"] == 13
        assert "1|0" in payload["pairs"]
        assert payload["pairs"]["2|0"]["mean"] >= payload["pairs"]["1|0"]["mean"]


class TestConfigValidation:
    @pytest.mark.parametrize("kw", [
        {"h": 0.0}, {"xi": -1.0}, {"t_max": -5.0}, {"ensemble": 0}, {"sample_stride": 0},
    ])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw)
