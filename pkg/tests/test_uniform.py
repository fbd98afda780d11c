import math

import numpy as np
import pytest

from calreg.entropy import WeightFunction
from calreg.errors import ContractViolation, DomainError
from calreg.instances import notion_weights, random_fields, random_kernel, substream
from calreg.regularity import DistinguisherFamily, WeightFamily
from calreg.uniform import (
    DistinguishingOracle,
    SampleBatch,
    SampleSource,
    UniformInstance,
    amplify_oracle,
    empirical_violation,
    erm_calibration_oracle,
    erm_distinguisher,
    estimation_samples,
    exact_max_violation,
    hoeffding_m,
    is_distinguishable,
    kappa_cap,
    run_uniform_regularity,
    sample_mu_g,
    true_violations,
    zero_calibration,
    zero_distinguisher,
)

NOTIONS = ("shannon", "min_entropy", "collision", "sqrt_collision")


class TestSampling:
    def test_vertex_kernel(self, rng):
        g = np.eye(4)
        x, y = sample_mu_g(np.full(4, 0.25), g, rng, 500)
        np.testing.assert_array_equal(x, y)

    def test_point_mass(self, rng):
        x, _ = sample_mu_g([0, 0, 1.0], np.full((3, 2), 0.5), rng, 200)
        assert np.all(x == 2)

    def test_label_frequencies(self, rng):
        mu = np.array([0.2, 0.3, 0.5])
        g = rng.dirichlet(np.ones(4), size=3)
        m = 100_000
        _, y = sample_mu_g(mu, g, rng, m)
        p = mu @ g
        freq = np.bincount(y, minlength=4) / m
        sigma = np.sqrt(p * (1 - p) / m)
        assert np.all(np.abs(freq - p) <= 3 * sigma + 1e-12)

    def test_chi_square(self, rng):
        mu = np.array([0.25, 0.75])
        g = np.array([[0.1, 0.9], [0.6, 0.4]])
        x, y = sample_mu_g(mu, g, rng, 10_000)
        obs = np.bincount(x * 2 + y, minlength=4)
        exp = 10_000 * (mu[:, None] * g).ravel()
        chi2 = float(np.sum((obs - exp) ** 2 / exp))
        assert chi2 < 16.27  # 3 dof, p = 0.001

    def test_reproducible(self):
        a = sample_mu_g([0.5, 0.5], np.full((2, 3), 1 / 3), np.random.default_rng(7), 50)
        b = sample_mu_g([0.5, 0.5], np.full((2, 3), 1 / 3), np.random.default_rng(7), 50)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_m_positive(self, rng):
        with pytest.raises(DomainError):
            sample_mu_g([1.0], [[1.0]], rng, 0)


class TestEmpiricalViolation:
    def test_zero_field(self):
        b = SampleBatch(np.array([0, 0]), np.array([0, 1]), np.array([1, 0]))
        assert empirical_violation(b, np.zeros((1, 2)), np.full((1, 2), 0.5)) == 0.0

    def test_single_sample(self):
        # label 0 is the first coordinate, so g_hat - e_0 = (-0.5, 0.5)
        b = SampleBatch(np.array([0]), np.array([0]), np.array([0]))
        assert empirical_violation(b, np.array([[1.0, -1.0]]), np.full((1, 2), 0.5)) == pytest.approx(-1.0)

    def test_unbiased(self, rng):
        N, L = 5, 3
        mu = rng.dirichlet(np.ones(N))
        gs, gh = rng.dirichlet(np.ones(L), size=(2, N))
        f = rng.uniform(-1, 1, (N, L))
        src = SampleSource(mu, gs, rng)
        est = [empirical_violation(src.batch(gh, 20), f, gh) for _ in range(10_000)]
        true = float(mu @ ((gh - gs) * f).sum(axis=1))
        # summands lie in [-2, 2]; the mean of 2e5 terms has sd at most 2 / sqrt(2e5)
        assert abs(np.mean(est) - true) <= 4 * 2 / math.sqrt(2e5)

    def test_hoeffding_band(self):
        eps, hits = 0.25, 0
        for seed in range(100):
            r = np.random.default_rng(seed)
            gs, gh = r.dirichlet(np.ones(4), size=(2, 32))
            f = r.uniform(-1, 1, (32, 4))
            mu = np.full(32, 1 / 32)
            est = empirical_violation(SampleSource(mu, gs, r).batch(gh, 100_000), f, gh)
            hits += abs(est - float(mu @ ((gh - gs) * f).sum(axis=1))) <= eps / 4
        assert hits / 100 >= 0.99


def _planted_calibration_setup():
    # v = (0.75, 0.25) everywhere, y* uniform: r1 = (1, -1) has correlation 0.5, r2 = (1, 1) has 0
    r1 = WeightFunction(lambda v: np.where(v[..., :1] >= v[..., 1:], 1.0, -1.0) * np.array([1.0, -1.0]), "r1")
    r2 = WeightFunction(lambda v: np.ones_like(v), "r2")
    return r1, r2, np.array([[0.75, 0.25]]), np.array([[0.5, 0.5]])


class TestERM:
    def test_single_member(self, rng):
        r = WeightFunction(lambda v: v, "only")
        B = erm_calibration_oracle([r], 10)
        b = SampleBatch(np.zeros(10, int), np.zeros(10, int), np.ones(10, int), np.full((10, 2), 0.5))
        assert B(b, rng) is r

    def test_planted_correlation(self):
        r1, r2, g, gs = _planted_calibration_setup()
        eps1, delta = 0.2, 0.1
        m = hoeffding_m(eps1, delta, 2)
        B = erm_calibration_oracle([r1, r2], m)
        wins = 0
        for t in range(500):
            rng = np.random.default_rng(t)
            b = SampleSource([1.0], gs, rng).batch(g, m, with_v=True)
            wins += B(b, rng) is r1
        assert wins / 500 >= 1 - delta

    def test_calibrated_data_returns_small_correlation(self):
        R = notion_weights(NOTIONS, 0.2)
        m = hoeffding_m(0.2, 0.1, len(R))
        B = erm_calibration_oracle(R, m)
        ok = 0
        for t in range(50):
            rng = np.random.default_rng(t)
            g = rng.dirichlet(np.ones(4), size=16)
            mu = np.full(16, 1 / 16)
            r = B(SampleSource(mu, g, rng).batch(g, m, with_v=True), rng)
            # y* drawn from v itself: every true correlation is exactly 0
            ok += float(mu @ ((g - g) * r(g)).sum(axis=1)) <= 0.1
        assert ok == 50

    def test_empty_family(self):
        with pytest.raises(DomainError):
            erm_calibration_oracle([], 10)
        with pytest.raises(DomainError):
            erm_distinguisher(DistinguisherFamily(), 10)

    def test_distinguisher_recovers_planted_field(self):
        N, L = 16, 3
        rng = np.random.default_rng(0)
        gs = rng.dirichlet(np.ones(L), size=N)
        g = np.roll(gs, 1, axis=1)
        best = np.sign(g - gs)
        F = DistinguisherFamily([rng.uniform(-0.2, 0.2, (N, L)) for _ in range(5)] + [best])
        A = erm_distinguisher(F, hoeffding_m(0.2, 0.05, 12))
        p = is_distinguishable(g, gs, A, 0.2, 40, rng=rng)
        assert p >= 0.95


class TestOracles:
    def test_zero_oracles_no_updates(self):
        gs = random_kernel(np.random.default_rng(0), 8, 3)
        inst = UniformInstance(np.full(8, 1 / 8), gs, zero_distinguisher(8, 3), zero_calibration(), 0.25, 0.1, m_prime=500)
        res = run_uniform_regularity(inst)
        assert res.updates == 0 and res.success

    def test_is_distinguishable_trivial(self, rng):
        g = rng.dirichlet(np.ones(3), size=4)
        assert is_distinguishable(g, g, exact_max_violation(), 0.0, 5, rng=rng) == 0.0
        assert is_distinguishable(g, np.roll(g, 1, 1), zero_distinguisher(4, 3), 0.0, 5, rng=rng) == 0.0

    def test_unclamped_oracle_output(self, rng):
        bad = DistinguishingOracle(lambda b, r, t: np.full((2, 2), 3.0), 1)
        inst = UniformInstance([0.5, 0.5], np.eye(2), bad, zero_calibration(), 0.25, 0.1, m_prime=10)
        with pytest.raises(ContractViolation):
            run_uniform_regularity(inst)

    def test_exact_oracle_update_cap(self):
        for seed in range(10):
            r = substream(seed, "exact")
            gs = random_kernel(r, 16, 4, 0.5, 0.25)
            inst = UniformInstance(np.full(16, 1 / 16), gs, exact_max_violation(), zero_calibration(), 0.25, 0.1, seed=seed)
            res = run_uniform_regularity(inst)
            assert res.updates <= kappa_cap(4, 0.25)


def _planted_amplify(p_success, eps=0.2):
    gs = np.array([[1.0, 0.0], [0.0, 1.0]])
    g = np.full((2, 2), 0.5)
    good = np.sign(g - gs)

    def strategy(batch, rng, tables):
        return good if rng.random() < p_success else np.zeros((2, 2))

    return g, gs, good, DistinguishingOracle(strategy, 1, name="planted")


class TestAmplify:
    def test_size(self):
        _, _, _, base = _planted_amplify(0.3)
        amp = amplify_oracle(base, 0.3, 0.05, 0.2)
        assert amp.u == math.ceil((2 / 0.3) * math.log(4 / 0.05))
        assert amp.m == amp.u * base.m + math.ceil((128 / 0.2**2) * math.log(4 * amp.u / 0.05))

    def test_certain_base(self):
        g, gs, _, base = _planted_amplify(1.0)
        amp = amplify_oracle(base, 1.0, 0.05, 0.2)
        assert is_distinguishable(g, gs, amp, 0.1, 20) == 1.0
        assert amp.u == math.ceil(2 * math.log(80))

    def test_boosts_weak_base(self):
        g, gs, _, base = _planted_amplify(0.3)
        assert is_distinguishable(g, gs, base, 0.1, 500) < 0.5
        amp = amplify_oracle(base, 0.3, 0.05, 0.2)
        assert is_distinguishable(g, gs, amp, 0.1, 500, rng=np.random.default_rng(1)) >= 0.95


class TestUniformRun:
    def test_constants(self):
        assert kappa_cap(4, 0.25) == math.ceil(16 * math.log(4) / 0.0625)
        dp = 0.1 * 0.0625 / (64 * math.log(4))
        assert estimation_samples(4, 0.25, 0.1) == math.ceil(128 / 0.0625 * math.log(2 / dp))

    def test_rejects_params(self):
        with pytest.raises(DomainError):
            UniformInstance([1.0], [[1.0, 0.0]], zero_distinguisher(1, 2), zero_calibration(), 0.5, 0.1)
        with pytest.raises(DomainError):
            UniformInstance([1.0], [[1.0, 0.0]], zero_distinguisher(1, 2), zero_calibration(), 0.2, 0.6)

    def _instance(self, seed):
        rng = substream(seed, "uniform-test")
        N, L, eps, delta = 32, 4, 0.25, 0.1
        gs = random_kernel(rng, N, L, 0.5, 0.25)
        mu = np.full(N, 1 / N)
        F = DistinguisherFamily(random_fields(rng, gs, 16))
        R = WeightFamily(notion_weights(NOTIONS, eps), L=L)
        A = erm_distinguisher(F, hoeffding_m(eps / 2, delta, 32))
        B = erm_calibration_oracle(R, hoeffding_m(eps / 2, delta, 4))
        return UniformInstance(mu, gs, A, B, eps, delta, seed=seed), F, R

    def test_erm_run(self):
        inst, F, R = self._instance(0)
        res = run_uniform_regularity(inst)
        vf, vr = true_violations(res.s, inst.g_star, inst.mu, F, R)
        assert res.success and vf <= 0.25 and vr <= 0.25

    def test_fresh_samples_each_call(self):
        inst, _, _ = self._instance(1)
        res = run_uniform_regularity(inst)
        tags = [tag for _, tag, _ in res.draw_log]
        # every pass draws A, A_est, B, B_est in that order, each a new batch
        assert len(tags) % 4 == 0
        assert tags == ["A", "A_est", "B", "B_est"] * (len(tags) // 4)
        assert all(n == inst.m_prime for _, tag, n in res.draw_log if tag.endswith("_est"))

    def test_deterministic(self):
        inst, _, _ = self._instance(2)
        a = run_uniform_regularity(inst)
        inst2, _, _ = self._instance(2)
        b = run_uniform_regularity(inst2)
        assert a.trace == b.trace and a.draw_log == b.draw_log

    def test_update_steps(self):
        inst, _, _ = self._instance(3)
        res = run_uniform_regularity(inst)
        for t in res.trace:
            assert t.violation > 0.75 * inst.eps
            assert t.true_margin > 0
