import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calreg import regularity as reg
from calreg.entropy import WeightFunction, collision, subgradient_weight
from calreg.errors import ContractViolation, DomainError
from calreg.instances import InstanceSpec, random_regularity_instance, two_point_instance
from calreg.regularity import (
    DistinguisherFamily,
    RegularityInstance,
    WeightFamily,
    complexity_of,
    find_violation_F,
    find_violation_R,
    polylog_term,
    run_regularity,
    update_cap,
)

HALF = np.array([0.5, 0.5])


def reference_loop(g_star, fields, mu, eps):
    """Plain-Python boosting with exact softmax and only distinguishers."""
    N, L = len(g_star), len(g_star[0])
    h = [[0.0] * L for _ in range(N)]

    def soft(row):
        m = max(row)
        e = [math.exp(v - m) for v in row]
        z = sum(e)
        return [v / z for v in e]

    updates = []
    while True:
        g = [soft(r) for r in h]
        hit = None
        for i, f in enumerate(fields):
            val = sum(mu[x] * sum((g[x][y] - g_star[x][y]) * f[x][y] for y in range(L)) for x in range(N))
            for sign in (1, -1):
                if sign * val > eps:
                    hit = (i, sign)
                    break
            if hit:
                break
        if hit is None:
            return g, updates
        i, sign = hit
        for x in range(N):
            for y in range(L):
                h[x][y] -= eps * sign * fields[i][x][y]
        updates.append(hit)


class TestFindViolation:
    def test_f_none_when_equal(self, rng):
        g = rng.dirichlet(np.ones(3), size=4)
        F = DistinguisherFamily([rng.uniform(-1, 1, (4, 3))])
        assert find_violation_F(g, g, F, 0.01, np.full(4, 0.25)) is None

    def test_f_two_point(self):
        inst = two_point_instance(0.1)
        v = find_violation_F(np.full((2, 2), 0.5), inst.g_star, inst.F, 0.1, inst.mu)
        assert (v.member, v.sign) == (0, -1)
        assert v.value == pytest.approx(1.0)

    def test_f_large_eps_none(self):
        for seed in range(50):
            r = np.random.default_rng(seed)
            g, gs = r.dirichlet(np.ones(4), size=(2, 8))
            F = DistinguisherFamily([r.uniform(-1, 1, (8, 4)) for _ in range(5)])
            assert find_violation_F(g, gs, F, 1.9, np.full(8, 1 / 8)) is None

    def test_f_first_hit_order(self):
        gs = np.array([[1.0, 0.0]])
        f1 = np.array([[0.5, -0.5]])
        f2 = np.array([[1.0, -1.0]])
        F = DistinguisherFamily([f1, f2])
        v = find_violation_F(HALF[None], gs, F, 0.1, [1.0])
        assert (v.member, v.sign) == (0, -1)
        v = find_violation_F(HALF[None], gs, F, 0.1, [1.0], selection="max")
        assert (v.member, v.sign) == (1, -1)

    def test_r_none_when_equal(self, rng):
        g = rng.dirichlet(np.ones(3), size=4)
        R = WeightFamily([subgradient_weight(collision(), 0.1)], L=3)
        assert find_violation_R(g, g, R, 0.01, np.full(4, 0.25)) is None

    def test_r_uniform_against_vertices(self):
        R = WeightFamily([subgradient_weight(collision(), 0.1)], L=2)
        g_hat = np.full((2, 2), 0.5)
        assert find_violation_R(g_hat, np.eye(2), R, 1e-6, [0.5, 0.5]) is None

    def test_r_half_identity_weight(self):
        R = WeightFamily([WeightFunction(lambda v: v / 2)], L=2)
        v = find_violation_R(np.array([[0.9, 0.1]]), np.array([[0.5, 0.5]]), R, 0.1, [1.0])
        assert v.value == pytest.approx(0.16)

    def test_r_scaled_collision_weight(self):
        # the scaled collision weight is v itself, which doubles the pairing
        R = WeightFamily([subgradient_weight(collision(), 0.1)], L=2)
        v = find_violation_R(np.array([[0.9, 0.1]]), np.array([[0.5, 0.5]]), R, 0.1, [1.0])
        assert v.value == pytest.approx(0.32, abs=0.1 / 8)

    def test_r_one_sided(self):
        R = WeightFamily([WeightFunction(lambda v: -v / 2)], L=2)
        assert find_violation_R(np.array([[0.9, 0.1]]), np.array([[0.5, 0.5]]), R, 0.1, [1.0]) is None


class TestRun:
    def test_empty_families(self):
        inst = RegularityInstance([0.5, 0.5], np.eye(2), DistinguisherFamily(), WeightFamily(), 0.1)
        res = run_regularity(inst)
        assert res.updates == 0
        assert np.abs(res.s - 0.5).sum(axis=1).max() <= 0.01

    def test_two_point(self):
        res = run_regularity(two_point_instance(0.1))
        inst = two_point_instance(0.1)
        val = float(inst.mu @ ((res.s - inst.g_star) * inst.F.stacked[0]).sum(axis=1))
        assert abs(val) <= 0.1
        assert res.updates <= 278 == update_cap(2, 0.1)

    def test_matches_reference_loop_exact_mode(self):
        inst = two_point_instance(0.1)
        inst.exact = True
        res = run_regularity(inst)
        g_ref, ups = reference_loop(inst.g_star.tolist(), [inst.F.stacked[0].tolist()], inst.mu.tolist(), 0.1)
        assert [(t.member, t.sign) for t in res.trace] == ups
        np.testing.assert_allclose(res.s, np.array(g_ref), atol=1e-12)

    def test_random_reference_agreement(self):
        for seed in range(5):
            r = np.random.default_rng(seed)
            gs = r.dirichlet(np.full(3, 0.4), size=6)
            fields = [np.clip(3 * (gs - 1 / 3) + r.normal(scale=0.3, size=(6, 3)), -1, 1) for _ in range(4)]
            inst = RegularityInstance(np.full(6, 1 / 6), gs, DistinguisherFamily(fields), WeightFamily(), 0.15, exact=True)
            res = run_regularity(inst)
            _, ups = reference_loop(gs.tolist(), [f.tolist() for f in fields], [1 / 6] * 6, 0.15)
            assert [(t.member, t.sign) for t in res.trace] == ups

    @pytest.mark.parametrize("selection", ["first", "max"])
    def test_full_pipeline(self, selection):
        for seed in range(6):
            spec = InstanceSpec(N=32, L=8, eps=0.2, n_fields=16)
            res = run_regularity(random_regularity_instance(spec, seed, selection=selection))
            assert res.witness_F <= 0.2 + 1e-9 and res.witness_R <= 0.2 + 1e-9
            assert res.updates <= update_cap(8, 0.2)
            for t in res.trace:
                assert t.potential_before - t.potential_after > 0.01 - 1e-9
                assert t.true_margin > 0.9 * 0.2

    def test_deterministic(self):
        spec = InstanceSpec(N=16, L=4, eps=0.15)
        a = run_regularity(random_regularity_instance(spec, 3))
        b = run_regularity(random_regularity_instance(spec, 3))
        assert a.trace == b.trace
        np.testing.assert_array_equal(a.s, b.s)

    def test_strict_bits(self):
        spec = InstanceSpec(N=16, L=4, eps=0.15)
        res = run_regularity(random_regularity_instance(spec, 1, strict_bits=True))
        assert res.h_drift <= 0.15 / 30
        assert max(res.witness_F, res.witness_R) <= 0.15 + 1e-9

    def test_contract_violation_when_cap_broken(self, monkeypatch):
        monkeypatch.setattr(reg, "update_cap", lambda L, eps: 0)
        with pytest.raises(ContractViolation):
            run_regularity(two_point_instance(0.1))

    @pytest.mark.parametrize("eps", [0.0, 0.5, 0.7, -0.1])
    def test_rejects_eps(self, eps):
        with pytest.raises(DomainError, match=r"\(0, 1/2\)"):
            two_point_instance(eps)

    def test_rejects_unclamped_members(self):
        with pytest.raises(DomainError):
            DistinguisherFamily([np.full((2, 2), 1.5)])
        with pytest.raises(DomainError):
            WeightFamily([WeightFunction(lambda v: 3 * v)], L=3)

    @given(st.integers(0, 10_000), st.sampled_from([2, 3, 5]), st.sampled_from([0.15, 0.25, 0.4]))
    def test_contract_property(self, seed, L, eps):
        res = run_regularity(random_regularity_instance(InstanceSpec(N=8, L=L, eps=eps, n_fields=6), seed))
        assert max(res.witness_F, res.witness_R) <= eps + 1e-9
        assert res.updates <= update_cap(L, eps)
        drops = np.diff([res.trace[0].potential_before] + [t.potential_after for t in res.trace]) if res.trace else []
        assert np.all(-np.asarray(drops) > eps**2 / 4 - 1e-9)


class TestComplexity:
    def test_zero_updates(self):
        res = run_regularity(RegularityInstance([1.0], [[0.5, 0.5]], DistinguisherFamily(), WeightFamily(), 0.1))
        assert complexity_of(res) == polylog_term(2, 0.1) == 2 * math.ceil(math.log2(20)) ** 3

    def test_formula_and_monotone(self):
        res = run_regularity(two_point_instance(0.1))
        assert complexity_of(res) == (res.updates + 1) * (1 + polylog_term(2, 0.1))
        res2 = run_regularity(two_point_instance(0.2))
        assert res2.updates < res.updates
        assert complexity_of(res2) < complexity_of(res)


def test_trace_rows_schema():
    rows = reg.trace_rows(run_regularity(two_point_instance(0.1)))
    assert list(rows[0]) == list(reg.TRACE_FIELDS)
    assert rows[0]["member"] == -1 and rows[0]["family"] == "F"
