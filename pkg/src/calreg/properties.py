"""Seeded invariant suites. Each check returns a ``CheckRow`` with the worst
observed value and whether it clears its bound; the CLI's properties mode and
the acceptance tests both run these."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .characterization import NotionSet, build_universal_simulator, verify_forward, verify_transformed
from .entropy import builtin_notions, gap_identity_residual, sigma_transform
from .instances import InstanceSpec, random_kernel, random_regularity_instance, substream
from .lowerbound import build_design, build_lb_instance, verify_entropy_bound
from .mirror import ConjugatePairState, md_update, verify_md_inequality, verify_pinsker_strong_convexity, verify_softmax_lipschitz
from .regularity import run_regularity, update_cap
from .simplex import approx_softmax, l1_distance, softmax


@dataclass(frozen=True)
class CheckRow:
    suite: str
    check: str
    cases: int
    worst: float
    bound: float
    passed: bool


def _row(suite, check, cases, worst, bound, upper=True):
    ok = worst <= bound if upper else worst >= bound
    return CheckRow(suite, check, cases, float(worst), float(bound), bool(ok))


def gap_identity(trials: int = 1000, seed: int = 0) -> CheckRow:
    """Worst |residual| of the gap identity over random instances and all builtin notions."""
    rng = substream(seed, "gap_identity")
    worst = 0.0
    for t in range(trials):
        N = int(rng.integers(1, 65))
        L = int(rng.integers(2, 17))
        eps = float(rng.uniform(0.05, 0.45))
        notion = builtin_notions(eps)[t % 4]
        mu = rng.dirichlet(np.ones(N))
        g_star = random_kernel(rng, N, L, 0.5, 0.3)
        s = random_kernel(rng, N, L, 1.0)
        # Shannon is evaluated at the transformed predictor so the divergence is finite
        res = gap_identity_residual(notion, notion.transform(s), g_star, mu)
        worst = max(worst, abs(res))
    return _row("entropy", "gap_identity_residual", trials, worst, 1e-9)


def md_inequality(trials: int = 10_000, seed: int = 0) -> CheckRow:
    rng = substream(seed, "md_inequality")
    worst = math.inf
    N, L = 8, 6
    for _ in range(trials):
        g_star = random_kernel(rng, N, L, 0.5, 0.3)
        mu = rng.dirichlet(np.ones(N))
        h = rng.normal(scale=rng.uniform(0.1, 5.0), size=(N, L))
        state = ConjugatePairState(h, softmax(h), softmax(h))
        f = rng.uniform(-1, 1, size=(N, L))
        step = rng.uniform(0.01, 1.0)
        after = md_update(state, f, step)
        worst = min(worst, verify_md_inequality(g_star, state, after, step * f, mu))
    return _row("mirror", "md_inequality_slack", trials, worst, -1e-9, upper=False)


def softmax_lipschitz(trials: int = 10_000, seed: int = 0) -> CheckRow:
    rng = substream(seed, "lipschitz")
    L = rng.integers(2, 17, size=trials)
    worst = math.inf
    for l in np.unique(L):
        k = int(np.sum(L == l))
        h = rng.normal(scale=3.0, size=(k, l))
        h2 = h + rng.normal(scale=rng.uniform(1e-3, 2.0, size=(k, 1)), size=(k, l))
        worst = min(worst, float(np.min(verify_softmax_lipschitz(h, h2))))
    return _row("mirror", "softmax_lipschitz_slack", trials, worst, -1e-10, upper=False)


def pinsker(trials: int = 10_000, seed: int = 0) -> CheckRow:
    rng = substream(seed, "pinsker")
    worst = math.inf
    for l in (2, 3, 5, 8, 16):
        k = trials // 5
        u = rng.dirichlet(np.full(l, 0.5), size=k)
        v = rng.dirichlet(np.full(l, 0.5), size=k)
        worst = min(worst, float(np.min(verify_pinsker_strong_convexity(u, v))))
    return _row("mirror", "pinsker_slack", trials, worst, -1e-10, upper=False)


def approx_softmax_error(trials: int = 1000, seed: int = 0) -> CheckRow:
    """Worst ``l1 error / eps`` with logits perturbed by up to ``eps/3``."""
    rng = substream(seed, "approx_softmax")
    worst = 0.0
    for _ in range(trials):
        L = int(rng.integers(2, 33))
        eps = float(rng.uniform(1e-3, 0.49))
        B = float(rng.uniform(2, 20))
        q = rng.uniform(-B, B, size=L)
        q_hat = np.clip(q + rng.uniform(-eps / 3, eps / 3, size=L), -B, B)
        err = l1_distance(approx_softmax(q_hat, eps, B), softmax(q))
        worst = max(worst, err / eps)
    return _row("simplex", "approx_softmax_error_over_eps", trials, worst, 1.0)


def sigma_checks(trials: int = 1000, seed: int = 0) -> list[CheckRow]:
    rng = substream(seed, "sigma")
    worst_l1 = 0.0
    worst_sub = 0.0
    for _ in range(trials):
        L = int(rng.integers(2, 17))
        e = float(rng.uniform(1e-4, 0.49))
        v = rng.dirichlet(np.full(L, 0.3))
        v[rng.random(L) < 0.2] = 0.0
        v = v / v.sum() if v.sum() > 0 else np.eye(L)[0]
        sv = sigma_transform(v, e)
        worst_l1 = max(worst_l1, l1_distance(sv, v) / (2 * e))
        worst_sub = max(worst_sub, float(np.max(np.abs(np.log(sv)))) / math.log(L / e))
    return [
        _row("entropy", "sigma_l1_over_2eps", trials, worst_l1, 1.0),
        _row("entropy", "shannon_subgrad_over_log_L_eps", trials, worst_sub, 1.0 + 1e-12),
    ]


ACCEPTANCE_GRID = [(seed, [2, 4, 8][seed % 3], [0.1, 0.2][(seed // 3) % 2]) for seed in range(100)]


def regularity_contract(seeds=range(100), N: int = 32, n_fields: int = 16) -> list[CheckRow]:
    """Final violations, update cap and per-update drop across the seeded grid."""
    worst_v = -math.inf
    worst_k = 0.0
    worst_drop = math.inf
    for seed in seeds:
        _, L, eps = ACCEPTANCE_GRID[seed % len(ACCEPTANCE_GRID)]
        inst = random_regularity_instance(InstanceSpec(N=N, L=L, eps=eps, n_fields=n_fields), seed)
        res = run_regularity(inst)
        worst_v = max(worst_v, max(res.witness_F, res.witness_R) - eps)
        worst_k = max(worst_k, res.updates / update_cap(L, eps))
        for t in res.trace:
            worst_drop = min(worst_drop, t.potential_before - t.potential_after - eps**2 / 4)
    n = len(list(seeds))
    if worst_drop == math.inf:
        worst_drop = 0.0
    return [
        _row("regularity", "final_violation_minus_eps", n, worst_v, 0.0),
        _row("regularity", "updates_over_cap", n, worst_k, 1.0),
        _row("regularity", "drop_minus_eps2_over_4", n, worst_drop, -1e-9, upper=False),
    ]


def forward_characterization(seeds=range(100), N: int = 32, n_fields: int = 16) -> list[CheckRow]:
    """One simulator per instance must clear the forward bound for all notions,
    and the Shannon transformed bound."""
    worst = math.inf
    worst_t = math.inf
    for seed in seeds:
        _, L, eps = ACCEPTANCE_GRID[seed % len(ACCEPTANCE_GRID)]
        inst = random_regularity_instance(InstanceSpec(N=N, L=L, eps=eps, n_fields=n_fields), seed)
        Phi = NotionSet.builtins(eps)
        res = build_universal_simulator(inst.g_star, inst.F, Phi, eps, inst.mu)
        worst = min(worst, min(verify_forward(res.s, inst.g_star, Phi, eps, inst.mu).values()))
        worst_t = min(worst_t, verify_transformed(res.s, inst.g_star, Phi.notions[0], eps, inst.mu))
    n = len(list(seeds))
    return [
        _row("characterization", "forward_slack_all_notions", n, worst, -1e-9, upper=False),
        _row("characterization", "transformed_forward_slack", n, worst_t, -1e-9, upper=False),
    ]


def lowerbound_entropy(seed: int = 0, instances: int = 5) -> CheckRow:
    rng = substream(seed, "lowerbound")
    design = build_design(256, 1 / 16, 50, rng)
    worst = min(verify_entropy_bound(build_lb_instance(design, rng)) for _ in range(instances))
    return _row("lowerbound", "entropy_bound_slack", instances, worst, 0.0, upper=False)


def run_all(seed: int = 0, quick: bool = True) -> list[CheckRow]:
    """Every suite; ``quick`` shrinks trial counts for interactive use."""
    k = 10 if quick else 1
    rows = [
        approx_softmax_error(1000 // k, seed),
        gap_identity(1000 // k, seed),
        *sigma_checks(1000 // k, seed),
        md_inequality(10_000 // k, seed),
        softmax_lipschitz(10_000 // k, seed),
        pinsker(10_000 // k, seed),
        *regularity_contract(range(100 // k)),
        *forward_characterization(range(100 // k)),
        lowerbound_entropy(seed),
    ]
    return rows
