"""Sample-based boosting with distinguishing and calibration oracles.

The harness never hands ``g*`` to an oracle. Each oracle call and each
acceptance estimate gets its own fresh batch ``(x, y, y*)`` with ``x ~ mu``,
``y* ~ g*(x)`` and ``y ~ g_hat(x)``; calibration oracles additionally see
``v = g_hat(x)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .entropy import WeightFunction
from .instances import substream
from .errors import ContractViolation, DomainError
from .mirror import ConjugatePairState, md_update, potential
from .regularity import RegularityResult, TraceRecord, family_values_F, family_values_R, DistinguisherFamily, WeightFamily
from .simplex import approx_softmax, as_distribution, as_field, as_kernel, pointwise_inner


@dataclass(frozen=True)
class SampleBatch:
    x: np.ndarray
    y: np.ndarray
    y_star: np.ndarray
    v: np.ndarray | None = None

    def __len__(self):
        return len(self.x)


def _draw_labels(rng, kernel: np.ndarray, x: np.ndarray) -> np.ndarray:
    cum = np.cumsum(kernel[x], axis=1)
    u = rng.random(len(x))[:, None] * cum[:, -1:]
    return np.minimum((u >= cum).sum(axis=1), kernel.shape[1] - 1)


def sample_mu_g(mu, g, rng, m: int) -> tuple[np.ndarray, np.ndarray]:
    """``m`` independent pairs ``(x, y)`` with ``x ~ mu`` and ``y ~ g(x)``."""
    if m < 1:
        raise DomainError(f"need m >= 1 samples, got {m}")
    mu = np.asarray(mu, dtype=float)
    x = rng.choice(len(mu), size=m, p=mu)
    return x, _draw_labels(rng, np.asarray(g, dtype=float), x)


class SampleSource:
    """Draws labeled batches and logs ``(k, tag, n)`` for each draw."""

    def __init__(self, mu, g_star, rng):
        self.mu = as_distribution(mu)
        self.g_star = as_kernel(g_star)
        self.rng = rng
        self.log: list[tuple[int, str, int]] = []

    def batch(self, g_hat, m: int, k: int = -1, tag: str = "", with_v: bool = False) -> SampleBatch:
        x, y_star = sample_mu_g(self.mu, self.g_star, self.rng, m)
        y = _draw_labels(self.rng, g_hat, x)
        self.log.append((k, tag, m))
        return SampleBatch(x, y, y_star, g_hat[x] if with_v else None)


def empirical_violation(samples: SampleBatch, field_values, g_hat) -> float:
    """``(1/m) sum <g_hat(x_i) - e_{y*_i}, f(x_i)>``; unbiased for ``<g_hat - g*, f>``."""
    x, y_star = samples.x, samples.y_star
    f = np.asarray(field_values, dtype=float)
    return float(np.mean(pointwise_inner(g_hat[x], f[x]) - f[x, y_star]))


def empirical_weight_violation(samples: SampleBatch, r: Callable, g_hat) -> float:
    """As above with the field ``r o g_hat``."""
    return empirical_violation(samples, r(g_hat), g_hat)


# -- oracles -------------------------------------------------------------------


@dataclass
class DistinguishingOracle:
    """``strategy(batch, rng, tables) -> field``; ``tables`` is ``None`` unless
    ``peeks_tables`` is set (test-only oracles)."""

    strategy: Callable
    m: int
    cost: int = 1
    name: str = "A"
    peeks_tables: bool = False

    def __call__(self, batch, rng, tables=None):
        out = self.strategy(batch, rng, tables if self.peeks_tables else None)
        try:
            return as_field(out, clamp=True)
        except (DomainError, ValueError) as exc:
            raise ContractViolation("distinguishing oracle output in [-1, 1]^L", str(exc)) from None


@dataclass
class CalibrationOracle:
    """``strategy(batch, rng) -> weight function`` with ``batch.v = g_hat(x)``."""

    strategy: Callable
    m: int
    cost: int = 1
    name: str = "B"
    L: int | None = None

    def __call__(self, batch, rng, tables=None):
        r = self.strategy(batch, rng)
        probe = batch.v[: min(len(batch), 100)]
        if np.any(np.abs(r(probe)) > 1 + 1e-12):
            raise ContractViolation("calibration oracle output in [-1, 1]^L", getattr(r, "name", "r"))
        return r


def hoeffding_m(accuracy: float, fail: float, count: int = 1) -> int:
    """Samples so a mean of range-4 terms is within ``accuracy/4`` for all of
    ``count`` candidates with probability ``1 - fail``."""
    return math.ceil((128 / accuracy**2) * math.log(2 * count / fail))


def _pair_counts(batch: SampleBatch, N: int, L: int) -> np.ndarray:
    """``(C_y - C_{y*}) / m`` as an ``(N, L)`` table."""
    idx_y = batch.x * L + batch.y
    idx_s = batch.x * L + batch.y_star
    c = np.bincount(idx_y, minlength=N * L) - np.bincount(idx_s, minlength=N * L)
    return (c / len(batch)).reshape(N, L)


def erm_distinguisher(F: DistinguisherFamily, m: int) -> DistinguishingOracle:
    """Best member of ``F`` and ``-F`` by the empirical mean of ``f(x)_y - f(x)_{y*}``."""
    if not len(F):
        raise DomainError("ERM needs a nonempty family")
    _, N, L = F.stacked.shape

    def strategy(batch, rng, tables):
        scores = np.einsum("mij,ij->m", F.stacked, _pair_counts(batch, N, L))
        signed = np.stack([scores, -scores], axis=1).reshape(-1)
        i = int(np.argmax(signed))
        return (1 if i % 2 == 0 else -1) * F.stacked[i // 2]

    return DistinguishingOracle(strategy, m, cost=F.max_cost, name="erm_distinguisher")


def erm_calibration_oracle(R: WeightFamily | Sequence[WeightFunction], m: int) -> CalibrationOracle:
    """Best member of ``R`` by the empirical mean of ``<v - e_{y*}, r(v)>``; ties go to the smallest index."""
    members = R.members if isinstance(R, WeightFamily) else list(R)
    if not members:
        raise DomainError("ERM needs a nonempty weight family")

    def strategy(batch, rng):
        v = batch.v
        rows = np.arange(len(batch))
        scores = []
        for r in members:
            w = r(v)
            scores.append(np.mean(pointwise_inner(v, w) - w[rows, batch.y_star]))
        return members[int(np.argmax(scores))]

    return CalibrationOracle(strategy, m, cost=max(r.cost for r in members), name="erm_calibration")


def zero_distinguisher(N: int, L: int, m: int = 1) -> DistinguishingOracle:
    return DistinguishingOracle(lambda b, r, t: np.zeros((N, L)), m, cost=0, name="zero")


def zero_calibration(m: int = 1) -> CalibrationOracle:
    return CalibrationOracle(lambda b, r: WeightFunction(np.zeros_like, name="zero", cost=0), m, cost=0, name="zero")


def exact_max_violation(m: int = 1) -> DistinguishingOracle:
    """Test-only: reads ``(g_hat, g*)`` and returns ``sign(g_hat - g*)``, the
    maximizer of ``<g_hat - g*, f>`` over all clamped fields."""

    def strategy(batch, rng, tables):
        g_hat, g_star = tables
        return np.sign(g_hat - g_star)

    return DistinguishingOracle(strategy, m, cost=1, name="exact_max_violation", peeks_tables=True)


def amplify_oracle(oracle: DistinguishingOracle, alpha: float, delta: float, eps: float) -> DistinguishingOracle:
    """Run ``u`` independent copies on disjoint slices of the batch, then keep
    the candidate with the best estimate on a final fresh slice."""
    if not (0 < alpha <= 1) or not (0 < delta < 1):
        raise DomainError("need alpha in (0, 1] and delta in (0, 1)")
    u = math.ceil((2 / alpha) * math.log(4 / delta))
    m_sel = hoeffding_m(eps, delta / 2, u)
    m_base = oracle.m

    def strategy(batch, rng, tables):
        cands = []
        for i in range(u):
            sl = slice(i * m_base, (i + 1) * m_base)
            part = SampleBatch(batch.x[sl], batch.y[sl], batch.y_star[sl])
            cands.append(oracle(part, rng, tables))
        sl = slice(u * m_base, u * m_base + m_sel)
        sel = SampleBatch(batch.x[sl], batch.y[sl], batch.y_star[sl])
        scores = [np.mean(f[sel.x, sel.y] - f[sel.x, sel.y_star]) for f in cands]
        return cands[int(np.argmax(scores))]

    amp = DistinguishingOracle(strategy, u * m_base + m_sel, cost=u * oracle.cost, name=f"amplified_{oracle.name}",
                               peeks_tables=oracle.peeks_tables)
    amp.u = u
    return amp


def is_distinguishable(g, g_star, oracle: DistinguishingOracle, eps: float, trials: int, mu=None, rng=None) -> float:
    """Fraction of trials in which the oracle's field has true ``<g - g*, f> > eps``."""
    if trials < 1:
        raise DomainError("trials must be at least 1")
    g = as_kernel(g)
    g_star = as_kernel(g_star)
    mu = np.full(g.shape[0], 1 / g.shape[0]) if mu is None else as_distribution(mu)
    rng = np.random.default_rng(0) if rng is None else rng
    src = SampleSource(mu, g_star, rng)
    hits = 0
    for t in range(trials):
        f = oracle(src.batch(g, oracle.m, t, "A"), rng, (g, g_star))
        hits += float(mu @ pointwise_inner(g - g_star, f)) > eps
    return hits / trials


# -- the boosting loop --------------------------------------------------------------


def kappa_cap(L: int, eps: float) -> int:
    return math.ceil(16 * math.log(L) / eps**2)


def estimation_samples(L: int, eps: float, delta: float) -> int:
    """``m'`` so every estimate over ``kappa`` iterations is within ``eps/4`` w.p. ``1 - delta``."""
    delta_p = delta * eps**2 / (64 * math.log(max(L, 2)))
    return math.ceil((128 / eps**2) * math.log(2 / delta_p))


@dataclass
class UniformInstance:
    mu: np.ndarray
    g_star: np.ndarray
    oracle_A: DistinguishingOracle
    oracle_B: CalibrationOracle
    eps: float
    delta: float
    m_prime: int | None = None
    kappa_cap: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.eps < 0.5):
            raise DomainError(f"eps must lie in (0, 1/2) for the regularity construction, got {self.eps}")
        if not (0 < self.delta < 0.5):
            raise DomainError(f"delta must lie in (0, 1/2), got {self.delta}")
        self.mu = as_distribution(self.mu)
        self.g_star = as_kernel(self.g_star)
        L = self.g_star.shape[1]
        if self.m_prime is None:
            self.m_prime = estimation_samples(L, self.eps, self.delta)
        if self.kappa_cap is None:
            self.kappa_cap = kappa_cap(L, self.eps)


@dataclass
class UniformResult(RegularityResult):
    success: bool = True
    draw_log: list = field(default_factory=list, repr=False)


def run_uniform_regularity(instance: UniformInstance, rng_harness=None, rng_oracle=None) -> UniformResult:
    """Sample-based boosting: steps of ``eps/2``, acceptance threshold ``3 eps/4``,
    ``g_hat`` rounding budget ``eps/20``. Hitting ``kappa_cap`` updates ends the
    run with ``success = False``."""
    inst = instance
    mu, g_star, eps = inst.mu, inst.g_star, inst.eps
    N, L = g_star.shape
    rng_h = substream(inst.seed, "harness") if rng_harness is None else rng_harness
    rng_o = substream(inst.seed, "oracle") if rng_oracle is None else rng_oracle
    src = SampleSource(mu, g_star, rng_h)
    step, thresh, budget = eps / 2, 0.75 * eps, eps / 20

    def round_h(h):
        B = max(2.0, float(np.ceil(np.max(np.abs(h)))))
        return approx_softmax(h, budget, B)

    state = ConjugatePairState.initial(N, L)
    state = ConjugatePairState(state.h, state.g, round_h(state.h), 0, (potential(g_star, state.h, mu),))
    trace: list[TraceRecord] = []

    def apply(state, family, value, signal):
        before = state.potential_trace[-1]
        margin = float(mu @ pointwise_inner(state.g - g_star, signal))
        new = md_update(state, signal, step)
        after = potential(g_star, new.h, mu)
        trace.append(TraceRecord(new.k, family, 0, 1, value, before, after, margin))
        return ConjugatePairState(new.h, new.g, round_h(new.h), new.k, state.potential_trace + (after,))

    success = True
    while True:
        updated = False
        k = state.k
        g_hat = state.g_hat
        f = inst.oracle_A(src.batch(g_hat, inst.oracle_A.m, k, "A"), rng_o, (g_hat, g_star))
        if f.shape != (N, L):
            raise ContractViolation("distinguishing oracle output shape", f"{f.shape} != {(N, L)}")
        est = empirical_violation(src.batch(g_hat, inst.m_prime, k, "A_est"), f, g_hat)
        if est > thresh:
            state = apply(state, "F", est, f)
            updated = True
        g_hat = state.g_hat
        r = inst.oracle_B(src.batch(g_hat, inst.oracle_B.m, state.k, "B", with_v=True), rng_o)
        snapshot = np.clip(r(g_hat), -1.0, 1.0)
        est = empirical_violation(src.batch(g_hat, inst.m_prime, state.k, "B_est"), snapshot, g_hat)
        if est > thresh:
            state = apply(state, "R", est, snapshot)
            updated = True
        if not updated:
            break
        if state.k >= inst.kappa_cap:
            success = False
            break

    return UniformResult(
        s=state.g_hat, updates=state.k, trace=trace, eps=eps, L=L,
        max_cost=max(inst.oracle_A.cost, inst.oracle_B.cost),
        witness_F=float("nan"), witness_R=float("nan"), h=state.h,
        success=success, draw_log=src.log,
    )


def true_violations(s, g_star, mu, F: DistinguisherFamily, R: WeightFamily) -> tuple[float, float]:
    """Exact ``max_f |<s - g*, f>|`` and ``max_r <s - g*, r o s>`` from the tables."""
    wf = np.abs(family_values_F(s, g_star, F, mu))
    wr = family_values_R(s, g_star, R, mu)
    return (float(wf.max()) if wf.size else 0.0, float(wr.max()) if wr.size else 0.0)
