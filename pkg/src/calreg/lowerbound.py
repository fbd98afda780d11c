"""Hardness instance built from a set system with small pairwise intersections.

Labels are the ground set ``[n]``. Each domain point ``x`` owns a set ``S_x``
split into two halves; ``g*(x)`` is uniform on the half picked by a hidden
bit ``eta(x)``. The identity field ``f(x) = 1_{S_x}`` and the convex function
``phi(v) = max_x <v, 1_{S_x^(1 - eta(x))}>`` together force any predictor that
fools ``f`` and keeps ``phi``-entropy high to recover most of ``eta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .simplex import uniform_distribution

IND_TOL = 0.05
CONCLUSION_THRESHOLD = 0.6


@dataclass(frozen=True)
class DesignFamily:
    n: int
    alpha: float
    sets: tuple[tuple[int, ...], ...]

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def max_intersection(self) -> float:
        return 2 * self.alpha**2 * self.n

    def incidence(self) -> np.ndarray:
        out = np.zeros((self.m, self.n), dtype=np.int64)
        for i, s in enumerate(self.sets):
            out[i, list(s)] = 1
        return out

    def audit(self) -> dict[str, bool]:
        """The three invariants, in integer arithmetic."""
        inc = self.incidence()
        sizes = inc.sum(axis=1)
        inter = inc @ inc.T
        np.fill_diagonal(inter, 0)
        return {
            "size": bool(np.all(sizes >= self.alpha * self.n)),
            "even": bool(np.all(sizes % 2 == 0)),
            "intersection": bool(np.all(inter <= self.max_intersection)),
        }

    def to_lists(self) -> list[list[int]]:
        return [sorted(s) for s in self.sets]


def design_set_size(n: int, alpha: float) -> int:
    k = math.ceil(alpha * n)
    return k + (k % 2)


def build_design(n: int, alpha: float, target_m: int, rng, max_attempts: int = 100_000) -> DesignFamily:
    """Greedy rejection sampling: draw random sets of the design size and keep
    each one whose intersection with every kept set is small enough."""
    k = design_set_size(n, alpha)
    if k > n:
        raise DomainError(f"set size {k} exceeds ground set {n}")
    if target_m < 1:
        raise DomainError("target_m must be at least 1")
    cap = math.floor(2 * alpha**2 * n + 1e-12)
    kept = np.zeros((0, n), dtype=np.int64)
    sets = []
    for _ in range(max_attempts):
        s = np.sort(rng.choice(n, size=k, replace=False))
        row = np.zeros(n, dtype=np.int64)
        row[s] = 1
        if kept.shape[0] == 0 or np.all(kept @ row <= cap):
            kept = np.vstack([kept, row])
            sets.append(tuple(int(i) for i in s))
            if len(sets) >= target_m:
                return DesignFamily(n, alpha, tuple(sets))
    raise DomainError(f"design search reached only m={len(sets)} of {target_m} in {max_attempts} attempts")


@dataclass
class LowerBoundInstance:
    design: DesignFamily
    eta: np.ndarray
    halves: np.ndarray = field(repr=False)  # (m, 2, n) 0/1 indicators of S^(0), S^(1)

    @property
    def m(self) -> int:
        return self.design.m

    @property
    def L(self) -> int:
        return self.design.n

    @property
    def mu(self) -> np.ndarray:
        return uniform_distribution(self.m)

    @property
    def f_identity(self) -> np.ndarray:
        return self.halves.sum(axis=1).astype(float)

    def half(self, bits) -> np.ndarray:
        """Indicator rows ``1_{S_x^(bits[x])}``."""
        return self.halves[np.arange(self.m), np.asarray(bits)].astype(float)

    @property
    def g_star(self) -> np.ndarray:
        h = self.half(self.eta)
        return h / h.sum(axis=1, keepdims=True)

    @property
    def phi_rows(self) -> np.ndarray:
        """``1_{S_x^(1 - eta(x))}``: the linear pieces of ``phi``."""
        return self.half(1 - self.eta)

    def restrict(self, k: int) -> "LowerBoundInstance":
        """Instance on the first ``k`` domain points."""
        d = DesignFamily(self.design.n, self.design.alpha, self.design.sets[:k])
        return LowerBoundInstance(d, self.eta[:k].copy(), self.halves[:k])


def _halves(design: DesignFamily) -> np.ndarray:
    out = np.zeros((design.m, 2, design.n), dtype=np.int8)
    for i, s in enumerate(design.sets):
        s = sorted(s)
        k = len(s) // 2
        out[i, 0, s[:k]] = 1
        out[i, 1, s[k:]] = 1
    return out


def build_lb_instance(design: DesignFamily, rng_or_eta) -> LowerBoundInstance:
    """Halves split in sorted order (first half is ``S^(0)``); ``eta`` given or drawn uniformly."""
    if isinstance(rng_or_eta, np.random.Generator):
        eta = rng_or_eta.integers(0, 2, size=design.m)
    else:
        eta = np.asarray(rng_or_eta, dtype=np.int64)
        if eta.shape != (design.m,) or np.any((eta != 0) & (eta != 1)):
            raise DomainError("eta must be a 0/1 vector with one bit per set")
    return LowerBoundInstance(design, eta, _halves(design))


def phi_lb_value(instance: LowerBoundInstance, v) -> np.ndarray | float:
    out = np.asarray(v, dtype=float) @ instance.phi_rows.T
    out = out.max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def phi_lb_argmax(instance: LowerBoundInstance, v) -> np.ndarray:
    # argmax takes the smallest domain index on ties
    return np.argmax(np.asarray(v, dtype=float) @ instance.phi_rows.T, axis=-1)


def phi_lb_subgrad(instance: LowerBoundInstance, v) -> np.ndarray:
    return instance.phi_rows[phi_lb_argmax(instance, v)]


def neg_entropy(instance: LowerBoundInstance, s) -> float:
    """``-H_phi(s) = E_x phi(s(x))``."""
    return float(instance.mu @ phi_lb_value(instance, s))


def verify_entropy_bound(instance: LowerBoundInstance) -> float:
    """``4 alpha - (-H_phi(g*))``; nonnegative by the intersection bound."""
    return 4 * instance.design.alpha - neg_entropy(instance, instance.g_star)


def pairwise_chain_slack(instance: LowerBoundInstance) -> np.ndarray:
    """Per pair ``(x', x)``: ``(2 / (alpha L)) |S_x'^eta ∩ S_x^(1-eta)| - <g*(x'), 1_{S_x^(1-eta)}>``."""
    a = instance.half(instance.eta)
    b = instance.phi_rows
    inter = a @ b.T
    lhs = instance.g_star @ b.T
    return (2 / (instance.design.alpha * instance.L)) * inter - lhs


@dataclass(frozen=True)
class ImplicationCheck:
    ind_value: float
    entropy_value: float
    calibration_value: float
    conclusion_value: float
    ind_ok: bool
    entropy_ok: bool
    calibration_ok: bool

    @property
    def holds(self) -> bool:
        return not (self.ind_ok and self.entropy_ok) or self.conclusion_value >= CONCLUSION_THRESHOLD


def verify_implication(instance: LowerBoundInstance, s) -> ImplicationCheck:
    """(i) ``|<s - g*, f>| <= 0.05``, (ii) ``H(s) >= H(g*) - 0.05``, the
    calibration premise ``<s - g*, subgrad o s> <= 0.05`` (which implies (ii)),
    and the conclusion ``E <s, 1_{S^eta}>``; (i) and (ii) force it to ``>= 0.6``."""
    s = np.asarray(s, dtype=float)
    mu, g = instance.mu, instance.g_star
    f = instance.f_identity
    ind = float(mu @ ((s - g) * f).sum(axis=1))
    ent = neg_entropy(instance, s) - neg_entropy(instance, g)  # H(g*) - H(s)
    sub = phi_lb_subgrad(instance, s)
    cal = float(mu @ ((s - g) * sub).sum(axis=1))
    concl = float(mu @ (s * instance.half(instance.eta)).sum(axis=1))
    return ImplicationCheck(ind, ent, cal, concl, abs(ind) <= IND_TOL, ent <= IND_TOL, cal <= IND_TOL)


# -- randomized stress pool ------------------------------------------------------


ATOMS = ("eta_half", "other_half", "uniform", "outside", "neighbor")


def atom_kernels(instance: LowerBoundInstance, perm: np.ndarray | None = None) -> np.ndarray:
    """``(5, m, L)``: per point, uniform on ``S^eta``, ``S^(1-eta)``, ``[L]``,
    ``[L] minus S_x`` and ``S_{perm(x)}``."""
    m, L = instance.m, instance.L
    perm = np.roll(np.arange(m), 1) if perm is None else perm
    f = instance.f_identity
    rows = [instance.half(instance.eta), instance.phi_rows, np.ones((m, L)), 1 - f, f[perm]]
    return np.stack([r / r.sum(axis=1, keepdims=True) for r in rows])


@dataclass(frozen=True)
class StressSummary:
    size: int
    counterexamples: int
    non_vacuous: int
    calibration_premise_cases: int
    route_disagreements: int
    min_conclusion_when_premised: float


def stress_weights(rng, size: int, m: int) -> np.ndarray:
    """Per-point mixture weights over the atoms, mostly near the ``S^eta`` atom
    so many members satisfy the premises."""
    w = rng.dirichlet(np.full(len(ATOMS), 0.5), size=(size, m))
    t = rng.uniform(0, 1, size=(size, 1, 1)) ** 3
    base = np.zeros(len(ATOMS))
    base[0] = 1.0
    return (1 - t) * base + t * w


def stress_test(instance: LowerBoundInstance, size: int, rng, batch: int = 2000) -> StressSummary:
    """Check the implication on ``size`` random mixture kernels without
    materializing them: all needed quantities are linear in the weights."""
    A = atom_kernels(instance, rng.permutation(instance.m))
    mu = instance.mu
    f = instance.f_identity
    g = instance.g_star
    # per-atom, per-point features
    ind_feat = (A * f).sum(axis=2) - 1.0  # <atom - g*, f>, since <g*, f> = 1
    conc_feat = (A * instance.half(instance.eta)).sum(axis=2)
    phi_feat = np.einsum("apl,ql->apq", A, instance.phi_rows)  # (5, m, m)
    g_phi = g @ instance.phi_rows.T  # <g*(x), row_q>
    neg_h_g = neg_entropy(instance, g)

    counter = nonvac = calp = disagree = 0
    min_concl = math.inf
    done = 0
    while done < size:
        b = min(batch, size - done)
        W = stress_weights(rng, b, instance.m)  # (b, m, 5)
        ind = np.einsum("bpa,ap,p->b", W, ind_feat, mu)
        conc = np.einsum("bpa,ap,p->b", W, conc_feat, mu)
        vals = np.einsum("bpa,apq->bpq", W, phi_feat)
        amax = vals.argmax(axis=2)
        phis = np.take_along_axis(vals, amax[..., None], axis=2)[..., 0]
        ent = phis @ mu - neg_h_g
        cal = (phis - np.take_along_axis(np.broadcast_to(g_phi, vals.shape), amax[..., None], axis=2)[..., 0]) @ mu
        i_ok = np.abs(ind) <= IND_TOL
        e_ok = ent <= IND_TOL
        c_ok = cal <= IND_TOL
        prem = i_ok & e_ok
        counter += int(np.sum(prem & (conc < CONCLUSION_THRESHOLD)))
        nonvac += int(prem.sum())
        calp += int(c_ok.sum())
        disagree += int(np.sum(c_ok & ~e_ok))
        if prem.any():
            min_concl = min(min_concl, float(conc[prem].min()))
        done += b
    return StressSummary(size, counter, nonvac, calp, disagree, min_concl)


# -- counting decay -----------------------------------------------------------------


@dataclass(frozen=True)
class CountingResult:
    sizes: tuple[int, ...]
    fractions: tuple[float, ...]
    log_slope: float

    @property
    def strictly_decreasing(self) -> bool:
        return all(a > b for a, b in zip(self.fractions, self.fractions[1:]))


def agreement_values(instance: LowerBoundInstance, pool_bits: np.ndarray, pool_mix: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """``E_x <s(x), 1_{S^eta}>`` for pool members ``s = (1-t) U(S^b) + t U(S)``."""
    agree = (pool_bits == eta[None, :]).astype(float)
    per_x = (1 - pool_mix)[:, None] * agree + pool_mix[:, None] * 0.5
    return per_x.mean(axis=1)


def counting_demo(instance: LowerBoundInstance, pool_bits: np.ndarray, pool_mix: np.ndarray | None = None,
                  trials: int = 200, rng=None, threshold: float = CONCLUSION_THRESHOLD) -> float:
    """Fraction of (pool member, fresh ``eta``) pairs whose value reaches the threshold.

    Pool members are built from bits drawn independently of ``eta``: member
    ``j`` is uniform on ``S_x^(b_j(x))`` mixed with weight ``t_j`` into
    ``U(S_x)``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    pool_bits = np.asarray(pool_bits)[:, : instance.m]
    pool_mix = np.zeros(len(pool_bits)) if pool_mix is None else np.asarray(pool_mix)
    hits = 0
    for _ in range(trials):
        eta = rng.integers(0, 2, size=instance.m)
        hits += int(np.sum(agreement_values(instance, pool_bits, pool_mix, eta) >= threshold))
    return hits / (trials * len(pool_bits))


def counting_sweep(instance: LowerBoundInstance, sizes: Sequence[int] = (10, 20, 40), pool_size: int = 200,
                   trials: int = 400, seed: int = 0) -> CountingResult:
    rng = np.random.default_rng(seed)
    pool_bits = rng.integers(0, 2, size=(pool_size, instance.m))
    pool_mix = np.where(rng.random(pool_size) < 0.25, 0.5, 0.0)
    fr = []
    for k in sizes:
        sub = instance.restrict(k)
        fr.append(counting_demo(sub, pool_bits, pool_mix, trials, np.random.default_rng([seed, k])))
    logs = np.log(np.maximum(fr, 1e-12))
    slope = float(np.polyfit(np.asarray(sizes, dtype=float), logs, 1)[0])
    return CountingResult(tuple(sizes), tuple(fr), slope)
