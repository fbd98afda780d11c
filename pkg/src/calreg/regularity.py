"""Boosting a simulator that is multiaccurate against a finite family of
distinguishers and calibrated against a finite family of weight functions
(non-uniform setting: full table access to ``g*``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .entropy import WeightFunction
from .errors import ContractViolation, DomainError, ShapeError
from .mirror import ConjugatePairState, md_update, potential
from .simplex import approx_softmax, as_distribution, as_field, as_kernel, pointwise_inner


@dataclass(frozen=True)
class Distinguisher:
    values: np.ndarray
    cost: int = 1
    name: str = "f"


class DistinguisherFamily:
    """Ordered distinguishers ``f : X -> [-1, 1]^L``, stacked as ``(M, N, L)``."""

    def __init__(self, members: Sequence[Distinguisher | np.ndarray] = ()):
        self.members = [m if isinstance(m, Distinguisher) else Distinguisher(np.asarray(m, dtype=float)) for m in members]
        for i, m in enumerate(self.members):
            try:
                as_field(m.values, clamp=True)
            except DomainError as exc:
                raise DomainError(f"distinguisher {i}: {exc}") from None
        self.stacked = np.stack([m.values for m in self.members]) if self.members else None

    def __len__(self):
        return len(self.members)

    @property
    def max_cost(self) -> int:
        return max((m.cost for m in self.members), default=0)


class WeightFamily:
    """Ordered weight functions ``r : simplex -> [-1, 1]^L``.

    Each member is spot-checked at load on 100 random simplex points.
    """

    def __init__(self, members: Sequence[WeightFunction] = (), L: int | None = None, check_points: int = 100):
        self.members = list(members)
        if L is not None and self.members:
            probe = np.random.default_rng(0).dirichlet(np.ones(L), size=check_points)
            for i, r in enumerate(self.members):
                out = r(probe)
                if out.shape != probe.shape or np.any(np.abs(out) > 1.0 + 1e-12):
                    raise DomainError(f"weight function {i} ({r.name}) leaves [-1, 1]^L")

    def __len__(self):
        return len(self.members)

    @property
    def max_cost(self) -> int:
        return max((r.cost for r in self.members), default=0)


@dataclass
class RegularityInstance:
    mu: np.ndarray
    g_star: np.ndarray
    F: DistinguisherFamily
    R: WeightFamily
    eps: float
    seed: int = 0
    selection: str = "first"
    exact: bool = False
    strict_bits: bool = False

    def __post_init__(self):
        if not (0 < self.eps < 0.5):
            raise DomainError(f"eps must lie in (0, 1/2) for the regularity construction, got {self.eps}")
        if self.selection not in ("first", "max"):
            raise ValueError(f"selection must be 'first' or 'max', got {self.selection!r}")
        self.mu = as_distribution(self.mu)
        self.g_star = as_kernel(self.g_star)
        if self.g_star.shape[0] != self.mu.shape[0]:
            raise ShapeError("g_star and mu disagree on the domain size")
        if len(self.F) and self.F.stacked.shape[1:] != self.g_star.shape:
            raise ShapeError("distinguishers and g_star disagree on shape")

    @property
    def N(self) -> int:
        return self.g_star.shape[0]

    @property
    def L(self) -> int:
        return self.g_star.shape[1]


@dataclass(frozen=True)
class Violation:
    member: int
    sign: int
    value: float


@dataclass(frozen=True)
class TraceRecord:
    update_index: int
    family: str
    member: int
    sign: int
    violation: float
    potential_before: float
    potential_after: float
    true_margin: float


@dataclass
class RegularityResult:
    s: np.ndarray
    updates: int
    trace: list[TraceRecord]
    eps: float
    L: int
    max_cost: int
    witness_F: float
    witness_R: float
    h: np.ndarray = field(repr=False, default=None)
    h_drift: float = 0.0

    @property
    def complexity(self) -> int:
        return complexity_of(self)


TRACE_FIELDS = ("update_index", "family", "member", "violation", "potential_before", "potential_after")


def update_cap(L: int, eps: float) -> int:
    """Potential starts at most ``ln L`` and drops by more than ``eps^2/4`` per update."""
    return math.ceil(4 * math.log(L) / eps**2)


def _signed_values(values: np.ndarray) -> np.ndarray:
    # scan order: f0, -f0, f1, -f1, ...
    return np.stack([values, -values], axis=1).reshape(-1)


def _pick(values: np.ndarray, eps: float, selection: str) -> int | None:
    hits = np.flatnonzero(values > eps)
    if hits.size == 0:
        return None
    if selection == "max":
        return int(hits[np.argmax(values[hits])])
    return int(hits[0])


def family_values_F(g_hat, g_star, F: DistinguisherFamily, mu) -> np.ndarray:
    """``<g_hat - g*, f>`` for each member of ``F``."""
    if not len(F):
        return np.zeros(0)
    diff = np.asarray(g_hat) - np.asarray(g_star)
    return np.einsum("mij,ij,i->m", F.stacked, diff, np.asarray(mu))


def family_values_R(g_hat, g_star, R: WeightFamily, mu) -> np.ndarray:
    """``<g_hat - g*, r o g_hat>`` for each member of ``R``."""
    g_hat = np.asarray(g_hat)
    diff = g_hat - np.asarray(g_star)
    mu = np.asarray(mu)
    return np.array([mu @ pointwise_inner(diff, r(g_hat)) for r in R.members])


def find_violation_F(g_hat, g_star, F: DistinguisherFamily, eps: float, mu, selection: str = "first") -> Violation | None:
    """First (or largest) signed member with ``<g_hat - g*, +-f> > eps``."""
    signed = _signed_values(family_values_F(g_hat, g_star, F, mu))
    idx = _pick(signed, eps, selection)
    if idx is None:
        return None
    return Violation(idx // 2, 1 if idx % 2 == 0 else -1, float(signed[idx]))


def find_violation_R(g_hat, g_star, R: WeightFamily, eps: float, mu, selection: str = "first") -> Violation | None:
    """One-sided: there is no ``-R`` scan."""
    values = family_values_R(g_hat, g_star, R, mu)
    idx = _pick(values, eps, selection)
    if idx is None:
        return None
    return Violation(idx, 1, float(values[idx]))


class _Rounder:
    """Produces ``g_hat`` from the dual iterate within l1 budget ``budget``.

    In strict-bits mode a fixed-point copy of ``h`` is kept alongside the exact
    one; each step is rounded to ``bits`` fractional bits so the accumulated
    drift stays below ``budget / 3`` over ``cap`` updates.
    """

    def __init__(self, N, L, budget, cap, exact, strict):
        self.budget = budget
        self.exact = exact
        self.strict = strict
        self.bits = math.ceil(math.log2(30 * max(cap, 1) / (10 * budget))) + 1
        self.h_hat = np.zeros((N, L))

    def step(self, delta):
        if self.strict:
            scale = 2.0**self.bits
            self.h_hat = self.h_hat + np.round(np.asarray(delta) * scale) / scale

    def __call__(self, h):
        source = self.h_hat if self.strict else h
        B = max(2.0, float(np.ceil(np.max(np.abs(source))))) if source.size else 2.0
        return approx_softmax(source, self.budget, B, exact=self.exact)

    def drift(self, h, k):
        if self.strict:
            return float(np.max(np.abs(self.h_hat - h)))
        return k * 2.0 ** -(self.bits + 1)


def run_regularity(instance: RegularityInstance) -> RegularityResult:
    """Multiplicative-weights boosting until no distinguisher or weight function
    witnesses a violation larger than ``eps``.

    Each loop pass checks ``F`` (both signs) and then ``R``, with at most one
    update of each kind; an update moves the dual iterate by ``-eps * f`` or by
    ``-eps * r(g_hat)`` frozen at that moment, after which ``g_hat`` is
    re-rounded within l1 budget ``eps / 10``.
    """
    inst = instance
    mu, g_star, eps = inst.mu, inst.g_star, inst.eps
    N, L = g_star.shape
    cap = update_cap(L, eps)
    rounder = _Rounder(N, L, eps / 10, cap, inst.exact, inst.strict_bits)

    state = ConjugatePairState.initial(N, L)
    state = ConjugatePairState(state.h, state.g, rounder(state.h), 0, (potential(g_star, state.h, mu),))
    trace: list[TraceRecord] = []

    def apply(state, family, viol, signal):
        before = state.potential_trace[-1]
        margin = float(mu @ pointwise_inner(state.g - g_star, signal))
        rounder.step(-eps * signal)
        new = md_update(state, signal, eps)
        after = potential(g_star, new.h, mu)
        new = ConjugatePairState(new.h, new.g, rounder(new.h), new.k, state.potential_trace + (after,))
        trace.append(TraceRecord(new.k, family, viol.member, viol.sign, viol.value, before, after, margin))
        return new

    updated = True
    while updated:
        updated = False
        viol = find_violation_F(state.g_hat, g_star, inst.F, eps, mu, inst.selection)
        if viol is not None:
            signal = viol.sign * inst.F.stacked[viol.member]
            state = apply(state, "F", viol, signal)
            updated = True
        viol = find_violation_R(state.g_hat, g_star, inst.R, eps, mu, inst.selection)
        if viol is not None:
            signal = np.clip(inst.R.members[viol.member](state.g_hat), -1.0, 1.0)
            state = apply(state, "R", viol, signal)
            updated = True
        if state.k > cap + 1:
            raise ContractViolation("update count within 4 ln L / eps^2", f"k={state.k}, cap={cap}")

    s = state.g_hat
    wf = np.abs(family_values_F(s, g_star, inst.F, mu))
    wr = family_values_R(s, g_star, inst.R, mu)
    return RegularityResult(
        s=s,
        updates=state.k,
        trace=trace,
        eps=eps,
        L=L,
        max_cost=max(inst.F.max_cost, inst.R.max_cost),
        witness_F=float(wf.max()) if wf.size else 0.0,
        witness_R=float(wr.max()) if wr.size else 0.0,
        h=state.h,
        h_drift=rounder.drift(state.h, state.k),
    )


def polylog_term(L: int, eps: float) -> int:
    """Reporting stand-in for the per-update softmax circuit, ``L * ceil(log2(L/eps))^3``."""
    return L * math.ceil(math.log2(L / eps)) ** 3


def complexity_of(result: RegularityResult) -> int:
    """Structural size estimate ``(k + 1) * (max member cost + polylog term)``."""
    return (result.updates + 1) * (result.max_cost + polylog_term(result.L, result.eps))


def trace_rows(result: RegularityResult) -> list[dict]:
    return [
        {
            "update_index": t.update_index,
            "family": t.family,
            "member": t.member if t.family == "R" else t.sign * (t.member + 1),
            "violation": t.violation,
            "potential_before": t.potential_before,
            "potential_after": t.potential_after,
        }
        for t in trace_iter(result)
    ]


def trace_iter(result):
    return iter(result.trace)
