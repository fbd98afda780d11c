"""Executable forms of the entropy characterization: a single simulator whose
pseudoentropy gap dominates the divergence for every notion at once, the
converse bound over a finite hypothesis class, and the omnipredictor property.

All slacks are reported in scaled units, i.e. after multiplying ``phi`` by the
notion's scale so its (transformed) subgradient lies in ``[-1, 1]^L``. For
Shannon the boundary transform is applied to the predictor before taking
entropies and divergences, since the untransformed divergence can be infinite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .entropy import EntropyNotion, divergence, entropy_H, notion_by_name, shannon, subgradient_weight
from .errors import DomainError
from .regularity import DistinguisherFamily, RegularityInstance, RegularityResult, WeightFamily, run_regularity
from .simplex import as_kernel, pointwise_inner


@dataclass
class NotionSet:
    """The family of entropy notions with per-notion weights at accuracy ``eps``."""

    notions: list[EntropyNotion]
    eps: float
    check_points: int = 200

    def __post_init__(self):
        if not self.notions:
            raise DomainError("notion set is empty")
        for L in (2, 4, 8):
            v = np.random.default_rng(L).dirichlet(np.full(L, 0.3), size=self.check_points)
            v[:10] = np.eye(L)[np.arange(10) % L]
            for n in self.notions:
                if np.any(np.abs(n.scaled_subgrad(v)) > 1 + 1e-12):
                    raise DomainError(f"scaled subgradient of {n.name} leaves [-1, 1]^L")

    @classmethod
    def builtins(cls, eps: float, names: Sequence[str] = ("shannon", "min_entropy", "collision", "sqrt_collision")):
        return cls([notion_by_name(n, eps) for n in names], eps)

    def weights(self, accuracy: float | None = None):
        acc = self.eps if accuracy is None else accuracy
        return [subgradient_weight(n, acc) for n in self.notions]

    def __iter__(self):
        return iter(self.notions)


@dataclass
class HypothesisClass:
    """A finite list of kernels standing in for a bounded-complexity class."""

    members: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise DomainError("hypothesis class is empty")
        self.members = [as_kernel(g) for g in self.members]

    def __len__(self):
        return len(self.members)


def _T(notion: EntropyNotion, g) -> np.ndarray:
    return notion.transform(g)


def _sigma_fallback(notion: EntropyNotion, eps: float) -> EntropyNotion:
    if notion.name == "shannon" and notion.eps_sigma is None:
        return shannon(eps / 3)
    return notion


def scaled_gap(notion: EntropyNotion, s, g_star, mu) -> float:
    """``c * (H(Ts) - H(g*) - D(g* || Ts))`` with ``T`` the notion's transform."""
    L = np.shape(g_star)[1]
    ts = _T(notion, s)
    d = divergence(notion, g_star, ts, mu)
    if math.isinf(d):
        return -math.inf
    return notion.scale_for(L) * (entropy_H(notion, ts, mu) - entropy_H(notion, g_star, mu) - d)


def build_universal_simulator(g_star, F: DistinguisherFamily | Sequence, Phi: NotionSet, eps: float, mu,
                              selection: str = "first", strict_bits: bool = False) -> RegularityResult:
    """Boost from uniform until ``s`` is ``eps/2``-indistinguishable against ``F``
    and ``eps/2``-calibrated against every notion's subgradient weight."""
    if not isinstance(F, DistinguisherFamily):
        F = DistinguisherFamily(list(F))
    L = np.shape(g_star)[1]
    R = WeightFamily(Phi.weights(eps), L=L)
    inst = RegularityInstance(mu, g_star, F, R, eps / 2, selection=selection, strict_bits=strict_bits)
    return run_regularity(inst)


def verify_forward(s, g_star, Phi: NotionSet | Sequence[EntropyNotion], eps: float, mu) -> dict[str, float]:
    """Per notion ``c * (H(Ts) - H(g*) - D(g* || Ts)) + eps``; should be ``>= 0``."""
    notions = Phi.notions if isinstance(Phi, NotionSet) else list(Phi)
    out = {}
    for n in notions:
        gap = scaled_gap(n, s, g_star, mu)
        if math.isinf(gap):
            gap = scaled_gap(_sigma_fallback(n, eps), s, g_star, mu)
        out[n.name] = gap + eps
    return out


def verify_transformed(s, g_star, notion: EntropyNotion, eps: float, mu) -> float:
    """Transformed forward slack; requires a notion with ``eps_sigma`` set."""
    if notion.eps_sigma is None:
        raise DomainError(f"{notion.name} has no boundary transform")
    return scaled_gap(notion, s, g_star, mu) + eps


def unscaled_gap(notion: EntropyNotion, s, g_star, mu, transformed: bool = True) -> float:
    """``H(Ts) - H(g*) - D(g* || Ts)`` without the scale, optionally with ``T = id``."""
    ts = _T(notion, s) if transformed else np.asarray(s, dtype=float)
    return entropy_H(notion, ts, mu) - entropy_H(notion, g_star, mu) - divergence(notion, g_star, ts, mu)


def converse_fields(G: HypothesisClass, Phi: NotionSet, eps: float) -> list[np.ndarray]:
    """The fields ``r_phi o g`` for every ``g`` in the class and every notion."""
    return [w(g) for g in G.members for w in Phi.weights(eps)]


def min_divergence(notion: EntropyNotion, g_star, G: HypothesisClass, mu) -> float:
    """``min_g c * D(g* || Tg)`` over the class."""
    L = np.shape(g_star)[1]
    c = notion.scale_for(L)
    return min(c * divergence(notion, g_star, _T(notion, g), mu) for g in G.members)


@dataclass(frozen=True)
class ConverseCheck:
    premise_value: float
    premise_ok: bool
    gap: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.gap


def verify_converse(s, g_star, G: HypothesisClass, notion: EntropyNotion, eps: float, mu,
                    F_check: Sequence[np.ndarray] | None = None) -> ConverseCheck:
    """If ``s`` is ``eps/2``-indistinguishable from ``g*`` against ``F_check``
    (default: ``r_phi o g`` for ``g`` in ``G``), its scaled entropy gap is at
    most ``min_g c * D(g* || Tg) + eps``. The bound is only meaningful when
    ``premise_ok`` holds.
    """
    mu = np.asarray(mu, dtype=float)
    s = np.asarray(s, dtype=float)
    g_star = np.asarray(g_star, dtype=float)
    if F_check is None:
        w = subgradient_weight(notion, eps)
        F_check = [w(g) for g in G.members]
    diff = s - g_star
    premise = max(abs(float(mu @ pointwise_inner(diff, f))) for f in F_check)
    c = notion.scale_for(g_star.shape[1])
    gap = c * (entropy_H(notion, s, mu) - entropy_H(notion, g_star, mu))
    bound = min_divergence(notion, g_star, G, mu) + eps
    return ConverseCheck(premise, premise <= eps / 2, gap, bound)


def omnipredictor_check(s, g_star, G: HypothesisClass, Phi: NotionSet | Sequence[EntropyNotion], eps: float,
                        mu) -> dict[str, float]:
    """Per notion ``min_g c * D(g* || Tg) + 2 eps - c * D(g* || Ts)``."""
    notions = Phi.notions if isinstance(Phi, NotionSet) else list(Phi)
    L = np.shape(g_star)[1]
    out = {}
    for n in notions:
        d_s = n.scale_for(L) * divergence(n, g_star, _T(n, s), mu)
        out[n.name] = min_divergence(n, g_star, G, mu) + 2 * eps - d_s
    return out


def sigma_divergence_correction(eps_sigma: float) -> float:
    """``D(u || sigma(v)) <= D(u || v) + ln(1 / (1 - eps_sigma))`` since ``sigma(v) >= (1 - eps_sigma) v``."""
    return -math.log1p(-eps_sigma)


# -- negative controls -------------------------------------------------------------


def confidently_wrong(g_star, weight: float = 0.9) -> np.ndarray:
    """Each row puts ``weight`` on the label ``g*`` considers least likely."""
    g_star = np.asarray(g_star, dtype=float)
    N, L = g_star.shape
    s = np.full((N, L), (1 - weight) / max(L - 1, 1))
    s[np.arange(N), np.argmin(g_star, axis=1)] = weight
    if L == 1:
        s[:] = 1.0
    return s


def forward_negative_control(L: int = 2):
    """``(s, g*, mu)`` where ``s`` is badly miscalibrated and the forward slack is
    negative for every builtin notion."""
    g_star = np.tile(np.r_[0.1, 0.9, np.zeros(L - 2)], (2, 1))
    return confidently_wrong(g_star, 0.9), g_star, np.array([0.5, 0.5])


def converse_negative_control(g_star, G: HypothesisClass, notion: EntropyNotion, eps: float, mu):
    """A kernel that the converse distinguishers separate from ``g*`` by more
    than ``eps/2``; the converse premise fails so no bound is asserted."""
    s = confidently_wrong(g_star)
    chk = verify_converse(s, g_star, G, notion, eps, mu)
    return s, chk
