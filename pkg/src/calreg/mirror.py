"""Multiplicative weights as mirror descent on the simplex.

The dual iterate ``h`` is unconstrained; the primal iterate is ``softmax(h)``.
The Fenchel-Young divergence ``Gamma(g*, h)`` between the negative Shannon
entropy and log-sum-exp is the potential tracked by the boosting loops.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .entropy import xlogx
from .simplex import as_field, l1_distance, linf_norm, logsumexp, pointwise_inner, softmax


@dataclass(frozen=True)
class ConjugatePairState:
    h: np.ndarray
    g: np.ndarray
    g_hat: np.ndarray
    k: int = 0
    potential_trace: tuple[float, ...] = field(default=())

    @classmethod
    def initial(cls, N: int, L: int, g_hat: np.ndarray | None = None) -> "ConjugatePairState":
        h = np.zeros((N, L))
        g = softmax(h)
        return cls(h, g, g if g_hat is None else g_hat)


def md_update(state: ConjugatePairState, signal, step: float) -> ConjugatePairState:
    """``h' = h - step * signal``; ``g' = softmax(h')``. ``g_hat`` is left for the
    caller to re-round."""
    signal = as_field(signal, clamp=True)
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    h = state.h - step * signal
    g = softmax(h)
    return replace(state, h=h, g=g, g_hat=g, k=state.k + 1)


def fenchel_young_shannon(g, h) -> np.ndarray:
    """Pointwise ``Gamma(g, h) = sum g ln g + logsumexp(h) - <g, h>``."""
    g = np.asarray(g, dtype=float)
    return xlogx(g).sum(axis=-1) + logsumexp(h) - pointwise_inner(g, h)


def potential(g_star, h, mu) -> float:
    """``E_mu[Gamma(g*(x), h(x))]``; at ``h = 0`` this is ``E[phi(g*)] + ln L <= ln L``."""
    return float(np.asarray(mu, dtype=float) @ fenchel_young_shannon(g_star, h))


def sup_norm(f) -> float:
    """``max_x |f(x)|_inf``."""
    return float(np.max(np.abs(f))) if np.size(f) else 0.0


def verify_md_inequality(g_star, before: ConjugatePairState, after: ConjugatePairState, signal, mu) -> float:
    """Slack in ``Gamma(g*, h_k) - Gamma(g*, h_{k+1}) >= <g_k - g*, f> - |f|^2 / 2``.

    ``after`` must come from a unit-step update with ``signal`` (step folded in).
    """
    mu = np.asarray(mu, dtype=float)
    lhs = potential(g_star, before.h, mu) - potential(g_star, after.h, mu)
    rhs = float(mu @ pointwise_inner(before.g - np.asarray(g_star), signal)) - 0.5 * sup_norm(signal) ** 2
    return lhs - rhs


def verify_softmax_lipschitz(h, h2) -> float:
    """``|h - h2|_inf - |softmax(h) - softmax(h2)|_1``."""
    return linf_norm(np.asarray(h) - np.asarray(h2)) - l1_distance(softmax(h), softmax(h2))


def verify_pinsker_strong_convexity(u, v) -> float:
    """``KL(u || v) - |u - v|_1^2 / 2``; ``inf`` when ``u`` is not absolutely continuous."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        kl = np.where(u > 0, u * (np.log(np.where(u > 0, u, 1.0)) - np.log(v)), 0.0).sum(axis=-1)
    return kl - 0.5 * l1_distance(u, v) ** 2
