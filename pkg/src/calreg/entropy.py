"""Entropy notions, their subgradients and conjugates, and Bregman divergences.

An entropy notion is a convex ``phi`` on the simplex with a fixed subgradient
choice. ``H_phi(g) = -E_mu[phi(g(x))]`` and the divergence uses the same fixed
subgradient, so non-differentiable notions (min-entropy) are fine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, ShapeError
from .simplex import logsumexp, pointwise_inner, round_fixed

Array = np.ndarray


def xlogx(v: Array) -> Array:
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)


def sigma_transform(v, eps_sigma: float) -> Array:
    """Mix toward uniform: ``(1 - eps) v + eps u``; works row-wise."""
    if not (0 < eps_sigma < 0.5):
        raise DomainError(f"eps_sigma must lie in (0, 1/2), got {eps_sigma}")
    v = np.asarray(v, dtype=float)
    return (1.0 - eps_sigma) * v + eps_sigma / v.shape[-1]


@dataclass(frozen=True)
class EntropyNotion:
    """A convex ``phi`` on the simplex plus everything needed to use it.

    ``scale`` is either a constant or a function of ``L``; it brings the
    (transformed) subgradient into ``[-1, 1]^L``. ``eps_sigma`` switches on the
    boundary transform, applied before the subgradient wherever the notion is
    used as a weight.
    """

    name: str
    phi: Callable[[Array], Array]
    subgrad: Callable[[Array], Array]
    psi: Callable[[Array], Array] | None = None
    scale: float | Callable[[int], float] = 1.0
    eps_sigma: float | None = None
    divergence: Callable[[Array, Array], Array] | None = field(default=None, repr=False)

    def scale_for(self, L: int) -> float:
        return float(self.scale(L)) if callable(self.scale) else float(self.scale)

    def transform(self, v) -> Array:
        v = np.asarray(v, dtype=float)
        if self.eps_sigma is None:
            return v
        return sigma_transform(v, self.eps_sigma)

    def scaled_subgrad(self, v) -> Array:
        """Scaled subgradient at the transformed point; lies in ``[-1, 1]^L``."""
        v = np.asarray(v, dtype=float)
        return self.scale_for(v.shape[-1]) * self.subgrad(self.transform(v))


# -- builtin notions ---------------------------------------------------------


def _kl(u: Array, v: Array) -> Array:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(u > 0, u * (np.log(np.where(u > 0, u, 1.0)) - np.log(v)), 0.0)
    return terms.sum(axis=-1)


def _shannon_subgrad(v: Array) -> Array:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(v, dtype=float))


def shannon(eps_sigma: float | None = None) -> EntropyNotion:
    """Negative Shannon entropy ``sum v ln v`` with subgradient ``ln v``.

    ``ln v`` differs from the gradient by a constant vector, which pairs to zero
    against differences of simplex points. With ``eps_sigma`` set the weight is
    ``ln(sigma(v)) / ln(L / eps_sigma)``, which lies in ``[-1, 0]^L``.
    """
    if eps_sigma is None:
        return EntropyNotion(
            "shannon", lambda v: xlogx(v).sum(axis=-1), _shannon_subgrad, logsumexp,
            divergence=_kl,
        )
    return EntropyNotion(
        "shannon",
        lambda v: xlogx(v).sum(axis=-1),
        _shannon_subgrad,
        logsumexp,
        scale=lambda L: 1.0 / math.log(L / eps_sigma),
        eps_sigma=eps_sigma,
        divergence=_kl,
    )


def _argmax_indicator(v: Array) -> Array:
    v = np.asarray(v, dtype=float)
    # np.argmax resolves ties to the smallest index
    return np.eye(v.shape[-1])[np.argmax(v, axis=-1)]


def min_entropy() -> EntropyNotion:
    """``phi(v) = max_y v_y`` with subgradient ``+e_argmax`` (smallest index on ties)."""
    return EntropyNotion("min_entropy", lambda v: np.max(v, axis=-1), _argmax_indicator)


def collision() -> EntropyNotion:
    return EntropyNotion(
        "collision", lambda v: np.sum(np.square(v), axis=-1), lambda v: 2.0 * np.asarray(v), scale=0.5
    )


def sqrt_collision() -> EntropyNotion:
    # ||v||_2 >= 1/sqrt(L) on the simplex, so the gradient exists everywhere
    def grad(v):
        v = np.asarray(v, dtype=float)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    return EntropyNotion("sqrt_collision", lambda v: np.linalg.norm(v, axis=-1), grad)


BUILTIN_NAMES = ("shannon", "min_entropy", "collision", "sqrt_collision")


def notion_by_name(name: str, eps: float | None = None) -> EntropyNotion:
    """Look up a builtin. Shannon gets ``eps_sigma = eps / 3`` when ``eps`` is given."""
    if name == "shannon":
        return shannon(None if eps is None else eps / 3)
    if name == "min_entropy":
        return min_entropy()
    if name == "collision":
        return collision()
    if name == "sqrt_collision":
        return sqrt_collision()
    raise KeyError(f"unknown entropy notion {name!r}; choose from {BUILTIN_NAMES}")


def builtin_notions(eps: float) -> list[EntropyNotion]:
    return [notion_by_name(name, eps) for name in BUILTIN_NAMES]


# -- operations ----------------------------------------------------------------


def entropy_H(notion: EntropyNotion, g, mu) -> float:
    """``H_phi(g) = -E_mu[phi(g(x))]`` with the unscaled ``phi``."""
    g = np.asarray(g, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if g.ndim != 2 or mu.shape != (g.shape[0],):
        raise ShapeError(f"incompatible shapes {g.shape} and {mu.shape}")
    return float(-(mu @ notion.phi(g)))


def bregman(notion: EntropyNotion, u, v) -> float | Array:
    """Pointwise ``D_phi(u || v)``; returns ``inf`` for Shannon when ``u`` puts
    mass where ``v`` has none."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ShapeError(f"shape mismatch {u.shape} vs {v.shape}")
    if notion.divergence is not None:
        out = notion.divergence(u, v)
    else:
        out = notion.phi(u) - notion.phi(v) - pointwise_inner(u - v, notion.subgrad(v))
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def divergence(notion: EntropyNotion, g_star, g, mu) -> float:
    """``D_phi(g* || g) = E_mu[D_phi(g*(x) || g(x))]``."""
    mu = np.asarray(mu, dtype=float)
    d = np.atleast_1d(bregman(notion, g_star, g))
    if np.any(np.isinf(d[mu > 0])):
        return math.inf
    return float(mu[mu > 0] @ d[mu > 0])


def fenchel_young(notion: EntropyNotion, g, h) -> float | Array:
    """``phi(g) + psi(h) - <g, h>``."""
    if notion.psi is None:
        raise NotImplementedError(f"{notion.name} has no closed-form conjugate")
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    if g.shape != h.shape:
        raise ShapeError(f"shape mismatch {g.shape} vs {h.shape}")
    out = np.asarray(notion.phi(g) + notion.psi(h) - pointwise_inner(g, h))
    return float(out) if out.ndim == 0 else out


def _safe_pairing(diff: Array, grad: Array) -> Array:
    # 0 * (-inf) from Shannon's log at a zero coordinate contributes nothing
    with np.errstate(invalid="ignore"):
        return np.where(diff != 0, diff * grad, 0.0).sum(axis=-1)


def gap_identity_residual(notion: EntropyNotion, s, g_star, mu) -> float:
    """``[H(s) - H(g*) - D(g* || s)] - <g* - s, subgrad o s>``.

    This is an algebraic identity, so the result is zero up to rounding.
    Returns ``inf`` when the divergence term is infinite.
    """
    s = np.asarray(s, dtype=float)
    g_star = np.asarray(g_star, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if s.shape != g_star.shape or mu.shape != (s.shape[0],):
        raise ShapeError(f"incompatible shapes {s.shape}, {g_star.shape}, {mu.shape}")
    d = divergence(notion, g_star, s, mu)
    if math.isinf(d):
        return math.inf
    gap = entropy_H(notion, s, mu) - entropy_H(notion, g_star, mu)
    pairing = float(mu @ _safe_pairing(g_star - s, notion.subgrad(s)))
    return gap - d - pairing


def converse_identity_residual(notion: EntropyNotion, s, g, g_star, mu) -> float:
    """``D(g*||g) - D(s||g) - <s - g*, subgrad o g> - (H(s) - H(g*))``; zero up to rounding."""
    d_star = divergence(notion, g_star, g, mu)
    d_s = divergence(notion, s, g, mu)
    if math.isinf(d_star) or math.isinf(d_s):
        return math.inf
    mu = np.asarray(mu, dtype=float)
    pairing = float(mu @ _safe_pairing(np.asarray(s) - np.asarray(g_star), notion.subgrad(np.asarray(g))))
    gap = entropy_H(notion, s, mu) - entropy_H(notion, g_star, mu)
    return d_star - d_s - pairing - gap


@dataclass(frozen=True)
class WeightFunction:
    """A weight ``r : simplex -> [-1, 1]^L``, evaluated row-wise on ``(..., L)``."""

    fn: Callable[[Array], Array]
    name: str = "r"
    cost: int = 1

    def __call__(self, v) -> Array:
        return np.asarray(self.fn(np.asarray(v, dtype=float)), dtype=float)


def weight_bits(accuracy: float) -> int:
    return math.ceil(math.log2(4.0 / accuracy)) + 1


def subgradient_weight(notion: EntropyNotion, accuracy: float, cost: int = 1) -> WeightFunction:
    """Fixed-point rounding of the scaled (and transformed) subgradient.

    Rounds to ``weight_bits(accuracy)`` fractional bits, so each coordinate is
    within ``accuracy / 16`` of the exact value, well inside ``accuracy / 4``.
    """
    if not (0 < accuracy < 1):
        raise DomainError(f"accuracy must lie in (0, 1), got {accuracy}")
    bits = weight_bits(accuracy)

    def r(v):
        return np.clip(round_fixed(notion.scaled_subgrad(v), bits), -1.0, 1.0)

    return WeightFunction(r, name=f"r_{notion.name}", cost=cost)

