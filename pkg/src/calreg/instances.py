"""Seeded instance generators shared by tests, scripts and the CLI."""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .entropy import notion_by_name, subgradient_weight
from .regularity import DistinguisherFamily, RegularityInstance, WeightFamily
from .simplex import uniform_distribution


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for the named purpose, derived from a master seed."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return np.random.Generator(np.random.Philox(ss))


def random_kernel(rng, N: int, L: int, concentration: float = 1.0, sparse_frac: float = 0.0) -> np.ndarray:
    """Dirichlet rows; a ``sparse_frac`` share of rows get zero coordinates."""
    g = rng.dirichlet(np.full(L, concentration), size=N)
    if sparse_frac > 0 and L > 1:
        rows = np.flatnonzero(rng.random(N) < sparse_frac)
        for i in rows:
            keep = rng.choice(L, size=rng.integers(1, L), replace=False)
            mask = np.zeros(L)
            mask[keep] = 1.0
            w = g[i] * mask
            g[i] = w / w.sum()
    return g


def random_distribution(rng, N: int, skew: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(N, skew))


def random_fields(rng, g_star: np.ndarray, count: int, structured_frac: float = 0.5) -> list[np.ndarray]:
    """Uniform random fields plus fields correlated with ``g* - 1/L``.

    Purely random fields are nearly orthogonal to the residual at desk scale, so
    the structured half is what actually triggers updates.
    """
    N, L = g_star.shape
    n_struct = int(round(count * structured_frac))
    out = []
    for i in range(count):
        if i < n_struct:
            scale = rng.uniform(1.0, 4.0)
            f = scale * (g_star - 1.0 / L) + 0.3 * rng.normal(size=(N, L))
            out.append(np.clip(f, -1.0, 1.0))
        else:
            out.append(rng.uniform(-1.0, 1.0, size=(N, L)))
    return out


def notion_weights(names, eps: float, accuracy: float | None = None) -> list:
    """``subgradient_weight`` for each named notion; Shannon gets ``eps_sigma = eps/3``."""
    acc = eps if accuracy is None else accuracy
    return [subgradient_weight(notion_by_name(n, eps), acc) for n in names]


@dataclass(frozen=True)
class InstanceSpec:
    N: int = 32
    L: int = 4
    eps: float = 0.2
    n_fields: int = 16
    notions: tuple[str, ...] = ("shannon", "min_entropy", "collision", "sqrt_collision")
    sparse_frac: float = 0.25
    concentration: float = 0.5


def random_regularity_instance(spec: InstanceSpec, seed: int, selection: str = "first",
                               exact: bool = False, strict_bits: bool = False) -> RegularityInstance:
    rng = substream(seed, "instance")
    g_star = random_kernel(rng, spec.N, spec.L, spec.concentration, spec.sparse_frac)
    mu = uniform_distribution(spec.N)
    F = DistinguisherFamily(random_fields(rng, g_star, spec.n_fields))
    R = WeightFamily(notion_weights(spec.notions, spec.eps), L=spec.L)
    return RegularityInstance(mu, g_star, F, R, spec.eps, seed=seed, selection=selection,
                              exact=exact, strict_bits=strict_bits)


def two_point_instance(eps: float = 0.1, with_R: bool = False) -> RegularityInstance:
    """L = 2, two equally likely points, ``g*`` a vertex kernel and ``f = e_{y*} - e_{other}``.

    From the uniform start the signed pairing is ``-1``, so ``-f`` is the first hit.
    """
    g_star = np.array([[1.0, 0.0], [0.0, 1.0]])
    f = np.array([[1.0, -1.0], [-1.0, 1.0]])
    R = WeightFamily(notion_weights(("collision",), eps), L=2) if with_R else WeightFamily()
    return RegularityInstance(np.array([0.5, 0.5]), g_star, DistinguisherFamily([f]), R, eps)
