"""Finite-domain probability primitives.

Everything is a plain numpy array:

* a distribution ``mu`` over the domain has shape ``(N,)``;
* a kernel (a map from domain points to the simplex) has shape ``(N, L)``
  with each row in the simplex;
* a vector field has shape ``(N, L)``; distinguishers are clamped to
  ``[-1, 1]``, dual iterates are not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .errors import DomainError, NumericError, ShapeError

SIMPLEX_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


@dataclass(frozen=True)
class FiniteDomain:
    points: tuple[Hashable, ...]
    n: int | None = None

    def __post_init__(self):
        if len(self.points) < 1:
            raise DomainError("domain needs at least one point")
        if len(set(self.points)) != len(self.points):
            raise DomainError("domain points must be distinct")

    @classmethod
    def of_size(cls, N: int) -> "FiniteDomain":
        return cls(tuple(range(N)))

    def __len__(self):
        return len(self.points)


def _simplex_rows(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{what} has non-finite entries")
    if np.any(arr < -SIMPLEX_TOL):
        raise DomainError(f"{what} has negative entries")
    arr = np.clip(arr, 0.0, None)
    sums = arr.sum(axis=-1, keepdims=True)
    drift = np.abs(sums - 1.0)
    if np.any(drift > RENORMALIZE_TOL):
        raise DomainError(f"{what} rows must sum to 1 (max drift {drift.max():.3g})")
    if np.any(drift > SIMPLEX_TOL):
        arr = arr / sums
    return arr


def as_simplex(v) -> np.ndarray:
    """Validate a single simplex point; float drift up to 1e-9 is renormalized."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ShapeError(f"simplex vector must be 1-d, got shape {arr.shape}")
    return _simplex_rows(arr, "simplex vector")


def as_kernel(g) -> np.ndarray:
    arr = np.asarray(g, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"kernel must have shape (N, L), got {arr.shape}")
    return _simplex_rows(arr, "kernel")


def as_distribution(mu) -> np.ndarray:
    arr = np.asarray(mu, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ShapeError(f"distribution must be 1-d, got shape {arr.shape}")
    return _simplex_rows(arr, "distribution")


def as_field(f, clamp: bool = True) -> np.ndarray:
    arr = np.asarray(f, dtype=float)
    if arr.ndim != 2:
        raise ShapeError(f"vector field must have shape (N, L), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("vector field has non-finite entries")
    if clamp and np.any(np.abs(arr) > 1.0 + SIMPLEX_TOL):
        raise DomainError("clamped vector field leaves [-1, 1]")
    return arr


def uniform_distribution(N: int) -> np.ndarray:
    return np.full(N, 1.0 / N)


def uniform_kernel(N: int, L: int) -> np.ndarray:
    return np.full((N, L), 1.0 / L)


def inner_product(a, b, mu) -> float:
    """mu-weighted pairing ``sum_x mu(x) <a(x), b(x)>``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or mu.shape != (a.shape[0],):
        raise ShapeError(f"incompatible shapes {a.shape}, {b.shape}, {mu.shape}")
    return float(mu @ np.einsum("ij,ij->i", a, b))


def pointwise_inner(a, b) -> np.ndarray:
    return np.einsum("...j,...j->...", a, b)


def logsumexp(h) -> np.ndarray | float:
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)):
        raise NumericError("log-sum-exp of non-finite input")
    m = h.max(axis=-1, keepdims=True)
    out = np.log(np.exp(h - m).sum(axis=-1)) + m[..., 0]
    return float(out) if out.ndim == 0 else out


def softmax(h) -> np.ndarray:
    """Max-shifted softmax along the last axis."""
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)):
        raise NumericError("softmax of non-finite input")
    z = np.exp(h - h.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def output_bits(L: int, eps: float) -> int:
    """Fractional bits kept per coordinate of a rounded simplex point."""
    return math.ceil(math.log2(8 * L / eps))


def input_bits(eps: float) -> int:
    """Fractional bits kept from each logit before exponentiation."""
    return math.ceil(math.log2(12 / eps))


def round_to_simplex(p: np.ndarray, bits: int) -> np.ndarray:
    """Floor each coordinate to ``bits`` fractional bits; the largest coordinate
    (smallest index on ties) absorbs the residual so rows sum to exactly 1."""
    scale = 2 ** bits
    counts = np.floor(p * scale).astype(np.int64)
    residual = scale - counts.sum(axis=-1)
    top = np.argmax(p, axis=-1)
    if counts.ndim == 1:
        counts[top] += residual
    else:
        counts[np.arange(counts.shape[0]), top] += residual
    return counts / scale


def approx_softmax(q_hat, eps: float, B: float, exact: bool = False) -> np.ndarray:
    """Fixed-point softmax with l1 error at most ``eps``.

    Works row-wise on ``(..., L)`` input. For any true logits ``q`` with
    ``|q_hat - q|_inf <= eps/3`` the output is within ``eps`` of
    ``softmax(q)`` in l1: truncating logits to ``input_bits(eps)`` bits costs
    ``eps/12``, and rounding the output to ``output_bits(L, eps)`` bits costs at
    most ``2 L 2^-bits <= eps/4``.
    """
    q_hat = np.asarray(q_hat, dtype=float)
    if not (0 < eps < 0.5):
        raise DomainError(f"eps must lie in (0, 1/2), got {eps}")
    if B < 2:
        raise DomainError(f"B must be at least 2, got {B}")
    if not np.all(np.isfinite(q_hat)):
        raise NumericError("approx_softmax of non-finite input")
    if np.any(np.abs(q_hat) > B):
        raise DomainError(f"logits outside [-{B}, {B}]")
    if exact:
        return softmax(q_hat)
    scale_in = 2.0 ** input_bits(eps)
    q_trunc = np.trunc(q_hat * scale_in) / scale_in
    L = q_hat.shape[-1]
    return round_to_simplex(softmax(q_trunc), output_bits(L, eps))


def l1_distance(u, v) -> float | np.ndarray:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ShapeError(f"shape mismatch {u.shape} vs {v.shape}")
    out = np.abs(u - v).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def linf_norm(h) -> float | np.ndarray:
    out = np.abs(np.asarray(h, dtype=float)).max(axis=-1)
    return float(out) if out.ndim == 0 else out


def round_fixed(x, bits: int) -> np.ndarray:
    """Round to nearest multiple of ``2^-bits``."""
    scale = 2.0 ** bits
    return np.round(np.asarray(x, dtype=float) * scale) / scale


def basis(L: int, y) -> np.ndarray:
    """Rows of the identity: ``basis(L, ys)[i] = e_{ys[i]}``."""
    return np.eye(L)[np.asarray(y)]


def check_same_shape(*arrays: Sequence) -> None:
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"shape mismatch: {sorted(shapes)}")
