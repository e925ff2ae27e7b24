"""Double-exponential quadrature on a finite interval, vectorized over integrands."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

__all__ = ["QuadResult", "tanh_sinh", "tanh_sinh_nodes", "gauss_jacobi_origin"]


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    levels: int

    @property
    def rel_error(self) -> np.ndarray:
        scale = np.maximum(np.abs(self.value), np.finfo(float).tiny)
        return self.error / scale


def tanh_sinh_nodes(b: float, h: float, t_max: float = 4.5):
    """Nodes and weights of the tanh-sinh rule on ``[0, b]`` with step ``h``.

    The node is written as ``b / (1 + exp(-pi sinh t))`` so that points
    crowding the origin keep full relative precision.
    """
    t = np.arange(-t_max, t_max + 0.5 * h, h)
    y = 0.5 * np.pi * np.sinh(t)
    x = b / (1.0 + np.exp(-2.0 * y))
    w = h * b * 0.25 * np.pi * np.cosh(t) / np.cosh(y) ** 2
    keep = (x > 0.0) & (w > 0.0)
    return x[keep], w[keep]


def tanh_sinh(func, b: float, rtol: float = 1e-12, atol: float = 0.0,
              h0: float = 0.25, max_levels: int = 10) -> QuadResult:
    """Integrate ``func`` over ``(0, b]`` by step halving until two levels agree.

    ``func(x)`` receives the 1-D node array and may return an array of shape
    ``(..., x.size)``; every leading entry is integrated independently and the
    refinement stops when all of them have converged.
    """
    h = h0
    x, w = tanh_sinh_nodes(b, h)
    prev = np.asarray(func(x)) @ w
    for level in range(1, max_levels + 1):
        h *= 0.5
        x, w = tanh_sinh_nodes(b, h)
        cur = np.asarray(func(x)) @ w
        err = np.abs(cur - prev)
        if np.all(err <= np.maximum(atol, rtol * np.abs(cur))):
            return QuadResult(cur, err, level)
        prev = cur
    return QuadResult(cur, err, max_levels)


def gauss_jacobi_origin(n: int, b: float, power: float):
    """Gauss rule for ``int_0^b x**power f(x) dx`` with smooth ``f``.

    Returns nodes and weights such that ``sum(w * f(x))`` approximates the
    weighted integral; used where ``f`` is known only through a difference that
    cancels at the origin, so nodes must stay away from it.
    """
    z, wz = roots_jacobi(n, 0.0, power)
    x = 0.5 * b * (z + 1.0)
    w = wz * (0.5 * b) ** (power + 1.0)
    return x, w
