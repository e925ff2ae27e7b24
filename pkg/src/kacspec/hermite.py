"""Scaled Hermite functions and the harmonic-oscillator calculus in velocity.

The basis is ``e_n(v) = 2**-0.25 * phi_n(v / sqrt(2))`` where ``phi_n`` are the
standard Hermite functions, so that ``e_0 = (2 pi)**-0.25 exp(-v**2 / 4)`` is the
square root of the normalized Maxwellian and ``H = -d^2/dv^2 + v^2/4`` acts as
``n + 1/2`` on ``e_n``.  Ladder operators ``A_(+/-) = v/2 -/+ d/dv`` satisfy

    A_+ e_n = sqrt(n + 1) e_(n+1),     A_- e_n = sqrt(n) e_(n-1),

hence ``v = A_+ + A_-`` and ``d/dv = (A_- - A_+) / 2`` are tridiagonal in the
coefficient representation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_hermite

__all__ = [
    "HermiteGrid",
    "VelocityOperator",
    "build_grid",
    "evaluate_basis",
    "apply_ladder",
    "apply_v_multiplication",
    "apply_ddv",
    "apply_H_power",
    "velocity_operator",
    "hermite_forward",
    "hermite_inverse",
    "moment_norm_e_n",
    "QuadratureError",
]

ORTHONORMALITY_TOL = 1e-8


class QuadratureError(RuntimeError):
    """Raised when a quadrature rule fails its own accuracy check."""


@dataclass(frozen=True)
class HermiteGrid:
    """Velocity quadrature adapted to the scaled Hermite basis.

    ``weights`` integrate functions that already carry their Gaussian factor,
    i.e. ``sum(weights * f(nodes)) ~ int f(v) dv``.  ``basis[n, m] = e_n(nodes[m])``.
    """

    n_modes: int
    nodes: np.ndarray
    weights: np.ndarray
    basis: np.ndarray
    orthonormality_residual: float = field(default=0.0)

    @property
    def n_quad(self) -> int:
        return self.nodes.size

    def orthogonal_matrix(self) -> np.ndarray:
        """``Q[n, m] = e_n(v_m) sqrt(w_m)``; orthogonal when ``n_quad == n_modes``."""
        return self.basis * np.sqrt(self.weights)[None, :]


def evaluate_basis(n_modes: int, v) -> np.ndarray:
    """Return ``E[n, ...] = e_n(v)`` for ``n < n_modes`` by upward recurrence.

    Uses ``e_(n+1) = (v e_n - sqrt(n) e_(n-1)) / sqrt(n + 1)``, which stays
    bounded because the ``e_n`` carry their Gaussian.
    """
    v = np.asarray(v, dtype=float)
    out = np.empty((n_modes,) + v.shape)
    out[0] = (2.0 * np.pi) ** -0.25 * np.exp(-0.25 * v * v)
    if n_modes > 1:
        out[1] = v * out[0]
    for n in range(1, n_modes - 1):
        out[n + 1] = (v * out[n] - np.sqrt(n) * out[n - 1]) / np.sqrt(n + 1.0)
    return out


def build_grid(n_modes: int, n_quad: int | None = None) -> HermiteGrid:
    """Gauss quadrature on which ``e_0 .. e_(n_modes-1)`` are discretely orthonormal.

    Nodes are the Gauss-Hermite nodes for ``exp(-x**2)`` rescaled by ``sqrt(2)``.
    Weights are the Christoffel numbers of the scaled basis,
    ``w_m = 1 / sum_(n < n_quad) e_n(v_m)**2``, which equal the rescaled
    Gauss weights times ``sqrt(2) exp(x_m**2)`` without forming that product.

    Parameters
    ----------
    n_modes : int
        Number of Hermite modes, at least 2.
    n_quad : int, optional
        Number of nodes; defaults to ``n_modes + 8``.
    """
    if n_modes < 2:
        raise ValueError(f"n_modes must be >= 2, got {n_modes}")
    if n_quad is None:
        n_quad = n_modes + 8
    if n_quad < n_modes:
        raise ValueError("n_quad must be >= n_modes")
    x, _ = roots_hermite(n_quad)
    nodes = np.sqrt(2.0) * x
    full = evaluate_basis(n_quad, nodes)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        weights = 1.0 / np.sum(full * full, axis=0)
        basis = full[:n_modes]
        gram = (basis * weights) @ basis.T
        residual = float(np.max(np.abs(gram - np.eye(n_modes))))
    if not residual <= ORTHONORMALITY_TOL:
        raise QuadratureError(
            f"discrete orthonormality residual {residual:.2e} exceeds {ORTHONORMALITY_TOL:.0e}"
        )
    return HermiteGrid(n_modes, nodes, weights, basis, residual)


def apply_ladder(coeffs, which: str, return_outflow: bool = False):
    """Apply ``A_+`` (``which="plus"``) or ``A_-`` (``which="minus"``) along axis 0.

    The raising operator pushes the top mode out of the truncation; with
    ``return_outflow=True`` the discarded squared norm is returned as well.
    """
    c = np.asarray(coeffs)
    n = c.shape[0]
    scale = np.sqrt(np.arange(n, dtype=float)).reshape((n,) + (1,) * (c.ndim - 1))
    out = np.zeros_like(c, dtype=np.result_type(c, float))
    if which == "plus":
        # (A_+ c)[n] = sqrt(n) c[n-1]
        out[1:] = scale[1:] * c[:-1]
        outflow = float(n * np.sum(np.abs(c[-1]) ** 2))
    elif which == "minus":
        # (A_- c)[n] = sqrt(n+1) c[n+1]
        out[:-1] = scale[1:] * c[1:]
        outflow = 0.0
    else:
        raise ValueError(f"which must be 'plus' or 'minus', got {which!r}")
    if return_outflow:
        return out, outflow
    return out


def apply_v_multiplication(coeffs):
    """Multiplication by ``v``: ``v e_n = sqrt(n+1) e_(n+1) + sqrt(n) e_(n-1)``."""
    return apply_ladder(coeffs, "plus") + apply_ladder(coeffs, "minus")


def apply_ddv(coeffs):
    """Velocity derivative ``(A_- - A_+) / 2``."""
    return 0.5 * (apply_ladder(coeffs, "minus") - apply_ladder(coeffs, "plus"))


def apply_H_power(coeffs, r: float):
    """Fractional harmonic oscillator: coefficient ``n`` scaled by ``(n + 1/2)**r``."""
    c = np.asarray(coeffs)
    n = c.shape[0]
    w = (np.arange(n) + 0.5) ** r
    return c * w.reshape((n,) + (1,) * (c.ndim - 1))


@dataclass(frozen=True)
class VelocityOperator:
    kind: str
    matrix: np.ndarray

    def __matmul__(self, other):
        return self.matrix @ other


def velocity_operator(kind: str, n_modes: int, r: float = 1.0, lambdas=None) -> VelocityOperator:
    """Dense matrix of a velocity operator on the first ``n_modes`` coefficients.

    ``kind`` is one of ``"v"``, ``"ddv"``, ``"plus"``, ``"minus"``, ``"H"``
    (uses ``r``) or ``"K"`` (uses ``lambdas``).
    """
    off = np.sqrt(np.arange(1, n_modes, dtype=float))
    plus = np.diag(off, -1)
    minus = np.diag(off, 1)
    if kind == "v":
        m = plus + minus
    elif kind == "ddv":
        m = 0.5 * (minus - plus)
    elif kind == "plus":
        m = plus
    elif kind == "minus":
        m = minus
    elif kind == "H":
        m = np.diag((np.arange(n_modes) + 0.5) ** r)
    elif kind == "K":
        if lambdas is None:
            raise ValueError("kind='K' needs eigenvalues")
        m = np.diag(np.asarray(lambdas, dtype=float)[:n_modes])
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    return VelocityOperator(kind, m)


def hermite_forward(grid: HermiteGrid, values):
    """Project values at ``grid.nodes`` (axis 0) onto ``e_0 .. e_(N-1)``."""
    values = np.asarray(values)
    if values.shape[0] != grid.n_quad:
        raise ValueError(f"expected {grid.n_quad} nodal values, got {values.shape[0]}")
    return np.tensordot(grid.basis * grid.weights, values, axes=(1, 0))


def hermite_inverse(grid: HermiteGrid, coeffs):
    """Evaluate a Hermite expansion (axis 0) at ``grid.nodes``."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != grid.n_modes:
        raise ValueError(f"expected {grid.n_modes} coefficients, got {coeffs.shape[0]}")
    return np.tensordot(grid.basis.T, coeffs, axes=(1, 0))


def moment_norm_e_n(n: int, k: int, l: int) -> float:
    """``|| v**k d^l/dv^l e_n ||_L2`` computed exactly with ladder operators.

    The working vector has ``n + k + l + 2`` modes; each operator raises the
    top occupied index by at most one, so the outflow check never fires for
    valid input and guards against misuse.
    """
    if min(n, k, l) < 0:
        raise ValueError("n, k, l must be non-negative")
    c = np.zeros(n + k + l + 2)
    c[n] = 1.0
    for _ in range(l):
        c = apply_ddv(c)
    for _ in range(k):
        c = apply_v_multiplication(c)
    if c[-1] != 0.0:
        raise OverflowError("moment padding exhausted")
    return float(np.linalg.norm(c))
