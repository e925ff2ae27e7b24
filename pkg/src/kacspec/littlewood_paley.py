"""Dyadic Littlewood-Paley blocks and Besov / Chemin-Lerner norms on a torus.

The spatial domain is the torus of circumference ``2 pi L``; Fourier modes are
``xi_j = j / L`` with ``j`` in numpy FFT order.  Functions are represented
either by samples on the uniform grid or by coefficients
``u_hat = fft(u) / N`` so that ``u(x) = sum_j u_hat[j] exp(i xi_j x)`` and
``||u||_L2 = sqrt(2 pi L) ||u_hat||_l2``.  A leading Hermite axis, when
present, is measured in ``l2`` which is ``L2_v`` by Parseval.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DyadicFilterBank",
    "BesovProfile",
    "smooth_step",
    "chi",
    "phi",
    "build_filter_bank",
    "frequencies",
    "besov_norm",
    "besov_norm_hat",
    "chemin_lerner_norm",
    "lebesgue_besov_norm",
    "embedding_constant",
]

LOW_EDGE = 3.0 / 4.0
HIGH_EDGE = 4.0 / 3.0


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``, monotone between."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        b = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def chi(xi, edges=(LOW_EDGE, HIGH_EDGE)):
    """Low-pass profile: 1 on ``|xi| <= a``, 0 on ``|xi| >= b`` for ``edges = (a, b)``.

    The default edges are the widest admissible ones, ``3/4`` and ``4/3``.
    """
    a, b = edges
    r = np.abs(np.asarray(xi, dtype=float))
    return 1.0 - smooth_step((r - a) / (b - a))


def phi(xi, edges=(LOW_EDGE, HIGH_EDGE)):
    """Shell profile ``chi(xi/2) - chi(xi)``, supported in ``3/4 <= |xi| <= 8/3``."""
    xi = np.asarray(xi, dtype=float)
    return chi(0.5 * xi, edges) - chi(xi, edges)


def frequencies(n_x: int, L: float = 1.0) -> np.ndarray:
    return np.fft.fftfreq(n_x, d=1.0 / n_x) / L


@dataclass(frozen=True)
class DyadicFilterBank:
    """Multipliers of ``Delta_q`` for ``q = -1 .. q_max`` on a fixed grid.

    ``filters[q + 1]`` is the multiplier of block ``q``.  The top block is
    closed by telescoping, so the rows sum to one at every grid frequency up
    to floating-point rounding.
    """

    xi: np.ndarray
    L: float
    filters: np.ndarray
    edges: tuple = (LOW_EDGE, HIGH_EDGE)

    @property
    def q_max(self) -> int:
        return self.filters.shape[0] - 2

    @property
    def blocks(self) -> range:
        return range(-1, self.q_max + 1)

    @property
    def n_x(self) -> int:
        return self.xi.size

    @property
    def length(self) -> float:
        return 2.0 * math.pi * self.L

    def multiplier(self, q: int) -> np.ndarray:
        if not -1 <= q <= self.q_max:
            raise ValueError(f"block {q} outside -1..{self.q_max}")
        return self.filters[q + 1]

    def partition_residual(self) -> float:
        return float(np.max(np.abs(1.0 - self.filters.sum(axis=0))))

    def block_hat(self, u_hat, q: int):
        return np.asarray(u_hat) * self.multiplier(q)

    def block(self, u, q: int):
        """``Delta_q u`` for samples ``u`` on the grid (last axis)."""
        u = np.asarray(u)
        out = np.fft.ifft(np.fft.fft(u, axis=-1) * self.multiplier(q), axis=-1)
        return out.real if np.isrealobj(u) else out

    def low_pass(self, u, q: int):
        """``S_q u = sum_(p <= q-1) Delta_p u``."""
        u = np.asarray(u)
        mult = self.filters[: max(q + 1, 0)].sum(axis=0)
        out = np.fft.ifft(np.fft.fft(u, axis=-1) * mult, axis=-1)
        return out.real if np.isrealobj(u) else out

    def block_norms_hat(self, u_hat) -> np.ndarray:
        """``||Delta_q u||_(L2_v L2_x)`` for every block, from coefficients."""
        u_hat = np.asarray(u_hat)
        power = np.abs(u_hat.reshape(-1, self.n_x)) ** 2
        per_mode = power.sum(axis=0)
        return np.sqrt(self.length * (self.filters ** 2) @ per_mode)


def _grid_adapted_edges(xi, q_top: int):
    """Transition band of ``chi`` avoiding every rescaled grid frequency.

    Collects ``|xi_j| / 2**q`` for all scales in use that fall inside
    ``[3/4, 4/3]`` and returns the widest gap between them, so each grid mode
    lies where every multiplier is exactly 0 or 1.
    """
    r = np.unique(np.abs(xi))
    pts = [LOW_EDGE, HIGH_EDGE]
    for q in range(q_top + 1):
        scaled = r / 2.0 ** q
        pts.extend(scaled[(scaled > LOW_EDGE) & (scaled < HIGH_EDGE)])
    pts = np.unique(pts)
    gaps = np.diff(pts)
    i = int(np.argmax(gaps))
    return float(pts[i]), float(pts[i + 1])


def build_filter_bank(n_x: int, L: float = 1.0, adapted: bool = True) -> DyadicFilterBank:
    """Filter bank on the ``n_x``-point grid of the torus of circumference ``2 pi L``.

    With ``adapted=True`` the smooth cut-off keeps the required supports but
    places its transition between grid frequencies at every dyadic scale;
    the blocks then act as orthogonal projections on the grid and
    ``||u||_(B^0_(2,2)) = ||u||_L2`` holds exactly.  ``adapted=False`` uses the
    widest transition ``[3/4, 4/3]``, whose blocks overlap.
    """
    xi = frequencies(n_x, L)
    xi_max = float(np.max(np.abs(xi)))
    if xi_max < 2.0 * LOW_EDGE:
        raise ValueError("grid too coarse: need |xi| reaching beyond 3/2 to host block 1")
    # smallest top block Q whose closing low-pass chi(2**-(Q+1) xi) equals one on the grid
    q_top = max(0, math.ceil(math.log2(xi_max / LOW_EDGE)) - 1)
    edges = _grid_adapted_edges(xi, q_top) if adapted else (LOW_EDGE, HIGH_EDGE)
    rows = [chi(xi, edges)]
    for q in range(q_top):
        rows.append(phi(xi / 2.0 ** q, edges))
    rows.append(1.0 - chi(xi / 2.0 ** q_top, edges))
    return DyadicFilterBank(xi, float(L), np.array(rows), edges)


@dataclass
class BesovProfile:
    sigma: float
    p: float
    r: float
    block_norms: np.ndarray
    value: float

    @property
    def weighted(self) -> np.ndarray:
        q = np.arange(-1, self.block_norms.size - 1)
        return 2.0 ** (q * self.sigma) * self.block_norms

    def to_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q", "block_norm", "weighted"])
            for q, (b, bw) in enumerate(zip(self.block_norms, self.weighted), start=-1):
                w.writerow([q, repr(float(b)), repr(float(bw))])


def _lr(values, r) -> float:
    values = np.asarray(values)
    if r == math.inf:
        return float(np.max(values, initial=0.0))
    if r not in (1, 2):
        raise ValueError(f"r must be 1, 2 or inf, got {r}")
    return float(np.sum(values ** r) ** (1.0 / r))


def _weights(n_blocks: int, sigma: float) -> np.ndarray:
    return 2.0 ** (np.arange(-1, n_blocks - 1) * sigma)


def besov_norm_hat(bank: DyadicFilterBank, u_hat, sigma: float = 0.5, p: float = 2,
                   r: float = 1) -> BesovProfile:
    """``B^sigma_(p,r)`` norm from Fourier coefficients (``p = 2`` only)."""
    if p != 2:
        raise ValueError("only p = 2 is realized on the grid")
    blocks = bank.block_norms_hat(u_hat)
    return BesovProfile(sigma, p, r, blocks, _lr(_weights(blocks.size, sigma) * blocks, r))


def besov_norm(bank: DyadicFilterBank, u, sigma: float = 0.5, p: float = 2,
               r: float = 1) -> BesovProfile:
    """``B^sigma_(p,r)`` norm of samples ``u`` (last axis ``x``, optional Hermite axis first)."""
    u_hat = np.fft.fft(np.asarray(u), axis=-1) / bank.n_x
    return besov_norm_hat(bank, u_hat, sigma, p, r)


def _time_norm(values, dt: float, rho1) -> np.ndarray:
    """``L^rho1`` in time along axis 0 of samples at uniform spacing ``dt``."""
    if rho1 == math.inf:
        return np.max(values, axis=0)
    if rho1 != 2:
        raise ValueError("rho1 must be 2 or inf")
    if values.shape[0] == 1:
        return np.zeros(values.shape[1:])
    return np.sqrt(np.trapezoid(values ** 2, dx=dt, axis=0))


def _velocity_block_norms(bank, series, rho2, grid):
    """Per-snapshot, per-block ``L^rho2_v L2_x`` norms, shape ``(n_t, n_blocks)``."""
    series = np.asarray(series)
    if rho2 == 2:
        power = np.abs(series) ** 2  # (t, n, j)
        per_mode = power.sum(axis=1)
        return np.sqrt(bank.length * per_mode @ (bank.filters ** 2).T)
    if rho2 != math.inf:
        raise ValueError("rho2 must be 2 or inf")
    if grid is None:
        raise ValueError("rho2 = inf needs a HermiteGrid to sample velocities")
    nodal = np.tensordot(grid.basis.T, series, axes=(1, 1))  # (m, t, j)
    per_node = np.abs(nodal) ** 2
    blocks = np.sqrt(bank.length * per_node @ (bank.filters ** 2).T)  # (m, t, q)
    return blocks.max(axis=0)


def chemin_lerner_norm(bank: DyadicFilterBank, series, dt: float, rho1=math.inf, rho2=2,
                       sigma: float = 0.5, r: float = 1, grid=None) -> float:
    """``L~^rho1_T L~^rho2_v (B^sigma_(2,r))``: block norms taken first.

    ``series`` has shape ``(n_t, n_modes, n_x)`` of coefficients at uniform
    time spacing ``dt``; time norms use the trapezoid rule (``rho1 = 2``) or
    the maximum over snapshots (``rho1 = inf``).
    """
    series = np.asarray(series)
    if series.shape[0] == 0:
        raise ValueError("empty time series")
    vb = _velocity_block_norms(bank, series, rho2, grid)
    tb = _time_norm(vb, dt, rho1)
    return _lr(_weights(tb.size, sigma) * tb, r)


def lebesgue_besov_norm(bank: DyadicFilterBank, series, dt: float, rho1=math.inf, rho2=2,
                        sigma: float = 0.5, r: float = 1, grid=None) -> float:
    """``L^rho1_T L^rho2_v (B^sigma_(2,r))``: Besov norm innermost, per velocity.

    The velocity norm is taken pointwise on the quadrature nodes of ``grid``.
    """
    series = np.asarray(series)
    if grid is None:
        raise ValueError("a HermiteGrid is needed to evaluate velocities")
    nodal = np.tensordot(grid.basis.T, series, axes=(1, 1))  # (m, t, j)
    blocks = np.sqrt(bank.length * (np.abs(nodal) ** 2) @ (bank.filters ** 2).T)  # (m, t, q)
    weights = _weights(blocks.shape[-1], sigma)
    if r == 1:
        besov = (blocks * weights).sum(axis=-1)
    elif r == 2:
        besov = np.sqrt(((blocks * weights) ** 2).sum(axis=-1))
    else:
        besov = (blocks * weights).max(axis=-1)
    if rho2 == 2:
        vel = np.sqrt(np.tensordot(grid.weights, besov ** 2, axes=(0, 0)))
    elif rho2 == math.inf:
        vel = besov.max(axis=0)
    else:
        raise ValueError("rho2 must be 2 or inf")
    return float(_time_norm(vel, dt, rho1))


def embedding_constant(bank: DyadicFilterBank) -> float:
    """A constant ``C`` with ``sup|u| <= C ||u||_(B^(1/2)_(2,1))`` on this grid.

    Each block is bounded by Cauchy-Schwarz over the modes it touches:
    ``sup|Delta_q u| <= sqrt(#modes_q / (2 pi L)) ||Delta_q u||_L2``.
    """
    counts = (bank.filters > 0).sum(axis=1)
    q = np.arange(-1, bank.q_max + 1)
    return float(np.max(np.sqrt(counts / bank.length) / 2.0 ** (0.5 * q)))
