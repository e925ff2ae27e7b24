"""Exponential weights, decay-index fits, moments and constant monitors.

Everything here is post-processing of coefficient arrays ``(N_v, N_x)`` in
the layout of :mod:`kacspec.solver`.  Norms called *critical* are
``L~^2_v (B^(1/2)_(2,1))``, with block norms taken in ``L^2_v L^2_x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .hermite import apply_ddv, apply_v_multiplication
from .kernel import KernelTables
from .littlewood_paley import DyadicFilterBank, besov_norm_hat, chemin_lerner_norm
from .solver import gamma, kolmogorov_damping

__all__ = [
    "WeightSpec",
    "WeightedState",
    "FitReport",
    "DegenerateFit",
    "saturation",
    "weight_exponent",
    "apply_weight",
    "critical_norm",
    "weighted_norm_monitor",
    "bisect_weight_rate",
    "fit_decay",
    "spectrum_profile",
    "moment_estimate",
    "fit_factorial_power",
    "coercivity_check",
    "trilinear_ratio",
    "trilinear_single_mode",
    "kolmogorov_min_ratio",
    "kolmogorov_ratio_oracle",
    "energy_functional",
    "velocity_index",
    "gevrey_x_index",
    "predicted_x_exponent",
    "predicted_v_exponent",
]

EXPONENT_CAP = 700.0
NOISE_FLOOR = 1e-13
NU_GRID = np.round(np.arange(0.05, 1.5 + 1e-9, 0.01), 10)


# -- predicted indices ------------------------------------------------------------


def velocity_index(s: float) -> float:
    """Gelfand-Shilov index ``(3s+1) / (2s(s+1))`` of the velocity smoothing."""
    return (3 * s + 1) / (2 * s * (s + 1))


def gevrey_x_index(s: float) -> float:
    """Gevrey index ``1 + 1/(2s)`` in the position variable."""
    return 1.0 + 1.0 / (2 * s)


def predicted_x_exponent(s: float) -> float:
    """Fourier decay exponent ``nu`` in ``exp(-a |xi|**nu)``: ``2s / (2s+1)``."""
    return 1.0 / gevrey_x_index(s)


def predicted_v_exponent(s: float) -> float:
    """Hermite decay exponent ``nu`` in ``exp(-a n**nu)``: ``s(s+1) / (3s+1)``."""
    return 1.0 / (2.0 * velocity_index(s))


# -- exponential weights ------------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    """Weight ``Z(c t E(n, xi))`` with saturation ``kappa`` (``kappa = 0``: pure exponential)."""

    t: float
    c: float
    kappa: float = 0.0
    s: float = 0.5

    def __post_init__(self):
        if self.t < 0 or self.c < 0:
            raise ValueError("t and c must be non-negative")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        if not 0.0 < self.s < 1.0:
            raise ValueError("s must lie in (0, 1)")


def saturation(x, kappa: float):
    """``Z(x) = e**x / (1 + kappa e**x)``, evaluated as ``1 / (e**-x + kappa)``."""
    x = np.asarray(x, dtype=float)
    if kappa == 0.0:
        return np.exp(x)
    return 1.0 / (np.exp(-x) + kappa)


def weight_exponent(n_v: int, xi, s: float) -> np.ndarray:
    """``((n+1/2)**((s+1)/2) + <xi>**((3s+1)/(2s+1)))**(2s/(3s+1))`` on the ``(n, xi)`` grid."""
    n = np.arange(n_v) + 0.5
    jx = np.sqrt(1.0 + np.asarray(xi, dtype=float) ** 2)
    inner = n[:, None] ** ((s + 1) / 2) + jx[None, :] ** ((3 * s + 1) / (2 * s + 1))
    return inner ** (2 * s / (3 * s + 1))


@dataclass
class WeightedState:
    coeffs: np.ndarray
    overflow: np.ndarray  # boolean mask of capped slots

    @property
    def overflowed(self) -> bool:
        return bool(self.overflow.any())


def apply_weight(coeffs, xi, spec: WeightSpec) -> WeightedState:
    """Multiply each ``(n, j)`` slot by ``Z(c t E(n, xi_j))``.

    Exponents above 700 are capped at 700 and reported in ``overflow``; a
    weighted norm that touched a capped slot is not meaningful.
    """
    c = np.asarray(coeffs)
    x = spec.c * spec.t * weight_exponent(c.shape[0], xi, spec.s)
    over = x > EXPONENT_CAP
    mult = saturation(np.minimum(x, EXPONENT_CAP), spec.kappa)
    return WeightedState(c * mult, over)


def critical_norm(bank: DyadicFilterBank, coeffs) -> float:
    """``||g||_(L~^2_v (B^(1/2)_(2,1)))``."""
    return besov_norm_hat(bank, coeffs, sigma=0.5, p=2, r=1).value


@dataclass
class MonitorSeries:
    times: np.ndarray
    values: np.ndarray
    overflow: bool
    c: float


def weighted_norm_monitor(bank: DyadicFilterBank, snapshots, times, s: float, c: float,
                          kappa: float = 0.0) -> MonitorSeries:
    """Critical norm of ``Z(c t E) g(t)`` along a run."""
    xi = bank.xi
    vals, over = [], False
    for t, snap in zip(times, snapshots):
        w = apply_weight(snap, xi, WeightSpec(float(t), c, kappa, s))
        over |= w.overflowed
        vals.append(critical_norm(bank, w.coeffs))
    return MonitorSeries(np.asarray(times, float), np.array(vals), over, c)


@dataclass
class BisectionResult:
    c: float
    series: MonitorSeries
    bracketed: bool
    iterations: int


def bisect_weight_rate(bank: DyadicFilterBank, snapshots, times, s: float, factor: float = 2.0,
                       rate: float = 0.0, c_max: float = 64.0, tol: float = 1e-6,
                       kappa: float = 0.0) -> BisectionResult:
    """Largest ``c`` keeping the weighted norm ``<= factor e**(rate t) ||g(0)||``.

    The weighted norm is non-decreasing in ``c``, so the admissible set is an
    interval ``[0, c*]``.  ``bracketed`` is False when even ``c_max`` passes.
    """
    base = critical_norm(bank, snapshots[0])
    times = np.asarray(times, float)
    bound = factor * np.exp(rate * times) * base

    def ok(c):
        mon = weighted_norm_monitor(bank, snapshots, times, s, c, kappa)
        return (not mon.overflow) and bool(np.all(mon.values <= bound)), mon

    hi = 1.0
    good, _ = ok(hi)
    while good and hi < c_max:
        hi = min(2 * hi, c_max)
        good, _ = ok(hi)
    if good:
        return BisectionResult(hi, ok(hi)[1], False, 0)
    lo, it = 0.0, 0
    while hi - lo > tol * max(hi, 1e-12) and it < 200:
        mid = 0.5 * (lo + hi)
        if ok(mid)[0]:
            lo = mid
        else:
            hi = mid
        it += 1
    return BisectionResult(lo, ok(lo)[1], True, it)


# -- decay fits -------------------------------------------------------------------


class DegenerateFit(ValueError):
    """Too few coefficients above the noise floor to fit a decay law."""


@dataclass
class FitReport:
    axis: str
    exponent: float
    amplitude: float
    residual: float
    range: tuple
    above_range: bool = False
    meta: dict = field(default_factory=dict)


def spectrum_profile(coeffs, axis: str, L: float = 1.0):
    """``(index, magnitude)`` pairs along one axis of a coefficient array.

    ``axis="hermite"`` gives ``(n, ||c[n, :]||)``; ``axis="fourier"`` gives
    ``(|xi|, ||c[:, xi]|| + ||c[:, -xi]||`` in ``l2``), dropping the Nyquist
    column.  One-dimensional input is used as is with index ``0, 1, ...``.
    """
    c = np.asarray(coeffs)
    if c.ndim == 1:
        return np.arange(c.size, dtype=float), np.abs(c)
    if axis == "hermite":
        return np.arange(c.shape[0], dtype=float), np.linalg.norm(c, axis=1)
    if axis != "fourier":
        raise ValueError("axis must be 'hermite' or 'fourier'")
    n_x = c.shape[1]
    power = np.sum(np.abs(c) ** 2, axis=0)
    k_max = (n_x - 1) // 2
    mag = np.empty(k_max + 1)
    mag[0] = power[0]
    for k in range(1, k_max + 1):
        mag[k] = power[k] + power[n_x - k]
    return np.arange(k_max + 1) / L, np.sqrt(mag)


def _fit_at(nu, idx, logy):
    A = np.column_stack([np.ones_like(idx), -idx ** nu])
    sol, *_ = np.linalg.lstsq(A, logy, rcond=None)
    res = float(np.sum((A @ sol - logy) ** 2))
    return res, sol


def fit_decay(coeffs, axis: str = "hermite", L: float = 1.0, window=None,
              noise_floor: float = NOISE_FLOOR, refine: bool = True) -> FitReport:
    """Fit ``log|c_i| ~ b - a * i**nu`` over the grid ``nu = 0.05 .. 1.50``.

    Entries below ``noise_floor`` times the largest magnitude are discarded.
    The best grid value is polished by a bounded scalar search within one grid
    step.  A minimizer on the upper edge marks the decay as faster than the
    searched family (``above_range``), not as an index estimate.
    """
    idx, mag = spectrum_profile(coeffs, axis, L)
    if window is not None:
        lo, hi = window
        sel = (idx >= lo) & (idx <= hi)
        idx, mag = idx[sel], mag[sel]
    top = np.max(mag, initial=0.0)
    keep = mag > noise_floor * top if top > 0 else np.zeros(mag.shape, bool)
    if keep.sum() < 3:
        raise DegenerateFit(f"only {int(keep.sum())} {axis} coefficients above the noise floor")
    idx, logy = idx[keep], np.log(mag[keep])
    residuals = np.array([_fit_at(nu, idx, logy)[0] for nu in NU_GRID])
    i = int(np.argmin(residuals))
    nu = float(NU_GRID[i])
    if refine:
        lo = NU_GRID[max(i - 1, 0)]
        hi = NU_GRID[min(i + 1, NU_GRID.size - 1)]
        opt = minimize_scalar(lambda x: _fit_at(x, idx, logy)[0], bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-6})
        if opt.fun <= residuals[i]:
            nu = float(opt.x)
    res, (b, a) = _fit_at(nu, idx, logy)
    return FitReport(axis, nu, float(a), res, (float(idx[0]), float(idx[-1])),
                     above_range=bool(i == NU_GRID.size - 1), meta={"intercept": float(b)})


# -- moments ------------------------------------------------------------------------


def moment_estimate(bank: DyadicFilterBank, coeffs, k: int, l: int, q: int) -> float:
    """Critical norm of ``v**k d_v**l d_x**q g``.

    The Hermite axis is padded by ``k + l`` modes so the banded operators act
    exactly on the truncated state.
    """
    if min(k, l, q) < 0:
        raise ValueError("k, l, q must be non-negative")
    c = np.asarray(coeffs, dtype=complex)
    c = np.concatenate([c, np.zeros((k + l, c.shape[1]), complex)])
    for _ in range(l):
        c = apply_ddv(c)
    for _ in range(k):
        c = apply_v_multiplication(c)
    c = c * (1j * bank.xi[None, :]) ** q
    val = critical_norm(bank, c)
    if not math.isfinite(val):
        raise OverflowError(f"moment (k={k}, l={l}, q={q}) overflowed")
    return val


def fit_factorial_power(orders, values):
    """Fit ``log M_k = a + b k + p log(k!)``; returns ``(p, b, a)``."""
    k = np.asarray(orders, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    A = np.column_stack([np.ones_like(k), k, gammaln(k + 1)])
    (a, b, p), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(p), float(b), float(a)


# -- constants ----------------------------------------------------------------------


def coercivity_check(tables: KernelTables, N: int) -> float:
    """``C* = max_(n < N) max((lam_n + 1) / (n+1/2)**s, (n+1/2)**s / (lam_n + 1))``."""
    if N < 1 or N > tables.lambdas.size:
        raise ValueError(f"N must lie in 1..{tables.lambdas.size}")
    lam = tables.lambdas[:N]
    h = (np.arange(N) + 0.5) ** tables.s
    ratio = (lam + 1.0) / h
    C = float(np.max(np.maximum(ratio, 1.0 / ratio)))
    if not math.isfinite(C):
        raise FloatingPointError("coercivity constant is not finite")
    return C


def _sup_x(coeffs, oversample: int = 4):
    """``sup_x |f_k(x)|`` per Hermite mode, sampled on an oversampled grid."""
    c = np.asarray(coeffs)
    n_x = c.shape[1]
    m = oversample * n_x
    half = n_x // 2
    big = np.zeros((c.shape[0], m), complex)
    big[:, :half] = c[:, :half]
    big[:, m - (n_x - half):] = c[:, half:]
    return np.max(np.abs(np.fft.ifft(big, axis=1) * m), axis=1)


def _trilinear_one(f, g, h, tables, L):
    s = tables.s
    length = 2.0 * math.pi * L
    lhs = abs(length * np.vdot(h, gamma(f, g, tables)))
    hs = ((np.arange(f.shape[0]) + 0.5) ** (s / 2))[:, None]
    f_norm = float(np.linalg.norm(_sup_x(f)))
    g_norm = math.sqrt(length) * float(np.linalg.norm(hs * g))
    h_norm = math.sqrt(length) * float(np.linalg.norm(hs * h))
    rhs = f_norm * g_norm * h_norm
    return lhs / rhs if rhs > 0 else 0.0


def trilinear_single_mode(tables: KernelTables, k: int, l: int) -> float:
    """Closed form ``|alpha_(k,l)| / ((l+1/2)(k+l+1/2))**(s/2)`` for x-constant unit modes."""
    s = tables.s
    return abs(tables.alphas[k, l]) / ((l + 0.5) * (k + l + 0.5)) ** (s / 2)


def _random_field(rng, n_v, n_x, band):
    j = np.fft.fftfreq(n_x, d=1.0 / n_x)
    c = (rng.standard_normal((n_v, n_x)) + 1j * rng.standard_normal((n_v, n_x)))
    c *= (1.0 + np.arange(n_v))[:, None] ** -1.0
    c[:, np.abs(j) > band] = 0.0
    c[:, np.abs(j) >= n_x / 2] = 0.0
    mirrored = np.roll(c[:, ::-1], 1, axis=1).conj()
    return 0.5 * (c + mirrored)


def trilinear_ratio(tables: KernelTables, n_samples: int = 200, seed: int = 0, n_v: int = 16,
                    n_x: int = 16, band: int = 4, L: float = 1.0) -> float:
    """Largest observed ``|(Gamma(f,g),h)| / (||f||_(L2_v Linf_x) ||H^(s/2) g|| ||H^(s/2) h||)``.

    Each sample draws its own generator from ``SeedSequence(seed).spawn``, so
    a sample's fields do not depend on how many samples are requested.
    """
    children = np.random.SeedSequence(seed).spawn(n_samples)
    best = 0.0
    for child in children:
        rng = np.random.default_rng(child)
        f, g, h = (_random_field(rng, n_v, n_x, band) for _ in range(3))
        best = max(best, _trilinear_one(f, g, h, tables, L))
    return best


# -- Kolmogorov smoothing ----------------------------------------------------------


def kolmogorov_min_ratio(s: float, xi_max: float = 32.0, n_points: int = 129,
                         times=None) -> float:
    """Brute-force minimum over a grid of ``int_0^t |eta + sigma xi|**(2s) / (t**(2s+1)|xi|**(2s) + t|eta|**(2s))``."""
    if times is None:
        times = np.linspace(2.0 / 40, 2.0, 40)
    axis = np.linspace(-xi_max, xi_max, n_points)
    xi, eta = np.meshgrid(axis, axis, indexing="ij")
    live = (xi != 0) | (eta != 0)
    xi, eta = xi[live], eta[live]
    best = math.inf
    p = 2 * s
    for t in times:
        num = kolmogorov_damping(t, xi, eta, s)
        den = t ** (p + 1) * np.abs(xi) ** p + t * np.abs(eta) ** p
        best = min(best, float(np.min(num / den)))
    return best


def kolmogorov_ratio_oracle(s: float) -> float:
    """Infimum over all ``(xi, eta, t)`` of the same ratio, by a 1-D search.

    Writing ``eta = r t xi`` the ratio becomes
    ``int_0^1 |r + sigma|**(2s) d sigma / (1 + |r|**(2s))``, which tends to 1 as
    ``|r| -> inf``; its minimum lies in ``r in [-2, 1]``.  The integral is done by
    adaptive quadrature, independently of the closed form used elsewhere.
    """
    p = 2 * s

    def ratio(r):
        brk = [-r] if 0.0 < -r < 1.0 else None
        num, _ = quad(lambda u: abs(r + u) ** p, 0.0, 1.0, points=brk, epsabs=1e-14, epsrel=1e-12)
        return num / (1.0 + abs(r) ** p)

    grid = np.linspace(-2.0, 1.0, 301)
    vals = np.array([ratio(r) for r in grid])
    i = int(np.argmin(vals))
    opt = minimize_scalar(ratio, bounds=(grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]),
                          method="bounded", options={"xatol": 1e-10})
    return float(min(opt.fun, vals[i]))


# -- energy functional ------------------------------------------------------------


def energy_functional(bank: DyadicFilterBank, series, dt: float, s: float) -> float:
    """``||g||_(L~^inf_T L~^2_v B) + ||H^(s/2) g||_(L~^2_T L~^2_v B)`` with ``B = B^(1/2)_(2,1)``."""
    series = np.asarray(series)
    hs = ((np.arange(series.shape[1]) + 0.5) ** (s / 2))[None, :, None]
    a = chemin_lerner_norm(bank, series, dt, rho1=math.inf, rho2=2, sigma=0.5, r=1)
    b = chemin_lerner_norm(bank, hs * series, dt, rho1=2, rho2=2, sigma=0.5, r=1)
    return a + b
