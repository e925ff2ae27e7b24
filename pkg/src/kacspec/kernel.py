"""Non-cutoff Kac cross section, linearized spectrum and trilinear coefficients.

All angular integrals run over ``|theta| <= pi/4``.  They are folded onto
``theta > 0`` and rewritten with ``u = sin(theta/2)``, under which

    beta(theta) dtheta = 2 u**(-1-2s) du,   cos(theta) = 1 - 2u**2,
    sin(theta) = 2u sqrt(1 - u**2),

so every integral becomes ``4 int_0^b u**(-1-2s) F(u) du`` with
``b = sin(pi/8)``.  Differences such as ``1 - cos(theta)**m`` are evaluated
as ``-expm1(m log1p(-2u**2))`` to keep full relative precision near ``u = 0``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma, gammaln

from .quadrature import gauss_jacobi_origin, tanh_sinh

__all__ = [
    "CrossSectionParams",
    "KernelTables",
    "beta",
    "eigenvalue",
    "eigenvalues",
    "asymptotic_lambda",
    "alpha",
    "alpha_table",
    "mu_tilde",
    "alpha_growth_ratio",
    "build_tables",
    "even_part",
    "bobylev_apply",
    "BobylevResult",
    "maxwellian_mode_transform",
    "hermite_coefficients_from_transform",
    "bobylev_gamma_coefficients",
    "QuadratureFailure",
]

THETA_MAX = math.pi / 4
U_MAX = math.sin(math.pi / 8)
QUAD_RTOL = 1e-12


class QuadratureFailure(RuntimeError):
    """An angular integral did not reach its requested tolerance."""


@dataclass(frozen=True)
class CrossSectionParams:
    """``beta(theta) = |cos(theta/2)| / |sin(theta/2)|**(1+2s)`` on ``|theta| <= pi/4``."""

    s: float
    theta_max: float = THETA_MAX

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"singularity exponent s must lie in (0, 1), got {self.s}")
        if self.theta_max != THETA_MAX:
            raise ValueError("the angular cutoff is fixed at pi/4")


def beta(theta, params: CrossSectionParams):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta == 0.0):
        raise ValueError("beta is singular at theta = 0")
    if np.any(np.abs(theta) > params.theta_max):
        raise ValueError("theta outside the angular cutoff")
    half = 0.5 * theta
    out = np.abs(np.cos(half)) / np.abs(np.sin(half)) ** (1.0 + 2.0 * params.s)
    return out if out.ndim else float(out)


def _log_cos(u):
    return np.log1p(-2.0 * u * u)


def _log_sin(u):
    return np.log(2.0 * u) + 0.5 * np.log1p(-u * u)


def _angular_integral(weight_fn, s: float, rtol: float = QUAD_RTOL):
    """``int beta(theta) F(theta) dtheta`` for even ``F`` given as ``weight_fn(u)``."""

    def integrand(u):
        return 4.0 * u ** (-1.0 - 2.0 * s) * weight_fn(u)

    res = tanh_sinh(integrand, U_MAX, rtol=rtol, atol=1e-300)
    if np.any(res.error > np.maximum(1e-9 * np.abs(res.value), 1e-13)):
        worst = float(np.max(res.rel_error))
        raise QuadratureFailure(f"angular quadrature stalled at relative error {worst:.2e}")
    return res


def eigenvalues(n: int, params: CrossSectionParams, return_error: bool = False):
    """Eigenvalues ``lambda_0 .. lambda_(n-1)`` of the linearized operator.

    ``lambda_0 = 0`` by convention and ``lambda_2 = 0`` exactly since its
    integrand ``1 - cos**2 - sin**2`` vanishes identically.
    """
    lam = np.zeros(n)
    err = np.zeros(n)
    ms = np.array([m for m in range(1, n) if m != 2], dtype=float)
    if ms.size:
        even = (ms % 2 == 0)[:, None]
        col = ms[:, None]

        def weight(u):
            one_minus = -np.expm1(col * _log_cos(u))
            return one_minus - np.where(even, np.exp(col * _log_sin(u)), 0.0)

        res = _angular_integral(weight, params.s)
        idx = ms.astype(int)
        lam[idx] = res.value
        err[idx] = res.error
    if return_error:
        return lam, err
    return lam


def eigenvalue(k: int, params: CrossSectionParams) -> float:
    if k < 1:
        raise ValueError("eigenvalues are indexed from k = 1")
    return float(eigenvalues(k + 1, params)[k])


def asymptotic_lambda(k, params: CrossSectionParams):
    """Large-``k`` equivalent ``(2**(1+s) / s) Gamma(1-s) k**s``.

    Diverges as ``s -> 1`` through the pole of ``Gamma`` at 0.
    """
    s = params.s
    return 2.0 ** (1.0 + s) / s * gamma(1.0 - s) * np.asarray(k, dtype=float) ** s


def _log_binom(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def alpha_table(k_max: int, l_max: int, params: CrossSectionParams, return_error: bool = False):
    """Table ``A[k, l] = alpha_(k,l)`` for ``k < k_max``, ``l < l_max``.

    Odd rows and ``A[0, 0]`` are exact zeros.  Row 0 holds
    ``int beta (cos**l - 1)``; even rows ``k = 2n >= 2`` hold
    ``sqrt(binom(2n+l, 2n)) int beta sin**(2n) cos**l``, with the binomial
    folded into the exponent to avoid overflow.
    """
    table = np.zeros((k_max, l_max))
    err = np.zeros((k_max, l_max))
    ls = np.arange(1, l_max, dtype=float)
    if ls.size:
        col = ls[:, None]
        res = _angular_integral(lambda u: np.expm1(col * _log_cos(u)), params.s)
        table[0, 1:] = res.value
        err[0, 1:] = res.error
    ks = np.arange(2, k_max, 2, dtype=float)
    if ks.size and l_max:
        kk, ll = np.meshgrid(ks, np.arange(l_max, dtype=float), indexing="ij")
        kk = kk.reshape(-1, 1)
        ll = ll.reshape(-1, 1)
        logc = 0.5 * _log_binom(kk + ll, kk)

        def weight(u):
            return np.exp(logc + kk * _log_sin(u) + ll * _log_cos(u))

        res = _angular_integral(weight, params.s)
        table[2::2, :] = res.value.reshape(ks.size, l_max)
        err[2::2, :] = res.error.reshape(ks.size, l_max)
    if return_error:
        return table, err
    return table


def alpha(k: int, l: int, params: CrossSectionParams) -> float:
    if k < 0 or l < 0:
        raise ValueError("indices must be non-negative")
    if k % 2 == 1 or (k == 0 and l == 0):
        return 0.0
    return float(alpha_table(k + 1, l + 1, params)[k, l])


def mu_tilde(n, m, params: CrossSectionParams):
    """Growth profile ``(1 + m/n)**s (1 + n/(m+1))**(1/4)`` bounding ``alpha_(2n,m)``."""
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    return (1.0 + m / n) ** params.s * (1.0 + n / (m + 1.0)) ** 0.25


def alpha_growth_ratio(params: CrossSectionParams, n_max: int = 64, m_max: int = 256) -> np.ndarray:
    """``alpha_(2n,m) n**(3/4) / mu_tilde(n, m)`` for ``1 <= n <= n_max``, ``0 <= m <= m_max``.

    Bounded by an unspecified constant; row ``n - 1`` holds index ``n``.
    """
    a = alpha_table(2 * n_max + 1, m_max + 1, params)
    n = np.arange(1, n_max + 1)[:, None]
    m = np.arange(m_max + 1)[None, :]
    return a[2 * n, m] * n ** 0.75 / mu_tilde(n, m, params)


@dataclass
class KernelTables:
    """Cached spectrum and trilinear coefficients for one cross section."""

    s: float
    lambdas: np.ndarray
    alphas: np.ndarray
    quadrature_tol: float = QUAD_RTOL
    meta: dict = field(default_factory=dict)

    @property
    def params(self) -> CrossSectionParams:
        return CrossSectionParams(self.s)

    @property
    def n_lambda(self) -> int:
        return self.lambdas.size

    def check_coverage(self, n_modes: int):
        if self.lambdas.size < n_modes or min(self.alphas.shape) < n_modes:
            raise ValueError(
                f"tables cover {self.lambdas.size} eigenvalues and {self.alphas.shape} "
                f"coefficients, {n_modes} modes requested"
            )

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# s={self.s!r}\n")
            fh.write(f"# quadrature_tol={self.quadrature_tol!r}\n")
            fh.write(f"# n_lambda={self.lambdas.size}\n")
            fh.write(f"# alpha_shape={self.alphas.shape[0]}x{self.alphas.shape[1]}\n")
            w = csv.writer(fh)
            w.writerow(["kind", "k", "l", "value"])
            for k, lam in enumerate(self.lambdas):
                w.writerow(["lambda", k, "", repr(float(lam))])
            for k in range(self.alphas.shape[0]):
                for l in range(self.alphas.shape[1]):
                    w.writerow(["alpha", k, l, repr(float(self.alphas[k, l]))])

    @classmethod
    def from_csv(cls, path) -> "KernelTables":
        header = {}
        rows = []
        with Path(path).open() as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, val = line[1:].strip().partition("=")
                    header[key.strip()] = val.strip()
                else:
                    rows.append(line)
        n_lambda = int(header["n_lambda"])
        ka, la = (int(x) for x in header["alpha_shape"].split("x"))
        lambdas = np.zeros(n_lambda)
        alphas = np.zeros((ka, la))
        for rec in csv.DictReader(rows):
            if rec["kind"] == "lambda":
                lambdas[int(rec["k"])] = float(rec["value"])
            elif rec["kind"] == "alpha":
                alphas[int(rec["k"]), int(rec["l"])] = float(rec["value"])
        return cls(float(header["s"]), lambdas, alphas, float(header["quadrature_tol"]))


def build_tables(n_modes: int, params: CrossSectionParams, n_lambda: int | None = None) -> KernelTables:
    """Eigenvalues and an ``n_modes x n_modes`` coefficient table."""
    lambdas, lerr = eigenvalues(max(n_modes, n_lambda or 0), params, return_error=True)
    alphas, aerr = alpha_table(n_modes, n_modes, params, return_error=True)
    achieved = float(max(
        np.max(lerr / np.maximum(np.abs(lambdas), 1e-300), initial=0.0, where=lambdas != 0),
        np.max(aerr / np.maximum(np.abs(alphas), 1e-300), initial=0.0, where=alphas != 0),
    ))
    return KernelTables(params.s, lambdas, alphas, achieved)


# -- Fourier-side oracle ----------------------------------------------------


def even_part(fn):
    """``xi -> (fn(xi) + fn(-xi)) / 2``."""
    return lambda xi: 0.5 * (fn(xi) + fn(-xi))


def _as_callable(samples, xi_grid):
    if callable(samples):
        return samples
    if xi_grid is None:
        raise ValueError("sampled transforms need their xi grid")
    xi_grid = np.asarray(xi_grid, dtype=float)
    spline = CubicSpline(xi_grid, np.asarray(samples))
    lo, hi = xi_grid[0], xi_grid[-1]

    def fn(xi):
        xi = np.asarray(xi)
        if np.iscomplexobj(xi) or np.any((xi < lo) | (xi > hi)):
            raise ValueError("interpolation requested outside the sampled real range")
        return spline(xi)

    return fn


@dataclass(frozen=True)
class BobylevResult:
    values: np.ndarray
    error: np.ndarray


def bobylev_apply(f_hat, g_hat, xi, params: CrossSectionParams, xi_grid=None,
                  n_nodes: int = 40, rtol: float = 1e-7, atol: float = 1e-14) -> BobylevResult:
    """Fourier transform of ``K(g, f)`` by the Bobylev representation.

    ``K(g, f)^(xi) = int beta [g_even^(xi sin) f^(xi cos) - g^(0) f^(xi)] dtheta``.

    ``f_hat`` and ``g_hat`` are callables (complex ``xi`` allowed) or samples
    on the real grid ``xi_grid``, interpolated by cubic splines.  The angular
    integral uses the same ``u = sin(theta/2)`` substitution as the spectral
    tables but a Gauss-Jacobi rule for the weight ``u**(1-2s)``: the bracket
    cancels to ``O(u**2)`` and the Jacobi nodes never approach the origin
    closely enough for that cancellation to swamp the result.  The rule is
    run at ``n_nodes`` and ``2 n_nodes``; their difference is the error.
    """
    f = _as_callable(f_hat, xi_grid)
    g = _as_callable(g_hat, xi_grid)
    g_even = even_part(g)
    xi = np.asarray(xi)
    s = params.s
    g0 = g(np.zeros(1))[0]

    def evaluate(n):
        u, w = gauss_jacobi_origin(n, U_MAX, 1.0 - 2.0 * s)
        cos_t = 1.0 - 2.0 * u * u
        sin_t = 2.0 * u * np.sqrt(1.0 - u * u)
        xs = xi.reshape(-1, 1)
        bracket = g_even(xs * sin_t) * f(xs * cos_t) - g0 * f(xs)
        return 4.0 * (bracket / (u * u)) @ w

    coarse = evaluate(n_nodes)
    fine = evaluate(2 * n_nodes)
    err = np.abs(fine - coarse)
    # the bracket is a difference of terms of size |g^(0) f^(xi)|; noise scales with them
    scale = max(float(np.max(np.abs(fine), initial=0.0)),
                float(np.max(np.abs(g0 * f(xi.reshape(-1))), initial=0.0)))
    if np.any(err > rtol * scale + atol):
        raise QuadratureFailure(
            f"Bobylev quadrature unresolved: max error {float(np.max(err)):.2e}"
        )
    return BobylevResult(fine.reshape(xi.shape), err.reshape(xi.shape))


def maxwellian_mode_transform(n: int):
    """Fourier transform of ``sqrt(mu) e_n``: ``(n!)**-1/2 (-i xi)**n exp(-xi**2/2)``."""
    norm = math.exp(-0.5 * math.lgamma(n + 1.0))

    def fn(xi):
        xi = np.asarray(xi)
        return norm * (-1j * xi) ** n * np.exp(-0.5 * xi * xi)

    return fn


def hermite_coefficients_from_transform(h_hat, n_out: int, radius: float = 1.5,
                                        n_points: int = 64) -> np.ndarray:
    """Coefficients ``c_n`` of ``h = sqrt(mu) sum_n c_n e_n`` from ``h^`` alone.

    Since ``h^(xi) exp(xi**2/2) = sum_n c_n (n!)**-1/2 (-i xi)**n`` is a
    polynomial for band-limited ``c``, its Taylor coefficients are read off
    with a discrete Cauchy integral on ``|xi| = radius``.
    """
    if n_out > n_points:
        raise ValueError("n_points must exceed the number of requested modes")
    z = radius * np.exp(2j * np.pi * np.arange(n_points) / n_points)
    poly = np.asarray(h_hat(z)) * np.exp(0.5 * z * z)
    taylor = np.fft.fft(poly) / n_points
    m = np.arange(n_out)
    a = taylor[:n_out] / radius ** m
    return a * np.exp(0.5 * gammaln(m + 1.0)) / (-1j) ** m


def bobylev_gamma_coefficients(k: int, l: int, params: CrossSectionParams,
                               n_out: int | None = None, radius: float = 1.5) -> np.ndarray:
    """Hermite coefficients of ``Gamma(e_k, e_l)`` through the Bobylev formula.

    ``Gamma(f, g) = mu**-1/2 K(sqrt(mu) f, sqrt(mu) g)``, with the first
    argument in the starred (post-collision partner) slot.
    """
    if n_out is None:
        n_out = k + l + 3
    g_hat = maxwellian_mode_transform(k)
    f_hat = maxwellian_mode_transform(l)

    def h_hat(z):
        return bobylev_apply(f_hat, g_hat, z, params).values

    return hermite_coefficients_from_transform(h_hat, n_out, radius=radius)
