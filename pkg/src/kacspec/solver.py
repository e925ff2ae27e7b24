"""Time evolution of the linearized-plus-quadratic Kac fluctuation equation.

The unknown ``g(t, x, v)`` on the torus of circumference ``2 pi L`` solves

    d_t g + v d_x g + K g = Gamma(g, g),

and is stored as ``coeffs[n, j]``: Hermite mode ``n`` in velocity, Fourier
coefficient ``j`` (numpy FFT order, ``xi_j = j / L``) in space, normalized so
that ``g(x, v) = sum_(n, j) coeffs[n, j] e_n(v) exp(i xi_j x)``.  The Nyquist
column is kept at zero so real data stay exactly Hermitian.

Transport is integrated exactly: the truncated multiplication-by-``v`` matrix
is diagonalized by the ``N_v``-point Gauss rule of the scaled basis, so the
flow ``exp(-i tau xi V)`` is a phase at the quadrature nodes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hermite import build_grid
from .kernel import KernelTables
from .littlewood_paley import build_filter_bank, chemin_lerner_norm

__all__ = [
    "SpectralState",
    "StepScheme",
    "StabilityError",
    "Stepper",
    "SimulationResult",
    "PicardResult",
    "apply_collision",
    "apply_transport",
    "gamma",
    "simulate",
    "picard_solve",
    "damped_datum",
    "kolmogorov_damping",
    "kolmogorov_evolve",
    "kolmogorov_upwind",
    "polynomial_datum",
    "rough_datum",
    "write_snapshots",
    "bank_for",
    "contracts",
    "bisect_amplitude",
]


class StabilityError(FloatingPointError):
    """A time step produced non-finite values."""


@dataclass
class SpectralState:
    """Hermite x Fourier coefficients of the fluctuation at one instant."""

    coeffs: np.ndarray
    L: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        self.coeffs = np.array(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 2:
            raise ValueError("coeffs must have shape (N_v, N_x)")
        if self.L <= 0:
            raise ValueError("L must be positive")

    @property
    def n_v(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_x(self) -> int:
        return self.coeffs.shape[1]

    @property
    def xi(self) -> np.ndarray:
        return np.fft.fftfreq(self.n_x, d=1.0 / self.n_x) / self.L

    def copy(self, coeffs=None, time=None) -> "SpectralState":
        return SpectralState(self.coeffs.copy() if coeffs is None else coeffs, self.L,
                             self.time if time is None else time)

    def norm(self) -> float:
        """``||g||_(L2_(x, v))``."""
        return float(math.sqrt(2.0 * math.pi * self.L) * np.linalg.norm(self.coeffs))

    def hermitian_residual(self) -> float:
        """``max |c[n, -j] - conj(c[n, j])|``; zero for real-valued ``g``."""
        mirrored = np.roll(self.coeffs[:, ::-1], 1, axis=1)
        return float(np.max(np.abs(mirrored - self.coeffs.conj()), initial=0.0))

    def physical(self) -> np.ndarray:
        """Hermite coefficients sampled on the uniform ``x`` grid, shape ``(N_v, N_x)``."""
        return np.fft.ifft(self.coeffs, axis=1) * self.n_x


def _nyquist_mask(n_x: int) -> np.ndarray:
    mask = np.ones(n_x)
    if n_x % 2 == 0 and n_x > 1:
        mask[n_x // 2] = 0.0
    return mask


@dataclass(frozen=True)
class StepScheme:
    """Time discretization: ``kind`` is ``"strang"`` or ``"rk4"``."""

    kind: str = "strang"
    dt: float = 1e-2

    def __post_init__(self):
        if self.kind not in ("strang", "rk4"):
            raise ValueError(f"unknown scheme {self.kind!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


# -- operators ---------------------------------------------------------------


def apply_collision(coeffs, tables: KernelTables, dt: float | None = None):
    """``-K g`` (``dt=None``) or the exact factor ``exp(-dt K) g``."""
    c = np.asarray(coeffs)
    lam = np.asarray(tables.lambdas[: c.shape[0]])
    if lam.size < c.shape[0]:
        raise ValueError("eigenvalue table shorter than the Hermite truncation")
    if dt is None:
        return -lam[:, None] * c
    return np.exp(-dt * lam)[:, None] * c


def apply_transport(coeffs, xi):
    """``-v d_x g``: ``-i xi_j (sqrt(n) c[n-1, j] + sqrt(n+1) c[n+1, j])``."""
    c = np.asarray(coeffs, dtype=complex)
    root = np.sqrt(np.arange(c.shape[0], dtype=float))[:, None]
    vc = np.zeros_like(c)
    vc[1:] += root[1:] * c[:-1]
    vc[:-1] += root[1:] * c[1:]
    return -1j * np.asarray(xi)[None, :] * vc


def _padded_physical(coeffs, m: int):
    """Zero-pad Fourier columns to ``m`` points and return physical samples."""
    n_v, n_x = coeffs.shape
    if m == n_x:
        return np.fft.ifft(coeffs, axis=1) * m
    half = n_x // 2
    big = np.zeros((n_v, m), dtype=complex)
    big[:, :half] = coeffs[:, :half]
    if n_x > 1:
        big[:, m - (n_x - half):] = coeffs[:, half:]
    return np.fft.ifft(big, axis=1) * m


def _truncate_spectral(phys, n_x: int):
    m = phys.shape[1]
    full = np.fft.fft(phys, axis=1) / m
    if m == n_x:
        return full
    half = n_x // 2
    out = np.empty((phys.shape[0], n_x), dtype=complex)
    out[:, :half] = full[:, :half]
    if n_x > 1:
        out[:, half:] = full[:, m - (n_x - half):]
    return out


def gamma(f, g, tables: KernelTables, return_outflow: bool = False):
    """Quadratic collision term ``Gamma(f, g)`` on coefficient arrays ``(N_v, N_x)``.

    Uses ``Gamma(e_k, e_l) = alpha[k, l] e_(k+l)`` (only even ``k`` contribute):
    products are formed in physical ``x`` on a grid padded to ``3 N_x / 2``
    points, which removes aliasing from the retained modes.  Contributions with
    ``k + l >= N_v`` are dropped; with ``return_outflow=True`` their squared
    ``l2`` mass is returned as well.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    n_v, n_x = f.shape
    if g.shape != f.shape:
        raise ValueError("f and g must share the grid")
    tables.check_coverage(n_v)
    m = max(1, (3 * n_x) // 2)
    fp = _padded_physical(f, m)
    gp = _padded_physical(g, m)
    alpha = tables.alphas
    out = np.zeros((n_v, m), dtype=complex)
    spill = np.zeros((n_v, m), dtype=complex) if return_outflow else None
    for k in range(0, n_v, 2):
        fk = fp[k]
        if not np.any(fk):
            continue
        keep = n_v - k
        out[k:] += (alpha[k, :keep][:, None] * gp[:keep]) * fk
        if spill is not None and k > 0:
            # l = keep .. n_v-1 lands on n = n_v .. n_v+k-1
            spill[:k] += (alpha[k, keep:n_v][:, None] * gp[keep:]) * fk
    value = _truncate_spectral(out, n_x) * _nyquist_mask(n_x)
    if not return_outflow:
        return value
    lost = _truncate_spectral(spill, n_x)
    return value, float(np.sum(np.abs(lost) ** 2))


# -- time stepping -----------------------------------------------------------


class Stepper:
    """Advances coefficient arrays of fixed shape with a given scheme.

    ``nonlinear(c, t)`` is the quadratic forcing; it defaults to
    ``Gamma(c, c)`` and is replaced by ``Gamma(f(t), c)`` in the Picard
    iteration.  ``nonlinear=False`` switches the forcing off.
    """

    def __init__(self, n_v: int, n_x: int, L: float, tables: KernelTables,
                 scheme: StepScheme, nonlinear=None):
        tables.check_coverage(n_v)
        self.n_v, self.n_x, self.L = n_v, n_x, L
        self.tables = tables
        self.scheme = scheme
        self.xi = np.fft.fftfreq(n_x, d=1.0 / n_x) / L
        self.mask = _nyquist_mask(n_x)
        self.lambdas = np.asarray(tables.lambdas[:n_v])
        grid = build_grid(n_v, n_quad=n_v)
        self.Q = grid.orthogonal_matrix()
        self.nodes = grid.nodes
        self.outflow = 0.0
        if nonlinear is None:
            self.nonlinear = self._gamma_self
        elif nonlinear is False:
            self.nonlinear = None
        else:
            self.nonlinear = nonlinear
        half = 0.5 * scheme.dt
        self._coll_half = np.exp(-half * self.lambdas)[:, None]
        self._phase_half = np.exp(-1j * half * np.outer(self.nodes, self.xi))

    def _gamma_self(self, c, t):
        val, lost = gamma(c, c, self.tables, return_outflow=True)
        self._last_lost = lost
        return val

    def transport_exact(self, c, tau: float | None = None):
        """``exp(-tau v d_x)`` on the Galerkin truncation (default ``tau = dt/2``)."""
        phase = self._phase_half if tau is None else np.exp(-1j * tau * np.outer(self.nodes, self.xi))
        return self.Q @ (phase * (self.Q.T @ c))

    def rhs(self, c, t):
        out = apply_transport(c, self.xi) - self.lambdas[:, None] * c
        if self.nonlinear is not None:
            out = out + self.nonlinear(c, t)
        return out

    def _nonlinear_midpoint(self, c, t, dt):
        self._last_lost = 0.0
        mid = c + 0.5 * dt * self.nonlinear(c, t)
        out = c + dt * self.nonlinear(mid, t + 0.5 * dt)
        self.outflow += dt * self._last_lost
        return out

    def step(self, c, t):
        with np.errstate(over="ignore", invalid="ignore"):
            c = self._advance(c, t)
        if not np.all(np.isfinite(c)):
            raise StabilityError(
                f"non-finite coefficients at t={t + self.scheme.dt:.6g} "
                f"(scheme={self.scheme.kind}, dt={self.scheme.dt:g})"
            )
        return c

    def _advance(self, c, t):
        dt = self.scheme.dt
        if self.scheme.kind == "strang":
            c = self._coll_half * c
            c = self.transport_exact(c)
            if self.nonlinear is not None:
                c = self._nonlinear_midpoint(c, t, dt)
            c = self.transport_exact(c)
            c = self._coll_half * c
        else:
            k1 = self.rhs(c, t)
            k2 = self.rhs(c + 0.5 * dt * k1, t + 0.5 * dt)
            k3 = self.rhs(c + 0.5 * dt * k2, t + 0.5 * dt)
            k4 = self.rhs(c + dt * k3, t + dt)
            c = c + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return c * self.mask


@dataclass
class SimulationResult:
    times: np.ndarray
    snapshots: np.ndarray  # (n_snap, N_v, N_x)
    L: float
    scheme: StepScheme
    gamma_outflow: float = 0.0
    top_mode_fraction: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> SpectralState:
        return SpectralState(self.snapshots[-1], self.L, float(self.times[-1]))


def _step_count(T: float, dt: float) -> int:
    if T < 0:
        raise ValueError("T must be non-negative")
    return int(math.ceil(T / dt - 1e-9)) if T > 0 else 0


def simulate(state: SpectralState, tables: KernelTables, T: float, scheme: StepScheme | None = None,
             nonlinear: bool = True, every: int = 1) -> SimulationResult:
    """Integrate from ``state`` over ``[0, T]``, storing every ``every``-th step.

    The step is shrunk to ``T / ceil(T / dt)`` so the run lands on ``T``.
    """
    scheme = scheme or StepScheme()
    n_steps = _step_count(T, scheme.dt)
    if n_steps:
        scheme = StepScheme(scheme.kind, T / n_steps)
    stepper = Stepper(state.n_v, state.n_x, state.L, tables, scheme, None if nonlinear else False)
    c = state.coeffs * stepper.mask
    t = state.time
    times, snaps = [t], [c.copy()]
    top = 0.0
    for i in range(1, n_steps + 1):
        c = stepper.step(c, t)
        t = state.time + i * scheme.dt
        total = float(np.sum(np.abs(c) ** 2))
        if total > 0:
            top = max(top, float(np.sum(np.abs(c[-1]) ** 2)) / total)
        if i % every == 0 or i == n_steps:
            times.append(t)
            snaps.append(c.copy())
    return SimulationResult(np.array(times), np.array(snaps), state.L, scheme,
                            stepper.outflow, top)


# -- Picard iteration ---------------------------------------------------------


def damped_datum(coeffs, L: float, s: float, times, delta: float = 1.0) -> np.ndarray:
    """``exp(-delta t (sqrt(H) + <D_x>)**(2s/(2s+1))) g0`` at each time, shape ``(n_t, N_v, N_x)``."""
    c = np.asarray(coeffs)
    n_v, n_x = c.shape
    xi = np.fft.fftfreq(n_x, d=1.0 / n_x) / L
    sym = (np.sqrt(np.arange(n_v) + 0.5)[:, None] + np.sqrt(1.0 + xi ** 2)[None, :]) ** (2 * s / (2 * s + 1))
    times = np.asarray(times, dtype=float)
    return np.exp(-delta * times[:, None, None] * sym[None]) * c[None]


@dataclass
class PicardResult:
    times: np.ndarray
    iterates: list  # each (n_t, N_v, N_x)
    differences: np.ndarray
    ratios: np.ndarray
    contracted: bool


def _linear_run(g0, f_series, tables, L, scheme, n_steps):
    """Solve ``d_t h + v d_x h + K h = Gamma(f(t), h)`` with ``f`` given at every step."""
    dt = scheme.dt

    def frozen(c, t):
        # f is linear in time between stored steps
        pos = (t - 0.0) / dt
        i = min(int(math.floor(pos + 1e-9)), n_steps - 1)
        w = pos - i
        f = (1.0 - w) * f_series[i] + w * f_series[i + 1]
        return gamma(f, c, tables)

    stepper = Stepper(g0.shape[0], g0.shape[1], L, tables, scheme, frozen)
    out = np.empty((n_steps + 1,) + g0.shape, dtype=complex)
    c = g0 * stepper.mask
    out[0] = c
    for i in range(n_steps):
        c = stepper.step(c, i * dt)
        out[i + 1] = c
    return out


def picard_solve(state: SpectralState, tables: KernelTables, T: float, dt: float,
                 max_iters: int = 5, delta: float = 1.0, scheme_kind: str = "strang") -> PicardResult:
    """Picard iterates ``g~_(k+1)`` solving the equation with ``Gamma(g~_k, .)``.

    ``g~_0`` is the damped datum.  Differences between consecutive iterates
    are measured in ``L~^inf_T L~^2_v (B^(1/2)_(2,1))``; the run is flagged as
    not contracting when the last ratio is ``>= 1``.
    """
    n_steps = max(_step_count(T, dt), 1)
    scheme = StepScheme(scheme_kind, T / n_steps if T > 0 else dt)
    times = np.arange(n_steps + 1) * scheme.dt
    bank = bank_for(state.n_x, state.L)
    current = damped_datum(state.coeffs, state.L, tables.s, times, delta)
    iterates = [current]
    diffs = []
    for _ in range(max_iters):
        nxt = _linear_run(state.coeffs, current, tables, state.L, scheme, n_steps)
        diffs.append(_cl_norm(bank, nxt - current, scheme.dt))
        iterates.append(nxt)
        current = nxt
    diffs = np.array(diffs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(diffs[:-1] > 0, diffs[1:] / diffs[:-1], 0.0)
    contracted = bool(ratios.size == 0 or ratios[-1] < 1.0)
    return PicardResult(times, iterates, diffs, ratios, contracted)


def contracts(result: PicardResult, threshold: float = 0.5, within: int = 3) -> bool:
    """True when every difference ratio from iteration ``within`` on is ``<= threshold``."""
    tail = result.ratios[within - 1:]
    return bool(tail.size > 0 and np.all(tail <= threshold))


def bisect_amplitude(make_state, tables: KernelTables, T: float, dt: float, lo: float = 1e-4,
                     hi: float = 10.0, steps: int = 12, max_iters: int = 4,
                     threshold: float = 0.5) -> float:
    """Largest amplitude (log-bisection) whose Picard iteration contracts.

    ``make_state(amplitude)`` builds the datum.  Blow-ups count as failure.
    Returns ``lo`` unchanged if even ``lo`` fails.
    """
    def ok(a):
        try:
            return contracts(picard_solve(make_state(a), tables, T, dt, max_iters), threshold)
        except StabilityError:
            return False

    if not ok(lo):
        return lo
    if ok(hi):
        return hi
    for _ in range(steps):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def bank_for(n_x: int, L: float = 1.0):
    """Filter bank for ``n_x`` columns; coarse grids are embedded in a larger one.

    Zero-padding the trailing columns keeps the low modes in place because
    the extra indices sit past the positive frequencies of a coarse grid
    whose own Nyquist column is zero.
    """
    n = max(n_x, 4)
    while n / (2.0 * L) < 1.5:
        n *= 2
    return build_filter_bank(n, L)


def _cl_norm(bank, series, dt):
    series = np.asarray(series)
    if series.shape[-1] != bank.n_x:
        series = np.pad(series, [(0, 0)] * (series.ndim - 1) + [(0, bank.n_x - series.shape[-1])])
    return chemin_lerner_norm(bank, series, dt, rho1=math.inf, rho2=2, sigma=0.5, r=1)


# -- generalized Kolmogorov equation ------------------------------------------


def kolmogorov_damping(t, xi, eta, s: float):
    """``int_0^t |eta + sigma xi|**(2s) d sigma`` in closed form (broadcasting).

    With ``F(w) = sign(w) |w|**(2s+1) / (2s+1)`` the integral is
    ``(F(eta + t xi) - F(eta)) / xi``.  When ``|t xi|`` is tiny against
    ``|eta|`` a first-order expansion avoids the cancellation.
    """
    t, xi, eta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, xi, eta)))
    p = 2.0 * s
    out = np.empty(t.shape)
    small = np.abs(t * xi) <= 1e-7 * np.abs(eta)
    zero = xi == 0
    taylor = small | zero
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(eta != 0, t * xi / np.where(eta != 0, eta, 1.0), 0.0)
        out[taylor] = (t * np.abs(eta) ** p * (1.0 + 0.5 * p * ratio))[taylor]
        a = eta + t * xi
        F = lambda w: np.sign(w) * np.abs(w) ** (p + 1.0) / (p + 1.0)
        exact = (F(a) - F(eta)) / np.where(zero, 1.0, xi)
    out[~taylor] = exact[~taylor]
    return out


def kolmogorov_evolve(g0_hat, t: float, xi, eta, s: float):
    """Exact solution of ``d_t g + v d_x g + (-Lap_v)**s g = 0`` in Fourier variables.

    ``g0_hat`` is a callable ``(xi, eta) -> values``; returns
    ``g0_hat(xi, eta + t xi) exp(-int_0^t |eta + sigma xi|**(2s) d sigma)`` on the
    broadcast of ``xi`` and ``eta``.
    """
    xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
    if t == 0:
        return np.asarray(g0_hat(xi, eta))
    return g0_hat(xi, eta + t * xi) * np.exp(-kolmogorov_damping(t, xi, eta, s))


def kolmogorov_upwind(g0_hat, T: float, xi: float, eta, s: float, cfl: float = 0.5):
    """First-order upwind solve of ``d_t u = xi d_eta u - |eta|**(2s) u`` on a fixed ``eta`` grid.

    The Fourier-transformed equation is a transport in ``eta`` with speed
    ``-xi`` plus pointwise damping.  Inflow values are taken from the exact
    solution.  Used only to validate :func:`kolmogorov_evolve`.
    """
    eta = np.asarray(eta, dtype=float)
    h = eta[1] - eta[0]
    dt_max = cfl * h / max(abs(xi), 1e-300)
    n = max(1, int(math.ceil(T / dt_max)))
    dt = T / n
    u = np.asarray(g0_hat(np.full_like(eta, xi), eta), dtype=complex)
    damp = np.abs(eta) ** (2 * s)
    for i in range(n):
        t_next = (i + 1) * dt
        du = np.zeros_like(u)
        if xi > 0:
            du[:-1] = xi * (u[1:] - u[:-1]) / h
        elif xi < 0:
            du[1:] = xi * (u[1:] - u[:-1]) / h
        u = u + dt * (du - damp * u)
        edge = -1 if xi > 0 else 0
        if xi != 0:
            u[edge] = kolmogorov_evolve(g0_hat, t_next, xi, eta[edge], s)
    return u


# -- initial data ---------------------------------------------------------------


def _hermitize(c):
    """Force ``c[:, -j] = conj(c[:, j])`` by averaging with the mirror."""
    mirrored = np.roll(c[:, ::-1], 1, axis=1).conj()
    return 0.5 * (c + mirrored)


def polynomial_datum(n_v: int, n_x: int, modes: dict, L: float = 1.0) -> SpectralState:
    """Finite Hermite/Fourier datum from ``{(n, j): amplitude}``, made real-valued.

    The conjugate partner of each listed ``(n, j)`` with ``j != 0`` is filled
    in automatically, so ``{(1, 1): 0.5}`` means ``0.5 e_1(v) 2 cos(x/L)``.
    """
    c = np.zeros((n_v, n_x), dtype=complex)
    for (n, j), a in modes.items():
        if not (0 <= n < n_v and abs(j) < max(n_x / 2, 1)):
            raise ValueError(f"mode {(n, j)} outside the grid")
        c[n, j % n_x] += a
        if j != 0:
            c[n, (-j) % n_x] += np.conj(a)
    c *= _nyquist_mask(n_x)
    return SpectralState(c, L)


def rough_datum(n_v: int, n_x: int, amplitude: float = 1e-2, a: float = 1.0, b: float = 1.0,
                seed: int = 0, L: float = 1.0) -> SpectralState:
    """Real datum with ``|c[n, j]| = amplitude (1+n)**-a (1+|j|)**-b`` and random phases."""
    rng = np.random.default_rng(seed)
    j = np.fft.fftfreq(n_x, d=1.0 / n_x)
    n = np.arange(n_v)
    mag = amplitude * (1.0 + n[:, None]) ** -a * (1.0 + np.abs(j)[None, :]) ** -b
    phase = np.exp(2j * np.pi * rng.random((n_v, n_x)))
    c = mag * phase
    # j = 0 column real with random sign; negative j mirror positive j
    c[:, 0] = mag[:, 0] * np.sign(rng.random(n_v) - 0.5)
    pos = (j > 0) & (np.abs(j) < n_x / 2)
    neg_idx = (-np.arange(n_x)) % n_x
    c[:, neg_idx[pos]] = c[:, pos].conj()
    c *= _nyquist_mask(n_x)
    return SpectralState(c, L)


# -- output -------------------------------------------------------------------------


def write_snapshots(result: SimulationResult, out_dir, manifest: dict | None = None) -> Path:
    """Write ``snapshot_XXXX.csv`` files (n, j, re, im) and ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    n_x = result.snapshots.shape[2]
    j_index = np.fft.fftfreq(n_x, d=1.0 / n_x).astype(int)
    for i, snap in enumerate(result.snapshots):
        name = f"snapshot_{i:04d}.csv"
        with (out / name).open("w") as fh:
            fh.write("n,j,re,im\n")
            for n in range(snap.shape[0]):
                for col in range(n_x):
                    z = snap[n, col]
                    fh.write(f"{n},{j_index[col]},{float(z.real)!r},{float(z.imag)!r}\n")
        files.append(name)
    info = dict(manifest or {})
    info.update({
        "N_v": int(result.snapshots.shape[1]),
        "N_x": int(n_x),
        "L": result.L,
        "scheme": result.scheme.kind,
        "dt": result.scheme.dt,
        "times": [float(t) for t in result.times],
        "snapshots": files,
        "truncation": {
            "gamma_outflow": result.gamma_outflow,
            "top_mode_fraction": result.top_mode_fraction,
        },
    })
    path = out / "manifest.json"
    path.write_text(json.dumps(info, indent=2, sort_keys=True))
    return path
