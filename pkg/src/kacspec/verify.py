"""Acceptance checks shared by the test-suite and the ``verify`` command.

Each ``criterion_N`` returns a :class:`CriterionResult`; nothing here raises
on a failed check.  Recorded constants live in ``data/baselines.json`` and are
regenerated with :func:`measure_baselines`.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .kernel import (
    CrossSectionParams,
    KernelTables,
    alpha_growth_ratio,
    alpha_table,
    asymptotic_lambda,
    bobylev_gamma_coefficients,
    build_tables,
    eigenvalues,
)
from .littlewood_paley import besov_norm, build_filter_bank, embedding_constant
from .solver import (
    StepScheme,
    bank_for,
    bisect_amplitude,
    kolmogorov_damping,
    kolmogorov_evolve,
    picard_solve,
    polynomial_datum,
    rough_datum,
    gamma,
    simulate,
)

__all__ = [
    "CriterionResult",
    "CRITERIA",
    "SUITES",
    "run_suite",
    "load_baselines",
    "measure_baselines",
    "check_kernel_identities",
    "kolmogorov_x_profile",
]

SIN_PI_8 = math.sin(math.pi / 8)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    runtime: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:>2} {self.name}: {'PASS' if self.passed else 'FAIL'}"

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def load_baselines(path=None) -> dict:
    if path is None:
        text = resources.files("kacspec").joinpath("data/baselines.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def _timed(number, name, fn, budget=None):
    t0 = time.perf_counter()
    passed, detail = fn()
    runtime = time.perf_counter() - t0
    if budget is not None:
        detail["runtime_budget"] = budget
        passed = passed and runtime < budget
    return CriterionResult(number, name, bool(passed), detail, runtime)


def _rel(a, b):
    return abs(a - b) / abs(b)


# -- kernel ---------------------------------------------------------------------------


def criterion_1() -> CriterionResult:
    def run():
        p = CrossSectionParams(0.5)
        lam = eigenvalues(3, p)
        a = alpha_table(1, 3, p)
        want_l1 = 8 * SIN_PI_8
        want_a = -16 * (SIN_PI_8 - SIN_PI_8 ** 3 / 3)
        d = {
            "lambda_1": lam[1], "lambda_1_rel_err": _rel(lam[1], want_l1),
            "lambda_2": lam[2],
            "alpha_02": a[0, 2], "alpha_02_rel_err": _rel(a[0, 2], want_a),
        }
        ok = d["lambda_1_rel_err"] <= 1e-8 and abs(lam[2]) <= 1e-10 and d["alpha_02_rel_err"] <= 1e-8
        return ok, d
    return _timed(1, "kernel closed forms", run, budget=1.0)


def criterion_2(s_values=(0.25, 0.5, 0.75)) -> CriterionResult:
    def run():
        rows, ok = {}, True
        for s in s_values:
            p = CrossSectionParams(s)
            lam = eigenvalues(4097, p)
            dev = {k: abs(lam[k] / asymptotic_lambda(k, p) - 1.0) for k in (64, 4096)}
            good = dev[4096] <= 0.10 and dev[4096] < dev[64]
            rows[s] = {"dev_64": dev[64], "dev_4096": dev[4096], "passed": good}
            ok &= good
        return ok, rows
    return _timed(2, "eigenvalue asymptotics", run, budget=30.0)


def check_kernel_identities(tables: KernelTables, odd_max: int = 63, even_max: int = 32,
                            rtol: float = 1e-8) -> tuple[bool, dict]:
    """Conservation identities on a table; failures are named in the detail."""
    lam, a = tables.lambdas, tables.alphas
    need = max(odd_max, 2 * even_max) + 1
    if lam.size < need or a.shape[0] < need or a.shape[1] < need:
        return False, {"coverage": f"tables too small for index {need - 1}"}
    failures = []
    worst = {"alpha_0m_plus_lambda_m": 0.0, "alpha_0_2k_plus_alpha_2k_0": 0.0}
    for m in range(1, odd_max + 1, 2):
        err = abs(a[0, m] + lam[m]) / abs(lam[m])
        worst["alpha_0m_plus_lambda_m"] = max(worst["alpha_0m_plus_lambda_m"], err)
        if not err <= rtol:
            failures.append(f"alpha_(0,{m}) = -lambda_{m}")
    for k in range(1, even_max + 1):
        n = 2 * k
        scale = max(abs(lam[n]), abs(a[0, n]))
        err = abs(a[0, n] + a[n, 0] + lam[n]) / scale
        worst["alpha_0_2k_plus_alpha_2k_0"] = max(worst["alpha_0_2k_plus_alpha_2k_0"], err)
        if not err <= rtol:
            failures.append(f"alpha_(0,{n}) + alpha_({n},0) = -lambda_{n}")
    for name, val in (("lambda_0 = 0", lam[0]), ("lambda_2 = 0", lam[2])):
        if abs(val) > 1e-10:
            failures.append(name)
    return not failures, {"worst_rel_err": worst, "failed_identities": failures}


def criterion_3(s_values=(0.25, 0.5, 0.75)) -> CriterionResult:
    def run():
        out, ok = {}, True
        for s in s_values:
            good, d = check_kernel_identities(build_tables(65, CrossSectionParams(s)))
            out[s] = d
            ok &= good
        return ok, out
    return _timed(3, "conservation identities", run, budget=60.0)


def criterion_4(s: float = 0.5, k_max: int = 8) -> CriterionResult:
    def run():
        n_v = 2 * k_max + 2
        tables = build_tables(n_v, CrossSectionParams(s))
        alpha_scale = float(np.max(np.abs(tables.alphas[: k_max + 1, : k_max + 1])))
        worst = 0.0
        for k in range(k_max + 1):
            for l in range(k_max + 1):
                f = np.zeros((n_v, 1), complex)
                g = np.zeros((n_v, 1), complex)
                f[k, 0] = g[l, 0] = 1.0
                table = gamma(f, g, tables)[:, 0]
                oracle = bobylev_gamma_coefficients(k, l, tables.params, n_out=n_v)
                # Gamma(e_k, e_l) vanishes identically for odd k and for k = l = 0;
                # there the oracle's rounding noise is measured against the table scale
                scale = np.linalg.norm(table) if np.any(table) else alpha_scale
                err = np.linalg.norm(table - oracle) / scale
                worst = max(worst, float(err))
        return worst <= 1e-6, {"s": s, "worst_rel_err": worst}
    return _timed(4, "Bobylev cross-validation", run, budget=120.0)


# -- Littlewood-Paley -------------------------------------------------------------


def criterion_5(n_x: int = 128, L: float = 1.0, n_samples: int = 50, seed: int = 0) -> CriterionResult:
    def run():
        bank = build_filter_bank(n_x, L)
        rng = np.random.default_rng(seed)
        worst_cross, worst_l2 = 0.0, 0.0
        for _ in range(n_samples):
            u = rng.standard_normal(n_x)
            un = np.linalg.norm(u)
            for p in bank.blocks:
                bp = bank.block(u, p)
                for q in bank.blocks:
                    if abs(p - q) >= 2:
                        worst_cross = max(worst_cross, np.linalg.norm(bank.block(bp, q)) / un)
            l2 = math.sqrt(bank.length * np.mean(u ** 2))
            worst_l2 = max(worst_l2, _rel(besov_norm(bank, u, 0.0, 2, 2).value, l2))
        d = {"partition_residual": bank.partition_residual(), "cross_block": worst_cross,
             "besov_0_22_vs_l2": worst_l2, "edges": list(bank.edges)}
        ok = d["partition_residual"] <= 1e-12 and worst_cross <= 1e-12 and worst_l2 <= 1e-10
        return ok, d
    return _timed(5, "Littlewood-Paley", run)


# -- solver -----------------------------------------------------------------------------


def _smooth_datum(n_v, n_x):
    return polynomial_datum(n_v, n_x, {(0, 1): 0.3, (1, 2): 0.2, (2, 0): 0.1, (3, 3): 0.1, (4, 1): 0.1})


def criterion_6(n_v: int = 64, n_x: int = 128, s: float = 0.5) -> CriterionResult:
    def run():
        tables = build_tables(n_v, CrossSectionParams(s))
        # conserved components of a homogeneous {0, 2} datum
        st = polynomial_datum(n_v, 1, {(0, 0): 0.3, (2, 0): 0.2})
        fin = simulate(st, tables, 1.0, StepScheme("strang", 0.01)).final.coeffs
        drift = float(np.max(np.abs(fin[[0, 2]] - st.coeffs[[0, 2]])))
        # self-convergence
        st = _smooth_datum(n_v, n_x)
        dts = (0.01, 0.005, 0.0025)
        res = [simulate(st, tables, 0.5, StepScheme("strang", dt)).final.coeffs for dt in dts]
        e1 = np.linalg.norm(res[0] - res[1])
        e2 = np.linalg.norm(res[1] - res[2])
        slope = float(math.log2(e1 / e2))
        # linear energy decay
        run_lin = simulate(st, tables, 1.0, StepScheme("strang", 0.01), nonlinear=False)
        energy = np.sum(np.abs(run_lin.snapshots) ** 2, axis=(1, 2))
        increments = np.diff(energy)
        monotone = bool(np.all(increments <= 1e-14 * energy[0]))
        d = {"mode_0_2_drift": drift, "strang_slope": slope, "dts": dts,
             "energy_monotone": monotone, "max_energy_increment": float(increments.max())}
        return drift <= 1e-10 and abs(slope - 2.0) <= 0.2 and monotone, d
    return _timed(6, "solver structure", run, budget=120.0)


PICARD_SETUP = {"n_v": 32, "n_x": 64, "s": 0.5, "T": 1.0, "dt": 0.02, "a": 1.0, "b": 1.0, "seed": 0}


def _picard_datum(amplitude):
    p = PICARD_SETUP
    return rough_datum(p["n_v"], p["n_x"], amplitude, p["a"], p["b"], seed=p["seed"])


def _energy_ratio(tables, amplitude, T_max=2.0, dt=0.02):
    st = _picard_datum(amplitude)
    bank = bank_for(st.n_x)
    run = simulate(st, tables, T_max, StepScheme("strang", dt))
    g0 = dg.critical_norm(bank, st.coeffs)
    ratios = [dg.energy_functional(bank, run.snapshots[: i + 1], run.scheme.dt, tables.s)
              / (math.exp(run.times[i]) * g0) for i in range(1, run.times.size)]
    return float(max(ratios))


def criterion_7(baselines=None) -> CriterionResult:
    baselines = baselines or load_baselines()

    def run():
        p = PICARD_SETUP
        tables = build_tables(p["n_v"], CrossSectionParams(p["s"]))
        critical = bisect_amplitude(_picard_datum, tables, p["T"], p["dt"], steps=8)
        amplitude = 0.5 * critical
        res = picard_solve(_picard_datum(amplitude), tables, p["T"], p["dt"], max_iters=4)
        ratio = float(np.max(res.ratios[2:]))
        energy = _energy_ratio(tables, amplitude)
        c0 = baselines["picard"]["c0"]
        d = {"critical_amplitude": critical, "amplitude": amplitude,
             "differences": res.differences, "ratios": res.ratios,
             "energy_ratio_max": energy, "recorded_c0": c0}
        return ratio <= 0.5 and energy <= c0, d
    return _timed(7, "Picard contraction", run)


# -- smoothing ---------------------------------------------------------------------------


def kolmogorov_x_profile(s: float, t: float = 1.0, k_max: int = 64, eta_max: float = 200.0,
                         n_eta: int = 16001):
    """``||g^(t, xi, .)||_(L2_eta)`` for ``xi = 0 .. k_max`` from the exact solution.

    The datum is ``exp(-eta**2/2)`` for every ``xi``: Gaussian in velocity and
    a point mass in space, so all decay in ``xi`` is produced by the flow.
    """
    eta = np.linspace(-eta_max, eta_max, n_eta)
    xi = np.arange(k_max + 1, dtype=float)
    g = kolmogorov_evolve(lambda a, b: np.exp(-0.5 * b * b) + 0.0 * a, t, xi[:, None], eta[None, :], s)
    return np.sqrt(np.trapezoid(np.abs(g) ** 2, eta, axis=1))


def criterion_8(s_values=(0.25, 0.5, 0.75), baselines=None) -> CriterionResult:
    baselines = baselines or load_baselines()

    def run():
        rows, ok = {}, True
        for s in s_values:
            brute = dg.kolmogorov_min_ratio(s)
            recorded = baselines["kolmogorov_min_ratio"][str(s)]
            xi = np.linspace(0.5, 32, 64)
            tt = np.linspace(0.05, 2.0, 40)
            X, T = np.meshgrid(xi, tt)
            num = kolmogorov_damping(T, X, 0.0, s)
            ratio = num / (T ** (2 * s + 1) * X ** (2 * s))
            slice_err = float(np.max(np.abs(ratio * (2 * s + 1) - 1.0)))
            fit = dg.fit_decay(kolmogorov_x_profile(s), window=(4, 64))
            target = dg.predicted_x_exponent(s)
            fit_ok = abs(fit.exponent / target - 1.0) <= 0.10
            good = brute > 0 and brute >= recorded * (1 - 1e-9) and slice_err <= 1e-10 and fit_ok
            rows[s] = {"brute_min": brute, "recorded_min": recorded, "eta0_slice_rel_err": slice_err,
                       "fitted_x_exponent": fit.exponent, "target": target,
                       "above_range": fit.above_range, "passed": good}
            ok &= good
        return ok, rows
    return _timed(8, "Kolmogorov smoothing oracle", run)


ROUGH_SETUP = {"n_v": 64, "n_x": 128, "s": 0.5, "T": 1.0, "dt": 0.01, "amplitude": 1e-2,
               "a": 1.0, "b": 1.0, "seed": 0}


def rough_run(setup=None):
    p = dict(ROUGH_SETUP, **(setup or {}))
    tables = build_tables(p["n_v"], CrossSectionParams(p["s"]))
    st = rough_datum(p["n_v"], p["n_x"], p["amplitude"], p["a"], p["b"], seed=p["seed"])
    return simulate(st, tables, p["T"], StepScheme("strang", p["dt"]), every=10)


def criterion_9() -> CriterionResult:
    def run():
        s = ROUGH_SETUP["s"]
        result = rough_run()
        bank = build_filter_bank(ROUGH_SETUP["n_x"])
        bis = dg.bisect_weight_rate(bank, result.snapshots, result.times, s, factor=2.0)
        fx = dg.fit_decay(result.snapshots[-1], "fourier")
        fv = dg.fit_decay(result.snapshots[-1], "hermite")
        x_min = 0.85 * dg.predicted_x_exponent(s)
        v_min = 0.85 * dg.predicted_v_exponent(s)
        d = {"c": bis.c, "bracketed": bis.bracketed, "x_exponent": fx.exponent, "x_min": x_min,
             "v_exponent": fv.exponent, "v_min": v_min}
        return bis.c > 0 and fx.exponent >= x_min and fv.exponent >= v_min, d
    return _timed(9, "inhomogeneous smoothing", run, budget=600.0)


def criterion_10() -> CriterionResult:
    def run():
        n = np.arange(64, dtype=float)
        worst_a, worst_nu = 0.0, 0.0
        for a in (0.5, 1.0, 2.0, 3.0, 4.0):
            for nu in (0.2, 0.35, 0.5, 0.65, 0.8, 1.0, 1.2):
                rep = dg.fit_decay(np.exp(-a * n ** nu))
                worst_a = max(worst_a, abs(rep.amplitude / a - 1.0))
                worst_nu = max(worst_nu, abs(rep.exponent - nu))
        return worst_a <= 0.05 and worst_nu <= 0.02, {"worst_amplitude_rel": worst_a,
                                                      "worst_exponent_abs": worst_nu}
    return _timed(10, "fitter self-test", run)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}

SUITES = {
    "acceptance": list(range(1, 11)),
    "kernel": [1, 2, 3, 4],
    "lp": [5],
    "solver": [6, 7],
    "smoothing": [8, 9, 10],
}


def kernel_identity_suite(tables: KernelTables | None = None, s: float = 0.5) -> CriterionResult:
    """The ``kernel-identities`` suite, on given (e.g. cached) tables or fresh ones."""
    def run():
        tab = tables if tables is not None else build_tables(65, CrossSectionParams(s))
        return check_kernel_identities(tab)
    return _timed(3, "kernel identities", run)


def run_suite(name: str, tables: KernelTables | None = None) -> list[CriterionResult]:
    if name == "kernel-identities":
        return [kernel_identity_suite(tables)]
    if name.startswith("criterion-"):
        return [CRITERIA[int(name.split("-", 1)[1])]()]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    return [CRITERIA[i]() for i in SUITES[name]]


# -- recorded constants -------------------------------------------------------------


def measure_baselines() -> dict:
    """Recompute every recorded constant (slow; run when the numerics change)."""
    out = {}
    out["kolmogorov_min_ratio"] = {str(s): dg.kolmogorov_min_ratio(s) for s in (0.25, 0.5, 0.75)}
    tab = build_tables(64, CrossSectionParams(0.5), n_lambda=4096)
    out["alpha_growth_sup"] = {"s": 0.5, "n_max": 64, "m_max": 256,
                               "value": float(np.max(alpha_growth_ratio(CrossSectionParams(0.5))))}
    out["coercivity_C_star"] = {"s": 0.5, "N_1024": dg.coercivity_check(tab, 1024),
                                "N_4096": dg.coercivity_check(tab, 4096)}
    out["trilinear_max_ratio"] = {"s": 0.5, "samples": 200, "seed": 0,
                                  "value": dg.trilinear_ratio(tab, 200, 0)}
    bank = build_filter_bank(128)
    rng = np.random.default_rng(0)
    emb = 0.0
    for _ in range(100):
        u = rng.standard_normal(128)
        emb = max(emb, float(np.max(np.abs(u)) / besov_norm(bank, u, 0.5, 2, 1).value))
    out["embedding_ratio_max"] = {"n_x": 128, "samples": 100, "seed": 0, "value": emb,
                                  "constant": embedding_constant(bank)}
    p = PICARD_SETUP
    tables = build_tables(p["n_v"], CrossSectionParams(p["s"]))
    critical = bisect_amplitude(_picard_datum, tables, p["T"], p["dt"], steps=8)
    energy = _energy_ratio(tables, 0.5 * critical)
    out["picard"] = dict(p, critical_amplitude=critical,
                         epsilon0=dg.critical_norm(bank_for(p["n_x"]), _picard_datum(critical).coeffs),
                         c0=float(math.ceil(energy * 1000) / 1000))
    result = rough_run()
    bis = dg.bisect_weight_rate(build_filter_bank(ROUGH_SETUP["n_x"]), result.snapshots,
                                result.times, ROUGH_SETUP["s"], factor=2.0)
    out["weight_rate_c"] = dict(ROUGH_SETUP, value=bis.c)
    return _jsonable(out)
