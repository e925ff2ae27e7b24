import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from kacspec.hermite import velocity_operator
from kacspec.kernel import CrossSectionParams, KernelTables, build_tables
from kacspec.solver import (
    SpectralState,
    StabilityError,
    Stepper,
    StepScheme,
    apply_collision,
    apply_transport,
    contracts,
    damped_datum,
    gamma,
    kolmogorov_damping,
    kolmogorov_evolve,
    kolmogorov_upwind,
    picard_solve,
    polynomial_datum,
    rough_datum,
    simulate,
    write_snapshots,
)


def unit(n_v, n_x, n, j):
    c = np.zeros((n_v, n_x), dtype=complex)
    c[n, j % n_x] = 1.0
    return c


def convolution_oracle(f, g, alphas):
    """Gamma by direct discrete convolution over retained Fourier indices."""
    n_v, n_x = f.shape
    js = np.fft.fftfreq(n_x, d=1.0 / n_x).astype(int)
    keep = {int(j): col for col, j in enumerate(js) if abs(j) < n_x / 2}
    out = np.zeros((n_v, n_x), dtype=complex)
    for k in range(0, n_v, 2):
        for l in range(n_v - k):
            a = alphas[k, l]
            if a == 0:
                continue
            for j1, c1 in keep.items():
                for j2, c2 in keep.items():
                    if j1 + j2 in keep:
                        out[k + l, keep[j1 + j2]] += a * f[k, c1] * g[l, c2]
    return out


@pytest.fixture(scope="module")
def tables16():
    return build_tables(16, CrossSectionParams(0.5))


@pytest.fixture(scope="module")
def transport_only():
    return KernelTables(0.5, np.zeros(32), np.zeros((32, 32)))


class TestState:
    def test_shape_checks(self):
        with pytest.raises(ValueError):
            SpectralState(np.zeros(4))
        with pytest.raises(ValueError):
            SpectralState(np.zeros((2, 4)), L=0)

    def test_norm_and_physical(self):
        st = polynomial_datum(4, 8, {(0, 0): 1.0, (1, 1): 0.5})
        x = 2 * np.pi * np.arange(8) / 8
        assert np.allclose(st.physical()[1], np.cos(x), atol=1e-14)
        assert st.norm() == pytest.approx(math.sqrt(2 * np.pi * 1.5), rel=1e-14)
        assert st.hermitian_residual() == 0.0

    def test_scheme_validation(self):
        with pytest.raises(ValueError):
            StepScheme("euler")
        with pytest.raises(ValueError):
            StepScheme("rk4", 0.0)


class TestOperators:
    def test_collision_examples(self, tables16):
        assert not np.any(apply_collision(unit(4, 8, 2, 3), tables16))
        d = apply_collision(unit(4, 8, 1, 0), tables16)
        assert d[1, 0] == pytest.approx(-8 * math.sin(math.pi / 8), rel=1e-12)
        assert not np.any(apply_collision(np.zeros((4, 8)), tables16))
        c = np.ones((4, 2))
        assert np.allclose(apply_collision(c, tables16, dt=0.1)[:, 0], np.exp(-0.1 * tables16.lambdas[:4]))

    def test_collision_table_too_short(self, tables16):
        with pytest.raises(ValueError):
            apply_collision(np.zeros((17, 2)), tables16)

    def test_transport_examples(self):
        xi = np.fft.fftfreq(8, d=1 / 8)
        c = np.random.default_rng(0).standard_normal((5, 8))
        assert not np.any(apply_transport(c, xi)[:, 0])
        d = apply_transport(unit(3, 8, 0, 1), xi)
        expect = np.zeros((3, 8), dtype=complex)
        expect[1, 1] = -1j
        assert np.allclose(d, expect)

    def test_transport_skew(self):
        rng = np.random.default_rng(1)
        xi = np.fft.fftfreq(16, d=1 / 16)
        c = rng.standard_normal((10, 16)) + 1j * rng.standard_normal((10, 16))
        assert abs(np.vdot(c, apply_transport(c, xi)).real) <= 1e-12

    def test_exact_transport_matches_matrix_exponential(self, transport_only):
        n_v, n_x, tau = 12, 8, 0.37
        st = Stepper(n_v, n_x, 1.0, transport_only, StepScheme("strang", 0.1), nonlinear=False)
        V = velocity_operator("v", n_v).matrix
        c = np.random.default_rng(2).standard_normal((n_v, n_x)) + 0j
        out = st.transport_exact(c, tau)
        for col, xi in enumerate(st.xi):
            ref = expm(-1j * tau * xi * V) @ c[:, col]
            assert np.allclose(out[:, col], ref, atol=1e-12)

    def test_pure_transport_conserves_norm(self, transport_only):
        st = polynomial_datum(32, 16, {(0, 1): 0.3, (1, 2): 0.2, (3, 0): 0.1})
        run = simulate(st, transport_only, 1.0, StepScheme("strang", 0.05), nonlinear=False)
        assert run.final.norm() == pytest.approx(st.norm(), rel=1e-8)


class TestGamma:
    def test_vacuum_mode(self, tables16):
        c = unit(8, 8, 0, 0) * 0.7
        assert np.max(np.abs(gamma(c, c, tables16))) == 0.0

    def test_kernel_modes(self, tables16):
        c = np.zeros((8, 1), dtype=complex)
        c[0, 0], c[2, 0] = 0.3, -0.8
        out = gamma(c, c, tables16)
        assert abs(out[2, 0]) <= 1e-12
        assert abs(out[0, 0]) == 0.0

    def test_two_two(self, tables16):
        c = unit(8, 1, 2, 0)
        out = gamma(c, c, tables16)
        expect = np.zeros((8, 1))
        expect[4, 0] = tables16.alphas[2, 2]
        assert np.allclose(out, expect, atol=1e-14)

    def test_against_convolution(self, tables16):
        rng = np.random.default_rng(3)
        n_v, n_x = 8, 10
        f = rng.standard_normal((n_v, n_x)) + 1j * rng.standard_normal((n_v, n_x))
        g = rng.standard_normal((n_v, n_x)) + 1j * rng.standard_normal((n_v, n_x))
        f[:, n_x // 2] = g[:, n_x // 2] = 0
        assert np.allclose(gamma(f, g, tables16), convolution_oracle(f, g, tables16.alphas), atol=1e-12)

    def test_no_aliasing(self, tables16):
        n_x = 16
        f = unit(4, n_x, 0, 7) + unit(4, n_x, 2, 7)
        g = unit(4, n_x, 1, 7)
        out = gamma(f, g, tables16)
        # 7 + 7 = 14 is not retained and must not fold back onto -2
        assert np.max(np.abs(out)) <= 1e-14

    def test_outflow(self, tables16):
        c = unit(4, 1, 2, 0) + unit(4, 1, 3, 0)
        val, lost = gamma(c, c, tables16, return_outflow=True)
        assert lost == pytest.approx(tables16.alphas[2, 2] ** 2 + tables16.alphas[2, 3] ** 2, rel=1e-12)
        assert not np.any(val)

    def test_coverage_and_shape(self, tables16):
        with pytest.raises(ValueError):
            gamma(np.zeros((17, 2)), np.zeros((17, 2)), tables16)
        with pytest.raises(ValueError):
            gamma(np.zeros((4, 2)), np.zeros((4, 3)), tables16)


class TestStepping:
    def test_zero_state(self, tables16):
        run = simulate(SpectralState(np.zeros((8, 8))), tables16, 0.5, StepScheme("strang", 0.1))
        assert not np.any(run.snapshots)

    def test_kernel_mode_constant(self, tables16):
        st = polynomial_datum(8, 8, {(2, 0): 1.0})
        run = simulate(st, tables16, 1.0, StepScheme("strang", 0.1), nonlinear=False)
        assert np.allclose(run.snapshots, st.coeffs[None], atol=1e-13)

    def test_homogeneous_conservation(self, tables16):
        st = polynomial_datum(16, 1, {(0, 0): 0.2, (2, 0): 0.3, (1, 0): 0.1, (4, 0): 0.2})
        run = simulate(st, tables16, 1.0, StepScheme("strang", 0.01))
        drift = np.abs(run.snapshots[:, [0, 2], 0] - st.coeffs[[0, 2], 0])
        assert np.max(drift) <= 1e-10

    def test_time_grid(self, tables16):
        st = polynomial_datum(8, 8, {(0, 1): 0.1})
        run = simulate(st, tables16, 0.25, StepScheme("strang", 0.1), every=2)
        assert run.scheme.dt == pytest.approx(0.25 / 3)
        assert np.allclose(run.times, [0, 2 * 0.25 / 3, 0.25])
        run0 = simulate(st, tables16, 0.0)
        assert run0.snapshots.shape[0] == 1
        with pytest.raises(ValueError):
            simulate(st, tables16, -1.0)

    def test_hermitian_preserved(self, tables16):
        st = rough_datum(16, 16, amplitude=0.05, seed=4)
        run = simulate(st, tables16, 0.5, StepScheme("strang", 0.05))
        assert run.final.hermitian_residual() <= 1e-12

    def test_linear_energy_dissipation(self, tables16):
        st = rough_datum(16, 16, amplitude=1.0, seed=5)
        lam = tables16.lambdas[:16]
        gaps = []
        for dt in (0.01, 0.005):
            run = simulate(st, tables16, 0.5, StepScheme("strang", dt), nonlinear=False)
            power = np.sum(np.abs(run.snapshots) ** 2, axis=2)
            e = power.sum(axis=1)
            assert np.all(np.diff(e) <= 1e-15)
            rate = -2 * power @ lam
            gap = np.abs(np.gradient(e, dt) - rate)[1:-1]
            gaps.append(np.interp(np.linspace(0.05, 0.45, 9), run.times[1:-1], gap))
        # the discrete balance closes at second order
        assert np.all(gaps[0] / gaps[1] >= 3.0)

    def test_strang_second_order(self, tables16):
        st = rough_datum(12, 8, amplitude=0.2, seed=6)
        T = 0.4
        ref = simulate(st, tables16, T, StepScheme("rk4", 0.0005)).final.coeffs
        errs = [np.linalg.norm(simulate(st, tables16, T, StepScheme("strang", dt)).final.coeffs - ref)
                for dt in (0.04, 0.02, 0.01)]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(orders - 2) <= 0.3)

    def test_rk4_fourth_order(self, tables16):
        st = rough_datum(8, 8, amplitude=0.2, seed=7)
        ref = simulate(st, tables16, 0.2, StepScheme("rk4", 0.0025)).final.coeffs
        e1 = np.linalg.norm(simulate(st, tables16, 0.2, StepScheme("rk4", 0.02)).final.coeffs - ref)
        e2 = np.linalg.norm(simulate(st, tables16, 0.2, StepScheme("rk4", 0.01)).final.coeffs - ref)
        assert math.log2(e1 / e2) == pytest.approx(4, abs=0.5)

    def test_stability_error(self, tables16):
        st = Stepper(4, 4, 1.0, tables16, StepScheme("strang", 0.1), nonlinear=lambda c, t: c * 1e308)
        with pytest.raises(StabilityError, match="non-finite"):
            st.step(np.ones((4, 4), dtype=complex), 0.0)


class TestPicard:
    def test_zero_datum(self, tables16):
        res = picard_solve(SpectralState(np.zeros((8, 8))), tables16, 0.2, 0.05, max_iters=3)
        assert all(not np.any(it) for it in res.iterates)
        assert np.all(res.differences == 0)

    def test_damped_datum(self):
        c = np.ones((3, 4))
        d = damped_datum(c, 1.0, 0.5, [0.0, 1.0])
        assert np.array_equal(d[0], c)
        sym = (math.sqrt(2.5) + math.sqrt(2.0)) ** 0.5
        assert d[1, 2, 1] == pytest.approx(math.exp(-sym), rel=1e-14)

    def test_first_iterate_is_linear_solve(self, tables16):
        st = rough_datum(8, 8, amplitude=0.1, seed=8)
        T, dt = 0.4, 0.02
        res = picard_solve(st, tables16, T, dt, max_iters=1)

        def forcing(c, t):
            return gamma(damped_datum(st.coeffs, 1.0, 0.5, [t])[0], c, tables16)

        fine = Stepper(8, 8, 1.0, tables16, StepScheme("rk4", 0.001), forcing)
        c = st.coeffs * fine.mask
        for i in range(400):
            c = fine.step(c, i * 0.001)
        assert np.linalg.norm(res.iterates[1][-1] - c) <= 1e-3 * np.linalg.norm(c)

    def test_small_datum_contracts(self, tables16):
        st = rough_datum(16, 16, amplitude=0.01, seed=9)
        res = picard_solve(st, tables16, 1.0, 0.05, max_iters=5)
        assert res.contracted
        assert contracts(res, 0.5, 3)
        assert np.all(res.ratios[2:] <= 0.5)


class TestKolmogorov:
    def g0(self, xi, eta):
        return np.exp(-0.5 * eta ** 2 - 0.1 * xi ** 2) * (1 + 0.2j * eta)

    def test_identity(self):
        xi, eta = np.meshgrid(np.linspace(-3, 3, 7), np.linspace(-5, 5, 11), indexing="ij")
        assert np.array_equal(kolmogorov_evolve(self.g0, 0.0, xi, eta, 0.5), self.g0(xi, eta))

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.8])
    def test_zero_frequency_column(self, s):
        eta = np.linspace(-4, 4, 17)
        out = kolmogorov_evolve(self.g0, 0.7, 0.0, eta, s)
        assert np.allclose(out, self.g0(0.0, eta) * np.exp(-0.7 * np.abs(eta) ** (2 * s)), rtol=1e-14)

    def test_eta_zero_half(self):
        xi = np.linspace(-5, 5, 11)
        for t in (0.3, 1.0, 2.0):
            assert np.allclose(kolmogorov_damping(t, xi, 0.0, 0.5), t * t * np.abs(xi) / 2, rtol=1e-13)

    @pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.75, 0.95])
    @pytest.mark.parametrize("t,xi,eta", [(1.0, 2.0, -1.0), (0.5, -3.0, 0.7), (2.0, 0.4, 5.0),
                                          (1.0, 1e-9, 3.0), (1.5, 4.0, 0.0)])
    def test_damping_against_quad(self, s, t, xi, eta):
        ref, _ = quad(lambda sig: abs(eta + sig * xi) ** (2 * s), 0, t, epsabs=1e-14, epsrel=1e-12,
                      points=[-eta / xi] if 0 < -eta / xi < t else None)
        assert kolmogorov_damping(t, xi, eta, s) == pytest.approx(ref, rel=1e-9)

    def test_upwind_converges(self):
        s, T, xi = 0.5, 0.5, 2.0
        errs = []
        for n in (201, 401, 801):
            eta = np.linspace(-8, 8, n)
            num = kolmogorov_upwind(self.g0, T, xi, eta, s)
            exact = kolmogorov_evolve(self.g0, T, xi, eta, s)
            errs.append(np.max(np.abs(num - exact)))
        assert errs[2] < errs[1] < errs[0]
        assert errs[0] / errs[2] >= 3.0


class TestData:
    def test_polynomial(self):
        st = polynomial_datum(4, 8, {(1, 2): 0.5 + 0.25j})
        assert st.coeffs[1, 2] == 0.5 + 0.25j and st.coeffs[1, 6] == 0.5 - 0.25j
        with pytest.raises(ValueError):
            polynomial_datum(4, 8, {(4, 0): 1.0})
        with pytest.raises(ValueError):
            polynomial_datum(4, 8, {(0, 4): 1.0})

    def test_rough(self):
        st = rough_datum(8, 16, amplitude=0.1, a=1.5, b=2.0, seed=3)
        assert st.hermitian_residual() == 0.0
        j = np.abs(np.fft.fftfreq(16, d=1 / 16))
        mag = 0.1 * (1 + np.arange(8))[:, None] ** -1.5 * (1 + j)[None, :] ** -2.0
        mag[:, 8] = 0
        assert np.allclose(np.abs(st.coeffs), mag)
        assert np.array_equal(st.coeffs, rough_datum(8, 16, 0.1, 1.5, 2.0, seed=3).coeffs)
        assert not np.array_equal(st.coeffs, rough_datum(8, 16, 0.1, 1.5, 2.0, seed=4).coeffs)


def test_write_snapshots(tmp_path, tables16):
    st = polynomial_datum(4, 4, {(0, 1): 0.25})
    run = simulate(st, tables16, 0.2, StepScheme("strang", 0.1))
    path = write_snapshots(run, tmp_path, {"seed": 3})
    info = json.loads(path.read_text())
    assert info["seed"] == 3 and info["N_v"] == 4 and len(info["snapshots"]) == 3
    assert set(info["truncation"]) == {"gamma_outflow", "top_mode_fraction"}
    rows = (tmp_path / "snapshot_0000.csv").read_text().splitlines()
    assert rows[0] == "n,j,re,im" and len(rows) == 1 + 16
    assert rows[2] == "0,1,0.25,0.0"
