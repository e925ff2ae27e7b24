"""Command-line experiment runner.

Every command writes the resolved configuration (``config.json``) and its
outputs (CSV or JSON) to ``--out`` and prints a JSON summary.  Exit codes:
0 success, 1 usage error, 2 numerical failure, 3 verification failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import subprocess
import sys
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclasses.dataclass
class RunConfig:
    """Parameters of a run; loaded from JSON, then overridden by flags."""

    s: float = 0.5
    N_v: int = 64
    N_x: int = 128
    L: float = 1.0
    T: float = 1.0
    dt: float = 0.01
    scheme: str = "strang"
    nonlinear: bool = True
    every: int = 10
    initial: dict = dataclasses.field(default_factory=lambda: {
        "kind": "rough", "amplitude": 1e-2, "a": 1.0, "b": 1.0, "seed": 0})
    diagnostics: dict = dataclasses.field(default_factory=dict)

    def validate(self):
        if not 0.0 < self.s < 1.0:
            raise UsageError(f"s must lie in (0, 1), got {self.s}")
        if self.N_x < 1 or self.N_x & (self.N_x - 1):
            raise UsageError(f"N_x must be a power of two, got {self.N_x}")
        if self.N_v < 2:
            raise UsageError("N_v must be at least 2")
        if not self.dt > 0:
            raise UsageError("dt must be positive")
        if self.T < 0:
            raise UsageError("T must be non-negative")
        if self.L <= 0:
            raise UsageError("L must be positive")
        if self.scheme not in ("strang", "rk4"):
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if self.initial.get("kind") not in ("rough", "polynomial"):
            raise UsageError("initial.kind must be 'rough' or 'polynomial'")
        return self

    @classmethod
    def load(cls, path=None, **overrides) -> "RunConfig":
        data = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        for key, val in overrides.items():
            if val is None:
                continue
            if key == "seed":
                cfg.initial = dict(cfg.initial, seed=val)
            else:
                setattr(cfg, key, val)
        return cfg.validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def _version() -> dict:
    from . import __version__

    describe = None
    try:
        proc = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                              text=True, cwd=Path(__file__).parent, timeout=5)
        if proc.returncode == 0:
            describe = proc.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return {"package": __version__, "git": describe}


def _write_json(path: Path, data):
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _emit(summary: dict):
    print(json.dumps(summary, indent=2, sort_keys=True))


def _jsonable(obj):
    from .verify import _jsonable as conv

    return conv(obj)


def _initial_state(cfg: RunConfig):
    from .solver import polynomial_datum, rough_datum

    init = cfg.initial
    if init["kind"] == "rough":
        return rough_datum(cfg.N_v, cfg.N_x, init.get("amplitude", 1e-2), init.get("a", 1.0),
                           init.get("b", 1.0), seed=init.get("seed", 0), L=cfg.L)
    modes = {}
    for n, j, re, im in init.get("modes", []):
        modes[(int(n), int(j))] = complex(re, im)
    return polynomial_datum(cfg.N_v, cfg.N_x, modes, L=cfg.L)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ------------------------------------------------------------------------


def cmd_eig(args) -> int:
    from .kernel import CrossSectionParams, asymptotic_lambda, eigenvalues

    params = CrossSectionParams(_s(args))
    lam = eigenvalues(args.k_max + 1, params)
    out = _out_dir(args)
    path = out / "eigenvalues.csv"
    with path.open("w") as fh:
        fh.write("k,lambda,asymptotic,ratio\n")
        for k, val in enumerate(lam):
            asym = float(asymptotic_lambda(k, params)) if k > 0 else 0.0
            ratio = val / asym if asym else float("nan")
            fh.write(f"{k},{float(val)!r},{asym!r},{float(ratio)!r}\n")
    _write_json(out / "config.json", {"command": "eig", "s": params.s, "k_max": args.k_max})
    _emit({"command": "eig", "s": params.s, "rows": len(lam), "csv": str(path)})
    return EXIT_OK


def cmd_coeff(args) -> int:
    from .kernel import CrossSectionParams, alpha_table

    params = CrossSectionParams(_s(args))
    a = alpha_table(args.k_max + 1, args.l_max + 1, params)
    out = _out_dir(args)
    path = out / "alpha.csv"
    with path.open("w") as fh:
        fh.write("k,l,alpha\n")
        for k in range(a.shape[0]):
            for l in range(a.shape[1]):
                fh.write(f"{k},{l},{float(a[k, l])!r}\n")
    _write_json(out / "config.json", {"command": "coeff", "s": params.s,
                                      "k_max": args.k_max, "l_max": args.l_max})
    _emit({"command": "coeff", "s": params.s, "shape": list(a.shape), "csv": str(path)})
    return EXIT_OK


def cmd_bobylev_check(args) -> int:
    from .verify import criterion_4

    res = criterion_4(_s(args), args.k_max)
    out = _out_dir(args)
    _write_json(out / "bobylev.json", res.to_dict())
    _emit(res.to_dict())
    return EXIT_OK if res.passed else EXIT_VERIFY


def cmd_simulate(args) -> int:
    from .kernel import CrossSectionParams, build_tables
    from .solver import StepScheme, simulate, write_snapshots

    cfg = _config(args)
    tables = build_tables(cfg.N_v, CrossSectionParams(cfg.s))
    state = _initial_state(cfg)
    result = simulate(state, tables, cfg.T, StepScheme(cfg.scheme, cfg.dt),
                      nonlinear=cfg.nonlinear, every=cfg.every)
    out = _out_dir(args)
    _write_json(out / "config.json", cfg.to_dict())
    manifest = write_snapshots(result, out, {"s": cfg.s, "seed": cfg.initial.get("seed"),
                                             "config_sha256": cfg.digest(), "version": _version()})
    _emit({"command": "simulate", "snapshots": len(result.times), "manifest": str(manifest),
           "gamma_outflow": result.gamma_outflow, "top_mode_fraction": result.top_mode_fraction})
    return EXIT_OK


def cmd_picard(args) -> int:
    from .kernel import CrossSectionParams, build_tables
    from .solver import picard_solve

    cfg = _config(args)
    tables = build_tables(cfg.N_v, CrossSectionParams(cfg.s))
    res = picard_solve(_initial_state(cfg), tables, cfg.T, cfg.dt, max_iters=args.iters)
    out = _out_dir(args)
    _write_json(out / "config.json", cfg.to_dict())
    summary = {"command": "picard", "differences": res.differences, "ratios": res.ratios,
               "contracted": res.contracted, "config_sha256": cfg.digest()}
    _write_json(out / "picard.json", _jsonable(summary))
    _emit(_jsonable(summary))
    if not res.contracted:
        print("picard: iteration does not contract; the datum is too large", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_smoothing_fit(args) -> int:
    from . import diagnostics as dg
    from .kernel import CrossSectionParams, build_tables
    from .littlewood_paley import build_filter_bank
    from .solver import StepScheme, simulate

    cfg = _config(args)
    tables = build_tables(cfg.N_v, CrossSectionParams(cfg.s))
    result = simulate(_initial_state(cfg), tables, cfg.T, StepScheme(cfg.scheme, cfg.dt),
                      nonlinear=cfg.nonlinear, every=cfg.every)
    bank = build_filter_bank(cfg.N_x, cfg.L)
    snaps = result.snapshots
    bis = dg.bisect_weight_rate(bank, snaps, result.times, cfg.s, factor=args.factor)
    fits = {axis: dataclasses.asdict(dg.fit_decay(snaps[-1], axis, cfg.L))
            for axis in ("hermite", "fourier")}
    out = _out_dir(args)
    _write_json(out / "config.json", cfg.to_dict())
    with (out / "monitor.csv").open("w") as fh:
        fh.write("t,weighted_norm\n")
        for t, v in zip(bis.series.times, bis.series.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")
    summary = {"command": "smoothing-fit", "c": bis.c, "bracketed": bis.bracketed, "fits": fits,
               "predicted": {"x_exponent": dg.predicted_x_exponent(cfg.s),
                             "v_exponent": dg.predicted_v_exponent(cfg.s)},
               "config_sha256": cfg.digest()}
    _write_json(out / "smoothing.json", _jsonable(summary))
    _emit(_jsonable(summary))
    return EXIT_OK


def cmd_kolmogorov_check(args) -> int:
    from . import diagnostics as dg
    from .verify import kolmogorov_x_profile

    s = _s(args)
    t = args.T if args.T is not None else 1.0
    profile = kolmogorov_x_profile(s, t=t)
    fit = dg.fit_decay(profile, window=(4, profile.size - 1))
    summary = {"command": "kolmogorov-check", "s": s, "t": t,
               "brute_min_ratio": dg.kolmogorov_min_ratio(s),
               "oracle_min_ratio": dg.kolmogorov_ratio_oracle(s),
               "eta0_ratio": 1.0 / (2 * s + 1),
               "x_fit": dataclasses.asdict(fit),
               "predicted_x_exponent": dg.predicted_x_exponent(s)}
    out = _out_dir(args)
    with (out / "kolmogorov_profile.csv").open("w") as fh:
        fh.write("xi,norm\n")
        for k, v in enumerate(profile):
            fh.write(f"{k},{float(v)!r}\n")
    _write_json(out / "kolmogorov.json", _jsonable(summary))
    _emit(_jsonable(summary))
    return EXIT_OK


def cmd_besov(args) -> int:
    from .littlewood_paley import besov_norm_hat, build_filter_bank

    cfg = _config(args)
    state = _initial_state(cfg)
    bank = build_filter_bank(cfg.N_x, cfg.L)
    r = float("inf") if args.r == "inf" else int(args.r)
    prof = besov_norm_hat(bank, state.coeffs, sigma=args.sigma, p=2, r=r)
    out = _out_dir(args)
    _write_json(out / "config.json", cfg.to_dict())
    prof.to_csv(out / "besov.csv")
    _emit({"command": "besov", "sigma": args.sigma, "r": args.r, "value": prof.value,
           "partition_residual": bank.partition_residual()})
    return EXIT_OK


def cmd_verify(args) -> int:
    from .kernel import KernelTables
    from .verify import run_suite

    tables = KernelTables.from_csv(args.tables) if args.tables else None
    results = run_suite(args.suite, tables)
    verdict = {"suite": args.suite, "passed": all(r.passed for r in results),
               "criteria": [r.to_dict() for r in results]}
    out = _out_dir(args)
    _write_json(out / "verdict.json", verdict)
    for r in results:
        print(r.line(), file=sys.stderr)
    _emit(verdict)
    return EXIT_OK if verdict["passed"] else EXIT_VERIFY


# -- plumbing ------------------------------------------------------------------------


def _s(args) -> float:
    s = 0.5 if args.s is None else args.s
    if not 0.0 < s < 1.0:
        raise UsageError(f"s must lie in (0, 1), got {s}")
    return s


def _config(args) -> RunConfig:
    return RunConfig.load(args.config, s=args.s, T=args.T, dt=args.dt, seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", default="kacspec-out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="cap on BLAS/FFT worker threads")
    common.add_argument("--s", type=float, help="cross-section exponent in (0, 1)")
    common.add_argument("--T", type=float, help="final time")
    common.add_argument("--dt", type=float, help="time step")

    parser = _Parser(prog="kacspec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eig", parents=[common], help="eigenvalue table")
    p.add_argument("--k-max", type=int, default=64)
    p.set_defaults(func=cmd_eig)

    p = sub.add_parser("coeff", parents=[common], help="trilinear coefficient table")
    p.add_argument("--k-max", type=int, default=16)
    p.add_argument("--l-max", type=int, default=16)
    p.set_defaults(func=cmd_coeff)

    p = sub.add_parser("bobylev-check", parents=[common], help="tables against the Fourier-side oracle")
    p.add_argument("--k-max", type=int, default=8)
    p.set_defaults(func=cmd_bobylev_check)

    p = sub.add_parser("simulate", parents=[common], help="time evolution with snapshot output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("picard", parents=[common], help="Picard iteration and contraction ratios")
    p.add_argument("--iters", type=int, default=4)
    p.set_defaults(func=cmd_picard)

    p = sub.add_parser("smoothing-fit", parents=[common], help="weight-rate bisection and decay fits")
    p.add_argument("--factor", type=float, default=2.0)
    p.set_defaults(func=cmd_smoothing_fit)

    p = sub.add_parser("kolmogorov-check", parents=[common], help="exact Kolmogorov smoothing checks")
    p.set_defaults(func=cmd_kolmogorov_check)

    p = sub.add_parser("besov", parents=[common], help="Besov profile of the configured datum")
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--r", choices=("1", "2", "inf"), default="1")
    p.set_defaults(func=cmd_besov)

    p = sub.add_parser("verify", parents=[common], help="run an acceptance suite")
    p.add_argument("suite", nargs="?", default="acceptance",
                   help="acceptance, kernel, kernel-identities, lp, solver, smoothing or criterion-N")
    p.add_argument("--tables", type=Path, help="cached kernel tables (CSV) for kernel-identities")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads is not None and args.threads < 1:
            parser.error("--threads must be positive")
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    from .kernel import QuadratureFailure
    from .diagnostics import DegenerateFit
    from .hermite import QuadratureError
    from .solver import StabilityError

    try:
        return args.func(args)
    except UsageError as exc:
        print(f"kacspec {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureFailure, QuadratureError, StabilityError, DegenerateFit,
            FloatingPointError, OverflowError) as exc:
        print(f"kacspec {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (KeyError, ValueError) as exc:
        print(f"kacspec {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
