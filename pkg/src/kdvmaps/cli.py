"""Command-line entry point: ``kdvmaps simulate | verify | curve | jacobi``.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
3 numerical abort (step failure, growth guard, singular or degenerate data).
Complex numbers are [re, im] pairs in JSON and paired columns in CSV.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import maps, models, riemann, sampling, spectral, verify
from .errors import (DegenerateCurveError, DegenerateInputError, GrowthError, QuadratureError,
                     SingularityError, StepFailure)
from .maps import FlowConfig
from .models import Model, PhasePoint, Spectrum

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _cpair(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _cvec(v) -> list | None:
    return None if v is None else [_cpair(z) for z in v]


def _parse_c(obj, what):
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return complex(obj)
    if isinstance(obj, (list, tuple)) and len(obj) == 2 and all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in obj):
        return complex(obj[0], obj[1])
    raise ConfigError(f"{what}: expected a number or an [re, im] pair, got {obj!r}")


def _parse_cvec(obj, what):
    if obj is None:
        return None
    if not isinstance(obj, list):
        raise ConfigError(f"{what}: expected a list")
    return [_parse_c(v, f"{what}[{k}]") for k, v in enumerate(obj)]


@dataclass
class RunConfig:
    """Everything a command needs. Missing alpha/p0/q0/betas are drawn from ``seed``."""

    model: str = "lpkdv"
    N: int = 2
    alpha: list | None = None
    p0: list | None = None
    q0: list | None = None
    beta1: complex | None = None
    beta2: complex | None = None
    sigma1: int = 1
    sigma2: int = 1
    M: int = 10
    N_steps: int = 10
    steps: int = 10
    seed: int = 42
    tolerances: dict = field(default_factory=dict)
    checks: list | None = None
    corrupt_map: bool = False
    out: str = "out"

    def to_json(self) -> str:
        d = asdict(self)
        for k in ("alpha", "p0", "q0"):
            d[k] = _cvec(d[k])
        for k in ("beta1", "beta2"):
            d[k] = None if d[k] is None else _cpair(d[k])
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
        d = dict(d)
        for k in ("alpha", "p0", "q0"):
            d[k] = _parse_cvec(d.get(k), k)
        for k in ("beta1", "beta2"):
            d[k] = None if d.get(k) is None else _parse_c(d[k], k)
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc

    def validate(self) -> None:
        try:
            model = Model.parse(self.model)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        ints = ("N", "sigma1", "sigma2", "M", "N_steps", "steps", "seed")
        for k in ints:
            if not isinstance(getattr(self, k), int) or isinstance(getattr(self, k), bool):
                raise ConfigError(f"{k} must be an integer")
        if self.N < 1 or min(self.M, self.N_steps, self.steps) < 0:
            raise ConfigError("N must be positive and grid sizes non-negative")
        if self.sigma1 not in (1, -1) or self.sigma2 not in (1, -1):
            raise ConfigError("sigma1 and sigma2 must be +1 or -1")
        given = [v is not None for v in (self.alpha, self.p0, self.q0)]
        if any(given) and not all(given):
            raise ConfigError("alpha, p0 and q0 must be given together")
        if all(given):
            if not len(self.alpha) == len(self.p0) == len(self.q0) == self.N:
                raise ConfigError("alpha, p0 and q0 must all have length N")
            try:
                Spectrum(self.alpha).validate(model)
            except DegenerateInputError as exc:
                raise ConfigError(str(exc)) from exc
        unknown = set(self.tolerances) - set(verify.TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance names: {sorted(unknown)}")
        if self.checks is not None and set(self.checks) - set(verify.CHECKS):
            raise ConfigError(f"unknown checks: {sorted(set(self.checks) - set(verify.CHECKS))}")


FIXTURES = {
    "fixed-point": dict(model="lpkdv", N=1, alpha=[2.0], p0=[1.0], q0=[1.0],
                        beta1=-1.0, beta2=-1.0, sigma1=-1, sigma2=-1),
    "lpmkdv-unit": dict(model="lpmkdv", N=1, alpha=[2.0], p0=[1.0], q0=[1.0],
                        beta1=0.5, beta2=0.75),
    "lskdv-unit": dict(model="lskdv", N=1, alpha=[2.0], p0=[1.0], q0=[1.0],
                       beta1=0.5, beta2=0.75),
}


def fixture(name: str) -> RunConfig:
    if name not in FIXTURES:
        raise ConfigError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return RunConfig.from_dict(FIXTURES[name])


@dataclass
class Resolved:
    model: Model
    spec: Spectrum
    x: PhasePoint
    flow1: FlowConfig
    flow2: FlowConfig
    sample: sampling.Sample


def resolve(cfg: RunConfig) -> Resolved:
    """Concrete spectrum, point and flows; random admissible data where not given."""
    model = Model.parse(cfg.model)
    if cfg.alpha is None:
        s = sampling.random_admissible(model, cfg.N, cfg.seed)
        spec, x, betas = s.spec, s.x, list(s.betas)
    else:
        spec, x = Spectrum(cfg.alpha), PhasePoint(cfg.p0, cfg.q0)
        betas = [None, None]
    b1 = cfg.beta1 if cfg.beta1 is not None else betas[0]
    b2 = cfg.beta2 if cfg.beta2 is not None else betas[1]
    if b1 is None or b2 is None:
        raise ConfigError("beta1 and beta2 are required with explicit alpha, p0, q0")
    sample = sampling.Sample(model, spec, x, (complex(b1), complex(b2)), cfg.seed)
    return Resolved(model, spec, x, FlowConfig(b1, cfg.sigma1), FlowConfig(b2, cfg.sigma2), sample)


# ---------------------------------------------------------------------- output

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([r if isinstance(r, (int, np.integer)) else _fmt(r) for r in row])


# -------------------------------------------------------------------- commands

def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    r = resolve(cfg)
    grid = maps.lattice_evolve(r.model, r.spec, r.flow1, r.flow2, r.x, cfg.M, cfg.N_steps)
    uf = maps.extract_u(grid, r.flow1, r.flow2)
    rows = [(m, n, uf.u[m, n].real, uf.u[m, n].imag)
            for m in range(cfg.M + 1) for n in range(cfg.N_steps + 1)]
    _write_csv(out / "u.csv", ["m", "n", "re_u", "im_u"], rows)
    if cfg.M and cfg.N_steps:
        res = maps.lattice_residual(r.model, uf, r.flow1.beta, r.flow2.beta)
    else:
        res = {"max": 0.0, "mean": 0.0}
    corners = {f"{m},{n}": _cvec(models.integrals(r.model, r.spec, grid.states[m][n]))
               for m in (0, cfg.M) for n in (0, cfg.N_steps)}
    gauge = {k: (_cpair(v) if np.ndim(v) == 0 else None) for k, v in uf.gauge.items()}
    _write_json(out / "simulate.json", {
        "fingerprint": r.sample.fingerprint(),
        "branches": {"sigma1": cfg.sigma1, "sigma2": cfg.sigma2},
        "gauge": {k: v for k, v in gauge.items() if v is not None},
        "lattice_residual": res,
        "path_residual": uf.path_residual,
        "integrals_at_corners": corners,
    })
    print(f"simulate: {cfg.M + 1}x{cfg.N_steps + 1} grid, max lattice residual {res['max']:.3e}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    r = resolve(cfg)
    scfg = verify.SuiteConfig(r.model.value, r.spec.N, cfg.seed,
                              None if cfg.checks is None else tuple(cfg.checks),
                              dict(cfg.tolerances), cfg.corrupt_map,
                              sigmas=(cfg.sigma1, cfg.sigma2))
    report = verify.run_suite(scfg, r.sample)
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.residual:.3e} (tol {c.tolerance:.0e})")
    if not report.passed:
        print("failing checks: " + ", ".join(report.failing()), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_curve(cfg: RunConfig, out: Path) -> int:
    r = resolve(cfg)
    c = spectral.spectral_curve(r.model, r.spec, r.x)
    _write_json(out / "curve.json", {
        "model": r.model.value,
        "variable": "lambda" if r.model is Model.LPKDV else "zeta",
        "sign": c.sign,
        "R": _cvec(c.R),
        "branch_points": _cvec(c.branch_points),
        "genus": c.genus,
        "degenerate": c.degenerate,
    })
    print(f"curve: genus {c.genus}, degenerate {str(c.degenerate).lower()}")
    return EXIT_OK


def cmd_jacobi(cfg: RunConfig, out: Path) -> int:
    r = resolve(cfg)
    scan = riemann.jacobi_linearity_residual(r.model, r.spec, r.flow1, r.x, cfg.steps)
    _write_csv(out / "jacobi.csv", ["m", "residual"], list(enumerate(scan.residuals)))
    key = (scan.config.anchor, scan.config.sheet)
    om = scan.omegas[key]
    _write_json(out / "jacobi.json", {
        "fingerprint": r.sample.fingerprint(),
        "B": [_cvec(row) for row in scan.periods.B],
        "omega": {"forward": _cvec(om), "reverse": _cvec(-om)},
        "passing_config": scan.config.label(),
        "max_residual": float(scan.residuals.max()),
        "scan": {cfg_.label(): v for cfg_, v in scan.table.items()},
    })
    tol = cfg.tolerances.get("jacobi", verify.TOLERANCES["jacobi"])
    print(f"jacobi: {scan.config.label()}, max residual {scan.residuals.max():.3e}")
    return EXIT_OK if scan.residuals.max() <= tol else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "curve": cmd_curve,
            "jacobi": cmd_jacobi}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kdvmaps", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="RunConfig JSON file")
    src.add_argument("--fixture", choices=sorted(FIXTURES), help="built-in configuration")
    ap.add_argument("--out", type=Path, help="output directory (default: config 'out')")
    ap.add_argument("--seed", type=int, help="override the random seed")
    ap.add_argument("--model", help="model when neither --config nor --fixture is given")
    ap.add_argument("--N", type=int, help="number of modes for random configurations")
    ap.add_argument("--corrupt-map", action="store_true", help=argparse.SUPPRESS)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> RunConfig:
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        cfg = RunConfig.from_json(text)
    elif args.fixture is not None:
        cfg = fixture(args.fixture)
    else:
        cfg = RunConfig()
    if args.model is not None:
        cfg.model = args.model
    if args.N is not None:
        cfg.N = args.N
    if args.seed is not None:
        cfg.seed = args.seed
    if args.corrupt_map:
        cfg.corrupt_map = True
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        out = args.out if args.out is not None else Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateCurveError as exc:
        print(f"degenerate curve: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except StepFailure as exc:
        print(f"step failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GrowthError, SingularityError, QuadratureError, DegenerateInputError,
            ArithmeticError, sampling.SamplingError) as exc:
        print(f"numerical abort: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
